// Copyright 2026 The revsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "revsim/metrics/histogram.hpp"

#include <algorithm>
#include <cmath>

namespace revsim::metrics
{

Histogram::Histogram(double lo, double hi, int num_bins) : lo_(lo), hi_(hi)
{
  if (num_bins < 1 || !(hi > lo)) {
    throw BinningError("histogram needs hi > lo and at least one bin");
  }
  counts_.assign(num_bins, 0);
}

void Histogram::add(double value)
{
  if (std::isnan(value)) return;
  const int n = num_bins();
  int bin = static_cast<int>(std::floor((value - lo_) / (hi_ - lo_) * n));
  bin = std::clamp(bin, 0, n - 1);
  ++counts_[bin];
  ++total_;
}

void Histogram::merge(const Histogram & other)
{
  if (!same_binning(other)) throw BinningError("cannot merge histograms with different bins");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

std::vector<double> Histogram::probabilities() const
{
  std::vector<double> p(counts_.size(), 0.0);
  if (total_ == 0) return p;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    p[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
  }
  return p;
}

bool Histogram::same_binning(const Histogram & other) const
{
  return lo_ == other.lo_ && hi_ == other.hi_ && counts_.size() == other.counts_.size();
}

double jsd(const std::vector<double> & p, const std::vector<double> & q)
{
  if (p.size() != q.size()) throw BinningError("probability vectors differ in length");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) d += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) d += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::clamp(d, 0.0, 1.0);
}

double jsd(const Histogram & p, const Histogram & q)
{
  if (!p.same_binning(q)) throw BinningError("histograms have different binning");
  if (p.total() == 0 && q.total() == 0) return 0.0;
  return jsd(p.probabilities(), q.probabilities());
}

}  // namespace revsim::metrics
