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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace revsim::metrics
{

class BinningError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Fixed-width histogram over [lo, hi]; out-of-range samples land in the edge
/// bins.
class Histogram
{
public:
  Histogram(double lo, double hi, int num_bins);

  void add(double value);
  void merge(const Histogram & other);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int num_bins() const { return static_cast<int>(counts_.size()); }
  const std::vector<std::uint64_t> & counts() const { return counts_; }
  std::uint64_t total() const { return total_; }

  /// Normalized bin masses (all zeros when empty).
  std::vector<double> probabilities() const;

  bool same_binning(const Histogram & other) const;

private:
  double lo_;
  double hi_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Base-2 Jensen-Shannon divergence of two probability vectors, in [0, 1].
double jsd(const std::vector<double> & p, const std::vector<double> & q);

/// Throws BinningError if the binnings differ. Two empty histograms give 0.
double jsd(const Histogram & p, const Histogram & q);

}  // namespace revsim::metrics
