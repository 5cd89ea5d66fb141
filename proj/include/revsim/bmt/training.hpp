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

#include <functional>
#include <string>
#include <vector>

#include "revsim/bmt/model.hpp"
#include "revsim/bmt/network.hpp"
#include "revsim/scenario/types.hpp"

namespace revsim::bmt
{

/// Samples of a batch with their logits' owners. Each sample refers to the
/// scene it was built from.
struct TokenBatch
{
  std::vector<const SequenceSample *> samples;
};

struct LossDiagnostics
{
  double loss = 0.0;  // nats per token
  double accuracy_fwd = 0.0;
  double accuracy_rev = 0.0;
  double entropy_fwd = 0.0;
  double entropy_rev = 0.0;
  /// exp of the entropy of the argmax-prediction histogram.
  double perplexity = 0.0;
  int clusters_pred = 0;
  int clusters_gt = 0;
  long tokens_fwd = 0;
  long tokens_rev = 0;
};

/// Running tallies behind LossDiagnostics, mergeable across batches.
struct LossTally
{
  double loss_sum = 0.0;
  long count[2] = {0, 0};
  long correct[2] = {0, 0};
  double entropy_sum[2] = {0.0, 0.0};
  std::vector<long> predicted;
  std::vector<long> ground_truth;

  /// Adds every unmasked row of `logits` against `s.target`.
  void add(const Matrix & logits, const SequenceSample & s);
  void merge(const LossTally & other);
  long total() const { return count[0] + count[1]; }
  /// Throws MaskError if no row was tallied.
  LossDiagnostics finish() const;
};

/// Masked mean cross-entropy with diagnostics. logits[i] belongs to
/// batch.samples[i]. Throws MaskError if the mask selects nothing.
LossDiagnostics loss(const std::vector<Matrix> & logits, const TokenBatch & batch);

/// Scenes and samples of a training corpus, built once.
struct PreparedScene
{
  SceneInput scene;
  SceneInput mirror_scene;
  PreparedSample forward;
  PreparedSample reverse;
};

std::vector<PreparedScene> prepare_corpus(const std::vector<scenario::Scenario> & data,
                                          const BmtModel & model);

struct BatchItem
{
  const PreparedScene * scene = nullptr;
  Direction dir = Direction::kForward;
};

/// Mean cross-entropy of a batch scaled by `scale`. With `gradients` the
/// parameter grads are overwritten with d(scale * loss)/d(theta).
double batch_loss(BmtModel & model, const std::vector<BatchItem> & batch, bool gradients,
                  double scale = 1.0, LossTally * tally = nullptr);

struct TrainLogRow
{
  int step = 0;
  double loss = 0.0;
  double accuracy_fwd = 0.0;
  double accuracy_rev = 0.0;
  double perplexity = 0.0;
  int clusters = 0;
};

struct TrainResult
{
  BmtModel model;
  std::vector<TrainLogRow> log;
  /// Full-corpus evaluation after training, both directions.
  LossDiagnostics final;
};

/// AdamW training. Phase 1 (first phase1_fraction of the steps) uses
/// forward batches only; phase 2 draws each batch's direction 50/50.
/// Throws DivergenceError on a non-finite loss or parameter.
TrainResult train(const std::vector<scenario::Scenario> & data, const BmtConfig & cfg,
                  const std::function<void(const TrainLogRow &)> & on_log = {});

/// Continues training an existing model (same schedule semantics).
TrainResult train(BmtModel model, const std::vector<scenario::Scenario> & data,
                  const std::function<void(const TrainLogRow &)> & on_log = {});

/// Loss and diagnostics over every sample of a corpus.
LossDiagnostics evaluate_corpus(const BmtModel & model, const std::vector<scenario::Scenario> & data);

/// CSV with header step,loss,accuracy_fwd,accuracy_rev,perplexity,clusters.
std::string training_log_csv(const std::vector<TrainLogRow> & log);

struct GradCheckEntry
{
  std::string parameter;
  int row = 0;
  int col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport
{
  std::size_t num_parameters = 0;
  int num_checked = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::vector<GradCheckEntry> worst;  // descending rel_error

  std::string summary() const;
};

/// Reduced configuration used for gradient checking (well under 10k
/// parameters).
BmtConfig tiny_config(std::uint64_t seed = 0);

struct GradCheckOptions
{
  double tolerance = 1e-4;
  double step = 1e-4;
  double abs_floor = 1e-7;
  int num_entries = 200;
  int report_worst = 10;
  std::uint64_t seed = 0;
  bool throw_on_failure = true;
};

/// Central finite differences against the analytic gradient of the batch
/// loss on a small synthetic batch. Throws GradCheckFailure on failure
/// (unless disabled), listing parameter paths.
GradCheckReport grad_check(const BmtConfig & cfg, const GradCheckOptions & opt = {});

/// Same, for a caller-supplied model and batch.
GradCheckReport grad_check(BmtModel & model, const std::vector<BatchItem> & batch,
                           const GradCheckOptions & opt);

/// Small synthetic corpus used by grad_check.
std::vector<scenario::Scenario> grad_check_data(std::uint64_t seed);

}  // namespace revsim::bmt
