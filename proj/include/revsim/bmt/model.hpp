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
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "revsim/bmt/autograd.hpp"
#include "revsim/kinematics/dynamics.hpp"

namespace revsim::bmt
{

struct BmtConfig
{
  // architecture
  int hidden_dim = 64;
  int num_encoder_layers = 2;
  int num_decoder_blocks = 2;
  int num_heads = 4;
  int fourier_bands = 16;
  double fourier_scale = 1.0;
  int token_bins = 33;
  int max_polylines = 256;
  int max_agents = 32;
  /// Average the logits with those of the x-axis mirror image (vocabulary
  /// permuted by the yaw-rate flip), which makes predictions exactly
  /// mirror-consistent.
  bool mirror_symmetric = true;
  bool agent_id_embedding = true;

  // sampling
  double top_p = 0.95;
  double temperature = 1.0;

  // optimization
  double learning_rate = 3e-4;
  double weight_decay = 0.01;
  int train_steps = 2000;
  int batch_size = 2;
  /// Fraction of train_steps spent in the forward-only phase.
  double phase1_fraction = 0.3;
  int warmup_steps = 50;
  double grad_clip = 1.0;  // global norm, <= 0 disables
  int log_interval = 50;

  std::uint64_t seed = 0;

  int vocab_size() const { return token_bins * token_bins + 3; }
  int start_token() const { return token_bins * token_bins; }
  int end_token() const { return token_bins * token_bins + 1; }
  int pad_token() const { return token_bins * token_bins + 2; }
  kinematics::TokenSpace token_space() const;

  /// Throws std::invalid_argument on inconsistent values.
  void check() const;
};

/// Ordered (stable) JSON echo of every field.
nlohmann::ordered_json to_json(const BmtConfig & cfg);
/// Fields missing from `j` keep their value in `base`; unknown keys throw
/// std::invalid_argument.
BmtConfig config_from_json(const nlohmann::json & j, BmtConfig base = {});

/// Scene encoder + bidirectional motion decoder parameters.
class BmtModel
{
public:
  BmtModel() = default;
  /// Fresh model with seeded random initialization.
  explicit BmtModel(const BmtConfig & cfg);

  const BmtConfig & config() const { return cfg_; }
  BmtConfig & mutable_config() { return cfg_; }

  std::vector<Parameter> & parameters() { return params_; }
  const std::vector<Parameter> & parameters() const { return params_; }
  Parameter & param(const std::string & name);
  const Parameter & param(const std::string & name) const;
  bool has_param(const std::string & name) const { return index_.count(name) != 0; }

  std::size_t num_parameters(bool trainable_only = true) const;
  void zero_grad();

  /// Vocabulary permutation under the x-axis mirror: perm[j] is the id that
  /// maps onto j.
  const std::vector<int> & mirror_permutation() const { return mirror_perm_; }

private:
  void add(const std::string & name, Matrix value, bool trainable = true, bool decay = true);
  void add_linear(const std::string & name, int in, int out, double gain, std::uint64_t & salt);
  void add_norm(const std::string & name, int dim);
  void add_attention(const std::string & name, int dim, std::uint64_t & salt);
  void add_ffn(const std::string & name, int dim, std::uint64_t & salt);

  BmtConfig cfg_;
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
  std::vector<int> mirror_perm_;
};

/// Binary checkpoint: little-endian uint64 header length, UTF-8 JSON header
/// (format, version, config, token space, parameter manifest), then float32
/// little-endian parameter data in manifest order.
void save_checkpoint(const BmtModel & model, const std::string & path);
/// Throws CheckpointError on a malformed file or a header inconsistent with
/// its data. If `expected` is given, its architecture fields must match.
BmtModel load_checkpoint(const std::string & path, const BmtConfig * expected = nullptr);

/// Parameters are stored as float32; this rounds a model in place to exactly
/// what a save/load cycle would restore.
void round_to_float(BmtModel & model);

}  // namespace revsim::bmt
