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

#include "revsim/bmt/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "revsim/common/errors.hpp"
#include "revsim/common/rng.hpp"
#include "revsim/scenario/io.hpp"

namespace revsim::bmt
{

namespace
{

constexpr const char * kFormat = "revsim-bmt";
constexpr int kVersion = 1;

// Fields that shape the parameter tensors; a checkpoint must agree on all.
const char * const kArchitectureFields[] = {
  "hidden_dim", "num_encoder_layers", "num_decoder_blocks", "num_heads", "fourier_bands",
  "fourier_scale", "token_bins", "max_polylines", "max_agents", "mirror_symmetric",
  "agent_id_embedding"};

}  // namespace

kinematics::TokenSpace BmtConfig::token_space() const
{
  kinematics::TokenSpace ts;
  ts.bins = token_bins;
  return ts;
}

void BmtConfig::check() const
{
  auto fail = [](const std::string & m) { throw std::invalid_argument("config: " + m); };
  if (hidden_dim <= 0 || num_heads <= 0 || hidden_dim % num_heads != 0) {
    fail("hidden_dim must be a positive multiple of num_heads");
  }
  if (num_encoder_layers < 0 || num_decoder_blocks < 1) fail("layer counts");
  if (fourier_bands < 1 || !(fourier_scale > 0.0)) fail("fourier_bands/fourier_scale");
  if (token_bins < 3 || token_bins % 2 == 0) fail("token_bins must be odd and >= 3");
  if (max_polylines < 1 || max_agents < 1) fail("capacity limits");
  if (!(top_p > 0.0 && top_p <= 1.0)) fail("top_p must be in (0, 1]");
  if (!(temperature > 0.0)) fail("temperature must be positive");
  if (!(learning_rate > 0.0) || weight_decay < 0.0) fail("learning_rate/weight_decay");
  if (train_steps < 0 || batch_size < 1 || log_interval < 1 || warmup_steps < 0) {
    fail("train_steps/batch_size/log_interval/warmup_steps");
  }
  if (!(phase1_fraction >= 0.0 && phase1_fraction <= 1.0)) fail("phase1_fraction");
}

#define REVSIM_CONFIG_FIELDS(X) \
  X(hidden_dim)                 \
  X(num_encoder_layers)         \
  X(num_decoder_blocks)         \
  X(num_heads)                  \
  X(fourier_bands)              \
  X(fourier_scale)              \
  X(token_bins)                 \
  X(max_polylines)              \
  X(max_agents)                 \
  X(mirror_symmetric)           \
  X(agent_id_embedding)         \
  X(top_p)                      \
  X(temperature)                \
  X(learning_rate)              \
  X(weight_decay)               \
  X(train_steps)                \
  X(batch_size)                 \
  X(phase1_fraction)            \
  X(warmup_steps)               \
  X(grad_clip)                  \
  X(log_interval)               \
  X(seed)

nlohmann::ordered_json to_json(const BmtConfig & cfg)
{
  nlohmann::ordered_json j;
#define X(f) j[#f] = cfg.f;
  REVSIM_CONFIG_FIELDS(X)
#undef X
  j["vocab_size"] = cfg.vocab_size();
  return j;
}

BmtConfig config_from_json(const nlohmann::json & j, BmtConfig base)
{
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string & key = it.key();
    bool known = false;
    try {
#define X(f)                                    \
  if (key == #f) {                              \
    base.f = it.value().get<decltype(base.f)>(); \
    known = true;                               \
  }
      REVSIM_CONFIG_FIELDS(X)
#undef X
    } catch (const nlohmann::json::exception & e) {
      throw std::invalid_argument("config field '" + key + "': " + e.what());
    }
    if (key == "vocab_size") known = true;  // derived, echoed for readability
    if (!known) throw std::invalid_argument("unknown config field '" + key + "'");
  }
  if (j.contains("vocab_size") && j["vocab_size"].get<int>() != base.vocab_size()) {
    throw std::invalid_argument("vocab_size does not match token_bins");
  }
  return base;
}

#undef REVSIM_CONFIG_FIELDS

namespace
{

Matrix gaussian(Rng & rng, int rows, int cols, double stddev)
{
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
  return m;
}

}  // namespace

BmtModel::BmtModel(const BmtConfig & cfg) : cfg_(cfg)
{
  cfg_.check();
  const int h = cfg_.hidden_dim;
  const int f = cfg_.fourier_bands;
  const int k2 = cfg_.token_bins * cfg_.token_bins;
  std::uint64_t salt = 0;
  Rng rng(Rng::mix_seed(cfg_.seed, 0xb47));

  // Fixed random Fourier frequencies, one matrix per relation kind.
  const std::pair<const char *, int> fourier[] = {
    {"fourier.scene", 5}, {"fourier.a2t", 6}, {"fourier.a2a", 5}, {"fourier.a2s", 5},
    {"fourier.motion", 3}};
  for (const auto & [name, in] : fourier) {
    add(name, gaussian(rng, in, f, cfg_.fourier_scale), false, false);
  }

  add_linear("enc.segment.fc1", 13, h, 1.0, salt);
  add_linear("enc.segment.fc2", h, h, 1.0, salt);
  add_linear("enc.light", 6, h, 1.0, salt);
  add_linear("enc.relation", 2 * f, h, 1.0, salt);
  for (int l = 0; l < cfg_.num_encoder_layers; ++l) {
    const std::string p = "enc.layer" + std::to_string(l);
    add_norm(p + ".attn_norm", h);
    add_attention(p + ".attn", h, salt);
    add_norm(p + ".ffn_norm", h);
    add_ffn(p + ".ffn", h, salt);
  }
  add_norm("enc.out_norm", h);

  Rng emb(Rng::mix_seed(cfg_.seed, 0xe3b));
  add("dec.token_emb", gaussian(emb, k2, h, 0.5));
  add("dec.special_emb", gaussian(emb, 3, h, 0.5));
  add("dec.type_emb", gaussian(emb, 3, h, 0.5));
  if (cfg_.agent_id_embedding) add("dec.agent_id_emb", gaussian(emb, cfg_.max_agents, h, 0.5));
  add("dec.direction_emb", gaussian(emb, 2, h, 0.5));
  add_linear("dec.shape", 3, h, 1.0, salt);
  add_linear("dec.motion", 2 * f, h, 1.0, salt);
  add_linear("dec.rel_a2t", 2 * f, h, 1.0, salt);
  add_linear("dec.rel_a2a", 2 * f, h, 1.0, salt);
  add_linear("dec.rel_a2s", 2 * f, h, 1.0, salt);
  for (int b = 0; b < cfg_.num_decoder_blocks; ++b) {
    const std::string p = "dec.block" + std::to_string(b);
    for (const char * kind : {"a2t", "a2a", "a2s"}) {
      add_norm(p + "." + kind + "_norm", h);
      add_attention(p + "." + kind, h, salt);
    }
    add_norm(p + ".ffn_norm", h);
    add_ffn(p + ".ffn", h, salt);
  }
  add_norm("head.norm", h);
  add_linear("head.fc1", h, h, 1.0, salt);
  add_linear("head.fc2", h, cfg_.vocab_size(), 0.1, salt);

  const kinematics::TokenSpace ts = cfg_.token_space();
  mirror_perm_.resize(static_cast<std::size_t>(cfg_.vocab_size()));
  for (int j = 0; j < cfg_.vocab_size(); ++j) {
    mirror_perm_[j] = j < k2 ? kinematics::mirror_token_id(ts, j) : j;
  }
}

void BmtModel::add(const std::string & name, Matrix value, bool trainable, bool decay)
{
  if (index_.count(name)) throw std::logic_error("duplicate parameter " + name);
  Parameter p;
  p.name = name;
  p.grad = Matrix::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  p.trainable = trainable;
  p.decay = decay;
  index_[name] = params_.size();
  params_.push_back(std::move(p));
}

void BmtModel::add_linear(const std::string & name, int in, int out, double gain,
                          std::uint64_t & salt)
{
  Rng rng(Rng::mix_seed(cfg_.seed, 0x1000 + salt++));
  add(name + ".w", gaussian(rng, in, out, gain / std::sqrt(static_cast<double>(in))));
  add(name + ".b", Matrix::Zero(1, out), true, false);
}

void BmtModel::add_norm(const std::string & name, int dim)
{
  add(name + ".g", Matrix::Ones(1, dim), true, false);
  add(name + ".b", Matrix::Zero(1, dim), true, false);
}

void BmtModel::add_attention(const std::string & name, int dim, std::uint64_t & salt)
{
  add_linear(name + ".q", dim, dim, 1.0, salt);
  add_linear(name + ".k", dim, dim, 1.0, salt);
  add_linear(name + ".v", dim, dim, 1.0, salt);
  add_linear(name + ".o", dim, dim, 0.5, salt);
}

void BmtModel::add_ffn(const std::string & name, int dim, std::uint64_t & salt)
{
  add_linear(name + ".fc1", dim, 2 * dim, 1.0, salt);
  add_linear(name + ".fc2", 2 * dim, dim, 0.5, salt);
}

Parameter & BmtModel::param(const std::string & name)
{
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter " + name);
  return params_[it->second];
}

const Parameter & BmtModel::param(const std::string & name) const
{
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter " + name);
  return params_[it->second];
}

std::size_t BmtModel::num_parameters(bool trainable_only) const
{
  std::size_t n = 0;
  for (const Parameter & p : params_) {
    if (!trainable_only || p.trainable) n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

void BmtModel::zero_grad()
{
  for (Parameter & p : params_) p.grad.setZero(p.value.rows(), p.value.cols());
}

void round_to_float(BmtModel & model)
{
  for (Parameter & p : model.parameters()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      p.value.data()[i] = static_cast<double>(static_cast<float>(p.value.data()[i]));
    }
  }
}

namespace
{

void put_u64_le(std::string & out, std::uint64_t v)
{
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32_le(std::string & out, float f)
{
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32_le(const unsigned char * p)
{
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  float f = 0.0f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

}  // namespace

void save_checkpoint(const BmtModel & model, const std::string & path)
{
  nlohmann::ordered_json header;
  header["format"] = kFormat;
  header["version"] = kVersion;
  header["config"] = to_json(model.config());
  const kinematics::TokenSpace ts = model.config().token_space();
  header["token_space"] = {{"a_max", ts.a_max}, {"omega_max", ts.omega_max}, {"bins", ts.bins},
                           {"dt", ts.dt}};
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const Parameter & p : model.parameters()) {
    manifest.push_back({{"name", p.name},
                        {"shape", {p.value.rows(), p.value.cols()}},
                        {"offset", offset},
                        {"trainable", p.trainable}});
    offset += static_cast<std::size_t>(p.value.size());
  }
  header["parameters"] = manifest;
  header["num_values"] = offset;
  const std::string text = header.dump();

  std::string out;
  out.reserve(8 + text.size() + 4 * offset);
  put_u64_le(out, text.size());
  out += text;
  for (const Parameter & p : model.parameters()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      put_f32_le(out, static_cast<float>(p.value.data()[i]));
    }
  }
  scenario::write_file_atomic(path, out);
}

BmtModel load_checkpoint(const std::string & path, const BmtConfig * expected)
{
  std::string bytes;
  try {
    bytes = scenario::read_file(path);
  } catch (const IoError & e) {
    throw CheckpointError(std::string("cannot read checkpoint: ") + e.what());
  }
  if (bytes.size() < 8) throw CheckpointError("checkpoint truncated");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) {
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  if (len > bytes.size() - 8) throw CheckpointError("checkpoint header length out of range");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, len));
  } catch (const nlohmann::json::exception & e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }
  BmtConfig cfg;
  try {
    if (header.at("format").get<std::string>() != kFormat) throw CheckpointError("wrong format");
    if (header.at("version").get<int>() != kVersion) throw CheckpointError("unsupported version");
    cfg = config_from_json(header.at("config"));
  } catch (const nlohmann::json::exception & e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  } catch (const std::invalid_argument & e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  if (expected) {
    const auto a = to_json(cfg);
    const auto b = to_json(*expected);
    for (const char * field : kArchitectureFields) {
      if (a[field] != b[field]) {
        throw CheckpointError(std::string("checkpoint/config mismatch in '") + field + "'");
      }
    }
  }

  BmtModel model(cfg);
  const auto & manifest = header.at("parameters");
  if (!manifest.is_array() || manifest.size() != model.parameters().size()) {
    throw CheckpointError("parameter manifest does not match the architecture");
  }
  const unsigned char * data = reinterpret_cast<const unsigned char *>(bytes.data()) + 8 + len;
  const std::size_t available = (bytes.size() - 8 - len) / 4;
  if ((bytes.size() - 8 - len) % 4 != 0) throw CheckpointError("parameter data misaligned");
  std::size_t expected_offset = 0;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    Parameter & p = model.parameters()[i];
    const auto & m = manifest[i];
    try {
      if (m.at("name").get<std::string>() != p.name ||
          m.at("shape").at(0).get<Eigen::Index>() != p.value.rows() ||
          m.at("shape").at(1).get<Eigen::Index>() != p.value.cols() ||
          m.at("offset").get<std::size_t>() != expected_offset) {
        throw CheckpointError("manifest entry " + std::to_string(i) + " (" +
                              m.at("name").get<std::string>() + ") does not match");
      }
    } catch (const nlohmann::json::exception & e) {
      throw CheckpointError(std::string("manifest: ") + e.what());
    }
    if (expected_offset + static_cast<std::size_t>(p.value.size()) > available) {
      throw CheckpointError("parameter data truncated");
    }
    for (Eigen::Index k = 0; k < p.value.size(); ++k) {
      p.value.data()[k] = get_f32_le(data + 4 * (expected_offset + static_cast<std::size_t>(k)));
    }
    expected_offset += static_cast<std::size_t>(p.value.size());
  }
  if (expected_offset != available) throw CheckpointError("trailing parameter data");
  return model;
}

}  // namespace revsim::bmt
