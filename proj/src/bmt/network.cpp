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

#include "revsim/bmt/network.hpp"

#include <cmath>
#include <string>

#include "revsim/common/angle.hpp"
#include "revsim/common/errors.hpp"
#include "revsim/kinematics/tokenizer.hpp"

namespace revsim::bmt
{

namespace
{

constexpr double kMapScale = 50.0;     // m, segment coordinates
constexpr double kRelationScale = 25.0;// m, relative positions
constexpr double kSpeedScale = 20.0;   // m/s
constexpr double kHorizonSteps = 18.0;

/// Relative pose of `key` seen from `query`, in the query's frame.
void relative_features(const Pose & query, const Pose & key, double * out)
{
  const double c = std::cos(query.heading);
  const double s = std::sin(query.heading);
  const double dx = key.x - query.x;
  const double dy = key.y - query.y;
  const double dtheta = key.heading - query.heading;
  out[0] = (c * dx + s * dy) / kRelationScale;
  out[1] = (-s * dx + c * dy) / kRelationScale;
  out[2] = std::sin(dtheta);
  out[3] = std::cos(dtheta);
  out[4] = std::hypot(dx, dy) / kRelationScale;
}

/// [cos(2 pi f B), sin(2 pi f B)] for one feature row.
void fourier_row(const double * f, const Matrix & freq, double * out)
{
  const Eigen::Index in = freq.rows();
  const Eigen::Index bands = freq.cols();
  for (Eigen::Index b = 0; b < bands; ++b) {
    double z = 0.0;
    for (Eigen::Index i = 0; i < in; ++i) z += f[i] * freq(i, b);
    z *= kTwoPi;
    out[b] = std::cos(z);
    out[bands + b] = std::sin(z);
  }
}

int kind_index(scenario::AgentKind k) { return static_cast<int>(k); }

Var param(Tape & tape, BmtModel & model, const std::string & name)
{
  return tape.parameter(model.param(name));
}

Var linear_layer(Tape & tape, BmtModel & model, Var x, const std::string & name)
{
  return linear(x, param(tape, model, name + ".w"), param(tape, model, name + ".b"));
}

Var norm_layer(Tape & tape, BmtModel & model, Var x, const std::string & name)
{
  return layer_norm(x, param(tape, model, name + ".g"), param(tape, model, name + ".b"));
}

Var attention(Tape & tape, BmtModel & model, Var query, Var keys, Var relation,
              const EdgeList & edges, const std::string & name)
{
  Var q = linear_layer(tape, model, query, name + ".q");
  Var k = linear_layer(tape, model, keys, name + ".k");
  Var v = linear_layer(tape, model, keys, name + ".v");
  Var y = relation_attention(q, k, v, relation, edges, model.config().num_heads);
  return linear_layer(tape, model, y, name + ".o");
}

Var ffn(Tape & tape, BmtModel & model, Var x, const std::string & name)
{
  return linear_layer(tape, model, gelu(linear_layer(tape, model, x, name + ".fc1")), name + ".fc2");
}

BmtModel & mutable_model(const BmtModel & m)
{
  // Inference tapes never write to parameters.
  return const_cast<BmtModel &>(m);
}

}  // namespace

SceneInput build_scene_input(const scenario::CenteredScenario & cs, const BmtModel & model)
{
  const BmtConfig & cfg = model.config();
  const scenario::Scenario & s = cs.scenario;
  if (static_cast<int>(s.map.size()) > cfg.max_polylines) {
    throw CapacityError("scene has " + std::to_string(s.map.size()) +
                        " polylines, limit is " + std::to_string(cfg.max_polylines));
  }
  SceneInput in;
  in.num_polylines = static_cast<int>(s.map.size());
  in.num_lights = static_cast<int>(s.traffic_lights.size());

  int num_segments = 0;
  for (const auto & segs : cs.segments) num_segments += static_cast<int>(segs.size());
  in.segments.resize(num_segments, 13);
  in.segments.setZero();
  in.segment_offsets.assign(1, 0);
  int row = 0;
  for (std::size_t p = 0; p < s.map.size(); ++p) {
    const int kind = static_cast<int>(s.map[p].kind);
    for (const auto & seg : cs.segments[p]) {
      double * r = in.segments.row(row).data();
      r[0] = seg.start.x / kMapScale;
      r[1] = seg.start.y / kMapScale;
      r[2] = seg.end.x / kMapScale;
      r[3] = seg.end.y / kMapScale;
      r[4] = seg.dir_x;
      r[5] = seg.dir_y;
      r[6] = seg.length / 10.0;
      r[7 + kind] = 1.0;
      ++row;
    }
    in.segment_offsets.push_back(row);

    const auto & pts = s.map[p].points;
    Pose pose;
    for (const auto & pt : pts) {
      pose.x += pt.x;
      pose.y += pt.y;
    }
    pose.x /= static_cast<double>(pts.size());
    pose.y /= static_cast<double>(pts.size());
    pose.heading = cs.segments[p].front().heading;
    in.poses.push_back(pose);
  }

  in.lights.resize(in.num_lights, 6);
  for (int l = 0; l < in.num_lights; ++l) {
    const auto & light = s.traffic_lights[l];
    double counts[4] = {0, 0, 0, 0};
    for (auto st : light.states) counts[static_cast<int>(st)] += 1.0;
    const double n = light.states.empty() ? 1.0 : static_cast<double>(light.states.size());
    in.lights(l, 0) = light.position.x / kMapScale;
    in.lights(l, 1) = light.position.y / kMapScale;
    for (int k = 0; k < 4; ++k) in.lights(l, 2 + k) = counts[k] / n;
    in.poses.push_back({light.position.x, light.position.y, 0.0});
  }

  const int n = in.size();
  const Matrix & freq = model.param("fourier.scene").value;
  in.relation.resize(static_cast<Eigen::Index>(n) * n, 2 * freq.cols());
  double f[5];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      relative_features(in.poses[i], in.poses[j], f);
      fourier_row(f, freq, in.relation.row(in.edges.num_edges()).data());
      in.edges.key.push_back(j);
    }
    in.edges.offsets.push_back(in.edges.num_edges());
  }
  return in;
}

Var encode_scene(Tape & tape, const SceneInput & in, BmtModel & model)
{
  const BmtConfig & cfg = model.config();
  Var seg = tape.constant(in.segments);
  Var h = gelu(linear_layer(tape, model, seg, "enc.segment.fc1"));
  h = linear_layer(tape, model, h, "enc.segment.fc2");
  Var poly = segment_max(h, in.segment_offsets);
  Var lights = linear_layer(tape, model, tape.constant(in.lights), "enc.light");
  Var x = concat_rows(poly, lights);
  Var rel = linear_layer(tape, model, tape.constant(in.relation), "enc.relation");
  for (int l = 0; l < cfg.num_encoder_layers; ++l) {
    const std::string p = "enc.layer" + std::to_string(l);
    Var xn = norm_layer(tape, model, x, p + ".attn_norm");
    x = add(x, attention(tape, model, xn, xn, rel, in.edges, p + ".attn"));
    x = add(x, ffn(tape, model, norm_layer(tape, model, x, p + ".ffn_norm"), p + ".ffn"));
  }
  return norm_layer(tape, model, x, "enc.out_norm");
}

scenario::CenteredScenario mirror_centered(const scenario::CenteredScenario & cs)
{
  scenario::CenteredScenario m = cs;
  m.scenario = scenario::mirror_y(cs.scenario);
  m.center.y = -m.center.y;
  for (auto & segs : m.segments) {
    for (auto & f : segs) {
      f.start.y = -f.start.y;
      f.end.y = -f.end.y;
      f.dir_y = -f.dir_y;
      f.heading = normalize_angle(-f.heading);
    }
  }
  for (auto & f : m.state_features) {
    f[1] = -f[1];
    f[2] = -f[2];
  }
  return m;
}

SceneEmbedding encode_scene(const scenario::CenteredScenario & cs, const BmtModel & model)
{
  BmtModel & m = mutable_model(model);
  SceneEmbedding out;
  {
    const SceneInput in = build_scene_input(cs, model);
    Tape tape(false);
    out.tokens = encode_scene(tape, in, m).value();
    out.poses = in.poses;
    out.num_polylines = in.num_polylines;
    out.num_lights = in.num_lights;
  }
  if (model.config().mirror_symmetric) {
    const SceneInput in = build_scene_input(mirror_centered(cs), model);
    Tape tape(false);
    out.mirror_tokens = encode_scene(tape, in, m).value();
    out.mirror_poses = in.poses;
  }
  return out;
}

void SequenceSample::check_shape(int vocab_size) const
{
  const std::size_t n = static_cast<std::size_t>(rows());
  if (num_agents < 0 || num_positions < 1 || agents.size() != static_cast<std::size_t>(num_agents) ||
      input_token.size() != n || target.size() != n || valid.size() != n || state.size() != n ||
      accel.size() != n || yaw_rate.size() != n) {
    throw ShapeError("inconsistent token batch dimensions (" + std::to_string(num_agents) +
                     " agents x " + std::to_string(num_positions) + " positions)");
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (input_token[r] < 0 || input_token[r] >= vocab_size || target[r] >= vocab_size) {
      throw ShapeError("token id out of vocabulary at row " + std::to_string(r));
    }
  }
}

SequenceSample mirror_sample(const SequenceSample & s, const BmtModel & model)
{
  const auto & perm = model.mirror_permutation();
  SequenceSample m = s;
  for (std::size_t r = 0; r < m.state.size(); ++r) {
    m.state[r].y = -m.state[r].y;
    m.state[r].heading = normalize_angle(-m.state[r].heading);
    m.yaw_rate[r] = -m.yaw_rate[r];
    m.input_token[r] = perm[m.input_token[r]];
    if (m.target[r] >= 0) m.target[r] = perm[m.target[r]];
  }
  return m;
}

TrainingPair build_training_samples(const scenario::CenteredScenario & cs, const BmtModel & model)
{
  const BmtConfig & cfg = model.config();
  const kinematics::TokenSpace ts = cfg.token_space();
  const scenario::Scenario & s = cs.scenario;
  const int n = static_cast<int>(s.agents.size());
  const int last_step = s.num_steps - 1;
  const int positions = last_step;

  TrainingPair out;
  for (SequenceSample * smp : {&out.forward, &out.reverse}) {
    smp->dir = smp == &out.forward ? Direction::kForward : Direction::kReverse;
    smp->num_agents = n;
    smp->num_positions = positions;
    const std::size_t rows = static_cast<std::size_t>(n) * positions;
    smp->input_token.assign(rows, cfg.pad_token());
    smp->target.assign(rows, -1);
    smp->valid.assign(rows, 0);
    smp->state.assign(rows, AgentState{0, 0, 0, 0, false});
    smp->accel.assign(rows, 0.0);
    smp->yaw_rate.assign(rows, 0.0);
    for (const auto & a : s.agents) smp->agents.push_back({a.kind, a.length, a.width, a.height});
  }

  for (int i = 0; i < n; ++i) {
    const auto & track = s.agents[i];
    const auto [first, last] = kinematics::longest_valid_run(track.states);
    if (first < 0) continue;
    for (SequenceSample * smp : {&out.forward, &out.reverse}) {
      const bool fwd = smp->dir == Direction::kForward;
      std::vector<AgentState> recon;
      std::vector<kinematics::MotionToken> tokens;
      if (last > first) {
        auto tt = kinematics::tokenize_states(track.states, first, last,
                                              {track.length, track.width}, smp->dir, ts);
        recon = std::move(tt.reconstructed);
        tokens = std::move(tt.tokens);
      } else {
        recon = {track.states[first]};
      }
      // k-th state of the run in generation order
      const int len = last - first + 1;
      for (int k = 0; k < len; ++k) {
        const int step = fwd ? first + k : last - k;
        const int p = fwd ? step : last_step - step;
        if (p < 0 || p >= positions) continue;
        const int r = smp->row(i, p);
        smp->valid[r] = 1;
        smp->state[r] = recon[step - first];
        if (k == 0) {
          smp->input_token[r] = cfg.start_token();
        } else {
          const auto & z = tokens[k - 1];
          smp->input_token[r] = z.id;
          smp->accel[r] = z.accel;
          smp->yaw_rate[r] = z.yaw_rate;
        }
        if (k + 1 < len) smp->target[r] = tokens[k].id;
      }
    }
  }
  return out;
}

DecoderInput build_decoder_input(const SequenceSample & s, const std::vector<Pose> & scene_poses,
                                 const BmtModel & model)
{
  const BmtConfig & cfg = model.config();
  s.check_shape(cfg.vocab_size());
  if (s.num_agents > cfg.max_agents) {
    throw CapacityError("sample has " + std::to_string(s.num_agents) + " agents, limit is " +
                        std::to_string(cfg.max_agents));
  }
  const kinematics::TokenSpace ts = cfg.token_space();
  const int k2 = ts.num_tokens();
  const int T = s.num_positions;
  DecoderInput in;
  in.rows = s.rows();
  in.motion_index.resize(in.rows);
  in.special_index.resize(in.rows);
  in.type_index.resize(in.rows);
  in.agent_index.resize(in.rows);
  in.direction_index.assign(in.rows, s.dir == Direction::kForward ? 0 : 1);
  in.shape.resize(in.rows, 3);
  const Matrix & motion_freq = model.param("fourier.motion").value;
  in.motion.resize(in.rows, 2 * motion_freq.cols());

  std::vector<Pose> pose(static_cast<std::size_t>(in.rows));
  for (int r = 0; r < in.rows; ++r) {
    const int agent = r / T;
    const auto & info = s.agents[agent];
    const int tok = s.input_token[r];
    in.motion_index[r] = tok < k2 ? tok : -1;
    in.special_index[r] = tok < k2 ? -1 : tok - k2;
    in.type_index[r] = kind_index(info.kind);
    in.agent_index[r] = agent;
    in.shape(r, 0) = info.length / 5.0;
    in.shape(r, 1) = info.width / 2.0;
    in.shape(r, 2) = info.height / 2.0;
    const double f[3] = {s.accel[r] / ts.a_max, s.yaw_rate[r] / ts.omega_max,
                         s.state[r].speed / kSpeedScale};
    fourier_row(f, motion_freq, in.motion.row(r).data());
    pose[r] = {s.state[r].x, s.state[r].y, s.state[r].heading};
  }

  const Matrix & f_a2t = model.param("fourier.a2t").value;
  const Matrix & f_a2a = model.param("fourier.a2a").value;
  const Matrix & f_a2s = model.param("fourier.a2s").value;
  const int bands2 = 2 * cfg.fourier_bands;
  std::vector<double> a2t, a2a, a2s;
  double feat[6];
  auto emit = [&](std::vector<double> & buf, const Matrix & freq) {
    const std::size_t at = buf.size();
    buf.resize(at + static_cast<std::size_t>(bands2));
    fourier_row(feat, freq, buf.data() + at);
  };
  for (int r = 0; r < in.rows; ++r) {
    const int agent = r / T;
    const int p = r % T;
    if (s.valid[r]) {
      for (int q = 0; q <= p; ++q) {
        const int key = s.row(agent, q);
        if (!s.valid[key]) continue;
        relative_features(pose[r], pose[key], feat);
        feat[5] = (p - q) / kHorizonSteps;
        emit(a2t, f_a2t);
        in.a2t.key.push_back(key);
      }
      for (int other = 0; other < s.num_agents; ++other) {
        const int key = s.row(other, p);
        if (other == agent || !s.valid[key]) continue;
        relative_features(pose[r], pose[key], feat);
        emit(a2a, f_a2a);
        in.a2a.key.push_back(key);
      }
      for (int k = 0; k < static_cast<int>(scene_poses.size()); ++k) {
        relative_features(pose[r], scene_poses[k], feat);
        emit(a2s, f_a2s);
        in.a2s.key.push_back(k);
      }
    }
    in.a2t.offsets.push_back(in.a2t.num_edges());
    in.a2a.offsets.push_back(in.a2a.num_edges());
    in.a2s.offsets.push_back(in.a2s.num_edges());
  }
  auto to_matrix = [bands2](const std::vector<double> & buf) {
    const Eigen::Index rows = static_cast<Eigen::Index>(buf.size()) / bands2;
    return Matrix(Eigen::Map<const Matrix>(buf.data(), rows, bands2));
  };
  in.rel_a2t = to_matrix(a2t);
  in.rel_a2a = to_matrix(a2a);
  in.rel_a2s = to_matrix(a2s);
  return in;
}

Var decode(Tape & tape, const DecoderInput & in, Var scene_tokens, BmtModel & model)
{
  const BmtConfig & cfg = model.config();
  const int h = cfg.hidden_dim;
  if (scene_tokens.cols() != h) throw ShapeError("scene embedding width mismatch");
  std::vector<Var> terms;
  terms.push_back(gather_rows(param(tape, model, "dec.token_emb"), in.motion_index, h));
  terms.push_back(gather_rows(param(tape, model, "dec.special_emb"), in.special_index, h));
  terms.push_back(gather_rows(param(tape, model, "dec.type_emb"), in.type_index, h));
  if (cfg.agent_id_embedding) {
    terms.push_back(gather_rows(param(tape, model, "dec.agent_id_emb"), in.agent_index, h));
  }
  terms.push_back(gather_rows(param(tape, model, "dec.direction_emb"), in.direction_index, h));
  terms.push_back(linear_layer(tape, model, tape.constant(in.shape), "dec.shape"));
  terms.push_back(linear_layer(tape, model, tape.constant(in.motion), "dec.motion"));
  Var x = add_n(terms);

  Var r_a2t = linear_layer(tape, model, tape.constant(in.rel_a2t), "dec.rel_a2t");
  Var r_a2a = linear_layer(tape, model, tape.constant(in.rel_a2a), "dec.rel_a2a");
  Var r_a2s = linear_layer(tape, model, tape.constant(in.rel_a2s), "dec.rel_a2s");
  for (int b = 0; b < cfg.num_decoder_blocks; ++b) {
    const std::string p = "dec.block" + std::to_string(b);
    Var xn = norm_layer(tape, model, x, p + ".a2t_norm");
    x = add(x, attention(tape, model, xn, xn, r_a2t, in.a2t, p + ".a2t"));
    xn = norm_layer(tape, model, x, p + ".a2a_norm");
    x = add(x, attention(tape, model, xn, xn, r_a2a, in.a2a, p + ".a2a"));
    xn = norm_layer(tape, model, x, p + ".a2s_norm");
    x = add(x, attention(tape, model, xn, scene_tokens, r_a2s, in.a2s, p + ".a2s"));
    x = add(x, ffn(tape, model, norm_layer(tape, model, x, p + ".ffn_norm"), p + ".ffn"));
  }
  Var y = norm_layer(tape, model, x, "head.norm");
  y = gelu(linear_layer(tape, model, y, "head.fc1"));
  return linear_layer(tape, model, y, "head.fc2");
}

PreparedSample prepare_sample(SequenceSample s, const SceneInput & scene,
                              const SceneInput * mirror_scene, const BmtModel & model)
{
  PreparedSample ps;
  ps.input = build_decoder_input(s, scene.poses, model);
  if (model.config().mirror_symmetric) {
    if (!mirror_scene) throw ShapeError("mirror-symmetric model needs the mirrored scene");
    ps.mirror_input = build_decoder_input(mirror_sample(s, model), mirror_scene->poses, model);
  }
  ps.sample = std::move(s);
  return ps;
}

namespace
{

Var symmetrize(Var logits, Var mirror_logits, const BmtModel & model)
{
  return scale(add(logits, permute_cols(mirror_logits, model.mirror_permutation())), 0.5);
}

}  // namespace

Var forward_logits(Tape & tape, const PreparedSample & ps, Var scene, Var mirror_scene,
                   BmtModel & model)
{
  Var logits = decode(tape, ps.input, scene, model);
  if (!model.config().mirror_symmetric) return logits;
  return symmetrize(logits, decode(tape, ps.mirror_input, mirror_scene, model), model);
}

Matrix forward_logits(const SequenceSample & s, const SceneEmbedding & scene,
                      const BmtModel & model)
{
  BmtModel & m = mutable_model(model);
  const int h = model.config().hidden_dim;
  auto scene_matrix = [h](const Matrix & t) { return t.rows() == 0 ? Matrix(0, h) : t; };
  Tape tape(false);
  Var logits = decode(tape, build_decoder_input(s, scene.poses, model),
                      tape.constant(scene_matrix(scene.tokens)), m);
  if (model.config().mirror_symmetric) {
    if (scene.mirror_poses.size() != scene.poses.size()) {
      throw ShapeError("scene embedding lacks the mirrored copy");
    }
    Var mirrored = decode(tape, build_decoder_input(mirror_sample(s, model), scene.mirror_poses, model),
                          tape.constant(scene_matrix(scene.mirror_tokens)), m);
    logits = symmetrize(logits, mirrored, model);
  }
  return logits.value();
}

Matrix decode_step(const SequenceSample & history, const SceneEmbedding & scene,
                   const BmtModel & model)
{
  const Matrix all = forward_logits(history, scene, model);
  Matrix out(history.num_agents, all.cols());
  for (int a = 0; a < history.num_agents; ++a) {
    out.row(a) = all.row(history.row(a, history.num_positions - 1));
  }
  return out;
}

}  // namespace revsim::bmt
