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

#include "revsim/bmt/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "revsim/common/errors.hpp"
#include "revsim/common/rng.hpp"
#include "revsim/scenario/preprocess.hpp"
#include "revsim/scenario/synth.hpp"

namespace revsim::bmt
{

namespace
{

constexpr double kPerplexityEps = 1e-8;

int direction_slot(Direction d) { return d == Direction::kForward ? 0 : 1; }

double histogram_perplexity(const std::vector<long> & hist, long total)
{
  double h = 0.0;
  for (long c : hist) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p + kPerplexityEps);
  }
  return std::exp(h);
}

}  // namespace

void LossTally::add(const Matrix & logits, const SequenceSample & s)
{
  if (logits.rows() != s.rows()) throw ShapeError("logits rows do not match the sample");
  const Eigen::Index vocab = logits.cols();
  if (predicted.empty()) {
    predicted.assign(static_cast<std::size_t>(vocab), 0);
    ground_truth.assign(static_cast<std::size_t>(vocab), 0);
  } else if (static_cast<Eigen::Index>(predicted.size()) != vocab) {
    throw ShapeError("vocabulary size changed between batches");
  }
  const int slot = direction_slot(s.dir);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int t = s.target[static_cast<std::size_t>(r)];
    if (t < 0) continue;
    if (t >= vocab) throw ShapeError("target outside the vocabulary");
    Eigen::Index arg = 0;
    const double mx = logits.row(r).maxCoeff(&arg);
    const Eigen::ArrayXd ex = (logits.row(r).array() - mx).exp().transpose();
    const double z = ex.sum();
    const double log_z = std::log(z);
    loss_sum += -(logits(r, t) - mx - log_z);
    double ent = 0.0;
    for (Eigen::Index j = 0; j < vocab; ++j) {
      const double p = ex(j) / z;
      if (p > 0.0) ent -= p * std::log(p);
    }
    entropy_sum[slot] += ent;
    ++count[slot];
    if (arg == t) ++correct[slot];
    ++predicted[static_cast<std::size_t>(arg)];
    ++ground_truth[static_cast<std::size_t>(t)];
  }
}

void LossTally::merge(const LossTally & o)
{
  loss_sum += o.loss_sum;
  for (int k = 0; k < 2; ++k) {
    count[k] += o.count[k];
    correct[k] += o.correct[k];
    entropy_sum[k] += o.entropy_sum[k];
  }
  if (predicted.empty()) {
    predicted = o.predicted;
    ground_truth = o.ground_truth;
  } else if (!o.predicted.empty()) {
    for (std::size_t j = 0; j < predicted.size(); ++j) {
      predicted[j] += o.predicted[j];
      ground_truth[j] += o.ground_truth[j];
    }
  }
}

LossDiagnostics LossTally::finish() const
{
  const long n = total();
  if (n == 0) throw MaskError("loss mask selects no tokens");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  LossDiagnostics d;
  d.loss = loss_sum / static_cast<double>(n);
  d.tokens_fwd = count[0];
  d.tokens_rev = count[1];
  d.accuracy_fwd = count[0] ? static_cast<double>(correct[0]) / count[0] : nan;
  d.accuracy_rev = count[1] ? static_cast<double>(correct[1]) / count[1] : nan;
  d.entropy_fwd = count[0] ? entropy_sum[0] / count[0] : nan;
  d.entropy_rev = count[1] ? entropy_sum[1] / count[1] : nan;
  d.perplexity = histogram_perplexity(predicted, n);
  d.clusters_pred = static_cast<int>(std::count_if(predicted.begin(), predicted.end(), [](long c) { return c > 0; }));
  d.clusters_gt = static_cast<int>(std::count_if(ground_truth.begin(), ground_truth.end(), [](long c) { return c > 0; }));
  return d;
}

LossDiagnostics loss(const std::vector<Matrix> & logits, const TokenBatch & batch)
{
  if (logits.size() != batch.samples.size()) {
    throw ShapeError("one logits matrix per batch sample expected");
  }
  LossTally tally;
  for (std::size_t i = 0; i < logits.size(); ++i) tally.add(logits[i], *batch.samples[i]);
  return tally.finish();
}

std::vector<PreparedScene> prepare_corpus(const std::vector<scenario::Scenario> & data,
                                          const BmtModel & model)
{
  std::vector<PreparedScene> out;
  out.reserve(data.size());
  const bool mirror = model.config().mirror_symmetric;
  for (const auto & s : data) {
    const scenario::CenteredScenario cs = scenario::preprocess(s);
    PreparedScene ps;
    ps.scene = build_scene_input(cs, model);
    if (mirror) ps.mirror_scene = build_scene_input(mirror_centered(cs), model);
    TrainingPair pair = build_training_samples(cs, model);
    const SceneInput * ms = mirror ? &ps.mirror_scene : nullptr;
    ps.forward = prepare_sample(std::move(pair.forward), ps.scene, ms, model);
    ps.reverse = prepare_sample(std::move(pair.reverse), ps.scene, ms, model);
    out.push_back(std::move(ps));
  }
  return out;
}

double batch_loss(BmtModel & model, const std::vector<BatchItem> & batch, bool gradients,
                  double scale, LossTally * tally)
{
  long tokens = 0;
  for (const auto & item : batch) {
    const PreparedSample & ps = item.dir == Direction::kForward ? item.scene->forward : item.scene->reverse;
    for (int t : ps.sample.target) tokens += t >= 0 ? 1 : 0;
  }
  if (tokens == 0) throw MaskError("batch has no unmasked targets");

  Tape tape(gradients);
  std::vector<Var> terms;
  const bool mirror = model.config().mirror_symmetric;
  for (const auto & item : batch) {
    const PreparedSample & ps = item.dir == Direction::kForward ? item.scene->forward : item.scene->reverse;
    Var scene = encode_scene(tape, item.scene->scene, model);
    Var mscene = mirror ? encode_scene(tape, item.scene->mirror_scene, model) : Var{};
    Var logits = forward_logits(tape, ps, scene, mscene, model);
    if (tally) tally->add(logits.value(), ps.sample);
    terms.push_back(cross_entropy_sum(logits, ps.sample.target, static_cast<double>(tokens)));
  }
  Var total = add_n(terms);
  const double value = total.value()(0, 0);
  if (gradients) {
    model.zero_grad();
    tape.backward(total, scale);
  }
  return scale * value;
}

namespace
{

struct AdamState
{
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long t = 0;
};

void check_finite(const BmtModel & model, int step)
{
  for (const Parameter & p : model.parameters()) {
    if (!p.value.allFinite()) throw DivergenceError(step, "parameter " + p.name + " is not finite");
  }
}

TrainLogRow row_from(int step, const LossTally & tally)
{
  const LossDiagnostics d = tally.finish();
  TrainLogRow row;
  row.step = step;
  row.loss = d.loss;
  row.accuracy_fwd = d.accuracy_fwd;
  row.accuracy_rev = d.accuracy_rev;
  row.perplexity = d.perplexity;
  row.clusters = d.clusters_pred;
  return row;
}

}  // namespace

TrainResult train(BmtModel model, const std::vector<scenario::Scenario> & data,
                  const std::function<void(const TrainLogRow &)> & on_log)
{
  if (data.empty()) throw std::invalid_argument("train: no scenarios");
  const BmtConfig cfg = model.config();
  cfg.check();
  const std::vector<PreparedScene> corpus = prepare_corpus(data, model);

  AdamState adam;
  for (const Parameter & p : model.parameters()) {
    adam.m.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    adam.v.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;

  Rng rng(Rng::mix_seed(cfg.seed, 0x7a1));
  std::vector<int> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::size_t cursor = order.size();
  auto next_scene = [&]() {
    if (cursor >= order.size()) {
      for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform_int(0, i)]);
      }
      cursor = 0;
    }
    return order[cursor++];
  };

  const int phase1_steps = static_cast<int>(std::lround(cfg.phase1_fraction * cfg.train_steps));
  TrainResult result;
  LossTally interval;
  for (int step = 1; step <= cfg.train_steps; ++step) {
    const Direction dir = (step <= phase1_steps || !rng.bernoulli(0.5)) ? Direction::kForward
                                                                        : Direction::kReverse;
    std::vector<BatchItem> batch;
    const int bsz = std::min<int>(cfg.batch_size, static_cast<int>(corpus.size()));
    for (int b = 0; b < bsz; ++b) batch.push_back({&corpus[next_scene()], dir});

    bool any_target = false;
    for (const auto & item : batch) {
      const auto & t = (dir == Direction::kForward ? item.scene->forward : item.scene->reverse).sample.target;
      any_target = any_target || std::any_of(t.begin(), t.end(), [](int x) { return x >= 0; });
    }
    if (!any_target) continue;

    const double value = batch_loss(model, batch, true, 1.0, &interval);
    if (!std::isfinite(value)) throw DivergenceError(step, "loss is not finite");

    double norm2 = 0.0;
    for (const Parameter & p : model.parameters()) {
      if (p.trainable) norm2 += p.grad.squaredNorm();
    }
    if (!std::isfinite(norm2)) throw DivergenceError(step, "gradient is not finite");
    const double norm = std::sqrt(norm2);
    const double clip = (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) ? cfg.grad_clip / norm : 1.0;

    ++adam.t;
    const double warm = cfg.warmup_steps > 0 ? std::min(1.0, static_cast<double>(step) / cfg.warmup_steps) : 1.0;
    const double lr = cfg.learning_rate * warm;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      Parameter & p = model.parameters()[i];
      if (!p.trainable) continue;
      const Matrix g = p.grad * clip;
      adam.m[i] = b1 * adam.m[i] + (1.0 - b1) * g;
      adam.v[i] = b2 * adam.v[i] + (1.0 - b2) * g.cwiseProduct(g);
      const auto denom = (adam.v[i].array() / c2).sqrt() + eps;
      if (p.decay) p.value *= 1.0 - lr * cfg.weight_decay;
      p.value.array() -= lr * (adam.m[i].array() / c1) / denom;
    }
    check_finite(model, step);

    if (step % cfg.log_interval == 0 || step == cfg.train_steps) {
      const TrainLogRow row = row_from(step, interval);
      result.log.push_back(row);
      if (on_log) on_log(row);
      interval = LossTally{};
    }
  }

  result.final = evaluate_corpus(model, data);
  if (!std::isfinite(result.final.loss)) {
    throw DivergenceError(cfg.train_steps, "final evaluation loss is not finite");
  }
  result.model = std::move(model);
  return result;
}

TrainResult train(const std::vector<scenario::Scenario> & data, const BmtConfig & cfg,
                  const std::function<void(const TrainLogRow &)> & on_log)
{
  return train(BmtModel(cfg), data, on_log);
}

LossDiagnostics evaluate_corpus(const BmtModel & model, const std::vector<scenario::Scenario> & data)
{
  BmtModel & m = const_cast<BmtModel &>(model);  // no gradients are taken
  const std::vector<PreparedScene> corpus = prepare_corpus(data, model);
  LossTally tally;
  for (const auto & scene : corpus) {
    for (Direction d : {Direction::kForward, Direction::kReverse}) {
      const auto & t = (d == Direction::kForward ? scene.forward : scene.reverse).sample.target;
      if (std::none_of(t.begin(), t.end(), [](int x) { return x >= 0; })) continue;
      batch_loss(m, {{&scene, d}}, false, 1.0, &tally);
    }
  }
  return tally.finish();
}

std::string training_log_csv(const std::vector<TrainLogRow> & log)
{
  std::ostringstream out;
  out << "step,loss,accuracy_fwd,accuracy_rev,perplexity,clusters\n";
  char buf[256];
  for (const auto & r : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%d\n", r.step, r.loss, r.accuracy_fwd,
                  r.accuracy_rev, r.perplexity, r.clusters);
    out << buf;
  }
  return out.str();
}

std::string GradCheckReport::summary() const
{
  std::ostringstream out;
  out << "grad check: " << num_checked << " entries of " << num_parameters
      << " parameters, max rel error " << max_rel_error << " (tolerance " << tolerance << ") "
      << (passed ? "PASS" : "FAIL");
  for (const auto & e : worst) {
    out << "\n  " << e.parameter << "[" << e.row << "," << e.col << "] analytic=" << e.analytic
        << " numeric=" << e.numeric << " rel=" << e.rel_error;
  }
  return out.str();
}

BmtConfig tiny_config(std::uint64_t seed)
{
  BmtConfig cfg;
  cfg.hidden_dim = 8;
  cfg.num_heads = 2;
  cfg.num_encoder_layers = 1;
  cfg.num_decoder_blocks = 1;
  cfg.fourier_bands = 4;
  cfg.token_bins = 5;
  cfg.max_agents = 8;
  cfg.seed = seed;
  return cfg;
}

std::vector<scenario::Scenario> grad_check_data(std::uint64_t seed)
{
  scenario::SynthOptions opt;
  opt.min_agents = 2;
  opt.max_agents = 3;
  opt.min_lanes = 2;
  opt.max_lanes = 2;
  opt.road_length = 120.0;
  return scenario::synth_scenarios(1, seed, opt);
}

GradCheckReport grad_check(BmtModel & model, const std::vector<BatchItem> & batch,
                           const GradCheckOptions & opt)
{
  GradCheckReport report;
  report.tolerance = opt.tolerance;
  report.num_parameters = model.num_parameters(true);

  batch_loss(model, batch, true);
  std::vector<std::pair<std::size_t, Eigen::Index>> entries;  // (param, flat index)
  std::vector<std::pair<std::size_t, Eigen::Index>> all;
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    const Parameter & p = model.parameters()[i];
    if (!p.trainable) continue;
    for (Eigen::Index k = 0; k < p.value.size(); ++k) all.emplace_back(i, k);
  }
  Rng rng(Rng::mix_seed(opt.seed, 0x9c));
  const int want = std::min<int>(opt.num_entries, static_cast<int>(all.size()));
  std::set<std::size_t> picked;
  while (static_cast<int>(picked.size()) < want) {
    picked.insert(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(all.size()) - 1)));
  }
  for (std::size_t idx : picked) entries.push_back(all[idx]);

  std::vector<double> analytic;
  for (const auto & [pi, k] : entries) analytic.push_back(model.parameters()[pi].grad.data()[k]);

  std::vector<GradCheckEntry> results;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto [pi, k] = entries[e];
    Parameter & p = model.parameters()[pi];
    double & x = p.value.data()[k];
    const double saved = x;
    x = saved + opt.step;
    const double plus = batch_loss(model, batch, false);
    x = saved - opt.step;
    const double minus = batch_loss(model, batch, false);
    x = saved;
    GradCheckEntry r;
    r.parameter = p.name;
    r.row = static_cast<int>(k / p.value.cols());
    r.col = static_cast<int>(k % p.value.cols());
    r.analytic = analytic[e];
    r.numeric = (plus - minus) / (2.0 * opt.step);
    r.rel_error = std::abs(r.analytic - r.numeric) /
                  std::max({opt.abs_floor, std::abs(r.analytic), std::abs(r.numeric)});
    results.push_back(r);
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const GradCheckEntry & a, const GradCheckEntry & b) { return a.rel_error > b.rel_error; });
  report.num_checked = static_cast<int>(results.size());
  report.max_rel_error = results.empty() ? 0.0 : results.front().rel_error;
  report.passed = report.max_rel_error <= opt.tolerance;
  results.resize(std::min<std::size_t>(results.size(), static_cast<std::size_t>(opt.report_worst)));
  report.worst = std::move(results);
  if (!report.passed && opt.throw_on_failure) {
    std::ostringstream msg;
    msg << "gradient check failed, max rel error " << report.max_rel_error << " at:";
    for (const auto & w : report.worst) {
      if (w.rel_error > opt.tolerance) msg << " " << w.parameter << "[" << w.row << "," << w.col << "]";
    }
    throw GradCheckFailure(msg.str());
  }
  return report;
}

GradCheckReport grad_check(const BmtConfig & cfg, const GradCheckOptions & opt)
{
  BmtModel model(cfg);
  if (model.num_parameters(true) > 10000) {
    throw std::invalid_argument("grad_check expects a reduced config (<= 10000 parameters)");
  }
  const auto data = grad_check_data(opt.seed);
  const auto corpus = prepare_corpus(data, model);
  std::vector<BatchItem> batch{{&corpus[0], Direction::kForward}, {&corpus[0], Direction::kReverse}};
  return grad_check(model, batch, opt);
}

}  // namespace revsim::bmt
