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

#include "revsim/cli/cli.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "revsim/adversary/adversary.hpp"
#include "revsim/bmt/training.hpp"
#include "revsim/cli/plot.hpp"
#include "revsim/common/errors.hpp"
#include "revsim/kinematics/tokenizer.hpp"
#include "revsim/metrics/evaluate.hpp"
#include "revsim/metrics/geometry.hpp"
#include "revsim/metrics/metrics.hpp"
#include "revsim/scenario/io.hpp"
#include "revsim/scenario/synth.hpp"

namespace revsim::cli
{

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

nlohmann::ordered_json to_json(const RunConfig & rc)
{
  ordered_json j;
  j["model"] = bmt::to_json(rc.model);
  j["data"] = rc.data;
  j["out"] = rc.out;
  j["checkpoint"] = rc.checkpoint;
  j["num_modes"] = rc.num_modes;
  j["mode"] = rc.mode;
  j["max_resamples"] = rc.max_resamples;
  j["seed"] = rc.seed;
  j["jobs"] = rc.jobs;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json & j, RunConfig base)
{
  if (!j.is_object()) throw std::invalid_argument("run config must be a JSON object");
  try {
    for (const auto & [key, v] : j.items()) {
      if (key == "model") {
        base.model = bmt::config_from_json(v, base.model);
      } else if (key == "data") {
        base.data = v.get<std::string>();
      } else if (key == "out") {
        base.out = v.get<std::string>();
      } else if (key == "checkpoint") {
        base.checkpoint = v.get<std::string>();
      } else if (key == "num_modes") {
        base.num_modes = v.get<int>();
      } else if (key == "mode") {
        base.mode = v.get<std::string>();
      } else if (key == "max_resamples") {
        base.max_resamples = v.get<int>();
      } else if (key == "seed") {
        base.seed = v.get<std::uint64_t>();
      } else if (key == "jobs") {
        base.jobs = v.get<int>();
      } else {
        throw std::invalid_argument("unknown run config key: " + key);
      }
    }
  } catch (const json::exception & e) {
    throw std::invalid_argument(std::string("bad run config value: ") + e.what());
  }
  return base;
}

namespace
{

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Flags bound to RunConfig fields. Values land in a scratch copy; finish()
/// layers them over the --config file (or the defaults), flags winning.
class ConfigFlags
{
public:
  explicit ConfigFlags(CLI::App * app) : app_(app)
  {
    app_->add_option("--config", config_path_, "JSON run config; explicit flags override it");
  }

  template <class T>
  CLI::Option * add(const std::string & name, T & (*field)(RunConfig &), const std::string & desc)
  {
    CLI::Option * opt = app_->add_option(name, field(flags_), desc)->capture_default_str();
    copiers_.push_back({opt, [field](RunConfig & dst, RunConfig & src) { field(dst) = field(src); }});
    return opt;
  }

  RunConfig finish()
  {
    RunConfig rc;
    if (!config_path_.empty()) {
      json j;
      try {
        j = json::parse(scenario::read_file(config_path_));
      } catch (const json::parse_error & e) {
        throw ParseError("config " + config_path_ + ": " + e.what());
      }
      rc = run_config_from_json(j);
      config_has_model_ = j.contains("model");
    }
    for (auto & c : copiers_) {
      if (c.opt->count() > 0) c.copy(rc, flags_);
    }
    return rc;
  }

  bool config_has_model() const { return config_has_model_; }
  bool given(const CLI::Option * opt) const { return opt->count() > 0; }

private:
  struct Copier
  {
    CLI::Option * opt;
    std::function<void(RunConfig &, RunConfig &)> copy;
  };
  CLI::App * app_;
  std::string config_path_;
  RunConfig flags_;
  std::vector<Copier> copiers_;
  bool config_has_model_ = false;
};

// Field accessors for ConfigFlags::add.
std::uint64_t & f_seed(RunConfig & r) { return r.seed; }
std::string & f_out(RunConfig & r) { return r.out; }
std::string & f_data(RunConfig & r) { return r.data; }
std::string & f_checkpoint(RunConfig & r) { return r.checkpoint; }
int & f_jobs(RunConfig & r) { return r.jobs; }
int & f_num_modes(RunConfig & r) { return r.num_modes; }
std::string & f_mode(RunConfig & r) { return r.mode; }
int & f_max_resamples(RunConfig & r) { return r.max_resamples; }
int & f_steps(RunConfig & r) { return r.model.train_steps; }
double & f_lr(RunConfig & r) { return r.model.learning_rate; }
int & f_batch(RunConfig & r) { return r.model.batch_size; }
int & f_log_interval(RunConfig & r) { return r.model.log_interval; }
double & f_top_p(RunConfig & r) { return r.model.top_p; }
double & f_temperature(RunConfig & r) { return r.model.temperature; }
int & f_bins(RunConfig & r) { return r.model.token_bins; }

void add_common(ConfigFlags & f, const std::string & out_desc)
{
  f.add("--seed", f_seed, "Random seed");
  f.add("--out", f_out, out_desc);
  f.add("--jobs", f_jobs, "Worker threads (outputs do not depend on it)")->check(CLI::PositiveNumber);
}

std::string dump(const ordered_json & j) { return j.dump(2) + "\n"; }

void require_out(const RunConfig & rc)
{
  if (rc.out.empty()) throw UsageError("--out is required");
}

void make_dir(const fs::path & p)
{
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError("cannot create directory " + p.string());
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the error of
/// the lowest failing index.
void parallel_for(int n, int jobs, const std::function<void(int)> & fn)
{
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto & t : pool) t.join();
  for (auto & e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<scenario::Scenario> load_dir(const std::string & dir)
{
  if (dir.empty()) throw UsageError("--data is required");
  if (!fs::is_directory(dir)) throw UsageError("data directory not found: " + dir);
  std::vector<scenario::Scenario> out;
  for (const auto & p : metrics::scenario_files(dir)) out.push_back(scenario::load_scenario(p));
  if (out.empty()) throw UsageError("data directory holds no scenarios: " + dir);
  return out;
}

std::string fmt(const char * f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const RunConfig & rc, int num, std::ostream & out)
{
  if (num < 1) throw UsageError("--num must be at least 1");
  require_out(rc);
  const fs::path dir = rc.out;
  make_dir(dir);
  const auto scenes = scenario::synth_scenarios(num, rc.seed);
  ordered_json files = ordered_json::array();
  for (const auto & s : scenes) {
    const std::string name = s.scenario_id + ".json";
    scenario::save_scenario(s, dir / name);
    files.push_back(name);
  }
  ordered_json manifest;
  manifest["seed"] = rc.seed;
  manifest["count"] = num;
  manifest["files"] = files;
  scenario::write_file_atomic(dir / "manifest.json", dump(manifest));
  out << "wrote " << num << " scenarios to " << dir.string() << "\n";
  return kOk;
}

// ------------------------------------------------------------- tokenize

int cmd_tokenize(const RunConfig & rc, const std::string & path, const std::string & direction,
                 std::ostream & out)
{
  std::vector<kinematics::Direction> dirs;
  if (direction == "forward" || direction == "both") dirs.push_back(kinematics::Direction::kForward);
  if (direction == "reverse" || direction == "both") dirs.push_back(kinematics::Direction::kReverse);
  const auto s = scenario::load_scenario(path);
  kinematics::TokenSpace ts = rc.model.token_space();
  ts.check();
  std::string text;
  for (const auto & a : s.agents) {
    const auto [first, last] = kinematics::longest_valid_run(a.states);
    if (first < 0) continue;
    for (auto dir : dirs) {
      const auto tt = kinematics::tokenize_states(a.states, first, last, {a.length, a.width}, dir, ts);
      ordered_json j;
      j["agent_id"] = a.id;
      j["direction"] = dir == kinematics::Direction::kForward ? "forward" : "reverse";
      ordered_json toks = ordered_json::array();
      for (const auto & z : tt.tokens) toks.push_back(z.id);
      j["tokens"] = toks;
      j["contour_errors"] = tt.contour_errors;
      text += j.dump() + "\n";
    }
  }
  if (rc.out.empty()) {
    out << text;
  } else {
    scenario::write_file_atomic(rc.out, text);
  }
  return kOk;
}

// ---------------------------------------------------------------- train

int cmd_train(RunConfig rc, bool grad_check_first, std::ostream & out)
{
  const auto data = load_dir(rc.data);
  require_out(rc);
  rc.model.seed = rc.seed;
  rc.model.check();
  const fs::path dir = rc.out;
  make_dir(dir);

  if (grad_check_first) {
    bmt::GradCheckOptions gopt;
    gopt.seed = rc.seed;
    gopt.throw_on_failure = true;
    const auto report = bmt::grad_check(bmt::tiny_config(rc.seed), gopt);
    out << report.summary() << "\n";
  }

  scenario::write_file_atomic(dir / "run_config.json", dump(to_json(rc)));
  auto result = bmt::train(data, rc.model, [&](const bmt::TrainLogRow & row) {
    out << "step " << row.step << " loss " << fmt("%.6f", row.loss) << " acc_fwd "
        << fmt("%.4f", row.accuracy_fwd) << " acc_rev " << fmt("%.4f", row.accuracy_rev) << "\n";
  });
  bmt::save_checkpoint(result.model, (dir / "model.ckpt").string());
  scenario::write_file_atomic(dir / "train_log.csv", bmt::training_log_csv(result.log));
  out << "final_loss " << fmt("%.6f", result.final.loss) << "\n";
  out << "perplexity " << fmt("%.6f", result.final.perplexity) << "\n";
  return kOk;
}

// ------------------------------------------------------------- generate

struct GenerateFlags
{
  std::string scenario;
  bool top_p_given = false;
  bool temperature_given = false;
};

int cmd_generate(const RunConfig & rc, const GenerateFlags & g, bool config_has_model,
                 std::ostream & out)
{
  const auto mode = adversary::generation_mode_from_string(rc.mode);
  if (!mode) throw UsageError("unknown --mode " + rc.mode);
  if (rc.num_modes < 1) throw UsageError("--num-modes must be at least 1");
  if (rc.max_resamples < 0) throw UsageError("--max-resamples must be non-negative");
  if (rc.checkpoint.empty()) throw UsageError("--checkpoint is required");
  require_out(rc);

  std::vector<fs::path> inputs;
  if (!g.scenario.empty()) {
    inputs.push_back(g.scenario);
  } else if (!rc.data.empty()) {
    if (!fs::is_directory(rc.data)) throw UsageError("data directory not found: " + rc.data);
    inputs = metrics::scenario_files(rc.data);
  } else {
    throw UsageError("--scenario or --data is required");
  }
  if (inputs.empty()) throw UsageError("no input scenarios");

  const bmt::BmtModel model =
      bmt::load_checkpoint(rc.checkpoint, config_has_model ? &rc.model : nullptr);
  bmt::RolloutOptions ropt = bmt::RolloutOptions::from(model.config());
  if (config_has_model || g.top_p_given) ropt.top_p = rc.model.top_p;
  if (config_has_model || g.temperature_given) ropt.temperature = rc.model.temperature;
  if (!(ropt.temperature > 0.0)) throw UsageError("--temperature must be positive");

  const fs::path dir = rc.out;
  make_dir(dir);

  struct PerScenario
  {
    std::vector<std::string> files;
    int accepted = 0;
    int hits = 0;
  };
  std::vector<PerScenario> per(inputs.size());
  std::vector<scenario::Scenario> scenes;
  for (const auto & p : inputs) scenes.push_back(scenario::load_scenario(p));

  parallel_for(static_cast<int>(scenes.size()), rc.jobs, [&](int i) {
    Rng rng(Rng::mix_seed(rc.seed, static_cast<std::uint64_t>(i)));
    const auto results = adversary::generate_batch(scenes[i], rc.num_modes, *mode, model, ropt, rng,
                                                   rc.max_resamples);
    PerScenario & ps = per[i];
    for (std::size_t k = 0; k < results.size(); ++k) {
      const auto & r = results[k];
      const std::string stem = scenes[i].scenario_id + "_mode" + std::to_string(k);
      scenario::save_scenario(r.scenario, dir / (stem + ".json"));
      scenario::write_file_atomic(dir / (stem + ".sidecar.json"), dump(adversary::sidecar_json(r)));
      ps.files.push_back(stem + ".json");
      if (r.accepted) ++ps.accepted;
      const int ego = r.scenario.ego_index();
      const int t = r.spec.t_c;
      if (ego >= 0 && r.adv().states[t].valid &&
          metrics::box_overlap(metrics::box_of(r.scenario.agents[ego], t), metrics::box_of(r.adv(), t))) {
        ++ps.hits;
      }
    }
  });

  int total = 0;
  int accepted = 0;
  int hits = 0;
  ordered_json files = ordered_json::array();
  for (const auto & ps : per) {
    for (const auto & f : ps.files) files.push_back(f);
    total += static_cast<int>(ps.files.size());
    accepted += ps.accepted;
    hits += ps.hits;
  }
  ordered_json manifest;
  manifest["seed"] = rc.seed;
  manifest["mode"] = rc.mode;
  manifest["num_modes"] = rc.num_modes;
  manifest["max_resamples"] = rc.max_resamples;
  manifest["top_p"] = ropt.top_p;
  manifest["temperature"] = ropt.temperature;
  manifest["num_inputs"] = static_cast<int>(inputs.size());
  manifest["files"] = files;
  scenario::write_file_atomic(dir / "manifest.json", dump(manifest));

  out << "generated " << total << " scenarios from " << inputs.size() << " inputs: accept_rate "
      << fmt("%.4f", total ? static_cast<double>(accepted) / total : 0.0) << " attack_success "
      << fmt("%.4f", total ? static_cast<double>(hits) / total : 0.0) << "\n";
  return kOk;
}

// ------------------------------------------------------------- evaluate

int cmd_evaluate(const RunConfig & rc, const std::string & pred, const std::string & gt,
                 std::ostream & out)
{
  if (pred.empty() || gt.empty()) throw UsageError("--pred and --gt are required");
  for (const auto & d : {pred, gt}) {
    if (!fs::is_directory(d)) throw UsageError("directory not found: " + d);
  }
  metrics::EvalOptions opt;
  opt.jobs = rc.jobs;
  opt.seed = rc.seed;
  const auto report = metrics::evaluate(fs::path(pred), fs::path(gt), opt);
  const std::string csv = metrics::report_csv(report);
  if (!rc.out.empty()) scenario::write_file_atomic(rc.out, csv);
  out << csv;
  return kOk;
}

// ----------------------------------------------------------------- plot

int cmd_plot(const RunConfig & rc, const std::string & path, const PlotOptions & popt)
{
  if (path.empty()) throw UsageError("--scenario is required");
  require_out(rc);
  const auto s = scenario::load_scenario(path);
  scenario::write_file_atomic(rc.out, render_svg(s, popt));
  return kOk;
}

}  // namespace

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  CLI::App app{"revsim: adversarial driving scenarios from a bidirectional motion-token model"};
  app.name("revsim");
  app.require_subcommand(1);

  // synth
  auto * synth = app.add_subcommand("synth", "Write seeded synthetic scenarios and a manifest");
  ConfigFlags synth_f(synth);
  add_common(synth_f, "Output directory");
  int synth_num = 0;
  synth->add_option("--num", synth_num, "Number of scenarios")->required();

  // tokenize
  auto * tok = app.add_subcommand("tokenize", "Dump motion tokens of a scenario as JSONL");
  ConfigFlags tok_f(tok);
  add_common(tok_f, "Output JSONL file (stdout if omitted)");
  tok_f.add("--bins", f_bins, "Token bins per axis (odd)");
  std::string tok_scenario;
  std::string tok_direction = "both";
  tok->add_option("--scenario", tok_scenario, "Scenario JSON file")->required();
  tok->add_option("--direction", tok_direction, "forward, reverse or both")
      ->check(CLI::IsMember({"forward", "reverse", "both"}))
      ->capture_default_str();

  // train
  auto * train = app.add_subcommand("train", "Train the motion-token model");
  ConfigFlags train_f(train);
  add_common(train_f, "Output directory (model.ckpt, train_log.csv, run_config.json)");
  train_f.add("--data", f_data, "Directory of training scenarios");
  train_f.add("--steps", f_steps, "Optimizer steps");
  train_f.add("--lr", f_lr, "Peak learning rate");
  train_f.add("--batch-size", f_batch, "Scenes per batch");
  train_f.add("--log-interval", f_log_interval, "Steps per log row");
  bool grad_check_first = false;
  train->add_flag("--grad-check", grad_check_first,
                  "Run the finite-difference gradient check first; abort on failure");

  // generate
  auto * gen = app.add_subcommand("generate", "Insert adversarial agents into scenarios");
  ConfigFlags gen_f(gen);
  add_common(gen_f, "Output directory");
  gen_f.add("--checkpoint", f_checkpoint, "Model checkpoint");
  gen_f.add("--data", f_data, "Directory of input scenarios");
  gen_f.add("--num-modes", f_num_modes, "Adversarial variants per scenario");
  gen_f.add("--mode", f_mode, "replay, closed_loop_reverse or forward_refine");
  gen_f.add("--max-resamples", f_max_resamples, "Attempts per variant before keeping a rejected one");
  auto * top_p_opt = gen_f.add("--top-p", f_top_p, "Nucleus mass (0 = greedy)");
  auto * temp_opt = gen_f.add("--temperature", f_temperature, "Sampling temperature");
  GenerateFlags gflags;
  gen->add_option("--scenario", gflags.scenario, "Single input scenario (instead of --data)");

  // evaluate
  auto * ev = app.add_subcommand("evaluate", "Score generated scenarios against recorded ones");
  ConfigFlags ev_f(ev);
  add_common(ev_f, "Report CSV path (printed either way)");
  std::string ev_pred;
  std::string ev_gt;
  ev->add_option("--pred", ev_pred, "Directory of generated scenarios")->required();
  ev->add_option("--gt", ev_gt, "Directory of recorded scenarios")->required();

  // plot
  auto * plot = app.add_subcommand("plot", "Render a scenario as a bird's-eye SVG");
  ConfigFlags plot_f(plot);
  add_common(plot_f, "Output SVG file");
  std::string plot_scenario;
  PlotOptions popt;
  plot->add_option("--scenario", plot_scenario, "Scenario JSON file")->required();
  plot->add_option("--stride", popt.stride, "Draw every n-th step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  plot->add_option("--adv-id", popt.adv_id, "Agent id drawn as the adversary")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_f.finish(), synth_num, out);
    if (tok->parsed()) return cmd_tokenize(tok_f.finish(), tok_scenario, tok_direction, out);
    if (train->parsed()) return cmd_train(train_f.finish(), grad_check_first, out);
    if (gen->parsed()) {
      const RunConfig rc = gen_f.finish();
      gflags.top_p_given = gen_f.given(top_p_opt);
      gflags.temperature_given = gen_f.given(temp_opt);
      return cmd_generate(rc, gflags, gen_f.config_has_model(), out);
    }
    if (ev->parsed()) return cmd_evaluate(ev_f.finish(), ev_pred, ev_gt, out);
    if (plot->parsed()) return cmd_plot(plot_f.finish(), plot_scenario, popt);
  } catch (const UsageError & e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument & e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError & e) {
    err << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError & e) {
    err << "parse error: " << e.what() << "\n";
    return kIo;
  } catch (const SchemaError & e) {
    err << "schema error: " << e.what() << "\n";
    return kIo;
  } catch (const DivergenceError & e) {
    err << "training diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const GradCheckFailure & e) {
    err << "gradient check failed: " << e.what() << "\n";
    return kDivergence;
  } catch (const CheckpointError & e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kCheckpoint;
  } catch (const MissingPairError & e) {
    err << "pairing error: " << e.what() << "\n";
    return kPairing;
  } catch (const metrics::AlignmentError & e) {
    err << "pairing error: " << e.what() << "\n";
    return kPairing;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}

}  // namespace revsim::cli
