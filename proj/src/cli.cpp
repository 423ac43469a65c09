// Copyright 2026 The pictraj Authors
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

#include "pictraj/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace pictraj::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kEvalStream = 0x6576616cULL;

// Field access with path-qualified errors.
class Fields {
 public:
  Fields(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) {
      throw ConfigError(where() + "expected an object");
    }
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& item : node_.items()) {
      if (!allowed.contains(item.key())) {
        throw ConfigError(child(item.key()) + ": unknown field");
      }
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& raw(const char* key) const { return node_.at(key); }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      return require(key, fallback);
    }
    const json& v = node_.at(key);
    if (!v.is_number()) {
      throw ConfigError(child(key) + ": expected a number");
    }
    return v.get<double>();
  }

  long long integer(const char* key, std::optional<long long> fallback = std::nullopt) const {
    if (!has(key)) {
      return require(key, fallback);
    }
    const json& v = node_.at(key);
    if (!v.is_number_integer()) {
      throw ConfigError(child(key) + ": expected an integer");
    }
    return v.get<long long>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) {
      return fallback;
    }
    const json& v = node_.at(key);
    if (!v.is_boolean()) {
      throw ConfigError(child(key) + ": expected a boolean");
    }
    return v.get<bool>();
  }

  std::string string(const char* key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      return require(key, fallback);
    }
    const json& v = node_.at(key);
    if (!v.is_string()) {
      throw ConfigError(child(key) + ": expected a string");
    }
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key) const {
    const json& v = node_.contains(key) ? node_.at(key) : throw ConfigError(child(key) + ": missing field");
    if (!v.is_array() || v.empty()) {
      throw ConfigError(child(key) + ": expected a non-empty array of numbers");
    }
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) {
        throw ConfigError(child(key) + ": expected a non-empty array of numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

 private:
  template <typename T>
  T require(const char* key, const std::optional<T>& fallback) const {
    if (!fallback) {
      throw ConfigError(child(key) + ": missing field");
    }
    return *fallback;
  }

  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  const json& node_;
  std::string path_;
};

void require_kind(const json& config, const std::string& kind) {
  Fields f(config, "");
  if (f.string("kind") != kind) {
    throw ConfigError("kind: expected '" + kind + "'");
  }
}

// Rethrows a ConfigError from a module validator with a field path prefix.
template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string header_line(std::uint64_t hash, std::uint64_t seed) {
  std::ostringstream line;
  line << "# config_hash=" << hash_hex(hash) << " seed=" << seed << '\n';
  return line.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw Error("cannot write " + path.string());
  }
  file << contents;
}

json meta(std::uint64_t hash, std::uint64_t seed) { return {{"config_hash", hash_hex(hash)}, {"seed", seed}}; }

double expected_at(const GridExperiment& ex, double g) {
  return grid::expected_objective(
      grid::sequence_closed_form_at(ex.prior, ex.objective, ex.params.lambda, ex.params.gamma, g), ex.objective);
}

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
};

json load_with_overrides(const Options& opts) {
  json config = load_config(opts.config);
  if (!config.is_object()) {
    throw ConfigError(opts.config + ": top level must be a JSON object");
  }
  if (opts.seed) {
    config["seed"] = *opts.seed;
  }
  if (opts.method) {
    config["pic"]["method"] = *opts.method;
  }
  return config;
}

int cmd_grid_verify(const Options& opts, std::ostream& out) {
  const json config = load_with_overrides(opts);
  const GridExperiment ex = parse_grid_experiment(config);
  const std::uint64_t hash = config_hash(config);
  const auto rows = grid_report(ex);
  fs::create_directories(opts.out);
  const fs::path path = fs::path(opts.out) / (fs::path(opts.config).stem().string() + "_report.csv");
  std::ostringstream csv;
  csv << header_line(hash, config.value("seed", std::uint64_t{0}));
  write_grid_report_csv(csv, rows);
  write_file(path, csv.str());
  out << path.string() << '\n';
  return kExitOk;
}

int cmd_es_run(const Options& opts, std::ostream& out) {
  const json config = load_with_overrides(opts);
  const EsExperiment ex = parse_es_experiment(config);
  const std::uint64_t hash = config_hash(config);
  const auto objective = named_objective(ex.objective, ex.scale);
  const auto history = es::es_run(
      [&](const Vector& x) { return objective(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))); },
      ex.init, ex.config, ex.generations);
  const fs::path dir = fs::path(opts.out) / hash_hex(hash);
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << header_line(hash, ex.config.seed);
  es::write_history_csv(csv, history);
  write_file(dir / "es_history.csv", csv.str());
  out << (dir / "es_history.csv").string() << '\n';
  return kExitOk;
}

void write_run_outputs(const fs::path& dir, std::uint64_t hash, const PicExperiment& ex, const RunHistory& history,
                       const LinearGaussianPolicy* policy) {
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << header_line(hash, ex.run.seed);
  write_history_csv(csv, history);
  write_file(dir / "history.csv", csv.str());
  if (policy == nullptr) {
    return;
  }
  json policy_json = to_json(*policy);
  policy_json["_meta"] = meta(hash, ex.run.seed);
  write_file(dir / "policy.json", policy_json.dump(2) + "\n");

  const Benchmark bench = make_benchmark(ex.run.system_id);
  const Evaluation e = evaluate(*policy, bench.system, bench.cost, ex.eval_samples,
                                mix_seed(ex.run.seed, kEvalStream));
  json summary = {{"_meta", meta(hash, ex.run.seed)},
                  {"method", to_string(ex.run.pic.method)},
                  {"system", ex.run.system_id},
                  {"generations", ex.run.generations},
                  {"final_mean_cost", e.mean},
                  {"final_std_cost", e.std},
                  {"final_min_cost", e.min}};
  if (bench.linear_quadratic) {
    summary["riccati_optimal_cost"] = lqr_reference(*bench.linear_quadratic).optimal_cost;
  }
  write_file(dir / "summary.json", summary.dump(2) + "\n");
}

int cmd_pic_run(const Options& opts, std::ostream& out, std::ostream& err) {
  const json config = load_with_overrides(opts);
  const PicExperiment ex = parse_pic_experiment(config);
  const std::uint64_t hash = config_hash(config);
  const fs::path dir = fs::path(opts.out) / hash_hex(hash);
  try {
    const RunResult result = run(ex.run);
    write_run_outputs(dir, hash, ex, result.history, &result.final_policy);
  } catch (const RunError& e) {
    write_run_outputs(dir, hash, ex, e.partial_history(), nullptr);
    err << "pic-run: " << e.what() << " (partial history written)\n";
    return kExitRuntime;
  }
  out << dir.string() << '\n';
  return kExitOk;
}

int cmd_compare(const Options& opts, std::ostream& out) {
  const json config = load_with_overrides(opts);
  const PicExperiment ex = parse_pic_experiment(config);
  const std::uint64_t hash = config_hash(config);
  const std::vector<PicMethod> methods = {PicMethod::kSepic, PicMethod::kPireps, PicMethod::kErpic,
                                          PicMethod::kErpicTemporal};
  std::vector<std::future<RunResult>> jobs;
  for (PicMethod method : methods) {
    RunConfig cfg = ex.run;
    cfg.pic.method = method;
    jobs.push_back(std::async(std::launch::async, [cfg] { return run(cfg); }));
  }
  std::vector<RunHistory> histories;
  for (auto& job : jobs) {
    histories.push_back(job.get().history);
  }
  const fs::path dir = fs::path(opts.out) / hash_hex(hash);
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << header_line(hash, ex.run.seed);
  write_compare_csv(csv, methods, histories);
  write_file(dir / "compare.csv", csv.str());
  out << (dir / "compare.csv").string() << '\n';
  return kExitOk;
}

}  // namespace

std::uint64_t config_hash(const json& config) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hash_hex(std::uint64_t hash) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << hash;
  return s.str();
}

json load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError(path + ": cannot open config file");
  }
  try {
    return json::parse(file);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON (" + e.what() + ")");
  }
}

std::function<double(std::span<const double>)> named_objective(const std::string& name, double scale) {
  if (name == "sphere") {
    return [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s;
    };
  }
  if (name == "scaled-quadratic") {
    return [scale](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return 0.5 * scale * s;
    };
  }
  if (name == "quartic") {
    return [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v * v * v;
      return s;
    };
  }
  if (name == "rastrigin") {
    return [](std::span<const double> x) {
      double s = 10.0 * static_cast<double>(x.size());
      for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
      return s;
    };
  }
  if (name == "linear") {
    return [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v;
      return s;
    };
  }
  throw ConfigError("unknown objective '" + name + "'");
}

GridExperiment parse_grid_experiment(const json& config) {
  require_kind(config, "grid");
  Fields f(config, "");
  f.allow_only({"kind", "lower", "upper", "shape", "objective", "objective_scale", "prior", "prior_mean", "prior_std",
                "lambda", "gamma", "generations", "fd_step", "seed"});
  std::vector<int> shape;
  for (double s : f.numbers("shape")) {
    if (s != std::floor(s)) {
      throw ConfigError("shape: expected integers");
    }
    shape.push_back(static_cast<int>(s));
  }
  grid::GridGeometry geometry =
      with_path("shape", [&] { return grid::GridGeometry(f.numbers("lower"), f.numbers("upper"), shape); });
  if (geometry.dims() > 2) {
    throw ConfigError("shape: static grids have 1 or 2 axes");
  }
  const auto objective_fn = with_path("objective", [&] {
    return named_objective(f.string("objective"), f.number("objective_scale", 1.0));
  });
  grid::GridObjective objective = grid::GridObjective::from_function(geometry, objective_fn);

  const std::string prior_kind = f.string("prior", "uniform");
  std::optional<grid::GriddedDistribution> prior;
  if (prior_kind == "uniform") {
    prior = grid::GriddedDistribution::uniform(geometry);
  } else if (prior_kind == "gaussian") {
    const auto mean = f.numbers("prior_mean");
    const double std = f.number("prior_std");
    if (mean.size() != geometry.dims() || !(std > 0.0)) {
      throw ConfigError("prior_mean: must match the grid dimension and prior_std must be > 0");
    }
    std::vector<double> log_density(geometry.cell_count());
    for (std::size_t i = 0; i < log_density.size(); ++i) {
      const auto x = geometry.center(i);
      double r2 = 0.0;
      for (std::size_t a = 0; a < x.size(); ++a) {
        r2 += (x[a] - mean[a]) * (x[a] - mean[a]);
      }
      log_density[i] = -0.5 * r2 / (std * std);
    }
    prior = grid::GriddedDistribution::from_log_density(geometry, std::move(log_density));
  } else {
    throw ConfigError("prior: expected 'uniform' or 'gaussian'");
  }
  grid::SequenceParams params{f.number("lambda"), f.number("gamma"), static_cast<int>(f.integer("generations"))};
  with_path("lambda", [&] {
    params.validate();
    return 0;
  });
  const double fd_step = f.number("fd_step", 1e-3);
  if (!(fd_step > 0.0)) {
    throw ConfigError("fd_step: must be > 0");
  }
  return {geometry, *prior, objective, params, fd_step};
}

EsExperiment parse_es_experiment(const json& config) {
  require_kind(config, "es");
  Fields f(config, "");
  f.allow_only({"kind", "objective", "objective_scale", "dimension", "init_mean", "init_sigma", "lambda", "gamma",
                "population", "generations", "seed", "threads"});
  const long long dimension = f.integer("dimension");
  if (dimension < 1) {
    throw ConfigError("dimension: must be >= 1");
  }
  Vector mean(dimension);
  if (f.has("init_mean") && f.raw("init_mean").is_array()) {
    const auto values = f.numbers("init_mean");
    if (static_cast<long long>(values.size()) != dimension) {
      throw ConfigError("init_mean: length must equal dimension");
    }
    mean = Eigen::Map<const Vector>(values.data(), dimension);
  } else {
    mean.setConstant(f.number("init_mean", 1.0));
  }
  const double sigma = f.number("init_sigma", 1.0);
  if (!(sigma > 0.0)) {
    throw ConfigError("init_sigma: must be > 0");
  }
  const std::string objective = f.string("objective");
  with_path("objective", [&] { return named_objective(objective); });
  es::EsConfig cfg;
  cfg.lambda = f.number("lambda");
  cfg.gamma = f.number("gamma");
  cfg.population = static_cast<int>(f.integer("population"));
  cfg.seed = static_cast<std::uint64_t>(f.integer("seed", 0));
  cfg.threads = static_cast<int>(f.integer("threads", 1));
  with_path("es", [&] {
    cfg.validate();
    return 0;
  });
  const long long generations = f.integer("generations");
  if (generations < 0) {
    throw ConfigError("generations: must be >= 0");
  }
  return {objective, f.number("objective_scale", 1.0),
          es::SearchDistribution(mean, sigma * sigma * Matrix::Identity(dimension, dimension)), cfg,
          static_cast<int>(generations)};
}

PicExperiment parse_pic_experiment(const json& config) {
  require_kind(config, "pic");
  Fields f(config, "");
  f.allow_only({"kind", "system", "cost", "pic", "generations", "seed", "initial_policy", "log_every", "threads",
                "eval_samples"});
  PicExperiment ex;
  RunConfig& run_cfg = ex.run;
  run_cfg.system_id = f.string("system");
  with_path("system", [&] { return make_benchmark(run_cfg.system_id).id; });
  run_cfg.cost_id = f.string("cost", "default");
  run_cfg.generations = static_cast<int>(f.integer("generations"));
  run_cfg.seed = static_cast<std::uint64_t>(f.integer("seed", 0));
  run_cfg.log_every = static_cast<int>(f.integer("log_every", 0));
  run_cfg.threads = static_cast<int>(f.integer("threads", 1));
  ex.eval_samples = static_cast<int>(f.integer("eval_samples", 1024));
  if (ex.eval_samples < 1) {
    throw ConfigError("eval_samples: must be >= 1");
  }
  if (!f.has("pic")) {
    throw ConfigError("pic: missing field");
  }
  Fields p(f.raw("pic"), "pic");
  p.allow_only({"method", "lambda", "gamma", "samples", "ridge", "cov_floor", "sepic_mean_includes_feedback"});
  PicConfig& pic = run_cfg.pic;
  pic.method = with_path("pic.method", [&] { return parse_pic_method(p.string("method", "ERPIC_TEMPORAL")); });
  pic.lambda = p.number("lambda");
  pic.gamma = p.number("gamma", 0.0);
  pic.samples = static_cast<int>(p.integer("samples"));
  pic.ridge = p.number("ridge", 1e-8);
  pic.cov_floor = p.number("cov_floor", 1e-9);
  pic.sepic_mean_includes_feedback = p.boolean("sepic_mean_includes_feedback", true);
  if (f.has("initial_policy")) {
    run_cfg.initial_policy = with_path("initial_policy", [&] { return policy_from_json(f.raw("initial_policy")); });
  }
  run_cfg.validate();
  return ex;
}

std::vector<GridReportRow> grid_report(const GridExperiment& ex) {
  const bool rates_defined = ex.params.lambda > 0.0 && ex.params.gamma > 0.0;
  const double h = ex.fd_step;
  std::vector<GridReportRow> rows;
  grid::SequenceParams p = ex.params;
  for (int g = 0; g <= ex.params.generations; ++g) {
    p.generations = g;
    const auto pi_g = grid::sequence_closed_form(ex.prior, ex.objective, p);
    GridReportRow row;
    row.g = g;
    row.expected = grid::expected_objective(pi_g, ex.objective);
    row.entropy = grid::differential_entropy(pi_g);
    row.rate_analytic = std::nan("");
    row.rate_fd = std::nan("");
    if (rates_defined) {
      const double gd = static_cast<double>(g);
      row.rate_analytic = grid::analytic_rate_expected(pi_g, ex.prior, ex.objective, p, gd);
      if (gd >= h) {
        row.rate_fd = (expected_at(ex, gd + h) - expected_at(ex, gd - h)) / (2.0 * h);
      } else {
        row.rate_fd = (-3.0 * row.expected + 4.0 * expected_at(ex, gd + h) - expected_at(ex, gd + 2.0 * h)) / (2.0 * h);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

void write_grid_report_csv(std::ostream& out, const std::vector<GridReportRow>& rows) {
  out << "g,E_f,entropy,rate_E_analytic,rate_E_fd\n" << std::setprecision(17);
  for (const auto& row : rows) {
    out << row.g << ',' << row.expected << ',' << row.entropy << ',' << row.rate_analytic << ',' << row.rate_fd
        << '\n';
  }
}

void write_compare_csv(std::ostream& out, const std::vector<PicMethod>& methods,
                       const std::vector<RunHistory>& histories) {
  out << "generation";
  for (PicMethod m : methods) {
    const std::string name = to_string(m);
    out << ',' << name << "_mean_cost," << name << "_min_cost," << name << "_ess";
  }
  out << '\n' << std::setprecision(17);
  const std::size_t rows = histories.empty() ? 0 : histories.front().rows.size();
  for (std::size_t r = 0; r < rows; ++r) {
    out << histories.front().rows[r].generation;
    for (const auto& h : histories) {
      const auto& row = h.rows.at(r);
      out << ',' << row.mean_cost << ',' << row.min_cost << ',' << row.ess;
    }
    out << '\n';
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-regularized path integral control and stochastic search toolkit", "pictraj"};
  app.require_subcommand(1);
  Options opts;
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress warnings");

  const auto add_common = [&](CLI::App* sub, bool with_method) {
    sub->add_option("--config", opts.config, "JSON experiment config")->required();
    sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", opts.seed, "Override the config seed");
    if (with_method) {
      sub->add_option("--method", opts.method, "Override pic.method (SEPIC, PIREPS, ERPIC, ERPIC_TEMPORAL)");
    }
  };
  CLI::App* grid_cmd = app.add_subcommand("grid-verify", "Search-distribution sequence report on a grid");
  CLI::App* es_cmd = app.add_subcommand("es-run", "Entropy-regularized evolutionary strategy run");
  CLI::App* pic_cmd = app.add_subcommand("pic-run", "Path integral control trajectory optimization run");
  CLI::App* cmp_cmd = app.add_subcommand("compare", "All four PIC methods on one benchmark with shared seeds");
  add_common(grid_cmd, false);
  add_common(es_cmd, false);
  add_common(pic_cmd, true);
  add_common(cmp_cmd, false);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  set_quiet(quiet);

  try {
    if (grid_cmd->parsed()) return cmd_grid_verify(opts, out);
    if (es_cmd->parsed()) return cmd_es_run(opts, out);
    if (pic_cmd->parsed()) return cmd_pic_run(opts, out, err);
    if (cmp_cmd->parsed()) return cmd_compare(opts, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace pictraj::cli
