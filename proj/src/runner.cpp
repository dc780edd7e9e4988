#include "tecausal/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tecausal/error.hpp"
#include "tecausal/random.hpp"
#include "tecausal/util.hpp"

namespace tecausal {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const char* key) const { return node_.contains(key); }

  Section child(const char* key) {
    used_.insert(key);
    return Section(node_.at(key), join(key));
  }

  void read(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(join(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  void read(const char* key, double& out) {
    if (const json* v = take(key)) out = as_double(*v, join(key));
  }

  void read(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(join(key) + " must be true or false");
      out = v->get<bool>();
    }
  }

  void read(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) out = as_unsigned(*v, join(key));
  }

  void read(const char* key, unsigned& out) {
    if (const json* v = take(key)) {
      const auto value = as_unsigned(*v, join(key));
      if (value > 4096) throw ConfigError(join(key) + " is unreasonably large");
      out = static_cast<unsigned>(value);
    }
  }

  void read_size(const char* key, std::size_t& out) {
    if (const json* v = take(key)) out = static_cast<std::size_t>(as_unsigned(*v, join(key)));
  }

  void read(const char* key, std::optional<double>& out) {
    if (const json* v = take(key)) {
      if (v->is_null()) {
        out.reset();
      } else {
        out = as_double(*v, join(key));
      }
    }
  }

  void read_size(const char* key, std::optional<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (v->is_null()) {
        out.reset();
      } else {
        out = static_cast<std::size_t>(as_unsigned(*v, join(key)));
      }
    }
  }

  void read(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(join(key) + " must be an array of numbers");
      out.clear();
      for (const auto& x : *v) out.push_back(as_double(x, join(key)));
    }
  }

  void read_sizes(const char* key, std::vector<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(join(key) + " must be an array of integers");
      out.clear();
      for (const auto& x : *v) out.push_back(static_cast<std::size_t>(as_unsigned(x, join(key))));
    }
  }

  void read(const char* key, std::vector<std::string>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(join(key) + " must be an array of strings");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_string()) throw ConfigError(join(key) + " must be an array of strings");
        out.push_back(x.get<std::string>());
      }
    }
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("unknown config key '" + join(it.key().c_str()) + "'");
    }
  }

 private:
  const json* take(const char* key) {
    used_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string where() const { return path_.empty() ? "config" : path_; }
  std::string join(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

  static double as_double(const json& v, const std::string& name) {
    if (!v.is_number()) throw ConfigError(name + " must be a number");
    return v.get<double>();
  }

  static std::uint64_t as_unsigned(const json& v, const std::string& name) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) throw ConfigError(name + " must be a non-negative integer");
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
    }
    throw ConfigError(name + " must be a non-negative integer");
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

}  // namespace

std::size_t ExperimentConfig::rank_r() const {
  return profile.rank_r.value_or(std::max<std::size_t>(1, graph.dim / 2));
}

NoiseSpec ExperimentConfig::noise_spec() const { return parse_noise_kind(noise.kind, noise.nu); }

ProfileParams ExperimentConfig::profile_params() const {
  return ProfileParams{graph.dim, profile.steps, profile.environments, rank_r(), profile.drift_sigma,
                       profile.subset_mode};
}

void ExperimentConfig::validate() const {
  GraphGenConfig g = graph;
  tecausal::validate(g);
  if (profile.steps < 1) throw ConfigError("profile.steps must be at least 1");
  if (profile.environments < 1) throw ConfigError("profile.environments must be at least 1");
  const std::size_t r = rank_r();
  if (r < 1 || r > graph.dim) {
    throw ConfigError("profile.rank_r = " + std::to_string(r) + " must satisfy 1 <= r <= d = " +
                      std::to_string(graph.dim));
  }
  if (!(profile.drift_sigma >= 0.0) || !std::isfinite(profile.drift_sigma)) {
    throw ConfigError("profile.drift_sigma must be >= 0");
  }
  noise_spec().require_finite_variance();
  if (n_per_bin < 2) throw ConfigError("data.n_per_bin must be at least 2");
  estimator.validate();
  if (!(metrics.tau >= 0.0)) throw ConfigError("metrics.tau must be >= 0");
  for (double t : metrics.tau_sweep) {
    if (!(t >= 0.0)) throw ConfigError("metrics.tau_sweep entries must be >= 0");
  }
  for (std::size_t d : table2.dims) {
    if (d < 2) throw ConfigError("table2.dims entries must be at least 2");
  }
  if (table2.seeds < 1) throw ConfigError("table2.seeds must be at least 1");
  NoiseSpec::student_t(table2.nu).require_finite_variance();
  static const std::set<std::string> known{"moments", "frobenius", "penalty", "convergence", "crowding", "minimax"};
  for (const auto& e : complexity.experiments) {
    if (!known.count(e)) throw ConfigError("unknown complexity experiment '" + e + "'");
  }
  auto check_nus = [](const std::vector<double>& nus, const char* name) {
    for (double nu : nus) {
      if (nu == 4.0) {
        throw ConfigError(std::string(name) + " contains nu = 4, the singularity of kappa = (nu-2)/(nu-4)");
      }
      if (!(nu > 4.0) || !std::isfinite(nu)) {
        throw ConfigError(std::string(name) + " entries must be finite and > 4; got " + format_double(nu));
      }
    }
  };
  check_nus(complexity.penalty_nus, "complexity.penalty_nus");
  check_nus(complexity.near_four_nus, "complexity.near_four_nus");
  check_nus(complexity.convergence_nus, "complexity.convergence_nus");
  check_nus(complexity.moment_nus, "complexity.moment_nus");
  check_nus(complexity.frobenius_nus, "complexity.frobenius_nus");
  check_nus(complexity.minimax_nus, "complexity.minimax_nus");
  if (complexity.n_min < 2 || complexity.n_max < complexity.n_min || complexity.n_points < 2) {
    throw ConfigError("complexity N grid needs 2 <= n_min <= n_max and n_points >= 2");
  }
  if (!(complexity.minimax_delta > 0.0)) throw ConfigError("complexity.minimax_delta must be positive");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  ExperimentConfig cfg;
  Section top(root, "");
  top.read("seed", cfg.seed);
  top.read("threads", cfg.threads);
  if (top.has("output")) {
    Section s = top.child("output");
    s.read("dir", cfg.out_dir);
    s.finish();
  }
  if (top.has("graph")) {
    Section s = top.child("graph");
    s.read_size("dim", cfg.graph.dim);
    s.read("sparsity", cfg.graph.sparsity);
    s.read("weight_low", cfg.graph.weight_low);
    s.read("weight_high", cfg.graph.weight_high);
    s.finish();
  }
  if (top.has("profile")) {
    Section s = top.child("profile");
    s.read_size("steps", cfg.profile.steps);
    s.read_size("environments", cfg.profile.environments);
    s.read_size("rank_r", cfg.profile.rank_r);
    s.read("drift_sigma", cfg.profile.drift_sigma);
    std::string mode = to_string(cfg.profile.subset_mode);
    s.read("subset_mode", mode);
    cfg.profile.subset_mode = parse_subset_mode(mode);
    s.finish();
  }
  if (top.has("noise")) {
    Section s = top.child("noise");
    s.read("kind", cfg.noise.kind);
    s.read("nu", cfg.noise.nu);
    s.finish();
  }
  if (top.has("data")) {
    Section s = top.child("data");
    s.read_size("n_per_bin", cfg.n_per_bin);
    s.finish();
  }
  if (top.has("estimator")) {
    Section s = top.child("estimator");
    auto& e = cfg.estimator;
    s.read("ridge", e.ridge);
    std::string split = to_string(e.split_rule);
    s.read("split_rule", split);
    e.split_rule = parse_split_rule(split);
    s.read("eig_tol", e.eig_tol);
    s.read("epsilon", e.epsilon);
    s.read("delta", e.delta);
    s.read("c_const", e.c_const);
    std::string policy = to_string(e.phase1_policy);
    s.read("phase1_policy", policy);
    e.phase1_policy = parse_feasibility_policy(policy);
    s.read("prune", e.prune);
    s.read("oracle", cfg.oracle);
    s.finish();
  }
  if (top.has("metrics")) {
    Section s = top.child("metrics");
    s.read("tau", cfg.metrics.tau);
    s.read("tau_sweep", cfg.metrics.tau_sweep);
    s.finish();
  }
  if (top.has("table2")) {
    Section s = top.child("table2");
    s.read_sizes("dims", cfg.table2.dims);
    s.read_size("seeds", cfg.table2.seeds);
    s.read("nu", cfg.table2.nu);
    s.finish();
  }
  if (top.has("complexity")) {
    Section s = top.child("complexity");
    auto& c = cfg.complexity;
    s.read("experiments", c.experiments);
    s.read_size("dim", c.dim);
    s.read_size("n_min", c.n_min);
    s.read_size("n_max", c.n_max);
    s.read_size("n_points", c.n_points);
    s.read("penalty_nus", c.penalty_nus);
    s.read("near_four_nus", c.near_four_nus);
    s.read_size("penalty_trials", c.penalty_trials);
    s.read("convergence_nus", c.convergence_nus);
    s.read_size("convergence_trials", c.convergence_trials);
    s.read("moment_nus", c.moment_nus);
    s.read_size("moment_samples", c.moment_samples);
    s.read("frobenius_nus", c.frobenius_nus);
    s.read_size("frobenius_n", c.frobenius_n);
    s.read_size("frobenius_trials", c.frobenius_trials);
    s.read_sizes("crowding_dims", c.crowding_dims);
    s.read_size("crowding_trials", c.crowding_trials);
    s.read_sizes("minimax_dims", c.minimax_dims);
    s.read("minimax_nus", c.minimax_nus);
    s.read("minimax_delta", c.minimax_delta);
    s.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file '" + path + "'");
  }
  return parse_config(text);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const auto& e = cfg.estimator;
  const auto& c = cfg.complexity;
  json doc = {
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"output", {{"dir", cfg.out_dir}}},
      {"graph",
       {{"dim", cfg.graph.dim},
        {"sparsity", cfg.graph.sparsity},
        {"weight_low", cfg.graph.weight_low},
        {"weight_high", cfg.graph.weight_high}}},
      {"profile",
       {{"steps", cfg.profile.steps},
        {"environments", cfg.profile.environments},
        {"rank_r", cfg.rank_r()},
        {"drift_sigma", cfg.profile.drift_sigma},
        {"subset_mode", to_string(cfg.profile.subset_mode)}}},
      {"noise", {{"kind", cfg.noise.kind}, {"nu", cfg.noise.nu}}},
      {"data", {{"n_per_bin", cfg.n_per_bin}}},
      {"estimator",
       {{"ridge", e.ridge ? json(*e.ridge) : json(nullptr)},
        {"split_rule", to_string(e.split_rule)},
        {"eig_tol", e.eig_tol},
        {"epsilon", e.epsilon},
        {"delta", e.delta},
        {"c_const", e.c_const ? json(*e.c_const) : json(nullptr)},
        {"phase1_policy", to_string(e.phase1_policy)},
        {"prune", e.prune},
        {"oracle", cfg.oracle}}},
      {"metrics", {{"tau", cfg.metrics.tau}, {"tau_sweep", cfg.metrics.tau_sweep}}},
      {"table2", {{"dims", cfg.table2.dims}, {"seeds", cfg.table2.seeds}, {"nu", cfg.table2.nu}}},
      {"complexity",
       {{"experiments", c.experiments},
        {"dim", c.dim},
        {"n_min", c.n_min},
        {"n_max", c.n_max},
        {"n_points", c.n_points},
        {"penalty_nus", c.penalty_nus},
        {"near_four_nus", c.near_four_nus},
        {"penalty_trials", c.penalty_trials},
        {"convergence_nus", c.convergence_nus},
        {"convergence_trials", c.convergence_trials},
        {"moment_nus", c.moment_nus},
        {"moment_samples", c.moment_samples},
        {"frobenius_nus", c.frobenius_nus},
        {"frobenius_n", c.frobenius_n},
        {"frobenius_trials", c.frobenius_trials},
        {"crowding_dims", c.crowding_dims},
        {"crowding_trials", c.crowding_trials},
        {"minimax_dims", c.minimax_dims},
        {"minimax_nus", c.minimax_nus},
        {"minimax_delta", c.minimax_delta}}},
  };
  return doc.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) { return hex_digest(config_to_json(cfg)); }

// ---------------------------------------------------------------------------
// Manifest and helpers

RunManifest write_run_manifest(const std::string& dir, const std::string& command, const ExperimentConfig& cfg,
                               const std::vector<std::string>& files, double seconds) {
  RunManifest m;
  m.command = command;
  m.config_hash = config_hash(cfg);
  m.seed = cfg.seed;
  m.wall_clock_seconds = seconds;
  json outputs = json::array();
  for (const auto& f : files) {
    m.outputs.push_back({f, hex_digest(read_file((fs::path(dir) / f).string()))});
    outputs.push_back({{"file", f}, {"hash", m.outputs.back().hash}});
  }
  json doc = {{"artifact", "tecausal"},
              {"version", m.version},
              {"command", command},
              {"config_hash", m.config_hash},
              {"seed", m.seed},
              {"wall_clock_seconds", seconds},
              {"outputs", outputs}};
  write_file((fs::path(dir) / "run_manifest.json").string(), doc.dump(2) + "\n");
  return m;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_output(const ExperimentConfig& cfg, std::vector<std::string>& files, const std::string& name,
                  const std::string& contents) {
  write_file((fs::path(cfg.out_dir) / name).string(), contents);
  files.push_back(name);
}

void finish_run(const ExperimentConfig& cfg, std::vector<std::string>& files, const std::string& command,
                Clock::time_point start) {
  write_output(cfg, files, "resolved_config.json", config_to_json(cfg));
  write_run_manifest(cfg.out_dir, command, cfg, files, seconds_since(start));
  files.push_back("run_manifest.json");
}

EstimatorConfig estimator_config(const ExperimentConfig& cfg) {
  EstimatorConfig e = cfg.estimator;
  e.threads = cfg.threads;
  return e;
}

std::string num(double x) { return format_double(x); }

std::string nu_label(double nu) { return std::isinf(nu) ? "inf" : format_double(nu); }

}  // namespace

Scenario make_scenario(const ExperimentConfig& cfg, std::size_t dim, std::uint64_t seed) {
  GraphGenConfig g = cfg.graph;
  g.dim = dim;
  g.seed = rng::derive(seed, "graph");
  ProfileParams pp = cfg.profile_params();
  pp.dim = dim;
  pp.rank_r = cfg.profile.rank_r.value_or(std::max<std::size_t>(1, dim / 2));
  if (pp.rank_r > dim) throw ConfigError("profile.rank_r exceeds d = " + std::to_string(dim));
  return Scenario{generate_random_dag(g), make_profile(pp, rng::derive(seed, "profile"))};
}

// ---------------------------------------------------------------------------
// Commands

std::vector<std::string> cmd_generate(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  cfg.validate();
  const Scenario sc = make_scenario(cfg, cfg.graph.dim, cfg.seed);
  const Dataset data = generate_dataset(sc.graph, sc.profile, cfg.noise_spec(), cfg.n_per_bin,
                                        rng::derive(cfg.seed, "data"));
  export_dataset(cfg.out_dir, data, sc.profile, &sc.graph);
  std::vector<std::string> files{"manifest.json", "truth.csv"};
  for (std::size_t e = 0; e < data.environments(); ++e) {
    for (std::size_t t = 0; t < data.steps(); ++t) {
      files.push_back("env" + std::to_string(e) + "_t" + std::to_string(t) + ".csv");
    }
  }
  finish_run(cfg, files, "generate", start);
  return files;
}

std::vector<std::string> cmd_recover(const ExperimentConfig& cfg, const std::string& dataset_dir) {
  const auto start = Clock::now();
  cfg.validate();
  const LoadedDataset loaded = import_dataset(dataset_dir);
  const EstimatorConfig est = estimator_config(cfg);
  RecoveryResult result;
  if (cfg.oracle) {
    if (!loaded.truth) throw DataError("oracle mode needs truth.csv in the dataset directory");
    result = recover_graph_oracle(*loaded.truth, loaded.profile, est);
  } else {
    result = recover_graph(loaded.data, est);
  }
  fs::create_directories(cfg.out_dir);
  std::vector<std::string> files;
  write_output(cfg, files, "recovery.json", recovery_to_json(result, loaded.data.meta().noise, cfg.metrics.tau));
  write_output(cfg, files, "edges.csv", edges_csv(result.adjacency_est, cfg.metrics.tau));
  finish_run(cfg, files, "recover", start);
  return files;
}

std::vector<std::string> cmd_evaluate(const ExperimentConfig& cfg, const std::string& truth,
                                      const std::string& result) {
  const auto start = Clock::now();
  cfg.validate();
  const std::string truth_path = fs::is_directory(truth) ? (fs::path(truth) / "truth.csv").string() : truth;
  const std::string result_path = fs::is_directory(result) ? (fs::path(result) / "recovery.json").string() : result;
  if (!fs::exists(truth_path)) throw DataError("truth graph not found at '" + truth_path + "'");
  if (!fs::exists(result_path)) throw DataError("recovery result not found at '" + result_path + "'");
  const WeightedAdjacency true_graph = load_adjacency(truth_path);
  const std::string text = read_file(result_path);
  const Matrix estimate = adjacency_from_recovery_json(text);
  std::string noise = "unknown";
  try {
    noise = json::parse(text).at("noise").at("kind").get<std::string>();
  } catch (const json::exception&) {
  }
  std::vector<double> taus = cfg.metrics.tau_sweep;
  if (taus.empty()) taus.push_back(cfg.metrics.tau);
  std::string csv = metrics_csv_header() + "\n";
  for (double tau : taus) {
    csv += metrics_csv_row(0, true_graph.dim(), noise, evaluate(true_graph, estimate, tau)) + "\n";
  }
  fs::create_directories(cfg.out_dir);
  std::vector<std::string> files;
  write_output(cfg, files, "metrics.csv", csv);
  finish_run(cfg, files, "evaluate", start);
  return files;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Table2Result run_table2(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& dims = cfg.table2.dims;
  const std::size_t seeds = cfg.table2.seeds;
  const NoiseSpec kinds[2] = {NoiseSpec::gaussian(), NoiseSpec::student_t(cfg.table2.nu)};
  EstimatorConfig est = estimator_config(cfg);
  est.threads = 1;

  Table2Result out;
  out.runs.resize(dims.size() * seeds * 2);
  parallel_for(dims.size() * seeds, cfg.threads, [&](std::size_t job) {
    const std::size_t di = job / seeds, run = job % seeds;
    const std::size_t d = dims[di];
    const std::uint64_t run_seed = rng::derive(cfg.seed, "table2", {d, run});
    const Scenario sc = make_scenario(cfg, d, run_seed);
    for (std::size_t k = 0; k < 2; ++k) {
      Table2Run& rec = out.runs[job * 2 + k];
      rec.run = run;
      rec.dim = d;
      rec.noise = kinds[k].name();
      Matrix estimate = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      try {
        // Same data seed for both kinds: the Student-t draws rescale the
        // Gaussian ones.
        const Dataset data = generate_dataset(sc.graph, sc.profile, kinds[k], cfg.n_per_bin,
                                              rng::derive(run_seed, "data"));
        estimate = recover_graph(data, est).adjacency_est;
      } catch (const Error& ex) {
        rec.status = std::string(to_string(ex.kind()));
      }
      rec.report = evaluate(sc.graph, estimate, cfg.metrics.tau);
    }
  });
  for (std::size_t di = 0; di < dims.size(); ++di) {
    Table2Row row;
    row.dim = dims[di];
    for (std::size_t k = 0; k < 2; ++k) {
      std::vector<double> shd_values;
      double f1_sum = 0.0, audrc_sum = 0.0;
      for (std::size_t run = 0; run < seeds; ++run) {
        const auto& r = out.runs[(di * seeds + run) * 2 + k].report;
        shd_values.push_back(static_cast<double>(r.shd));
        f1_sum += r.f1;
        audrc_sum += r.audrc;
      }
      const double n = static_cast<double>(seeds);
      (k == 0 ? row.gaussian_shd : row.student_shd) = median(shd_values);
      (k == 0 ? row.gaussian_f1 : row.student_f1) = f1_sum / n;
      (k == 0 ? row.gaussian_audrc : row.student_audrc) = audrc_sum / n;
    }
    out.rows.push_back(row);
  }
  return out;
}

std::string table2_csv(const Table2Result& result) {
  std::string csv = "d,gaussian_shd,gaussian_f1,gaussian_audrc,student_shd,student_f1,student_audrc\n";
  for (const auto& r : result.rows) {
    csv += std::to_string(r.dim) + "," + num(r.gaussian_shd) + "," + num(r.gaussian_f1) + "," +
           num(r.gaussian_audrc) + "," + num(r.student_shd) + "," + num(r.student_f1) + "," + num(r.student_audrc) +
           "\n";
  }
  return csv;
}

std::string table2_runs_csv(const Table2Result& result) {
  std::string csv = metrics_csv_header() + ",status\n";
  for (const auto& r : result.runs) csv += metrics_csv_row(r.run, r.dim, r.noise, r.report) + "," + r.status + "\n";
  return csv;
}

std::vector<std::string> cmd_table2(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  const Table2Result result = run_table2(cfg);
  fs::create_directories(cfg.out_dir);
  std::vector<std::string> files;
  write_output(cfg, files, "table2.csv", table2_csv(result));
  write_output(cfg, files, "table2_runs.csv", table2_runs_csv(result));
  finish_run(cfg, files, "table2", start);
  return files;
}

namespace {

std::string penalty_figure_csv(const PenaltyReport& rep) {
  std::string csv = "nu,gamma_hat,gamma_frobenius,gamma_theory,near_singular\n";
  for (std::size_t i = 0; i < rep.nu_grid.size(); ++i) {
    csv += num(rep.nu_grid[i]) + "," + num(rep.empirical_gamma[i]) + "," + num(rep.frobenius_gamma[i]) + "," +
           num(rep.theoretical_gamma[i]) + "," + (rep.near_singular[i] ? "1" : "0") + "\n";
  }
  return csv;
}

void penalty_rows(const PenaltyReport& rep, std::string& csv) {
  for (std::size_t i = 0; i < rep.nu_grid.size(); ++i) {
    for (std::size_t n = 0; n < rep.n_grid.size(); ++n) {
      csv += "penalty," + num(rep.nu_grid[i]) + "," + std::to_string(rep.n_grid[n]) + "," +
             num(rep.gamma_by_n[i][n]) + "," + num(rep.theoretical_gamma[i]) + ",,\n";
      csv += "penalty_frobenius," + num(rep.nu_grid[i]) + "," + std::to_string(rep.n_grid[n]) + "," +
             num(rep.frobenius_gamma_by_n[i][n]) + "," + num(rep.theoretical_gamma[i]) + ",,\n";
    }
    csv += "penalty," + num(rep.nu_grid[i]) + ",all," + num(rep.empirical_gamma[i]) + "," +
           num(rep.theoretical_gamma[i]) + "," + num(rep.student_slopes[i]) + ",\n";
    csv += "penalty_frobenius," + num(rep.nu_grid[i]) + ",all," + num(rep.frobenius_gamma[i]) + "," +
           num(rep.theoretical_gamma[i]) + "," + num(rep.student_slopes[i]) + ",\n";
  }
}

}  // namespace

std::vector<std::string> cmd_complexity(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  cfg.validate();
  const auto& c = cfg.complexity;
  auto wants = [&](const char* name) {
    return std::find(c.experiments.begin(), c.experiments.end(), name) != c.experiments.end();
  };
  fs::create_directories(cfg.out_dir);
  std::vector<std::string> files;
  const auto n_grid = log_spaced_sizes(c.n_min, c.n_max, c.n_points);
  std::string summary = "experiment,nu,n,gamma_hat,gamma_theory,slope,intercept_gap\n";

  if (wants("moments")) {
    std::string csv = "nu,sigma_jj,sigma_kk,j_equals_k,theoretical,empirical,mc_stderr,z_score,samples\n";
    const std::pair<double, double> sigmas[2] = {{1.0, 1.0}, {2.0, 0.5}};
    std::size_t point = 0;
    for (double nu : c.moment_nus) {
      for (bool same : {true, false}) {
        for (const auto& [sjj, skk] : sigmas) {
          const MomentCheck m =
              moment_check(nu, sjj, skk, same, c.moment_samples, rng::derive(cfg.seed, "moments", {point++}),
                           cfg.threads);
          csv += num(nu) + "," + num(m.sigma_jj) + "," + num(m.sigma_kk) + "," + (same ? "1" : "0") + "," +
                 num(m.theoretical) + "," + num(m.empirical) + "," + num(m.mc_stderr) + "," + num(m.z_score()) +
                 "," + std::to_string(m.samples) + "\n";
        }
      }
    }
    write_output(cfg, files, "moments.csv", csv);
  }

  if (wants("frobenius")) {
    std::string csv = "noise,nu,d,n,trials,formula,mc_mean,mc_stderr,relative_error\n";
    std::vector<NoiseSpec> specs{NoiseSpec::gaussian()};
    for (double nu : c.frobenius_nus) specs.push_back(NoiseSpec::student_t(nu));
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const FrobeniusCheck f =
          frobenius_check(specs[i], Vector::Ones(static_cast<Eigen::Index>(c.dim)), c.frobenius_n, c.frobenius_trials,
                          rng::derive(cfg.seed, "frobenius", {i}), cfg.threads);
      csv += specs[i].name() + "," + nu_label(specs[i].dof) + "," + std::to_string(c.dim) + "," +
             std::to_string(c.frobenius_n) + "," + std::to_string(c.frobenius_trials) + "," + num(f.formula) + "," +
             num(f.mc_mean) + "," + num(f.mc_stderr) + "," + num(f.relative_error) + "\n";
    }
    write_output(cfg, files, "frobenius.csv", csv);
  }

  if (wants("penalty")) {
    PenaltyParams p{c.dim, n_grid, c.penalty_nus, c.penalty_trials, false, rng::derive(cfg.seed, "penalty"),
                    cfg.threads};
    const PenaltyReport wide = penalty_experiment(p);
    penalty_rows(wide, summary);
    write_output(cfg, files, "fig1b.csv", penalty_figure_csv(wide));
    p.nu_grid = c.near_four_nus;
    p.seed = rng::derive(cfg.seed, "penalty-near-four");
    const PenaltyReport near = penalty_experiment(p);
    write_output(cfg, files, "fig1a.csv", penalty_figure_csv(near));
  }

  if (wants("convergence")) {
    ConvergenceParams p{c.dim, n_grid, c.convergence_nus, c.convergence_trials, false,
                        rng::derive(cfg.seed, "convergence"), cfg.threads};
    const ConvergenceReport rep = convergence_experiment(p);
    std::string csv = "series,nu,n,mean_loss,theory_loss\n";
    for (const auto& s : rep.series) {
      const std::string label = std::isinf(s.nu) ? "gaussian" : "student_t";
      for (std::size_t n = 0; n < rep.n_grid.size(); ++n) {
        csv += label + "," + nu_label(s.nu) + "," + std::to_string(rep.n_grid[n]) + "," + num(s.mean_loss[n]) + "," +
               num(s.theory_loss[n]) + "\n";
      }
      summary += "convergence," + nu_label(s.nu) + ",all," + num(std::exp(s.intercept_gap)) + "," +
                 num(tail_penalty(s.nu)) + "," + num(s.slope) + "," + num(s.intercept_gap) + "\n";
    }
    write_output(cfg, files, "fig7.csv", csv);
  }

  if (wants("crowding")) {
    CrowdingParams p;
    p.d_grid = c.crowding_dims;
    p.trials = c.crowding_trials;
    p.steps = cfg.profile.steps;
    p.environments = cfg.profile.environments;
    p.sparsity = cfg.graph.sparsity;
    p.weight_low = cfg.graph.weight_low;
    p.weight_high = cfg.graph.weight_high;
    p.drift_sigma = cfg.profile.drift_sigma;
    p.n_per_bin = cfg.n_per_bin;
    p.noise = cfg.noise_spec();
    p.seed = rng::derive(cfg.seed, "crowding");
    p.threads = cfg.threads;
    const CrowdingReport rep = crowding_experiment(p);
    std::string spectra = "d,trial,index,eigenvalue\n";
    for (const auto& run : rep.runs) {
      for (std::size_t i = 0; i < run.spectrum.size(); ++i) {
        spectra += std::to_string(run.dim) + "," + std::to_string(run.trial) + "," + std::to_string(i) + "," +
                   num(run.spectrum[i]) + "\n";
      }
    }
    std::string gaps = "d,mean_gap,normalized_mean_gap\n";
    for (std::size_t i = 0; i < rep.d_grid.size(); ++i) {
      gaps += std::to_string(rep.d_grid[i]) + "," + num(rep.mean_gaps[i]) + "," + num(rep.normalized_mean_gaps[i]) +
              "\n";
    }
    write_output(cfg, files, "fig2_spectra.csv", spectra);
    write_output(cfg, files, "fig2_gaps.csv", gaps);
    write_output(cfg, files, "crowding_summary.csv",
                 "statistic,value\nspearman_raw," + num(rep.spearman_raw) + "\nspearman_normalized," +
                     num(rep.spearman_normalized) + "\n");
  }

  if (wants("minimax")) {
    std::string csv = "d,nu,delta,bound\n";
    for (std::size_t d : c.minimax_dims) {
      for (double nu : c.minimax_nus) {
        csv += std::to_string(d) + "," + num(nu) + "," + num(c.minimax_delta) + "," +
               num(minimax_bound(d, nu, c.minimax_delta)) + "\n";
      }
      csv += std::to_string(d) + ",inf," + num(c.minimax_delta) + "," +
             num(minimax_bound(d, std::numeric_limits<double>::infinity(), c.minimax_delta)) + "\n";
    }
    write_output(cfg, files, "minimax.csv", csv);
  }

  write_output(cfg, files, "complexity.csv", summary);
  finish_run(cfg, files, "complexity", start);
  return files;
}

}  // namespace tecausal
