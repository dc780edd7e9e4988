#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tecausal/complexity_lab.hpp"
#include "tecausal/estimator.hpp"
#include "tecausal/metrics.hpp"
#include "tecausal/sem_model.hpp"
#include "tecausal/synth_data.hpp"

namespace tecausal {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct ProfileSection {
  std::size_t steps = 12;
  std::size_t environments = 3;
  // Unset resolves to max(1, d/2).
  std::optional<std::size_t> rank_r;
  double drift_sigma = 0.1;
  SubsetMode subset_mode = SubsetMode::random;
};

struct NoiseSection {
  std::string kind = "gaussian";
  double nu = 5.0;  // used when kind is student_t
};

struct MetricsSection {
  double tau = 0.3;
  std::vector<double> tau_sweep;
};

struct Table2Section {
  std::vector<std::size_t> dims{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t seeds = 10;
  double nu = 5.0;
};

struct ComplexitySection {
  std::vector<std::string> experiments{"moments", "frobenius", "penalty", "convergence", "crowding", "minimax"};
  std::size_t dim = 5;
  std::size_t n_min = 100;
  std::size_t n_max = 5000;
  std::size_t n_points = 10;
  std::vector<double> penalty_nus{5, 6, 8, 10, 20, 50};
  std::vector<double> near_four_nus{4.25, 4.5, 4.75, 5, 5.5, 6, 7, 8};
  std::size_t penalty_trials = 100;
  std::vector<double> convergence_nus{5, 10, 20};
  std::size_t convergence_trials = 200;
  std::vector<double> moment_nus{6, 8, 12};
  std::size_t moment_samples = 10'000'000;
  std::vector<double> frobenius_nus{8};
  std::size_t frobenius_n = 1000;
  std::size_t frobenius_trials = 10'000;
  std::vector<std::size_t> crowding_dims{3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15,
                                         16, 17, 18, 19, 20, 21, 22, 23, 24, 25};
  std::size_t crowding_trials = 5;
  std::vector<std::size_t> minimax_dims{2, 5, 10, 25};
  std::vector<double> minimax_nus{5, 10, 20, 50};
  double minimax_delta = 1.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = "out";
  GraphGenConfig graph;  // graph.seed is derived from the master seed
  ProfileSection profile;
  NoiseSection noise;
  std::size_t n_per_bin = 2000;
  EstimatorConfig estimator;
  bool oracle = false;
  MetricsSection metrics;
  Table2Section table2;
  ComplexitySection complexity;

  std::size_t rank_r() const;
  NoiseSpec noise_spec() const;
  ProfileParams profile_params() const;
  // Full semantic validation; throws ConfigError.
  void validate() const;
};

// Strict JSON parse: unknown keys and wrong types are ConfigErrors.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// Every field, defaults filled; parse_config(config_to_json(c)) == c.
std::string config_to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

struct OutputRecord {
  std::string file;
  std::string hash;
};

struct RunManifest {
  std::string version = kArtifactVersion;
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
  std::vector<OutputRecord> outputs;
};

// Hashes each listed file (relative to dir) and writes run_manifest.json.
RunManifest write_run_manifest(const std::string& dir, const std::string& command, const ExperimentConfig& cfg,
                               const std::vector<std::string>& files, double seconds);

struct Scenario {
  WeightedAdjacency graph;
  VarianceProfile profile;
};

// Graph and variance profile drawn from named substreams of `seed`.
Scenario make_scenario(const ExperimentConfig& cfg, std::size_t dim, std::uint64_t seed);

// Each command writes into cfg.out_dir and returns the files it wrote.
std::vector<std::string> cmd_generate(const ExperimentConfig& cfg);
std::vector<std::string> cmd_recover(const ExperimentConfig& cfg, const std::string& dataset_dir);
// truth: adjacency CSV or a dataset directory holding truth.csv.
// result: recovery.json or a directory holding it.
std::vector<std::string> cmd_evaluate(const ExperimentConfig& cfg, const std::string& truth,
                                      const std::string& result);
std::vector<std::string> cmd_table2(const ExperimentConfig& cfg);
std::vector<std::string> cmd_complexity(const ExperimentConfig& cfg);

struct Table2Run {
  std::size_t run = 0;  // seed index
  std::size_t dim = 0;
  std::string noise;
  MetricsReport report;
  std::string status = "ok";
};

struct Table2Row {
  std::size_t dim = 0;
  double gaussian_shd = 0.0;  // median over runs
  double gaussian_f1 = 0.0;   // mean
  double gaussian_audrc = 0.0;
  double student_shd = 0.0;
  double student_f1 = 0.0;
  double student_audrc = 0.0;
};

struct Table2Result {
  std::vector<Table2Run> runs;
  std::vector<Table2Row> rows;
};

// Gaussian and Student-t runs for one (d, seed) share the graph, the
// variance profile and the underlying Gaussian draws.
Table2Result run_table2(const ExperimentConfig& cfg);

std::string table2_csv(const Table2Result& result);
std::string table2_runs_csv(const Table2Result& result);

double median(std::vector<double> values);

}  // namespace tecausal
