#include <doctest.h>

#include <filesystem>

#include <json.hpp>

#include "tecausal/error.hpp"
#include "tecausal/runner.hpp"
#include "tecausal/util.hpp"
#include "test_support.hpp"

using namespace tecausal;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.out_dir = out.string();
  cfg.graph.dim = 3;
  cfg.graph.sparsity = 0.7;
  cfg.profile.steps = 4;
  cfg.profile.environments = 2;
  cfg.n_per_bin = 300;
  return cfg;
}

std::string file_hash(const fs::path& p) { return hex_digest(read_file(p.string())); }

}  // namespace

TEST_CASE("config: defaults validate and round-trip through JSON") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  const std::string text = config_to_json(cfg);
  const ExperimentConfig back = parse_config(text);
  CHECK(config_to_json(back) == text);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(back.rank_r() == 1);
}

TEST_CASE("config: partial file fills defaults, nested overrides apply") {
  const auto cfg = parse_config(R"({
    "seed": 17,
    "graph": {"dim": 6, "sparsity": 0.4},
    "profile": {"rank_r": 3, "subset_mode": "round_robin"},
    "noise": {"kind": "student_t", "nu": 7},
    "estimator": {"ridge": 0.01, "split_rule": "contiguous", "oracle": true},
    "metrics": {"tau_sweep": [0.1, 0.2]}
  })");
  CHECK(cfg.seed == 17);
  CHECK(cfg.graph.dim == 6);
  CHECK(cfg.rank_r() == 3);
  CHECK(cfg.profile.subset_mode == SubsetMode::round_robin);
  CHECK(cfg.noise_spec().dof == 7.0);
  CHECK(cfg.estimator.ridge.value() == 0.01);
  CHECK(cfg.estimator.split_rule == SplitRule::contiguous);
  CHECK(cfg.oracle);
  CHECK(cfg.metrics.tau_sweep.size() == 2);
  CHECK(cfg.n_per_bin == 2000);
  CHECK(parse_config(config_to_json(cfg)).estimator.ridge.value() == 0.01);
}

TEST_CASE("config: schema violations are config errors") {
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sed": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"graph": {"dims": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"graph": {"dim": "three"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"seed": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"graph": {"dim": 3}, "profile": {"rank_r": 5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise": {"kind": "cauchy"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise": {"kind": "student_t", "nu": 2}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"estimator": {"epsilon": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"complexity": {"experiments": ["bogus"]}})"), ConfigError);
  try {
    parse_config(R"({"complexity": {"penalty_nus": [4, 5]}})");
    FAIL("nu = 4 must be rejected");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("singularity") != std::string::npos);
    CHECK(exit_code(e.kind()) == 2);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("generate: files, manifest, deterministic hashes") {
  const auto a = testing::scratch_dir("runner_gen_a");
  const auto b = testing::scratch_dir("runner_gen_b");
  const auto files = cmd_generate(small_config(a));
  cmd_generate(small_config(b));
  CHECK(fs::exists(a / "manifest.json"));
  CHECK(fs::exists(a / "truth.csv"));
  CHECK(fs::exists(a / "env1_t3.csv"));
  CHECK(fs::exists(a / "resolved_config.json"));
  CHECK(fs::exists(a / "run_manifest.json"));
  for (const auto& f : files) {
    if (f == "run_manifest.json" || f == "resolved_config.json") continue;
    CHECK(file_hash(a / f) == file_hash(b / f));
  }
  const auto manifest = nlohmann::json::parse(read_file((a / "run_manifest.json").string()));
  CHECK(manifest.at("version") == kArtifactVersion);
  CHECK(manifest.at("command") == "generate");
  CHECK(manifest.at("outputs").size() == files.size() - 1);

  auto other = small_config(testing::scratch_dir("runner_gen_c"));
  other.seed = 1;
  cmd_generate(other);
  CHECK(file_hash(a / "env0_t0.csv") != file_hash(fs::path(other.out_dir) / "env0_t0.csv"));
}

TEST_CASE("resolved config re-parses to the config that produced it") {
  const auto dir = testing::scratch_dir("runner_resolved");
  const auto cfg = small_config(dir);
  cmd_generate(cfg);
  const auto back = load_config((dir / "resolved_config.json").string());
  CHECK(config_to_json(back) == config_to_json(cfg));
}

TEST_CASE("recover: sample and oracle modes, insufficient-sample warning") {
  const auto data = testing::scratch_dir("runner_rec_data");
  cmd_generate(small_config(data));

  const auto out = testing::scratch_dir("runner_rec_out");
  auto cfg = small_config(out);
  cmd_recover(cfg, data.string());
  const auto doc = nlohmann::json::parse(read_file((out / "recovery.json").string()));
  CHECK(doc.at("feasibility").at("sufficient") == false);
  bool warned = false;
  for (const auto& w : doc.at("warnings")) warned = warned || w.get<std::string>().find("Insufficient samples") != std::string::npos;
  CHECK(warned);
  CHECK(read_file((out / "edges.csv").string()).rfind("source,target,weight,selected\n", 0) == 0);

  const auto oracle_out = testing::scratch_dir("runner_rec_oracle");
  auto ocfg = small_config(oracle_out);
  ocfg.oracle = true;
  cmd_recover(ocfg, data.string());
  const Matrix est = adjacency_from_recovery_json(read_file((oracle_out / "recovery.json").string()));
  const auto truth = load_adjacency((data / "truth.csv").string());
  CHECK(testing::max_abs_diff(est, truth.weights()) <= 1e-6);

  CHECK_THROWS_AS(cmd_recover(cfg, testing::scratch_dir("runner_rec_empty").string()), DataError);
}

TEST_CASE("evaluate: perfect recovery row, tau sweep, dimension mismatch") {
  const auto data = testing::scratch_dir("runner_eval_data");
  cmd_generate(small_config(data));
  const auto rec = testing::scratch_dir("runner_eval_rec");
  auto ocfg = small_config(rec);
  ocfg.oracle = true;
  cmd_recover(ocfg, data.string());

  const auto out = testing::scratch_dir("runner_eval_out");
  auto cfg = small_config(out);
  cmd_evaluate(cfg, data.string(), rec.string());
  const auto lines = split(read_file((out / "metrics.csv").string()), '\n');
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0] == "run,d,noise,shd,f1,audrc,tau");
  CHECK(split(lines[1], ',')[3] == "0");
  CHECK(split(lines[1], ',')[4] == "1");

  cfg.metrics.tau_sweep = {0.0, 0.3, 0.6, 2.0};
  cmd_evaluate(cfg, (data / "truth.csv").string(), (rec / "recovery.json").string());
  std::size_t rows = 0;
  for (const auto& l : split(read_file((out / "metrics.csv").string()), '\n')) rows += !l.empty();
  CHECK(rows == 5);

  Matrix b = Matrix::Zero(2, 2);
  b(0, 1) = 0.5;
  save_adjacency((out / "small_truth.csv").string(), WeightedAdjacency(b));
  CHECK_THROWS_AS(cmd_evaluate(cfg, (out / "small_truth.csv").string(), rec.string()), DataError);
  CHECK_THROWS_AS(cmd_evaluate(cfg, (out / "missing.csv").string(), rec.string()), DataError);
}

TEST_CASE("table2: header, row count, determinism") {
  const auto dir = testing::scratch_dir("runner_t2");
  ExperimentConfig cfg;
  cfg.out_dir = dir.string();
  cfg.table2.dims = {2, 3};
  cfg.table2.seeds = 3;
  cfg.n_per_bin = 500;
  cmd_table2(cfg);
  const auto lines = split(read_file((dir / "table2.csv").string()), '\n');
  CHECK(lines[0] == "d,gaussian_shd,gaussian_f1,gaussian_audrc,student_shd,student_f1,student_audrc");
  CHECK(lines[1].rfind("2,", 0) == 0);
  CHECK(lines[2].rfind("3,", 0) == 0);
  const auto first = file_hash(dir / "table2_runs.csv");
  cfg.threads = 2;
  cmd_table2(cfg);
  CHECK(file_hash(dir / "table2_runs.csv") == first);
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("table2: Gaussian and Student-t runs share graph and base draws") {
  ExperimentConfig cfg;
  cfg.table2.dims = {2};
  cfg.table2.seeds = 4;
  const auto res = run_table2(cfg);
  REQUIRE(res.runs.size() == 8);
  for (std::size_t k = 0; k < 8; k += 2) {
    CHECK(res.runs[k].noise == "gaussian");
    CHECK(res.runs[k + 1].noise == "student_t");
    CHECK(res.runs[k].run == res.runs[k + 1].run);
  }
}

TEST_CASE("complexity: small run writes every file and is reproducible") {
  const auto dir = testing::scratch_dir("runner_cx");
  ExperimentConfig cfg;
  cfg.out_dir = dir.string();
  auto& c = cfg.complexity;
  c.n_min = 100;
  c.n_max = 4000;
  c.n_points = 4;
  c.penalty_nus = {5, 20};
  c.near_four_nus = {4.5, 6};
  c.penalty_trials = 30;
  c.convergence_nus = {10};
  c.convergence_trials = 50;
  c.moment_nus = {8};
  c.moment_samples = 20000;
  c.frobenius_trials = 50;
  c.frobenius_n = 200;
  c.crowding_dims = {3, 4};
  c.crowding_trials = 1;
  cfg.n_per_bin = 300;
  const auto files = cmd_complexity(cfg);
  for (const char* f : {"moments.csv", "frobenius.csv", "fig1a.csv", "fig1b.csv", "fig7.csv", "fig2_spectra.csv",
                        "fig2_gaps.csv", "crowding_summary.csv", "minimax.csv", "complexity.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(split(read_file((dir / "complexity.csv").string()), '\n')[0] ==
        "experiment,nu,n,gamma_hat,gamma_theory,slope,intercept_gap");
  std::vector<std::string> hashes;
  for (const auto& f : files)
    if (f.size() > 4 && f.substr(f.size() - 4) == ".csv") hashes.push_back(file_hash(dir / f));
  cmd_complexity(cfg);
  std::size_t k = 0;
  for (const auto& f : files)
    if (f.size() > 4 && f.substr(f.size() - 4) == ".csv") CHECK(file_hash(dir / f) == hashes[k++]);
}

TEST_CASE("error kinds map to exit codes") {
  CHECK(exit_code(ErrorKind::config) == 2);
  CHECK(exit_code(ErrorKind::data) == 3);
  CHECK(exit_code(ErrorKind::acyclicity) == 3);
  CHECK(exit_code(ErrorKind::conditioning) == 3);
  CHECK(exit_code(ErrorKind::identifiability) == 4);
  CHECK(exit_code(ErrorKind::internal) == 1);
}
