// Command-line front end: generate, recover, evaluate, table2, complexity.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tecausal/error.hpp"
#include "tecausal/runner.hpp"
#include "tecausal/util.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<double> tau;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON config file");
  cmd->add_option("--seed", flags.seed, "Master seed (overrides config)");
  cmd->add_option("--out", flags.out, "Output directory (overrides config)");
  cmd->add_option("--threads", flags.threads, "Worker thread cap")->check(CLI::Range(1u, 4096u));
  cmd->add_option("--tau", flags.tau, "Edge threshold (overrides config)");
}

tecausal::ExperimentConfig resolve(const CommonFlags& flags) {
  tecausal::ExperimentConfig cfg = flags.config.empty() ? tecausal::ExperimentConfig{}
                                                        : tecausal::load_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.out_dir = *flags.out;
  if (flags.threads) cfg.threads = *flags.threads;
  if (flags.tau) cfg.metrics.tau = *flags.tau;
  cfg.validate();
  return cfg;
}

int report_error(std::string_view kind, const std::string& message, int code, const nlohmann::json& extra = {}) {
  nlohmann::json err = {{"error", kind}, {"message", message}, {"exit_code", code}};
  if (extra.is_object()) err.update(extra);
  std::cerr << err.dump() << "\n";
  return code;
}

std::vector<double> parse_tau_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& token : tecausal::split(text, ',')) {
    if (!token.empty()) out.push_back(tecausal::parse_double(token));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal graph recovery from heteroskedastic multi-environment time series"};
  app.require_subcommand(1);

  CommonFlags gen_flags, rec_flags, eval_flags, t2_flags, cx_flags;
  auto* gen = app.add_subcommand("generate", "Synthesize a dataset directory");
  add_common(gen, gen_flags);

  auto* rec = app.add_subcommand("recover", "Run the estimator on a dataset directory");
  add_common(rec, rec_flags);
  std::string data_dir;
  bool oracle = false;
  rec->add_option("data", data_dir, "Dataset directory")->required();
  rec->add_flag("--oracle", oracle, "Use population covariances from the stored truth and profile");

  auto* eval = app.add_subcommand("evaluate", "Score a recovery result against the true graph");
  add_common(eval, eval_flags);
  std::string truth, result, tau_sweep;
  eval->add_option("--truth", truth, "truth.csv or dataset directory")->required();
  eval->add_option("--result", result, "recovery.json or recovery output directory")->required();
  eval->add_option("--tau-sweep", tau_sweep, "Comma-separated thresholds; one row per value");

  auto* t2 = app.add_subcommand("table2", "Structure-recovery table over d and noise kinds");
  add_common(t2, t2_flags);

  auto* cx = app.add_subcommand("complexity", "Monte Carlo sample-complexity experiments");
  add_common(cx, cx_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("config", e.what(), tecausal::exit_code(tecausal::ErrorKind::config));
  }

  try {
    std::vector<std::string> files;
    if (gen->parsed()) {
      files = tecausal::cmd_generate(resolve(gen_flags));
    } else if (rec->parsed()) {
      auto cfg = resolve(rec_flags);
      if (oracle) cfg.oracle = true;
      files = tecausal::cmd_recover(cfg, data_dir);
    } else if (eval->parsed()) {
      auto cfg = resolve(eval_flags);
      if (!tau_sweep.empty()) cfg.metrics.tau_sweep = parse_tau_list(tau_sweep);
      cfg.validate();
      files = tecausal::cmd_evaluate(cfg, truth, result);
    } else if (t2->parsed()) {
      files = tecausal::cmd_table2(resolve(t2_flags));
    } else if (cx->parsed()) {
      files = tecausal::cmd_complexity(resolve(cx_flags));
    }
    for (const auto& f : files) std::cout << f << "\n";
    return 0;
  } catch (const tecausal::IdentifiabilityError& e) {
    return report_error(tecausal::to_string(e.kind()), e.what(), tecausal::exit_code(e.kind()),
                        {{"rank", e.rank()}, {"dim", e.dim()}});
  } catch (const tecausal::AcyclicityError& e) {
    return report_error(tecausal::to_string(e.kind()), e.what(), tecausal::exit_code(e.kind()),
                        {{"cycle", e.cycle()}});
  } catch (const tecausal::Error& e) {
    return report_error(tecausal::to_string(e.kind()), e.what(), tecausal::exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
}
