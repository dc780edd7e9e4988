#include "tecausal/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tecausal/error.hpp"
#include "tecausal/random.hpp"
#include "tecausal/util.hpp"

namespace tecausal {

namespace fs = std::filesystem;
using nlohmann::json;

std::string NoiseSpec::name() const {
  return is_gaussian() ? "gaussian" : "student_t";
}

void NoiseSpec::require_finite_variance() const {
  if (is_gaussian()) return;
  if (!(dof > 2.0)) {
    throw ConfigError("Student-t noise needs nu > 2 for a finite covariance; got nu = " + format_double(dof));
  }
}

void NoiseSpec::require_finite_kurtosis() const {
  if (is_gaussian()) return;
  if (!(dof > 4.0)) {
    throw ConfigError("fourth moments diverge at nu = " + format_double(dof) +
                      "; second-order sample complexity is infinite for nu <= 4");
  }
}

NoiseSpec parse_noise_kind(const std::string& name, double nu) {
  if (name == "gaussian") return NoiseSpec::gaussian();
  if (name == "student_t" || name == "student") return NoiseSpec::student_t(nu);
  throw ConfigError("unknown noise kind '" + name + "' (expected gaussian or student_t)");
}

std::string to_string(SubsetMode mode) {
  switch (mode) {
    case SubsetMode::random: return "random";
    case SubsetMode::fixed: return "fixed";
    case SubsetMode::round_robin: return "round_robin";
  }
  return "random";
}

SubsetMode parse_subset_mode(const std::string& name) {
  if (name == "random") return SubsetMode::random;
  if (name == "fixed") return SubsetMode::fixed;
  if (name == "round_robin") return SubsetMode::round_robin;
  throw ConfigError("unknown subset mode '" + name + "' (expected random, fixed or round_robin)");
}

Vector VarianceProfile::variances(std::size_t t, std::size_t e) const {
  const auto col = static_cast<Eigen::Index>(t);
  return beta.col(col).cwiseProduct(gamma.at(e).col(col));
}

void VarianceProfile::validate() const {
  if (beta.rows() < 1 || beta.cols() < 1) throw ConfigError("variance profile is empty");
  if (gamma.empty()) throw ConfigError("variance profile needs at least one environment");
  for (const auto& g : gamma) {
    if (g.rows() != beta.rows() || g.cols() != beta.cols()) {
      throw ConfigError("environment multipliers must match the d x T baseline shape");
    }
    if (!g.allFinite() || (g.array() <= 0.0).any()) throw ConfigError("environment multipliers must be positive");
  }
  if (!beta.allFinite() || (beta.array() <= 0.0).any()) throw ConfigError("temporal baseline must be positive");
  if (rank_r < 1 || rank_r > dim()) throw ConfigError("active rank r must satisfy 1 <= r <= d");
  if (!active.empty() && active.size() != steps()) throw ConfigError("active subsets must be listed per time step");
}

Matrix temporal_baseline(std::size_t dim, std::size_t steps, double drift_sigma, std::uint64_t seed) {
  if (steps < 1) throw ConfigError("need at least one time step");
  if (dim < 1) throw ConfigError("need at least one dimension");
  if (!(drift_sigma >= 0.0) || !std::isfinite(drift_sigma)) throw ConfigError("drift sigma must be >= 0");
  const auto d = static_cast<Eigen::Index>(dim);
  const auto T = static_cast<Eigen::Index>(steps);
  Matrix beta = Matrix::Ones(d, T);
  if (drift_sigma == 0.0) return beta;
  for (Eigen::Index i = 0; i < d; ++i) {
    auto engine = rng::make_engine(seed, "drift", {static_cast<std::uint64_t>(i)});
    std::normal_distribution<double> step(0.0, drift_sigma);
    double log_beta = 0.0;
    for (Eigen::Index t = 1; t < T; ++t) {
      log_beta += step(engine);
      beta(i, t) = std::exp(log_beta);
    }
  }
  return beta;
}

namespace {

std::vector<std::size_t> draw_subset(std::size_t dim, std::size_t r, rng::Engine& engine) {
  std::vector<std::size_t> all(dim);
  std::iota(all.begin(), all.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < r; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, dim - 1);
    std::swap(all[i], all[pick(engine)]);
  }
  std::vector<std::size_t> subset(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(r));
  std::sort(subset.begin(), subset.end());
  return subset;
}

}  // namespace

EnvMultipliers env_multipliers(std::size_t dim, std::size_t steps, std::size_t environments,
                               std::size_t rank_r, std::uint64_t seed, SubsetMode mode) {
  if (dim < 1 || steps < 1) throw ConfigError("need d >= 1 and T >= 1");
  if (environments < 1) throw ConfigError("need at least one environment");
  if (rank_r < 1 || rank_r > dim) {
    throw ConfigError("active rank r = " + std::to_string(rank_r) + " must satisfy 1 <= r <= d = " +
                      std::to_string(dim));
  }
  EnvMultipliers out;
  out.gamma.assign(environments, Matrix::Ones(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(steps)));
  out.active.reserve(steps);

  std::vector<std::size_t> fixed_subset;
  if (mode == SubsetMode::fixed) {
    auto engine = rng::make_engine(seed, "subset-fixed");
    fixed_subset = draw_subset(dim, rank_r, engine);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<std::size_t> subset;
    switch (mode) {
      case SubsetMode::random: {
        auto engine = rng::make_engine(seed, "subset", {t});
        subset = draw_subset(dim, rank_r, engine);
        break;
      }
      case SubsetMode::fixed:
        subset = fixed_subset;
        break;
      case SubsetMode::round_robin:
        for (std::size_t j = 0; j < rank_r; ++j) subset.push_back((t * rank_r + j) % dim);
        std::sort(subset.begin(), subset.end());
        break;
    }
    for (std::size_t e = 0; e < environments; ++e) {
      auto engine = rng::make_engine(seed, "gamma", {t, e});
      std::normal_distribution<double> log_gamma(0.0, 1.0);
      for (std::size_t i : subset) {
        out.gamma[e](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = std::exp(log_gamma(engine));
      }
    }
    out.active.push_back(std::move(subset));
  }
  return out;
}

VarianceProfile make_profile(const ProfileParams& params, std::uint64_t seed) {
  VarianceProfile profile;
  profile.beta = temporal_baseline(params.dim, params.steps, params.drift_sigma, rng::derive(seed, "baseline"));
  auto mult = env_multipliers(params.dim, params.steps, params.environments, params.rank_r,
                              rng::derive(seed, "multipliers"), params.subset_mode);
  profile.gamma = std::move(mult.gamma);
  profile.active = std::move(mult.active);
  profile.rank_r = params.rank_r;
  profile.drift_sigma = params.drift_sigma;
  profile.validate();
  return profile;
}

VarianceProfile relabel(const VarianceProfile& profile, const Permutation& perm) {
  const std::size_t d = profile.dim();
  if (!is_permutation(perm, d)) throw ConfigError("relabeling is not a permutation");
  std::vector<std::size_t> inverse(d);
  for (std::size_t a = 0; a < d; ++a) inverse[perm[a]] = a;
  VarianceProfile out = profile;
  for (std::size_t a = 0; a < d; ++a) {
    out.beta.row(static_cast<Eigen::Index>(a)) = profile.beta.row(static_cast<Eigen::Index>(perm[a]));
    for (std::size_t e = 0; e < profile.environments(); ++e) {
      out.gamma[e].row(static_cast<Eigen::Index>(a)) = profile.gamma[e].row(static_cast<Eigen::Index>(perm[a]));
    }
  }
  for (auto& subset : out.active) {
    for (auto& v : subset) v = inverse[v];
    std::sort(subset.begin(), subset.end());
  }
  return out;
}

Matrix sample_noise(const Vector& sigma2, const NoiseSpec& spec, std::size_t n, std::uint64_t seed) {
  if (sigma2.size() < 1) throw ConfigError("noise dimension must be positive");
  if (!sigma2.allFinite() || (sigma2.array() <= 0.0).any()) throw ConfigError("noise variances must be positive");
  spec.require_finite_variance();
  const auto d = sigma2.size();
  const Vector scale = sigma2.cwiseSqrt();
  Matrix out(static_cast<Eigen::Index>(n), d);

  auto z_engine = rng::make_engine(seed, "z");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index row = 0; row < out.rows(); ++row) {
    for (Eigen::Index j = 0; j < d; ++j) out(row, j) = scale(j) * normal(z_engine);
  }
  if (!spec.is_gaussian()) {
    auto w_engine = rng::make_engine(seed, "w");
    std::chi_squared_distribution<double> chi2(spec.dof);
    for (Eigen::Index row = 0; row < out.rows(); ++row) {
      RadialDraw radial{chi2(w_engine)};
      out.row(row) *= std::sqrt((spec.dof - 2.0) / radial.w);
    }
  }
  return out;
}

Dataset::Dataset(DatasetMeta meta, std::size_t n_per_bin, std::vector<Matrix> bins)
    : meta_(std::move(meta)), n_per_bin_(n_per_bin), bins_(std::move(bins)) {
  if (bins_.size() != meta_.steps * meta_.environments) throw DataError("dataset bin count does not match k * T");
  for (const auto& b : bins_) {
    if (static_cast<std::size_t>(b.rows()) != n_per_bin_ || static_cast<std::size_t>(b.cols()) != meta_.dim) {
      throw DataError("dataset bin has wrong shape");
    }
    if (!b.allFinite()) throw DataError("dataset contains non-finite samples");
  }
}

const Matrix& Dataset::bin(std::size_t e, std::size_t t) const {
  if (e >= meta_.environments || t >= meta_.steps) throw DataError("bin index out of range");
  return bins_[e * meta_.steps + t];
}

Dataset Dataset::relabeled(const Permutation& perm) const {
  if (!is_permutation(perm, meta_.dim)) throw ConfigError("relabeling is not a permutation");
  std::vector<Matrix> bins;
  bins.reserve(bins_.size());
  for (const auto& b : bins_) {
    Matrix out(b.rows(), b.cols());
    for (std::size_t a = 0; a < perm.size(); ++a) {
      out.col(static_cast<Eigen::Index>(a)) = b.col(static_cast<Eigen::Index>(perm[a]));
    }
    bins.push_back(std::move(out));
  }
  return Dataset(meta_, n_per_bin_, std::move(bins));
}

Dataset generate_dataset(const WeightedAdjacency& graph, const VarianceProfile& profile,
                         const NoiseSpec& spec, std::size_t n_per_bin, std::uint64_t seed) {
  profile.validate();
  if (profile.dim() != graph.dim()) throw ConfigError("graph and variance profile dimensions differ");
  if (n_per_bin < 1) throw ConfigError("n_per_bin must be positive");
  spec.require_finite_variance();
  const Matrix mixing_t = mixing_matrix(graph).values().transpose();

  DatasetMeta meta{seed, spec, graph.dim(), profile.steps(), profile.environments()};
  std::vector<Matrix> bins;
  bins.reserve(meta.steps * meta.environments);
  for (std::size_t e = 0; e < meta.environments; ++e) {
    for (std::size_t t = 0; t < meta.steps; ++t) {
      Matrix noise = sample_noise(profile.variances(t, e), spec, n_per_bin, rng::derive(seed, "bin", {e, t}));
      bins.push_back(noise * mixing_t);
    }
  }
  return Dataset(std::move(meta), n_per_bin, std::move(bins));
}

Matrix population_covariance(const WeightedAdjacency& graph, const Vector& sigma2) {
  if (static_cast<std::size_t>(sigma2.size()) != graph.dim()) throw ConfigError("variance vector has wrong length");
  const Matrix a = mixing_matrix(graph).values();
  Matrix cov = a * sigma2.asDiagonal() * a.transpose();
  // Symmetrize exactly; the product is symmetric only up to rounding.
  return (0.5 * (cov + cov.transpose())).eval();
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, std::size_t expect_rows, std::size_t expect_cols) {
  if (!rows.is_array() || rows.size() != expect_rows) throw DataError("manifest matrix has wrong row count");
  Matrix m(static_cast<Eigen::Index>(expect_rows), static_cast<Eigen::Index>(expect_cols));
  for (std::size_t i = 0; i < expect_rows; ++i) {
    if (!rows[i].is_array() || rows[i].size() != expect_cols) throw DataError("manifest matrix has wrong width");
    for (std::size_t j = 0; j < expect_cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
  }
  return m;
}

std::string bin_file_name(std::size_t e, std::size_t t) {
  return "env" + std::to_string(e) + "_t" + std::to_string(t) + ".csv";
}

std::string bin_to_csv(const Matrix& bin) {
  std::string out;
  for (Eigen::Index j = 0; j < bin.cols(); ++j) {
    if (j > 0) out += ',';
    out += "x" + std::to_string(j);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < bin.rows(); ++i) {
    for (Eigen::Index j = 0; j < bin.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(bin(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix bin_from_csv(const std::string& text, std::size_t rows, std::size_t cols, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(name + " is empty");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw DataError(name + " has fewer rows than n_per_bin");
    auto cells = split(line, ',');
    if (cells.size() != cols) throw DataError(name + " row " + std::to_string(i) + " has wrong width");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(cells[j]);
    }
  }
  return m;
}

json profile_to_json(const VarianceProfile& profile) {
  json gamma = json::array();
  for (const auto& g : profile.gamma) gamma.push_back(matrix_to_json(g));
  return {{"beta", matrix_to_json(profile.beta)},
          {"gamma", gamma},
          {"rank_r", profile.rank_r},
          {"drift_sigma", profile.drift_sigma},
          {"active", profile.active}};
}

}  // namespace

std::string profile_hash(const VarianceProfile& profile) {
  return hex_digest(profile_to_json(profile).dump());
}

void export_dataset(const std::string& dir, const Dataset& data, const VarianceProfile& profile,
                    const WeightedAdjacency* truth) {
  fs::create_directories(dir);
  const auto& meta = data.meta();
  json bins = json::array();
  for (std::size_t e = 0; e < meta.environments; ++e) {
    for (std::size_t t = 0; t < meta.steps; ++t) {
      const std::string name = bin_file_name(e, t);
      write_file((fs::path(dir) / name).string(), bin_to_csv(data.bin(e, t)));
      bins.push_back({{"env", e}, {"t", t}, {"file", name}});
    }
  }
  json manifest = {
      {"format", "tecausal-dataset"},
      {"version", 1},
      {"dims", {{"d", meta.dim}, {"T", meta.steps}, {"k", meta.environments}}},
      {"n_per_bin", data.n_per_bin()},
      {"seed", meta.seed},
      {"noise", {{"kind", meta.noise.name()}, {"nu", meta.noise.is_gaussian() ? json(nullptr) : json(meta.noise.dof)}}},
      {"profile", profile_to_json(profile)},
      {"profile_hash", profile_hash(profile)},
      {"bins", bins},
      {"truth", truth != nullptr ? json("truth.csv") : json(nullptr)},
  };
  write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  if (truth != nullptr) save_adjacency((fs::path(dir) / "truth.csv").string(), *truth);
}

LoadedDataset import_dataset(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  if (!fs::exists(manifest_path)) throw DataError("dataset manifest not found at '" + manifest_path.string() + "'");
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path.string()));
    const auto d = manifest.at("dims").at("d").get<std::size_t>();
    const auto T = manifest.at("dims").at("T").get<std::size_t>();
    const auto k = manifest.at("dims").at("k").get<std::size_t>();
    const auto n = manifest.at("n_per_bin").get<std::size_t>();
    const auto& noise_json = manifest.at("noise");
    const NoiseSpec noise = parse_noise_kind(
        noise_json.at("kind").get<std::string>(),
        noise_json.at("nu").is_null() ? std::numeric_limits<double>::infinity() : noise_json.at("nu").get<double>());

    VarianceProfile profile;
    const auto& pj = manifest.at("profile");
    profile.beta = matrix_from_json(pj.at("beta"), d, T);
    if (!pj.at("gamma").is_array() || pj.at("gamma").size() != k) throw DataError("manifest gamma must list k environments");
    for (const auto& g : pj.at("gamma")) profile.gamma.push_back(matrix_from_json(g, d, T));
    profile.rank_r = pj.at("rank_r").get<std::size_t>();
    profile.drift_sigma = pj.at("drift_sigma").get<double>();
    profile.active = pj.at("active").get<std::vector<std::vector<std::size_t>>>();
    profile.validate();
    if (manifest.contains("profile_hash") && manifest["profile_hash"].get<std::string>() != profile_hash(profile)) {
      throw DataError("profile hash mismatch; manifest has been edited or corrupted");
    }

    std::vector<Matrix> bins;
    bins.reserve(k * T);
    for (std::size_t e = 0; e < k; ++e) {
      for (std::size_t t = 0; t < T; ++t) {
        const std::string name = bin_file_name(e, t);
        bins.push_back(bin_from_csv(read_file((fs::path(dir) / name).string()), n, d, name));
      }
    }
    DatasetMeta meta{manifest.at("seed").get<std::uint64_t>(), noise, d, T, k};
    std::optional<WeightedAdjacency> truth;
    if (manifest.contains("truth") && manifest["truth"].is_string()) {
      truth = load_adjacency((fs::path(dir) / manifest["truth"].get<std::string>()).string());
      if (truth->dim() != d) throw DataError("truth graph dimension does not match the dataset");
    }
    return LoadedDataset{Dataset(std::move(meta), n, std::move(bins)), std::move(profile), std::move(truth)};
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed dataset manifest: ") + ex.what());
  }
}

}  // namespace tecausal
