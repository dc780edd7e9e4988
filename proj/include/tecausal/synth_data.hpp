#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tecausal/sem_model.hpp"

namespace tecausal {

struct NoiseSpec {
  enum class Kind { gaussian, student_t };

  Kind kind = Kind::gaussian;
  // Degrees of freedom; infinite for the Gaussian.
  double dof = std::numeric_limits<double>::infinity();

  static NoiseSpec gaussian() { return {}; }
  static NoiseSpec student_t(double nu) { return {Kind::student_t, nu}; }

  bool is_gaussian() const noexcept { return kind == Kind::gaussian; }
  std::string name() const;
  // Throws ConfigError unless the covariance is finite (nu > 2).
  void require_finite_variance() const;
  // Throws ConfigError unless fourth moments are finite (nu > 4).
  void require_finite_kurtosis() const;
};

NoiseSpec parse_noise_kind(const std::string& name, double nu);

// How the active r-subset of each time step is chosen.
enum class SubsetMode {
  random,       // fresh uniform r-subset per time step
  fixed,        // one uniform r-subset reused at every step
  round_robin,  // {t*r, ..., t*r + r - 1} mod d; disjoint while t*r < d
};

std::string to_string(SubsetMode mode);
SubsetMode parse_subset_mode(const std::string& name);

// Noise variances sigma^2(i, t, e) = beta(i, t) * gamma_e(i, t).
struct VarianceProfile {
  Matrix beta;                 // d x T temporal baseline
  std::vector<Matrix> gamma;   // k environments, each d x T
  std::size_t rank_r = 1;
  double drift_sigma = 0.0;
  // Active dimensions per time step, ascending.
  std::vector<std::vector<std::size_t>> active;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(beta.rows()); }
  std::size_t steps() const noexcept { return static_cast<std::size_t>(beta.cols()); }
  std::size_t environments() const noexcept { return gamma.size(); }
  Vector variances(std::size_t t, std::size_t e) const;
  // Checks shapes and positivity; throws ConfigError.
  void validate() const;
};

struct ProfileParams {
  std::size_t dim = 2;
  std::size_t steps = 10;
  std::size_t environments = 3;
  std::size_t rank_r = 1;
  double drift_sigma = 0.1;
  SubsetMode subset_mode = SubsetMode::random;
};

// Geometric random walk with beta(i, 0) = 1 and log-increments N(0, drift^2).
Matrix temporal_baseline(std::size_t dim, std::size_t steps, double drift_sigma, std::uint64_t seed);

struct EnvMultipliers {
  std::vector<Matrix> gamma;
  std::vector<std::vector<std::size_t>> active;
};

// Per step an r-subset of dimensions gets gamma = exp(N(0,1)) in every
// environment; all other dimensions keep gamma = 1.
EnvMultipliers env_multipliers(std::size_t dim, std::size_t steps, std::size_t environments,
                               std::size_t rank_r, std::uint64_t seed,
                               SubsetMode mode = SubsetMode::random);

VarianceProfile make_profile(const ProfileParams& params, std::uint64_t seed);

// Relabels variables: new dimension a is old dimension perm[a].
VarianceProfile relabel(const VarianceProfile& profile, const Permutation& perm);

// One chi-square(nu) radial variate shared by all coordinates of a t-vector.
struct RadialDraw {
  double w;
};

// n x d matrix of independent noise rows with covariance diag(sigma2).
// Student-t rows are sqrt((nu - 2) / W) * Z with W ~ chi2_nu and
// Z ~ N(0, diag(sigma2)). Z and W come from separate substreams, so the
// Gaussian and Student-t draws for one seed share the same Z.
Matrix sample_noise(const Vector& sigma2, const NoiseSpec& spec, std::size_t n, std::uint64_t seed);

struct DatasetMeta {
  std::uint64_t seed = 0;
  NoiseSpec noise;
  std::size_t dim = 0;
  std::size_t steps = 0;
  std::size_t environments = 0;
};

// Samples indexed by (environment, time bin); each bin is n_per_bin x d.
class Dataset {
 public:
  Dataset(DatasetMeta meta, std::size_t n_per_bin, std::vector<Matrix> bins);

  const DatasetMeta& meta() const noexcept { return meta_; }
  std::size_t n_per_bin() const noexcept { return n_per_bin_; }
  std::size_t dim() const noexcept { return meta_.dim; }
  std::size_t steps() const noexcept { return meta_.steps; }
  std::size_t environments() const noexcept { return meta_.environments; }
  const Matrix& bin(std::size_t e, std::size_t t) const;
  Dataset relabeled(const Permutation& perm) const;

 private:
  DatasetMeta meta_;
  std::size_t n_per_bin_;
  std::vector<Matrix> bins_;  // e * steps + t
};

// X = A eps per bin, eps drawn from substream (seed, e, t).
Dataset generate_dataset(const WeightedAdjacency& graph, const VarianceProfile& profile,
                         const NoiseSpec& spec, std::size_t n_per_bin, std::uint64_t seed);

// Exact covariance A diag(sigma2) A^T.
Matrix population_covariance(const WeightedAdjacency& graph, const Vector& sigma2);

std::string profile_hash(const VarianceProfile& profile);

// Directory layout: env{e}_t{t}.csv (0-based) plus manifest.json, and
// truth.csv when a ground-truth graph is supplied.
void export_dataset(const std::string& dir, const Dataset& data, const VarianceProfile& profile,
                    const WeightedAdjacency* truth = nullptr);

struct LoadedDataset {
  Dataset data;
  VarianceProfile profile;
  std::optional<WeightedAdjacency> truth;
};

LoadedDataset import_dataset(const std::string& dir);

}  // namespace tecausal
