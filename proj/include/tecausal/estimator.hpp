#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tecausal/sem_model.hpp"
#include "tecausal/synth_data.hpp"

namespace tecausal {

// How (time, environment) shift matrices divide into the two groups whose
// sums are jointly diagonalized. With a single time step both rules split
// on environments instead.
enum class SplitRule {
  time_parity,  // even steps form group A, odd steps group B
  contiguous,   // first ceil(T/2) steps form group A
};

std::string to_string(SplitRule rule);
SplitRule parse_split_rule(const std::string& name);

enum class FeasibilityPolicy { warn, fail };

std::string to_string(FeasibilityPolicy policy);
FeasibilityPolicy parse_feasibility_policy(const std::string& name);

struct EstimatorConfig {
  // Ridge added before inverting each covariance. Unset means
  // 1e-6 * trace(Sigma)/d per bin for sample data and 0 in oracle mode.
  std::optional<double> ridge;
  SplitRule split_rule = SplitRule::time_parity;
  double eig_tol = 1e-9;
  double epsilon = 0.25;
  double delta = 0.1;
  // Phase-1 constant; unset means 2 d^2.
  std::optional<double> c_const;
  FeasibilityPolicy phase1_policy = FeasibilityPolicy::warn;
  // Zero estimated edges that contradict the recovered causal order.
  bool prune = true;
  unsigned threads = 1;

  void validate() const;
};

// gamma(nu) = 1 + 3/(nu - 4). Infinite nu returns 1.
double tail_penalty(double nu);
double tail_penalty(const NoiseSpec& spec);

// ceil(C / (delta eps^2)) times the tail penalty, as a real number so the
// heavy-tail inflation is not rounded away.
double required_samples(double epsilon, double delta, const NoiseSpec& spec, double c_const);

// ceil(d / r).
std::size_t min_window(std::size_t dim, std::size_t rank_r);

struct FeasibilityVerdict {
  double n_gauss = 0.0;
  double penalty = 1.0;
  double n_required = 0.0;
  std::size_t n_bin = 0;
  double c_const = 0.0;
  bool oracle = false;
  bool sufficient = true;
  std::string message;
};

// Phase 1. For nu <= 4 the verdict fails with an infinite requirement.
FeasibilityVerdict check_feasibility(std::size_t dim, std::size_t n_bin, const NoiseSpec& spec,
                                     const EstimatorConfig& cfg);

// Per-bin covariances plus the pooled global second moment.
struct BinCovariances {
  std::size_t dim = 0;
  std::size_t steps = 0;
  std::size_t environments = 0;
  // Samples per bin; 0 marks exact population covariances.
  std::size_t n_per_bin = 0;
  std::vector<Matrix> local;  // e * steps + t
  Matrix global;

  const Matrix& at(std::size_t e, std::size_t t) const { return local.at(e * steps + t); }
};

// Mean-centered covariance of each bin; the global matrix is the
// uncentered second moment of all samples pooled.
BinCovariances estimate_covariances(const Dataset& data, unsigned threads = 1);

// Exact A diag(sigma^2) A^T per bin; the global matrix is their mean.
BinCovariances population_covariances(const WeightedAdjacency& graph, const VarianceProfile& profile);

// (Sigma + ridge I)^{-1}. With ridge 0 a singular Sigma raises
// ConditioningError.
Matrix local_precision(const Matrix& cov, double ridge);

// Mean-centered sample covariance of an n x d block.
Matrix sample_covariance(const Matrix& samples);

struct PrecisionShift {
  std::size_t s = 0;  // time step
  std::size_t i = 0;  // environment
  Matrix omega;
  // Magnitude of the precisions that were differenced; rank decisions use
  // tolerances relative to it.
  double reference_scale = 1.0;
};

// (Theta_local - Theta_global), symmetrized.
PrecisionShift precision_shift(const Matrix& theta_local, const Matrix& theta_global, std::size_t s = 0,
                               std::size_t i = 0);

// Phase 2 over every bin.
std::vector<PrecisionShift> precision_shifts(const BinCovariances& cov, std::optional<double> ridge,
                                             unsigned threads = 1);

// Number of eigenvalues with magnitude above tol.
std::size_t numerical_rank(const Matrix& symmetric, double tol);

struct AggregateHessian {
  Matrix psi;
  std::size_t contributing_count = 0;
  std::size_t rank = 0;
  double tolerance = 0.0;
};

AggregateHessian aggregate(const std::vector<PrecisionShift>& shifts, double eig_tol = 1e-9);

// Group index (0 = A, 1 = B) of shift (s, i).
std::size_t split_group(SplitRule rule, std::size_t s, std::size_t i, std::size_t steps,
                        std::size_t environments);

struct JointDiagonalization {
  // Columns estimate the columns of A up to order and scale: unit length,
  // largest-magnitude entry positive, ordered by descending eigenvalue.
  Matrix mixing;
  // Eigenvalues of Psi_A^{-1} Psi_B, descending.
  Vector eigenvalues;
  Matrix psi_a;
  Matrix psi_b;
  std::size_t rank = 0;
  bool crowded = false;
  std::vector<std::string> warnings;
};

// Solves Psi_B v = mu (Psi_A + Psi_B) v, a symmetric-definite pencil whose
// eigenvalues lambda = mu / (1 - mu) are those of Psi_A^{-1} Psi_B.
JointDiagonalization joint_diagonalize(const std::vector<PrecisionShift>& shifts, SplitRule rule,
                                       std::size_t steps, std::size_t environments, double eig_tol = 1e-9);

// Minimum-cost perfect matching; returns assignment[row] = column.
std::vector<std::size_t> hungarian(const Matrix& cost);

struct PermutedUnmixing {
  // Rows matched to variables and scaled to unit diagonal, original labels.
  Matrix scaled;
  // Parents-first order minimizing the squared mass above the diagonal.
  Permutation causal_order;
  // scaled(order, order): unit lower-triangular up to estimation error.
  Matrix permuted;
  double upper_mass = 0.0;
};

PermutedUnmixing permute_and_scale(const Matrix& unmixing);

// Parents-first order of a unit-diagonal unmixing matrix. Exact for
// d <= 16 (ties resolved toward the lexicographically smallest order),
// greedy with adjacent-swap refinement above that.
Permutation min_upper_mass_order(const Matrix& scaled);

struct SpectralGaps {
  std::vector<double> gaps;
  double mean_gap = 0.0;
};

// Consecutive differences of the ascending-sorted spectrum and their mean.
SpectralGaps spectral_gap_profile(std::vector<double> spectrum);

struct RecoveryResult {
  Matrix mixing_est;
  Matrix unmixing;
  Matrix unmixing_perm;
  Permutation causal_order;
  Matrix adjacency_est;
  Vector eigenvalues;
  std::vector<double> gaps;
  double mean_spectral_gap = 0.0;
  Matrix psi_te;
  std::size_t aggregate_rank = 0;
  FeasibilityVerdict feasibility;
  bool crowded = false;
  std::vector<std::string> warnings;
};

RecoveryResult recover_from_covariances(const BinCovariances& cov, const EstimatorConfig& cfg,
                                        FeasibilityVerdict feasibility);

RecoveryResult recover_graph(const Dataset& data, const EstimatorConfig& cfg);

// Population-oracle pipeline: exact covariances replace sample estimates.
RecoveryResult recover_graph_oracle(const WeightedAdjacency& graph, const VarianceProfile& profile,
                                    const EstimatorConfig& cfg);

// Matrices as row-major nested arrays.
std::string recovery_to_json(const RecoveryResult& result, const NoiseSpec& noise, double tau);

// Reads adjacency_est back from recovery_to_json output.
Matrix adjacency_from_recovery_json(const std::string& text);

// Header "source,target,weight,selected"; one row per nonzero off-diagonal
// estimate, selected = |weight| >= tau.
std::string edges_csv(const Matrix& adjacency, double tau);

}  // namespace tecausal
