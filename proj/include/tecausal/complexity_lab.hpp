#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "tecausal/estimator.hpp"
#include "tecausal/sem_model.hpp"
#include "tecausal/synth_data.hpp"

namespace tecausal {

// kappa = (nu - 2)/(nu - 4); 1 for infinite nu.
double kurtosis_factor(double nu);

// E[X_j^2 X_k^2] = kappa (1 + 2 delta_jk) Sigma_jj Sigma_kk.
double fourth_moment_theoretical(double nu, double sigma_jj, double sigma_kk, bool j_equals_k);

struct MomentCheck {
  double nu = 0.0;
  double sigma_jj = 1.0;
  double sigma_kk = 1.0;
  bool j_equals_k = false;
  double theoretical = 0.0;
  double empirical = 0.0;
  double mc_stderr = 0.0;
  std::size_t samples = 0;

  double z_score() const { return (empirical - theoretical) / mc_stderr; }
};

// Monte Carlo mean of X_0^2 X_k^2 (k = 0 or 1) over Student-t rows with
// covariance diag(sigma_jj, sigma_kk), drawn in chunks of 10^6 rows.
MomentCheck moment_check(double nu, double sigma_jj, double sigma_kk, bool j_equals_k, std::size_t samples,
                         std::uint64_t seed, unsigned threads = 1);

// (1/N)[kappa (tr Sigma)^2 + (2 kappa - 1) ||Sigma||_F^2] for diagonal Sigma.
double frobenius_error_expectation(double nu, const Matrix& sigma, std::size_t n);

// Uncentered second moment (1/N) X^T X, or the mean-centered covariance.
Matrix second_moment(const Matrix& samples, bool centered = false);

// ||Sigma_hat - Sigma||_F^2.
double frobenius_loss(const Matrix& sigma_hat, const Matrix& sigma);

struct FrobeniusCheck {
  double formula = 0.0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  double relative_error = 0.0;
};

FrobeniusCheck frobenius_check(const NoiseSpec& spec, const Vector& sigma_diag, std::size_t n, std::size_t trials,
                               std::uint64_t seed, unsigned threads = 1);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// Pearson correlation of average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// `count` integers spaced evenly in log between lo and hi (inclusive),
// deduplicated after rounding.
std::vector<std::size_t> log_spaced_sizes(std::size_t lo, std::size_t hi, std::size_t count);

struct PenaltyParams {
  std::size_t dim = 5;
  std::vector<std::size_t> n_grid;
  std::vector<double> nu_grid;
  std::size_t trials = 100;
  bool centered = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct PenaltyReport {
  std::vector<double> nu_grid;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 0;
  // Headline: ratio of the diagonal-entry error variances, per N then
  // averaged over N.
  std::vector<double> empirical_gamma;
  // Ratio of mean Frobenius losses, aggregated the same way.
  std::vector<double> frobenius_gamma;
  std::vector<double> theoretical_gamma;
  // Per-N entries, [nu][n].
  std::vector<std::vector<double>> gamma_by_n;
  std::vector<std::vector<double>> frobenius_gamma_by_n;
  std::vector<std::vector<double>> student_loss;
  std::vector<double> gaussian_loss;
  // Log-log slopes of mean Frobenius loss against N.
  double gaussian_slope = 0.0;
  std::vector<double> student_slopes;
  // True where 4 < nu < 5.
  std::vector<bool> near_singular;
};

// Each (N, trial) shares one Gaussian draw Z across all distributions; the
// Student-t samples rescale that Z by their radial variate.
PenaltyReport penalty_experiment(const PenaltyParams& params);

struct ConvergenceSeries {
  double nu = std::numeric_limits<double>::infinity();  // infinite for Gaussian
  std::vector<double> mean_loss;
  std::vector<double> theory_loss;
  double slope = 0.0;
  double intercept = 0.0;
  // Mean over N of log L_series - log L_gauss.
  double intercept_gap = 0.0;
};

struct ConvergenceParams {
  std::size_t dim = 5;
  std::vector<std::size_t> n_grid;
  std::vector<double> nu_list;
  std::size_t trials = 200;
  bool centered = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct ConvergenceReport {
  std::vector<std::size_t> n_grid;
  // Gaussian first, then one series per entry of nu_list.
  std::vector<ConvergenceSeries> series;
};

ConvergenceReport convergence_experiment(const ConvergenceParams& params);

// (d log d / Delta^2) (1 + 3/(nu - 4)); constant 1, order-level only.
double minimax_bound(std::size_t dim, double nu, double delta_gap);

struct CrowdingParams {
  std::vector<std::size_t> d_grid;
  std::size_t trials = 5;
  std::size_t steps = 12;
  std::size_t environments = 3;
  double sparsity = 0.5;
  double weight_low = 0.3;
  double weight_high = 0.9;
  double drift_sigma = 0.1;
  std::size_t n_per_bin = 2000;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct CrowdingRun {
  std::size_t dim = 0;
  std::size_t trial = 0;
  std::vector<double> spectrum;  // eigenvalues of Psi_TE, descending
  double mean_gap = 0.0;
  double normalized_mean_gap = 0.0;  // mean gap / max |eigenvalue|
};

struct CrowdingReport {
  std::vector<std::size_t> d_grid;
  std::vector<CrowdingRun> runs;
  std::vector<double> mean_gaps;             // per d, averaged over trials
  std::vector<double> normalized_mean_gaps;  // per d
  double spearman_raw = 0.0;
  double spearman_normalized = 0.0;
};

// Synthesizes data with the recovery protocol (r = max(1, d/2)) and records
// the spectrum of the aggregate precision shift for each run.
CrowdingReport crowding_experiment(const CrowdingParams& params);

}  // namespace tecausal
