#include "tecausal/complexity_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "tecausal/error.hpp"
#include "tecausal/random.hpp"
#include "tecausal/util.hpp"

namespace tecausal {

namespace {

constexpr std::size_t kMomentChunk = 1'000'000;

void require_above_four(double nu, const char* what) {
  if (std::isnan(nu) || (!std::isinf(nu) && !(nu > 4.0))) {
    throw ConfigError(std::string(what) + " needs nu > 4; nu = " + format_double(nu) +
                      " sits at or below the fourth-moment singularity");
  }
}

NoiseSpec spec_for(double nu) {
  return std::isinf(nu) ? NoiseSpec::gaussian() : NoiseSpec::student_t(nu);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Mean over coordinates of (S_jj - 1)^2.
double diagonal_loss(const Matrix& s) {
  return (s.diagonal().array() - 1.0).square().mean();
}

}  // namespace

double kurtosis_factor(double nu) {
  if (std::isinf(nu) && nu > 0) return 1.0;
  require_above_four(nu, "kurtosis factor");
  return (nu - 2.0) / (nu - 4.0);
}

double fourth_moment_theoretical(double nu, double sigma_jj, double sigma_kk, bool j_equals_k) {
  if (!(sigma_jj > 0.0) || !(sigma_kk > 0.0)) throw ConfigError("variances must be positive");
  return kurtosis_factor(nu) * (j_equals_k ? 3.0 : 1.0) * sigma_jj * sigma_kk;
}

MomentCheck moment_check(double nu, double sigma_jj, double sigma_kk, bool j_equals_k, std::size_t samples,
                         std::uint64_t seed, unsigned threads) {
  MomentCheck out;
  out.nu = nu;
  out.sigma_jj = sigma_jj;
  out.sigma_kk = j_equals_k ? sigma_jj : sigma_kk;
  out.j_equals_k = j_equals_k;
  out.theoretical = fourth_moment_theoretical(nu, out.sigma_jj, out.sigma_kk, j_equals_k);
  if (samples < 2) throw ConfigError("moment check needs at least two samples");
  out.samples = samples;

  const std::size_t chunks = (samples + kMomentChunk - 1) / kMomentChunk;
  std::vector<double> sums(chunks, 0.0), squares(chunks, 0.0);
  Vector sigma2(2);
  sigma2 << sigma_jj, sigma_kk;
  const NoiseSpec spec = spec_for(nu);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t rows = std::min(kMomentChunk, samples - c * kMomentChunk);
    const Matrix x = sample_noise(sigma2, spec, rows, rng::derive(seed, "moment-chunk", {c}));
    const Eigen::Index k = j_equals_k ? 0 : 1;
    const Eigen::ArrayXd y = x.col(0).array().square() * x.col(k).array().square();
    sums[c] = y.sum();
    squares[c] = y.square().sum();
  });
  const double n = static_cast<double>(samples);
  const double sum = std::accumulate(sums.begin(), sums.end(), 0.0);
  const double sq = std::accumulate(squares.begin(), squares.end(), 0.0);
  out.empirical = sum / n;
  const double var = std::max(0.0, (sq - n * out.empirical * out.empirical) / (n - 1.0));
  out.mc_stderr = std::sqrt(var / n);
  return out;
}

double frobenius_error_expectation(double nu, const Matrix& sigma, std::size_t n) {
  if (n < 1) throw ConfigError("N must be at least 1");
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1) throw ConfigError("Sigma must be square");
  const Matrix off = sigma - Matrix(sigma.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() > 0.0) throw ConfigError("the expectation formula assumes a diagonal Sigma");
  if ((sigma.diagonal().array() <= 0.0).any()) throw ConfigError("Sigma must be positive definite");
  const double kappa = kurtosis_factor(nu);
  const double tr = sigma.trace();
  return (kappa * tr * tr + (2.0 * kappa - 1.0) * sigma.squaredNorm()) / static_cast<double>(n);
}

Matrix second_moment(const Matrix& samples, bool centered) {
  if (centered) return sample_covariance(samples);
  if (samples.rows() < 1) throw DataError("need at least one sample");
  return (samples.transpose() * samples) / static_cast<double>(samples.rows());
}

double frobenius_loss(const Matrix& sigma_hat, const Matrix& sigma) {
  return (sigma_hat - sigma).squaredNorm();
}

FrobeniusCheck frobenius_check(const NoiseSpec& spec, const Vector& sigma_diag, std::size_t n, std::size_t trials,
                               std::uint64_t seed, unsigned threads) {
  if (trials < 2) throw ConfigError("need at least two trials");
  const double nu = spec.is_gaussian() ? std::numeric_limits<double>::infinity() : spec.dof;
  const Matrix sigma = sigma_diag.asDiagonal();
  FrobeniusCheck out;
  out.formula = frobenius_error_expectation(nu, sigma, n);
  std::vector<double> losses(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    const Matrix x = sample_noise(sigma_diag, spec, n, rng::derive(seed, "frobenius", {t}));
    losses[t] = frobenius_loss(second_moment(x), sigma);
  });
  out.mc_mean = mean(losses);
  double ss = 0.0;
  for (double l : losses) ss += (l - out.mc_mean) * (l - out.mc_mean);
  out.mc_stderr = std::sqrt(ss / static_cast<double>(trials - 1) / static_cast<double>(trials));
  out.relative_error = std::abs(out.mc_mean - out.formula) / out.formula;
  return out;
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("log-log fit needs at least two paired points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DataError("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw ConfigError("degenerate grid: all N values coincide");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

namespace {
std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("Spearman correlation needs at least two pairs");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::size_t> log_spaced_sizes(std::size_t lo, std::size_t hi, std::size_t count) {
  if (lo < 1 || hi < lo || count < 1) throw ConfigError("invalid log-spaced grid");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    const double value = std::exp(std::log(static_cast<double>(lo)) +
                                  frac * (std::log(static_cast<double>(hi)) - std::log(static_cast<double>(lo))));
    const auto n = static_cast<std::size_t>(std::llround(value));
    if (out.empty() || out.back() != n) out.push_back(n);
  }
  return out;
}

namespace {
void validate_grids(std::size_t dim, const std::vector<std::size_t>& n_grid, const std::vector<double>& nus,
                    std::size_t trials, std::size_t min_trials) {
  if (dim < 1) throw ConfigError("dimension must be positive");
  if (n_grid.empty()) throw ConfigError("N grid is empty");
  for (std::size_t n : n_grid) {
    if (n < 2) throw ConfigError("every N must be at least 2");
  }
  for (double nu : nus) {
    if (nu == 4.0) throw ConfigError("nu = 4 is the singularity of the tail penalty (kappa = (nu-2)/(nu-4))");
    require_above_four(nu, "heavy-tail experiments");
  }
  if (trials < min_trials) {
    throw ConfigError("need at least " + std::to_string(min_trials) + " trials; got " + std::to_string(trials));
  }
}
}  // namespace

PenaltyReport penalty_experiment(const PenaltyParams& params) {
  validate_grids(params.dim, params.n_grid, params.nu_grid, params.trials, 30);
  if (params.nu_grid.empty()) throw ConfigError("nu grid is empty");
  const std::size_t nn = params.n_grid.size(), nv = params.nu_grid.size(), trials = params.trials;
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(params.dim));
  const Matrix identity = Matrix::Identity(ones.size(), ones.size());

  // [n][trial] and [n][trial][nu]
  std::vector<double> g_frob(nn * trials), g_diag(nn * trials);
  std::vector<double> t_frob(nn * trials * nv), t_diag(nn * trials * nv);
  parallel_for(nn * trials, params.threads, [&](std::size_t job) {
    const std::size_t ni = job / trials, tr = job % trials;
    const std::size_t n = params.n_grid[ni];
    const std::uint64_t s = rng::derive(params.seed, "penalty", {ni, tr});
    const Matrix sg = second_moment(sample_noise(ones, NoiseSpec::gaussian(), n, s), params.centered);
    g_frob[job] = frobenius_loss(sg, identity);
    g_diag[job] = diagonal_loss(sg);
    for (std::size_t vi = 0; vi < nv; ++vi) {
      const Matrix st = second_moment(sample_noise(ones, spec_for(params.nu_grid[vi]), n, s), params.centered);
      t_frob[job * nv + vi] = frobenius_loss(st, identity);
      t_diag[job * nv + vi] = diagonal_loss(st);
    }
  });

  PenaltyReport out;
  out.nu_grid = params.nu_grid;
  out.n_grid = params.n_grid;
  out.trials = trials;
  out.gaussian_loss.assign(nn, 0.0);
  std::vector<double> gaussian_diag(nn, 0.0);
  out.student_loss.assign(nv, std::vector<double>(nn, 0.0));
  std::vector<std::vector<double>> student_diag(nv, std::vector<double>(nn, 0.0));
  for (std::size_t ni = 0; ni < nn; ++ni) {
    for (std::size_t tr = 0; tr < trials; ++tr) {
      const std::size_t job = ni * trials + tr;
      out.gaussian_loss[ni] += g_frob[job] / static_cast<double>(trials);
      gaussian_diag[ni] += g_diag[job] / static_cast<double>(trials);
      for (std::size_t vi = 0; vi < nv; ++vi) {
        out.student_loss[vi][ni] += t_frob[job * nv + vi] / static_cast<double>(trials);
        student_diag[vi][ni] += t_diag[job * nv + vi] / static_cast<double>(trials);
      }
    }
  }
  std::vector<double> ns(params.n_grid.begin(), params.n_grid.end());
  out.gaussian_slope = nn >= 2 ? fit_loglog(ns, out.gaussian_loss).slope : 0.0;
  for (std::size_t vi = 0; vi < nv; ++vi) {
    std::vector<double> diag_ratio(nn), frob_ratio(nn);
    for (std::size_t ni = 0; ni < nn; ++ni) {
      diag_ratio[ni] = student_diag[vi][ni] / gaussian_diag[ni];
      frob_ratio[ni] = out.student_loss[vi][ni] / out.gaussian_loss[ni];
    }
    out.gamma_by_n.push_back(diag_ratio);
    out.frobenius_gamma_by_n.push_back(frob_ratio);
    out.empirical_gamma.push_back(mean(diag_ratio));
    out.frobenius_gamma.push_back(mean(frob_ratio));
    out.theoretical_gamma.push_back(tail_penalty(params.nu_grid[vi]));
    out.student_slopes.push_back(nn >= 2 ? fit_loglog(ns, out.student_loss[vi]).slope : 0.0);
    out.near_singular.push_back(params.nu_grid[vi] < 5.0);
  }
  return out;
}

ConvergenceReport convergence_experiment(const ConvergenceParams& params) {
  validate_grids(params.dim, params.n_grid, params.nu_list, params.trials, 50);
  if (params.n_grid.size() < 2) throw ConfigError("convergence grid needs at least two N values");
  const double span = std::log10(static_cast<double>(*std::max_element(params.n_grid.begin(), params.n_grid.end())) /
                                 static_cast<double>(*std::min_element(params.n_grid.begin(), params.n_grid.end())));
  if (span < 1.5 - 1e-12) throw ConfigError("convergence grid must span at least 1.5 decades of N");

  std::vector<double> nus{std::numeric_limits<double>::infinity()};
  nus.insert(nus.end(), params.nu_list.begin(), params.nu_list.end());
  const std::size_t nn = params.n_grid.size(), ns = nus.size(), trials = params.trials;
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(params.dim));
  const Matrix identity = Matrix::Identity(ones.size(), ones.size());

  std::vector<double> losses(nn * trials * ns);
  parallel_for(nn * trials, params.threads, [&](std::size_t job) {
    const std::size_t ni = job / trials, tr = job % trials;
    const std::uint64_t s = rng::derive(params.seed, "convergence", {ni, tr});
    for (std::size_t si = 0; si < ns; ++si) {
      const Matrix m = second_moment(sample_noise(ones, spec_for(nus[si]), params.n_grid[ni], s), params.centered);
      losses[job * ns + si] = frobenius_loss(m, identity);
    }
  });

  ConvergenceReport out;
  out.n_grid = params.n_grid;
  std::vector<double> nvals(params.n_grid.begin(), params.n_grid.end());
  for (std::size_t si = 0; si < ns; ++si) {
    ConvergenceSeries series;
    series.nu = nus[si];
    series.mean_loss.assign(nn, 0.0);
    for (std::size_t ni = 0; ni < nn; ++ni) {
      for (std::size_t tr = 0; tr < trials; ++tr) {
        series.mean_loss[ni] += losses[(ni * trials + tr) * ns + si] / static_cast<double>(trials);
      }
      series.theory_loss.push_back(frobenius_error_expectation(nus[si], identity, params.n_grid[ni]));
    }
    const LogLogFit fit = fit_loglog(nvals, series.mean_loss);
    series.slope = fit.slope;
    series.intercept = fit.intercept;
    out.series.push_back(std::move(series));
  }
  const auto& gauss = out.series.front().mean_loss;
  for (auto& series : out.series) {
    double gap = 0.0;
    for (std::size_t ni = 0; ni < nn; ++ni) gap += std::log(series.mean_loss[ni]) - std::log(gauss[ni]);
    series.intercept_gap = gap / static_cast<double>(nn);
  }
  return out;
}

double minimax_bound(std::size_t dim, double nu, double delta_gap) {
  if (dim < 2) throw ConfigError("minimax bound needs d >= 2");
  if (!(delta_gap > 0.0)) throw ConfigError("separation Delta must be positive");
  const double d = static_cast<double>(dim);
  return d * std::log(d) / (delta_gap * delta_gap) * tail_penalty(nu);
}

CrowdingReport crowding_experiment(const CrowdingParams& params) {
  if (params.d_grid.empty()) throw ConfigError("crowding d grid is empty");
  for (std::size_t i = 0; i < params.d_grid.size(); ++i) {
    if (params.d_grid[i] < 2) throw ConfigError("crowding dimensions must be at least 2");
    if (params.d_grid[i] > 25) throw ConfigError("crowding dimensions are limited to d <= 25");
    if (i > 0 && params.d_grid[i] <= params.d_grid[i - 1]) throw ConfigError("crowding d grid must be ascending");
  }
  if (params.trials < 1) throw ConfigError("crowding needs at least one trial");
  params.noise.require_finite_variance();

  const std::size_t nd = params.d_grid.size();
  CrowdingReport out;
  out.d_grid = params.d_grid;
  out.runs.resize(nd * params.trials);
  parallel_for(out.runs.size(), params.threads, [&](std::size_t job) {
    const std::size_t di = job / params.trials, trial = job % params.trials;
    const std::size_t d = params.d_grid[di];
    const std::uint64_t s = rng::derive(params.seed, "crowding", {d, trial});
    GraphGenConfig gcfg{d, params.sparsity, params.weight_low, params.weight_high, rng::derive(s, "graph")};
    const WeightedAdjacency graph = generate_random_dag(gcfg);
    ProfileParams pp{d, params.steps, params.environments, std::max<std::size_t>(1, d / 2), params.drift_sigma,
                     SubsetMode::random};
    const VarianceProfile profile = make_profile(pp, rng::derive(s, "profile"));
    const Dataset data = generate_dataset(graph, profile, params.noise, params.n_per_bin, rng::derive(s, "data"));
    const auto shifts = precision_shifts(estimate_covariances(data), std::nullopt);
    const AggregateHessian agg = aggregate(shifts);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(agg.psi, Eigen::EigenvaluesOnly);
    CrowdingRun run;
    run.dim = d;
    run.trial = trial;
    for (Eigen::Index i = eig.eigenvalues().size() - 1; i >= 0; --i) run.spectrum.push_back(eig.eigenvalues()(i));
    run.mean_gap = spectral_gap_profile(run.spectrum).mean_gap;
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    run.normalized_mean_gap = top > 0.0 ? run.mean_gap / top : 0.0;
    out.runs[job] = std::move(run);
  });
  std::vector<double> dims;
  for (std::size_t di = 0; di < nd; ++di) {
    double raw = 0.0, norm = 0.0;
    for (std::size_t t = 0; t < params.trials; ++t) {
      raw += out.runs[di * params.trials + t].mean_gap;
      norm += out.runs[di * params.trials + t].normalized_mean_gap;
    }
    out.mean_gaps.push_back(raw / static_cast<double>(params.trials));
    out.normalized_mean_gaps.push_back(norm / static_cast<double>(params.trials));
    dims.push_back(static_cast<double>(params.d_grid[di]));
  }
  if (nd >= 2) {
    out.spearman_raw = spearman(dims, out.mean_gaps);
    out.spearman_normalized = spearman(dims, out.normalized_mean_gaps);
  }
  return out;
}

}  // namespace tecausal
