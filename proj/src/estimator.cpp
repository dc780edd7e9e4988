#include "tecausal/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "tecausal/error.hpp"
#include "tecausal/util.hpp"

namespace tecausal {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDefaultRidgeFactor = 1e-6;
constexpr std::size_t kExactOrderMaxDim = 16;

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

Matrix symmetrize(const Matrix& m) { return (0.5 * (m + m.transpose())).eval(); }

}  // namespace

std::string to_string(SplitRule rule) {
  return rule == SplitRule::time_parity ? "time_parity" : "contiguous";
}

SplitRule parse_split_rule(const std::string& name) {
  if (name == "time_parity") return SplitRule::time_parity;
  if (name == "contiguous") return SplitRule::contiguous;
  throw ConfigError("unknown split rule '" + name + "' (expected time_parity or contiguous)");
}

std::string to_string(FeasibilityPolicy policy) {
  return policy == FeasibilityPolicy::warn ? "warn" : "fail";
}

FeasibilityPolicy parse_feasibility_policy(const std::string& name) {
  if (name == "warn") return FeasibilityPolicy::warn;
  if (name == "fail") return FeasibilityPolicy::fail;
  throw ConfigError("unknown phase-1 policy '" + name + "' (expected warn or fail)");
}

void EstimatorConfig::validate() const {
  if (ridge && !(*ridge >= 0.0 && std::isfinite(*ridge))) throw ConfigError("ridge must be finite and >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(eig_tol > 0.0 && eig_tol < 1.0)) throw ConfigError("eig_tol must lie in (0, 1)");
  if (c_const && !(*c_const > 0.0 && std::isfinite(*c_const))) throw ConfigError("c_const must be positive");
}

double tail_penalty(double nu) {
  if (std::isnan(nu)) throw ConfigError("degrees of freedom must be a number");
  if (std::isinf(nu) && nu > 0) return 1.0;
  if (!(nu > 4.0)) {
    throw ConfigError("tail penalty is infinite for nu = " + format_double(nu) +
                      " <= 4: fourth moments diverge and second-order estimation breaks down");
  }
  return 1.0 + 3.0 / (nu - 4.0);
}

double tail_penalty(const NoiseSpec& spec) {
  return spec.is_gaussian() ? 1.0 : tail_penalty(spec.dof);
}

double required_samples(double epsilon, double delta, const NoiseSpec& spec, double c_const) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(c_const > 0.0)) throw ConfigError("C must be positive");
  const double n_gauss = std::ceil(c_const / (delta * epsilon * epsilon));
  return n_gauss * tail_penalty(spec);
}

std::size_t min_window(std::size_t dim, std::size_t rank_r) {
  if (rank_r == 0) throw ConfigError("active rank r must be at least 1");
  if (rank_r > dim) throw ConfigError("active rank r cannot exceed d");
  return (dim + rank_r - 1) / rank_r;
}

FeasibilityVerdict check_feasibility(std::size_t dim, std::size_t n_bin, const NoiseSpec& spec,
                                     const EstimatorConfig& cfg) {
  FeasibilityVerdict v;
  v.n_bin = n_bin;
  v.c_const = cfg.c_const.value_or(2.0 * static_cast<double>(dim * dim));
  const NoiseSpec gaussian = NoiseSpec::gaussian();
  v.n_gauss = required_samples(cfg.epsilon, cfg.delta, gaussian, v.c_const);
  if (!spec.is_gaussian() && !(spec.dof > 4.0)) {
    v.penalty = kInf;
    v.n_required = kInf;
    v.sufficient = false;
    v.message = "Insufficient samples to bound error: nu = " + format_double(spec.dof) +
                " <= 4 has infinite fourth moments, so no bin size suffices";
    return v;
  }
  v.penalty = tail_penalty(spec);
  v.n_required = v.n_gauss * v.penalty;
  v.sufficient = static_cast<double>(n_bin) >= v.n_required;
  if (!v.sufficient) {
    std::ostringstream msg;
    msg << "Insufficient samples to bound error: N_bin = " << n_bin << " < N_req = " << format_double(v.n_required)
        << " (N_Gauss = " << format_double(v.n_gauss) << ", penalty = " << format_double(v.penalty)
        << "). Increase bin size.";
    v.message = msg.str();
  }
  return v;
}

Matrix sample_covariance(const Matrix& samples) {
  if (samples.rows() < 2) throw DataError("need at least two samples per bin");
  if (!samples.allFinite()) throw DataError("samples contain non-finite values");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Matrix centered = samples.rowwise() - mean;
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
  return symmetrize(cov);
}

BinCovariances estimate_covariances(const Dataset& data, unsigned threads) {
  BinCovariances out;
  out.dim = data.dim();
  out.steps = data.steps();
  out.environments = data.environments();
  out.n_per_bin = data.n_per_bin();
  const std::size_t bins = out.steps * out.environments;
  out.local.assign(bins, Matrix());
  std::vector<Matrix> second(bins);
  parallel_for(bins, threads, [&](std::size_t b) {
    const Matrix& x = data.bin(b / out.steps, b % out.steps);
    out.local[b] = sample_covariance(x);
    second[b] = x.transpose() * x;
  });
  // Reduce in bin order so the result does not depend on scheduling.
  Matrix total = Matrix::Zero(idx(out.dim), idx(out.dim));
  for (const auto& s : second) total += s;
  out.global = symmetrize(total / static_cast<double>(bins * out.n_per_bin));
  return out;
}

BinCovariances population_covariances(const WeightedAdjacency& graph, const VarianceProfile& profile) {
  profile.validate();
  if (profile.dim() != graph.dim()) throw ConfigError("graph and variance profile dimensions differ");
  BinCovariances out;
  out.dim = graph.dim();
  out.steps = profile.steps();
  out.environments = profile.environments();
  out.n_per_bin = 0;
  Matrix total = Matrix::Zero(idx(out.dim), idx(out.dim));
  for (std::size_t e = 0; e < out.environments; ++e) {
    for (std::size_t t = 0; t < out.steps; ++t) {
      out.local.push_back(population_covariance(graph, profile.variances(t, e)));
      total += out.local.back();
    }
  }
  out.global = symmetrize(total / static_cast<double>(out.local.size()));
  return out;
}

Matrix local_precision(const Matrix& cov, double ridge) {
  if (cov.rows() != cov.cols() || cov.rows() < 1) throw DataError("covariance must be a non-empty square matrix");
  if (!cov.allFinite()) throw DataError("covariance has non-finite entries");
  if (!(ridge >= 0.0)) throw ConfigError("ridge must be >= 0");
  const auto d = cov.rows();
  const Matrix regularized = symmetrize(cov) + ridge * Matrix::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(regularized);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double bottom = eig.eigenvalues().minCoeff();
  if (!(bottom > top * 1e-14) || top == 0.0) {
    throw ConditioningError("covariance is singular or indefinite (smallest eigenvalue " + format_double(bottom) +
                            "); set a positive ridge or increase the bin size");
  }
  Matrix theta = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  return symmetrize(theta);
}

PrecisionShift precision_shift(const Matrix& theta_local, const Matrix& theta_global, std::size_t s, std::size_t i) {
  if (theta_local.rows() != theta_global.rows() || theta_local.cols() != theta_global.cols()) {
    throw DataError("precision matrices have different shapes");
  }
  PrecisionShift shift;
  shift.s = s;
  shift.i = i;
  shift.omega = symmetrize(theta_local - theta_global);
  shift.reference_scale = std::max({theta_local.norm(), theta_global.norm(), std::numeric_limits<double>::min()});
  return shift;
}

std::vector<PrecisionShift> precision_shifts(const BinCovariances& cov, std::optional<double> ridge, unsigned threads) {
  if (cov.local.empty()) throw ConfigError("no bins to estimate precision shifts from");
  if (cov.n_per_bin != 0 && cov.n_per_bin <= cov.dim && ridge.value_or(1.0) == 0.0) {
    throw ConditioningError("N_bin = " + std::to_string(cov.n_per_bin) + " <= d = " + std::to_string(cov.dim) +
                            " makes every bin covariance singular; set a positive ridge");
  }
  auto resolve = [&](const Matrix& c) {
    if (ridge) return *ridge;
    return kDefaultRidgeFactor * c.trace() / static_cast<double>(c.rows());
  };
  const Matrix theta_global = local_precision(cov.global, resolve(cov.global));
  std::vector<PrecisionShift> shifts(cov.local.size());
  parallel_for(cov.local.size(), threads, [&](std::size_t b) {
    const Matrix theta = local_precision(cov.local[b], resolve(cov.local[b]));
    shifts[b] = precision_shift(theta, theta_global, b % cov.steps, b / cov.steps);
  });
  return shifts;
}

std::size_t numerical_rank(const Matrix& symmetric, double tol) {
  if (symmetric.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(symmetric), Eigen::EigenvaluesOnly);
  return static_cast<std::size_t>((eig.eigenvalues().array().abs() > tol).count());
}

AggregateHessian aggregate(const std::vector<PrecisionShift>& shifts, double eig_tol) {
  if (shifts.empty()) throw ConfigError("cannot aggregate an empty list of precision shifts");
  const auto d = shifts.front().omega.rows();
  AggregateHessian out;
  out.psi = Matrix::Zero(d, d);
  double scale = 0.0;
  for (const auto& s : shifts) {
    if (s.omega.rows() != d || s.omega.cols() != d) throw DataError("precision shifts have inconsistent dimensions");
    out.psi += s.omega;
    scale += s.reference_scale;
  }
  out.contributing_count = shifts.size();
  out.tolerance = eig_tol * scale;
  out.rank = numerical_rank(out.psi, out.tolerance);
  return out;
}

std::size_t split_group(SplitRule rule, std::size_t s, std::size_t i, std::size_t steps, std::size_t environments) {
  // A single step leaves only environments to split on.
  const bool by_env = steps == 1;
  const std::size_t index = by_env ? i : s;
  const std::size_t count = by_env ? environments : steps;
  if (rule == SplitRule::time_parity) return index % 2;
  return index < (count + 1) / 2 ? 0 : 1;
}

JointDiagonalization joint_diagonalize(const std::vector<PrecisionShift>& shifts, SplitRule rule, std::size_t steps,
                                       std::size_t environments, double eig_tol) {
  if (shifts.empty()) throw ConfigError("no precision shifts to diagonalize");
  if (steps * environments < 2) {
    throw IdentifiabilityError("a single (time, environment) bin cannot be split into two groups", 0,
                               static_cast<std::size_t>(shifts.front().omega.rows()));
  }
  const auto d = shifts.front().omega.rows();
  const auto dim = static_cast<std::size_t>(d);
  std::vector<PrecisionShift> group_a, group_b;
  for (const auto& s : shifts) {
    (split_group(rule, s.s, s.i, steps, environments) == 0 ? group_a : group_b).push_back(s);
  }
  if (group_a.empty() || group_b.empty()) {
    throw IdentifiabilityError("split rule left one group empty", 0, dim);
  }
  const AggregateHessian agg_a = aggregate(group_a, eig_tol);
  const AggregateHessian agg_b = aggregate(group_b, eig_tol);

  JointDiagonalization out;
  out.psi_a = agg_a.psi;
  out.psi_b = agg_b.psi;
  const Matrix total = symmetrize(agg_a.psi + agg_b.psi);
  const double total_tol = agg_a.tolerance + agg_b.tolerance;
  out.rank = numerical_rank(total, total_tol);
  if (out.rank < dim) {
    throw IdentifiabilityError("aggregate precision shift has rank " + std::to_string(out.rank) + " < d = " +
                                   std::to_string(dim) +
                                   ": the window carries too little variance heterogeneity; with r active "
                                   "dimensions per step at least T >= ceil(d/r) steps are required",
                               out.rank, dim);
  }
  if (agg_a.rank < dim || agg_b.rank < dim) {
    const std::size_t deficient = std::min(agg_a.rank, agg_b.rank);
    throw IdentifiabilityError("group sum " + std::string(agg_a.rank < dim ? "A" : "B") + " has rank " +
                                   std::to_string(deficient) + " < d = " + std::to_string(dim) +
                                   "; each split group must be invertible, need T >= ceil(d/r) per group",
                               deficient, dim);
  }
  // The full sum is positive definite once the rank check passes (the mean
  // of inverses dominates the inverse of the mean), so it can serve as B.
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(symmetrize(agg_b.psi), total,
                                                          Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw ConditioningError("generalized eigensolver failed; the aggregate is numerically indefinite");
  }
  const Vector mu = solver.eigenvalues();
  Matrix vectors = solver.eigenvectors();
  for (Eigen::Index j = 0; j < d; ++j) {
    vectors.col(j).normalize();
    Eigen::Index arg = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, j) < 0.0) vectors.col(j) *= -1.0;
  }

  // mu = 1 would need a singular group A, excluded above.
  const Vector lambda = mu.array() / (1.0 - mu.array());
  std::vector<Eigen::Index> order(dim);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (lambda(a) != lambda(b)) return lambda(a) > lambda(b);
    return std::lexicographical_compare(vectors.col(a).data(), vectors.col(a).data() + d, vectors.col(b).data(),
                                        vectors.col(b).data() + d);
  });
  out.mixing.resize(d, d);
  out.eigenvalues.resize(d);
  Vector mu_sorted(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    out.mixing.col(j) = vectors.col(order[static_cast<std::size_t>(j)]);
    mu_sorted(j) = mu(order[static_cast<std::size_t>(j)]);
    out.eigenvalues(j) = lambda(order[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index j = 0; j + 1 < d; ++j) {
    const double gap = std::abs(mu_sorted(j) - mu_sorted(j + 1));
    if (gap <= eig_tol * std::max(1.0, std::abs(mu_sorted(j)))) {
      out.crowded = true;
      out.warnings.push_back("eigenvalues " + std::to_string(j) + " and " + std::to_string(j + 1) +
                             " are crowded (gap " + format_double(gap) +
                             "); variance ratios coincide and the recovered order is unstable");
    }
  }
  return out;
}

std::vector<std::size_t> hungarian(const Matrix& cost) {
  // Shortest augmenting path with potentials, O(n^3).
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw ConfigError("assignment cost matrix must be square");
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(idx(i0 - 1), idx(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

namespace {

// Squared entries of row v that land above the diagonal when v is placed
// before every vertex in `later`.
double row_mass(const Matrix& sq, std::size_t v, std::uint32_t later_mask) {
  double sum = 0.0;
  for (std::size_t u = 0; u < static_cast<std::size_t>(sq.rows()); ++u) {
    if (later_mask & (1u << u)) sum += sq(idx(v), idx(u));
  }
  return sum;
}

double upper_mass(const Matrix& sq, const Permutation& order) {
  double sum = 0.0;
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) sum += sq(idx(order[a]), idx(order[b]));
  }
  return sum;
}

Permutation exact_order(const Matrix& sq) {
  const auto d = static_cast<std::size_t>(sq.rows());
  const std::uint32_t full = (d == 32) ? 0xFFFFFFFFu : ((1u << d) - 1u);
  // best[S]: least mass to order the vertices in S, given that every vertex
  // outside S is already placed before them.
  std::vector<double> best(std::size_t{1} << d, kInf);
  best[0] = 0.0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    double value = kInf;
    for (std::size_t v = 0; v < d; ++v) {
      if (!(mask & (1u << v))) continue;
      const std::uint32_t rest = mask & ~(1u << v);
      value = std::min(value, row_mass(sq, v, rest) + best[rest]);
    }
    best[mask] = value;
  }
  Permutation order;
  std::uint32_t mask = full;
  const double slack = 1e-12 * std::max(1.0, best[full]);
  while (mask != 0) {
    for (std::size_t v = 0; v < d; ++v) {
      if (!(mask & (1u << v))) continue;
      const std::uint32_t rest = mask & ~(1u << v);
      if (row_mass(sq, v, rest) + best[rest] <= best[mask] + slack) {
        order.push_back(v);
        mask = rest;
        break;
      }
    }
  }
  return order;
}

Permutation greedy_order(const Matrix& sq) {
  const auto d = static_cast<std::size_t>(sq.rows());
  std::vector<bool> placed(d, false);
  Permutation order;
  for (std::size_t step = 0; step < d; ++step) {
    std::size_t pick = d;
    double pick_mass = kInf;
    for (std::size_t v = 0; v < d; ++v) {
      if (placed[v]) continue;
      double mass = 0.0;
      for (std::size_t u = 0; u < d; ++u) {
        if (!placed[u] && u != v) mass += sq(idx(v), idx(u));
      }
      if (mass < pick_mass) {
        pick_mass = mass;
        pick = v;
      }
    }
    placed[pick] = true;
    order.push_back(pick);
  }
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t a = 0; a + 1 < d; ++a) {
      // Swapping neighbours only changes their mutual entry.
      if (sq(idx(order[a]), idx(order[a + 1])) > sq(idx(order[a + 1]), idx(order[a]))) {
        std::swap(order[a], order[a + 1]);
        improved = true;
      }
    }
  }
  return order;
}

}  // namespace

Permutation min_upper_mass_order(const Matrix& scaled) {
  if (scaled.rows() != scaled.cols()) throw ConfigError("unmixing matrix must be square");
  Matrix sq = scaled.cwiseAbs2();
  sq.diagonal().setZero();
  if (static_cast<std::size_t>(sq.rows()) <= kExactOrderMaxDim) return exact_order(sq);
  return greedy_order(sq);
}

PermutedUnmixing permute_and_scale(const Matrix& unmixing) {
  if (unmixing.rows() != unmixing.cols() || unmixing.rows() < 1) throw ConfigError("unmixing matrix must be square");
  if (!unmixing.allFinite()) throw ConditioningError("unmixing matrix has non-finite entries");
  const auto d = unmixing.rows();
  // Zero entries get a finite but prohibitive cost so the matching stays
  // well defined; picking one anyway means no zero-free diagonal exists.
  constexpr double kForbidden = 1e12;
  Matrix cost(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const double a = std::abs(unmixing(r, c));
      cost(r, c) = a > 0.0 ? -std::log(a) : kForbidden;
    }
  }
  const auto assignment = hungarian(cost);
  PermutedUnmixing out;
  out.scaled.resize(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const auto c = idx(assignment[static_cast<std::size_t>(r)]);
    const double pivot = unmixing(r, c);
    if (pivot == 0.0) {
      throw ConditioningError("degenerate unmixing: every row assignment places a zero on the diagonal");
    }
    out.scaled.row(c) = unmixing.row(r) / pivot;
  }
  out.causal_order = min_upper_mass_order(out.scaled);
  out.permuted.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      out.permuted(a, b) = out.scaled(idx(out.causal_order[static_cast<std::size_t>(a)]),
                                      idx(out.causal_order[static_cast<std::size_t>(b)]));
    }
  }
  Matrix sq = out.scaled.cwiseAbs2();
  sq.diagonal().setZero();
  out.upper_mass = upper_mass(sq, out.causal_order);
  return out;
}

SpectralGaps spectral_gap_profile(std::vector<double> spectrum) {
  if (spectrum.size() < 2) throw ConfigError("a spectral gap needs at least two eigenvalues");
  std::sort(spectrum.begin(), spectrum.end());
  SpectralGaps out;
  for (std::size_t i = 0; i + 1 < spectrum.size(); ++i) out.gaps.push_back(spectrum[i + 1] - spectrum[i]);
  out.mean_gap = std::accumulate(out.gaps.begin(), out.gaps.end(), 0.0) / static_cast<double>(out.gaps.size());
  return out;
}

RecoveryResult recover_from_covariances(const BinCovariances& cov, const EstimatorConfig& cfg,
                                        FeasibilityVerdict feasibility) {
  cfg.validate();
  RecoveryResult out;
  out.feasibility = std::move(feasibility);
  if (!out.feasibility.sufficient) {
    if (cfg.phase1_policy == FeasibilityPolicy::fail) throw DataError(out.feasibility.message);
    out.warnings.push_back(out.feasibility.message);
  }

  const auto shifts = precision_shifts(cov, cfg.ridge, cfg.threads);
  const AggregateHessian agg = aggregate(shifts, cfg.eig_tol);
  out.psi_te = agg.psi;
  out.aggregate_rank = agg.rank;

  JointDiagonalization jd = joint_diagonalize(shifts, cfg.split_rule, cov.steps, cov.environments, cfg.eig_tol);
  out.crowded = jd.crowded;
  out.warnings.insert(out.warnings.end(), jd.warnings.begin(), jd.warnings.end());
  out.mixing_est = jd.mixing;
  out.eigenvalues = jd.eigenvalues;
  const auto gaps = spectral_gap_profile({jd.eigenvalues.data(), jd.eigenvalues.data() + jd.eigenvalues.size()});
  out.gaps = gaps.gaps;
  out.mean_spectral_gap = gaps.mean_gap;

  Eigen::FullPivLU<Matrix> lu(jd.mixing);
  if (!lu.isInvertible()) throw ConditioningError("estimated mixing matrix is singular");
  out.unmixing = lu.inverse();
  PermutedUnmixing pu = permute_and_scale(out.unmixing);
  out.causal_order = pu.causal_order;
  out.unmixing_perm = pu.permuted;

  // W = I - B^T, so B = (I - W)^T in the original variable labels.
  const auto d = idx(cov.dim);
  Matrix b = (Matrix::Identity(d, d) - pu.scaled).transpose();
  b.diagonal().setZero();
  if (cfg.prune) {
    std::vector<std::size_t> position(cov.dim);
    for (std::size_t a = 0; a < cov.dim; ++a) position[out.causal_order[a]] = a;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        // b(i, j) is the edge i -> j; keep it only if i precedes j.
        if (position[static_cast<std::size_t>(i)] >= position[static_cast<std::size_t>(j)]) b(i, j) = 0.0;
      }
    }
  }
  out.adjacency_est = b;
  return out;
}

RecoveryResult recover_graph(const Dataset& data, const EstimatorConfig& cfg) {
  cfg.validate();
  const FeasibilityVerdict verdict = check_feasibility(data.dim(), data.n_per_bin(), data.meta().noise, cfg);
  const BinCovariances cov = estimate_covariances(data, cfg.threads);
  return recover_from_covariances(cov, cfg, verdict);
}

RecoveryResult recover_graph_oracle(const WeightedAdjacency& graph, const VarianceProfile& profile,
                                    const EstimatorConfig& cfg) {
  EstimatorConfig oracle_cfg = cfg;
  oracle_cfg.ridge = cfg.ridge.value_or(0.0);
  FeasibilityVerdict verdict;
  verdict.oracle = true;
  verdict.sufficient = true;
  verdict.n_required = 0.0;
  verdict.n_bin = 0;
  verdict.c_const = cfg.c_const.value_or(2.0 * static_cast<double>(graph.dim() * graph.dim()));
  verdict.message = "population covariances; sampling error is absent";
  return recover_from_covariances(population_covariances(graph, profile), oracle_cfg, verdict);
}

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string recovery_to_json(const RecoveryResult& result, const NoiseSpec& noise, double tau) {
  const auto& f = result.feasibility;
  json eig = json::array();
  for (Eigen::Index i = 0; i < result.eigenvalues.size(); ++i) eig.push_back(finite_or_null(result.eigenvalues(i)));
  json doc = {
      {"dim", result.adjacency_est.rows()},
      {"noise", {{"kind", noise.name()}, {"nu", noise.is_gaussian() ? json(nullptr) : json(noise.dof)}}},
      {"tau", tau},
      {"adjacency_est", matrix_json(result.adjacency_est)},
      {"mixing_est", matrix_json(result.mixing_est)},
      {"unmixing", matrix_json(result.unmixing)},
      {"unmixing_perm", matrix_json(result.unmixing_perm)},
      {"causal_order", result.causal_order},
      {"eigenvalues", eig},
      {"gaps", result.gaps},
      {"mean_spectral_gap", finite_or_null(result.mean_spectral_gap)},
      {"psi_te", matrix_json(result.psi_te)},
      {"aggregate_rank", result.aggregate_rank},
      {"crowded", result.crowded},
      {"feasibility",
       {{"oracle", f.oracle},
        {"n_bin", f.n_bin},
        {"n_gauss", finite_or_null(f.n_gauss)},
        {"penalty", finite_or_null(f.penalty)},
        {"n_required", finite_or_null(f.n_required)},
        {"c_const", f.c_const},
        {"sufficient", f.sufficient},
        {"message", f.message}}},
      {"warnings", result.warnings},
  };
  return doc.dump(2) + "\n";
}

Matrix adjacency_from_recovery_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    const auto& rows = doc.at("adjacency_est");
    const auto d = rows.size();
    Matrix m(idx(d), idx(d));
    for (std::size_t i = 0; i < d; ++i) {
      if (rows[i].size() != d) throw DataError("adjacency_est is not square");
      for (std::size_t j = 0; j < d; ++j) m(idx(i), idx(j)) = rows[i][j].get<double>();
    }
    return m;
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed recovery result: ") + ex.what());
  }
}

std::string edges_csv(const Matrix& adjacency, double tau) {
  std::string out = "source,target,weight,selected\n";
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
      const double w = adjacency(i, j);
      if (i == j || w == 0.0) continue;
      out += std::to_string(i) + "," + std::to_string(j) + "," + format_double(w) + "," +
             (std::abs(w) >= tau ? "1" : "0") + "\n";
    }
  }
  return out;
}

}  // namespace tecausal
