#include "tecausal/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tecausal/error.hpp"
#include "tecausal/util.hpp"

namespace tecausal {

BinaryAdjacency::BinaryAdjacency(std::size_t dim) : dim_(dim), entries_(dim * dim, false) {}

void BinaryAdjacency::set(std::size_t i, std::size_t j, bool value) {
  if (i >= dim_ || j >= dim_) throw ConfigError("edge index out of range");
  if (i == j && value) throw ConfigError("binary adjacency cannot contain self-loops");
  entries_[i * dim_ + j] = value;
}

std::size_t BinaryAdjacency::edge_count() const {
  return static_cast<std::size_t>(std::count(entries_.begin(), entries_.end(), true));
}

BinaryAdjacency threshold(const Matrix& weights, double tau) {
  if (weights.rows() != weights.cols()) throw DataError("weight matrix must be square");
  if (!(tau >= 0.0)) throw ConfigError("threshold tau must be >= 0");
  const auto d = static_cast<std::size_t>(weights.rows());
  BinaryAdjacency out(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double w = weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (i != j && w != 0.0 && std::abs(w) >= tau) out.set(i, j, true);
    }
  }
  return out;
}

BinaryAdjacency support(const WeightedAdjacency& graph) { return threshold(graph.weights(), 0.0); }

namespace {
void require_same_dim(const BinaryAdjacency& a, const BinaryAdjacency& b) {
  if (a.dim() != b.dim()) {
    throw DataError("graphs have different dimensions (" + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()) + ")");
  }
}
}  // namespace

std::size_t shd(const BinaryAdjacency& a, const BinaryAdjacency& b) {
  require_same_dim(a, b);
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    for (std::size_t j = 0; j < a.dim(); ++j) {
      if (i != j && a(i, j) != b(i, j)) ++count;
    }
  }
  return count;
}

double f1(const BinaryAdjacency& truth, const BinaryAdjacency& estimate) {
  require_same_dim(truth, estimate);
  const std::size_t positives = truth.edge_count();
  if (positives == 0) throw DataError("F1 is undefined for an empty true graph");
  const std::size_t predicted = estimate.edge_count();
  if (predicted == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.dim(); ++i) {
    for (std::size_t j = 0; j < truth.dim(); ++j) {
      if (truth(i, j) && estimate(i, j)) ++hits;
    }
  }
  if (hits == 0) return 0.0;
  const double precision = static_cast<double>(hits) / static_cast<double>(predicted);
  const double recall = static_cast<double>(hits) / static_cast<double>(positives);
  return 2.0 * precision * recall / (precision + recall);
}

EdgeRanking rank_edges(const Matrix& weights) {
  if (weights.rows() != weights.cols()) throw DataError("weight matrix must be square");
  EdgeRanking out;
  out.dim = static_cast<std::size_t>(weights.rows());
  for (std::size_t i = 0; i < out.dim; ++i) {
    for (std::size_t j = 0; j < out.dim; ++j) {
      if (i == j) continue;
      const double w = weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::isnan(w)) throw DataError("cannot rank NaN edge weights");
      out.edges.push_back({i, j, std::abs(w)});
    }
  }
  std::stable_sort(out.edges.begin(), out.edges.end(),
                   [](const RankedEdge& a, const RankedEdge& b) { return a.magnitude > b.magnitude; });
  return out;
}

double audrc(const BinaryAdjacency& truth, const EdgeRanking& ranking) {
  const std::size_t d = truth.dim();
  const std::size_t m_total = d * (d - 1);
  if (ranking.dim != d || ranking.edges.size() != m_total) {
    throw DataError("edge ranking must cover all " + std::to_string(m_total) + " off-diagonal slots");
  }
  std::vector<bool> seen(d * d, false);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t m = 0; m < m_total; ++m) {
    const auto& e = ranking.edges[m];
    if (e.i >= d || e.j >= d || e.i == e.j || seen[e.i * d + e.j]) {
      throw DataError("edge ranking repeats or misses a slot");
    }
    seen[e.i * d + e.j] = true;
    if (truth(e.i, e.j)) ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(m + 1);
  }
  return sum / static_cast<double>(m_total);
}

MetricsReport evaluate(const WeightedAdjacency& truth, const Matrix& estimate, double tau) {
  if (static_cast<std::size_t>(estimate.rows()) != truth.dim() || estimate.cols() != estimate.rows()) {
    throw DataError("estimate is " + std::to_string(estimate.rows()) + "x" + std::to_string(estimate.cols()) +
                    " but the true graph has d = " + std::to_string(truth.dim()));
  }
  const BinaryAdjacency t = support(truth);
  const BinaryAdjacency e = threshold(estimate, tau);
  MetricsReport report;
  report.shd = shd(t, e);
  report.f1 = f1(t, e);
  report.audrc = audrc(t, rank_edges(estimate));
  report.tau = tau;
  return report;
}

std::string metrics_csv_header() { return "run,d,noise,shd,f1,audrc,tau"; }

std::string metrics_csv_row(std::size_t run, std::size_t dim, const std::string& noise, const MetricsReport& report) {
  return std::to_string(run) + "," + std::to_string(dim) + "," + noise + "," + std::to_string(report.shd) + "," +
         format_double(report.f1) + "," + format_double(report.audrc) + "," + format_double(report.tau);
}

}  // namespace tecausal
