#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tecausal/sem_model.hpp"

namespace tecausal {

// Directed edge indicator matrix with an all-false diagonal.
class BinaryAdjacency {
 public:
  explicit BinaryAdjacency(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  bool operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }
  // Diagonal writes are rejected.
  void set(std::size_t i, std::size_t j, bool value);
  std::size_t edge_count() const;

 private:
  std::size_t dim_;
  std::vector<bool> entries_;
};

// Entry (i, j) is set iff i != j, w_ij != 0 and |w_ij| >= tau.
BinaryAdjacency threshold(const Matrix& weights, double tau);

// Nonzero pattern of the true graph.
BinaryAdjacency support(const WeightedAdjacency& graph);

// Off-diagonal entries where the two graphs disagree; a reversed edge
// counts twice.
std::size_t shd(const BinaryAdjacency& a, const BinaryAdjacency& b);

// Directed-edge F1. Zero when nothing is predicted; DataError when the
// true graph is empty.
double f1(const BinaryAdjacency& truth, const BinaryAdjacency& estimate);

struct RankedEdge {
  std::size_t i;
  std::size_t j;
  double magnitude;
};

// All d(d-1) off-diagonal slots by descending |w|, ties by (i, j).
struct EdgeRanking {
  std::size_t dim = 0;
  std::vector<RankedEdge> edges;
};

EdgeRanking rank_edges(const Matrix& weights);

// (1/M) sum_m precision@m over the full ranking.
double audrc(const BinaryAdjacency& truth, const EdgeRanking& ranking);

struct MetricsReport {
  std::size_t shd = 0;
  double f1 = 0.0;
  double audrc = 0.0;
  double tau = 0.3;
};

MetricsReport evaluate(const WeightedAdjacency& truth, const Matrix& estimate, double tau = 0.3);

std::string metrics_csv_header();
std::string metrics_csv_row(std::size_t run, std::size_t dim, const std::string& noise, const MetricsReport& report);

}  // namespace tecausal
