#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tecausal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A relabeling of [0, d). Meaning depends on context; see each use.
using Permutation = std::vector<std::size_t>;

// Weighted DAG of a linear SEM  X = B^T X + eps.
//
// weights()(i, j) != 0 exactly when i -> j (i is a parent of j).
// variable_order() is a permutation pi with the property that the matrix
// B(pi[a], pi[b]) is strictly lower triangular; children therefore precede
// their parents in pi. Its reverse is a topological (parents-first) order.
class WeightedAdjacency {
 public:
  // Validates acyclicity and derives the canonical variable order.
  explicit WeightedAdjacency(Matrix weights);
  // Uses the supplied order after checking that it triangularizes B.
  WeightedAdjacency(Matrix weights, Permutation variable_order);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  const Matrix& weights() const noexcept { return weights_; }
  const Permutation& variable_order() const noexcept { return order_; }
  // Parents-first order (reverse of variable_order()).
  Permutation topological_order() const;
  std::size_t edge_count() const;

 private:
  Matrix weights_;
  Permutation order_;
};

// A = (I - B^T)^{-1}; maps independent noise to observations.
class MixingMatrix {
 public:
  MixingMatrix(Matrix values) : values_(std::move(values)) {}
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  const Matrix& values() const noexcept { return values_; }

 private:
  Matrix values_;
};

struct GraphGenConfig {
  std::size_t dim = 2;
  double sparsity = 0.5;
  // Nonzero weights are drawn from +-[weight_low, weight_high].
  double weight_low = 0.3;
  double weight_high = 0.9;
  std::uint64_t seed = 0;
};

void validate(const GraphGenConfig& cfg);

// Random DAG: a random variable order, then each admissible slot is an edge
// with probability `sparsity`. Graphs without edges are redrawn.
WeightedAdjacency generate_random_dag(const GraphGenConfig& cfg);

MixingMatrix mixing_matrix(const WeightedAdjacency& graph);

// Returns pi such that B(pi, pi) is strictly lower triangular, choosing the
// smallest admissible index at every step. Throws AcyclicityError naming a
// cycle otherwise. Only the support (nonzero pattern) of B matters.
Permutation validate_dag(const Matrix& weights);

// Relabels variables: new variable a is old variable perm[a].
WeightedAdjacency relabel(const WeightedAdjacency& graph, const Permutation& perm);

bool is_permutation(const Permutation& perm, std::size_t dim);

// Dense CSV. Line 1: "d,<d>". Line 2: "order,<pi_0>,...". Then d rows of B.
void write_adjacency_csv(std::ostream& out, const WeightedAdjacency& graph);
WeightedAdjacency read_adjacency_csv(std::istream& in);
void save_adjacency(const std::string& path, const WeightedAdjacency& graph);
WeightedAdjacency load_adjacency(const std::string& path);

}  // namespace tecausal
