#include "tecausal/sem_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "tecausal/error.hpp"
#include "tecausal/random.hpp"
#include "tecausal/util.hpp"

namespace tecausal {

namespace {

constexpr double kIdentityResidualTol = 1e-10;
constexpr int kMaxEmptyGraphRedraws = 10000;

bool is_triangularizing(const Matrix& weights, const Permutation& order) {
  const auto d = order.size();
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      if (weights(static_cast<Eigen::Index>(order[a]), static_cast<Eigen::Index>(order[b])) != 0.0) {
        return false;
      }
    }
  }
  return true;
}

std::vector<std::size_t> find_cycle(const Matrix& weights, const std::vector<bool>& removed) {
  // Every remaining vertex has an outgoing edge to another remaining vertex,
  // so walking successors must revisit a vertex.
  const auto d = static_cast<std::size_t>(weights.rows());
  std::size_t start = 0;
  while (removed[start]) ++start;
  std::vector<std::size_t> position(d, d);
  std::vector<std::size_t> path;
  std::size_t v = start;
  while (position[v] == d) {
    position[v] = path.size();
    path.push_back(v);
    std::size_t next = d;
    for (std::size_t u = 0; u < d; ++u) {
      if (!removed[u] && weights(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) != 0.0) {
        next = u;
        break;
      }
    }
    if (next == d) throw InvariantError("cycle search reached a sink");
    v = next;
  }
  return {path.begin() + static_cast<std::ptrdiff_t>(position[v]), path.end()};
}

}  // namespace

bool is_permutation(const Permutation& perm, std::size_t dim) {
  if (perm.size() != dim) return false;
  std::vector<bool> seen(dim, false);
  for (std::size_t v : perm) {
    if (v >= dim || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

Permutation validate_dag(const Matrix& weights) {
  if (weights.rows() != weights.cols()) throw DataError("adjacency matrix must be square");
  if (!weights.allFinite()) throw DataError("adjacency matrix has non-finite entries");
  const auto d = static_cast<std::size_t>(weights.rows());
  for (std::size_t i = 0; i < d; ++i) {
    if (weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) != 0.0) {
      throw AcyclicityError({i});
    }
  }
  // Repeatedly emit the smallest-index vertex without outgoing edges into
  // the remaining set (a sink); sinks come first in the order.
  std::vector<std::size_t> out_degree(d, 0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) ++out_degree[i];
    }
  }
  std::vector<bool> removed(d, false);
  Permutation order;
  order.reserve(d);
  while (order.size() < d) {
    std::size_t sink = d;
    for (std::size_t v = 0; v < d; ++v) {
      if (!removed[v] && out_degree[v] == 0) {
        sink = v;
        break;
      }
    }
    if (sink == d) throw AcyclicityError(find_cycle(weights, removed));
    removed[sink] = true;
    order.push_back(sink);
    for (std::size_t p = 0; p < d; ++p) {
      if (weights(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(sink)) != 0.0) --out_degree[p];
    }
  }
  return order;
}

WeightedAdjacency::WeightedAdjacency(Matrix weights) : weights_(std::move(weights)) {
  order_ = validate_dag(weights_);
}

WeightedAdjacency::WeightedAdjacency(Matrix weights, Permutation variable_order)
    : weights_(std::move(weights)), order_(std::move(variable_order)) {
  validate_dag(weights_);
  if (!is_permutation(order_, dim())) throw DataError("variable order is not a permutation of [0, d)");
  if (!is_triangularizing(weights_, order_)) {
    throw DataError("variable order does not render the adjacency strictly lower triangular");
  }
}

Permutation WeightedAdjacency::topological_order() const {
  return {order_.rbegin(), order_.rend()};
}

std::size_t WeightedAdjacency::edge_count() const {
  return static_cast<std::size_t>((weights_.array() != 0.0).count());
}

void validate(const GraphGenConfig& cfg) {
  if (cfg.dim < 2) throw ConfigError("graph dimension must be at least 2");
  if (!(cfg.sparsity > 0.0 && cfg.sparsity <= 1.0)) {
    throw ConfigError("sparsity must lie in (0, 1]; got " + format_double(cfg.sparsity));
  }
  if (!(cfg.weight_low > 0.0 && cfg.weight_low <= cfg.weight_high && std::isfinite(cfg.weight_high))) {
    throw ConfigError("weight interval must satisfy 0 < weight_low <= weight_high");
  }
}

WeightedAdjacency generate_random_dag(const GraphGenConfig& cfg) {
  validate(cfg);
  const std::size_t d = cfg.dim;
  for (int attempt = 0; attempt < kMaxEmptyGraphRedraws; ++attempt) {
    auto engine = rng::make_engine(cfg.seed, "dag", {static_cast<std::uint64_t>(attempt)});
    Permutation order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), engine);

    std::bernoulli_distribution has_edge(cfg.sparsity);
    std::uniform_real_distribution<double> magnitude(cfg.weight_low, cfg.weight_high);
    std::bernoulli_distribution negative(0.5);

    Matrix weights = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    std::size_t edges = 0;
    for (std::size_t a = 1; a < d; ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        if (!has_edge(engine)) continue;
        // order[a] comes later, so it is the parent of order[b].
        double w = cfg.weight_low == cfg.weight_high ? cfg.weight_low : magnitude(engine);
        if (negative(engine)) w = -w;
        weights(static_cast<Eigen::Index>(order[a]), static_cast<Eigen::Index>(order[b])) = w;
        ++edges;
      }
    }
    if (edges > 0) return WeightedAdjacency(std::move(weights), std::move(order));
  }
  throw ConfigError("could not draw a graph with at least one edge; increase sparsity");
}

MixingMatrix mixing_matrix(const WeightedAdjacency& graph) {
  const auto d = static_cast<Eigen::Index>(graph.dim());
  const Matrix unmixing = Matrix::Identity(d, d) - graph.weights().transpose();
  Matrix mixing = unmixing.partialPivLu().inverse();
  const double residual = (mixing * unmixing - Matrix::Identity(d, d)).norm();
  if (!(residual <= kIdentityResidualTol)) {
    throw InvariantError("I - B^T is numerically singular (residual " + format_double(residual) + ")");
  }
  return MixingMatrix(std::move(mixing));
}

WeightedAdjacency relabel(const WeightedAdjacency& graph, const Permutation& perm) {
  const std::size_t d = graph.dim();
  if (!is_permutation(perm, d)) throw ConfigError("relabeling is not a permutation");
  Matrix out(graph.weights().rows(), graph.weights().cols());
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          graph.weights()(static_cast<Eigen::Index>(perm[a]), static_cast<Eigen::Index>(perm[b]));
    }
  }
  return WeightedAdjacency(std::move(out));
}

void write_adjacency_csv(std::ostream& out, const WeightedAdjacency& graph) {
  const std::size_t d = graph.dim();
  out << "d," << d << '\n' << "order";
  for (std::size_t v : graph.variable_order()) out << ',' << v;
  out << '\n';
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (j > 0) out << ',';
      out << format_double(graph.weights()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

WeightedAdjacency read_adjacency_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("adjacency CSV is empty");
  auto head = split(line, ',');
  if (head.size() != 2 || head[0] != "d") throw DataError("adjacency CSV must start with 'd,<dim>'");
  const double dim_value = parse_double(head[1]);
  if (!(dim_value >= 1.0) || dim_value != std::floor(dim_value)) throw DataError("invalid dimension in adjacency CSV");
  const auto d = static_cast<std::size_t>(dim_value);

  if (!std::getline(in, line)) throw DataError("adjacency CSV is missing its order line");
  auto order_tokens = split(line, ',');
  if (order_tokens.size() != d + 1 || order_tokens[0] != "order") {
    throw DataError("adjacency CSV order line must list " + std::to_string(d) + " indices");
  }
  Permutation order;
  for (std::size_t a = 1; a <= d; ++a) order.push_back(static_cast<std::size_t>(parse_double(order_tokens[a])));

  Matrix weights(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (!std::getline(in, line)) throw DataError("adjacency CSV has fewer than d rows");
    auto cells = split(line, ',');
    if (cells.size() != d) throw DataError("adjacency CSV row " + std::to_string(i) + " has wrong width");
    for (std::size_t j = 0; j < d; ++j) {
      weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(cells[j]);
    }
  }
  return WeightedAdjacency(std::move(weights), std::move(order));
}

void save_adjacency(const std::string& path, const WeightedAdjacency& graph) {
  std::ostringstream out;
  write_adjacency_csv(out, graph);
  write_file(path, out.str());
}

WeightedAdjacency load_adjacency(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_adjacency_csv(in);
}

}  // namespace tecausal
