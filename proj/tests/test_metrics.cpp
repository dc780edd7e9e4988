#include <doctest.h>

#include <cmath>
#include <random>

#include "metric_hand_cases.hpp"
#include "tecausal/error.hpp"
#include "tecausal/metrics.hpp"
#include "test_support.hpp"

using namespace tecausal;

namespace {

// Direct evaluation of the mean-of-prefix-precisions definition.
double audrc_oracle(const BinaryAdjacency& truth, const std::vector<std::pair<std::size_t, std::size_t>>& order) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t m = 1; m <= order.size(); ++m) {
    hits += truth(order[m - 1].first, order[m - 1].second);
    sum += double(hits) / double(m);
  }
  return sum / double(order.size());
}

std::vector<std::pair<std::size_t, std::size_t>> slots(std::size_t d) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) out.emplace_back(i, j);
  return out;
}

}  // namespace

TEST_CASE("metric hand cases") {
  for (const auto& c : testing::metric_hand_cases()) {
    INFO(c.name);
    CHECK(c.ok);
  }
}

TEST_CASE("binary adjacency rejects self-loops and bad indices") {
  BinaryAdjacency a(3);
  CHECK_THROWS_AS(a.set(1, 1, true), ConfigError);
  CHECK_NOTHROW(a.set(1, 1, false));
  CHECK_THROWS_AS(a.set(3, 0, true), ConfigError);
  CHECK_FALSE(threshold(Matrix::Ones(3, 3), 0.0)(2, 2));
}

TEST_CASE("threshold skips exact zeros at tau = 0") {
  Matrix w = Matrix::Zero(2, 2);
  CHECK(threshold(w, 0.0).edge_count() == 0);
  CHECK_THROWS_AS(threshold(w, -0.1), ConfigError);
}

TEST_CASE("shd: symmetric, zero on itself, dimension mismatch") {
  std::mt19937_64 eng(1);
  for (int trial = 0; trial < 50; ++trial) {
    BinaryAdjacency a(5), b(5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        if (i != j) {
          a.set(i, j, eng() % 2);
          b.set(i, j, eng() % 2);
        }
    CHECK(shd(a, b) == shd(b, a));
    CHECK(shd(a, a) == 0);
  }
  CHECK_THROWS_AS(shd(BinaryAdjacency(2), BinaryAdjacency(3)), DataError);
}

TEST_CASE("f1: empty truth is undefined, shd 0 iff f1 1") {
  CHECK_THROWS_AS(f1(BinaryAdjacency(3), testing::edges(3, {{0, 1}})), DataError);
  std::mt19937_64 eng(2);
  for (int trial = 0; trial < 200; ++trial) {
    BinaryAdjacency t(3), e(3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        if (i != j) {
          t.set(i, j, eng() % 3 == 0);
          e.set(i, j, eng() % 3 == 0);
        }
    if (t.edge_count() == 0) continue;
    CHECK((shd(t, e) == 0) == (f1(t, e) == 1.0));
  }
}

TEST_CASE("rank_edges: full length, descending, ties by index") {
  Matrix w(3, 3);
  w << 9, 0.5, -0.5, 0.7, 9, 0.0, 0.5, -0.7, 9;
  const auto r = rank_edges(w);
  REQUIRE(r.edges.size() == 6);
  CHECK(r.edges[0].i == 1);
  CHECK(r.edges[0].j == 0);
  CHECK(r.edges[1].i == 2);
  CHECK(r.edges[1].j == 1);
  CHECK(r.edges[2].i == 0);
  CHECK(r.edges[2].j == 1);
  CHECK(r.edges[3].i == 0);
  CHECK(r.edges[3].j == 2);
  CHECK(r.edges[4].i == 2);
  CHECK(r.edges[4].j == 0);
  CHECK(r.edges[5].magnitude == 0.0);
}

TEST_CASE("audrc matches the definition on random rankings") {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix w(4, 4);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(eng);
    BinaryAdjacency t(4);
    for (const auto& [i, j] : slots(4)) t.set(i, j, eng() % 3 == 0);
    if (t.edge_count() == 0) t.set(0, 1, true);
    const auto ranking = rank_edges(w);
    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (const auto& e : ranking.edges) order.emplace_back(e.i, e.j);
    CHECK(audrc(t, ranking) == doctest::Approx(audrc_oracle(t, order)).epsilon(1e-14));
    const double a = audrc(t, ranking);
    CHECK(a > 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("audrc is invariant to positive rescaling") {
  std::mt19937_64 eng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix w(4, 4);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(eng);
    const auto t = testing::edges(4, {{0, 1}, {2, 3}, {3, 1}});
    CHECK(audrc(t, rank_edges(w)) == audrc(t, rank_edges(w * 3.7)));
  }
}

TEST_CASE("audrc never decreases when a true edge moves earlier") {
  const auto all = slots(3);
  const auto t = testing::edges(3, {{0, 1}, {1, 2}});
  std::mt19937_64 eng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto order = all;
    std::shuffle(order.begin(), order.end(), eng);
    for (std::size_t k = 1; k < order.size(); ++k) {
      if (!t(order[k].first, order[k].second) || t(order[k - 1].first, order[k - 1].second)) continue;
      auto moved = order;
      std::swap(moved[k], moved[k - 1]);
      CHECK(audrc_oracle(t, moved) > audrc_oracle(t, order));
    }
  }
}

TEST_CASE("audrc of a random ranking matches the exhaustive average") {
  // d = 3 has M = 6 slots, so all 720 orderings can be enumerated.
  const auto all = slots(3);
  const auto t = testing::edges(3, {{0, 1}, {1, 2}});
  double exact = 0.0;
  std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5};
  std::size_t count = 0;
  do {
    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (auto k : idx) order.push_back(all[k]);
    exact += audrc_oracle(t, order);
    ++count;
  } while (std::next_permutation(idx.begin(), idx.end()));
  exact /= double(count);

  std::mt19937_64 eng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int trials = 20000;
  double sum = 0.0, sq = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Matrix w(3, 3);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(eng);
    const double a = audrc(t, rank_edges(w));
    sum += a;
    sq += a * a;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - exact) <= 3.0 * se);
}

TEST_CASE("shd under a threshold sweep only changes at distinct magnitudes") {
  Matrix w = Matrix::Zero(3, 3);
  w(0, 1) = 0.2;
  w(1, 2) = -0.5;
  w(2, 0) = 0.8;
  const auto t = testing::edges(3, {{0, 1}, {1, 2}});
  std::size_t prev = shd(t, threshold(w, 0.0));
  std::vector<double> changes;
  for (int k = 1; k <= 1000; ++k) {
    const double tau = k * 0.001;
    const std::size_t s = shd(t, threshold(w, tau));
    if (s != prev) changes.push_back(tau);
    prev = s;
  }
  REQUIRE(changes.size() == 3);
  CHECK(changes[0] == doctest::Approx(0.201).epsilon(1e-9));
  CHECK(changes[1] == doctest::Approx(0.501).epsilon(1e-9));
  CHECK(changes[2] == doctest::Approx(0.801).epsilon(1e-9));
}

TEST_CASE("audrc rejects incomplete rankings") {
  auto r = rank_edges(Matrix::Ones(3, 3));
  r.edges.pop_back();
  CHECK_THROWS_AS(audrc(testing::edges(3, {{0, 1}}), r), DataError);
  auto dup = rank_edges(Matrix::Ones(3, 3));
  dup.edges[1] = dup.edges[0];
  CHECK_THROWS_AS(audrc(testing::edges(3, {{0, 1}}), dup), DataError);
}

TEST_CASE("evaluate and CSV row") {
  Matrix b = Matrix::Zero(2, 2);
  b(0, 1) = 0.7;
  const WeightedAdjacency g(b);
  const auto rep = evaluate(g, b, 0.3);
  CHECK(rep.shd == 0);
  CHECK(rep.f1 == 1.0);
  CHECK(rep.audrc == 0.75);
  CHECK(metrics_csv_header() == "run,d,noise,shd,f1,audrc,tau");
  CHECK(metrics_csv_row(3, 2, "gaussian", rep) == "3,2,gaussian,0,1,0.75,0.3");
  CHECK_THROWS_AS(evaluate(g, Matrix::Zero(3, 3)), DataError);
}
