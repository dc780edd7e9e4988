#pragma once

#include <string>
#include <vector>

#include "tecausal/metrics.hpp"

// Hand-computed scoring cases, shared by the unit tests and the acceptance
// binary. Every comparison is exact.
namespace testing {

struct HandCase {
  std::string name;
  bool ok;
};

inline tecausal::BinaryAdjacency edges(std::size_t d, std::initializer_list<std::pair<std::size_t, std::size_t>> list) {
  tecausal::BinaryAdjacency a(d);
  for (const auto& [i, j] : list) a.set(i, j, true);
  return a;
}

inline std::vector<HandCase> metric_hand_cases() {
  using namespace tecausal;
  std::vector<HandCase> out;

  Matrix w2 = Matrix::Zero(2, 2);
  w2(0, 1) = 0.8;
  const auto t2 = edges(2, {{0, 1}});
  out.push_back({"audrc d=2 true edge first = 0.75", audrc(t2, rank_edges(w2)) == 0.75});
  Matrix w2_rev = Matrix::Zero(2, 2);
  w2_rev(1, 0) = 0.8;
  out.push_back({"audrc d=2 true edge last = 0.25", audrc(t2, rank_edges(w2_rev)) == 0.25});
  Matrix w3 = Matrix::Ones(3, 3);
  const auto complete = edges(3, {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}});
  out.push_back({"audrc complete truth = 1", audrc(complete, rank_edges(w3)) == 1.0});

  const auto g = edges(3, {{0, 1}, {1, 2}, {0, 2}});
  out.push_back({"shd identical = 0", shd(g, g) == 0});
  BinaryAdjacency comp(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) comp.set(i, j, !g(i, j));
  out.push_back({"shd complement = d(d-1)", shd(g, comp) == 6});
  const auto flipped = edges(3, {{1, 0}, {1, 2}, {0, 2}});
  out.push_back({"shd reversed edge = 2", shd(g, flipped) == 2 && shd(flipped, g) == 2});

  out.push_back({"f1 perfect = 1", f1(g, g) == 1.0});
  out.push_back({"f1 no prediction = 0", f1(g, BinaryAdjacency(3)) == 0.0});
  const auto partial = edges(3, {{0, 1}, {1, 2}, {2, 0}});
  out.push_back({"f1 2 of 3 found plus 1 spurious = 2/3", f1(g, partial) == 2.0 / 3.0});

  Matrix wt = Matrix::Zero(3, 3);
  wt(0, 1) = 0.3;
  wt(1, 2) = -0.3;
  wt(2, 0) = 0.29;
  const auto th = threshold(wt, 0.3);
  out.push_back({"threshold keeps |w| = tau", th(0, 1) && th(1, 2) && !th(2, 0)});
  const auto all = threshold(wt, 0.0);
  out.push_back({"threshold tau = 0 keeps nonzero off-diagonals only", all.edge_count() == 3 && !all(1, 0)});
  out.push_back({"threshold above max |w| is empty", threshold(wt, 0.31).edge_count() == 0});
  return out;
}

}  // namespace testing
