#include <catch2/catch_amalgamated.hpp>

#include "peano/transition.hpp"

using namespace peano;

namespace {

std::shared_ptr<const MetricGraph> unit_interval() {
  return std::make_shared<MetricGraph>(2, std::vector<Edge>{{0, 1, rat(1)}});
}

std::shared_ptr<const MetricGraph> triod() {
  return std::make_shared<MetricGraph>(
      4, std::vector<Edge>{{0, 1, rat(1, 4)}, {0, 2, rat(1, 4)}, {0, 3, rat(1, 4)}});
}

Walk one_leg(int e, Rat a, Rat b) {
  Walk w;
  w.legs.push_back({e, std::move(a), std::move(b)});
  return w;
}

PLMap tent_map(std::shared_ptr<const MetricGraph> g) {
  std::vector<Piece> ps;
  ps.push_back({0, rat(0), rat(1, 2), Action::traverse(one_leg(0, rat(0), rat(1)))});
  ps.push_back({0, rat(1, 2), rat(1), Action::traverse(one_leg(0, rat(1), rat(0)))});
  return PLMap(std::move(g), std::move(ps));
}

// Brute force pairwise reachability for cross-checking scc.
std::vector<std::vector<bool>> reach_oracle(const std::vector<std::vector<int>>& succ) {
  int n = static_cast<int>(succ.size());
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i)
    for (int j : succ[i]) r[i][j] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r[i][j] = r[i][j] || (r[i][k] && r[k][j]);
  return r;
}

}  // namespace

TEST_CASE("transition_graph with delta zero records image intersections") {
  auto g = unit_interval();
  PLMap f = tent_map(g);
  Partition p;
  p.cells.push_back(make_cell(*g, {{0, rat(0), rat(1, 2)}}));
  p.cells.push_back(make_cell(*g, {{0, rat(1, 2), rat(1)}}));
  TransitionGraph t = transition_graph(*g, f, p, rat(0));
  // Both halves map onto [0, 1], so the relation is complete.
  CHECK(t.succ[0] == std::vector<int>{0, 1});
  CHECK(t.succ[1] == std::vector<int>{0, 1});
}

TEST_CASE("identity relates each cell to itself and touching neighbors") {
  auto g = unit_interval();
  PLMap id = identity_map(g);
  Partition p = slice_partition(*g, rat(1, 4));
  REQUIRE(p.size() == 5);
  TransitionGraph t = transition_graph(*g, id, p, rat(0));
  CHECK(t.succ[0] == std::vector<int>{0, 1});
  CHECK(t.succ[2] == std::vector<int>{1, 2, 3});
  CHECK(t.succ[4] == std::vector<int>{3, 4});
}

TEST_CASE("constant map relates every cell to cells near the value") {
  auto g = unit_interval();
  PLMap f = constant_map(g, g->point(0, rat(1, 2)));
  Partition p = slice_partition(*g, rat(1, 4));
  TransitionGraph t0 = transition_graph(*g, f, p, rat(0));
  // 1/2 is interior to the middle slice [2/5, 3/5].
  for (int i = 0; i < 5; ++i) CHECK(t0.succ[i] == std::vector<int>{2});
  TransitionGraph t1 = transition_graph(*g, f, p, rat(1, 4));
  // Within distance 1/4 of the point 1/2: cells 1, 2, 3.
  for (int i = 0; i < 5; ++i) CHECK(t1.succ[i] == std::vector<int>{1, 2, 3});
}

TEST_CASE("adjacency is monotone in delta") {
  auto g = unit_interval();
  PLMap f = tent_map(g);
  Partition p = slice_partition(*g, rat(1, 8));
  TransitionGraph small = transition_graph(*g, f, p, rat(1, 16));
  TransitionGraph big = transition_graph(*g, f, p, rat(1, 4));
  for (int i = 0; i < p.size(); ++i)
    for (int j : small.succ[i])
      CHECK(std::find(big.succ[i].begin(), big.succ[i].end(), j) != big.succ[i].end());
}

TEST_CASE("transition candidates cross vertices") {
  auto g = triod();
  PLMap f = constant_map(g, g->vertex_point(0));
  Partition p = slice_partition(*g, rat(1, 8));
  REQUIRE(p.size() == 9);
  TransitionGraph t = transition_graph(*g, f, p, rat(1, 16));
  // The hub lies in the first slice of each edge.
  for (int i = 0; i < 9; ++i) CHECK(t.succ[i] == std::vector<int>{0, 3, 6});
}

TEST_CASE("scc ids are reverse topological with terminal component zero") {
  // Two 2-cycles, the second reachable from the first.
  std::vector<std::vector<int>> succ = {{1}, {0, 2}, {3}, {2}};
  SccResult r = scc(succ);
  REQUIRE(r.count == 2);
  CHECK(r.comp[0] == r.comp[1]);
  CHECK(r.comp[2] == r.comp[3]);
  CHECK(r.comp[2] == 0);
  CHECK(r.comp[0] == 1);

  std::vector<std::vector<int>> chain = {{1}, {2}, {}};
  SccResult c = scc(chain);
  CHECK(c.count == 3);
  CHECK(c.comp[2] == 0);
  CHECK(c.comp[0] == 2);
}

TEST_CASE("scc agrees with a reachability oracle on a transition graph") {
  auto g = unit_interval();
  PLMap f = tent_map(g);
  Partition p = slice_partition(*g, rat(1, 16));
  TransitionGraph t = transition_graph(*g, f, p, rat(1, 8));
  SccResult r = scc(t.succ);
  auto reach = reach_oracle(t.succ);
  for (int i = 0; i < t.size(); ++i)
    for (int j = 0; j < t.size(); ++j) {
      bool same = r.comp[i] == r.comp[j];
      bool both = (i == j) || (reach[i][j] && reach[j][i]);
      CHECK(same == both);
    }
}

TEST_CASE("graph_path finds shortest deterministic routes") {
  std::vector<std::vector<int>> succ = {{1, 2}, {3}, {3}, {}};
  auto p = graph_path(succ, 0, 3);
  REQUIRE(p.has_value());
  CHECK(*p == std::vector<int>{0, 1, 3});
  CHECK_FALSE(graph_path(succ, 3, 0).has_value());
  auto self = graph_path(succ, 2, 2);
  REQUIRE(self.has_value());
  CHECK(*self == std::vector<int>{2});
}

TEST_CASE("BitMatrix powers track walk existence") {
  TransitionGraph t;
  t.succ = {{1}, {2}, {0, 2}};
  BitMatrix b = BitMatrix::from_graph(t);
  CHECK(b.get(0, 1));
  CHECK_FALSE(b.get(0, 0));
  CHECK_FALSE(b.all_ones());
  BitMatrix b2 = b.mul(b);
  CHECK(b2.get(0, 2));
  CHECK(b2.get(2, 1));
  BitMatrix b4 = b2.mul(b2);
  BitMatrix b5 = b4.mul(b);
  CHECK(b5.all_ones());
}
