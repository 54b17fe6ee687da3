#include <catch2/catch_amalgamated.hpp>

#include "peano/cover.hpp"

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

// Tent with its peak moved to x = 2/5; still onto [0, 1].
PLMap skew_tent_map(std::shared_ptr<const MetricGraph> g) {
  std::vector<Piece> ps;
  ps.push_back({0, rat(0), rat(2, 5), Action::traverse(one_leg(0, rat(0), rat(1)))});
  ps.push_back({0, rat(2, 5), rat(1), Action::traverse(one_leg(0, rat(1), rat(0)))});
  return PLMap(std::move(g), std::move(ps));
}

// Climbs to 1 on [0, 1/4], rests there until 1/2, returns to 0 by 1.
PLMap plateau_map(std::shared_ptr<const MetricGraph> g) {
  std::vector<Piece> ps;
  ps.push_back({0, rat(0), rat(1, 4), Action::traverse(one_leg(0, rat(0), rat(1)))});
  ps.push_back({0, rat(1, 4), rat(1, 2), Action::constant(g->point(0, rat(1)))});
  ps.push_back({0, rat(1, 2), rat(1), Action::traverse(one_leg(0, rat(1), rat(0)))});
  return PLMap(std::move(g), std::move(ps));
}

Cell union_all(const MetricGraph& g, const std::vector<Cell>& cells) {
  Cell acc;
  for (const Cell& c : cells) acc = union_cells(g, acc, c);
  return acc;
}

// Subset test through normal forms: a is inside b iff adding a changes nothing.
bool cell_subset(const MetricGraph& g, const Cell& a, const Cell& b) {
  return union_cells(g, a, b) == b;
}

std::vector<Rat> edge_cuts(const Partition& p, int edge) {
  std::vector<Rat> out;
  for (const Cell& c : p.cells)
    for (const Seg& s : c.segs)
      if (s.edge == edge) {
        out.push_back(s.lo);
        out.push_back(s.hi);
      }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

TEST_CASE("slice_partition slices each edge below the mesh target") {
  auto g = triod();
  Partition p = slice_partition(*g, rat(1, 8));
  // Each 1/4 edge needs three slices: 1/4 / 2 = 1/8 is not strictly below.
  REQUIRE(p.size() == 9);
  for (const Cell& c : p.cells) {
    REQUIRE(c.segs.size() == 1);
    CHECK(total_length(c) == rat(1, 12));
  }
  CHECK(mesh_length_bound(p) == rat(1, 12));
  CHECK(mesh_exact(*g, p) == rat(1, 12));
  CHECK(union_all(*g, p.cells) == whole_space(*g));
  CHECK(p.parent_of.empty());

  // Adjacent slices meet in one point, distant slices not at all.
  Cell meet = intersect_cells(*g, p.cells[0], p.cells[1]);
  REQUIRE(meet.segs.size() == 1);
  CHECK(meet.segs[0].lo == meet.segs[0].hi);
  CHECK_FALSE(cells_intersect(*g, p.cells[0], p.cells[2]));
}

TEST_CASE("slice_partition handles exact division and the coarse case") {
  auto g = unit_interval();
  // 1 / (1/4) is exact, so four slices would hit the target; five are needed.
  Partition p = slice_partition(*g, rat(1, 4));
  CHECK(p.size() == 5);
  for (const Cell& c : p.cells) CHECK(total_length(c) == rat(1, 5));

  // A target above the diameter keeps the whole space as one cell.
  Partition whole = slice_partition(*g, rat(2));
  REQUIRE(whole.size() == 1);
  CHECK(whole.cells[0] == whole_space(*g));

  CHECK_THROWS_AS(slice_partition(*g, rat(0)), std::invalid_argument);
}

TEST_CASE("aligned_partition cuts at every affine run boundary") {
  auto g = unit_interval();
  PLMap f = skew_tent_map(g);
  Partition p = aligned_partition(*g, f, rat(1, 2));
  auto cuts = edge_cuts(p, 0);
  std::vector<Rat> want = {rat(0), rat(1, 3), rat(2, 5), rat(2, 3), rat(1)};
  CHECK(cuts == want);
  CHECK(p.size() == 4);
  CHECK(mesh_length_bound(p) < rat(1, 2));
  CHECK(union_all(*g, p.cells) == whole_space(*g));
  // No cell straddles the peak: each lies in one affine run of the map.
  for (const Cell& c : p.cells) {
    const Seg& s = c.segs[0];
    CHECK((s.hi <= rat(2, 5) || s.lo >= rat(2, 5)));
  }
}

TEST_CASE("refine_adaptive bounds length and image variation of children") {
  auto g = unit_interval();
  PLMap f = tent_map(g);
  Partition base;
  base.cells.push_back(whole_space(*g));
  Partition p = refine_adaptive(*g, f, base, rat(1, 2), rat(1, 2));
  // Length cuts at thirds, variation quantile cuts at fifths.
  auto cuts = edge_cuts(p, 0);
  std::vector<Rat> want = {rat(0),    rat(1, 5), rat(1, 3), rat(2, 5),
                           rat(3, 5), rat(2, 3), rat(4, 5), rat(1)};
  CHECK(cuts == want);
  REQUIRE(p.size() == 7);
  for (int i = 0; i < p.size(); ++i) {
    CHECK(p.parent_of[i] == 0);
    const Seg& s = p.cells[i].segs[0];
    CHECK(s.hi - s.lo < rat(1, 2));
    CHECK(variation_on(f, s.edge, s.lo, s.hi) < rat(1, 2));
  }
  CHECK(union_all(*g, p.cells) == whole_space(*g));
}

TEST_CASE("refine_adaptive places variation cuts past plateaus") {
  auto g = unit_interval();
  PLMap f = plateau_map(g);
  Partition base;
  base.cells.push_back(whole_space(*g));
  Partition p = refine_adaptive(*g, f, base, rat(1, 2), rat(3, 4));
  // Total variation 2, three quantile parts; the 2/3 level is reached at
  // x = 1/6 and the 4/3 level at x = 2/3, skipping the flat stretch.
  auto cuts = edge_cuts(p, 0);
  std::vector<Rat> want = {rat(0), rat(1, 6), rat(1, 3), rat(2, 3), rat(1)};
  CHECK(cuts == want);
  for (const Cell& c : p.cells) {
    const Seg& s = c.segs[0];
    CHECK(variation_on(f, s.edge, s.lo, s.hi) < rat(3, 4));
  }
}

TEST_CASE("refine_adaptive keeps parents across a multi edge space") {
  auto g = triod();
  PLMap id = identity_map(g);
  Partition base = slice_partition(*g, rat(3, 16));
  REQUIRE(base.size() == 6);
  Partition p = refine_adaptive(*g, id, base, rat(1, 16), rat(1));
  for (int i = 0; i < p.size(); ++i) {
    const Cell& child = p.cells[i];
    const Cell& parent = base.cells[p.parent_of[i]];
    CHECK(cell_subset(*g, child, parent));
  }
  CHECK(mesh_length_bound(p) < rat(1, 16));
  CHECK(union_all(*g, p.cells) == whole_space(*g));
}

TEST_CASE("find_cell returns the first covering cell") {
  auto g = triod();
  Partition p = slice_partition(*g, rat(1, 8));
  CHECK(find_cell(*g, p, g->point(0, rat(1, 24))) == 0);
  // Boundary offsets belong to the earlier slice.
  CHECK(find_cell(*g, p, g->point(0, rat(1, 12))) == 0);
  CHECK(find_cell(*g, p, g->vertex_point(0)) == 0);
  CHECK(find_cell(*g, p, g->point(2, rat(1, 5))) == 8);
}

TEST_CASE("interior_cover on the interval") {
  auto g = unit_interval();
  InteriorCover cov = interior_cover(*g, rat(1, 2));
  REQUIRE(cov.members.size() == 3);
  CHECK(cov.radius == rat(1, 16));
  CHECK(cov.lambda == rat(1, 16));
  for (const Cell& u : cov.members) CHECK(diameter(*g, u) < rat(1, 2));
  CHECK(union_all(*g, cov.members) == whole_space(*g));

  // Private quarters touch their own member only.
  for (size_t i = 0; i < cov.members.size(); ++i) {
    CHECK(cell_subset(*g, cov.private_parts[i], cov.members[i]));
    for (size_t j = 0; j < cov.members.size(); ++j) {
      if (i == j) continue;
      CHECK_FALSE(cells_intersect(*g, cov.private_parts[i], cov.members[j]));
    }
  }

  // Lebesgue property: a ball of radius lambda/4 sits inside some member.
  for (int k = 0; k <= 16; ++k) {
    Cell small = ball(*g, g->point(0, Rat(rat(k, 16))), rat(1, 64));
    bool inside = false;
    for (const Cell& u : cov.members) inside = inside || cell_subset(*g, small, u);
    CHECK(inside);
  }
}

TEST_CASE("interior_cover fattens across vertices") {
  auto g = triod();
  InteriorCover cov = interior_cover(*g, rat(1, 2));
  REQUIRE(cov.members.size() == 3);
  CHECK(cov.radius == rat(1, 16));
  // Each member reaches through the center into both other edges.
  REQUIRE(cov.members[0].segs.size() == 3);
  CHECK(cov.members[0].segs[1].hi == rat(1, 16));
  for (const Cell& u : cov.members) CHECK(diameter(*g, u) < rat(1, 2));
  for (size_t i = 0; i < cov.members.size(); ++i)
    for (size_t j = 0; j < cov.members.size(); ++j)
      if (i != j) CHECK_FALSE(cells_intersect(*g, cov.private_parts[i], cov.members[j]));
}

TEST_CASE("interior_cover collapses to the whole space when delta is large") {
  auto g = unit_interval();
  InteriorCover cov = interior_cover(*g, rat(4));
  REQUIRE(cov.members.size() == 1);
  CHECK(cov.members[0] == whole_space(*g));
  CHECK(cov.lambda == rat(1));
}
