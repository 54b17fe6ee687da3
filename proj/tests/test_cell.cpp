#include <catch2/catch_amalgamated.hpp>

#include "peano/cell.hpp"

using namespace peano;

namespace {

MetricGraph triod() {
  return MetricGraph(4, {{0, 1, rat(1, 4)}, {0, 2, rat(1, 4)}, {0, 3, rat(1, 4)}});
}

MetricGraph figure8() {
  return MetricGraph(1, {{0, 0, rat(1, 2)}, {0, 0, rat(1, 2)}});
}

MetricGraph theta() {
  return MetricGraph(2, {{0, 1, rat(1, 2)}, {0, 1, rat(1, 2)}, {0, 1, rat(1, 2)}});
}

MetricGraph tree7() {
  return MetricGraph(8, {{0, 1, rat(1, 8)},
                         {0, 2, rat(1, 8)},
                         {0, 3, rat(1, 8)},
                         {1, 4, rat(1, 8)},
                         {1, 5, rat(1, 8)},
                         {2, 6, rat(1, 8)},
                         {2, 7, rat(1, 8)}});
}

// Distance from a point to a cell, for sampling based checks.
Rat point_to_cell(const MetricGraph& g, const GraphPoint& p, const Cell& c) {
  return cell_distance(g, point_cell(g, p), c);
}

}  // namespace

TEST_CASE("make_cell merges and canonicalizes") {
  MetricGraph g = triod();
  Cell c = make_cell(g, {{0, rat(1, 8), rat(1, 4)}, {0, rat(0), rat(1, 8)}});
  REQUIRE(c.segs.size() == 1);
  CHECK(c.segs[0] == Seg{0, rat(0), rat(1, 4)});

  // A lone vertex given on a non-canonical edge moves to the smallest one.
  Cell v = make_cell(g, {{2, rat(0), rat(0)}});
  REQUIRE(v.segs.size() == 1);
  CHECK(v.segs[0] == Seg{0, rat(0), rat(0)});

  // A lone vertex covered through another edge is dropped.
  Cell w = make_cell(g, {{2, rat(0), rat(0)}, {1, rat(0), rat(1, 8)}});
  REQUIRE(w.segs.size() == 1);
  CHECK(w.segs[0] == Seg{1, rat(0), rat(1, 8)});

  CHECK_THROWS_AS(make_cell(g, {{0, rat(1, 8), rat(1, 2)}}), std::invalid_argument);
}

TEST_CASE("containment and equality are structural") {
  MetricGraph g = triod();
  Cell a = make_cell(g, {{0, rat(0), rat(1, 8)}});
  Cell b = make_cell(g, {{0, rat(0), rat(1, 16)}, {0, rat(1, 16), rat(1, 8)}});
  CHECK(a == b);
  CHECK(cell_contains(g, a, g.vertex_point(0)));
  CHECK(cell_contains(g, a, g.point(0, rat(1, 8))));
  CHECK_FALSE(cell_contains(g, a, g.point(0, rat(3, 16))));
  CHECK_FALSE(cell_contains(g, a, g.vertex_point(1)));
}

TEST_CASE("set operations") {
  MetricGraph g = triod();
  Cell a = make_cell(g, {{0, rat(0), rat(1, 8)}, {1, rat(0), rat(1, 4)}});
  Cell b = make_cell(g, {{1, rat(1, 8), rat(1, 4)}, {2, rat(0), rat(1, 16)}});
  Cell u = union_cells(g, a, b);
  CHECK(cell_contains(g, u, g.point(0, rat(1, 16))));
  CHECK(cell_contains(g, u, g.point(2, rat(1, 32))));
  // Both cells touch the center vertex, so it survives intersection.
  Cell i = intersect_cells(g, a, b);
  Cell iexpect = make_cell(g, {{0, rat(0), rat(0)}, {1, rat(1, 8), rat(1, 4)}});
  CHECK(i == iexpect);

  // Intersection through a shared vertex on different edges.
  Cell va = make_cell(g, {{0, rat(0), rat(1, 8)}});
  Cell vb = make_cell(g, {{1, rat(0), rat(1, 8)}});
  Cell vi = intersect_cells(g, va, vb);
  REQUIRE(vi.segs.size() == 1);
  CHECK(vi.segs[0] == Seg{0, rat(0), rat(0)});
  CHECK(cells_intersect(g, va, vb));
}

TEST_CASE("complement closure") {
  MetricGraph g = triod();
  Cell c = make_cell(g, {{0, rat(0), rat(1, 8)}});
  Cell comp = complement_closure(g, c);
  CHECK(cell_contains(g, comp, g.point(0, rat(1, 8))));  // boundary point stays
  CHECK_FALSE(cell_contains(g, comp, g.point(0, rat(1, 16))));
  CHECK(cell_contains(g, comp, g.vertex_point(0)));  // via edges 1 and 2
  CHECK(complement_closure(g, whole_space(g)).empty());

  // Removing an isolated interior point leaves a dense complement: its
  // closure is the whole space.
  Cell pt = point_cell(g, g.point(0, rat(1, 8)));
  CHECK(complement_closure(g, pt) == whole_space(g));
}

TEST_CASE("contains_neighborhood") {
  MetricGraph g = triod();
  Cell c = make_cell(g, {{0, rat(0), rat(1, 8)}, {1, rat(0), rat(1, 8)}, {2, rat(0), rat(1, 8)}});
  CHECK(contains_neighborhood(g, c, g.vertex_point(0)));
  CHECK(contains_neighborhood(g, c, g.point(0, rat(1, 16))));
  CHECK_FALSE(contains_neighborhood(g, c, g.point(0, rat(1, 8))));
  Cell two = make_cell(g, {{0, rat(0), rat(1, 8)}, {1, rat(0), rat(1, 8)}});
  CHECK_FALSE(contains_neighborhood(g, two, g.vertex_point(0)));
}

TEST_CASE("diameters of the model spaces are 1/2") {
  CHECK(diameter(triod(), whole_space(triod())) == rat(1, 2));
  CHECK(diameter(figure8(), whole_space(figure8())) == rat(1, 2));
  CHECK(diameter(theta(), whole_space(theta())) == rat(1, 2));
  CHECK(diameter(tree7(), whole_space(tree7())) == rat(1, 2));
  MetricGraph circle(2, {{0, 1, rat(1, 2)}, {0, 1, rat(1, 2)}});
  CHECK(diameter(circle, whole_space(circle)) == rat(1, 2));
  MetricGraph interval(2, {{0, 1, rat(1, 2)}});
  CHECK(diameter(interval, whole_space(interval)) == rat(1, 2));
}

TEST_CASE("diameter on a loop accounts for the short way round") {
  MetricGraph g = figure8();
  // On [1/8, 3/8] of one loop, d(x, y) = min(y - x, x + 1/2 - y).
  Cell arc = make_cell(g, {{0, rat(1, 8), rat(3, 8)}});
  CHECK(diameter(g, arc) == rat(1, 4));
  // Two short arcs meeting at the base vertex.
  Cell pair = make_cell(g, {{0, rat(3, 8), rat(1, 2)}, {1, rat(0), rat(1, 8)}});
  CHECK(diameter(g, pair) == rat(1, 4));
}

TEST_CASE("cell distance") {
  MetricGraph g = triod();
  Cell a = make_cell(g, {{0, rat(0), rat(1, 16)}});
  Cell b = make_cell(g, {{1, rat(1, 8), rat(1, 4)}});
  CHECK(cell_distance(g, a, b) == rat(1, 8));
  Cell c = make_cell(g, {{0, rat(0), rat(1, 8)}});
  Cell d = make_cell(g, {{1, rat(0), rat(1, 8)}});
  CHECK(cell_distance(g, c, d) == rat(0));  // both contain the center vertex
}

TEST_CASE("balls match hand computed sublevel sets") {
  MetricGraph g = triod();
  Cell b = ball(g, g.point(0, rat(1, 8)), rat(1, 4));
  Cell expect = make_cell(g, {{0, rat(0), rat(1, 4)},
                              {1, rat(0), rat(1, 8)},
                              {2, rat(0), rat(1, 8)}});
  CHECK(b == expect);

  // Radius zero ball is the point itself.
  CHECK(ball(g, g.point(1, rat(1, 8)), rat(0)) == point_cell(g, g.point(1, rat(1, 8))));

  // On a loop the ball wraps both ways around the base vertex.
  MetricGraph f8 = figure8();
  Cell lb = ball(f8, f8.point(0, rat(1, 16)), rat(1, 8));
  Cell lexpect = make_cell(f8, {{0, rat(0), rat(3, 16)},
                                {0, rat(7, 16), rat(1, 2)},
                                {1, rat(0), rat(1, 16)},
                                {1, rat(7, 16), rat(1, 2)}});
  CHECK(lb == lexpect);
}

TEST_CASE("ball membership agrees with distance on a sample grid") {
  MetricGraph g = figure8();
  GraphPoint c = g.point(1, rat(3, 8));
  Rat r = rat(5, 32);
  Cell b = ball(g, c, r);
  for (int e = 0; e < 2; ++e)
    for (int k = 0; k <= 32; ++k) {
      GraphPoint p = g.point(e, rat(k, 64));
      CHECK(cell_contains(g, b, p) == (g.distance(p, c) <= r));
    }
}

TEST_CASE("fatten equals the closed neighborhood on a sample grid") {
  MetricGraph g = figure8();
  Cell f = make_cell(g, {{0, rat(1, 8), rat(3, 16)}, {1, rat(0), rat(1, 16)}});
  Rat r = rat(1, 8);
  Cell fat = fatten(g, f, r);
  for (int e = 0; e < 2; ++e)
    for (int k = 0; k <= 32; ++k) {
      GraphPoint p = g.point(e, rat(k, 64));
      CHECK(cell_contains(g, fat, p) == (point_to_cell(g, p, f) <= r));
    }
  MetricGraph t = triod();
  Cell tf = make_cell(t, {{0, rat(1, 8), rat(1, 4)}});
  Cell tfat = fatten(t, tf, rat(1, 4));
  Cell texpect = make_cell(t, {{0, rat(0), rat(1, 4)},
                               {1, rat(0), rat(1, 8)},
                               {2, rat(0), rat(1, 8)}});
  CHECK(tfat == texpect);
}

TEST_CASE("connectivity") {
  MetricGraph g = triod();
  Cell conn = make_cell(g, {{0, rat(0), rat(1, 8)}, {1, rat(0), rat(1, 8)}});
  CHECK(is_connected(g, conn));
  Cell split = make_cell(g, {{0, rat(1, 8), rat(1, 4)}, {1, rat(1, 8), rat(1, 4)}});
  CHECK_FALSE(is_connected(g, split));
  CHECK(components(g, split).size() == 2);
  CHECK(is_connected(g, whole_space(g)));
}

TEST_CASE("path_in_cell stays inside the cell") {
  MetricGraph g = triod();
  Cell c = make_cell(g, {{0, rat(0), rat(1, 4)}, {1, rat(0), rat(1, 4)}});
  GraphPoint p = g.point(0, rat(3, 16));
  GraphPoint q = g.vertex_point(2);
  Walk w = path_in_cell(g, c, p, q);
  g.validate_walk(w);
  CHECK(g.walk_start(w) == p);
  CHECK(g.walk_end(w) == q);
  for (const Leg& l : w.legs) {
    Cell leg_cell = make_cell(g, {{l.edge, rat_min(l.lo, l.hi), rat_max(l.lo, l.hi)}});
    CHECK(intersect_cells(g, leg_cell, c) == leg_cell);
  }
  CHECK(path_in_cell(g, c, p, p).empty());

  Cell split = make_cell(g, {{0, rat(1, 8), rat(1, 4)}, {1, rat(1, 8), rat(1, 4)}});
  CHECK_THROWS_AS(path_in_cell(g, split, g.vertex_point(1), g.vertex_point(2)),
                  std::invalid_argument);
}

TEST_CASE("euler cover walks every segment twice") {
  MetricGraph g = figure8();
  Cell x = whole_space(g);
  GraphPoint start = g.point(0, rat(1, 4));
  Walk w = euler_cover_walk(g, x, start);
  g.validate_walk(w);
  CHECK(g.walk_start(w) == start);
  CHECK(g.walk_end(w) == start);
  CHECK(g.walk_length(w) == rat(2));
  // Each direction of each sub-segment appears exactly once.
  Rat fwd0 = 0, bwd0 = 0, fwd1 = 0, bwd1 = 0;
  for (const Leg& l : w.legs) {
    Rat span = l.span();
    if (l.edge == 0) (l.lo < l.hi ? fwd0 : bwd0) += span;
    else (l.lo < l.hi ? fwd1 : bwd1) += span;
  }
  CHECK(fwd0 == rat(1, 2));
  CHECK(bwd0 == rat(1, 2));
  CHECK(fwd1 == rat(1, 2));
  CHECK(bwd1 == rat(1, 2));

  MetricGraph t = triod();
  Walk tw = euler_cover_walk(t, whole_space(t), t.vertex_point(3));
  t.validate_walk(tw);
  CHECK(t.walk_start(tw) == t.vertex_point(3));
  CHECK(t.walk_end(tw) == t.vertex_point(3));
  CHECK(t.walk_length(tw) == rat(3, 2));
}
