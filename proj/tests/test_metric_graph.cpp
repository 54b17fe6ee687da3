#include <catch2/catch_amalgamated.hpp>

#include "peano/metric_graph.hpp"

using namespace peano;

namespace {

MetricGraph interval() { return MetricGraph(2, {{0, 1, rat(1, 2)}}); }

MetricGraph circle() {
  return MetricGraph(2, {{0, 1, rat(1, 2)}, {0, 1, rat(1, 2)}});
}

MetricGraph figure8() {
  return MetricGraph(1, {{0, 0, rat(1, 2)}, {0, 0, rat(1, 2)}});
}

MetricGraph triod() {
  return MetricGraph(4, {{0, 1, rat(1, 4)}, {0, 2, rat(1, 4)}, {0, 3, rat(1, 4)}});
}

}  // namespace

TEST_CASE("constructor validates input") {
  CHECK_THROWS_AS(MetricGraph(2, {}), std::invalid_argument);
  CHECK_THROWS_AS(MetricGraph(2, {{0, 1, rat(0)}}), std::invalid_argument);
  CHECK_THROWS_AS(MetricGraph(2, {{0, 2, rat(1)}}), std::invalid_argument);
  CHECK_THROWS_AS(MetricGraph(3, {{0, 1, rat(1)}}), std::invalid_argument);  // v2 isolated
  CHECK_NOTHROW(figure8());
}

TEST_CASE("points canonicalize endpoints to vertices") {
  MetricGraph g = interval();
  CHECK(g.point(0, rat(0)) == g.vertex_point(0));
  CHECK(g.point(0, rat(1, 2)) == g.vertex_point(1));
  GraphPoint mid = g.point(0, rat(1, 4));
  CHECK_FALSE(mid.at_vertex);
  CHECK(mid.offset == rat(1, 4));
  CHECK_THROWS_AS(g.point(0, rat(3, 4)), std::invalid_argument);
}

TEST_CASE("interval distances") {
  MetricGraph g = interval();
  CHECK(g.distance(g.vertex_point(0), g.vertex_point(1)) == rat(1, 2));
  CHECK(g.distance(g.point(0, rat(1, 8)), g.point(0, rat(3, 8))) == rat(1, 4));
  CHECK(g.distance(g.point(0, rat(1, 8)), g.vertex_point(1)) == rat(3, 8));
}

TEST_CASE("loop distances wrap around the vertex") {
  MetricGraph g = figure8();
  GraphPoint a = g.point(0, rat(1, 16));
  GraphPoint b = g.point(0, rat(7, 16));
  // Direct route 6/16; around the base vertex 1/16 + 1/16.
  CHECK(g.distance(a, b) == rat(1, 8));
  // Between the two loops only the vertex route exists.
  GraphPoint c = g.point(1, rat(1, 4));
  CHECK(g.distance(a, c) == rat(1, 16) + rat(1, 4));
  CHECK(g.distance(a, a) == rat(0));
}

TEST_CASE("parallel edges give a circle metric") {
  MetricGraph g = circle();
  CHECK(g.vertex_distance(0, 1) == rat(1, 2));
  GraphPoint p = g.point(0, rat(1, 8));
  GraphPoint q = g.point(1, rat(1, 8));
  CHECK(g.distance(p, q) == rat(1, 4));
  GraphPoint far = g.point(1, rat(1, 4));
  CHECK(g.distance(p, far) == rat(3, 8));
}

TEST_CASE("triod distances go through the center") {
  MetricGraph g = triod();
  CHECK(g.distance(g.vertex_point(1), g.vertex_point(2)) == rat(1, 2));
  CHECK(g.dist_to_vertex(g.point(0, rat(1, 8)), 3) == rat(3, 8));
}

TEST_CASE("geodesic walks realize the distance") {
  auto check_geo = [](const MetricGraph& g, const GraphPoint& p, const GraphPoint& q) {
    Walk w = g.geodesic(p, q);
    g.validate_walk(w);
    REQUIRE_FALSE(w.empty());
    CHECK(g.walk_start(w) == p);
    CHECK(g.walk_end(w) == q);
    CHECK(g.walk_length(w) == g.distance(p, q));
  };
  MetricGraph t = triod();
  check_geo(t, t.vertex_point(1), t.vertex_point(3));
  check_geo(t, t.point(0, rat(1, 8)), t.point(2, rat(1, 8)));
  MetricGraph f8 = figure8();
  check_geo(f8, f8.point(0, rat(1, 16)), f8.point(0, rat(7, 16)));
  check_geo(f8, f8.point(0, rat(1, 8)), f8.point(1, rat(1, 8)));
  MetricGraph c = circle();
  check_geo(c, c.point(0, rat(1, 8)), c.point(1, rat(1, 8)));
  CHECK(c.geodesic(c.vertex_point(0), c.vertex_point(0)).empty());
}

TEST_CASE("walk_point interpolates at constant speed") {
  MetricGraph t = triod();
  Walk w = t.geodesic(t.vertex_point(1), t.vertex_point(2));
  CHECK(t.walk_point(w, rat(0)) == t.vertex_point(1));
  CHECK(t.walk_point(w, rat(1, 4)) == t.vertex_point(0));
  CHECK(t.walk_point(w, rat(3, 8)) == t.point(1, rat(1, 8)));
  CHECK(t.walk_point(w, rat(1, 2)) == t.vertex_point(2));
  CHECK_THROWS_AS(t.walk_point(w, rat(5, 8)), std::invalid_argument);
}

TEST_CASE("walk utilities") {
  MetricGraph t = triod();
  Walk w = t.geodesic(t.vertex_point(1), t.point(2, rat(1, 8)));
  Walk r = reverse_walk(w);
  t.validate_walk(r);
  CHECK(t.walk_start(r) == t.walk_end(w));
  CHECK(t.walk_end(r) == t.walk_start(w));
  Walk rt = concat_walks(w, r);
  t.validate_walk(rt);
  CHECK(t.walk_length(rt) == rat(2) * t.walk_length(w));
}
