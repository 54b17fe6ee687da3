#include <catch2/catch_amalgamated.hpp>

#include "peano/construct.hpp"

using namespace peano;

namespace {

std::shared_ptr<const MetricGraph> unit_interval() {
  return std::make_shared<MetricGraph>(2, std::vector<Edge>{{0, 1, rat(1)}});
}

std::shared_ptr<const MetricGraph> half_interval() {
  return std::make_shared<MetricGraph>(2, std::vector<Edge>{{0, 1, rat(1, 2)}});
}

std::shared_ptr<const MetricGraph> two_circle() {
  return std::make_shared<MetricGraph>(2,
                                       std::vector<Edge>{{0, 1, rat(1, 2)}, {0, 1, rat(1, 2)}});
}

Walk one_leg(int e, Rat a, Rat b) {
  Walk w;
  w.legs.push_back({e, std::move(a), std::move(b)});
  return w;
}

PLMap tent_map(std::shared_ptr<const MetricGraph> g) {
  const Rat len = g->edge_length(0);
  std::vector<Piece> ps;
  ps.push_back({0, rat(0), Rat(len / 2), Action::traverse(one_leg(0, rat(0), len))});
  ps.push_back({0, Rat(len / 2), len, Action::traverse(one_leg(0, len, rat(0)))});
  return PLMap(std::move(g), std::move(ps));
}

bool window_has_constant_piece(const PLMap& f, int edge, const Rat& a, const Rat& b) {
  for (const Piece& p : f.pieces())
    if (p.edge == edge && p.action.kind == ActionKind::kConstant && p.lo >= a && p.hi <= b)
      return true;
  return false;
}

}  // namespace

TEST_CASE("surjective_lc builds a mostly constant surjection") {
  auto g = unit_interval();
  PLMap f = surjective_lc(g, Cell{}, {}, g->vertex_point(0), rat(1, 2));
  CHECK(is_surjective(f));
  CHECK(lc_fraction(f) >= rat(1, 2));
  CHECK(image(f, whole_space(*g)) == whole_space(*g));
}

TEST_CASE("surjective_lc collapses the finite set and honors anchors") {
  auto g = unit_interval();
  GraphPoint y0 = g->point(0, rat(1, 2));
  Cell collapse = point_cell(*g, g->vertex_point(0));
  std::vector<std::pair<GraphPoint, GraphPoint>> anchors = {
      {g->point(0, rat(1, 2)), g->point(0, rat(9, 10))}};
  PLMap f = surjective_lc(g, collapse, anchors, y0, rat(1, 2));
  CHECK(f.evaluate(g->vertex_point(0)) == y0);
  CHECK(f.evaluate(g->point(0, rat(1, 2))) == g->point(0, rat(9, 10)));
  CHECK(is_surjective(f));
}

TEST_CASE("surjective_lc with a grain provisions plateaus everywhere") {
  auto g = unit_interval();
  Rat grain = rat(1, 16);
  PLMap f = surjective_lc(g, Cell{}, {}, g->vertex_point(0), rat(1, 2), grain);
  for (int k = 0; k <= 14; ++k) {
    Rat a = Rat(rat(k, 16));
    CHECK(window_has_constant_piece(f, 0, a, Rat(a + 2 * grain)));
  }
}

TEST_CASE("surjective_lc works on a space with parallel edges") {
  auto g = two_circle();
  PLMap f = surjective_lc(g, Cell{}, {}, g->vertex_point(0), rat(1, 4));
  CHECK(is_surjective(f));
  CHECK(lc_fraction(f) >= rat(3, 4));
}

TEST_CASE("surjective_lc validates its input") {
  auto g = unit_interval();
  GraphPoint y0 = g->vertex_point(0);
  CHECK_THROWS_AS(surjective_lc(g, Cell{}, {}, y0, rat(0)), std::invalid_argument);
  CHECK_THROWS_AS(surjective_lc(g, Cell{}, {}, y0, rat(1)), std::invalid_argument);
  Cell fat = make_cell(*g, {{0, rat(0), rat(1, 4)}});
  CHECK_THROWS_AS(surjective_lc(g, fat, {}, y0, rat(1, 2)), std::invalid_argument);
  Cell collapse = point_cell(*g, g->point(0, rat(1, 4)));
  std::vector<std::pair<GraphPoint, GraphPoint>> inside = {{g->point(0, rat(1, 4)), y0}};
  CHECK_THROWS_AS(surjective_lc(g, collapse, inside, y0, rat(1, 2)), std::invalid_argument);
  std::vector<std::pair<GraphPoint, GraphPoint>> dup = {
      {g->point(0, rat(1, 2)), y0}, {g->point(0, rat(1, 2)), g->point(0, rat(1, 4))}};
  CHECK_THROWS_AS(surjective_lc(g, Cell{}, dup, y0, rat(1, 2)), std::invalid_argument);
}

TEST_CASE("lc_approx flattens the tent map within budget") {
  auto g = unit_interval();
  PLMap f0 = tent_map(g);
  PLMap f = lc_approx(f0, rat(1, 10), rat(1, 4));
  CHECK(sup_distance(f0, f) < rat(1, 10));
  CHECK(lc_fraction(f) >= rat(3, 4));
  CHECK(is_surjective(f));
}

TEST_CASE("lc_approx flattens the identity map") {
  auto g = unit_interval();
  PLMap f0 = identity_map(g);
  PLMap f = lc_approx(f0, rat(1, 2), rat(1, 2));
  CHECK(sup_distance(f0, f) < rat(1, 2));
  CHECK(lc_fraction(f) >= rat(1, 2));
}

TEST_CASE("lc_approx leaves an already constant map untouched") {
  auto g = unit_interval();
  PLMap f0 = constant_map(g, g->point(0, rat(1, 3)));
  PLMap f = lc_approx(f0, rat(1, 10), rat(1, 2));
  CHECK(sup_distance(f0, f) == 0);
  CHECK(f.pieces().size() == f0.pieces().size());
}

TEST_CASE("lc_approx validates its input") {
  auto g = unit_interval();
  PLMap f0 = tent_map(g);
  CHECK_THROWS_AS(lc_approx(f0, rat(0), rat(1, 4)), std::invalid_argument);
  CHECK_THROWS_AS(lc_approx(f0, rat(1, 10), rat(1)), std::invalid_argument);
}

TEST_CASE("exact_devaney_refine with zero rounds returns the input") {
  auto g = half_interval();
  PLMap f = surjective_lc(g, Cell{}, {}, g->vertex_point(0), rat(1, 8));
  Partition start;
  start.cells.push_back(whole_space(*g));
  start.parent_of.push_back(-1);
  DevaneyBuild b = exact_devaney_refine(f, start, 1, rat(1, 2), 0);
  REQUIRE(b.rounds.size() == 1);
  CHECK(sup_distance(f, b.final_map()) == 0);
  CHECK(b.all_pass());
}

TEST_CASE("exact_devaney_refine rejects a map that cannot reach the whole space") {
  auto g = half_interval();
  PLMap f = constant_map(g, g->vertex_point(0));
  Partition start;
  start.cells.push_back(whole_space(*g));
  start.parent_of.push_back(-1);
  CHECK_THROWS_AS(exact_devaney_refine(f, start, 1, rat(1, 2), 1), construction_error);
}

TEST_CASE("exact_devaney builds two verified rounds on the interval") {
  auto g = half_interval();
  DevaneyBuild b = exact_devaney(g, rat(1, 2), 2);
  REQUIRE(b.rounds.size() == 3);
  CHECK(b.all_pass());
  for (const DevaneyRound& r : b.rounds) CHECK(r.clauses.all());
  // Total movement from the starting surjection is within twice the
  // starting mesh, which here is the diameter of the space.
  CHECK(sup_distance(b.rounds[0].map, b.final_map()) <= rat(1, 1));
  CHECK(b.rounds[1].periodic.size() >= static_cast<size_t>(b.rounds[1].part.size()));
  CHECK(b.rounds[2].periodic.size() > b.rounds[1].periodic.size());
  // The recorded budgets tighten geometrically.
  CHECK(b.rounds[1].clauses.mesh <= rat(1, 8));
  CHECK(b.rounds[2].clauses.mesh <= rat(1, 16));
}

TEST_CASE("exact_devaney is deterministic") {
  auto g = half_interval();
  DevaneyBuild a = exact_devaney(g, rat(1, 2), 1);
  DevaneyBuild b = exact_devaney(g, rat(1, 2), 1);
  CHECK(a.final_map().pieces().size() == b.final_map().pieces().size());
  CHECK(sup_distance(a.final_map(), b.final_map()) == 0);
}

TEST_CASE("break_chain_transitivity plants a replaying trap") {
  auto g = half_interval();
  PLMap f = lc_approx(identity_map(g), rat(1, 8), rat(1, 2));
  BreakCTResult out = break_chain_transitivity(f, rat(1, 4));
  CHECK(replay_trapping(*g, out.map, out.cert));
  CHECK(out.cert.gap > 0);
  CHECK(out.radius > 0);
  CHECK_FALSE(out.cert.trap.empty());
  CHECK_FALSE(out.cert.trap == whole_space(*g));
  CHECK(sup_distance(f, out.map) < rat(1, 4));
  REQUIRE(!out.loop.empty());
  // Every resolution below the certified gap now fails.
  CTReport post =
      chain_transitive(*g, out.map, {Rat(out.cert.gap * 3 / 4), out.suggested_delta});
  CHECK(post.verdict == Verdict::kFail);
  for (const CTLevel& lv : post.levels) CHECK(lv.verdict == Verdict::kFail);
}

TEST_CASE("break_chain_transitivity rejects maps that are not chain transitive") {
  auto g = half_interval();
  PLMap f = constant_map(g, g->vertex_point(0));
  CHECK_THROWS_AS(break_chain_transitivity(f, rat(1, 4)), construction_error);
}

TEST_CASE("leo_from_ct upgrades a flattened tent map") {
  auto g = half_interval();
  PLMap f = lc_approx(tent_map(g), rat(1, 16), rat(1, 2));
  LeoBuild out = leo_from_ct(f, rat(1, 4), 1);
  CHECK(out.n0 >= 1);
  CHECK(out.build.all_pass());
  CHECK(out.total_distance < rat(1, 4));
  REQUIRE(out.build.rounds.size() == 2);
  // Every first round cell expands onto the whole space within 1 + n0 steps.
  const Partition& f1 = out.build.rounds[1].part;
  const PLMap& final_map = out.build.final_map();
  auto orders = leo_orders(*g, final_map, f1, 1 + out.n0);
  for (const auto& k : orders) {
    REQUIRE(k.has_value());
    CHECK(*k <= 1 + out.n0);
  }
}
