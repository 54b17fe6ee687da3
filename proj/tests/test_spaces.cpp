#include <catch2/catch_amalgamated.hpp>

#include "peano/cell.hpp"
#include "peano/spaces.hpp"

using namespace peano;

TEST_CASE("reference spaces are connected with diameter one half") {
  for (const auto& [name, g] : golden_spaces()) {
    INFO(name);
    Cell x = whole_space(*g);
    CHECK(components(*g, x).size() == 1);
    CHECK(diameter(*g, x) == rat(1, 2));
    CHECK_NOTHROW(euler_cover_walk(*g, x, g->vertex_point(0)));
  }
}

TEST_CASE("reference space shapes") {
  CHECK(space_interval()->num_edges() == 1);
  CHECK(space_circle()->num_edges() == 2);
  CHECK(space_triod()->num_edges() == 3);
  CHECK(space_theta()->num_edges() == 3);
  CHECK(space_figure8()->num_edges() == 2);
  CHECK(space_figure8()->num_vertices() == 1);
  CHECK(space_tree7()->num_edges() == 7);
  auto t = space_tree7();
  CHECK(t->distance(t->vertex_point(3), t->vertex_point(5)) == rat(1, 2));
}

TEST_CASE("tent map folds the unit interval") {
  auto g = unit_interval();
  PLMap f = tent_map(g);
  CHECK(f.evaluate(g->point(0, rat(1, 4))) == g->point(0, rat(1, 2)));
  CHECK(f.evaluate(g->point(0, rat(3, 4))) == g->point(0, rat(1, 2)));
  CHECK(f.evaluate(g->point(0, rat(1, 2))) == g->vertex_point(1));
  CHECK(is_surjective(f));
}

TEST_CASE("random interval maps respect their grid and slope bounds") {
  auto g = unit_interval();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    PLMap f = random_interval_map(g, seed);
    INFO("seed " << seed);
    CHECK(f.pieces().size() <= 16);
    CHECK(f.pieces().size() >= 4);
    CHECK(lipschitz_constant(f) <= rat(2));
    for (const Piece& p : f.pieces()) {
      CHECK(Rat(16 * p.lo).get_den() == 1);
      CHECK(Rat(16 * p.hi).get_den() == 1);
    }
  }
}

TEST_CASE("random interval maps are seed deterministic") {
  auto g = unit_interval();
  PLMap a = random_interval_map(g, 11);
  PLMap b = random_interval_map(g, 11);
  REQUIRE(a.pieces().size() == b.pieces().size());
  CHECK(sup_distance(a, b) == 0);
  PLMap c = random_interval_map(g, 12);
  bool same = c.pieces().size() == a.pieces().size() && sup_distance(a, c) == 0;
  CHECK_FALSE(same);
}
