#include <catch2/catch_amalgamated.hpp>

#include "peano/perturb.hpp"

using namespace peano;

namespace {

std::shared_ptr<const MetricGraph> half_interval() {
  return std::make_shared<MetricGraph>(2, std::vector<Edge>{{0, 1, rat(1, 2)}});
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
  const Rat len = g->edge_length(0);
  std::vector<Piece> ps;
  ps.push_back({0, rat(0), Rat(len / 2), Action::traverse(one_leg(0, rat(0), len))});
  ps.push_back({0, Rat(len / 2), len, Action::traverse(one_leg(0, len, rat(0)))});
  return PLMap(std::move(g), std::move(ps));
}

// Rotates each triod arm onto the next with constant collars at both ends.
PLMap triod_rotation(std::shared_ptr<const MetricGraph> g) {
  std::vector<Piece> ps;
  const GraphPoint hub = g->vertex_point(0);
  for (int e = 0; e < 3; ++e) {
    const int to = (e + 1) % 3;
    ps.push_back({e, rat(0), rat(1, 16), Action::constant(hub)});
    ps.push_back({e, rat(1, 16), rat(3, 16), Action::traverse(one_leg(to, rat(0), rat(1, 4)))});
    ps.push_back({e, rat(3, 16), rat(1, 4), Action::constant(g->vertex_point(to + 1))});
  }
  return PLMap(std::move(g), std::move(ps));
}

void check_gadget_geometry(const MetricGraph& g, const PerturbationGadget& gad) {
  REQUIRE(gad.xi > 0);
  for (int i = 0; i < static_cast<int>(gad.entries.size()); ++i) {
    const GadgetEntry& e = gad.entries[i];
    CHECK(e.cell == i);
    CHECK(g.distance(e.x, e.y) == Rat(3 * gad.xi));
    CHECK(Rat(e.window_hi - e.window_lo) >= Rat(16 * gad.xi));
    REQUIRE_FALSE(e.successors.empty());
    REQUIRE(e.anchor_windows.size() == e.successors.size());
    for (const auto& w : e.anchor_windows) {
      CHECK(w[0] >= e.unit);
      CHECK(w[0] <= w[1]);
      CHECK(w[1] <= Rat(2 * e.unit));
    }
    CHECK(e.cover_window[0] == e.unit);
    CHECK(e.cover_window[1] == Rat(2 * e.unit));
    CHECK_FALSE(e.sweep.empty());
  }
}

}  // namespace

TEST_CASE("mixing_perturbation rewires the flattened tent map") {
  auto g = half_interval();
  PLMap f = lc_approx(tent_map(g), rat(1, 16), rat(1, 2));
  const Rat eps = rat(1, 4);
  Partition fine = slice_partition(*g, rat(1, 80));
  REQUIRE(mesh_exact(*g, fine) < rat_min(Rat(eps / 4), modulus(f, Rat(eps / 4))));

  MixingBuild b = mixing_perturbation(f, fine, eps);
  CHECK(static_cast<int>(b.gadget.entries.size()) == fine.size());
  check_gadget_geometry(*g, b.gadget);
  for (const GadgetEntry& e : b.gadget.entries) CHECK(e.unit == 1);
  CHECK(Rat(sup_distance(f, b.map) + b.xi) < eps);

  ChainMixingResult base = chain_mixing_length(*g, f, Rat(eps / 4), 64);
  REQUIRE(base.n0.has_value());
  const int horizon = 4 * *base.n0;
  Partition coarse = slice_partition(*g, rat(15, 64));
  REQUIRE(mesh_exact(*g, coarse) < rat(1, 4));
  GnReport rep = gn_membership(*g, b.map, coarse, horizon);
  CHECK(rep.verdict == Verdict::kPass);
}

TEST_CASE("maps near a mixing perturbation keep its mixing windows") {
  auto g = half_interval();
  PLMap f = lc_approx(tent_map(g), rat(1, 16), rat(1, 2));
  MixingBuild b = mixing_perturbation(f, slice_partition(*g, rat(1, 80)), rat(1, 4));
  ChainMixingResult base = chain_mixing_length(*g, f, rat(1, 16), 64);
  REQUIRE(base.n0.has_value());
  Partition coarse = slice_partition(*g, rat(15, 64));
  for (std::uint64_t seed : {1, 2, 3}) {
    PLMap h = sample_mixing_neighbor(b.map, b.xi, seed);
    Rat d = sup_distance(b.map, h);
    CHECK(d > 0);
    CHECK(d < b.xi);
    GnReport rep = gn_membership(*g, h, coarse, 4 * *base.n0);
    CHECK(rep.verdict == Verdict::kPass);
  }
}

TEST_CASE("mixing_perturbation validates its input") {
  auto g = half_interval();
  PLMap f = lc_approx(tent_map(g), rat(1, 16), rat(1, 2));
  CHECK_THROWS_AS(mixing_perturbation(f, slice_partition(*g, rat(1, 80)), rat(0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(mixing_perturbation(f, slice_partition(*g, rat(1, 4)), rat(1, 4)),
                  std::invalid_argument);
}

TEST_CASE("shadowing_perturbation shadows sampled chains on the interval") {
  auto g = half_interval();
  PLMap f = lc_approx(tent_map(g), rat(1, 16), rat(1, 2));
  const Rat eps = rat(1, 5), nu = rat(3, 10);
  ShadowingBuild b = shadowing_perturbation(f, eps, nu);
  CHECK(static_cast<int>(b.gadget.entries.size()) == static_cast<int>(b.cover.members.size()));
  check_gadget_geometry(*g, b.gadget);
  CHECK(b.delta > 0);
  CHECK(b.xi <= b.delta);
  for (const GadgetEntry& e : b.gadget.entries) CHECK(e.unit == b.xi);
  CHECK(sup_distance(f, b.map) < nu);

  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    ChainCertificate c = sample_delta_chain(b.map, b.delta, 20, seed);
    REQUIRE(replay_chain(*g, b.map, c));
    auto w = shadowing_witness(*g, b.map, c, eps);
    REQUIRE(w.has_value());
    CHECK(w->replayed);
  }
}

TEST_CASE("shadowing_perturbation crosses the triod hub") {
  auto g = triod();
  PLMap f = triod_rotation(g);
  const Rat eps = rat(1, 8), nu = rat(1, 4);
  ShadowingBuild b = shadowing_perturbation(f, eps, nu);
  check_gadget_geometry(*g, b.gadget);
  CHECK(sup_distance(f, b.map) < nu);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    ChainCertificate c = sample_delta_chain(b.map, b.delta, 15, seed);
    REQUIRE(replay_chain(*g, b.map, c));
    auto w = shadowing_witness(*g, b.map, c, eps);
    REQUIRE(w.has_value());
    CHECK(w->replayed);
  }
}

TEST_CASE("shadowing_perturbation validates its input") {
  auto g = half_interval();
  PLMap f = lc_approx(tent_map(g), rat(1, 16), rat(1, 2));
  CHECK_THROWS_AS(shadowing_perturbation(f, rat(0), rat(1, 4)), std::invalid_argument);
  CHECK_THROWS_AS(shadowing_perturbation(f, rat(1, 8), rat(0)), std::invalid_argument);
}

TEST_CASE("sampled chains are deterministic in the seed") {
  auto g = half_interval();
  PLMap f = lc_approx(tent_map(g), rat(1, 16), rat(1, 2));
  ChainCertificate a = sample_delta_chain(f, rat(1, 32), 12, 7);
  ChainCertificate b = sample_delta_chain(f, rat(1, 32), 12, 7);
  REQUIRE(a.points.size() == b.points.size());
  for (size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i] == b.points[i]);
  REQUIRE(replay_chain(*g, f, a));

  ChainCertificate c = sample_delta_chain(f, rat(1, 32), 12, 8);
  bool differs = false;
  for (size_t i = 0; i < a.points.size(); ++i)
    if (!(a.points[i] == c.points[i])) differs = true;
  CHECK(differs);
  CHECK_THROWS_AS(sample_delta_chain(f, rat(0), 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_delta_chain(f, rat(1, 32), 0, 1), std::invalid_argument);
}
