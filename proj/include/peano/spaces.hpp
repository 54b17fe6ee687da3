#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "peano/pl_map.hpp"

namespace peano {

// Reference spaces, all of diameter exactly 1/2.

inline std::shared_ptr<const MetricGraph> space_interval() {
  return std::make_shared<MetricGraph>(2, std::vector<Edge>{{0, 1, rat(1, 2)}});
}

inline std::shared_ptr<const MetricGraph> space_circle() {
  return std::make_shared<MetricGraph>(2,
                                       std::vector<Edge>{{0, 1, rat(1, 2)}, {0, 1, rat(1, 2)}});
}

inline std::shared_ptr<const MetricGraph> space_triod() {
  return std::make_shared<MetricGraph>(
      4, std::vector<Edge>{{0, 1, rat(1, 4)}, {0, 2, rat(1, 4)}, {0, 3, rat(1, 4)}});
}

inline std::shared_ptr<const MetricGraph> space_theta() {
  return std::make_shared<MetricGraph>(
      2, std::vector<Edge>{{0, 1, rat(1, 2)}, {0, 1, rat(1, 2)}, {0, 1, rat(1, 2)}});
}

inline std::shared_ptr<const MetricGraph> space_figure8() {
  return std::make_shared<MetricGraph>(1,
                                       std::vector<Edge>{{0, 0, rat(1, 2)}, {0, 0, rat(1, 2)}});
}

// Depth-two binary tree plus one extra root edge; longest leaf path has four
// edges of length 1/8.
inline std::shared_ptr<const MetricGraph> space_tree7() {
  return std::make_shared<MetricGraph>(
      8, std::vector<Edge>{{0, 1, rat(1, 8)},
                           {0, 2, rat(1, 8)},
                           {1, 3, rat(1, 8)},
                           {1, 4, rat(1, 8)},
                           {2, 5, rat(1, 8)},
                           {2, 6, rat(1, 8)},
                           {0, 7, rat(1, 8)}});
}

inline std::vector<std::pair<std::string, std::shared_ptr<const MetricGraph>>> golden_spaces() {
  return {{"interval", space_interval()}, {"circle", space_circle()},
          {"triod", space_triod()},       {"theta", space_theta()},
          {"figure8", space_figure8()},   {"tree7", space_tree7()}};
}

inline std::shared_ptr<const MetricGraph> unit_interval() {
  return std::make_shared<MetricGraph>(2, std::vector<Edge>{{0, 1, rat(1)}});
}

// Tent map on a one-arc space: the first half stretches over the whole edge,
// the second half folds back.
inline PLMap tent_map(std::shared_ptr<const MetricGraph> g) {
  const Rat len = g->edge_length(0);
  Walk up, down;
  up.legs.push_back({0, rat(0), len});
  down.legs.push_back({0, len, rat(0)});
  std::vector<Piece> ps;
  ps.push_back({0, rat(0), Rat(len / 2), Action::traverse(std::move(up))});
  ps.push_back({0, Rat(len / 2), len, Action::traverse(std::move(down))});
  return PLMap(std::move(g), std::move(ps));
}

// Seeded piecewise linear self-map of a one-arc space of unit length: at
// most 16 pieces, breakpoints on the 1/16 grid, node values on the 1/8 grid,
// and slopes bounded by 2 in absolute value.
inline PLMap random_interval_map(std::shared_ptr<const MetricGraph> g, std::uint64_t seed) {
  if (!g || g->num_edges() != 1 || g->edge_length(0) != 1)
    throw std::invalid_argument("random_interval_map: need a unit one-arc space");
  std::mt19937_64 rng(seed);
  const int pieces = 4 + static_cast<int>(rng() % 13);
  std::vector<bool> cut(16, false);
  int cuts = 0;
  while (cuts < pieces - 1) {
    int k = 1 + static_cast<int>(rng() % 15);
    if (cut[k]) continue;
    cut[k] = true;
    ++cuts;
  }
  std::vector<Rat> bks{rat(0)};
  for (int k = 1; k < 16; ++k)
    if (cut[k]) bks.push_back(rat(k, 16));
  bks.push_back(rat(1));

  std::vector<Rat> vals{Rat(rat(static_cast<int>(rng() % 9), 8))};
  for (size_t i = 1; i < bks.size(); ++i) {
    // |step| <= 2 * span keeps the slope within 2; spans are 1/16 multiples
    const long m = mpz_get_si(Rat(16 * (bks[i] - bks[i - 1])).get_num().get_mpz_t());
    long lo = -m, hi = m;
    const long floor8 = mpz_get_si(Rat(8 * vals[i - 1]).get_num().get_mpz_t());
    if (floor8 + lo < 0) lo = -floor8;
    if (floor8 + hi > 8) hi = 8 - floor8;
    const long j = lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    vals.push_back(Rat(vals[i - 1] + rat(j, 8)));
  }

  std::vector<Piece> ps;
  for (size_t i = 0; i + 1 < bks.size(); ++i) {
    if (vals[i] == vals[i + 1]) {
      ps.push_back({0, bks[i], bks[i + 1], Action::constant(g->point(0, vals[i]))});
    } else {
      Walk w;
      w.legs.push_back({0, vals[i], vals[i + 1]});
      ps.push_back({0, bks[i], bks[i + 1], Action::traverse(std::move(w))});
    }
  }
  return PLMap(std::move(g), std::move(ps));
}

}  // namespace peano
