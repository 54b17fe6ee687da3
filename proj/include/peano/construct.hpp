#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "peano/verify.hpp"

namespace peano {

// Raised when a construction cannot meet its verified contract on the input.
struct construction_error : std::runtime_error {
  explicit construction_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void sort_points(std::vector<GraphPoint>& pts) {
  std::sort(pts.begin(), pts.end(),
            [](const GraphPoint& a, const GraphPoint& b) { return key_of(a) < key_of(b); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
}

inline bool point_member(const std::vector<GraphPoint>& sorted, const GraphPoint& p) {
  auto it = std::lower_bound(
      sorted.begin(), sorted.end(), p,
      [](const GraphPoint& a, const GraphPoint& b) { return key_of(a) < key_of(b); });
  return it != sorted.end() && *it == p;
}

inline Rat halve_pow(Rat value, int n) {
  for (int i = 0; i < n; ++i) value /= 2;
  return value;
}

inline void append_legs(Walk& acc, const Walk& w) {
  acc.legs.insert(acc.legs.end(), w.legs.begin(), w.legs.end());
}

inline Cell walk_cell(const MetricGraph& g, const Walk& w) {
  std::vector<Seg> segs;
  for (const Leg& l : w.legs) segs.push_back({l.edge, rat_min(l.lo, l.hi), rat_max(l.lo, l.hi)});
  return make_cell(g, std::move(segs));
}

// First walk parameter at which w passes p, scanning legs in order.
inline std::optional<Rat> walk_param_of(const MetricGraph& g, const Walk& w,
                                        const std::vector<Rat>& pre, const GraphPoint& p) {
  for (size_t i = 0; i < w.legs.size(); ++i) {
    const Leg& l = w.legs[i];
    if (p.at_vertex) {
      if (g.point(l.edge, l.lo) == p) return pre[i];
      if (g.point(l.edge, l.hi) == p) return pre[i + 1];
      continue;
    }
    if (l.edge != p.edge) continue;
    if (p.offset < rat_min(l.lo, l.hi) || p.offset > rat_max(l.lo, l.hi)) continue;
    return Rat(pre[i] + rat_abs(p.offset - l.lo));
  }
  return std::nullopt;
}

// Joins every component of t to the anchor by a geodesic link.
inline Cell connect_from(const MetricGraph& g, Cell t, const GraphPoint& anchor) {
  t = union_cells(g, t, point_cell(g, anchor));
  auto comps = components(g, t);
  if (comps.size() <= 1) return t;
  std::vector<Cell> parts;
  int home = -1;
  for (const auto& idxs : comps) {
    std::vector<Seg> ss;
    for (int i : idxs) ss.push_back(t.segs[i]);
    parts.push_back(make_cell(g, std::move(ss)));
    if (cell_contains(g, parts.back(), anchor)) home = static_cast<int>(parts.size()) - 1;
  }
  Cell out = t;
  for (int k = 0; k < static_cast<int>(parts.size()); ++k) {
    if (k == home) continue;
    Walk link = g.geodesic(anchor, cell_base_point(g, parts[k]));
    if (!link.empty()) out = union_cells(g, out, walk_cell(g, link));
  }
  return out;
}

// First point of the cell outside the sorted forbidden set, halving toward
// the segment end while the obvious candidates are taken.
inline std::optional<GraphPoint> pick_point_in(const MetricGraph& g, const Cell& c,
                                               const std::vector<GraphPoint>& forbidden) {
  for (const Seg& s : c.segs) {
    if (s.lo == s.hi) {
      GraphPoint p = g.point(s.edge, s.lo);
      if (!point_member(forbidden, p)) return p;
      continue;
    }
    Rat a = s.lo;
    for (size_t k = 0; k <= forbidden.size() + 1; ++k) {
      GraphPoint p = g.point(s.edge, a);
      if (!point_member(forbidden, p)) return p;
      a = (a + s.hi) / 2;
    }
  }
  return std::nullopt;
}

// A point free stretch of a constant piece inside the cell.
struct PlateauSite {
  int edge = -1;
  Rat lo, hi;
  GraphPoint value;
  bool ok() const { return edge >= 0; }
};

inline PlateauSite plateau_site(const PLMap& f, const Cell& cell,
                                const std::vector<GraphPoint>& avoid) {
  for (const Seg& s : cell.segs) {
    if (s.lo == s.hi) continue;
    int i0 = f.piece_index_at(s.edge, s.lo);
    for (int i = i0; i < static_cast<int>(f.pieces().size()); ++i) {
      const Piece& p = f.pieces()[i];
      if (p.edge != s.edge || p.lo >= s.hi) break;
      if (p.action.kind != ActionKind::kConstant) continue;
      Rat u = rat_max(p.lo, s.lo), v = rat_min(p.hi, s.hi);
      if (u >= v) continue;
      std::vector<Rat> walls = {u, v};
      for (const GraphPoint& q : avoid)
        if (!q.at_vertex && q.edge == s.edge && u < q.offset && q.offset < v)
          walls.push_back(q.offset);
      std::sort(walls.begin(), walls.end());
      for (size_t k = 0; k + 1 < walls.size(); ++k)
        if (walls[k] < walls[k + 1]) return {s.edge, walls[k], walls[k + 1], p.action.value};
    }
  }
  return {};
}

// Plants a plateau on a non constant affine run inside the cell, moving
// values by at most value_budget and dodging the avoid set.
inline std::optional<Patch> plant_patch(const PLMap& f, const Cell& cell,
                                        const std::vector<GraphPoint>& avoid,
                                        const Rat& value_budget) {
  for (const Seg& s : cell.segs) {
    if (s.lo == s.hi) continue;
    for (const AffineSpan& sp : affine_atlas(f, s.edge)) {
      if (sp.constant) continue;
      Rat u = rat_max(sp.x0, s.lo), v = rat_min(sp.x1, s.hi);
      if (u >= v) continue;
      Rat speed = rat_abs(sp.o1 - sp.o0) / (sp.x1 - sp.x0);
      Rat w = rat_min(Rat((v - u) / 2), Rat(value_budget / speed));
      Rat p0 = u + (v - u) / 4, p1 = p0 + w;
      std::vector<Rat> walls = {p0, p1};
      for (const GraphPoint& q : avoid)
        if (!q.at_vertex && q.edge == s.edge && p0 < q.offset && q.offset < p1)
          walls.push_back(q.offset);
      std::sort(walls.begin(), walls.end());
      for (size_t k = 0; k + 1 < walls.size(); ++k)
        if (walls[k] < walls[k + 1])
          return plateau_patch(f, s.edge, walls[k], Rat((walls[k] + walls[k + 1]) / 2),
                               walls[k + 1]);
    }
  }
  return std::nullopt;
}

// Greedy backward descent from x through the forward images of h. Any
// candidate in preimage(t) meeting the next lower image extends to a full
// chain from h, so the first choice always works and nothing backtracks.
inline std::optional<GraphPoint> pull_back_point(const PLMap& f, const GraphPoint& x,
                                                 const Cell& h, int steps,
                                                 const std::vector<GraphPoint>& forbidden) {
  const MetricGraph& g = f.graph();
  std::vector<Cell> y(steps + 1);
  y[0] = h;
  for (int j = 1; j <= steps; ++j) y[j] = image(f, y[j - 1]);
  if (!cell_contains(g, y[steps], x)) return std::nullopt;
  GraphPoint t = x;
  for (int j = steps; j >= 1; --j) {
    Cell c = intersect_cells(g, preimage(f, point_cell(g, t)), y[j - 1]);
    if (c.empty()) return std::nullopt;
    if (j == 1) return pick_point_in(g, c, forbidden);
    t = cell_base_point(g, c);
  }
  return t;
}

// Whether some constant piece overlaps (a, b) with positive length.
inline bool window_meets_plateau(const PLMap& f, int edge, const Rat& a, const Rat& b) {
  for (int i = f.piece_index_at(edge, a); i < static_cast<int>(f.pieces().size()); ++i) {
    const Piece& p = f.pieces()[i];
    if (p.edge != edge || p.lo >= b) break;
    if (p.action.kind == ActionKind::kConstant && rat_min(p.hi, b) > rat_max(p.lo, a))
      return true;
  }
  return false;
}

// Plants plateaus so every aligned window of the given spacing meets a
// constant piece positively; any later interval of length >= 2 spacing
// contains a whole window, so it meets one too. Values move by at most
// value_budget.
inline void provision_plateaus(PLMap& cur, const Rat& spacing, const Rat& value_budget) {
  const MetricGraph& g = cur.graph();
  std::vector<Patch> plants;
  for (int e = 0; e < g.num_edges(); ++e) {
    const Rat len = g.edge_length(e);
    long parts = ceil_div(len, spacing);
    for (long k = 0; k < parts; ++k) {
      Rat a = len * k / parts, b = len * (k + 1) / parts;
      if (window_meets_plateau(cur, e, a, b)) continue;
      auto p = plant_patch(cur, make_cell(g, {{e, a, b}}), {}, value_budget);
      if (!p) throw construction_error("provision_plateaus: window admits no plateau");
      plants.push_back(std::move(*p));
    }
  }
  if (!plants.empty()) cur.apply_patches(std::move(plants));
}

// Exact image tower test with early exit for surjective maps.
inline bool reaches_whole(const PLMap& f, const Cell& c, int steps, bool surjective) {
  const Cell x = whole_space(f.graph());
  Cell cur = c;
  for (int i = 0; i < steps; ++i) {
    if (surjective && cur == x) return true;
    cur = image(f, cur);
  }
  return cur == x;
}

struct CarvePlan {
  bool ready = false;
  int edge = -1;
  Rat gap_lo, gap_hi;
  GraphPoint value;
  GraphPoint x;
  std::vector<GraphPoint> orbit;
  int target = -1;
};

}  // namespace detail

// Continuous surjection whose constant pieces cover at least 1 - eta of
// every edge. The finite set collapse goes to y0, each anchor pins
// f(x) = y, and with a positive grain every subinterval of length at least
// 2 grain contains a whole constant piece.
inline PLMap surjective_lc(std::shared_ptr<const MetricGraph> graph, const Cell& collapse,
                           const std::vector<std::pair<GraphPoint, GraphPoint>>& anchors,
                           const GraphPoint& y0, const Rat& eta, const Rat& grain = 0) {
  if (!graph) throw std::invalid_argument("surjective_lc: null graph");
  const MetricGraph& g = *graph;
  if (eta <= 0 || eta >= 1) throw std::invalid_argument("surjective_lc: eta must be in (0, 1)");
  if (grain < 0) throw std::invalid_argument("surjective_lc: grain must be nonnegative");
  if (total_length(collapse) != 0)
    throw std::invalid_argument("surjective_lc: collapse set must be nowhere dense");
  for (size_t i = 0; i < anchors.size(); ++i) {
    if (cell_contains(g, collapse, anchors[i].first))
      throw std::invalid_argument("surjective_lc: anchor point inside the collapse set");
    for (size_t j = 0; j < i; ++j)
      if (anchors[i].first == anchors[j].first)
        throw std::invalid_argument("surjective_lc: duplicate anchor point");
  }

  std::vector<GraphPoint> val(g.num_vertices(), y0);
  std::map<int, std::vector<std::pair<Rat, GraphPoint>>> pins;
  auto pin = [&](const GraphPoint& x, const GraphPoint& y) {
    if (x.at_vertex) val[x.vertex] = y;
    else pins[x.edge].push_back({x.offset, y});
  };
  for (const Seg& s : collapse.segs) pin(g.point(s.edge, s.lo), y0);
  for (const auto& [x, y] : anchors) pin(x, y);

  GraphPoint base = g.vertex_point(0);
  Walk tour = euler_cover_walk(g, whole_space(g), base);

  std::vector<Piece> pieces;
  for (int e = 0; e < g.num_edges(); ++e) {
    const Rat len = g.edge_length(e);
    std::vector<std::pair<Rat, GraphPoint>> nodes;
    nodes.push_back({Rat(0), val[g.edge(e).from]});
    auto it = pins.find(e);
    if (it != pins.end()) {
      std::sort(it->second.begin(), it->second.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [off, y] : it->second) {
        if (nodes.back().first == off) {
          if (!(nodes.back().second == y))
            throw std::invalid_argument("surjective_lc: conflicting pins at one point");
          continue;
        }
        nodes.push_back({off, y});
      }
    }
    nodes.push_back({len, val[g.edge(e).to]});
    for (size_t k = 0; k + 1 < nodes.size(); ++k) {
      const Rat a = nodes[k].first, b = nodes[k + 1].first;
      Walk w;
      detail::append_legs(w, g.geodesic(nodes[k].second, base));
      detail::append_legs(w, tour);
      detail::append_legs(w, g.geodesic(base, nodes[k + 1].second));
      const Rat wl = g.walk_length(w);
      auto pre = detail::walk_prefix(w);
      long parts = grain > 0 ? ceil_div(Rat(b - a), grain) : 1;
      for (long j = 0; j < parts; ++j) {
        Rat aj = a + (b - a) * j / parts;
        Rat aj1 = a + (b - a) * (j + 1) / parts;
        Rat mid = aj1 - (aj1 - aj) * eta / 2;
        Rat s0 = wl * j / parts, s1 = wl * (j + 1) / parts;
        pieces.push_back({e, aj, mid, Action::constant(g.walk_point(w, s0))});
        pieces.push_back({e, mid, aj1, Action::traverse(sub_walk(w, pre, s0, s1))});
      }
    }
  }
  PLMap f(std::move(graph), std::move(pieces));
  if (!is_surjective(f)) throw construction_error("surjective_lc: image misses the space");
  if (Rat(1) - lc_fraction(f) > eta)
    throw construction_error("surjective_lc: constant share below target");
  for (const auto& [x, y] : anchors)
    if (!(f.evaluate(x) == y)) throw construction_error("surjective_lc: anchor not realized");
  for (const Seg& s : collapse.segs)
    if (!(f.evaluate(g.point(s.edge, s.lo)) == y0))
      throw construction_error("surjective_lc: collapse set not sent to y0");
  return f;
}

// Flattens f until constant pieces cover at least 1 - eta of the space,
// staying strictly within eps. Each sweep splits the edges into chunks of
// small variation and squeezes every non constant chunk into its left half,
// so the non constant share halves while images are preserved.
inline PLMap lc_approx(const PLMap& f0, const Rat& eps, const Rat& eta) {
  if (eps <= 0) throw std::invalid_argument("lc_approx: eps must be positive");
  if (eta <= 0 || eta >= 1) throw std::invalid_argument("lc_approx: eta must be in (0, 1)");
  const MetricGraph& g = f0.graph();
  PLMap f = f0;
  Rat budget = eps;
  for (int sweep = 1; Rat(1) - lc_fraction(f) > eta; ++sweep) {
    if (sweep > 64) throw construction_error("lc_approx: flattening did not converge");
    budget /= 2;
    std::vector<Patch> patches;
    for (int e = 0; e < g.num_edges(); ++e) {
      const Rat len = g.edge_length(e);
      auto cuts = detail::adaptive_cuts(f, e, Rat(0), len, Rat(len * 2), budget);
      for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (variation_on(f, e, cuts[i], cuts[i + 1]) == 0) continue;
        patches.push_back(
            plateau_patch(f, e, cuts[i], Rat((cuts[i] + cuts[i + 1]) / 2), cuts[i + 1]));
      }
    }
    if (patches.empty()) throw construction_error("lc_approx: no flattening progress");
    f.apply_patches(std::move(patches));
  }
  if (!(sup_distance(f0, f) < eps))
    throw construction_error("lc_approx: distance budget exceeded");
  return f;
}

// Exactly checked clauses of one refinement round.
struct ClauseReport {
  Rat dist_prev = 0, dist_budget = 0;
  Rat mesh = 0, mesh_budget = 0;
  bool c1_distance = true;   // sup distance to the previous map within budget
  bool c2_towers = false;    // every earlier cell reaches the whole space
  bool c3_mesh = true;       // partition mesh within budget
  bool c4_refines = true;    // children tile their parents exactly
  bool c5_invariant = false; // the periodic set maps exactly onto itself
  bool c6_preserved = true;  // earlier periodic points keep their values
  bool c7_dense = true;      // every cell holds a periodic point
  bool all() const {
    return c1_distance && c2_towers && c3_mesh && c4_refines && c5_invariant && c6_preserved &&
           c7_dense;
  }
};

struct DevaneyRound {
  PLMap map;
  Partition part;
  std::vector<GraphPoint> periodic;
  ClauseReport clauses;
};

struct DevaneyBuild {
  Rat eps;
  int n0 = 1;
  std::vector<DevaneyRound> rounds;
  const PLMap& final_map() const { return rounds.back().map; }
  bool all_pass() const {
    for (const DevaneyRound& r : rounds)
      if (!r.clauses.all()) return false;
    return true;
  }
};

// Round by round refinement toward exact Devaney chaos. Each round refines
// the partition, secures a plateau per cell, pins a new exact periodic orbit
// through every cell, and recarves each plateau so the cell covers a whole
// previous cell. All clauses are re-verified exactly and recorded; rounds[0]
// reports the hypothesis checks on the input pair.
inline DevaneyBuild exact_devaney_refine(const PLMap& f, const Partition& start, int n0,
                                         const Rat& eps, int rounds) {
  if (eps <= 0) throw std::invalid_argument("exact_devaney_refine: eps must be positive");
  if (n0 < 1) throw std::invalid_argument("exact_devaney_refine: n0 must be at least 1");
  if (rounds < 0) throw std::invalid_argument("exact_devaney_refine: negative depth");
  if (start.size() == 0) throw std::invalid_argument("exact_devaney_refine: empty partition");
  const MetricGraph& g = f.graph();

  // Budgets are capped by the starting mesh so the total movement stays
  // within twice the mesh of the starting partition regardless of eps.
  const Rat eps_eff = rat_min(eps, mesh_exact(g, start));

  DevaneyBuild out;
  out.eps = eps_eff;
  out.n0 = n0;
  {
    DevaneyRound r0{f, start, {}, {}};
    bool surj = is_surjective(f);
    std::vector<char> ok(start.size(), 1);
    parallel_for(start.size(),
                 [&](int i) { ok[i] = detail::reaches_whole(f, start.cells[i], n0, surj); });
    r0.clauses.c2_towers = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    if (!r0.clauses.c2_towers)
      throw construction_error("exact_devaney_refine: a starting cell misses the whole space");
    r0.clauses.c5_invariant = true;
    r0.clauses.mesh = mesh_exact(g, start);
    out.rounds.push_back(std::move(r0));
  }

  for (int n = 0; n < rounds; ++n) {
    const DevaneyRound& prev = out.rounds.back();
    const Rat step_budget = detail::halve_pow(eps_eff, n);
    const Rat mesh_budget = detail::halve_pow(eps_eff, n + 2);
    const int steps = n + n0;
    Partition part = refine_uniform(g, prev.part, mesh_budget);
    const int m = part.size();

    PLMap cur = prev.map;
    {
      std::vector<Patch> plants;
      for (int ci = 0; ci < m; ++ci) {
        if (detail::plateau_site(cur, part.cells[ci], prev.periodic).ok()) continue;
        auto p = detail::plant_patch(cur, part.cells[ci], prev.periodic, mesh_budget);
        if (!p) throw construction_error("exact_devaney_refine: cell admits no plateau");
        plants.push_back(std::move(*p));
      }
      if (!plants.empty()) cur.apply_patches(std::move(plants));
    }

    // Pin one plateau point per cell, clear of the periodic set and of one
    // another, then thread an exact orbit of length steps back onto it. An
    // orbit running through another pin breaks once that pin is recarved, so
    // such pins are re-drawn until the family settles.
    std::vector<detail::CarvePlan> plans(m);
    std::vector<std::vector<GraphPoint>> banned(m);
    auto other_pins = [&](int skip) {
      std::vector<GraphPoint> xs;
      for (int cj = 0; cj < m; ++cj)
        if (cj != skip && plans[cj].ready) xs.push_back(plans[cj].x);
      return xs;
    };
    auto choose_pin = [&](int ci) {
      std::vector<GraphPoint> avoid = prev.periodic;
      for (GraphPoint& p : other_pins(ci)) avoid.push_back(std::move(p));
      for (const GraphPoint& p : banned[ci]) avoid.push_back(p);
      detail::sort_points(avoid);
      detail::PlateauSite site = detail::plateau_site(cur, part.cells[ci], avoid);
      if (!site.ok()) throw construction_error("exact_devaney_refine: plateau lost while pinning");
      plans[ci].edge = site.edge;
      plans[ci].gap_lo = site.lo;
      plans[ci].gap_hi = site.hi;
      plans[ci].value = site.value;
      plans[ci].x = g.point(site.edge, Rat((site.lo + site.hi) / 2));
      plans[ci].ready = true;
      plans[ci].orbit.clear();
    };
    auto thread_orbit = [&](int ci) -> bool {
      detail::CarvePlan& pl = plans[ci];
      pl.target = find_cell(g, prev.part, pl.value);
      std::vector<GraphPoint> forbidden = prev.periodic;
      for (GraphPoint& p : other_pins(-1)) forbidden.push_back(std::move(p));
      detail::sort_points(forbidden);
      auto back =
          detail::pull_back_point(cur, pl.x, prev.part.cells[pl.target], steps, forbidden);
      if (!back) return false;
      pl.orbit = {pl.x, *back};
      GraphPoint z = *back;
      for (int j = 1; j < steps; ++j) {
        z = cur.evaluate(z);
        if (z == pl.x) break;
        pl.orbit.push_back(z);
      }
      if (!(cur.evaluate(pl.orbit.back()) == pl.x))
        throw construction_error("exact_devaney_refine: orbit does not close");
      return true;
    };

    for (int ci = 0; ci < m; ++ci) choose_pin(ci);
    {
      std::vector<char> todo(m, 1);
      for (int pass = 0;; ++pass) {
        if (pass > 64)
          throw construction_error("exact_devaney_refine: pin collisions did not settle");
        for (int ci = 0; ci < m; ++ci) {
          if (!todo[ci]) continue;
          for (int tries = 0; !thread_orbit(ci); ++tries) {
            if (tries > 32)
              throw construction_error("exact_devaney_refine: no reachable pin in cell");
            banned[ci].push_back(plans[ci].x);
            choose_pin(ci);
          }
          todo[ci] = 0;
        }
        bool clash = false;
        for (int ci = 0; ci < m && !clash; ++ci)
          for (size_t k = 1; k < plans[ci].orbit.size() && !clash; ++k)
            for (int cj = 0; cj < m && !clash; ++cj)
              if (cj != ci && plans[cj].x == plans[ci].orbit[k]) {
                banned[ci].push_back(plans[ci].x);
                choose_pin(ci);
                todo[ci] = 1;
                clash = true;
              }
        if (!clash) break;
      }
    }

    std::vector<GraphPoint> periodic = prev.periodic;
    for (int ci = 0; ci < m; ++ci)
      periodic.insert(periodic.end(), plans[ci].orbit.begin(), plans[ci].orbit.end());
    detail::sort_points(periodic);

    // Carve: shrink a window around each pin clear of every other periodic
    // point and replace it by the cover walk of the target cell, split at the
    // orbit entry so the pin maps exactly onto its orbit.
    {
      std::vector<Patch> carves;
      for (int ci = 0; ci < m; ++ci) {
        const detail::CarvePlan& pl = plans[ci];
        Rat below = pl.gap_lo, above = pl.gap_hi;
        for (const GraphPoint& q : periodic) {
          if (q.at_vertex || q.edge != pl.edge || q == pl.x) continue;
          if (q.offset > below && q.offset < pl.x.offset) below = q.offset;
          if (q.offset < above && q.offset > pl.x.offset) above = q.offset;
        }
        Rat wa = (below + pl.x.offset) / 2, wb = (pl.x.offset + above) / 2;
        const Cell& target = prev.part.cells[pl.target];
        if (!cell_contains(g, target, pl.value))
          throw construction_error("exact_devaney_refine: plateau value escapes its cell");
        Walk wt = euler_cover_walk(g, target, pl.value);
        auto pre = detail::walk_prefix(wt);
        auto split = detail::walk_param_of(g, wt, pre, pl.orbit[1]);
        if (!split)
          throw construction_error("exact_devaney_refine: orbit entry off the cover walk");
        Walk w1, w2;
        if (*split == 0 || *split == pre.back()) {
          w1 = wt;
          w2 = wt;
        } else {
          w1 = sub_walk(wt, pre, Rat(0), *split);
          w2 = sub_walk(wt, pre, *split, pre.back());
        }
        carves.push_back({pl.edge, wa, wb,
                          {{pl.edge, wa, pl.x.offset, Action::traverse(std::move(w1))},
                           {pl.edge, pl.x.offset, wb, Action::traverse(std::move(w2))}}});
      }
      cur.apply_patches(std::move(carves));
    }

    DevaneyRound next{std::move(cur), std::move(part), std::move(periodic), {}};
    ClauseReport& rep = next.clauses;
    rep.dist_prev = sup_distance(prev.map, next.map);
    rep.dist_budget = step_budget;
    rep.c1_distance = rep.dist_prev <= step_budget;
    rep.mesh = mesh_exact(g, next.part);
    rep.mesh_budget = mesh_budget;
    rep.c3_mesh = rep.mesh <= mesh_budget;
    {
      std::vector<Cell> acc(prev.part.size());
      for (int ci = 0; ci < next.part.size() && rep.c4_refines; ++ci) {
        int pi = next.part.parent_of[ci];
        if (pi < 0 || pi >= prev.part.size()) {
          rep.c4_refines = false;
          break;
        }
        if (union_cells(g, prev.part.cells[pi], next.part.cells[ci]) != prev.part.cells[pi]) {
          rep.c4_refines = false;
          break;
        }
        acc[pi] = union_cells(g, acc[pi], next.part.cells[ci]);
      }
      for (int pi = 0; pi < prev.part.size() && rep.c4_refines; ++pi)
        if (acc[pi] != prev.part.cells[pi]) rep.c4_refines = false;
    }
    {
      rep.c5_invariant = true;
      std::vector<GraphPoint> img;
      for (const GraphPoint& z : next.periodic) {
        GraphPoint w = next.map.evaluate(z);
        if (!detail::point_member(next.periodic, w)) {
          rep.c5_invariant = false;
          break;
        }
        img.push_back(w);
      }
      if (rep.c5_invariant) {
        detail::sort_points(img);
        rep.c5_invariant = img == next.periodic;
      }
    }
    for (const GraphPoint& z : prev.periodic) {
      if (!detail::point_member(next.periodic, z) ||
          !(next.map.evaluate(z) == prev.map.evaluate(z))) {
        rep.c6_preserved = false;
        break;
      }
    }
    for (int ci = 0; ci < m && rep.c7_dense; ++ci)
      rep.c7_dense = detail::point_member(next.periodic, plans[ci].x) &&
                     cell_contains(g, next.part.cells[ci], plans[ci].x);
    {
      bool surj = is_surjective(next.map);
      rep.c2_towers = true;
      for (int lvl = 0; lvl <= static_cast<int>(out.rounds.size()) && rep.c2_towers; ++lvl) {
        const Partition& p =
            lvl < static_cast<int>(out.rounds.size()) ? out.rounds[lvl].part : next.part;
        std::vector<char> ok(p.size(), 1);
        parallel_for(p.size(), [&](int i) {
          ok[i] = detail::reaches_whole(next.map, p.cells[i], lvl + n0, surj);
        });
        rep.c2_towers = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
      }
    }
    out.rounds.push_back(std::move(next));
  }
  return out;
}

// Exactly Devaney chaotic map within eps of a fresh surjection. The grain
// provisions plateaus for every refinement round up front, so no round has
// to plant one mid build.
inline DevaneyBuild exact_devaney(std::shared_ptr<const MetricGraph> graph, const Rat& eps,
                                  int rounds, const Rat& eta = Rat(1) / 8) {
  if (!graph) throw std::invalid_argument("exact_devaney: null graph");
  if (eps <= 0) throw std::invalid_argument("exact_devaney: eps must be positive");
  if (rounds < 0) throw std::invalid_argument("exact_devaney: negative depth");
  Rat grain =
      detail::halve_pow(rat_min(eps, diameter(*graph, whole_space(*graph))), rounds + 4);
  GraphPoint y0 = graph->vertex_point(0);
  Partition start;
  start.cells.push_back(whole_space(*graph));
  start.parent_of.push_back(-1);
  PLMap g0 = surjective_lc(std::move(graph), Cell{}, {}, y0, eta, grain);
  return exact_devaney_refine(g0, start, 1, eps, rounds);
}

struct LeoBuild {
  Rat delta;           // expansion modulus used for the successor relation
  int n0 = 0;          // chain mixing length of the input at eps/6
  Rat total_distance;  // exact sup distance from the input map
  DevaneyBuild build;
};

// Upgrades a chain transitive map to one whose every small cell expands onto
// the whole space. Stage one carves each cell's plateau onto the connected
// union of its successors; stage two runs the refinement rounds at eps/16.
inline LeoBuild leo_from_ct(const PLMap& f, const Rat& eps, int rounds, int horizon = 64) {
  if (eps <= 0) throw std::invalid_argument("leo_from_ct: eps must be positive");
  const MetricGraph& g = f.graph();
  const Rat sixth = eps / 6;
  Rat delta = modulus(f, sixth);
  Partition start = slice_partition(g, rat_min(delta, Rat(eps * 3 / 64)));
  auto mix = chain_mixing_length(g, f, sixth, horizon, &start);
  if (!mix.n0) throw construction_error("leo_from_ct: no chain mixing length within horizon");
  const int n0 = *mix.n0;
  TransitionGraph trans = transition_graph(g, f, start, sixth);

  PLMap cur = f;
  {
    std::vector<Patch> plants;
    for (int ci = 0; ci < start.size(); ++ci) {
      if (detail::plateau_site(cur, start.cells[ci], {}).ok()) continue;
      auto p = detail::plant_patch(cur, start.cells[ci], {}, Rat(eps / 16));
      if (!p) throw construction_error("leo_from_ct: cell admits no plateau");
      plants.push_back(std::move(*p));
    }
    if (!plants.empty()) cur.apply_patches(std::move(plants));
  }
  {
    std::vector<Patch> carves;
    for (int ci = 0; ci < start.size(); ++ci) {
      detail::PlateauSite site = detail::plateau_site(cur, start.cells[ci], {});
      if (!site.ok()) throw construction_error("leo_from_ct: plateau lost");
      Cell reach;
      for (int h : trans.succ[ci]) reach = union_cells(g, reach, start.cells[h]);
      Cell target = detail::connect_from(g, reach, site.value);
      Walk wt = euler_cover_walk(g, target, site.value);
      Rat wa = site.lo + (site.hi - site.lo) / 4;
      Rat wb = site.hi - (site.hi - site.lo) / 4;
      carves.push_back(
          {site.edge, wa, wb, {{site.edge, wa, wb, Action::traverse(std::move(wt))}}});
    }
    cur.apply_patches(std::move(carves));
  }
  // Provision plateaus for every refinement round up front, so the rounds
  // carve into provisioned constants instead of planting over them and the
  // per round distance budgets hold with carves alone.
  const Rat eps2 = rat_min(Rat(eps / 16), mesh_exact(g, start));
  detail::provision_plateaus(cur, detail::halve_pow(eps2, rounds + 4), Rat(eps / 16));
  {
    bool surj = is_surjective(cur);
    std::vector<char> ok(start.size(), 1);
    parallel_for(start.size(),
                 [&](int i) { ok[i] = detail::reaches_whole(cur, start.cells[i], n0, surj); });
    for (char o : ok)
      if (!o) throw construction_error("leo_from_ct: a cell misses the whole space");
  }
  LeoBuild out{delta, n0, Rat(0),
               exact_devaney_refine(cur, start, n0, Rat(eps / 16), rounds)};
  out.total_distance = sup_distance(f, out.build.final_map());
  if (!(out.total_distance < eps))
    throw construction_error("leo_from_ct: distance budget exceeded");
  return out;
}

struct BreakCTResult {
  PLMap map;
  TrappingCertificate cert;
  Rat suggested_delta;  // chain transitivity fails at this delta
  std::vector<GraphPoint> loop;
  Rat radius;
};

// Perturbs a certified chain transitive map within eps into one with a
// finite trap: small balls around a closed chain map onto its points, so the
// trap absorbs its own image and chain transitivity fails for every delta
// up to the certified gap.
inline BreakCTResult break_chain_transitivity(const PLMap& f, const Rat& eps) {
  if (eps <= 0) throw std::invalid_argument("break_chain_transitivity: eps must be positive");
  const MetricGraph& g = f.graph();
  const Rat delta = eps / 2;
  CTReport pre = chain_transitive(g, f, {delta});
  const CTLevel& lv = pre.levels.front();
  if (lv.verdict != Verdict::kPass || !lv.certified)
    throw construction_error("break_chain_transitivity: input not certified chain transitive");

  // Shortest closed chain first: a constant piece whose value lies within
  // delta/2 of the piece midpoint is a one point chain with wide quiet
  // balls, hence a large certified gap. Fall back to the hub chains.
  std::vector<GraphPoint> raw;
  {
    int best = -1;
    Rat best_width = 0;
    for (int i = 0; i < static_cast<int>(f.pieces().size()); ++i) {
      const Piece& p = f.pieces()[i];
      if (p.action.kind != ActionKind::kConstant) continue;
      GraphPoint mid = g.point(p.edge, Rat((p.lo + p.hi) / 2));
      if (mid.at_vertex) continue;
      if (!(g.distance(p.action.value, mid) < delta / 2)) continue;
      Rat width = (p.hi - p.lo) / 2;
      if (width > best_width) {
        best_width = width;
        best = i;
      }
    }
    if (best >= 0) {
      const Piece& p = f.pieces()[best];
      raw.push_back(g.point(p.edge, Rat((p.lo + p.hi) / 2)));
    }
  }
  if (raw.empty()) {
    // Closed chain hub -> witness cell -> hub, repeated points cut out.
    int other = lv.hub == 0 ? (static_cast<int>(lv.to_hub.size()) > 1 ? 1 : 0) : 0;
    raw = lv.from_hub[other].points;
    const auto& backp = lv.to_hub[other].points;
    if (raw.empty() || backp.empty() || !(raw.back() == backp.front()))
      throw construction_error("break_chain_transitivity: certificate chains do not join");
    raw.insert(raw.end(), backp.begin() + 1, backp.end());
    raw.pop_back();  // closes cyclically onto its first point
  }
  auto cut_repeats = [](std::vector<GraphPoint> pts) {
    std::vector<GraphPoint> cyc;
    for (GraphPoint& p : pts) {
      bool cut = false;
      for (size_t k = 0; k < cyc.size(); ++k)
        if (cyc[k] == p) {
          cyc.resize(k + 1);
          cut = true;
          break;
        }
      if (!cut) cyc.push_back(std::move(p));
    }
    return cyc;
  };
  raw = cut_repeats(std::move(raw));

  // Slack of the chain, then nudge every point strictly inside an edge.
  Rat gamma = delta;
  for (size_t i = 0; i < raw.size(); ++i)
    gamma = rat_min(
        gamma, Rat(delta - g.distance(f.evaluate(raw[i]), raw[(i + 1) % raw.size()])));
  if (gamma <= 0) throw construction_error("break_chain_transitivity: chain has no slack");
  Rat lip = rat_max(lipschitz_constant(f), Rat(1));
  Rat min_len = g.edge_length(0);
  for (int e = 1; e < g.num_edges(); ++e) min_len = rat_min(min_len, g.edge_length(e));
  Rat nu = rat_min(Rat(gamma / (4 * (lip + 1))), Rat(min_len / 8));
  std::vector<GraphPoint> loop;
  for (const GraphPoint& p : raw) {
    if (p.at_vertex) {
      auto [e, from_side] = g.incident(p.vertex).front();
      loop.push_back(g.point(e, from_side ? nu : Rat(g.edge_length(e) - nu)));
    } else if (p.offset < nu) {
      loop.push_back(g.point(p.edge, nu));
    } else if (p.offset > g.edge_length(p.edge) - nu) {
      loop.push_back(g.point(p.edge, Rat(g.edge_length(p.edge) - nu)));
    } else {
      loop.push_back(p);
    }
  }
  loop = cut_repeats(std::move(loop));
  const int m = static_cast<int>(loop.size());
  for (int i = 0; i < m; ++i)
    if (!(g.distance(f.evaluate(loop[i]), loop[(i + 1) % m]) < delta))
      throw construction_error("break_chain_transitivity: nudged chain broke");

  // Ball radius: balls disjoint, inside their edges, with small variation.
  Rat sep = diameter(g, whole_space(g));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) sep = rat_min(sep, g.distance(loop[i], loop[j]));
  if (sep <= 0) throw construction_error("break_chain_transitivity: loop points collide");
  Rat r = rat_min(Rat(sep / 4), Rat(eps / 16));
  for (const GraphPoint& p : loop)
    r = rat_min(r, Rat(rat_min(p.offset, Rat(g.edge_length(p.edge) - p.offset)) / 2));
  for (int halvings = 0;; ++halvings) {
    bool quiet = true;
    for (const GraphPoint& p : loop)
      quiet = quiet &&
              variation_on(f, p.edge, Rat(p.offset - r), Rat(p.offset + r)) <= eps / 8;
    if (quiet) break;
    if (halvings > 64) throw construction_error("break_chain_transitivity: no quiet radius");
    r /= 2;
  }

  // Collars sweep onto the next loop point, the middle half holds it.
  PLMap cur = f;
  {
    std::vector<Patch> patches;
    for (int i = 0; i < m; ++i) {
      const GraphPoint& p = loop[i];
      const GraphPoint& tgt = loop[(i + 1) % m];
      Rat a0 = p.offset - r, a1 = p.offset - r / 2;
      Rat b1 = p.offset + r / 2, b0 = p.offset + r;
      GraphPoint va = f.value_at_offset(p.edge, a0);
      GraphPoint vb = f.value_at_offset(p.edge, b0);
      std::vector<Piece> ps;
      if (va == tgt) ps.push_back({p.edge, a0, a1, Action::constant(tgt)});
      else ps.push_back({p.edge, a0, a1, Action::traverse(g.geodesic(va, tgt))});
      ps.push_back({p.edge, a1, b1, Action::constant(tgt)});
      if (vb == tgt) ps.push_back({p.edge, b1, b0, Action::constant(tgt)});
      else ps.push_back({p.edge, b1, b0, Action::traverse(g.geodesic(tgt, vb))});
      patches.push_back({p.edge, a0, b0, std::move(ps)});
    }
    cur.apply_patches(std::move(patches));
  }

  Cell trap;
  {
    std::vector<Seg> segs;
    for (const GraphPoint& p : loop)
      segs.push_back({p.edge, Rat(p.offset - r / 2), Rat(p.offset + r / 2)});
    trap = make_cell(g, std::move(segs));
  }
  Rat gap = cell_distance(g, image(cur, trap), complement_closure(g, trap));
  TrappingCertificate cert{trap, gap};
  if (!(gap > 0) || !replay_trapping(g, cur, cert))
    throw construction_error("break_chain_transitivity: trap does not certify");
  if (!(sup_distance(f, cur) < eps))
    throw construction_error("break_chain_transitivity: distance budget exceeded");
  return {std::move(cur), std::move(cert), Rat(gap / 2), std::move(loop), r};
}

}  // namespace peano
