#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "peano/construct.hpp"

namespace peano {

// One radial rewiring window. The map on [center - 3r, center + 3r] of `edge`
// (r the gadget scale) factors through the profile s(u) = unit * (3 - |u - center| / r)
// and the window map t: [0, 3 * unit] -> X with t constant at `value` on
// [0, unit] and [2 * unit, 3 * unit] and t running `sweep` on [unit, 2 * unit].
struct GadgetEntry {
  int cell = -1;
  int edge = -1;
  Rat window_lo, window_hi;  // hosting constant run, at least 16 scales wide
  Rat center;                // offset of the anchor x on `edge`
  GraphPoint x, y;           // anchor pair at distance exactly 3 * scale
  GraphPoint value;          // t(0), the hosting run's value
  Rat unit;                  // profile range is [0, 3 * unit]
  Walk sweep;                // closed tour of the reachable fan, from `value`
  std::vector<int> successors;
  std::vector<std::array<Rat, 2>> anchor_windows;  // per successor, inside [unit, 2 * unit]
  std::array<Rat, 2> cover_window{};               // maps onto the whole sweep
};

struct PerturbationGadget {
  Rat xi;
  std::vector<GadgetEntry> entries;
};

namespace detail {

// Distance between disjoint cells is attained at segment endpoints.
inline std::pair<GraphPoint, GraphPoint> closest_pair(const MetricGraph& g, const Cell& a,
                                                      const Cell& b) {
  std::pair<GraphPoint, GraphPoint> best;
  Rat bd;
  bool first = true;
  for (const Seg& sa : a.segs) {
    for (int ea = 0; ea < 2; ++ea) {
      GraphPoint pa = g.point(sa.edge, ea ? sa.hi : sa.lo);
      for (const Seg& sb : b.segs) {
        for (int eb = 0; eb < 2; ++eb) {
          GraphPoint pb = g.point(sb.edge, eb ? sb.hi : sb.lo);
          Rat d = g.distance(pa, pb);
          if (first || d < bd) {
            bd = d;
            best = {pa, pb};
            first = false;
          }
        }
      }
    }
  }
  return best;
}

// Joins every stray component of t onto the core by a geodesic link; every
// link must stay below `limit` so the result keeps the fan's reach bound.
inline Cell bridge_to_core(const MetricGraph& g, Cell t, const Cell& core, const Rat& limit,
                           const std::string& who) {
  auto comps = components(g, t);
  if (comps.size() <= 1) return t;
  Cell out = t;
  for (const auto& idxs : comps) {
    std::vector<Seg> ss;
    for (int i : idxs) ss.push_back(t.segs[i]);
    Cell part = make_cell(g, std::move(ss));
    if (cells_intersect(g, part, core)) continue;
    auto ends = closest_pair(g, part, core);
    if (g.distance(ends.first, ends.second) >= limit)
      throw construction_error(who + ": a fan component drifts past the joining margin");
    Walk link = g.geodesic(ends.first, ends.second);
    if (!link.empty()) out = union_cells(g, out, walk_cell(g, link));
  }
  return out;
}

// Parameter window of the first sweep leg covering [a, b] of the edge.
inline std::optional<std::array<Rat, 2>> leg_window(const Walk& w, const std::vector<Rat>& pre,
                                                    int edge, const Rat& a, const Rat& b) {
  for (size_t i = 0; i < w.legs.size(); ++i) {
    const Leg& l = w.legs[i];
    if (l.edge != edge || rat_min(l.lo, l.hi) > a || rat_max(l.lo, l.hi) < b) continue;
    Rat pa = Rat(pre[i] + rat_abs(a - l.lo)), pb = Rat(pre[i] + rat_abs(b - l.lo));
    return std::array<Rat, 2>{rat_min(pa, pb), rat_max(pa, pb)};
  }
  return std::nullopt;
}

// The five pieces of one rewiring window. Both traverse pieces factor through
// the radial profile exactly: the sweep parameter equals L * (s/unit - 1) on
// either flank, so the window's map is a function of the profile alone.
inline std::vector<Piece> profile_pieces(int edge, const Rat& center, const Rat& r,
                                         const GraphPoint& value, const Walk& sweep) {
  std::vector<Piece> ps;
  ps.push_back({edge, Rat(center - 3 * r), Rat(center - 2 * r), Action::constant(value)});
  ps.push_back({edge, Rat(center - 2 * r), Rat(center - r), Action::traverse(sweep)});
  ps.push_back({edge, Rat(center - r), Rat(center + r), Action::constant(value)});
  ps.push_back({edge, Rat(center + r), Rat(center + 2 * r), Action::traverse(reverse_walk(sweep))});
  ps.push_back({edge, Rat(center + 2 * r), Rat(center + 3 * r), Action::constant(value)});
  return ps;
}

// Constant window per cell, planted where the map has none. Plant windows sit
// strictly inside distinct cells, so one batch application is safe.
inline std::vector<PlateauSite> host_sites(PLMap& cur, const std::vector<Cell>& hosts,
                                           const Rat& plant_budget, const std::string& who) {
  std::vector<Patch> plants;
  for (const Cell& h : hosts) {
    if (plateau_site(cur, h, {}).ok()) continue;
    auto p = plant_patch(cur, h, {}, plant_budget);
    if (!p) throw construction_error(who + ": a hosting window admits no plateau");
    plants.push_back(*p);
  }
  if (!plants.empty()) cur.apply_patches(std::move(plants));
  std::vector<PlateauSite> sites;
  for (const Cell& h : hosts) {
    sites.push_back(plateau_site(cur, h, {}));
    if (!sites.back().ok()) throw construction_error(who + ": a hosting window admits no plateau");
  }
  return sites;
}

inline Rat min_site_length(const std::vector<PlateauSite>& sites) {
  Rat m = sites.front().hi - sites.front().lo;
  for (const PlateauSite& s : sites) m = rat_min(m, Rat(s.hi - s.lo));
  return m;
}

// Fills one gadget entry and its window patch: sweep tour of the fan, anchor
// pair at exact distance 3 * xi, and the recorded profile windows.
inline void build_gadget_entry(const MetricGraph& g, const PlateauSite& site, int index,
                               const Cell& fan, const std::vector<int>& succ,
                               const std::vector<PlateauSite>& sites, const Rat& xi,
                               const Rat& unit, const std::string& who, GadgetEntry& e,
                               Patch& window) {
  const Rat c = (site.lo + site.hi) / 2;
  e.cell = index;
  e.edge = site.edge;
  e.window_lo = site.lo;
  e.window_hi = site.hi;
  e.center = c;
  e.value = site.value;
  e.unit = unit;
  e.x = g.point(site.edge, c);
  e.y = g.point(site.edge, Rat(c + 3 * xi));
  if (g.distance(e.x, e.y) != Rat(3 * xi))
    throw construction_error(who + ": anchor spacing broke");
  e.sweep = euler_cover_walk(g, fan, site.value);
  auto pre = walk_prefix(e.sweep);
  const Rat len = pre.back();
  e.successors = succ;
  for (int j : succ) {
    const Rat cj = (sites[j].lo + sites[j].hi) / 2;
    auto w = leg_window(e.sweep, pre, sites[j].edge, cj, Rat(cj + 3 * xi));
    if (!w) throw construction_error(who + ": an anchor span escapes the sweep");
    e.anchor_windows.push_back(
        {Rat(unit + unit * (*w)[0] / len), Rat(unit + unit * (*w)[1] / len)});
  }
  e.cover_window = {unit, Rat(2 * unit)};
  window = {site.edge, Rat(c - 3 * xi), Rat(c + 3 * xi),
            profile_pieces(site.edge, c, xi, site.value, e.sweep)};
}

}  // namespace detail

struct MixingBuild {
  PLMap map;
  Rat xi;
  PerturbationGadget gadget;
};

// Rewires every partition cell through a radial window whose sweep covers the
// cell's reachable fan, so iterated exact images of any cell meet every cell
// from some step on, and the same holds for every map within xi of the output.
inline MixingBuild mixing_perturbation(const PLMap& f, const Partition& part, const Rat& eps) {
  const MetricGraph& g = f.graph();
  if (eps <= 0) throw std::invalid_argument("mixing_perturbation: eps must be positive");
  if (part.size() == 0) throw std::invalid_argument("mixing_perturbation: empty partition");
  const Rat mesh = mesh_exact(g, part);
  if (mesh >= rat_min(Rat(eps / 4), modulus(f, Rat(eps / 4))))
    throw std::invalid_argument("mixing_perturbation: partition mesh too coarse");
  const int n = part.size();

  PLMap cur = f;
  std::vector<detail::PlateauSite> sites =
      detail::host_sites(cur, part.cells, Rat(eps / 8), "mixing_perturbation");
  const Rat xi = rat_min(Rat(eps / 64), Rat(detail::min_site_length(sites) / 16));

  // Fans follow the input map: a cell's fan is every cell within eps/4 of its
  // exact image, joined across the image so the sweep tour is connected.
  std::vector<Cell> img(n);
  parallel_for(n, [&](int i) { img[i] = image(f, part.cells[i]); });
  std::vector<std::vector<int>> succ(n);
  parallel_for(n, [&](int i) {
    for (int j = 0; j < n; ++j)
      if (cell_distance(g, img[i], part.cells[j]) < Rat(eps / 4)) succ[i].push_back(j);
  });

  PerturbationGadget gad;
  gad.xi = xi;
  gad.entries.resize(n);
  std::vector<std::vector<Patch>> cell_patches(n);
  std::vector<std::string> faults(n);
  parallel_for(n, [&](int i) {
    try {
      Cell fan = img[i];
      for (int j : succ[i]) fan = union_cells(g, fan, part.cells[j]);
      fan = detail::bridge_to_core(g, fan, img[i], Rat(eps / 4), "mixing_perturbation");
      Patch window;
      detail::build_gadget_entry(g, sites[i], i, fan, succ[i], sites, xi, Rat(1),
                                 "mixing_perturbation", gad.entries[i], window);
      cell_patches[i].push_back(window);
      // second full sweep in a disjoint stretch of the hosting run, keeping
      // every nearby map's images rich away from the profile
      const Rat c = gad.entries[i].center;
      cell_patches[i].push_back(
          {sites[i].edge,
           Rat(c + 5 * xi),
           Rat(c + 7 * xi),
           {{sites[i].edge, Rat(c + 5 * xi), Rat(c + 6 * xi),
             Action::traverse(gad.entries[i].sweep)},
            {sites[i].edge, Rat(c + 6 * xi), Rat(c + 7 * xi),
             Action::traverse(reverse_walk(gad.entries[i].sweep))}}});
    } catch (const std::exception& ex) {
      faults[i] = ex.what();
    }
  });
  for (const std::string& m : faults)
    if (!m.empty()) throw construction_error(m);

  std::vector<Patch> patches;
  for (int i = 0; i < n; ++i)
    for (Patch& p : cell_patches[i]) patches.push_back(std::move(p));
  PLMap out = std::move(cur);
  out.apply_patches(std::move(patches));
  if (Rat(sup_distance(f, out) + xi) >= eps)
    throw construction_error("mixing_perturbation: distance budget exceeded");
  return {std::move(out), xi, std::move(gad)};
}

// Seeded detour inside a long constant run: the output differs from f along
// one geodesic spike of length below xi and agrees elsewhere.
inline PLMap sample_mixing_neighbor(const PLMap& f, const Rat& xi, std::uint64_t seed) {
  const MetricGraph& g = f.graph();
  if (xi <= 0) throw std::invalid_argument("sample_mixing_neighbor: xi must be positive");
  std::vector<int> cand;
  for (int i = 0; i < static_cast<int>(f.pieces().size()); ++i) {
    const Piece& p = f.pieces()[i];
    if (p.action.kind == ActionKind::kConstant && Rat(p.hi - p.lo) >= xi) cand.push_back(i);
  }
  if (cand.empty())
    throw construction_error("sample_mixing_neighbor: no constant run of width xi");
  std::mt19937_64 rng(seed);
  const Piece& p = f.pieces()[cand[static_cast<size_t>(rng() % cand.size())]];
  const Rat rho = Rat(xi * static_cast<int>(rng() % 6 + 1) / 8);

  // spike target at arclength up to rho from the run's value
  const GraphPoint v = p.action.value;
  int e = 0;
  Rat start;
  int sgn = 1;
  if (v.at_vertex) {
    std::pair<int, bool> pick = g.incident(v.vertex).front();
    for (const auto& q : g.incident(v.vertex))
      if (g.edge_length(q.first) > g.edge_length(pick.first)) pick = q;
    e = pick.first;
    start = pick.second ? Rat(0) : g.edge_length(e);
    sgn = pick.second ? 1 : -1;
  } else {
    e = v.edge;
    start = v.offset;
    sgn = Rat(g.edge_length(e) - v.offset) >= v.offset ? 1 : -1;
  }
  const Rat room = sgn > 0 ? Rat(g.edge_length(e) - start) : start;
  const Rat step = rat_min(rho, Rat(room / 2));
  if (step <= 0) throw construction_error("sample_mixing_neighbor: no room for a detour");
  const GraphPoint w = g.point(e, Rat(start + sgn * step));

  const Walk out_leg = g.geodesic(v, w);
  const Rat mid = (p.lo + p.hi) / 2;
  const Rat wid = rat_min(Rat((p.hi - p.lo) / 4), step);
  Patch spike{p.edge,
              Rat(mid - wid),
              Rat(mid + wid),
              {{p.edge, Rat(mid - wid), mid, Action::traverse(out_leg)},
               {p.edge, mid, Rat(mid + wid), Action::traverse(reverse_walk(out_leg))}}};
  PLMap out = f;
  out.apply_patches({std::move(spike)});
  return out;
}

struct ShadowingBuild {
  PLMap map;
  Rat xi;
  Rat delta;
  PerturbationGadget gadget;
  InteriorCover cover;
};

// Plants a private constant window in every cover member and rewires it with
// a scale-xi profile sweeping the member's fan. Every delta-chain of the
// output (delta = half the cover's Lebesgue number) is then eps-shadowed by a
// true orbit, found by nested preimages.
inline ShadowingBuild shadowing_perturbation(const PLMap& f, const Rat& eps, const Rat& nu) {
  const MetricGraph& g = f.graph();
  if (eps <= 0 || nu <= 0)
    throw std::invalid_argument("shadowing_perturbation: tolerances must be positive");
  const Rat diam_x = diameter(g, whole_space(g));
  // member scale small enough that member images stay within nu/4 and the
  // final distance telescopes below nu
  const Rat scale = Rat(rat_min(rat_min(modulus(f, Rat(nu / 4)), Rat(nu / 16)),
                                rat_min(eps, diam_x)) *
                        3 / 4);
  InteriorCover cov = interior_cover(g, scale);
  const int n = static_cast<int>(cov.members.size());
  const Rat delta = cov.lambda / 2;

  PLMap cur = f;
  std::vector<detail::PlateauSite> sites =
      detail::host_sites(cur, cov.private_parts, Rat(nu / 8), "shadowing_perturbation");
  const Rat xi =
      rat_min(rat_min(delta, Rat(nu / 4)), Rat(detail::min_site_length(sites) / 16));

  // Fans follow the planted map: any member within `scale` of a member's
  // exact image joins its fan, so a chain step out of a private window always
  // lands inside the fan it was swept onto.
  std::vector<Cell> img(n);
  parallel_for(n, [&](int i) { img[i] = image(cur, cov.members[i]); });
  std::vector<std::vector<int>> succ(n);
  parallel_for(n, [&](int i) {
    for (int j = 0; j < n; ++j)
      if (cell_distance(g, img[i], cov.members[j]) < scale) succ[i].push_back(j);
  });

  PerturbationGadget gad;
  gad.xi = xi;
  gad.entries.resize(n);
  std::vector<Patch> windows(n);
  std::vector<std::string> faults(n);
  parallel_for(n, [&](int i) {
    try {
      Cell fan = img[i];
      for (int j : succ[i]) fan = union_cells(g, fan, cov.members[j]);
      fan = detail::bridge_to_core(g, fan, img[i], scale, "shadowing_perturbation");
      detail::build_gadget_entry(g, sites[i], i, fan, succ[i], sites, xi, xi,
                                 "shadowing_perturbation", gad.entries[i], windows[i]);
    } catch (const std::exception& ex) {
      faults[i] = ex.what();
    }
  });
  for (const std::string& m : faults)
    if (!m.empty()) throw construction_error(m);

  PLMap out = std::move(cur);
  out.apply_patches(std::move(windows));
  if (sup_distance(f, out) >= nu)
    throw construction_error("shadowing_perturbation: distance budget exceeded");

  // every member must map inside its fan's member union: positive length is
  // conserved under intersection and stray image points are checked one by one
  parallel_for(n, [&](int i) {
    Cell gi = image(out, cov.members[i]);
    Cell fan;
    for (int j : succ[i]) fan = union_cells(g, fan, cov.members[j]);
    bool ok = total_length(intersect_cells(g, gi, fan)) == total_length(gi);
    for (const Seg& s : gi.segs)
      if (s.lo == s.hi && !cell_contains(g, fan, g.point(s.edge, s.lo))) ok = false;
    if (!ok) faults[i] = "shadowing_perturbation: a member image escapes its fan";
  });
  for (const std::string& m : faults)
    if (!m.empty()) throw construction_error(m);

  return {std::move(out), xi, delta, std::move(gad), std::move(cov)};
}

// Seeded exact delta-chain of f: every step lands on a grid rational inside
// the closed 7*delta/8 ball around the forward image of the previous point.
inline ChainCertificate sample_delta_chain(const PLMap& f, const Rat& delta, int length,
                                           std::uint64_t seed) {
  const MetricGraph& g = f.graph();
  if (delta <= 0) throw std::invalid_argument("sample_delta_chain: delta must be positive");
  if (length < 1) throw std::invalid_argument("sample_delta_chain: length must be >= 1");
  std::mt19937_64 rng(seed);
  ChainCertificate c;
  c.delta = delta;
  const int e0 = static_cast<int>(rng() % static_cast<std::uint64_t>(g.num_edges()));
  c.points.push_back(
      g.point(e0, Rat(g.edge_length(e0) * static_cast<int>(rng() % 65) / 64)));
  for (int i = 1; i < length; ++i) {
    const GraphPoint y = f.evaluate(c.points.back());
    const Cell b = ball(g, y, Rat(delta * 7 / 8));
    const Seg& s = b.segs[static_cast<size_t>(rng() % b.segs.size())];
    c.points.push_back(
        g.point(s.edge, Rat(s.lo + (s.hi - s.lo) * static_cast<int>(rng() % 17) / 16)));
  }
  return c;
}

}  // namespace peano
