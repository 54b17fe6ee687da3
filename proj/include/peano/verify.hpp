#pragma once

#include "peano/transition.hpp"

namespace peano {

enum class Verdict { kPass, kFail };

// Canonical representative of a cell: the leftmost point in cell order.
inline GraphPoint cell_base_point(const MetricGraph& g, const Cell& c) {
  if (c.empty()) throw std::invalid_argument("cell_base_point: empty cell");
  return g.point(c.segs.front().edge, c.segs.front().lo);
}

// A delta-chain given by explicit points; valid iff every step lands within
// delta of the image of the previous point.
struct ChainCertificate {
  Rat delta;
  std::vector<GraphPoint> points;
};

inline bool replay_chain(const MetricGraph& g, const PLMap& f, const ChainCertificate& c) {
  if (c.points.empty()) return false;
  for (size_t i = 0; i + 1 < c.points.size(); ++i)
    if (g.distance(f.evaluate(c.points[i]), c.points[i + 1]) >= c.delta) return false;
  return true;
}

// A proper nonempty closed trap: the map sends it into its own interior, at
// distance >= gap from the closure of the complement. Its existence refutes
// chain transitivity outright.
struct TrappingCertificate {
  Cell trap;
  Rat gap;
};

inline bool replay_trapping(const MetricGraph& g, const PLMap& f, const TrappingCertificate& c) {
  if (c.trap.empty() || c.trap == whole_space(g) || c.gap <= 0) return false;
  Cell outside = complement_closure(g, c.trap);
  return cell_distance(g, image(f, c.trap), outside) >= c.gap;
}

// Per-delta outcome of the chain transitivity test. On PASS the hub chains
// compose to a replayable delta-chain between the base points of any cell
// pair (to_hub[F] ++ from_hub[H], dropping the duplicated hub point). On FAIL
// the cut pair has no delta-chain; a replaying trap certificate additionally
// refutes every delta.
struct CTLevel {
  Rat delta;
  Verdict verdict = Verdict::kFail;
  bool certified = false;
  int cells = 0;
  int hub = 0;
  std::vector<ChainCertificate> to_hub, from_hub;
  std::optional<TrappingCertificate> trap;
  int cut_from = -1, cut_to = -1;
  GraphPoint cut_from_point, cut_to_point;
};

struct CTReport {
  Verdict verdict = Verdict::kFail;
  std::vector<CTLevel> levels;
};

namespace detail {

// Chain along a cell path, one base point per cell.
inline ChainCertificate path_chain(const MetricGraph& g, const Partition& p,
                                   const std::vector<int>& path, const Rat& delta) {
  ChainCertificate c;
  c.delta = delta;
  for (int idx : path) c.points.push_back(cell_base_point(g, p.cells[idx]));
  return c;
}

}  // namespace detail

// Tests delta-chain transitivity for each scheduled delta on a partition
// aligned to the map's breakpoints. The graph relation d(image(f,F), H) <
// delta is necessary for real chains, so a disconnection is a sound FAIL.
// For PASS certificates a stricter relation charging both cell sizes
// guarantees that base point chains replay: d(f(a), b) <= diam image(F) +
// d(image(F), H) + diam H. The mesh floor delta/16 keeps steep maps
// tractable; alignment still separates their plateaus exactly.
inline CTReport chain_transitive(const MetricGraph& g, const PLMap& f,
                                 const std::vector<Rat>& schedule) {
  if (schedule.empty()) throw std::invalid_argument("chain_transitive: empty schedule");
  for (size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] <= 0) throw std::invalid_argument("chain_transitive: delta must be positive");
    if (i && schedule[i] >= schedule[i - 1])
      throw std::invalid_argument("chain_transitive: schedule must decrease");
  }
  CTReport report;
  report.verdict = Verdict::kPass;
  for (const Rat& delta : schedule) {
    CTLevel lv;
    lv.delta = delta;
    Partition p = aligned_partition(g, f, rat_max(modulus(f, Rat(delta / 4)), Rat(delta / 16)));
    lv.cells = p.size();
    std::vector<Cell> images = partition_images(f, p);
    TransitionGraph t = transition_graph(g, f, p, delta, &images);
    SccResult comps = scc(t.succ);
    if (comps.count == 1) {
      lv.verdict = Verdict::kPass;
      // Certificate relation: subset of t where whole-cell steps fit in delta.
      std::vector<Rat> img_diam(p.size());
      parallel_for(p.size(), [&](int i) { img_diam[i] = diameter(g, images[i]); });
      TransitionGraph cert;
      cert.delta = delta;
      cert.succ.resize(p.size());
      parallel_for(p.size(), [&](int i) {
        for (int h : t.succ[i])
          if (img_diam[i] + cell_distance(g, images[i], p.cells[h]) + total_length(p.cells[h]) <
              delta)
            cert.succ[i].push_back(h);
      });
      const TransitionGraph& chain_graph = scc(cert.succ).count == 1 ? cert : t;
      lv.certified = true;
      for (int i = 0; i < p.size(); ++i) {
        auto to = graph_path(chain_graph.succ, i, lv.hub);
        auto from = graph_path(chain_graph.succ, lv.hub, i);
        lv.to_hub.push_back(detail::path_chain(g, p, *to, delta));
        lv.from_hub.push_back(detail::path_chain(g, p, *from, delta));
        lv.certified = lv.certified && replay_chain(g, f, lv.to_hub.back()) &&
                       replay_chain(g, f, lv.from_hub.back());
      }
    } else {
      lv.verdict = Verdict::kFail;
      report.verdict = Verdict::kFail;
      // Component 0 is terminal: inside it the map cannot reach the rest.
      Cell trap_union, trap_images;
      int first_in = -1, first_out = -1;
      for (int i = 0; i < p.size(); ++i) {
        if (comps.comp[i] == 0) {
          trap_union = union_cells(g, trap_union, p.cells[i]);
          trap_images = union_cells(g, trap_images, images[i]);
          if (first_in == -1) first_in = i;
        } else if (first_out == -1) {
          first_out = i;
        }
      }
      lv.cut_from = first_in;
      lv.cut_to = first_out;
      lv.cut_from_point = cell_base_point(g, p.cells[first_in]);
      lv.cut_to_point = cell_base_point(g, p.cells[first_out]);
      Rat gap = cell_distance(g, trap_images, complement_closure(g, trap_union));
      if (gap > 0) {
        TrappingCertificate cert{trap_union, gap};
        if (replay_trapping(g, f, cert)) {
          lv.trap = std::move(cert);
          lv.certified = true;
        }
      }
    }
    report.levels.push_back(std::move(lv));
  }
  return report;
}

// Smallest n0 <= horizon such that walks of every exact length in
// [n0, horizon] join all ordered cell pairs of a mesh < delta/4 partition.
struct ChainMixingResult {
  std::optional<int> n0;
  int horizon = 0;
  int cells = 0;
  Rat delta;
};

inline ChainMixingResult chain_mixing_length(const MetricGraph& g, const PLMap& f,
                                             const Rat& delta, int horizon,
                                             const Partition* partition = nullptr) {
  if (horizon < 1) throw std::invalid_argument("chain_mixing_length: horizon must be >= 1");
  Partition own;
  if (!partition) {
    own = aligned_partition(g, f, Rat(delta / 4));
    partition = &own;
  }
  TransitionGraph t = transition_graph(g, f, *partition, delta);
  ChainMixingResult r;
  r.horizon = horizon;
  r.cells = t.size();
  r.delta = delta;
  BitMatrix base = BitMatrix::from_graph(t);
  std::vector<bool> full(horizon + 1, false);
  BitMatrix power = base;
  full[1] = power.all_ones();
  for (int k = 2; k <= horizon; ++k) {
    power = power.mul(base);
    full[k] = power.all_ones();
  }
  int last_gap = 0;
  for (int k = 1; k <= horizon; ++k)
    if (!full[k]) last_gap = k;
  if (last_gap < horizon) r.n0 = last_gap + 1;
  return r;
}

// Smallest k <= k_max with the exact k-th image of the cell equal to the
// whole space.
inline std::optional<int> leo_order(const MetricGraph& g, const PLMap& f, const Cell& c,
                                    int k_max) {
  if (c.empty() || total_length(c) == 0)
    throw std::invalid_argument("leo_order: cell must have positive length");
  if (k_max < 1) throw std::invalid_argument("leo_order: k_max must be >= 1");
  Cell x = whole_space(g);
  Cell it = c;
  for (int k = 1; k <= k_max; ++k) {
    it = image(f, it);
    if (it == x) return k;
  }
  return std::nullopt;
}

inline std::vector<std::optional<int>> leo_orders(const MetricGraph& g, const PLMap& f,
                                                  const Partition& p, int k_max) {
  std::vector<std::optional<int>> out(p.size());
  parallel_for(p.size(), [&](int i) { out[i] = leo_order(g, f, p.cells[i], k_max); });
  return out;
}

// Finite-horizon mixing windows: for every ordered pair (F, H), the least k0
// with image(f^k, F) meeting H for all k in [k0, K].
struct GnReport {
  Verdict verdict = Verdict::kFail;
  int horizon = 0;
  std::vector<std::vector<int>> k0;
  int fail_from = -1, fail_to = -1;
  Rat fail_gap;
};

inline GnReport gn_membership(const MetricGraph& g, const PLMap& f, const Partition& p,
                              int horizon) {
  if (horizon < 1) throw std::invalid_argument("gn_membership: horizon must be >= 1");
  GnReport r;
  r.horizon = horizon;
  int n = p.size();
  // meets[F] holds one bitset per step k = 1..K of cells the tower touches.
  std::vector<std::vector<std::vector<bool>>> meets(n);
  parallel_for(n, [&](int i) {
    meets[i].assign(horizon + 1, std::vector<bool>(n, false));
    Cell it = p.cells[i];
    for (int k = 1; k <= horizon; ++k) {
      it = image(f, it);
      for (int h = 0; h < n; ++h) meets[i][k][h] = cells_intersect(g, it, p.cells[h]);
    }
  });
  r.k0.assign(n, std::vector<int>(n, 0));
  r.verdict = Verdict::kPass;
  for (int i = 0; i < n && r.verdict == Verdict::kPass; ++i) {
    for (int h = 0; h < n; ++h) {
      int last_gap = 0;
      for (int k = 1; k <= horizon; ++k)
        if (!meets[i][k][h]) last_gap = k;
      if (last_gap == horizon) {
        r.verdict = Verdict::kFail;
        r.fail_from = i;
        r.fail_to = h;
        Cell it = p.cells[i];
        for (int k = 1; k <= horizon; ++k) it = image(f, it);
        r.fail_gap = cell_distance(g, it, p.cells[h]);
        break;
      }
      r.k0[i][h] = last_gap + 1;
    }
  }
  return r;
}

// Witness point whose orbit eps-shadows the chain, found by intersecting
// closed balls with nested preimages; eps shrinks by 1/128 so closed-ball
// arithmetic certifies the strict inequality.
struct ShadowWitness {
  GraphPoint x;
  Rat eps;
  bool replayed = false;
};

namespace detail {

inline std::vector<Cell> split_components(const MetricGraph& g, const Cell& c) {
  std::vector<Cell> out;
  for (const auto& idxs : components(g, c)) {
    std::vector<Seg> ss;
    for (int k : idxs) ss.push_back(c.segs[k]);
    out.push_back(make_cell(g, std::move(ss)));
  }
  return out;
}

// One branch of the nested preimage search: a connected subset of the i-th
// ball whose forward images stay in the components chosen further down.
struct ShadowFrame {
  int i;
  std::vector<Cell> comps;
  size_t next = 0;
};

// Depth-first point search through the nested sets: the full component trees
// grow exponentially on maps with rewiring windows, but one live branch is
// enough, so components are expanded one at a time with backtracking.
inline std::optional<GraphPoint> shadow_search(const MetricGraph& g, const PLMap& f,
                                               const std::vector<GraphPoint>& pts, const Rat& r,
                                               size_t budget) {
  const int n = static_cast<int>(pts.size());
  std::vector<ShadowFrame> st;
  st.push_back({n - 1, split_components(g, ball(g, pts[n - 1], r)), 0});
  while (!st.empty()) {
    ShadowFrame& fr = st.back();
    if (fr.next >= fr.comps.size()) {
      st.pop_back();
      continue;
    }
    const Cell cur = fr.comps[fr.next++];
    if (fr.i == 0) return cell_base_point(g, cur);
    if (budget == 0) return std::nullopt;
    --budget;
    Cell down = intersect_cells(g, ball(g, pts[fr.i - 1], r), preimage(f, cur));
    if (!down.empty()) st.push_back({fr.i - 1, split_components(g, down), 0});
  }
  return std::nullopt;
}

}  // namespace detail

inline std::optional<ShadowWitness> shadowing_witness(const MetricGraph& g, const PLMap& f,
                                                      const ChainCertificate& chain,
                                                      const Rat& eps) {
  if (eps <= 0) throw std::invalid_argument("shadowing_witness: eps must be positive");
  if (!replay_chain(g, f, chain)) throw std::invalid_argument("shadowing_witness: invalid chain");
  const Rat eps_in = Rat(eps * 127 / 128);
  const int n = static_cast<int>(chain.points.size());
  // tight radii first: a witness hugs a certified chain far inside eps, and
  // narrow balls keep the preimage branches few; every radius searches a
  // subset of the eps_in sets, so NONE is decided by the exhaustive last pass
  const Rat ladder[] = {Rat(eps_in / 1024), Rat(eps_in / 128), Rat(eps_in / 16),
                        Rat(eps_in / 4), eps_in};
  for (const Rat& r : ladder) {
    const bool last = r == eps_in;
    const size_t budget = last ? static_cast<size_t>(-1) : 256 * static_cast<size_t>(n + 1);
    auto x = detail::shadow_search(g, f, chain.points, r, budget);
    if (!x) continue;
    ShadowWitness w;
    w.x = *x;
    w.eps = eps;
    w.replayed = true;
    GraphPoint z = w.x;
    for (int i = 0; i < n; ++i) {
      if (g.distance(z, chain.points[i]) >= eps) w.replayed = false;
      if (i + 1 < n) z = f.evaluate(z);
    }
    return w;
  }
  return std::nullopt;
}

// All periodic points of period <= k_max from exact fixed point solving on
// iterates, with a density radius measured on a length-weighted grid.
struct PeriodicEntry {
  int period = 0;
  std::vector<GraphPoint> points;
  Cell segments;  // whole segments of fixed points
};

struct PeriodicAtlas {
  std::vector<PeriodicEntry> entries;
  Rat density_radius;
  int sample = 0;
};

inline PeriodicAtlas periodic_atlas(const MetricGraph& g, const PLMap& f, int k_max,
                                    int sample) {
  if (k_max < 1) throw std::invalid_argument("periodic_atlas: k_max must be >= 1");
  PeriodicAtlas atlas;
  atlas.sample = sample;
  Cell all;
  PLMap fk = f;
  for (int k = 1; k <= k_max; ++k) {
    if (k > 1) fk = compose(f, fk);
    FixedSets fs = fixed_sets(fk);
    PeriodicEntry e;
    e.period = k;
    e.points = fs.points;
    e.segments = fs.segments;
    for (const GraphPoint& pt : fs.points) all = union_cells(g, all, point_cell(g, pt));
    all = union_cells(g, all, fs.segments);
    atlas.entries.push_back(std::move(e));
  }
  atlas.density_radius = 0;
  if (sample > 0 && !all.empty()) {
    Rat total = total_length(whole_space(g));
    for (int e = 0; e < g.num_edges(); ++e) {
      const Rat& len = g.edge_length(e);
      long m = std::max<long>(1, ceil_div(Rat(len * sample), total));
      for (long j = 0; j <= m; ++j) {
        Cell pc = point_cell(g, g.point(e, Rat(len * j / m)));
        Rat d = cell_distance(g, pc, all);
        if (d > atlas.density_radius) atlas.density_radius = d;
      }
    }
  }
  return atlas;
}

}  // namespace peano
