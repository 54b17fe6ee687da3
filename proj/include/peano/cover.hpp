#pragma once

#include <vector>

#include "peano/pl_map.hpp"

namespace peano {

// Closed cover of the space by cells, overlapping only at cut points.
// parent_of links each cell to the cell it refines (empty for base covers).
struct Partition {
  std::vector<Cell> cells;
  std::vector<int> parent_of;

  int size() const { return static_cast<int>(cells.size()); }
};

// Upper bound on the mesh: cells here are arcwise connected, so diameter is
// at most total length. Cheap enough for every loop.
inline Rat mesh_length_bound(const Partition& p) {
  Rat best = 0;
  for (const Cell& c : p.cells) {
    Rat l = total_length(c);
    if (l > best) best = l;
  }
  return best;
}

// Exact mesh; quadratic per cell, meant for small partitions and reports.
inline Rat mesh_exact(const MetricGraph& g, const Partition& p) {
  Rat best = 0;
  for (const Cell& c : p.cells) {
    Rat d = diameter(g, c);
    if (d > best) best = d;
  }
  return best;
}

namespace detail {

// Smallest k with span/k < eps.
inline long slices_for(const Rat& span, const Rat& eps) {
  Rat q = span / eps;
  long k = ceil_div(span, eps);
  if (Rat(k) == q) ++k;  // exact division still needs one more slice
  if (k < 1) k = 1;
  return k;
}

}  // namespace detail

// Uniform per-edge slicing with mesh < eps. When eps exceeds the space
// diameter the whole space is a valid single cell and is preferred.
inline Partition slice_partition(const MetricGraph& g, const Rat& eps) {
  if (eps <= 0) throw std::invalid_argument("slice_partition: eps must be positive");
  Partition out;
  if (eps > diameter(g, whole_space(g))) {
    out.cells.push_back(whole_space(g));
    return out;
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    const Rat& len = g.edge_length(e);
    long k = detail::slices_for(len, eps);
    for (long i = 0; i < k; ++i)
      out.cells.push_back(
          make_cell(g, {{e, Rat(len * i / k), Rat(len * (i + 1) / k)}}));
  }
  return out;
}

// Slicing aligned to every affine run of the map, plus uniform cuts for the
// mesh bound. Keeps transition analysis free of cells that straddle a
// breakpoint of the map.
inline Partition aligned_partition(const MetricGraph& g, const PLMap& f, const Rat& eps) {
  if (eps <= 0) throw std::invalid_argument("aligned_partition: eps must be positive");
  Partition out;
  for (int e = 0; e < g.num_edges(); ++e) {
    const Rat& len = g.edge_length(e);
    std::vector<Rat> cuts = {Rat(0), len};
    long k = detail::slices_for(len, eps);
    for (long i = 1; i < k; ++i) cuts.push_back(Rat(len * i / k));
    for (const auto& s : detail::affine_atlas(f, e)) cuts.push_back(s.x0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
      out.cells.push_back(make_cell(g, {{e, cuts[i], cuts[i + 1]}}));
  }
  return out;
}

namespace detail {

// Cut offsets splitting [a, b] so every part has length < mesh_t and image
// variation under f below var_t.
inline std::vector<Rat> adaptive_cuts(const PLMap& f, int edge, const Rat& a, const Rat& b,
                                      const Rat& mesh_t, const Rat& var_t) {
  std::vector<Rat> cuts = {a, b};
  long k = slices_for(Rat(b - a), mesh_t);
  for (long i = 1; i < k; ++i) cuts.push_back(Rat(a + (b - a) * i / k));
  Rat tv = variation_on(f, edge, a, b);
  if (tv > 0) {
    long m = slices_for(tv, var_t);
    // Walk the pieces once, cutting where cumulative variation crosses each
    // quantile.
    long j = 1;
    Rat acc = 0;
    int i0 = f.piece_index_at(edge, a);
    for (int i = i0; i < static_cast<int>(f.pieces().size()) && j < m; ++i) {
      const Piece& p = f.pieces()[i];
      if (p.edge != edge || p.lo >= b) break;
      Rat c = rat_max(p.lo, a), d = rat_min(p.hi, b);
      if (c >= d || p.action.kind != ActionKind::kTraverse) continue;
      Rat speed = f.graph().walk_length(p.action.walk) / (p.hi - p.lo);
      Rat seg_var = speed * (d - c);
      while (j < m && Rat(tv * j / m) <= acc + seg_var) {
        cuts.push_back(Rat(c + (tv * j / m - acc) / speed));
        ++j;
      }
      acc += seg_var;
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

}  // namespace detail

// Refines every cell so children have length < mesh_t and image variation
// under f below var_t. parent_of points into the refined partition.
inline Partition refine_adaptive(const MetricGraph& g, const PLMap& f, const Partition& base,
                                 const Rat& mesh_t, const Rat& var_t) {
  if (mesh_t <= 0 || var_t <= 0)
    throw std::invalid_argument("refine_adaptive: targets must be positive");
  Partition out;
  for (int pi = 0; pi < base.size(); ++pi) {
    for (const Seg& s : base.cells[pi].segs) {
      if (s.lo == s.hi) {
        out.cells.push_back(make_cell(g, {s}));
        out.parent_of.push_back(pi);
        continue;
      }
      auto cuts = detail::adaptive_cuts(f, s.edge, s.lo, s.hi, mesh_t, var_t);
      for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        out.cells.push_back(make_cell(g, {{s.edge, cuts[i], cuts[i + 1]}}));
        out.parent_of.push_back(pi);
      }
    }
  }
  return out;
}

// Refines every cell with uniform cuts only; children have length < mesh_t.
inline Partition refine_uniform(const MetricGraph& g, const Partition& base, const Rat& mesh_t) {
  if (mesh_t <= 0) throw std::invalid_argument("refine_uniform: target must be positive");
  Partition out;
  for (int pi = 0; pi < base.size(); ++pi) {
    for (const Seg& s : base.cells[pi].segs) {
      if (s.lo == s.hi) {
        out.cells.push_back(make_cell(g, {s}));
        out.parent_of.push_back(pi);
        continue;
      }
      long k = detail::slices_for(Rat(s.hi - s.lo), mesh_t);
      for (long i = 0; i < k; ++i) {
        Rat a = s.lo + (s.hi - s.lo) * i / k;
        Rat b = s.lo + (s.hi - s.lo) * (i + 1) / k;
        out.cells.push_back(make_cell(g, {{s.edge, a, b}}));
        out.parent_of.push_back(pi);
      }
    }
  }
  return out;
}

// First cell containing the point.
inline int find_cell(const MetricGraph& g, const Partition& p, const GraphPoint& pt) {
  for (int i = 0; i < p.size(); ++i)
    if (cell_contains(g, p.cells[i], pt)) return i;
  throw std::invalid_argument("find_cell: point not covered");
}

// Closed cover with overlap structure for perturbation gadgets: every member
// U_i fattens a base cell, owns a private middle quarter no other member
// touches, and lambda is a Lebesgue number (any set of diameter < lambda
// lies inside some member). All members have diameter < delta.
struct InteriorCover {
  std::vector<Cell> members;
  std::vector<Cell> base;
  std::vector<Cell> private_parts;
  Rat lambda;
  Rat radius;
};

inline InteriorCover interior_cover(const MetricGraph& g, const Rat& delta) {
  if (delta <= 0) throw std::invalid_argument("interior_cover: delta must be positive");
  InteriorCover out;
  Rat diam_x = diameter(g, whole_space(g));
  if (Rat(delta * 3 / 4) > diam_x) {
    out.members.push_back(whole_space(g));
    out.base.push_back(whole_space(g));
    out.private_parts.push_back(whole_space(g));
    out.lambda = diam_x;
    out.radius = 0;
    return out;
  }
  Partition base = slice_partition(g, Rat(delta * 3 / 4));
  Rat min_len = total_length(base.cells.front());
  for (const Cell& c : base.cells) min_len = rat_min(min_len, total_length(c));
  Rat r = rat_min(Rat(delta / 8), Rat(min_len / 4));
  for (const Cell& c : base.cells) {
    out.base.push_back(c);
    out.members.push_back(fatten(g, c, r));
    const Seg& s = c.segs.front();
    Rat len = s.hi - s.lo;
    out.private_parts.push_back(
        make_cell(g, {{s.edge, Rat(s.lo + len * 3 / 8), Rat(s.lo + len * 5 / 8)}}));
  }
  out.lambda = r;
  out.radius = r;
  return out;
}

}  // namespace peano
