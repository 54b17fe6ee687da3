#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "peano/metric_graph.hpp"

namespace peano {

// Closed subsegment [lo, hi] of one edge; lo == hi is a single point.
struct Seg {
  int edge = 0;
  Rat lo, hi;

  friend bool operator==(const Seg& a, const Seg& b) {
    return a.edge == b.edge && a.lo == b.lo && a.hi == b.hi;
  }
  friend bool operator<(const Seg& a, const Seg& b) {
    return std::tie(a.edge, a.lo, a.hi) < std::tie(b.edge, b.lo, b.hi);
  }
};

// Finite union of closed segments in normal form: sorted, per edge disjoint
// and non-touching, vertex points stored on their canonical incident edge.
// Normal form makes equality of point sets structural.
struct Cell {
  std::vector<Seg> segs;

  bool empty() const { return segs.empty(); }
  friend bool operator==(const Cell& a, const Cell& b) { return a.segs == b.segs; }
  friend bool operator!=(const Cell& a, const Cell& b) { return !(a == b); }
};

// A lone vertex is stored as a degenerate seg on its smallest incident edge,
// 'from' end preferred.
inline Seg canonical_vertex_seg(const MetricGraph& g, int v) {
  auto inc = g.incident(v);
  if (inc.empty()) throw std::invalid_argument("canonical_vertex_seg: isolated vertex");
  auto [e, from_side] = inc.front();
  Rat off = from_side ? Rat(0) : g.edge_length(e);
  return {e, off, off};
}

inline bool cell_contains(const MetricGraph& g, const Cell& c, const GraphPoint& p) {
  if (p.at_vertex) {
    for (const Seg& s : c.segs) {
      const Edge& e = g.edge(s.edge);
      if (s.lo == 0 && e.from == p.vertex) return true;
      if (s.hi == g.edge_length(s.edge) && e.to == p.vertex) return true;
    }
    return false;
  }
  for (const Seg& s : c.segs)
    if (s.edge == p.edge && s.lo <= p.offset && p.offset <= s.hi) return true;
  return false;
}

inline Cell make_cell(const MetricGraph& g, std::vector<Seg> raw) {
  for (Seg& s : raw) {
    if (s.edge < 0 || s.edge >= g.num_edges())
      throw std::invalid_argument("make_cell: bad edge id");
    const Rat& len = g.edge_length(s.edge);
    if (s.lo < 0 || s.hi > len || s.lo > s.hi)
      throw std::invalid_argument("make_cell: segment outside edge");
    if (s.lo == s.hi) {
      GraphPoint p = g.point(s.edge, s.lo);
      if (p.at_vertex) s = canonical_vertex_seg(g, p.vertex);
    }
  }
  std::sort(raw.begin(), raw.end());
  std::vector<Seg> merged;
  for (const Seg& s : raw) {
    if (!merged.empty() && merged.back().edge == s.edge && s.lo <= merged.back().hi) {
      if (s.hi > merged.back().hi) merged.back().hi = s.hi;
    } else {
      merged.push_back(s);
    }
  }
  // Drop a lone vertex already covered through another edge.
  std::vector<Seg> out;
  for (const Seg& s : merged) {
    if (s.lo == s.hi) {
      GraphPoint p = g.point(s.edge, s.lo);
      if (p.at_vertex) {
        Cell rest{std::vector<Seg>()};
        for (const Seg& t : merged)
          if (!(t == s)) rest.segs.push_back(t);
        if (cell_contains(g, rest, p)) continue;
      }
    }
    out.push_back(s);
  }
  return Cell{std::move(out)};
}

inline Cell whole_space(const MetricGraph& g) {
  std::vector<Seg> segs;
  for (int e = 0; e < g.num_edges(); ++e) segs.push_back({e, Rat(0), g.edge_length(e)});
  return make_cell(g, std::move(segs));
}

inline Cell point_cell(const MetricGraph& g, const GraphPoint& p) {
  if (p.at_vertex) return make_cell(g, {canonical_vertex_seg(g, p.vertex)});
  return make_cell(g, {{p.edge, p.offset, p.offset}});
}

inline Rat total_length(const Cell& c) {
  Rat sum = 0;
  for (const Seg& s : c.segs) sum += s.hi - s.lo;
  return sum;
}

inline Cell union_cells(const MetricGraph& g, const Cell& a, const Cell& b) {
  std::vector<Seg> segs = a.segs;
  segs.insert(segs.end(), b.segs.begin(), b.segs.end());
  return make_cell(g, std::move(segs));
}

inline Cell intersect_cells(const MetricGraph& g, const Cell& a, const Cell& b) {
  std::vector<Seg> segs;
  for (const Seg& s : a.segs)
    for (const Seg& t : b.segs) {
      if (s.edge != t.edge) continue;
      Rat lo = rat_max(s.lo, t.lo), hi = rat_min(s.hi, t.hi);
      if (lo <= hi) segs.push_back({s.edge, lo, hi});
    }
  for (int v = 0; v < g.num_vertices(); ++v) {
    GraphPoint p = g.vertex_point(v);
    if (cell_contains(g, a, p) && cell_contains(g, b, p))
      segs.push_back(canonical_vertex_seg(g, v));
  }
  return make_cell(g, std::move(segs));
}

inline bool cells_intersect(const MetricGraph& g, const Cell& a, const Cell& b) {
  return !intersect_cells(g, a, b).empty();
}

// Closure of the complement. Isolated removed points reappear, as they must.
inline Cell complement_closure(const MetricGraph& g, const Cell& c) {
  std::vector<Seg> segs;
  for (int e = 0; e < g.num_edges(); ++e) {
    const Rat& len = g.edge_length(e);
    Rat prev = 0;
    for (const Seg& s : c.segs) {
      if (s.edge != e) continue;
      if (s.lo > prev) segs.push_back({e, prev, s.lo});
      prev = s.hi;
    }
    if (prev < len) segs.push_back({e, prev, len});
  }
  return make_cell(g, std::move(segs));
}

// Whether c contains a whole neighborhood of p in the space.
inline bool contains_neighborhood(const MetricGraph& g, const Cell& c, const GraphPoint& p) {
  if (!p.at_vertex) {
    for (const Seg& s : c.segs)
      if (s.edge == p.edge && s.lo < p.offset && p.offset < s.hi) return true;
    return false;
  }
  for (auto [e, from_side] : g.incident(p.vertex)) {
    const Rat& len = g.edge_length(e);
    bool covered = false;
    for (const Seg& s : c.segs) {
      if (s.edge != e) continue;
      if (from_side && s.lo == 0 && s.hi > 0) covered = true;
      if (!from_side && s.hi == len && s.lo < len) covered = true;
    }
    if (!covered) return false;
  }
  return true;
}

namespace detail {

// Vertices of the line arrangement {route crossings, x=y, box sides} inside
// the box. True distance is concave on each same-sign region, so its extreme
// values over the box are attained at these points.
inline std::vector<std::pair<Rat, Rat>> seg_pair_candidates(const MetricGraph& g,
                                                            const Seg& s1, const Seg& s2) {
  struct Line {
    Rat a, b, c;  // a*x + b*y = c
  };
  const Edge& e1 = g.edge(s1.edge);
  const Edge& e2 = g.edge(s2.edge);
  const Rat L1 = g.edge_length(s1.edge), L2 = g.edge_length(s2.edge);
  struct Form {
    Rat ax, by, c0;
  };
  std::vector<Form> forms = {
      {Rat(1), Rat(1), g.vertex_distance(e1.from, e2.from)},
      {Rat(1), Rat(-1), g.vertex_distance(e1.from, e2.to) + L2},
      {Rat(-1), Rat(1), g.vertex_distance(e1.to, e2.from) + L1},
      {Rat(-1), Rat(-1), g.vertex_distance(e1.to, e2.to) + L1 + L2},
  };
  if (s1.edge == s2.edge) {
    forms.push_back({Rat(1), Rat(-1), Rat(0)});
    forms.push_back({Rat(-1), Rat(1), Rat(0)});
  }
  std::vector<Line> lines;
  for (size_t i = 0; i < forms.size(); ++i)
    for (size_t j = i + 1; j < forms.size(); ++j) {
      Rat a = forms[i].ax - forms[j].ax, b = forms[i].by - forms[j].by;
      if (a == 0 && b == 0) continue;
      lines.push_back({a, b, forms[j].c0 - forms[i].c0});
    }
  if (s1.edge == s2.edge) lines.push_back({Rat(1), Rat(-1), Rat(0)});
  lines.push_back({Rat(1), Rat(0), s1.lo});
  lines.push_back({Rat(1), Rat(0), s1.hi});
  lines.push_back({Rat(0), Rat(1), s2.lo});
  lines.push_back({Rat(0), Rat(1), s2.hi});
  std::vector<std::pair<Rat, Rat>> pts;
  for (size_t i = 0; i < lines.size(); ++i)
    for (size_t j = i + 1; j < lines.size(); ++j) {
      Rat det = lines[i].a * lines[j].b - lines[j].a * lines[i].b;
      if (det == 0) continue;
      Rat x = (lines[i].c * lines[j].b - lines[j].c * lines[i].b) / det;
      Rat y = (lines[i].a * lines[j].c - lines[j].a * lines[i].c) / det;
      if (x < s1.lo || x > s1.hi || y < s2.lo || y > s2.hi) continue;
      pts.emplace_back(x, y);
    }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace detail

inline Rat seg_pair_max_distance(const MetricGraph& g, const Seg& s1, const Seg& s2) {
  Rat best = 0;
  for (const auto& [x, y] : detail::seg_pair_candidates(g, s1, s2)) {
    Rat d = g.distance(g.point(s1.edge, x), g.point(s2.edge, y));
    if (d > best) best = d;
  }
  return best;
}

inline Rat diameter(const MetricGraph& g, const Cell& c) {
  if (c.empty()) throw std::invalid_argument("diameter: empty cell");
  Rat best = 0;
  for (size_t i = 0; i < c.segs.size(); ++i)
    for (size_t j = i; j < c.segs.size(); ++j) {
      Rat d = seg_pair_max_distance(g, c.segs[i], c.segs[j]);
      if (d > best) best = d;
    }
  return best;
}

// min d over a pair of boxes is attained at segment endpoints once the cells
// are known to be disjoint.
inline Rat cell_distance(const MetricGraph& g, const Cell& a, const Cell& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("cell_distance: empty cell");
  if (cells_intersect(g, a, b)) return Rat(0);
  bool first = true;
  Rat best = 0;
  for (const Seg& s : a.segs)
    for (const Seg& t : b.segs)
      for (const Rat& x : {s.lo, s.hi})
        for (const Rat& y : {t.lo, t.hi}) {
          Rat d = g.distance(g.point(s.edge, x), g.point(t.edge, y));
          if (first || d < best) best = d;
          first = false;
        }
  return best;
}

// Closed ball of radius r. Per edge the distance to the center is a minimum
// of affine functions of the offset, so the sublevel set is a short union of
// intervals.
inline Cell ball(const MetricGraph& g, const GraphPoint& c, const Rat& r) {
  if (r < 0) throw std::invalid_argument("ball: negative radius");
  std::vector<Seg> segs;
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const Rat& len = ed.length;
    Rat du = g.dist_to_vertex(c, ed.from);
    Rat dv = g.dist_to_vertex(c, ed.to);
    if (r >= du) segs.push_back({e, Rat(0), rat_min(Rat(r - du), len)});
    if (r >= dv) segs.push_back({e, rat_max(Rat(len - (r - dv)), Rat(0)), len});
    if (!c.at_vertex && c.edge == e)
      segs.push_back({e, rat_max(Rat(c.offset - r), Rat(0)), rat_min(Rat(c.offset + r), len)});
  }
  return make_cell(g, std::move(segs));
}

// Closed r-neighborhood of a cell. Any point within r of the cell has a
// shortest route entering it through a segment endpoint, so endpoint balls
// together with the cell itself cover the neighborhood exactly.
inline Cell fatten(const MetricGraph& g, const Cell& c, const Rat& r) {
  if (c.empty()) throw std::invalid_argument("fatten: empty cell");
  std::vector<Seg> segs = c.segs;
  for (const Seg& s : c.segs)
    for (const Rat& off : {s.lo, s.hi}) {
      Cell b = ball(g, g.point(s.edge, off), r);
      segs.insert(segs.end(), b.segs.begin(), b.segs.end());
    }
  return make_cell(g, std::move(segs));
}

// Connected components as index sets over c.segs.
inline std::vector<std::vector<int>> components(const MetricGraph& g, const Cell& c) {
  int n = static_cast<int>(c.segs.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (int v = 0; v < g.num_vertices(); ++v) {
    int first = -1;
    for (int i = 0; i < n; ++i) {
      const Seg& s = c.segs[i];
      const Edge& e = g.edge(s.edge);
      bool touches = (s.lo == 0 && e.from == v) ||
                     (s.hi == g.edge_length(s.edge) && e.to == v);
      if (!touches) continue;
      if (first < 0) first = i;
      else unite(first, i);
    }
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

inline bool is_connected(const MetricGraph& g, const Cell& c) {
  return !c.empty() && components(g, c).size() == 1;
}

namespace detail {

struct PointKey {
  bool at_vertex;
  int vertex;
  int edge;
  Rat offset;

  bool operator<(const PointKey& o) const {
    return std::tie(at_vertex, vertex, edge, offset) <
           std::tie(o.at_vertex, o.vertex, o.edge, o.offset);
  }
};

inline PointKey key_of(const GraphPoint& p) {
  return {p.at_vertex, p.vertex, p.at_vertex ? -1 : p.edge, p.at_vertex ? Rat(0) : p.offset};
}

}  // namespace detail

// Some walk from p to q inside the cell (not necessarily shortest), found by
// breadth first search over segment endpoints. Deterministic.
inline Walk path_in_cell(const MetricGraph& g, const Cell& c, const GraphPoint& p,
                         const GraphPoint& q) {
  if (!cell_contains(g, c, p) || !cell_contains(g, c, q))
    throw std::invalid_argument("path_in_cell: endpoint outside cell");
  Walk w;
  if (p == q) return w;
  std::map<detail::PointKey, int> ids;
  std::vector<GraphPoint> pts;
  auto node = [&](const GraphPoint& gp) {
    auto [it, fresh] = ids.emplace(detail::key_of(gp), static_cast<int>(pts.size()));
    if (fresh) pts.push_back(gp);
    return it->second;
  };
  std::vector<std::vector<std::pair<int, Leg>>> adj;
  auto add_arc = [&](int a, int b, const Leg& l) {
    size_t need = static_cast<size_t>(std::max(a, b)) + 1;
    if (adj.size() < need) adj.resize(need);
    adj[a].emplace_back(b, l);
  };
  int src = node(p), dst = node(q);
  for (const Seg& s : c.segs) {
    if (s.lo == s.hi) {
      node(g.point(s.edge, s.lo));
      continue;
    }
    std::vector<Rat> offs = {s.lo, s.hi};
    for (const GraphPoint* x : {&p, &q})
      if (!x->at_vertex && x->edge == s.edge && s.lo < x->offset && x->offset < s.hi)
        offs.push_back(x->offset);
    std::sort(offs.begin(), offs.end());
    offs.erase(std::unique(offs.begin(), offs.end()), offs.end());
    for (size_t i = 0; i + 1 < offs.size(); ++i) {
      int a = node(g.point(s.edge, offs[i]));
      int b = node(g.point(s.edge, offs[i + 1]));
      add_arc(a, b, {s.edge, offs[i], offs[i + 1]});
      add_arc(b, a, {s.edge, offs[i + 1], offs[i]});
    }
  }
  if (adj.size() < pts.size()) adj.resize(pts.size());
  for (auto& lst : adj)
    std::sort(lst.begin(), lst.end(), [](const auto& x, const auto& y) {
      return std::tie(x.second.edge, x.second.lo, x.second.hi, x.first) <
             std::tie(y.second.edge, y.second.lo, y.second.hi, y.first);
    });
  std::vector<int> from(pts.size(), -1);
  std::vector<Leg> via(pts.size());
  std::queue<int> bfs;
  bfs.push(src);
  from[src] = src;
  while (!bfs.empty()) {
    int v = bfs.front();
    bfs.pop();
    if (v == dst) break;
    for (const auto& [to, leg] : adj[v])
      if (from[to] < 0) {
        from[to] = v;
        via[to] = leg;
        bfs.push(to);
      }
  }
  if (from[dst] < 0) throw std::invalid_argument("path_in_cell: endpoints not connected in cell");
  std::vector<Leg> rev;
  for (int v = dst; v != src; v = from[v]) rev.push_back(via[v]);
  w.legs.assign(rev.rbegin(), rev.rend());
  return w;
}

// Closed walk from start covering every segment of the cell exactly twice
// (once per direction). Doubling the arcs makes the walk graph Eulerian;
// Hierholzer with sorted arc lists keeps the result deterministic. The cell
// must be connected and free of isolated points.
inline Walk euler_cover_walk(const MetricGraph& g, const Cell& c, const GraphPoint& start) {
  if (!cell_contains(g, c, start))
    throw std::invalid_argument("euler_cover_walk: start outside cell");
  if (!is_connected(g, c)) throw std::invalid_argument("euler_cover_walk: cell not connected");
  for (const Seg& s : c.segs)
    if (s.lo == s.hi) throw std::invalid_argument("euler_cover_walk: cell has an isolated point");
  std::map<detail::PointKey, int> ids;
  std::vector<GraphPoint> pts;
  auto node = [&](const GraphPoint& gp) {
    auto [it, fresh] = ids.emplace(detail::key_of(gp), static_cast<int>(pts.size()));
    if (fresh) pts.push_back(gp);
    return it->second;
  };
  int src = node(start);
  struct Arc {
    int to;
    Leg leg;
    bool used = false;
  };
  std::vector<Arc> arcs;
  std::vector<std::vector<int>> out;
  auto add_piece = [&](int e, const Rat& lo, const Rat& hi) {
    int a = node(g.point(e, lo)), b = node(g.point(e, hi));
    size_t need = static_cast<size_t>(std::max(a, b)) + 1;
    if (out.size() < need) out.resize(need);
    out[a].push_back(static_cast<int>(arcs.size()));
    arcs.push_back({b, {e, lo, hi}, false});
    out[b].push_back(static_cast<int>(arcs.size()));
    arcs.push_back({a, {e, hi, lo}, false});
  };
  for (const Seg& s : c.segs) {
    if (!start.at_vertex && start.edge == s.edge && s.lo < start.offset && start.offset < s.hi) {
      add_piece(s.edge, s.lo, start.offset);
      add_piece(s.edge, start.offset, s.hi);
    } else {
      add_piece(s.edge, s.lo, s.hi);
    }
  }
  if (out.size() < pts.size()) out.resize(pts.size());
  for (auto& lst : out)
    std::sort(lst.begin(), lst.end(), [&](int x, int y) {
      return std::tie(arcs[x].leg.edge, arcs[x].leg.lo, arcs[x].leg.hi) <
             std::tie(arcs[y].leg.edge, arcs[y].leg.lo, arcs[y].leg.hi);
    });
  // Iterative Hierholzer: walk forward consuming arcs, emit on backtrack.
  std::vector<size_t> next(pts.size(), 0);
  std::vector<Leg> emit_rev;
  std::vector<std::pair<int, int>> frame;  // (node, arc taken to get here)
  frame.emplace_back(src, -1);
  while (!frame.empty()) {
    auto [v, in_arc] = frame.back();
    bool advanced = false;
    while (next[v] < out[v].size()) {
      int ai = out[v][next[v]++];
      if (arcs[ai].used) continue;
      arcs[ai].used = true;
      frame.emplace_back(arcs[ai].to, ai);
      advanced = true;
      break;
    }
    if (!advanced) {
      frame.pop_back();
      if (in_arc >= 0) emit_rev.push_back(arcs[in_arc].leg);
    }
  }
  Walk w;
  w.legs.assign(emit_rev.rbegin(), emit_rev.rend());
  return w;
}

}  // namespace peano
