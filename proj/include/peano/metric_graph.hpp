#pragma once

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

#include "peano/rational.hpp"

namespace peano {

// Edge of a finite metric graph. Loops (from == to) and parallel edges are
// allowed; every edge has positive length.
struct Edge {
  int from = 0;
  int to = 0;
  Rat length;
};

// Canonical point of the underlying space: either a vertex, or an interior
// point of an edge with 0 < offset < length. Edge endpoints are always
// represented as vertex points so equality is structural.
struct GraphPoint {
  bool at_vertex = true;
  int vertex = 0;
  int edge = -1;
  Rat offset;

  friend bool operator==(const GraphPoint& a, const GraphPoint& b) {
    if (a.at_vertex != b.at_vertex) return false;
    if (a.at_vertex) return a.vertex == b.vertex;
    return a.edge == b.edge && a.offset == b.offset;
  }
  friend bool operator!=(const GraphPoint& a, const GraphPoint& b) { return !(a == b); }
};

// Oriented sub-edge: walked from offset lo to offset hi on one edge, lo != hi.
struct Leg {
  int edge = 0;
  Rat lo, hi;

  Rat span() const { return rat_abs(hi - lo); }
};

// Contiguous sequence of legs, traversed at constant speed by map pieces.
struct Walk {
  std::vector<Leg> legs;

  bool empty() const { return legs.empty(); }
};

class MetricGraph {
 public:
  MetricGraph(int num_vertices, std::vector<Edge> edges)
      : n_(num_vertices), edges_(std::move(edges)) {
    if (n_ < 1) throw std::invalid_argument("MetricGraph: need at least one vertex");
    if (edges_.empty()) throw std::invalid_argument("MetricGraph: need at least one edge");
    for (const Edge& e : edges_) {
      if (e.from < 0 || e.from >= n_ || e.to < 0 || e.to >= n_)
        throw std::invalid_argument("MetricGraph: edge endpoint out of range");
      if (e.length <= 0) throw std::invalid_argument("MetricGraph: edge length must be positive");
    }
    compute_metric();
    check_connected();
  }

  int num_vertices() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_.at(e); }
  const Rat& edge_length(int e) const { return edges_.at(e).length; }

  GraphPoint vertex_point(int v) const {
    if (v < 0 || v >= n_) throw std::invalid_argument("vertex_point: out of range");
    GraphPoint p;
    p.at_vertex = true;
    p.vertex = v;
    return p;
  }

  // Canonicalizes endpoint offsets to vertex points.
  GraphPoint point(int e, const Rat& offset) const {
    const Edge& ed = edges_.at(e);
    if (offset < 0 || offset > ed.length)
      throw std::invalid_argument("point: offset outside edge");
    if (offset == 0) return vertex_point(ed.from);
    if (offset == ed.length) return vertex_point(ed.to);
    GraphPoint p;
    p.at_vertex = false;
    p.vertex = -1;
    p.edge = e;
    p.offset = offset;
    return p;
  }

  // Incidences of v as (edge id, attached at 'from' end). A loop at v
  // contributes two entries. Ordered by edge id, 'from' side first.
  std::vector<std::pair<int, bool>> incident(int v) const {
    std::vector<std::pair<int, bool>> out;
    for (int e = 0; e < num_edges(); ++e) {
      if (edges_[e].from == v) out.emplace_back(e, true);
      if (edges_[e].to == v) out.emplace_back(e, false);
    }
    return out;
  }

  const Rat& vertex_distance(int u, int v) const { return dist_.at(u).at(v); }

  Rat dist_to_vertex(const GraphPoint& p, int v) const {
    if (p.at_vertex) return vertex_distance(p.vertex, v);
    const Edge& e = edges_.at(p.edge);
    return rat_min(p.offset + vertex_distance(e.from, v),
                   Rat(e.length - p.offset) + vertex_distance(e.to, v));
  }

  // Shortest-path metric. The same-edge direct route competes with the four
  // portal routes through edge endpoints, which matters on loops and
  // parallel edges.
  Rat distance(const GraphPoint& p, const GraphPoint& q) const {
    if (p.at_vertex) return dist_to_vertex(q, p.vertex);
    if (q.at_vertex) return dist_to_vertex(p, q.vertex);
    const Edge& ep = edges_[p.edge];
    const Edge& eq = edges_[q.edge];
    Rat best = p.offset + vertex_distance(ep.from, eq.from) + q.offset;
    Rat cand = p.offset + vertex_distance(ep.from, eq.to) + (eq.length - q.offset);
    if (cand < best) best = cand;
    cand = (ep.length - p.offset) + vertex_distance(ep.to, eq.from) + q.offset;
    if (cand < best) best = cand;
    cand = (ep.length - p.offset) + vertex_distance(ep.to, eq.to) + (eq.length - q.offset);
    if (cand < best) best = cand;
    if (p.edge == q.edge) {
      cand = rat_abs(p.offset - q.offset);
      if (cand < best) best = cand;
    }
    return best;
  }

  // Walk helpers. All walks are validated for contiguity elsewhere; these
  // assume well formed input.
  Rat walk_length(const Walk& w) const {
    Rat total = 0;
    for (const Leg& l : w.legs) total += l.span();
    return total;
  }

  GraphPoint walk_start(const Walk& w) const {
    if (w.empty()) throw std::invalid_argument("walk_start: empty walk");
    return point(w.legs.front().edge, w.legs.front().lo);
  }

  GraphPoint walk_end(const Walk& w) const {
    if (w.empty()) throw std::invalid_argument("walk_end: empty walk");
    return point(w.legs.back().edge, w.legs.back().hi);
  }

  GraphPoint walk_point(const Walk& w, const Rat& s) const {
    if (w.empty()) throw std::invalid_argument("walk_point: empty walk");
    if (s < 0) throw std::invalid_argument("walk_point: negative parameter");
    Rat acc = 0;
    for (const Leg& l : w.legs) {
      Rat span = l.span();
      if (s <= acc + span) {
        Rat t = s - acc;
        Rat off = l.lo < l.hi ? Rat(l.lo + t) : Rat(l.lo - t);
        return point(l.edge, off);
      }
      acc += span;
    }
    throw std::invalid_argument("walk_point: parameter beyond walk length");
  }

  void validate_walk(const Walk& w) const {
    for (size_t i = 0; i < w.legs.size(); ++i) {
      const Leg& l = w.legs[i];
      if (l.edge < 0 || l.edge >= num_edges())
        throw std::invalid_argument("validate_walk: bad edge id");
      const Rat& len = edges_[l.edge].length;
      if (l.lo < 0 || l.lo > len || l.hi < 0 || l.hi > len)
        throw std::invalid_argument("validate_walk: offset outside edge");
      if (l.lo == l.hi) throw std::invalid_argument("validate_walk: zero length leg");
      if (i > 0) {
        GraphPoint prev = point(w.legs[i - 1].edge, w.legs[i - 1].hi);
        GraphPoint cur = point(l.edge, l.lo);
        if (prev != cur) throw std::invalid_argument("validate_walk: legs not contiguous");
      }
    }
  }

  // Geodesic from p to q as a walk; empty when p == q. Ties are broken
  // deterministically: direct same-edge route first, then portal routes in
  // (from,from), (from,to), (to,from), (to,to) order, then smallest edge id
  // at each vertex step.
  Walk geodesic(const GraphPoint& p, const GraphPoint& q) const {
    Walk w;
    if (p == q) return w;
    Rat d = distance(p, q);
    if (!p.at_vertex && !q.at_vertex && p.edge == q.edge &&
        rat_abs(p.offset - q.offset) == d) {
      w.legs.push_back({p.edge, p.offset, q.offset});
      return w;
    }
    // boundary_off disambiguates the side on loop edges, where from == to.
    struct Portal {
      int v;
      Rat cost;
      Rat boundary_off;
    };
    auto portals = [&](const GraphPoint& x) {
      std::vector<Portal> out;
      if (x.at_vertex) {
        out.push_back({x.vertex, Rat(0), Rat(0)});
      } else {
        const Edge& e = edges_[x.edge];
        out.push_back({e.from, x.offset, Rat(0)});
        out.push_back({e.to, Rat(e.length - x.offset), e.length});
      }
      return out;
    };
    for (const Portal& a : portals(p)) {
      for (const Portal& b : portals(q)) {
        if (a.cost + vertex_distance(a.v, b.v) + b.cost != d) continue;
        if (!p.at_vertex && a.cost > 0)
          w.legs.push_back({p.edge, p.offset, a.boundary_off});
        append_vertex_path(w, a.v, b.v);
        if (!q.at_vertex && b.cost > 0)
          w.legs.push_back({q.edge, b.boundary_off, q.offset});
        return w;
      }
    }
    throw std::logic_error("geodesic: no route matched its own distance");
  }

 private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Rat>> dist_;
  std::vector<std::vector<int>> step_;  // first edge on a shortest u->v path

  void compute_metric() {
    const Rat inf = Rat(-1);  // -1 marks "unreached"
    dist_.assign(n_, std::vector<Rat>(n_, inf));
    for (int v = 0; v < n_; ++v) dist_[v][v] = 0;
    for (const Edge& e : edges_) {
      if (e.from == e.to) continue;
      if (dist_[e.from][e.to] < 0 || e.length < dist_[e.from][e.to]) {
        dist_[e.from][e.to] = e.length;
        dist_[e.to][e.from] = e.length;
      }
    }
    for (int k = 0; k < n_; ++k)
      for (int i = 0; i < n_; ++i) {
        if (dist_[i][k] < 0) continue;
        for (int j = 0; j < n_; ++j) {
          if (dist_[k][j] < 0) continue;
          Rat through = dist_[i][k] + dist_[k][j];
          if (dist_[i][j] < 0 || through < dist_[i][j]) dist_[i][j] = through;
        }
      }
    step_.assign(n_, std::vector<int>(n_, -1));
    for (int u = 0; u < n_; ++u)
      for (int v = 0; v < n_; ++v) {
        if (u == v || dist_[u][v] < 0) continue;
        for (int e = 0; e < num_edges(); ++e) {
          const Edge& ed = edges_[e];
          int w = -1;
          if (ed.from == u && ed.to != u) w = ed.to;
          else if (ed.to == u && ed.from != u) w = ed.from;
          if (w < 0) continue;
          if (dist_[w][v] >= 0 && ed.length + dist_[w][v] == dist_[u][v]) {
            step_[u][v] = e;
            break;
          }
        }
      }
  }

  void check_connected() const {
    for (int v = 1; v < n_; ++v)
      if (dist_[0][v] < 0) throw std::invalid_argument("MetricGraph: graph is not connected");
  }

  void append_vertex_path(Walk& w, int u, int v) const {
    while (u != v) {
      int e = step_[u][v];
      const Edge& ed = edges_[e];
      if (ed.from == u) {
        w.legs.push_back({e, Rat(0), ed.length});
        u = ed.to;
      } else {
        w.legs.push_back({e, ed.length, Rat(0)});
        u = ed.from;
      }
    }
  }
};

inline Walk reverse_walk(const Walk& w) {
  Walk r;
  r.legs.reserve(w.legs.size());
  for (auto it = w.legs.rbegin(); it != w.legs.rend(); ++it)
    r.legs.push_back({it->edge, it->hi, it->lo});
  return r;
}

inline Walk concat_walks(const Walk& a, const Walk& b) {
  Walk c = a;
  c.legs.insert(c.legs.end(), b.legs.begin(), b.legs.end());
  return c;
}

}  // namespace peano
