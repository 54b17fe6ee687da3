#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "peano/cell.hpp"

namespace peano {

// Hard cap on pieces of any single map; compose and iterate throw past it.
inline constexpr long kPieceCap = 1000000;

struct piece_overflow : std::runtime_error {
  piece_overflow() : std::runtime_error("piece_overflow: map exceeds the piece cap") {}
};

enum class ActionKind { kConstant, kTraverse };

// What a map does on one domain interval: hold a point, or traverse a walk
// at constant speed.
struct Action {
  ActionKind kind = ActionKind::kConstant;
  GraphPoint value;
  Walk walk;

  static Action constant(GraphPoint p) {
    Action a;
    a.kind = ActionKind::kConstant;
    a.value = p;
    return a;
  }
  static Action traverse(Walk w) {
    Action a;
    a.kind = ActionKind::kTraverse;
    a.walk = std::move(w);
    return a;
  }
};

struct Piece {
  int edge = 0;
  Rat lo, hi;  // domain interval, lo < hi
  Action action;
};

// Replaces the map on [lo, hi] of one edge by the given pieces, which must
// tile [lo, hi] and keep the map continuous.
struct Patch {
  int edge = 0;
  Rat lo, hi;
  std::vector<Piece> replacement;
};

namespace detail {

inline std::vector<Rat> walk_prefix(const Walk& w) {
  std::vector<Rat> pre(w.legs.size() + 1);
  pre[0] = 0;
  for (size_t i = 0; i < w.legs.size(); ++i) pre[i + 1] = pre[i] + w.legs[i].span();
  return pre;
}

// Leg index whose parameter range contains s, preferring the earlier leg at
// junctions.
inline size_t leg_at(const std::vector<Rat>& pre, const Rat& s) {
  size_t lo = 0, hi = pre.size() - 2;
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (pre[mid + 1] < s) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

}  // namespace detail

// Forward fragment of w over walk parameters [s0, s1], 0 <= s0 < s1 <= len.
inline Walk sub_walk(const Walk& w, const std::vector<Rat>& pre, const Rat& s0, const Rat& s1) {
  if (s0 >= s1) throw std::invalid_argument("sub_walk: empty parameter range");
  if (s0 < 0 || s1 > pre.back()) throw std::invalid_argument("sub_walk: range outside walk");
  Walk out;
  size_t i = detail::leg_at(pre, s0);
  for (; i < w.legs.size() && pre[i] < s1; ++i) {
    Rat a = rat_max(s0, pre[i]) - pre[i];
    Rat b = rat_min(s1, pre[i + 1]) - pre[i];
    if (a == b) continue;
    const Leg& l = w.legs[i];
    if (l.lo < l.hi) out.legs.push_back({l.edge, Rat(l.lo + a), Rat(l.lo + b)});
    else out.legs.push_back({l.edge, Rat(l.lo - a), Rat(l.lo - b)});
  }
  return out;
}

// Fragment walked from parameter a to b; reversed when a > b.
inline Walk oriented_sub_walk(const Walk& w, const std::vector<Rat>& pre, const Rat& a,
                              const Rat& b) {
  if (a < b) return sub_walk(w, pre, a, b);
  return reverse_walk(sub_walk(w, pre, b, a));
}

// Segments covered by the walk over parameters [s0, s1] (s0 == s1 gives the
// single point).
inline std::vector<Seg> walk_range_segs(const MetricGraph& g, const Walk& w,
                                        const std::vector<Rat>& pre, const Rat& s0,
                                        const Rat& s1) {
  std::vector<Seg> out;
  if (s0 == s1) {
    GraphPoint p = g.walk_point(w, s0);
    if (p.at_vertex) out.push_back(canonical_vertex_seg(g, p.vertex));
    else out.push_back({p.edge, p.offset, p.offset});
    return out;
  }
  size_t i = detail::leg_at(pre, s0);
  for (; i < w.legs.size() && pre[i] < s1; ++i) {
    Rat a = rat_max(s0, pre[i]) - pre[i];
    Rat b = rat_min(s1, pre[i + 1]) - pre[i];
    if (a == b) continue;
    const Leg& l = w.legs[i];
    Rat oa = l.lo < l.hi ? Rat(l.lo + a) : Rat(l.lo - a);
    Rat ob = l.lo < l.hi ? Rat(l.lo + b) : Rat(l.lo - b);
    out.push_back({l.edge, rat_min(oa, ob), rat_max(oa, ob)});
  }
  return out;
}

class PLMap {
 public:
  PLMap(std::shared_ptr<const MetricGraph> g, std::vector<Piece> pieces)
      : g_(std::move(g)), pieces_(std::move(pieces)) {
    if (!g_) throw std::invalid_argument("PLMap: null graph");
    index_and_validate();
  }

  const MetricGraph& graph() const { return *g_; }
  const std::shared_ptr<const MetricGraph>& graph_ptr() const { return g_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  long num_pieces() const { return static_cast<long>(pieces_.size()); }

  long total_legs() const {
    long n = 0;
    for (const Piece& p : pieces_)
      if (p.action.kind == ActionKind::kTraverse)
        n += static_cast<long>(p.action.walk.legs.size());
    return n;
  }

  // Index of a piece whose domain contains the offset (earliest at ties).
  int piece_index_at(int edge, const Rat& off) const {
    int lo = edge_begin_[edge], hi = edge_begin_[edge + 1] - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (pieces_[mid].hi < off) lo = mid + 1;
      else hi = mid;
    }
    return lo;
  }
  const Piece& piece_at(int edge, const Rat& off) const {
    return pieces_[piece_index_at(edge, off)];
  }

  // Sorted domain cut offsets of one edge, including 0 and the edge length.
  std::vector<Rat> breakpoints(int edge) const {
    std::vector<Rat> out;
    for (int i = edge_begin_[edge]; i < edge_begin_[edge + 1]; ++i)
      out.push_back(pieces_[i].lo);
    out.push_back(g_->edge_length(edge));
    return out;
  }

  GraphPoint value_at_offset(int edge, const Rat& off) const {
    const Piece& p = piece_at(edge, off);
    if (p.action.kind == ActionKind::kConstant) return p.action.value;
    const Walk& w = p.action.walk;
    Rat wl = g_->walk_length(w);
    return g_->walk_point(w, Rat((off - p.lo) * wl / (p.hi - p.lo)));
  }

  GraphPoint evaluate(const GraphPoint& p) const {
    if (!p.at_vertex) return value_at_offset(p.edge, p.offset);
    auto [e, from_side] = g_->incident(p.vertex).front();
    return value_at_offset(e, from_side ? Rat(0) : g_->edge_length(e));
  }

  void apply_patches(std::vector<Patch> patches);

 private:
  std::shared_ptr<const MetricGraph> g_;
  std::vector<Piece> pieces_;
  std::vector<int> edge_begin_;

  static GraphPoint action_start(const MetricGraph& g, const Action& a) {
    return a.kind == ActionKind::kConstant ? a.value : g.walk_start(a.walk);
  }
  static GraphPoint action_end(const MetricGraph& g, const Action& a) {
    return a.kind == ActionKind::kConstant ? a.value : g.walk_end(a.walk);
  }

  void index_and_validate() {
    const MetricGraph& g = *g_;
    std::stable_sort(pieces_.begin(), pieces_.end(), [](const Piece& a, const Piece& b) {
      return std::tie(a.edge, a.lo) < std::tie(b.edge, b.lo);
    });
    if (static_cast<long>(pieces_.size()) > kPieceCap) throw piece_overflow();
    edge_begin_.assign(g.num_edges() + 1, 0);
    for (const Piece& p : pieces_) {
      if (p.edge < 0 || p.edge >= g.num_edges())
        throw std::invalid_argument("PLMap: bad piece edge");
      edge_begin_[p.edge + 1]++;
    }
    for (int e = 0; e < g.num_edges(); ++e) edge_begin_[e + 1] += edge_begin_[e];
    for (int e = 0; e < g.num_edges(); ++e) {
      int b = edge_begin_[e], c = edge_begin_[e + 1];
      if (b == c) throw std::invalid_argument("PLMap: edge not covered by pieces");
      if (pieces_[b].lo != 0 || pieces_[c - 1].hi != g.edge_length(e))
        throw std::invalid_argument("PLMap: pieces do not tile the edge");
      for (int i = b; i < c; ++i) {
        const Piece& p = pieces_[i];
        if (p.lo >= p.hi) throw std::invalid_argument("PLMap: empty piece");
        if (i > b && pieces_[i - 1].hi != p.lo)
          throw std::invalid_argument("PLMap: pieces do not tile the edge");
        if (p.action.kind == ActionKind::kTraverse) {
          g.validate_walk(p.action.walk);
          if (p.action.walk.empty())
            throw std::invalid_argument("PLMap: traverse piece with empty walk");
        }
        if (i > b && action_end(g, pieces_[i - 1].action) != action_start(g, p.action))
          throw std::invalid_argument("PLMap: discontinuity at a piece boundary");
      }
    }
    // All edge ends meeting at one vertex must map it to one point.
    for (int v = 0; v < g.num_vertices(); ++v) {
      std::optional<GraphPoint> val;
      for (auto [e, from_side] : g.incident(v)) {
        const Piece& p =
            from_side ? pieces_[edge_begin_[e]] : pieces_[edge_begin_[e + 1] - 1];
        GraphPoint here = from_side ? action_start(g, p.action) : action_end(g, p.action);
        if (!val) val = here;
        else if (*val != here)
          throw std::invalid_argument("PLMap: discontinuity at a vertex");
      }
    }
  }
};

inline PLMap identity_map(std::shared_ptr<const MetricGraph> g) {
  std::vector<Piece> pieces;
  for (int e = 0; e < g->num_edges(); ++e) {
    Walk w;
    w.legs.push_back({e, Rat(0), g->edge_length(e)});
    pieces.push_back({e, Rat(0), g->edge_length(e), Action::traverse(std::move(w))});
  }
  return PLMap(std::move(g), std::move(pieces));
}

inline PLMap constant_map(std::shared_ptr<const MetricGraph> g, const GraphPoint& c) {
  std::vector<Piece> pieces;
  for (int e = 0; e < g->num_edges(); ++e)
    pieces.push_back({e, Rat(0), g->edge_length(e), Action::constant(c)});
  return PLMap(std::move(g), std::move(pieces));
}

inline Cell image(const PLMap& f, const Cell& c) {
  const MetricGraph& g = f.graph();
  std::vector<Seg> segs;
  auto push_point = [&](const GraphPoint& p) {
    if (p.at_vertex) segs.push_back(canonical_vertex_seg(g, p.vertex));
    else segs.push_back({p.edge, p.offset, p.offset});
  };
  for (const Seg& s : c.segs) {
    if (s.lo == s.hi) {
      push_point(f.value_at_offset(s.edge, s.lo));
      continue;
    }
    int i0 = f.piece_index_at(s.edge, s.lo);
    for (int i = i0; i < static_cast<int>(f.pieces().size()); ++i) {
      const Piece& p = f.pieces()[i];
      if (p.edge != s.edge || p.lo >= s.hi) break;
      Rat a = rat_max(p.lo, s.lo), b = rat_min(p.hi, s.hi);
      if (a >= b) continue;  // boundary values come from the neighbor piece
      if (p.action.kind == ActionKind::kConstant) {
        push_point(p.action.value);
      } else {
        auto pre = detail::walk_prefix(p.action.walk);
        Rat wl = pre.back();
        Rat sa = (a - p.lo) * wl / (p.hi - p.lo);
        Rat sb = (b - p.lo) * wl / (p.hi - p.lo);
        auto part = walk_range_segs(g, p.action.walk, pre, sa, sb);
        segs.insert(segs.end(), part.begin(), part.end());
      }
    }
  }
  return make_cell(g, std::move(segs));
}

inline Cell map_image(const PLMap& f) { return image(f, whole_space(f.graph())); }

inline bool is_surjective(const PLMap& f) { return map_image(f) == whole_space(f.graph()); }

inline Cell preimage(const PLMap& f, const Cell& c) {
  const MetricGraph& g = f.graph();
  std::vector<Seg> out;
  for (const Piece& p : f.pieces()) {
    if (p.action.kind == ActionKind::kConstant) {
      if (cell_contains(g, c, p.action.value)) out.push_back({p.edge, p.lo, p.hi});
      continue;
    }
    const Walk& w = p.action.walk;
    auto pre = detail::walk_prefix(w);
    Rat wl = pre.back();
    Rat scale = (p.hi - p.lo) / wl;  // domain length per walk parameter
    auto dom = [&](const Rat& s) { return Rat(p.lo + s * scale); };
    for (size_t i = 0; i < w.legs.size(); ++i) {
      const Leg& l = w.legs[i];
      Rat o0 = rat_min(l.lo, l.hi), o1 = rat_max(l.lo, l.hi);
      for (const Seg& s : c.segs) {
        if (s.edge != l.edge) continue;
        Rat a = rat_max(o0, s.lo), b = rat_min(o1, s.hi);
        if (a > b) continue;
        Rat sa, sb;
        if (l.lo < l.hi) {
          sa = pre[i] + (a - l.lo);
          sb = pre[i] + (b - l.lo);
        } else {
          sa = pre[i] + (l.lo - b);
          sb = pre[i] + (l.lo - a);
        }
        out.push_back({p.edge, dom(sa), dom(sb)});
      }
      // Junction points are the only places a walk meets a vertex; the cell
      // may hold that vertex through a different edge.
      for (const Rat& s : {pre[i], pre[i + 1]}) {
        GraphPoint jp = g.walk_point(w, s);
        if (jp.at_vertex && cell_contains(g, c, jp))
          out.push_back({p.edge, dom(s), dom(s)});
      }
    }
  }
  return make_cell(g, std::move(out));
}

namespace detail {

// One span of f along a walk: over walk parameters [s0, s1] the composite
// f(walk(s)) is the given action at constant speed.
struct SpanAction {
  Rat s0, s1;
  Action action;
};

// Splits f along w at leg boundaries and at f's breakpoints, producing the
// composite actions. bp caches f.breakpoints per edge; fprefix caches walk
// prefixes of f's traverse pieces by piece index.
inline std::vector<SpanAction> decompose_along_walk(
    const PLMap& f, const Walk& w, const std::vector<Rat>& wpre,
    std::vector<std::vector<Rat>>& bp,
    std::vector<std::optional<std::vector<Rat>>>& fprefix) {
  const MetricGraph& g = f.graph();
  std::vector<SpanAction> out;
  for (size_t li = 0; li < w.legs.size(); ++li) {
    const Leg& l = w.legs[li];
    if (bp[l.edge].empty()) bp[l.edge] = f.breakpoints(l.edge);
    const auto& cuts = bp[l.edge];
    Rat o0 = rat_min(l.lo, l.hi), o1 = rat_max(l.lo, l.hi);
    // Walk parameters of f's cuts strictly inside this leg.
    std::vector<Rat> ss = {wpre[li], wpre[li + 1]};
    auto it = std::upper_bound(cuts.begin(), cuts.end(), o0);
    for (; it != cuts.end() && *it < o1; ++it)
      ss.push_back(Rat(wpre[li] + rat_abs(*it - l.lo)));
    std::sort(ss.begin(), ss.end());
    ss.erase(std::unique(ss.begin(), ss.end()), ss.end());
    for (size_t k = 0; k + 1 < ss.size(); ++k) {
      Rat sa = ss[k], sb = ss[k + 1];
      Rat oa = l.lo < l.hi ? Rat(l.lo + (sa - wpre[li])) : Rat(l.lo - (sa - wpre[li]));
      Rat ob = l.lo < l.hi ? Rat(l.lo + (sb - wpre[li])) : Rat(l.lo - (sb - wpre[li]));
      Rat omid = (oa + ob) / 2;
      int pi = f.piece_index_at(l.edge, omid);
      const Piece& fp = f.pieces()[pi];
      if (fp.action.kind == ActionKind::kConstant) {
        out.push_back({sa, sb, Action::constant(fp.action.value)});
      } else {
        if (!fprefix[pi]) fprefix[pi] = walk_prefix(fp.action.walk);
        const auto& fpre = *fprefix[pi];
        Rat wl = fpre.back();
        Rat fa = (oa - fp.lo) * wl / (fp.hi - fp.lo);
        Rat fb = (ob - fp.lo) * wl / (fp.hi - fp.lo);
        out.push_back({sa, sb, Action::traverse(oriented_sub_walk(fp.action.walk, fpre, fa, fb))});
      }
    }
  }
  return out;
}

}  // namespace detail

// Merges adjacent pieces that describe one action: equal constants, or
// traversals at equal speed whose walks join.
inline std::vector<Piece> coalesce_pieces(const MetricGraph& g, std::vector<Piece> pieces) {
  std::vector<Piece> out;
  for (Piece& p : pieces) {
    if (!out.empty()) {
      Piece& q = out.back();
      if (q.edge == p.edge && q.hi == p.lo) {
        if (q.action.kind == ActionKind::kConstant && p.action.kind == ActionKind::kConstant &&
            q.action.value == p.action.value) {
          q.hi = p.hi;
          continue;
        }
        if (q.action.kind == ActionKind::kTraverse && p.action.kind == ActionKind::kTraverse) {
          Rat wq = g.walk_length(q.action.walk), wp = g.walk_length(p.action.walk);
          if (wq * (p.hi - p.lo) == wp * (q.hi - q.lo) &&
              g.walk_end(q.action.walk) == g.walk_start(p.action.walk)) {
            for (const Leg& l : p.action.walk.legs) {
              Leg& last = q.action.walk.legs.back();
              if (last.edge == l.edge && last.hi == l.lo &&
                  (last.lo < last.hi) == (l.lo < l.hi)) {
                last.hi = l.hi;
              } else {
                q.action.walk.legs.push_back(l);
              }
            }
            q.hi = p.hi;
            continue;
          }
        }
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

// Composite x -> f(g(x)).
inline PLMap compose(const PLMap& f, const PLMap& g_map) {
  const MetricGraph& g = f.graph();
  if (&g != &g_map.graph())
    throw std::invalid_argument("compose: maps live on different graphs");
  std::vector<std::vector<Rat>> bp(g.num_edges());
  std::vector<std::optional<std::vector<Rat>>> fprefix(f.pieces().size());
  std::vector<Piece> out;
  for (const Piece& p : g_map.pieces()) {
    if (p.action.kind == ActionKind::kConstant) {
      out.push_back({p.edge, p.lo, p.hi, Action::constant(f.evaluate(p.action.value))});
    } else {
      auto wpre = detail::walk_prefix(p.action.walk);
      Rat wl = wpre.back();
      Rat scale = (p.hi - p.lo) / wl;
      auto spans = detail::decompose_along_walk(f, p.action.walk, wpre, bp, fprefix);
      for (auto& sp : spans)
        out.push_back({p.edge, Rat(p.lo + sp.s0 * scale), Rat(p.lo + sp.s1 * scale),
                       std::move(sp.action)});
    }
    if (static_cast<long>(out.size()) > kPieceCap) throw piece_overflow();
  }
  return PLMap(f.graph_ptr(), coalesce_pieces(g, std::move(out)));
}

inline PLMap iterate_map(const PLMap& f, int n) {
  if (n < 1) throw std::invalid_argument("iterate_map: need n >= 1");
  PLMap acc = f;
  for (int i = 1; i < n; ++i) acc = compose(f, acc);
  return acc;
}

// Fraction of total domain length on which the map is locally constant.
inline Rat lc_fraction(const PLMap& f) {
  Rat constant_len = 0, total = 0;
  for (const Piece& p : f.pieces()) {
    if (p.action.kind == ActionKind::kConstant) constant_len += p.hi - p.lo;
    total += p.hi - p.lo;
  }
  return constant_len / total;
}

// Largest traversal speed; a valid Lipschitz constant for the path metric.
inline Rat lipschitz_constant(const PLMap& f) {
  Rat best = 0;
  for (const Piece& p : f.pieces()) {
    if (p.action.kind != ActionKind::kTraverse) continue;
    Rat speed = f.graph().walk_length(p.action.walk) / (p.hi - p.lo);
    if (speed > best) best = speed;
  }
  return best;
}

// A delta with: d(x, y) < delta implies d(f(x), f(y)) < eps.
inline Rat modulus(const PLMap& f, const Rat& eps) {
  if (eps <= 0) throw std::invalid_argument("modulus: eps must be positive");
  Rat lip = lipschitz_constant(f);
  if (lip <= 1) return eps;
  return eps / lip;
}

// Total image path length of f over [a, b] on one edge; bounds the diameter
// of the image of any connected subset.
inline Rat variation_on(const PLMap& f, int edge, const Rat& a, const Rat& b) {
  Rat sum = 0;
  int i0 = f.piece_index_at(edge, a);
  for (int i = i0; i < static_cast<int>(f.pieces().size()); ++i) {
    const Piece& p = f.pieces()[i];
    if (p.edge != edge || p.lo >= b) break;
    Rat c = rat_max(p.lo, a), d = rat_min(p.hi, b);
    if (c >= d) continue;
    if (p.action.kind == ActionKind::kTraverse)
      sum += f.graph().walk_length(p.action.walk) * (d - c) / (p.hi - p.lo);
  }
  return sum;
}

namespace detail {

// Maximal intervals on which a map is a single affine run into one edge (or
// constant). The workhorse behind exact sup distance and fixed point finding.
struct AffineSpan {
  Rat x0, x1;
  bool constant;
  GraphPoint cpoint;  // when constant
  int img_edge = -1;  // otherwise: offset o0 at x0 moving affinely to o1 at x1
  Rat o0, o1;
};

inline std::vector<AffineSpan> affine_atlas(const PLMap& f, int edge) {
  std::vector<AffineSpan> out;
  const auto& pieces = f.pieces();
  for (const Piece& p : pieces) {
    if (p.edge != edge) continue;
    if (p.action.kind == ActionKind::kConstant) {
      AffineSpan s;
      s.x0 = p.lo;
      s.x1 = p.hi;
      s.constant = true;
      s.cpoint = p.action.value;
      out.push_back(std::move(s));
      continue;
    }
    auto pre = walk_prefix(p.action.walk);
    Rat wl = pre.back();
    Rat scale = (p.hi - p.lo) / wl;
    for (size_t i = 0; i < p.action.walk.legs.size(); ++i) {
      const Leg& l = p.action.walk.legs[i];
      AffineSpan s;
      s.x0 = p.lo + pre[i] * scale;
      s.x1 = p.lo + pre[i + 1] * scale;
      s.constant = false;
      s.img_edge = l.edge;
      s.o0 = l.lo;
      s.o1 = l.hi;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline GraphPoint span_value(const MetricGraph& g, const AffineSpan& s, const Rat& x) {
  if (s.constant) return s.cpoint;
  Rat o = s.o0 + (x - s.x0) * (s.o1 - s.o0) / (s.x1 - s.x0);
  return g.point(s.img_edge, o);
}

// Portal cost functions c(x) = a + b*x from the span's value to each vertex
// it can exit through.
struct CostFn {
  int v;
  Rat a, b;
};

inline std::vector<CostFn> span_portals(const MetricGraph& g, const AffineSpan& s) {
  std::vector<CostFn> out;
  if (s.constant) {
    if (s.cpoint.at_vertex) {
      out.push_back({s.cpoint.vertex, Rat(0), Rat(0)});
    } else {
      const Edge& e = g.edge(s.cpoint.edge);
      out.push_back({e.from, s.cpoint.offset, Rat(0)});
      out.push_back({e.to, Rat(e.length - s.cpoint.offset), Rat(0)});
    }
    return out;
  }
  const Edge& e = g.edge(s.img_edge);
  Rat slope = (s.o1 - s.o0) / (s.x1 - s.x0);
  Rat icept = s.o0 - s.x0 * slope;
  out.push_back({e.from, icept, slope});
  out.push_back({e.to, Rat(e.length - icept), Rat(-slope)});
  return out;
}

inline int span_edge(const AffineSpan& s) {
  if (s.constant) return s.cpoint.at_vertex ? -1 : s.cpoint.edge;
  return s.img_edge;
}

inline Rat span_offset_at(const AffineSpan& s, const Rat& x) {
  if (s.constant) return s.cpoint.offset;
  return s.o0 + (x - s.x0) * (s.o1 - s.o0) / (s.x1 - s.x0);
}

}  // namespace detail

// Exact sup over the space of d(f1(x), f2(x)). Per common affine interval
// the pointwise distance is a minimum of affine route costs, so its maximum
// sits at an interval endpoint or a crossing of two routes; every candidate
// is evaluated with the true metric.
inline Rat sup_distance(const PLMap& f1, const PLMap& f2) {
  const MetricGraph& g = f1.graph();
  if (&g != &f2.graph())
    throw std::invalid_argument("sup_distance: maps live on different graphs");
  Rat best = 0;
  for (int e = 0; e < g.num_edges(); ++e) {
    auto a1 = detail::affine_atlas(f1, e);
    auto a2 = detail::affine_atlas(f2, e);
    size_t i = 0, j = 0;
    while (i < a1.size() && j < a2.size()) {
      Rat c = rat_max(a1[i].x0, a2[j].x0);
      Rat d = rat_min(a1[i].x1, a2[j].x1);
      if (c <= d) {
        const auto& s1 = a1[i];
        const auto& s2 = a2[j];
        std::vector<Rat> xs = {c, d};
        if (!(s1.constant && s2.constant)) {
          auto p1 = detail::span_portals(g, s1);
          auto p2 = detail::span_portals(g, s2);
          struct Aff {
            Rat a, b;
          };
          std::vector<Aff> routes;
          for (const auto& u : p1)
            for (const auto& v : p2)
              routes.push_back(
                  {Rat(u.a + v.a + g.vertex_distance(u.v, v.v)), Rat(u.b + v.b)});
          int e1 = detail::span_edge(s1), e2 = detail::span_edge(s2);
          if (e1 >= 0 && e1 == e2) {
            // Same edge direct branches +-(o1(x) - o2(x)).
            Rat slope1 = s1.constant ? Rat(0) : (s1.o1 - s1.o0) / (s1.x1 - s1.x0);
            Rat icep1 = s1.constant ? s1.cpoint.offset : Rat(s1.o0 - s1.x0 * slope1);
            Rat slope2 = s2.constant ? Rat(0) : (s2.o1 - s2.o0) / (s2.x1 - s2.x0);
            Rat icep2 = s2.constant ? s2.cpoint.offset : Rat(s2.o0 - s2.x0 * slope2);
            routes.push_back({Rat(icep1 - icep2), Rat(slope1 - slope2)});
            routes.push_back({Rat(icep2 - icep1), Rat(slope2 - slope1)});
          }
          for (size_t u = 0; u < routes.size(); ++u)
            for (size_t v = u + 1; v < routes.size(); ++v) {
              Rat db = routes[u].b - routes[v].b;
              if (db == 0) continue;
              Rat x = (routes[v].a - routes[u].a) / db;
              if (c < x && x < d) xs.push_back(x);
            }
        }
        for (const Rat& x : xs) {
          Rat dist = g.distance(detail::span_value(g, s1, x), detail::span_value(g, s2, x));
          if (dist > best) best = dist;
        }
      }
      if (a1[i].x1 <= a2[j].x1) ++i;
      else ++j;
    }
  }
  return best;
}

inline void PLMap::apply_patches(std::vector<Patch> patches) {
  if (patches.empty()) return;
  const MetricGraph& g = *g_;
  std::stable_sort(patches.begin(), patches.end(), [](const Patch& a, const Patch& b) {
    return std::tie(a.edge, a.lo) < std::tie(b.edge, b.lo);
  });
  for (size_t i = 0; i < patches.size(); ++i) {
    const Patch& p = patches[i];
    if (p.lo >= p.hi) throw std::invalid_argument("apply_patches: empty patch");
    if (p.lo < 0 || p.hi > g.edge_length(p.edge))
      throw std::invalid_argument("apply_patches: patch outside edge");
    if (i > 0 && patches[i - 1].edge == p.edge && patches[i - 1].hi > p.lo)
      throw std::invalid_argument("apply_patches: overlapping patches");
  }
  // Restriction of one piece to [c, d].
  auto shrink = [&](const Piece& pc, const Rat& c, const Rat& d) {
    Piece out{pc.edge, c, d, pc.action};
    if (pc.action.kind == ActionKind::kTraverse && (c != pc.lo || d != pc.hi)) {
      auto pre = detail::walk_prefix(pc.action.walk);
      Rat wl = pre.back();
      Rat sc = (c - pc.lo) * wl / (pc.hi - pc.lo);
      Rat sd = (d - pc.lo) * wl / (pc.hi - pc.lo);
      out.action = Action::traverse(sub_walk(pc.action.walk, pre, sc, sd));
    }
    return out;
  };
  std::vector<Piece> out;
  size_t pj = 0;
  for (int e = 0; e < g.num_edges(); ++e) {
    int b = edge_begin_[e], c = edge_begin_[e + 1];
    if (pj >= patches.size() || patches[pj].edge != e) {
      out.insert(out.end(), pieces_.begin() + b, pieces_.begin() + c);
      continue;
    }
    int i = b;
    auto fill_from_old = [&](const Rat& a, const Rat& bnd) {
      if (a >= bnd) return;
      while (i < c && pieces_[i].hi <= a) ++i;
      int j = i;
      while (j < c && pieces_[j].lo < bnd) {
        Rat lo = rat_max(pieces_[j].lo, a), hi = rat_min(pieces_[j].hi, bnd);
        if (lo < hi) out.push_back(shrink(pieces_[j], lo, hi));
        ++j;
      }
      if (j > i) i = j - 1;  // the last piece may straddle the next gap
    };
    Rat cursor = 0;
    for (; pj < patches.size() && patches[pj].edge == e; ++pj) {
      fill_from_old(cursor, patches[pj].lo);
      for (const Piece& rp : patches[pj].replacement) out.push_back(rp);
      cursor = patches[pj].hi;
    }
    fill_from_old(cursor, g.edge_length(e));
  }
  pieces_ = coalesce_pieces(g, std::move(out));
  index_and_validate();
}

// Squeezes f on [p, q] into [p, m] and holds the value f(q) on [m, q]. The
// image over [p, q] is unchanged.
inline Patch plateau_patch(const PLMap& f, int edge, const Rat& p, const Rat& m, const Rat& q) {
  if (!(p < m && m < q)) throw std::invalid_argument("plateau_patch: need p < m < q");
  GraphPoint qval = f.value_at_offset(edge, q);
  std::vector<Piece> repl;
  Rat scale = (m - p) / (q - p);
  int i0 = f.piece_index_at(edge, p);
  for (int i = i0; i < static_cast<int>(f.pieces().size()); ++i) {
    const Piece& pc = f.pieces()[i];
    if (pc.edge != edge || pc.lo >= q) break;
    Rat c = rat_max(pc.lo, p), d = rat_min(pc.hi, q);
    if (c >= d) continue;
    Piece cut{edge, c, d, pc.action};
    if (pc.action.kind == ActionKind::kTraverse && (c != pc.lo || d != pc.hi)) {
      auto pre = detail::walk_prefix(pc.action.walk);
      Rat wl = pre.back();
      cut.action = Action::traverse(sub_walk(pc.action.walk, pre,
                                             Rat((c - pc.lo) * wl / (pc.hi - pc.lo)),
                                             Rat((d - pc.lo) * wl / (pc.hi - pc.lo))));
    }
    cut.lo = p + (c - p) * scale;
    cut.hi = p + (d - p) * scale;
    repl.push_back(std::move(cut));
  }
  repl.push_back({edge, m, q, Action::constant(qval)});
  return {edge, p, q, std::move(repl)};
}

inline void plant_plateau(PLMap& f, int edge, const Rat& p, const Rat& m, const Rat& q) {
  f.apply_patches({plateau_patch(f, edge, p, m, q)});
}

// Exact fixed point sets: isolated points plus whole fixed segments.
struct FixedSets {
  std::vector<GraphPoint> points;
  Cell segments;
};

inline FixedSets fixed_sets(const PLMap& f) {
  const MetricGraph& g = f.graph();
  FixedSets out;
  std::vector<Seg> segs;
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    for (const auto& s : detail::affine_atlas(f, e)) {
      if (s.constant) {
        std::vector<Rat> offs;
        if (s.cpoint.at_vertex) {
          if (ed.from == s.cpoint.vertex) offs.push_back(Rat(0));
          if (ed.to == s.cpoint.vertex) offs.push_back(ed.length);
        } else if (s.cpoint.edge == e) {
          offs.push_back(s.cpoint.offset);
        }
        for (const Rat& o : offs)
          if (s.x0 <= o && o <= s.x1) out.points.push_back(s.cpoint);
        continue;
      }
      if (s.img_edge != e) continue;
      Rat slope = (s.o1 - s.o0) / (s.x1 - s.x0);
      Rat icept = s.o0 - s.x0 * slope;
      if (slope == 1) {
        if (icept == 0) segs.push_back({e, s.x0, s.x1});
        continue;
      }
      Rat x = icept / (Rat(1) - slope);
      if (s.x0 <= x && x <= s.x1) out.points.push_back(g.point(e, x));
    }
  }
  out.segments = make_cell(g, std::move(segs));
  std::sort(out.points.begin(), out.points.end(),
            [](const GraphPoint& a, const GraphPoint& b) {
              return detail::key_of(a) < detail::key_of(b);
            });
  out.points.erase(std::unique(out.points.begin(), out.points.end()), out.points.end());
  return out;
}

}  // namespace peano
