#pragma once

#include <cstdint>
#include <optional>

#include "peano/cover.hpp"
#include "peano/parallel.hpp"

namespace peano {

// Combinatorial shadow of a map on a partition: F -> H iff the exact distance
// from image(f, F) to H is below delta (delta = 0 asks for intersection).
struct TransitionGraph {
  Rat delta;
  std::vector<std::vector<int>> succ;  // sorted ascending per node

  int size() const { return static_cast<int>(succ.size()); }
};

namespace detail {

// Per-edge interval index over partition cells for overlap queries.
struct CellIndex {
  struct Entry {
    Rat lo, hi;
    int cell;
  };
  std::vector<std::vector<Entry>> by_edge;

  CellIndex(const MetricGraph& g, const Partition& p) {
    by_edge.resize(g.num_edges());
    for (int i = 0; i < p.size(); ++i)
      for (const Seg& s : p.cells[i].segs) by_edge[s.edge].push_back({s.lo, s.hi, i});
    for (auto& v : by_edge)
      std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) {
        if (a.lo != b.lo) return a.lo < b.lo;
        if (a.hi != b.hi) return a.hi < b.hi;
        return a.cell < b.cell;
      });
  }

  // Appends cells whose part on the edge meets [a, b].
  void overlapping(int edge, const Rat& a, const Rat& b, std::vector<int>& out) const {
    const auto& v = by_edge[edge];
    // Segments are sorted by lo and overlap at most in endpoints, so hi is
    // sorted as well; start from the first segment reaching a.
    size_t i = std::lower_bound(v.begin(), v.end(), a,
                                [](const Entry& e, const Rat& x) { return e.hi < x; }) -
               v.begin();
    for (; i < v.size() && v[i].lo <= b; ++i) out.push_back(v[i].cell);
  }
};

}  // namespace detail

// Exact image of every cell, computed in parallel.
inline std::vector<Cell> partition_images(const PLMap& f, const Partition& p) {
  std::vector<Cell> out(p.size());
  parallel_for(p.size(), [&](int i) { out[i] = image(f, p.cells[i]); });
  return out;
}

inline TransitionGraph transition_graph(const MetricGraph& g, const PLMap& f,
                                        const Partition& p, const Rat& delta,
                                        const std::vector<Cell>* images = nullptr) {
  if (delta < 0) throw std::invalid_argument("transition_graph: delta must be >= 0");
  std::vector<Cell> own;
  if (!images) {
    own = partition_images(f, p);
    images = &own;
  }
  detail::CellIndex index(g, p);
  TransitionGraph t;
  t.delta = delta;
  t.succ.resize(p.size());
  parallel_for(p.size(), [&](int i) {
    const Cell& img = (*images)[i];
    // The fattened image is the exact closed delta-neighborhood, so every
    // cell within delta of the image overlaps it; filter exactly afterwards.
    Cell probe = delta > 0 ? fatten(g, img, delta) : img;
    std::vector<int> cand;
    for (const Seg& s : probe.segs) index.overlapping(s.edge, s.lo, s.hi, cand);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    std::vector<int>& out = t.succ[i];
    for (int h : cand) {
      if (delta > 0 ? cell_distance(g, img, p.cells[h]) < delta
                    : cells_intersect(g, img, p.cells[h]))
        out.push_back(h);
    }
  });
  return t;
}

// Strongly connected components, Tarjan, iterative. Component ids follow pop
// order, so every edge goes to an equal or smaller id and id 0 is terminal.
struct SccResult {
  int count = 0;
  std::vector<int> comp;
};

inline SccResult scc(const std::vector<std::vector<int>>& succ) {
  int n = static_cast<int>(succ.size());
  SccResult r;
  r.comp.assign(n, -1);
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<bool> on_stack(n, false);
  struct Frame {
    int v;
    size_t next;
  };
  std::vector<Frame> frames;
  int counter = 0;
  for (int s = 0; s < n; ++s) {
    if (index[s] != -1) continue;
    frames.push_back({s, 0});
    index[s] = low[s] = counter++;
    stack.push_back(s);
    on_stack[s] = true;
    while (!frames.empty()) {
      Frame& fr = frames.back();
      int v = fr.v;
      if (fr.next < succ[v].size()) {
        int w = succ[v][fr.next++];
        if (index[w] == -1) {
          frames.push_back({w, 0});
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int id = r.count++;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          r.comp[w] = id;
        } while (w != v);
      }
      frames.pop_back();
      if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
    }
  }
  return r;
}

inline bool strongly_connected(const TransitionGraph& t) {
  return t.size() > 0 && scc(t.succ).count == 1;
}

// Shortest path between nodes by BFS (sorted successors give deterministic
// parents). Empty when unreachable; {from} when from == to.
inline std::optional<std::vector<int>> graph_path(const std::vector<std::vector<int>>& succ,
                                                  int from, int to) {
  int n = static_cast<int>(succ.size());
  std::vector<int> parent(n, -2);
  parent[from] = -1;
  std::vector<int> queue = {from};
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    int v = queue[qi];
    if (v == to) break;
    for (int w : succ[v])
      if (parent[w] == -2) {
        parent[w] = v;
        queue.push_back(w);
      }
  }
  if (parent[to] == -2) return std::nullopt;
  std::vector<int> path;
  for (int v = to; v != -1; v = parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

// Square boolean matrix in 64-bit rows for walk counting on cell graphs.
struct BitMatrix {
  int n = 0, words = 0;
  std::vector<uint64_t> bits;  // row-major

  explicit BitMatrix(int n_) : n(n_), words((n_ + 63) / 64), bits(static_cast<size_t>(n_) * words, 0) {}

  uint64_t* row(int i) { return bits.data() + static_cast<size_t>(i) * words; }
  const uint64_t* row(int i) const { return bits.data() + static_cast<size_t>(i) * words; }
  void set(int i, int j) { row(i)[j / 64] |= uint64_t(1) << (j % 64); }
  bool get(int i, int j) const { return (row(i)[j / 64] >> (j % 64)) & 1; }

  static BitMatrix from_graph(const TransitionGraph& t) {
    BitMatrix m(t.size());
    for (int i = 0; i < t.size(); ++i)
      for (int j : t.succ[i]) m.set(i, j);
    return m;
  }

  bool all_ones() const {
    if (n == 0) return false;
    uint64_t tail = (n % 64) ? ((uint64_t(1) << (n % 64)) - 1) : ~uint64_t(0);
    for (int i = 0; i < n; ++i) {
      const uint64_t* r = row(i);
      for (int w = 0; w < words; ++w) {
        uint64_t want = (w + 1 == words) ? tail : ~uint64_t(0);
        if ((r[w] & want) != want) return false;
      }
    }
    return true;
  }

  // this * other over the boolean semiring.
  BitMatrix mul(const BitMatrix& other) const {
    BitMatrix out(n);
    parallel_for(n, [&](int i) {
      uint64_t* dst = out.row(i);
      const uint64_t* src = row(i);
      for (int w = 0; w < words; ++w) {
        uint64_t m = src[w];
        while (m) {
          int k = w * 64 + __builtin_ctzll(m);
          m &= m - 1;
          const uint64_t* rk = other.row(k);
          for (int w2 = 0; w2 < words; ++w2) dst[w2] |= rk[w2];
        }
      }
    });
    return out;
  }
};

}  // namespace peano
