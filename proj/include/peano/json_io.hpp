#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "peano/cover.hpp"
#include "peano/verify.hpp"

namespace peano {

using Json = nlohmann::json;

// File-shape problem: wrong schema, malformed number, missing field.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace detail

// Exact rational from "p/q", "p", or a finite decimal like "0.25". No
// rounding anywhere: decimals become fractions over a power of ten.
inline Rat parse_rational(std::string s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  const std::string shown = s;
  bool neg = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    neg = s[0] == '-';
    s.erase(s.begin());
  }
  Rat out;
  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!detail::all_digits(num) || !detail::all_digits(den))
      throw io_error("parse_rational: malformed fraction '" + shown + "'");
    mpz_class n(num, 10), d(den, 10);
    if (d == 0) throw io_error("parse_rational: zero denominator in '" + shown + "'");
    out = Rat(mpq_class(n, d));
    out.canonicalize();
  } else if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
    if (ip.empty()) ip = "0";
    if (fp.empty()) fp = "0";
    if (!detail::all_digits(ip) || !detail::all_digits(fp))
      throw io_error("parse_rational: malformed decimal '" + shown + "'");
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, fp.size());
    mpz_class n = mpz_class(ip, 10) * scale + mpz_class(fp, 10);
    out = Rat(mpq_class(n, scale));
    out.canonicalize();
  } else {
    if (!detail::all_digits(s))
      throw io_error("parse_rational: malformed number '" + shown + "'");
    out = Rat(mpz_class(s, 10));
  }
  if (neg) out = Rat(-out);
  return out;
}

// Canonical text form: "p" for integers, "p/q" otherwise, q > 0, reduced.
inline std::string rational_string(const Rat& r) { return r.get_str(); }

inline Rat rational_field(const Json& j) {
  if (j.is_number_integer()) return Rat(static_cast<long>(j.get<std::int64_t>()));
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw io_error("expected a rational as \"p/q\" string or integer, got " + j.dump());
}

inline void require_schema(const Json& j) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != 1)
    throw io_error("unsupported or missing \"schema\" field (want 1)");
}

// ---- graphs ----------------------------------------------------------

inline Json graph_to_json(const MetricGraph& g) {
  Json vertices = Json::array();
  for (int v = 0; v < g.num_vertices(); ++v) vertices.push_back(v);
  Json edges = Json::array();
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    edges.push_back({{"id", e},
                     {"from", ed.from},
                     {"to", ed.to},
                     {"length", rational_string(ed.length)}});
  }
  return Json{{"schema", 1}, {"vertices", vertices}, {"edges", edges}};
}

inline std::shared_ptr<const MetricGraph> graph_from_json(const Json& j) {
  require_schema(j);
  const Json& vj = j.at("vertices");
  if (!vj.is_array() || vj.empty()) throw io_error("graph: \"vertices\" must be a nonempty array");
  const int n = static_cast<int>(vj.size());
  const Json& ej = j.at("edges");
  if (!ej.is_array()) throw io_error("graph: \"edges\" must be an array");
  std::vector<Edge> edges(ej.size());
  std::vector<bool> seen(ej.size(), false);
  for (const Json& e : ej) {
    const int id = e.at("id").get<int>();
    if (id < 0 || id >= static_cast<int>(edges.size()) || seen[id])
      throw io_error("graph: edge ids must enumerate 0.." + std::to_string(edges.size() - 1));
    seen[id] = true;
    Edge ed;
    ed.from = e.at("from").get<int>();
    ed.to = e.at("to").get<int>();
    ed.length = rational_field(e.at("length"));
    if (ed.from < 0 || ed.from >= n || ed.to < 0 || ed.to >= n)
      throw io_error("graph: edge " + std::to_string(id) + " has an endpoint outside vertices");
    edges[id] = std::move(ed);
  }
  return std::make_shared<const MetricGraph>(n, std::move(edges));
}

// ---- points, walks, cells --------------------------------------------

inline Json point_to_json(const GraphPoint& p) {
  if (p.at_vertex) return Json{{"vertex", p.vertex}};
  return Json{{"edge", p.edge}, {"offset", rational_string(p.offset)}};
}

inline GraphPoint point_from_json(const MetricGraph& g, const Json& j) {
  if (j.contains("vertex")) return g.vertex_point(j.at("vertex").get<int>());
  return g.point(j.at("edge").get<int>(), rational_field(j.at("offset")));
}

inline Json walk_to_json(const Walk& w) {
  Json legs = Json::array();
  for (const Leg& l : w.legs)
    legs.push_back(
        {{"edge", l.edge}, {"from", rational_string(l.lo)}, {"to", rational_string(l.hi)}});
  return legs;
}

inline Walk walk_from_json(const Json& j) {
  if (!j.is_array()) throw io_error("walk: expected an array of oriented edge intervals");
  Walk w;
  for (const Json& l : j)
    w.legs.push_back(
        {l.at("edge").get<int>(), rational_field(l.at("from")), rational_field(l.at("to"))});
  return w;
}

inline Json cell_to_json(const Cell& c) {
  Json segs = Json::array();
  for (const Seg& s : c.segs)
    segs.push_back(
        {{"edge", s.edge}, {"lo", rational_string(s.lo)}, {"hi", rational_string(s.hi)}});
  return segs;
}

inline Cell cell_from_json(const MetricGraph& g, const Json& j) {
  if (!j.is_array()) throw io_error("cell: expected an array of segments");
  std::vector<Seg> segs;
  for (const Json& s : j)
    segs.push_back(
        {s.at("edge").get<int>(), rational_field(s.at("lo")), rational_field(s.at("hi"))});
  return make_cell(g, std::move(segs));
}

// ---- maps -------------------------------------------------------------

inline Json map_to_json(const PLMap& f) {
  Json pieces = Json::array();
  for (const Piece& p : f.pieces()) {
    Json action;
    if (p.action.kind == ActionKind::kConstant)
      action = Json{{"constant", point_to_json(p.action.value)}};
    else
      action = Json{{"traverse", walk_to_json(p.action.walk)}};
    pieces.push_back({{"segment",
                       {{"edge", p.edge},
                        {"lo", rational_string(p.lo)},
                        {"hi", rational_string(p.hi)}}},
                      {"action", std::move(action)}});
  }
  return Json{{"schema", 1}, {"graph", graph_to_json(f.graph())}, {"pieces", std::move(pieces)}};
}

inline PLMap map_from_json(const Json& j) {
  require_schema(j);
  auto g = graph_from_json(j.at("graph"));
  const Json& pj = j.at("pieces");
  if (!pj.is_array() || pj.empty()) throw io_error("map: \"pieces\" must be a nonempty array");
  std::vector<Piece> pieces;
  for (const Json& e : pj) {
    const Json& seg = e.at("segment");
    const Json& act = e.at("action");
    Piece p;
    p.edge = seg.at("edge").get<int>();
    p.lo = rational_field(seg.at("lo"));
    p.hi = rational_field(seg.at("hi"));
    if (act.contains("constant"))
      p.action = Action::constant(point_from_json(*g, act.at("constant")));
    else if (act.contains("traverse"))
      p.action = Action::traverse(walk_from_json(act.at("traverse")));
    else
      throw io_error("map: action must be \"constant\" or \"traverse\"");
    pieces.push_back(std::move(p));
  }
  return PLMap(std::move(g), std::move(pieces));
}

// ---- partitions ---------------------------------------------------------

inline Json partition_to_json(const MetricGraph& g, const Partition& p) {
  Json cells = Json::array();
  for (const Cell& c : p.cells) cells.push_back(cell_to_json(c));
  return Json{{"schema", 1},
              {"graph", graph_to_json(g)},
              {"cells", std::move(cells)},
              {"parents", p.parent_of},
              {"mesh", rational_string(mesh_exact(g, p))}};
}

struct LoadedPartition {
  std::shared_ptr<const MetricGraph> graph;
  Partition part;
};

inline LoadedPartition partition_from_json(const Json& j) {
  require_schema(j);
  LoadedPartition out;
  out.graph = graph_from_json(j.at("graph"));
  const Json& cj = j.at("cells");
  if (!cj.is_array() || cj.empty())
    throw io_error("partition: \"cells\" must be a nonempty array");
  for (const Json& c : cj) out.part.cells.push_back(cell_from_json(*out.graph, c));
  if (j.contains("parents")) {
    out.part.parent_of = j.at("parents").get<std::vector<int>>();
    if (!out.part.parent_of.empty() && out.part.parent_of.size() != out.part.cells.size())
      throw io_error("partition: \"parents\" must match \"cells\" in length");
  }
  return out;
}

// ---- certificates -------------------------------------------------------

inline Json chain_to_json(const ChainCertificate& c) {
  Json pts = Json::array();
  for (const GraphPoint& p : c.points) pts.push_back(point_to_json(p));
  return Json{{"delta", rational_string(c.delta)}, {"points", std::move(pts)}};
}

inline ChainCertificate chain_from_json(const MetricGraph& g, const Json& j) {
  ChainCertificate c;
  c.delta = rational_field(j.at("delta"));
  for (const Json& p : j.at("points")) c.points.push_back(point_from_json(g, p));
  return c;
}

// ---- hashing and files ----------------------------------------------------

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

// Keys serialize in sorted order, so equal values give equal bytes.
inline std::string dump_canonical(const Json& j) { return j.dump(2) + "\n"; }

inline std::string json_hash(const Json& j) {
  char buf[28];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                static_cast<unsigned long long>(fnv1a(dump_canonical(j))));
  return buf;
}

inline void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << dump_canonical(j);
  out.flush();
  if (!out) throw io_error("write failed: " + path);
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read: " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw io_error(path + ": " + e.what());
  }
}

}  // namespace peano
