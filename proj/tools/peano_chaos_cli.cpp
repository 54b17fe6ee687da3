#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "peano/construct.hpp"
#include "peano/json_io.hpp"
#include "peano/perturb.hpp"

namespace {

using namespace peano;

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kBuildError = 3;
constexpr int kVerifyFail = 4;

std::string verdict_name(Verdict v) { return v == Verdict::kPass ? "PASS" : "FAIL"; }

std::vector<Rat> parse_schedule(const std::string& text) {
  std::vector<Rat> out;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(parse_rational(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (out.empty()) throw io_error("schedule: no deltas in '" + text + "'");
  return out;
}

// "lo,hi" on edge 0, or "edge,lo,hi".
Cell parse_cell(const MetricGraph& g, const std::string& text) {
  std::vector<std::string> parts(1);
  for (char c : text) {
    if (c == ',') parts.emplace_back();
    else parts.back() += c;
  }
  if (parts.size() == 2) return make_cell(g, {{0, parse_rational(parts[0]), parse_rational(parts[1])}});
  if (parts.size() == 3) {
    int e = static_cast<int>(parse_rational(parts[0]).get_num().get_si());
    return make_cell(g, {{e, parse_rational(parts[1]), parse_rational(parts[2])}});
  }
  throw io_error("cell: want \"lo,hi\" or \"edge,lo,hi\", got '" + text + "'");
}

// "v" for a vertex, "e,off" for an edge point.
GraphPoint parse_point(const MetricGraph& g, const std::string& text) {
  auto comma = text.find(',');
  if (comma == std::string::npos)
    return g.vertex_point(static_cast<int>(parse_rational(text).get_num().get_si()));
  int e = static_cast<int>(parse_rational(text.substr(0, comma)).get_num().get_si());
  return g.point(e, parse_rational(text.substr(comma + 1)));
}

std::string out_path(const std::string& dir, const char* name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

void emit(const std::string& path, const Json& j) {
  save_json(path, j);
  std::cout << "wrote " << path << " " << json_hash(j) << "\n";
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  ~Timer() {
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stdout, "elapsed %.2fs\n", dt);
  }
};

Json clause_json(const ClauseReport& c) {
  return Json{{"c1_distance", c.c1_distance},
              {"c2_towers", c.c2_towers},
              {"c3_mesh", c.c3_mesh},
              {"c4_refines", c.c4_refines},
              {"c5_invariant", c.c5_invariant},
              {"c6_preserved", c.c6_preserved},
              {"c7_dense", c.c7_dense},
              {"dist_prev", rational_string(c.dist_prev)},
              {"dist_budget", rational_string(c.dist_budget)},
              {"mesh", rational_string(c.mesh)},
              {"mesh_budget", rational_string(c.mesh_budget)}};
}

const char* first_failed_clause(const ClauseReport& c) {
  if (!c.c1_distance) return "c1_distance";
  if (!c.c2_towers) return "c2_towers";
  if (!c.c3_mesh) return "c3_mesh";
  if (!c.c4_refines) return "c4_refines";
  if (!c.c5_invariant) return "c5_invariant";
  if (!c.c6_preserved) return "c6_preserved";
  if (!c.c7_dense) return "c7_dense";
  return nullptr;
}

Json devaney_rounds_json(const DevaneyBuild& b) {
  Json rounds = Json::array();
  for (size_t i = 0; i < b.rounds.size(); ++i) {
    const DevaneyRound& r = b.rounds[i];
    rounds.push_back({{"round", i},
                      {"cells", r.part.size()},
                      {"periodic_points", r.periodic.size()},
                      {"clauses", clause_json(r.clauses)}});
  }
  return rounds;
}

Json gadget_json(const PerturbationGadget& gd) {
  Json entries = Json::array();
  for (const GadgetEntry& e : gd.entries) {
    Json wins = Json::array();
    for (const auto& w : e.anchor_windows)
      wins.push_back({rational_string(w[0]), rational_string(w[1])});
    entries.push_back({{"cell", e.cell},
                       {"edge", e.edge},
                       {"window", {rational_string(e.window_lo), rational_string(e.window_hi)}},
                       {"x", point_to_json(e.x)},
                       {"y", point_to_json(e.y)},
                       {"value", point_to_json(e.value)},
                       {"unit", rational_string(e.unit)},
                       {"cover_window",
                        {rational_string(e.cover_window[0]), rational_string(e.cover_window[1])}},
                       {"anchor_windows", std::move(wins)},
                       {"successors", e.successors},
                       {"sweep_legs", e.sweep.legs.size()}});
  }
  return Json{{"xi", rational_string(gd.xi)}, {"entries", std::move(entries)}};
}

Json trap_json(const MetricGraph& g, const PLMap& f, const TrappingCertificate& cert) {
  return Json{{"trap", cell_to_json(cert.trap)},
              {"gap", rational_string(cert.gap)},
              {"replayed", replay_trapping(g, f, cert)}};
}

size_t chain_points(const CTLevel& lv) {
  size_t n = 0;
  for (const ChainCertificate& c : lv.to_hub) n += c.points.size();
  for (const ChainCertificate& c : lv.from_hub) n += c.points.size();
  return n;
}

Json ct_level_json(const MetricGraph& g, const PLMap& f, const CTLevel& lv) {
  Json out{{"delta", rational_string(lv.delta)},
           {"verdict", verdict_name(lv.verdict)},
           {"certified", lv.certified},
           {"cells", lv.cells},
           {"hub", lv.hub}};
  if (lv.verdict == Verdict::kPass && lv.certified) {
    if (chain_points(lv) <= 20000) {
      Json to = Json::array(), from = Json::array();
      for (const ChainCertificate& c : lv.to_hub) to.push_back(chain_to_json(c));
      for (const ChainCertificate& c : lv.from_hub) from.push_back(chain_to_json(c));
      out["to_hub"] = std::move(to);
      out["from_hub"] = std::move(from);
      out["certificates_embedded"] = true;
    } else {
      out["certificates_embedded"] = false;
    }
  }
  if (lv.verdict == Verdict::kFail) {
    out["cut_from"] = lv.cut_from;
    out["cut_to"] = lv.cut_to;
    out["cut_from_point"] = point_to_json(lv.cut_from_point);
    out["cut_to_point"] = point_to_json(lv.cut_to_point);
  }
  if (lv.trap) out["trap"] = trap_json(g, f, *lv.trap);
  return out;
}

struct LoadedMap {
  PLMap map;
  std::string hash;
};

LoadedMap load_map(const std::string& path) {
  Json j = load_json(path);
  return {map_from_json(j), json_hash(j)};
}

// ---- partition -------------------------------------------------------

int cmd_partition(const std::string& space, const std::string& eps_str, const std::string& dir) {
  Json gj = load_json(space);
  auto g = graph_from_json(gj);
  Rat eps = parse_rational(eps_str);
  if (eps <= 0) throw io_error("eps must be positive");
  Partition p = slice_partition(*g, eps);
  Json out = partition_to_json(*g, p);
  std::cout << "partition: " << p.size() << " cells, mesh "
            << out.at("mesh").get<std::string>() << "\n";
  emit(out_path(dir, "partition.json"), out);
  return kOk;
}

// ---- synthesize -------------------------------------------------------

int cmd_synth_devaney(const std::string& space, const std::string& eps_str, int depth,
                      std::uint64_t seed, const std::string& eta_str, const std::string& dir) {
  Json gj = load_json(space);
  auto g = graph_from_json(gj);
  Rat eps = parse_rational(eps_str), eta = parse_rational(eta_str);
  DevaneyBuild b = exact_devaney(g, eps, depth, eta);
  Json mj = map_to_json(b.final_map());
  Json manifest{{"schema", 1},
                {"command", "synthesize exact-devaney"},
                {"inputs", {{"space", json_hash(gj)}}},
                {"params",
                 {{"eps", rational_string(eps)},
                  {"depth", depth},
                  {"eta", rational_string(eta)},
                  {"seed", seed}}},
                {"n0", b.n0},
                {"rounds", devaney_rounds_json(b)},
                {"output", {{"file", "map.json"}, {"hash", json_hash(mj)}}},
                {"verdict", b.all_pass() ? "PASS" : "FAIL"}};
  emit(out_path(dir, "map.json"), mj);
  emit(out_path(dir, "manifest.json"), manifest);
  for (size_t i = 0; i < b.rounds.size(); ++i)
    std::cout << "round " << i << ": "
              << (b.rounds[i].clauses.all() ? "PASS" : first_failed_clause(b.rounds[i].clauses))
              << " (cells " << b.rounds[i].part.size() << ", periodic "
              << b.rounds[i].periodic.size() << ")\n";
  if (!b.all_pass()) {
    for (const DevaneyRound& r : b.rounds)
      if (!r.clauses.all()) {
        std::cerr << "construction failed: clause " << first_failed_clause(r.clauses) << "\n";
        return kBuildError;
      }
  }
  return kOk;
}

int cmd_synth_leo(const std::string& map_file, const std::string& eps_str, int depth,
                  std::uint64_t seed, int horizon, const std::string& dir) {
  LoadedMap in = load_map(map_file);
  const MetricGraph& g = in.map.graph();
  Rat eps = parse_rational(eps_str);
  CTReport pre = chain_transitive(g, in.map, {rat(1, 4)});
  if (pre.verdict != Verdict::kPass) {
    std::cerr << "construction failed: precondition chain-transitivity does not hold "
                 "(delta 1/4, cells "
              << pre.levels.front().cells << ")\n";
    return kBuildError;
  }
  LeoBuild b = leo_from_ct(in.map, eps, depth, horizon);
  Json mj = map_to_json(b.build.final_map());
  Json manifest{{"schema", 1},
                {"command", "synthesize leo-from-ct"},
                {"inputs", {{"map", in.hash}}},
                {"params",
                 {{"eps", rational_string(eps)},
                  {"depth", depth},
                  {"horizon", horizon},
                  {"seed", seed}}},
                {"n0", b.n0},
                {"delta", rational_string(b.delta)},
                {"total_distance", rational_string(b.total_distance)},
                {"rounds", devaney_rounds_json(b.build)},
                {"output", {{"file", "map.json"}, {"hash", json_hash(mj)}}},
                {"verdict", b.build.all_pass() ? "PASS" : "FAIL"}};
  emit(out_path(dir, "map.json"), mj);
  emit(out_path(dir, "manifest.json"), manifest);
  std::cout << "n0 " << b.n0 << ", distance " << rational_string(b.total_distance) << "\n";
  return b.build.all_pass() ? kOk : kBuildError;
}

int cmd_synth_surjective(const std::string& space, const std::string& eta_str,
                         const std::string& grain_str, const std::string& y0_str,
                         std::uint64_t seed, const std::string& dir) {
  Json gj = load_json(space);
  auto g = graph_from_json(gj);
  Rat eta = parse_rational(eta_str), grain = parse_rational(grain_str);
  GraphPoint y0 = y0_str.empty() ? g->vertex_point(0) : parse_point(*g, y0_str);
  PLMap f = surjective_lc(g, Cell{}, {}, y0, eta, grain);
  bool surj = is_surjective(f);
  Rat lcf = lc_fraction(f);
  bool lc_ok = lcf >= Rat(1 - eta);
  Json mj = map_to_json(f);
  Json manifest{{"schema", 1},
                {"command", "synthesize surjective-lc"},
                {"inputs", {{"space", json_hash(gj)}}},
                {"params",
                 {{"eta", rational_string(eta)},
                  {"grain", rational_string(grain)},
                  {"y0", point_to_json(y0)},
                  {"seed", seed}}},
                {"clauses",
                 {{"surjective", surj}, {"lc_fraction", rational_string(lcf)}, {"lc_ok", lc_ok}}},
                {"output", {{"file", "map.json"}, {"hash", json_hash(mj)}}},
                {"verdict", surj && lc_ok ? "PASS" : "FAIL"}};
  emit(out_path(dir, "map.json"), mj);
  emit(out_path(dir, "manifest.json"), manifest);
  std::cout << "surjective " << (surj ? "yes" : "no") << ", lc_fraction " << rational_string(lcf)
            << "\n";
  if (!(surj && lc_ok)) {
    std::cerr << "construction failed: clause " << (surj ? "lc_ok" : "surjective") << "\n";
    return kBuildError;
  }
  return kOk;
}

// ---- perturb ----------------------------------------------------------

int cmd_perturb_mixing(const std::string& map_file, const std::string& eps_str, int n,
                       std::uint64_t seed, const std::string& dir) {
  LoadedMap in = load_map(map_file);
  const MetricGraph& g = in.map.graph();
  Rat eps = parse_rational(eps_str);
  if (eps <= 0) throw io_error("eps must be positive");
  Rat bound = rat_min(Rat(eps / 4), modulus(in.map, Rat(eps / 4)));
  Rat target = Rat(bound * 3 / 4);
  for (int i = 1; i < n; ++i) target = Rat(target / 2);
  Partition part = aligned_partition(g, in.map, target);
  MixingBuild b = mixing_perturbation(in.map, part, eps);
  Rat dist = sup_distance(in.map, b.map);
  Json mj = map_to_json(b.map);
  Json manifest{{"schema", 1},
                {"command", "perturb mixing"},
                {"inputs", {{"map", in.hash}}},
                {"params", {{"eps", rational_string(eps)}, {"n", n}, {"seed", seed}}},
                {"xi", rational_string(b.xi)},
                {"cells", part.size()},
                {"sup_distance", rational_string(dist)},
                {"gadget", gadget_json(b.gadget)},
                {"output", {{"file", "map.json"}, {"hash", json_hash(mj)}}},
                {"verdict", "PASS"}};
  emit(out_path(dir, "map.json"), mj);
  emit(out_path(dir, "manifest.json"), manifest);
  std::cout << "xi " << rational_string(b.xi) << ", cells " << part.size() << ", distance "
            << rational_string(dist) << "\n";
  return kOk;
}

int cmd_perturb_shadowing(const std::string& map_file, const std::string& eps_str,
                          const std::string& nu_str, std::uint64_t seed, const std::string& dir) {
  LoadedMap in = load_map(map_file);
  Rat eps = parse_rational(eps_str), nu = parse_rational(nu_str);
  ShadowingBuild b = shadowing_perturbation(in.map, eps, nu);
  Rat dist = sup_distance(in.map, b.map);
  Json mj = map_to_json(b.map);
  Json manifest{{"schema", 1},
                {"command", "perturb shadowing"},
                {"inputs", {{"map", in.hash}}},
                {"params",
                 {{"eps", rational_string(eps)}, {"nu", rational_string(nu)}, {"seed", seed}}},
                {"xi", rational_string(b.xi)},
                {"delta", rational_string(b.delta)},
                {"lambda", rational_string(b.cover.lambda)},
                {"members", b.cover.members.size()},
                {"sup_distance", rational_string(dist)},
                {"gadget", gadget_json(b.gadget)},
                {"output", {{"file", "map.json"}, {"hash", json_hash(mj)}}},
                {"verdict", "PASS"}};
  emit(out_path(dir, "map.json"), mj);
  emit(out_path(dir, "manifest.json"), manifest);
  std::cout << "xi " << rational_string(b.xi) << ", delta " << rational_string(b.delta)
            << ", members " << b.cover.members.size() << "\n";
  return kOk;
}

int cmd_perturb_breakct(const std::string& map_file, const std::string& eps_str,
                        std::uint64_t seed, const std::string& dir) {
  LoadedMap in = load_map(map_file);
  const MetricGraph& g = in.map.graph();
  Rat eps = parse_rational(eps_str);
  BreakCTResult r = break_chain_transitivity(in.map, eps);
  Rat dist = sup_distance(in.map, r.map);
  Json loop = Json::array();
  for (const GraphPoint& p : r.loop) loop.push_back(point_to_json(p));
  Json mj = map_to_json(r.map);
  Json manifest{{"schema", 1},
                {"command", "perturb break-ct"},
                {"inputs", {{"map", in.hash}}},
                {"params", {{"eps", rational_string(eps)}, {"seed", seed}}},
                {"suggested_delta", rational_string(r.suggested_delta)},
                {"radius", rational_string(r.radius)},
                {"trap", trap_json(g, r.map, r.cert)},
                {"loop", std::move(loop)},
                {"sup_distance", rational_string(dist)},
                {"output", {{"file", "map.json"}, {"hash", json_hash(mj)}}},
                {"verdict", "PASS"}};
  emit(out_path(dir, "map.json"), mj);
  emit(out_path(dir, "manifest.json"), manifest);
  std::cout << "trap gap " << rational_string(r.cert.gap) << ", fails at delta "
            << rational_string(r.suggested_delta) << "\n";
  return kOk;
}

// ---- verify -----------------------------------------------------------

Json check_ct(const MetricGraph& g, const PLMap& f, const std::vector<Rat>& schedule,
              bool* pass) {
  CTReport r = chain_transitive(g, f, schedule);
  Json levels = Json::array();
  for (const CTLevel& lv : r.levels) levels.push_back(ct_level_json(g, f, lv));
  Json sched = Json::array();
  for (const Rat& d : schedule) sched.push_back(rational_string(d));
  *pass = r.verdict == Verdict::kPass;
  std::cout << "ct: " << verdict_name(r.verdict) << " (" << r.levels.size() << " deltas)\n";
  return Json{{"name", "ct"},
              {"params", {{"schedule", std::move(sched)}}},
              {"verdict", verdict_name(r.verdict)},
              {"levels", std::move(levels)}};
}

Json check_mixing(const MetricGraph& g, const PLMap& f, const Rat& eps, int horizon_flag,
                  bool* pass) {
  Partition part = slice_partition(g, eps);
  Json out{{"name", "mixing"},
           {"params", {{"eps", rational_string(eps)}, {"cells", part.size()}}}};
  int K = horizon_flag;
  if (K <= 0) {
    auto mix = chain_mixing_length(g, f, eps, 64);
    if (!mix.n0) {
      out["verdict"] = "FAIL";
      out["reason"] = "no chain mixing length within horizon 64";
      *pass = false;
      std::cout << "mixing: FAIL (no n0 within 64)\n";
      return out;
    }
    K = 4 * *mix.n0;
    out["n0"] = *mix.n0;
  }
  GnReport gn = gn_membership(g, f, part, K);
  out["params"]["horizon"] = K;
  out["verdict"] = verdict_name(gn.verdict);
  if (gn.verdict == Verdict::kPass) {
    int worst = 0;
    for (const auto& row : gn.k0)
      for (int k : row) worst = std::max(worst, k);
    out["max_k0"] = worst;
    if (part.size() <= 64) out["k0"] = gn.k0;
  } else {
    out["fail_from"] = gn.fail_from;
    out["fail_to"] = gn.fail_to;
    out["fail_gap"] = rational_string(gn.fail_gap);
  }
  *pass = gn.verdict == Verdict::kPass;
  std::cout << "mixing: " << verdict_name(gn.verdict) << " (horizon " << K << ", cells "
            << part.size() << ")\n";
  return out;
}

Json check_leo(const MetricGraph& g, const PLMap& f, const Cell& cell, int kmax, bool* pass) {
  auto k = leo_order(g, f, cell, kmax);
  Json out{{"name", "leo"},
           {"params", {{"cell", cell_to_json(cell)}, {"kmax", kmax}}},
           {"verdict", k ? "PASS" : "FAIL"}};
  if (k) out["k"] = *k;
  *pass = k.has_value();
  if (k) std::cout << "leo: PASS k=" << *k << "\n";
  else std::cout << "leo: FAIL (no k within " << kmax << ")\n";
  return out;
}

Json check_periodic(const MetricGraph& g, const PLMap& f, int kmax, int sample, bool* pass) {
  PeriodicAtlas atlas = periodic_atlas(g, f, kmax, sample);
  Json entries = Json::array();
  bool any = false;
  for (const PeriodicEntry& e : atlas.entries) {
    Json pts = Json::array();
    for (const GraphPoint& p : e.points) pts.push_back(point_to_json(p));
    any = any || !e.points.empty() || !e.segments.empty();
    entries.push_back({{"period", e.period},
                       {"points", std::move(pts)},
                       {"segments", cell_to_json(e.segments)}});
  }
  *pass = any;
  std::cout << "periodic: " << (any ? "PASS" : "FAIL") << " (density radius "
            << rational_string(atlas.density_radius) << ")\n";
  return Json{{"name", "periodic"},
              {"params", {{"kmax", kmax}, {"sample", sample}}},
              {"entries", std::move(entries)},
              {"density_radius", rational_string(atlas.density_radius)},
              {"verdict", any ? "PASS" : "FAIL"}};
}

Json check_shadowing(const MetricGraph& g, const PLMap& f, const Rat& eps, const Rat& delta,
                     int chains, int length, std::uint64_t seed, const std::string& chain_file,
                     bool* pass) {
  std::vector<ChainCertificate> certs;
  if (!chain_file.empty()) {
    certs.push_back(chain_from_json(g, load_json(chain_file)));
  } else {
    for (int i = 0; i < chains; ++i)
      certs.push_back(sample_delta_chain(f, delta, length, seed + static_cast<std::uint64_t>(i)));
  }
  Json results = Json::array();
  bool all = true;
  for (const ChainCertificate& c : certs) {
    auto w = shadowing_witness(g, f, c, eps);
    Json r{{"chain", chain_to_json(c)}};
    if (w) {
      r["witness"] = point_to_json(w->x);
      r["replayed"] = w->replayed;
      all = all && w->replayed;
    } else {
      r["witness"] = nullptr;
      all = false;
    }
    results.push_back(std::move(r));
  }
  *pass = all;
  std::cout << "shadowing: " << (all ? "PASS" : "FAIL") << " (" << certs.size() << " chains)\n";
  return Json{{"name", "shadowing"},
              {"params",
               {{"eps", rational_string(eps)},
                {"delta", rational_string(delta)},
                {"chains", certs.size()},
                {"length", length},
                {"seed", seed}}},
              {"results", std::move(results)},
              {"verdict", all ? "PASS" : "FAIL"}};
}

int emit_report(const std::string& dir, const std::string& map_hash, Json checks, bool pass) {
  Json report{{"schema", 1},
              {"map", map_hash},
              {"checks", std::move(checks)},
              {"verdict", pass ? "PASS" : "FAIL"}};
  emit(out_path(dir, "report.json"), report);
  return pass ? kOk : kVerifyFail;
}

int cmd_verify_replay(const std::string& map_file, const std::string& report_file) {
  LoadedMap in = load_map(map_file);
  const MetricGraph& g = in.map.graph();
  Json report = load_json(report_file);
  require_schema(report);
  int replayed = 0, failed = 0;
  auto run_chain = [&](const Json& cj) {
    ChainCertificate c = chain_from_json(g, cj);
    (replay_chain(g, in.map, c) ? replayed : failed)++;
  };
  for (const Json& check : report.at("checks")) {
    const std::string name = check.at("name").get<std::string>();
    if (name == "ct") {
      for (const Json& lv : check.at("levels")) {
        if (lv.contains("to_hub"))
          for (const Json& cj : lv.at("to_hub")) run_chain(cj);
        if (lv.contains("from_hub"))
          for (const Json& cj : lv.at("from_hub")) run_chain(cj);
        if (lv.contains("trap")) {
          TrappingCertificate t{cell_from_json(g, lv.at("trap").at("trap")),
                                parse_rational(lv.at("trap").at("gap").get<std::string>())};
          (replay_trapping(g, in.map, t) ? replayed : failed)++;
        }
      }
    } else if (name == "shadowing") {
      Rat eps = parse_rational(check.at("params").at("eps").get<std::string>());
      for (const Json& r : check.at("results")) {
        ChainCertificate c = chain_from_json(g, r.at("chain"));
        if (!replay_chain(g, in.map, c)) {
          failed++;
          continue;
        }
        if (r.at("witness").is_null()) {
          failed++;
          continue;
        }
        GraphPoint z = point_from_json(g, r.at("witness"));
        bool ok = true;
        for (const GraphPoint& p : c.points) {
          if (g.distance(z, p) > eps) ok = false;
          z = in.map.evaluate(z);
        }
        (ok ? replayed : failed)++;
      }
    }
  }
  std::cout << "replay: " << replayed << " certificates ok, " << failed << " failed\n";
  return failed == 0 ? kOk : kVerifyFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact chaos constructions and verifiers on metric graphs"};
  app.require_subcommand(1);

  std::string space, map_file, out_dir = ".", eps = "1/4", eta = "1/8", grain = "0", nu;
  std::string schedule = "1/4,1/16,1/64", cell_str, y0_str, delta_str, chain_file, report_file;
  int depth = 0, horizon = 0, leo_horizon = 64, kmax = 16, per_kmax = 4, periodic_kmax = 3;
  int sample = 64, n_index = 1, chains = 20, length = 25;
  std::uint64_t seed = 1;

  auto* part = app.add_subcommand("partition", "slice a space into cells of bounded mesh");
  part->add_option("--space", space, "graph json file")->required();
  part->add_option("--eps", eps, "mesh bound (fraction)")->required();
  part->add_option("--out-dir", out_dir, "output directory");

  auto* syn = app.add_subcommand("synthesize", "build maps with verified properties");
  syn->require_subcommand(1);
  auto* syn_dev = syn->add_subcommand("exact-devaney", "chaotic map near a fresh surjection");
  syn_dev->add_option("--space", space, "graph json file")->required();
  syn_dev->add_option("--eps", eps, "distance budget (fraction)")->required();
  syn_dev->add_option("--depth", depth, "refinement rounds")->required();
  syn_dev->add_option("--seed", seed, "recorded for reproducibility")->required();
  syn_dev->add_option("--eta", eta, "constant-piece density defect");
  syn_dev->add_option("--out-dir", out_dir, "output directory");
  auto* syn_leo = syn->add_subcommand("leo-from-ct", "expansive upgrade of a chain transitive map");
  syn_leo->add_option("--map", map_file, "map json file")->required();
  syn_leo->add_option("--eps", eps, "distance budget (fraction)")->required();
  syn_leo->add_option("--depth", depth, "refinement rounds")->required();
  syn_leo->add_option("--seed", seed, "recorded for reproducibility")->required();
  syn_leo->add_option("--horizon", leo_horizon, "chain mixing horizon");
  syn_leo->add_option("--out-dir", out_dir, "output directory");
  auto* syn_surj = syn->add_subcommand("surjective-lc", "surjection with wide constant pieces");
  syn_surj->add_option("--space", space, "graph json file")->required();
  syn_surj->add_option("--seed", seed, "recorded for reproducibility")->required();
  syn_surj->add_option("--eta", eta, "constant-piece density defect");
  syn_surj->add_option("--grain", grain, "plateau grain (fraction)");
  syn_surj->add_option("--y0", y0_str, "base value: vertex \"v\" or point \"e,off\"");
  syn_surj->add_option("--out-dir", out_dir, "output directory");

  auto* pert = app.add_subcommand("perturb", "small perturbations with certified effects");
  pert->require_subcommand(1);
  auto* pert_mix = pert->add_subcommand("mixing", "open mixing window around the map");
  pert_mix->add_option("--map", map_file, "map json file")->required();
  pert_mix->add_option("--eps", eps, "perturbation budget (fraction)")->required();
  pert_mix->add_option("--seed", seed, "recorded for reproducibility")->required();
  pert_mix->add_option("--n", n_index, "partition refinement index");
  pert_mix->add_option("--out-dir", out_dir, "output directory");
  auto* pert_shadow = pert->add_subcommand("shadowing", "shadowing within eps, tracking within nu");
  pert_shadow->add_option("--map", map_file, "map json file")->required();
  pert_shadow->add_option("--eps", eps, "perturbation budget (fraction)")->required();
  pert_shadow->add_option("--nu", nu, "shadowing radius (fraction)")->required();
  pert_shadow->add_option("--seed", seed, "recorded for reproducibility")->required();
  pert_shadow->add_option("--out-dir", out_dir, "output directory");
  auto* pert_break = pert->add_subcommand("break-ct", "nearby map that is not chain transitive");
  pert_break->add_option("--map", map_file, "map json file")->required();
  pert_break->add_option("--eps", eps, "perturbation budget (fraction)")->required();
  pert_break->add_option("--seed", seed, "recorded for reproducibility")->required();
  pert_break->add_option("--out-dir", out_dir, "output directory");

  auto* ver = app.add_subcommand("verify", "decision procedures with replayable certificates");
  ver->require_subcommand(1);
  auto* ver_ct = ver->add_subcommand("ct", "chain transitivity over a delta schedule");
  ver_ct->add_option("--map", map_file, "map json file")->required();
  ver_ct->add_option("--schedule", schedule, "comma separated decreasing deltas");
  ver_ct->add_option("--out-dir", out_dir, "output directory");
  auto* ver_mix = ver->add_subcommand("mixing", "finite horizon mixing windows");
  ver_mix->add_option("--map", map_file, "map json file")->required();
  ver_mix->add_option("--eps", eps, "window resolution (fraction)");
  ver_mix->add_option("--horizon", horizon, "override horizon (default 4*n0)");
  ver_mix->add_option("--out-dir", out_dir, "output directory");
  auto* ver_leo = ver->add_subcommand("leo", "least k with the k-th image covering the space");
  ver_leo->add_option("--map", map_file, "map json file")->required();
  ver_leo->add_option("--cell", cell_str, "\"lo,hi\" on edge 0 or \"edge,lo,hi\"")->required();
  ver_leo->add_option("--kmax", kmax, "iteration bound");
  ver_leo->add_option("--out-dir", out_dir, "output directory");
  auto* ver_shadow = ver->add_subcommand("shadowing", "witnesses for sampled delta chains");
  ver_shadow->add_option("--map", map_file, "map json file")->required();
  ver_shadow->add_option("--eps", eps, "shadowing radius (fraction)")->required();
  ver_shadow->add_option("--delta", delta_str, "chain step slack (fraction)");
  ver_shadow->add_option("--chains", chains, "number of sampled chains");
  ver_shadow->add_option("--length", length, "chain length");
  ver_shadow->add_option("--seed", seed, "chain sampling seed");
  ver_shadow->add_option("--chain", chain_file, "verify one chain certificate file instead");
  ver_shadow->add_option("--out-dir", out_dir, "output directory");
  auto* ver_per = ver->add_subcommand("periodic", "periodic points by exact fixed point solving");
  ver_per->add_option("--map", map_file, "map json file")->required();
  ver_per->add_option("--kmax", per_kmax, "largest period (points grow fast with it)");
  ver_per->add_option("--sample", sample, "density grid size");
  ver_per->add_option("--out-dir", out_dir, "output directory");
  auto* ver_all = ver->add_subcommand("all", "ct, mixing, leo, periodic (and shadowing with --delta)");
  ver_all->add_option("--map", map_file, "map json file")->required();
  ver_all->add_option("--schedule", schedule, "ct schedule");
  ver_all->add_option("--eps", eps, "resolution for mixing, leo cells, shadowing");
  ver_all->add_option("--kmax", kmax, "leo iteration bound");
  ver_all->add_option("--periodic-kmax", periodic_kmax, "largest period");
  ver_all->add_option("--delta", delta_str, "enable shadowing at this chain slack");
  ver_all->add_option("--seed", seed, "chain sampling seed");
  ver_all->add_option("--out-dir", out_dir, "output directory");
  auto* ver_replay = ver->add_subcommand("replay", "replay certificates from a report");
  ver_replay->add_option("--map", map_file, "map json file")->required();
  ver_replay->add_option("--report", report_file, "report json file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    Timer timer;
    if (part->parsed()) return cmd_partition(space, eps, out_dir);
    if (syn_dev->parsed()) return cmd_synth_devaney(space, eps, depth, seed, eta, out_dir);
    if (syn_leo->parsed()) return cmd_synth_leo(map_file, eps, depth, seed, leo_horizon, out_dir);
    if (syn_surj->parsed())
      return cmd_synth_surjective(space, eta, grain, y0_str, seed, out_dir);
    if (pert_mix->parsed()) return cmd_perturb_mixing(map_file, eps, n_index, seed, out_dir);
    if (pert_shadow->parsed()) return cmd_perturb_shadowing(map_file, eps, nu, seed, out_dir);
    if (pert_break->parsed()) return cmd_perturb_breakct(map_file, eps, seed, out_dir);
    if (ver_replay->parsed()) return cmd_verify_replay(map_file, report_file);

    LoadedMap in = load_map(map_file);
    const MetricGraph& g = in.map.graph();
    Json checks = Json::array();
    bool pass = true, ok = true;
    if (ver_ct->parsed()) {
      checks.push_back(check_ct(g, in.map, parse_schedule(schedule), &ok));
      pass = ok;
    } else if (ver_mix->parsed()) {
      checks.push_back(check_mixing(g, in.map, parse_rational(eps), horizon, &ok));
      pass = ok;
    } else if (ver_leo->parsed()) {
      checks.push_back(check_leo(g, in.map, parse_cell(g, cell_str), kmax, &ok));
      pass = ok;
    } else if (ver_shadow->parsed()) {
      if (delta_str.empty() && chain_file.empty())
        throw io_error("verify shadowing: need --delta or --chain");
      Rat d = delta_str.empty() ? Rat(parse_rational(eps) / 4) : parse_rational(delta_str);
      checks.push_back(check_shadowing(g, in.map, parse_rational(eps), d, chains, length, seed,
                                       chain_file, &ok));
      pass = ok;
    } else if (ver_per->parsed()) {
      checks.push_back(check_periodic(g, in.map, per_kmax, sample, &ok));
      pass = ok;
    } else if (ver_all->parsed()) {
      Rat e = parse_rational(eps);
      checks.push_back(check_ct(g, in.map, parse_schedule(schedule), &ok));
      pass = ok;
      checks.push_back(check_mixing(g, in.map, e, 0, &ok));
      pass = pass && ok;
      Partition cells = aligned_partition(g, in.map, e);
      bool leo_all = true;
      auto orders = leo_orders(g, in.map, cells, kmax);
      for (const auto& o : orders) leo_all = leo_all && o.has_value();
      int worst = 0;
      for (const auto& o : orders)
        if (o) worst = std::max(worst, *o);
      checks.push_back(Json{{"name", "leo"},
                            {"params", {{"eps", rational_string(e)}, {"kmax", kmax}}},
                            {"cells", cells.size()},
                            {"max_k", worst},
                            {"verdict", leo_all ? "PASS" : "FAIL"}});
      std::cout << "leo: " << (leo_all ? "PASS" : "FAIL") << " (cells " << cells.size()
                << ", max k " << worst << ")\n";
      pass = pass && leo_all;
      checks.push_back(check_periodic(g, in.map, periodic_kmax, sample, &ok));
      pass = pass && ok;
      if (!delta_str.empty()) {
        checks.push_back(check_shadowing(g, in.map, e, parse_rational(delta_str), chains, length,
                                         seed, "", &ok));
        pass = pass && ok;
      }
    }
    return emit_report(out_dir, in.hash, std::move(checks), pass);
  } catch (const construction_error& e) {
    std::cerr << "construction failed: " << e.what() << "\n";
    return kBuildError;
  } catch (const io_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const Json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}
