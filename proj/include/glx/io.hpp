#pragma once

// JSON and CSV plumbing. Parse errors carry a path to the offending field and
// are raised as InputError; numbers are written with 17 significant digits.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "glx/abvp.hpp"
#include "glx/coupling.hpp"
#include "glx/graph.hpp"
#include "glx/qgraph.hpp"
#include "glx/quasi_iso.hpp"
#include "glx/secular.hpp"

namespace glx::io {

using json = nlohmann::ordered_json;

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
  throw Error(Errc::InputError, where + ": " + what);
}

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(where + "." + key, "missing");
  return *it;
}

inline std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

inline double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

// a number or a [re, im] pair
inline cplx get_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  bad(where, "expected a number or [re, im]");
}

inline Mat get_matrix(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of rows");
  const Index r = static_cast<Index>(j.size());
  Index c = -1;
  for (Index i = 0; i < r; ++i) {
    if (!j[i].is_array()) bad(where + "[" + std::to_string(i) + "]", "expected a row array");
    if (c < 0) c = static_cast<Index>(j[i].size());
    if (static_cast<Index>(j[i].size()) != c) bad(where + "[" + std::to_string(i) + "]", "ragged row");
  }
  Mat m(r, std::max<Index>(c, 0));
  for (Index i = 0; i < r; ++i)
    for (Index k = 0; k < c; ++k)
      m(i, k) = get_complex(j[i][k], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  return m;
}

inline RVec get_weights(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of weights");
  RVec w(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    w(static_cast<Index>(i)) = get_number(j[i], where + "[" + std::to_string(i) + "]");
    if (!(w(static_cast<Index>(i)) > 0) || !std::isfinite(w(static_cast<Index>(i))))
      bad(where + "[" + std::to_string(i) + "]", "weight must be positive and finite");
  }
  return w;
}

// ---- parsing ---------------------------------------------------------------------

inline json parse_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    bad(where, std::string("malformed JSON (") + e.what() + ")");
  }
}

inline json read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

inline Graph parse_graph(const json& j, const std::string& where = "graph") {
  std::vector<std::string> vs;
  const json& jv = field(j, "vertices", where);
  if (!jv.is_array()) bad(where + ".vertices", "expected an array of ids");
  for (size_t i = 0; i < jv.size(); ++i) vs.push_back(get_string(jv[i], where + ".vertices[" + std::to_string(i) + "]"));
  std::vector<EdgeRec> es;
  const json& je = field(j, "edges", where);
  if (!je.is_array()) bad(where + ".edges", "expected an array");
  for (size_t i = 0; i < je.size(); ++i) {
    const std::string w = where + ".edges[" + std::to_string(i) + "]";
    es.push_back({get_string(field(je[i], "id", w), w + ".id"), get_string(field(je[i], "src", w), w + ".src"),
                  get_string(field(je[i], "dst", w), w + ".dst")});
  }
  std::vector<std::string> bd;
  if (j.contains("boundary")) {
    const json& jb = j["boundary"];
    if (!jb.is_array()) bad(where + ".boundary", "expected an array of vertex ids");
    for (size_t i = 0; i < jb.size(); ++i) bd.push_back(get_string(jb[i], where + ".boundary[" + std::to_string(i) + "]"));
  }
  Graph g(vs, es, bd);
  try {
    validate(g);
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return g;
}

inline QuantumGraph parse_qgraph(const json& j) {
  QuantumGraph qg;
  qg.graph = parse_graph(field(j, "graph", "qgraph"), "qgraph.graph");
  const Graph& g = qg.graph;
  const json& je = field(j, "edges", "qgraph");
  if (!je.is_array()) bad("qgraph.edges", "expected an array");
  std::map<std::string, size_t> pos;
  for (size_t i = 0; i < je.size(); ++i)
    pos[get_string(field(je[i], "id", "qgraph.edges[" + std::to_string(i) + "]"),
                   "qgraph.edges[" + std::to_string(i) + "].id")] = i;
  for (Index e = 0; e < g.ne(); ++e) {
    auto it = pos.find(g.edge(e).id);
    if (it == pos.end()) bad("qgraph.edges", "no metric data for edge '" + g.edge(e).id + "'");
    const json& x = je[it->second];
    const std::string w = "qgraph.edges[" + std::to_string(it->second) + "]";
    const double len = get_number(field(x, "length", w), w + ".length");
    if (!(len > 0) || !std::isfinite(len)) bad(w + ".length", "must be positive and finite");
    Index d = 1;
    if (x.contains("fibre_dim")) {
      if (!x["fibre_dim"].is_number_integer() || x["fibre_dim"].get<long>() < 1)
        bad(w + ".fibre_dim", "expected a positive integer");
      d = x["fibre_dim"].get<long>();
    }
    Mat k = Mat::Zero(d, d);
    if (x.contains("K")) {
      k = get_matrix(x["K"], w + ".K");
      if (k.rows() != d || k.cols() != d) bad(w + ".K", "shape does not match fibre_dim");
      if ((k - k.adjoint()).cwiseAbs().maxCoeff() > 1e-12) bad(w + ".K", "not Hermitian");
    }
    qg.length.push_back(len);
    qg.fibre.push_back(k);
  }
  if (j.contains("vertex_spaces")) {
    const json& vs = j["vertex_spaces"];
    if (vs.is_string()) {
      if (vs.get<std::string>() != "standard") bad("qgraph.vertex_spaces", "expected \"standard\" or an object");
    } else if (vs.is_object()) {
      qg.standard = false;
      for (Index v = 0; v < g.nv(); ++v) {
        const std::string id = g.vertex_id(v);
        qg.vertex_space.push_back(get_matrix(field(vs, id, "qgraph.vertex_spaces"), "qgraph.vertex_spaces." + id));
      }
    } else {
      bad("qgraph.vertex_spaces", "expected \"standard\" or an object");
    }
  }
  try {
    validate(qg);
  } catch (const Error& e) {
    bad("qgraph", e.what());
  }
  return qg;
}

// {"weights": [...], "boundary_weights": [...], "gamma": M, "form": M, "split": [...]?}
inline Abvp parse_abvp(const json& j, const std::string& where = "abvp") {
  const RVec w = get_weights(field(j, "weights", where), where + ".weights");
  const Mat q = get_matrix(field(j, "form", where), where + ".form");
  if (j.contains("split") && !j.contains("gamma")) {
    std::vector<Index> idx;
    const json& js = j["split"];
    if (!js.is_array()) bad(where + ".split", "expected an array of indices");
    for (size_t i = 0; i < js.size(); ++i) {
      if (!js[i].is_number_integer()) bad(where + ".split[" + std::to_string(i) + "]", "expected an integer");
      idx.push_back(js[i].get<long>());
    }
    try {
      return Abvp::from_split(WeightedSpace(w), idx, q);
    } catch (const Error& e) {
      bad(where, e.what());
    }
  }
  const RVec wg = get_weights(field(j, "boundary_weights", where), where + ".boundary_weights");
  const Mat gam = get_matrix(field(j, "gamma", where), where + ".gamma");
  try {
    return Abvp(WeightedSpace(w), WeightedSpace(wg), gam, q);
  } catch (const Error& e) {
    bad(where, e.what());
  }
}

// {"graph": G, "vertex_abvps": {v: Abvp}?, "edge_spaces": {e: [weights]}?, "traces": {v: {e: M}}?}
// Missing parts default to the star components of G.
inline VertexCouplingBlueprint parse_vertex_blueprint(const json& j) {
  const Graph g = parse_graph(field(j, "graph", "blueprint"), "blueprint.graph");
  VertexCouplingBlueprint bp = star_blueprint(g);
  if (j.contains("vertex_abvps")) {
    const json& jv = j["vertex_abvps"];
    for (Index v = 0; v < g.nv(); ++v)
      bp.vertex[v] = parse_abvp(field(jv, g.vertex_id(v), "blueprint.vertex_abvps"),
                                "blueprint.vertex_abvps." + g.vertex_id(v));
  }
  if (j.contains("edge_spaces")) {
    const json& je = j["edge_spaces"];
    for (Index e = 0; e < g.ne(); ++e)
      bp.edge_space[e] = WeightedSpace(get_weights(field(je, g.edge(e).id, "blueprint.edge_spaces"),
                                                   "blueprint.edge_spaces." + g.edge(e).id));
  }
  if (j.contains("traces")) {
    const json& jt = j["traces"];
    for (Index v = 0; v < g.nv(); ++v) {
      const std::string w = "blueprint.traces." + g.vertex_id(v);
      const json& tv = field(jt, g.vertex_id(v), "blueprint.traces");
      for (size_t k = 0; k < g.incident(v).size(); ++k) {
        const std::string eid = g.edge(g.incident(v)[k]).id;
        bp.trace[v][k] = get_matrix(field(tv, eid, w), w + "." + eid);
      }
    }
  }
  return bp;
}

// ---- writing -----------------------------------------------------------------------

inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Non-finite numbers become strings; JSON has no literal for them.
inline json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

inline json to_json(cplx z) { return json::array({jnum(z.real()), jnum(z.imag())}); }

inline json to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index k = 0; k < m.cols(); ++k) r.push_back(to_json(m(i, k)));
    rows.push_back(r);
  }
  return rows;
}

inline json to_json(const RVec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(jnum(v(i)));
  return a;
}

inline json to_json(const Graph& g) {
  json j;
  j["vertices"] = g.vertex_ids();
  json es = json::array();
  for (const auto& r : g.edge_records()) es.push_back({{"id", r.id}, {"src", r.src}, {"dst", r.dst}});
  j["edges"] = es;
  j["boundary"] = g.boundary_ids();
  return j;
}

inline json to_json(const SpectrumReport& r) {
  json j;
  j["method"] = r.method;
  json ev = json::array();
  for (size_t i = 0; i < r.eigenvalues.size(); ++i)
    ev.push_back({{"lambda", jnum(r.eigenvalues[i])}, {"multiplicity", r.multiplicity[i]}});
  j["eigenvalues"] = ev;
  json uw = json::array();
  for (const auto& w : r.unresolved) uw.push_back(json::array({jnum(w.first), jnum(w.second)}));
  j["unresolvedWindows"] = uw;
  return j;
}

inline json to_json(const ClosenessReport& r) {
  json qu = json::array();
  for (double x : r.qu) qu.push_back(jnum(x));
  return {{"forms", jnum(r.forms)},       {"bdmap_fwd", jnum(r.bd_fwd)}, {"bdmap_bwd", jnum(r.bd_bwd)},
          {"quasi_unitary", qu},          {"quasi_unitary_max", jnum(r.qu_max)},
          {"iso_fwd", jnum(r.iso_fwd)},   {"iso_bwd", jnum(r.iso_bwd)},
          {"forms_and_maps", jnum(r.forms_and_maps())}, {"total", jnum(r.total)}};
}

// Pretty JSON; doubles go through %.17g so the text round-trips exactly.
inline std::string dump(const json& j, int indent = 2, int depth = 0) {
  const std::string pad(static_cast<size_t>(indent * (depth + 1)), ' ');
  const std::string end(static_cast<size_t>(indent * depth), ' ');
  if (j.is_number_float()) return num(j.get<double>());
  if (j.is_array()) {
    if (j.empty()) return "[]";
    bool flat = true;
    for (const auto& x : j) flat = flat && !x.is_structured();
    std::string s = "[";
    for (size_t i = 0; i < j.size(); ++i) {
      s += (i ? "," : "");
      s += flat ? (i ? " " : "") : "\n" + pad;
      s += dump(j[i], indent, depth + 1);
    }
    return s + (flat ? "]" : "\n" + end + "]");
  }
  if (j.is_object()) {
    if (j.empty()) return "{}";
    std::string s = "{";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      s += (first ? "\n" : ",\n") + pad + json(it.key()).dump() + ": " + dump(it.value(), indent, depth + 1);
      first = false;
    }
    return s + "\n" + end + "}";
  }
  return j.dump();
}

// ---- CSV -------------------------------------------------------------------------

inline std::string spectrum_csv(const SpectrumReport& r) {
  std::string s = "lambda,multiplicity,method\n";
  for (size_t i = 0; i < r.eigenvalues.size(); ++i)
    s += num(r.eigenvalues[i]) + "," + std::to_string(r.multiplicity[i]) + "," + r.method + "\n";
  return s;
}

inline std::string dispersion_csv(const std::vector<DispersionRow>& rows) {
  std::string s = "lambda,branch_index,eigenvalue_of_dtn\n";
  for (const auto& r : rows) s += num(r.lambda) + "," + std::to_string(r.branch) + "," + num(r.value) + "\n";
  return s;
}

struct SweepRow {
  double epsilon, delta_measured, delta_bound;
};

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "epsilon,delta_measured,delta_bound\n";
  for (const auto& r : rows) s += num(r.epsilon) + "," + num(r.delta_measured) + "," + num(r.delta_bound) + "\n";
  return s;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) bad(path, "cannot open for writing");
  out << text;
}

}  // namespace glx::io
