#pragma once

// Finite oriented multigraphs without loops. Edge e runs from src = ∂₋e to
// dst = ∂₊e; E_v lists the edges at v in edge order.

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "glx/hilbert.hpp"
#include "glx/rng.hpp"

namespace glx {

struct EdgeRec {
  std::string id;
  std::string src;
  std::string dst;
};

class Graph {
 public:
  struct Edge {
    std::string id;
    Index src = -1;  // -1: endpoint id not among the vertices
    Index dst = -1;
  };

  Graph() = default;
  Graph(std::vector<std::string> vertices, const std::vector<EdgeRec>& edges,
        std::vector<std::string> boundary = {})
      : vid_(std::move(vertices)), bid_(std::move(boundary)) {
    for (Index i = 0; i < nv(); ++i) vidx_.emplace(vid_[i], i);
    for (const auto& r : edges) {
      Edge e{r.id, lookup(r.src), lookup(r.dst)};
      edges_.push_back(e);
    }
    inc_.assign(vid_.size(), {});
    for (Index k = 0; k < ne(); ++k) {
      const Edge& e = edges_[k];
      if (e.src < 0 || e.dst < 0 || e.src == e.dst) continue;
      inc_[e.src].push_back(k);
      inc_[e.dst].push_back(k);
    }
  }

  Index nv() const { return static_cast<Index>(vid_.size()); }
  Index ne() const { return static_cast<Index>(edges_.size()); }
  const std::vector<std::string>& vertex_ids() const { return vid_; }
  const std::string& vertex_id(Index v) const { return vid_[v]; }
  const Edge& edge(Index k) const { return edges_[k]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Index>& incident(Index v) const { return inc_[v]; }
  Index deg(Index v) const { return static_cast<Index>(inc_[v].size()); }
  // the endpoint of e that is not v
  Index other(Index e, Index v) const { return edges_[e].src == v ? edges_[e].dst : edges_[e].src; }
  bool is_source(Index e, Index v) const { return edges_[e].src == v; }

  std::optional<Index> find_vertex(const std::string& id) const {
    auto it = vidx_.find(id);
    if (it == vidx_.end()) return std::nullopt;
    return it->second;
  }
  Index vertex_index(const std::string& id) const {
    auto v = find_vertex(id);
    if (!v) throw Error(Errc::InvalidGraph, "unknown vertex id '" + id + "'");
    return *v;
  }
  const std::vector<std::string>& boundary_ids() const { return bid_; }
  std::vector<Index> boundary() const {
    std::vector<Index> b;
    for (const auto& id : bid_) b.push_back(vertex_index(id));
    return b;
  }
  Graph with_boundary(std::vector<std::string> b) const {
    Graph g = *this;
    g.bid_ = std::move(b);
    return g;
  }
  std::vector<EdgeRec> edge_records() const {
    std::vector<EdgeRec> r;
    for (const auto& e : edges_)
      r.push_back({e.id, e.src >= 0 ? vid_[e.src] : std::string(), e.dst >= 0 ? vid_[e.dst] : std::string()});
    return r;
  }

 private:
  Index lookup(const std::string& id) const {
    auto it = vidx_.find(id);
    return it == vidx_.end() ? -1 : it->second;
  }

  std::vector<std::string> vid_;
  std::map<std::string, Index> vidx_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Index>> inc_;
  std::vector<std::string> bid_;
};

struct ValidationReport {
  Index sum_deg = 0;
  Index num_edges = 0;
  double reorder_residual = 0.0;  // max over the random assignments
};

// Checks ids, loops, dangling incidences and the reordering identity
// sum_v sum_{e in E_v} a_e(v) = sum_e sum_{v = ∂±e} a_e(v).
inline ValidationReport validate(const Graph& g) {
  std::vector<std::string> bad;
  std::set<std::string> seen;
  for (const auto& id : g.vertex_ids())
    if (!seen.insert(id).second) bad.push_back("duplicate vertex '" + id + "'");
  std::set<std::string> eseen;
  for (const auto& e : g.edges()) {
    if (!eseen.insert(e.id).second) bad.push_back("duplicate edge '" + e.id + "'");
    if (e.src < 0 || e.dst < 0)
      bad.push_back("edge '" + e.id + "' (dangling endpoint)");
    else if (e.src == e.dst)
      bad.push_back("edge '" + e.id + "' (loop)");
  }
  for (const auto& b : g.boundary_ids())
    if (!g.find_vertex(b)) bad.push_back("boundary vertex '" + b + "' unknown");
  if (!bad.empty()) {
    std::ostringstream os;
    for (size_t i = 0; i < bad.size(); ++i) os << (i ? ", " : "") << bad[i];
    throw Error(Errc::InvalidGraph, os.str());
  }
  ValidationReport r;
  for (Index v = 0; v < g.nv(); ++v) r.sum_deg += g.deg(v);
  r.num_edges = g.ne();
  for (int trial = 0; trial < 10; ++trial) {
    CaseRng rng(0x5eed, 0x6a1d, static_cast<std::uint64_t>(trial));
    // a[k][0] = a_e(∂₋e), a[k][1] = a_e(∂₊e)
    std::vector<std::array<double, 2>> a(g.ne());
    for (auto& x : a) x = {rng.normal(), rng.normal()};
    double lhs = 0.0, rhs = 0.0;
    for (Index v = 0; v < g.nv(); ++v)
      for (Index e : g.incident(v)) lhs += a[e][g.is_source(e, v) ? 0 : 1];
    for (Index e = 0; e < g.ne(); ++e) rhs += a[e][0] + a[e][1];
    r.reorder_residual = std::max(r.reorder_residual, std::abs(lhs - rhs));
  }
  return r;
}

// Name of the subdivision vertex of edge e; prefixed only on a clash with a
// vertex id.
inline std::string edge_node_id(const Graph& g, const std::string& eid) {
  return g.find_vertex(eid) ? "e:" + eid : eid;
}

// Vertex set V ⊔ E; the edge b = (v, e) points v -> e if v = ∂₋e and e -> v if
// v = ∂₊e, so each edge of G becomes a directed path of length two.
inline Graph subdivision(const Graph& g) {
  validate(g);
  auto node = [&](const std::string& eid) { return edge_node_id(g, eid); };
  std::vector<std::string> verts = g.vertex_ids();
  for (const auto& e : g.edges()) verts.push_back(node(e.id));
  std::vector<EdgeRec> es;
  for (const auto& e : g.edges()) {
    const std::string n = node(e.id);
    es.push_back({g.vertex_id(e.src) + "|" + e.id, g.vertex_id(e.src), n});
    es.push_back({e.id + "|" + g.vertex_id(e.dst), n, g.vertex_id(e.dst)});
  }
  return Graph(std::move(verts), es, g.boundary_ids());
}

// One adjacency per shared endpoint; edges sharing both endpoints give a
// multi-edge of the line graph.
inline Graph line_graph(const Graph& g) {
  validate(g);
  std::vector<std::string> verts;
  for (const auto& e : g.edges()) verts.push_back(e.id);
  std::vector<EdgeRec> es;
  for (Index v = 0; v < g.nv(); ++v) {
    const auto& inc = g.incident(v);
    for (size_t i = 0; i < inc.size(); ++i)
      for (size_t j = i + 1; j < inc.size(); ++j) {
        const auto& a = g.edge(inc[i]).id;
        const auto& b = g.edge(inc[j]).id;
        es.push_back({a + "~" + b + "@" + g.vertex_id(v), a, b});
      }
  }
  return Graph(std::move(verts), es);
}

struct Star {
  Index center;
  Graph graph;  // vertices: center, then the edge ids of E_v; boundary = leaves
};

inline std::vector<Star> star_components(const Graph& g) {
  validate(g);
  std::vector<Star> out;
  for (Index v = 0; v < g.nv(); ++v) {
    std::vector<std::string> verts{g.vertex_id(v)};
    std::vector<std::string> leaves;
    std::vector<EdgeRec> es;
    for (Index e : g.incident(v)) {
      const std::string eid = edge_node_id(g, g.edge(e).id);
      verts.push_back(eid);
      leaves.push_back(eid);
      if (g.is_source(e, v))
        es.push_back({g.vertex_id(v) + "|" + g.edge(e).id, g.vertex_id(v), eid});
      else
        es.push_back({g.edge(e).id + "|" + g.vertex_id(v), eid, g.vertex_id(v)});
    }
    out.push_back({v, Graph(std::move(verts), es, leaves)});
  }
  return out;
}

// Union of graphs identified along equal vertex ids.
inline Graph glue(const std::vector<Graph>& parts) {
  std::vector<std::string> verts;
  std::set<std::string> seen;
  std::vector<EdgeRec> es;
  for (const auto& p : parts) {
    for (const auto& v : p.vertex_ids())
      if (seen.insert(v).second) verts.push_back(v);
    for (const auto& r : p.edge_records()) es.push_back(r);
  }
  return Graph(std::move(verts), es);
}

inline RVec degrees(const Graph& g) {
  RVec d(g.nv());
  for (Index v = 0; v < g.nv(); ++v) d(v) = static_cast<double>(g.deg(v));
  return d;
}

inline WeightedSpace degree_space(const Graph& g) {
  for (Index v = 0; v < g.nv(); ++v)
    if (g.deg(v) == 0) throw Error(Errc::IsolatedVertex, "vertex '" + g.vertex_id(v) + "'");
  return WeightedSpace(degrees(g), "vertices");
}

// Gram matrix of h(f) = sum_e |f(∂₊e) - f(∂₋e)|^2.
inline Mat energy_gram(const Graph& g) {
  Mat q = Mat::Zero(g.nv(), g.nv());
  for (const auto& e : g.edges()) {
    q(e.src, e.src) += 1.0;
    q(e.dst, e.dst) += 1.0;
    q(e.src, e.dst) -= 1.0;
    q(e.dst, e.src) -= 1.0;
  }
  return q;
}

// (Δf)(v) = (1/deg v) sum_{e in E_v} (f(v) - f(v_e)) on ℓ²(V, deg).
inline LinOp normalized_laplacian(const Graph& g) {
  validate(g);
  WeightedSpace s = degree_space(g);
  Mat q = energy_gram(g);
  Mat t = s.weights().cwiseInverse().cast<cplx>().asDiagonal() * q;
  return LinOp(s, s, t);
}

inline std::vector<Index> component_labels(const Graph& g) {
  std::vector<Index> parent(g.nv());
  std::iota(parent.begin(), parent.end(), Index{0});
  std::function<Index(Index)> find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges())
    if (e.src >= 0 && e.dst >= 0) parent[find(e.src)] = find(e.dst);
  std::vector<Index> lab(g.nv());
  for (Index v = 0; v < g.nv(); ++v) lab[v] = find(v);
  return lab;
}

inline Index num_components(const Graph& g) {
  auto lab = component_labels(g);
  return static_cast<Index>(std::set<Index>(lab.begin(), lab.end()).size());
}

inline std::optional<Index> regular_degree(const Graph& g) {
  if (g.nv() == 0) return std::nullopt;
  for (Index v = 1; v < g.nv(); ++v)
    if (g.deg(v) != g.deg(0)) return std::nullopt;
  return g.deg(0);
}

inline std::vector<Index> degree_sequence(const Graph& g) {
  std::vector<Index> d;
  for (Index v = 0; v < g.nv(); ++v) d.push_back(g.deg(v));
  std::sort(d.begin(), d.end());
  return d;
}

// ---- fixtures --------------------------------------------------------------

namespace graphs {

inline Graph path(Index n) {
  std::vector<std::string> v;
  std::vector<EdgeRec> e;
  for (Index i = 0; i < n; ++i) v.push_back("v" + std::to_string(i));
  for (Index i = 0; i + 1 < n; ++i)
    e.push_back({"e" + std::to_string(i), v[i], v[i + 1]});
  return Graph(v, e);
}

// a - m - b
inline Graph path_amb() { return Graph({"a", "m", "b"}, {{"am", "a", "m"}, {"mb", "m", "b"}}); }

inline Graph k2() { return Graph({"a", "b"}, {{"ab", "a", "b"}}); }

inline Graph cycle(Index n) {
  std::vector<std::string> v;
  std::vector<EdgeRec> e;
  for (Index i = 0; i < n; ++i) v.push_back("v" + std::to_string(i));
  for (Index i = 0; i < n; ++i) e.push_back({"e" + std::to_string(i), v[i], v[(i + 1) % n]});
  return Graph(v, e);
}

inline Graph complete(Index n) {
  std::vector<std::string> v;
  std::vector<EdgeRec> e;
  for (Index i = 0; i < n; ++i) v.push_back("v" + std::to_string(i));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      e.push_back({"e" + std::to_string(i) + "_" + std::to_string(j), v[i], v[j]});
  return Graph(v, e);
}

// center "c" joined to leaves "l1".."lk"
inline Graph star(Index k) {
  std::vector<std::string> v{"c"};
  std::vector<EdgeRec> e;
  for (Index i = 1; i <= k; ++i) {
    v.push_back("l" + std::to_string(i));
    e.push_back({"s" + std::to_string(i), "c", v.back()});
  }
  return Graph(v, e);
}

inline Graph petersen() {
  std::vector<std::string> v;
  std::vector<EdgeRec> e;
  for (int i = 0; i < 10; ++i) v.push_back("p" + std::to_string(i));
  int k = 0;
  for (int i = 0; i < 5; ++i) {
    e.push_back({"q" + std::to_string(k++), v[i], v[(i + 1) % 5]});
    e.push_back({"q" + std::to_string(k++), v[i], v[5 + i]});
    e.push_back({"q" + std::to_string(k++), v[5 + i], v[5 + (i + 2) % 5]});
  }
  return Graph(v, e);
}

// Random spanning tree plus extra simple edges, random orientations.
inline Graph random_connected(CaseRng& rng, Index n, double extra_density = 0.15) {
  std::vector<std::string> v;
  for (Index i = 0; i < n; ++i) v.push_back("v" + std::to_string(i));
  std::vector<EdgeRec> e;
  std::set<std::pair<Index, Index>> used;
  auto add = [&](Index a, Index b) {
    if (a == b || used.count({std::min(a, b), std::max(a, b)})) return;
    used.insert({std::min(a, b), std::max(a, b)});
    std::string id = "e" + std::to_string(e.size());
    if (rng.coin())
      e.push_back({id, v[a], v[b]});
    else
      e.push_back({id, v[b], v[a]});
  };
  for (Index i = 1; i < n; ++i) add(i, rng.integer(0, i - 1));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (rng.uniform() < extra_density) add(i, j);
  return Graph(v, e);
}

// Nonempty proper subset of the vertices.
inline std::vector<std::string> random_boundary(CaseRng& rng, const Graph& g) {
  std::vector<std::string> b;
  const Index n = g.nv();
  Index k = rng.integer(1, std::max<Index>(1, n - 1));
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  std::sort(idx.begin(), idx.begin() + k);
  for (Index i = 0; i < k; ++i) b.push_back(g.vertex_id(idx[i]));
  return b;
}

}  // namespace graphs

}  // namespace glx
