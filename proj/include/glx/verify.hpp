#pragma once

// Verification suites. Each case draws from CaseRng(seed, stream, case), so a
// report depends only on the seed; cases run in parallel into fixed slots.
// max_residual is the largest residual relative to the case threshold minus 1
// for inequality checks, or the raw residual for identity checks; `pass` is
// decided per check.

#include <string>
#include <vector>

#include "glx/abvp.hpp"
#include "glx/coupling.hpp"
#include "glx/io.hpp"
#include "glx/parallel.hpp"
#include "glx/quasi_iso.hpp"
#include "glx/secular.hpp"

namespace glx::verify {

using io::json;

struct SuiteReport {
  std::string suite;
  int cases = 0;
  double max_residual = 0.0;
  bool pass = true;
  json details = json::object();
};

inline json to_json(const SuiteReport& r) {
  json j;
  j["suite"] = r.suite;
  j["cases"] = r.cases;
  j["max_residual"] = io::jnum(r.max_residual);
  j["pass"] = r.pass;
  if (!r.details.empty()) j["details"] = r.details;
  return j;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"krein", "green", "specrel", "subdivision-corollary",
                                              "thm314", "prop210", "thm42"};
  return names;
}

enum Stream : std::uint64_t { kFixture = 100, kGreen = 2, kSpecrel = 3, kThm314 = 5, kProp210 = 6 };

// Shared randomized fixture: connected, |V| ≤ 50, nonempty proper boundary.
inline Graph random_fixture(std::uint64_t seed, std::uint64_t i) {
  CaseRng rng(seed, kFixture, i);
  const Index n = rng.integer(2, 50);
  Graph g = graphs::random_connected(rng, n);
  return g.with_boundary(graphs::random_boundary(rng, g));
}

struct CaseOutcome {
  double residual = 0.0;
  bool pass = true;
  std::string note;
};

inline void absorb(SuiteReport& r, const std::vector<CaseOutcome>& out) {
  json fails = json::array();
  for (size_t i = 0; i < out.size(); ++i) {
    r.max_residual = std::max(r.max_residual, out[i].residual);
    if (!out[i].pass) {
      r.pass = false;
      fails.push_back({{"case", i}, {"residual", io::jnum(out[i].residual)}, {"note", out[i].note}});
    }
  }
  r.cases += static_cast<int>(out.size());
  if (!fails.empty()) r.details["failures"] = fails;
}

template <class F>
std::vector<CaseOutcome> run_cases(size_t n, F body) {
  std::vector<CaseOutcome> out(n);
  parallel_for(n, [&](size_t i) {
    try {
      out[i] = body(i);
    } catch (const Error& e) {
      out[i] = {kInf, false, e.what()};
    }
  });
  return out;
}

// ---- abvp-core --------------------------------------------------------------------

inline constexpr int kRandomCases = 100;

inline SuiteReport krein(std::uint64_t seed) {
  SuiteReport r{"krein"};
  const std::vector<cplx> zs{-1.0, -2.0, cplx(0.5, 1.0)};
  absorb(r, run_cases(kRandomCases, [&](size_t i) {
           const Abvp p = graph_abvp(random_fixture(seed, i));
           CaseOutcome c;
           for (cplx z : zs) c.residual = std::max(c.residual, p.krein_residual(z).relative);
           c.pass = c.residual <= 1e-10;
           return c;
         }));
  // path a–m–b with ∂ = {a, b} at z = −1
  const Abvp pab = graph_abvp(graphs::path_amb().with_boundary({"a", "b"}));
  absorb(r, {{pab.krein_residual(-1.0).residual, pab.krein_residual(-1.0).residual < 1e-12, "path"}});
  return r;
}

inline SuiteReport green(std::uint64_t seed) {
  SuiteReport r{"green"};
  absorb(r, run_cases(kRandomCases, [&](size_t i) {
           const Abvp p = graph_abvp(random_fixture(seed, i));
           CaseRng rng(seed, kGreen, i);
           const Mat h1 = p.h1_gram();
           CaseOutcome c;
           for (int s = 0; s < 5; ++s) {
             Vec f = rng.cvec(p.space().dim()), g = rng.cvec(p.space().dim());
             const double nf = std::sqrt(f.dot(h1 * f).real()), ng = std::sqrt(g.dot(h1 * g).real());
             c.residual = std::max(c.residual, p.green_residual(f, g) / (nf * ng));
           }
           c.pass = c.residual <= 1e-12;
           return c;
         }));
  return r;
}

// Forward: every Neumann eigenvalue off the Dirichlet spectrum makes Λ singular.
// Converse: every secular zero found off the pole windows is a Neumann eigenvalue.
struct SpecrelCase {
  double forward = 0.0;   // max min|eig Λ(λ)|
  double converse = 0.0;  // max distance of a secular zero to spec H^Neu
  Index checked = 0, zeros = 0;
};

inline SpecrelCase specrel_case(const Abvp& p) {
  SpecrelCase c;
  const RVec& sn = p.neumann_spectrum();
  const RVec& sd = p.dirichlet().spectrum;
  for (Index i = 0; i < sn.size(); ++i) {
    if (p.dirichlet_distance(sn(i)) <= 1e-6) continue;
    SpectralRelation s = p.spectral_relation_check(sn(i));
    c.forward = std::max(c.forward, s.min_dtn_eig);
    ++c.checked;
  }
  SecularOptions opt;
  opt.lo = -0.05;
  opt.hi = 2.05;
  std::vector<double> poles(sd.data(), sd.data() + sd.size());
  const RVec& wg = p.boundary().weights();
  const SpectrumReport rep =
      secular_spectrum([&](double lam) { return orthonormal_coords(p.dtn(lam).m, wg, wg); }, poles, opt);
  for (double x : rep.eigenvalues) {
    double d = kInf;
    for (Index i = 0; i < sn.size(); ++i) d = std::min(d, std::abs(x - sn(i)));
    c.converse = std::max(c.converse, d);
    ++c.zeros;
  }
  return c;
}

inline SuiteReport specrel(std::uint64_t seed) {
  SuiteReport r{"specrel"};
  {
    const Abvp k2 = graph_abvp(graphs::k2().with_boundary({"a"}));
    const SpectralRelation s0 = k2.spectral_relation_check(0.0), s1 = k2.spectral_relation_check(0.5);
    const bool ok = s0.in_neumann && s0.dtn_singular && !s1.in_neumann && !s1.dtn_singular;
    r.details["k2_lambda0"] = json::array({s0.in_neumann, s0.dtn_singular});
    r.details["k2_lambda05"] = json::array({s1.in_neumann, s1.dtn_singular});
    absorb(r, {{s0.min_dtn_eig, ok, "K2 fixture"}});
  }
  std::vector<SpecrelCase> cs(kRandomCases);
  absorb(r, run_cases(kRandomCases, [&](size_t i) {
           cs[i] = specrel_case(graph_abvp(random_fixture(seed, i)));
           return CaseOutcome{std::max(cs[i].forward, cs[i].converse), cs[i].forward < 1e-8 && cs[i].converse <= 1e-8,
                              "forward " + io::num(cs[i].forward) + ", converse " + io::num(cs[i].converse)};
         }));
  Index checked = 0, zeros = 0;
  for (const auto& c : cs) checked += c.checked, zeros += c.zeros;
  r.details["eigenvalues_checked"] = checked;
  r.details["secular_zeros_checked"] = zeros;
  return r;
}

// ---- coupling ---------------------------------------------------------------------

inline std::vector<cplx> line_graph_zs() {
  return {-1.0, -0.5, cplx(0.3, 0.7), cplx(2.5, -0.4), -3.0, cplx(0.1, 2.0)};
}

inline SuiteReport subdivision_corollary(std::uint64_t) {
  SuiteReport r{"subdivision-corollary"};
  const std::vector<std::pair<std::string, Graph>> fx{{"C3", graphs::cycle(3)},
                                                     {"C4", graphs::cycle(4)},
                                                     {"C6", graphs::cycle(6)},
                                                     {"K4", graphs::complete(4)},
                                                     {"Petersen", graphs::petersen()}};
  json fits = json::array();
  std::vector<CaseOutcome> out;
  for (const auto& [name, g] : fx) {
    const LineGraphReport lr = line_graph_dtn_check(g, line_graph_zs());
    const double res = std::max({lr.affine_residual, lr.model_residual, lr.oracle_map_residual, lr.forward_map_residual});
    out.push_back({res, lr.affine_residual <= 1e-10 && lr.model_residual <= 1e-10 && lr.oracle_map_residual <= 1e-8 &&
                            lr.forward_map_residual <= 1e-8 && lr.beta_decay < 1e-3,
                   name});
    json alpha = json::array(), beta = json::array();
    for (size_t i = 0; i < lr.z.size(); ++i) {
      alpha.push_back({{"z", io::to_json(lr.z[i])}, {"alpha", io::to_json(lr.alpha[i])}});
      beta.push_back({{"z", io::to_json(lr.z[i])}, {"beta", io::to_json(lr.beta[i])}});
    }
    const double rr = static_cast<double>(lr.r);
    fits.push_back({{"graph", name},
                    {"r", lr.r},
                    {"alpha", alpha},
                    {"beta", beta},
                    {"alpha_model", "a1 (1 - z) + a2 / (1 - z)"},
                    {"beta_model", "b / (1 - z)"},
                    {"a1", io::jnum(lr.a1)},
                    {"a2", io::jnum(lr.a2)},
                    {"b", io::jnum(lr.b)},
                    {"affine_residual", io::jnum(lr.affine_residual)},
                    {"oracle_map", "nu = 1 + (a1 (1 - lambda)^2 + a2) / b"},
                    {"oracle_map_closed", "nu = r/(r-1) (1 - (1 - lambda)^2)"},
                    {"oracle_map_residual", io::jnum(lr.oracle_map_residual)},
                    {"forward_map_residual", io::jnum(lr.forward_map_residual)},
                    {"printed_alpha_deviation", io::jnum(lr.printed_alpha_dev)},
                    {"printed_beta_deviation", io::jnum(lr.printed_beta_dev)},
                    {"printed_map_residual", io::jnum(lr.printed_map_residual)},
                    {"printed_map_agrees", lr.printed_map_residual <= 1e-8},
                    {"expected_a2", io::jnum(-2.0 / rr)},
                    {"expected_b", io::jnum(-(2.0 * rr - 2.0) / rr)}});
  }
  absorb(r, out);
  r.details["fits"] = fits;
  return r;
}

struct CouplingFixture {
  std::string name;
  Graph graph;
};

inline std::vector<CouplingFixture> star_fixtures() {
  return {{"K2", graphs::k2()},
          {"C3", graphs::cycle(3)},
          {"C4", graphs::cycle(4)},
          {"K4", graphs::complete(4)},
          {"3-star", graphs::star(3)}};
}

inline std::vector<cplx> random_zs(CaseRng& rng, int n) {
  std::vector<cplx> zs;
  for (int i = 0; i < n; ++i) zs.push_back(cplx(rng.uniform(-3.0, 3.0), rng.uniform(0.2, 2.0) * (rng.coin() ? 1 : -1)));
  return zs;
}

// (f̃)(v) = f(v), (f̃)(e) = (f(∂₊e) + f(∂₋e)) / 2, in SG vertex order.
inline Mat subdivision_embedding(const Graph& g) {
  const Graph sg = subdivision(g);
  Mat m = Mat::Zero(sg.nv(), g.nv());
  for (Index v = 0; v < g.nv(); ++v) m(sg.vertex_index(g.vertex_id(v)), v) = 1.0;
  for (Index e = 0; e < g.ne(); ++e) {
    const Index k = sg.vertex_index(edge_node_id(g, g.edge(e).id));
    m(k, g.edge(e).src) = 0.5;
    m(k, g.edge(e).dst) = 0.5;
  }
  return m;
}

// Vertex coupling (star components), edge coupling (trivial edge ABVPs) and
// the trivial-vertex reduction.
inline SuiteReport thm314(std::uint64_t seed) {
  SuiteReport r{"thm314"};
  const auto fx = star_fixtures();
  json rows = json::array();
  std::vector<json> slot(fx.size());
  absorb(r, run_cases(fx.size(), [&](size_t i) {
           CaseRng rng(seed, kThm314, i);
           const VertexCoupling vc = vertex_couple(star_blueprint(fx[i].graph));
           const CouplingReport cr = vertex_coupling_report(vc, random_zs(rng, 20));
           const double neu = multiset_distance(vc.coupled.neumann_spectrum(),
                                                spectrum(normalized_laplacian(subdivision(fx[i].graph))));
           const double gamma_excess = cr.gamma_norm_sq - cr.gamma_norm_bound;
           slot[i] = {{"fixture", fx[i].name},
                      {"kernel_dim", cr.kernel_dim},
                      {"kernel_fit", io::jnum(cr.kernel_fit)},
                      {"dirichlet_union", io::jnum(cr.dirichlet_union)},
                      {"solution_decoupling", io::jnum(cr.solution_decoupling)},
                      {"dtn_two_path", io::jnum(cr.dtn_two_path)},
                      {"gamma_norm_sq", io::jnum(cr.gamma_norm_sq)},
                      {"gamma_norm_bound", io::jnum(cr.gamma_norm_bound)},
                      {"subdivision_spectrum", io::jnum(neu)}};
           const double res = std::max({cr.kernel_fit, cr.dirichlet_union, cr.dtn_two_path, cr.solution_decoupling, neu});
           const bool ok = cr.kernel_fit <= 1e-10 && cr.dirichlet_union <= 1e-8 && cr.dtn_two_path <= 1e-10 &&
                           cr.solution_decoupling <= 1e-10 && neu <= 1e-10 && gamma_excess <= 1e-12;
           return CaseOutcome{res, ok, fx[i].name};
         }));
  for (auto& s : slot) rows.push_back(s);
  r.details["vertex_coupling"] = rows;

  // trivial edge ABVPs: Λ(z) = Δ_G − z
  const std::vector<CouplingFixture> efx{
      {"K2", graphs::k2()}, {"C3", graphs::cycle(3)}, {"C4", graphs::cycle(4)}, {"Petersen", graphs::petersen()}};
  absorb(r, run_cases(efx.size(), [&](size_t i) {
           CaseRng rng(seed, kThm314, 100 + i);
           const EdgeCoupling ec = edge_couple(trivial_edge_blueprint(efx[i].graph));
           const LinOp lap = normalized_laplacian(efx[i].graph);
           const Mat on = orthonormal_coords(lap.m, lap.cod.weights(), lap.cod.weights());
           double res = 0.0;
           for (cplx z : random_zs(rng, 20)) {
             const Mat l = ec.coupled.dtn(z).m;
             const RVec& wg = ec.coupled.boundary().weights();
             res = std::max(res, (orthonormal_coords(l, wg, wg) - (on - z * Mat::Identity(on.rows(), on.cols()))).norm());
           }
           return CaseOutcome{res, res <= 1e-12, "edge " + efx[i].name};
         }));

  // trivial vertex ABVPs reproduce the edge coupling
  const std::vector<CouplingFixture> tfx{{"C3", graphs::cycle(3)}, {"K4", graphs::complete(4)}};
  absorb(r, run_cases(tfx.size(), [&](size_t i) {
           CaseRng rng(seed, kThm314, 200 + i);
           const TrivialVertexCoupling tv = trivial_vertex_couple(trivial_edge_blueprint(tfx[i].graph));
           const TrivialVertexReport tr = trivial_vertex_report(tv, rng, 100);
           const double res = std::max({tr.intertwining, tr.form_matrix, tr.form_random, tr.range_residual});
           return CaseOutcome{res, res <= 1e-12, "trivial vertex " + tfx[i].name};
         }));
  return r;
}

// ---- quasi-unitary equivalence -------------------------------------------------------

inline SuiteReport prop210(std::uint64_t seed) {
  SuiteReport r{"prop210"};
  {
    const Abvp p = graph_abvp(graphs::path_amb().with_boundary({"a"}));
    const TrivialLimit t = trivial_limit_ids(p, 1.0);
    CaseRng rng(seed, kProp210, 0);
    const double ex = sample_excess(side_of(t.trivial), side_of(p), t.ids, t.delta, rng, 200);
    const double dc = std::max({std::abs(t.lambda1 - 1.0), std::abs(t.gamma - 4.0), std::abs(t.delta - 2.0 * std::sqrt(3.0))});
    const bool ok = dc <= 1e-10 && std::isinf(t.mu1) && ex <= 0.0 && t.report.total <= t.delta;
    r.details["path"] = {{"lambda1", io::jnum(t.lambda1)}, {"gamma", io::jnum(t.gamma)}, {"mu1", io::jnum(t.mu1)},
                         {"a", io::jnum(t.a)},             {"delta", io::jnum(t.delta)}, {"sample_excess", io::jnum(ex)},
                         {"defects", io::to_json(t.report)}};
    absorb(r, {{std::max(dc, ex), ok, "path"}});
  }
  std::vector<double> deltas(20);
  absorb(r, run_cases(20, [&](size_t i) {
           const Abvp p = graph_abvp(random_fixture(seed, 1000 + i));
           const TrivialLimit t = trivial_limit_ids(p);
           CaseRng rng(seed, kProp210, 1 + i);
           const double ex = sample_excess(side_of(t.trivial), side_of(p), t.ids, t.delta, rng, 50);
           deltas[i] = t.delta;
           return CaseOutcome{std::max(ex, t.report.total / t.delta - 1.0), ex <= 0.0, "random"};
         }));
  r.details["random_deltas"] = deltas;
  return r;
}

struct SweepPoint {
  double eps = 0.0;
  CoupledCloseness cc;
};

// Star components of C₃ against the same family with the form at one vertex
// scaled by 1 + ε; identity identifications vertexwise.
inline std::vector<SweepPoint> coupled_sweep(const Graph& g, const std::vector<double>& eps) {
  const VertexCouplingBlueprint bpa = star_blueprint(g);
  const VertexCoupling va = vertex_couple(bpa);
  const SmoothingOp sa = smoothing_from_solutions(va);
  std::vector<IdentificationSet> ids;
  for (const auto& pv : bpa.vertex) ids.push_back(identity_ids(pv));
  std::vector<SweepPoint> out(eps.size());
  parallel_for(eps.size(), [&](size_t i) {
    VertexCouplingBlueprint bpb = bpa;
    const Abvp& v0 = bpb.vertex[0];
    bpb.vertex[0] = Abvp(v0.space(), v0.boundary(), v0.gamma_matrix(), (1.0 + eps[i]) * v0.form_matrix(),
                         v0.split_indices());
    const VertexCoupling vb = vertex_couple(bpb);
    out[i] = {eps[i], coupled_closeness(va, vb, ids, sa, smoothing_from_solutions(vb))};
  });
  return out;
}

inline SuiteReport thm42(std::uint64_t) {
  SuiteReport r{"thm42"};
  const auto pts = coupled_sweep(graphs::cycle(3), {1e-1, 1e-2, 1e-3, 1e-4});
  json rows = json::array();
  std::vector<CaseOutcome> out;
  double prev = kInf;
  for (const auto& p : pts) {
    const double m = p.cc.report.forms_and_maps();
    const bool mono = m < prev;
    prev = m;
    out.push_back({m / p.cc.bound - 1.0, m <= p.cc.bound && mono, "eps " + io::num(p.eps)});
    rows.push_back({{"epsilon", io::jnum(p.eps)},
                    {"delta_vertex", io::jnum(p.cc.delta)},
                    {"delta_measured", io::jnum(m)},
                    {"delta_bound", io::jnum(p.cc.bound)},
                    {"boundary_iso", json::array({io::jnum(p.cc.report.iso_fwd), io::jnum(p.cc.report.iso_bwd)})},
                    {"smallness", json::array({io::jnum(p.cc.smallness_fwd), io::jnum(p.cc.smallness_bwd)})}});
  }
  absorb(r, out);
  r.details["sweep"] = rows;
  return r;
}

inline SuiteReport run(const std::string& name, std::uint64_t seed) {
  if (name == "krein") return krein(seed);
  if (name == "green") return green(seed);
  if (name == "specrel") return specrel(seed);
  if (name == "subdivision-corollary") return subdivision_corollary(seed);
  if (name == "thm314") return thm314(seed);
  if (name == "prop210") return prop210(seed);
  if (name == "thm42") return thm42(seed);
  throw Error(Errc::InputError, "suite: unknown name '" + name + "'");
}

}  // namespace glx::verify
