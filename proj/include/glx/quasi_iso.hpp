#pragma once

// Distances between two ABVPs measured through identification operators.
// Every δ is the smallest admissible constant, i.e. a generalised singular
// value between the relevant Gram norms.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "glx/abvp.hpp"
#include "glx/coupling.hpp"
#include "glx/rng.hpp"

namespace glx {

// One ABVP in matrix form. The form domain ℋ¹ has its own coordinates,
// embedded into ℋ by y; for a single ABVP y = id.
struct Side {
  Mat w;     // ℋ Gram
  Mat y;     // ℋ¹ coordinates -> ℋ
  Mat q;     // form on ℋ¹ coordinates
  Mat gamma; // ℋ¹ coordinates -> 𝒢
  Mat wg;    // 𝒢 Gram
  Mat half;  // 𝒢^{1/2} Gram, l_{-1}

  Mat h1() const { return q + y.adjoint() * w * y; }
};

inline Side side_of(const Abvp& p) {
  const Index n = p.space().dim();
  return Side{p.weight_matrix(), Mat::Identity(n, n), p.form_matrix(), p.gamma_matrix(), p.boundary_weight_matrix(),
              p.half_gram()};
}

// J: ℋ→ℋ̃, Jp: ℋ̃→ℋ on Hilbert coordinates; J1, Jp1 between ℋ¹ coordinates;
// I: 𝒢→𝒢̃, Ip: 𝒢̃→𝒢. No relation between I* and Ip is assumed.
struct IdentificationSet {
  Mat j, jp, j1, jp1, i, ip;
};

struct ClosenessReport {
  double forms = 0.0;
  double bd_fwd = 0.0, bd_bwd = 0.0;
  std::array<double, 5> qu{};  // duality, 1−J′J, 1−JJ′, J¹−J, J′¹−J′
  double qu_max = 0.0;
  double iso_fwd = 0.0, iso_bwd = 0.0;
  double total = 0.0;

  // closeness of forms and boundary maps with quasi-unitary J's; no iso part
  double forms_and_maps() const { return std::max({forms, bd_fwd, bd_bwd, qu_max}); }
};

inline void check_ids(const Side& a, const Side& b, const IdentificationSet& ids) {
  auto shape = [](const Mat& m, Index r, Index c, const char* name) {
    if (m.rows() != r || m.cols() != c)
      throw Error(Errc::InputError, std::string("identification operator ") + name + " has the wrong shape");
  };
  shape(ids.j, b.w.rows(), a.w.rows(), "J");
  shape(ids.jp, a.w.rows(), b.w.rows(), "J'");
  shape(ids.j1, b.y.cols(), a.y.cols(), "J1");
  shape(ids.jp1, a.y.cols(), b.y.cols(), "J'1");
  shape(ids.i, b.wg.rows(), a.wg.rows(), "I");
  shape(ids.ip, a.wg.rows(), b.wg.rows(), "I'");
}

inline double delta_forms(const Side& a, const Side& b, const IdentificationSet& ids) {
  check_ids(a, b, ids);
  return bilinear_norm(b.q * ids.j1 - ids.jp1.adjoint() * a.q, b.h1(), a.h1());
}

inline std::pair<double, double> delta_bdmaps(const Side& a, const Side& b, const IdentificationSet& ids) {
  check_ids(a, b, ids);
  return {opnorm(ids.i * a.gamma - b.gamma * ids.j1, a.h1(), b.wg),
          opnorm(ids.ip * b.gamma - a.gamma * ids.jp1, b.h1(), a.wg)};
}

inline std::array<double, 5> delta_quasi_unitary_parts(const Side& a, const Side& b, const IdentificationSet& ids) {
  check_ids(a, b, ids);
  return {bilinear_norm(b.w * ids.j - ids.jp.adjoint() * a.w, b.w, a.w),
          opnorm(a.y - ids.jp * ids.j * a.y, a.h1(), a.w),
          opnorm(b.y - ids.j * ids.jp * b.y, b.h1(), b.w),
          opnorm(b.y * ids.j1 - ids.j * a.y, a.h1(), b.w),
          opnorm(a.y * ids.jp1 - ids.jp * b.y, b.h1(), a.w)};
}

inline double delta_quasi_unitary(const Side& a, const Side& b, const IdentificationSet& ids) {
  auto p = delta_quasi_unitary_parts(a, b, ids);
  return *std::max_element(p.begin(), p.end());
}

inline std::pair<double, double> delta_boundary_iso(const Side& a, const Side& b, const IdentificationSet& ids) {
  check_ids(a, b, ids);
  const Index m = a.wg.rows(), n = b.wg.rows();
  return {opnorm(Mat::Identity(m, m) - ids.ip * ids.i, a.half, a.wg),
          opnorm(Mat::Identity(n, n) - ids.i * ids.ip, b.half, b.wg)};
}

inline ClosenessReport closeness(const Side& a, const Side& b, const IdentificationSet& ids) {
  ClosenessReport r;
  r.forms = delta_forms(a, b, ids);
  std::tie(r.bd_fwd, r.bd_bwd) = delta_bdmaps(a, b, ids);
  r.qu = delta_quasi_unitary_parts(a, b, ids);
  r.qu_max = *std::max_element(r.qu.begin(), r.qu.end());
  std::tie(r.iso_fwd, r.iso_bwd) = delta_boundary_iso(a, b, ids);
  r.total = std::max({r.forms_and_maps(), r.iso_fwd, r.iso_bwd});
  return r;
}

inline ClosenessReport closeness(const Abvp& a, const Abvp& b, const IdentificationSet& ids) {
  return closeness(side_of(a), side_of(b), ids);
}

// Largest relative excess lhs/rhs − δ over random vectors for the inequalities
// of the definitions; ≤ 0 means all hold. `with_iso` adds the two boundary ones.
inline double sample_excess(const Side& a, const Side& b, const IdentificationSet& ids, double delta, CaseRng& rng,
                            int samples, bool with_iso = true) {
  auto nrm = [](const Mat& g, const Vec& x) { return std::sqrt(std::max(0.0, (x.adjoint() * g * x)(0, 0).real())); };
  double worst = -kInf;
  auto test = [&](double lhs, double rhs) {
    if (rhs <= 1e-300) {
      if (lhs > 1e-12) worst = kInf;
      return;
    }
    worst = std::max(worst, lhs / rhs - delta);
  };
  const Mat h1a = a.h1(), h1b = b.h1();
  for (int s = 0; s < samples; ++s) {
    Vec f = rng.cvec(a.y.cols()), u = rng.cvec(b.y.cols());
    Vec fh = rng.cvec(a.w.rows()), uh = rng.cvec(b.w.rows());
    test(std::abs((u.adjoint() * (b.q * ids.j1 - ids.jp1.adjoint() * a.q) * f)(0, 0)), nrm(h1b, u) * nrm(h1a, f));
    test(nrm(b.wg, (ids.i * a.gamma - b.gamma * ids.j1) * f), nrm(h1a, f));
    test(nrm(a.wg, (ids.ip * b.gamma - a.gamma * ids.jp1) * u), nrm(h1b, u));
    test(std::abs((uh.adjoint() * b.w * ids.j * fh)(0, 0) - ((ids.jp * uh).adjoint() * a.w * fh)(0, 0)),
         nrm(a.w, fh) * nrm(b.w, uh));
    test(nrm(a.w, a.y * f - ids.jp * ids.j * a.y * f), nrm(h1a, f));
    test(nrm(b.w, b.y * u - ids.j * ids.jp * b.y * u), nrm(h1b, u));
    test(nrm(b.w, b.y * ids.j1 * f - ids.j * a.y * f), nrm(h1a, f));
    test(nrm(a.w, a.y * ids.jp1 * u - ids.jp * b.y * u), nrm(h1b, u));
    if (with_iso) {
      Vec phi = rng.cvec(a.wg.rows()), psi = rng.cvec(b.wg.rows());
      test(nrm(a.wg, phi - ids.ip * ids.i * phi), nrm(a.half, phi));
      test(nrm(b.wg, psi - ids.i * ids.ip * psi), nrm(b.half, psi));
    }
  }
  return worst;
}

// ---- trivial limit -------------------------------------------------------------

struct TrivialLimit {
  Abvp trivial;  // (id, ℂ, 0, ℂ, ℂ)
  IdentificationSet ids;  // from the trivial ABVP to Π̃
  double lambda1 = 0.0;   // spectral gap of H̃^Neu above 0
  double mu1 = kInf;      // dist(spec Λ̃(0) ∖ {0}, 0)
  double gamma = 0.0;     // ‖Γ̃Φ₀‖^{-2}
  double a = 1.0;
  double delta = 0.0;
  ClosenessReport report;
};

inline Abvp trivial_point_abvp() {
  return Abvp::trivial(WeightedSpace::unit(1, "C"), Mat::Zero(1, 1));
}

// ‖Γ̃u‖² ≤ a h̃(u) + (2/a)‖u‖² as a semidefiniteness test.
inline bool bd_map_estimate_holds(const Abvp& p, double a) {
  const Mat g = p.gamma_matrix();
  Mat m = a * p.form_matrix() + (2.0 / a) * p.weight_matrix() - g.adjoint() * p.boundary_weight_matrix() * g;
  RVec ev = eigh_hermitian(m).values;
  const double scale = std::max(1.0, eigh_hermitian(p.h1_gram()).values.cwiseAbs().maxCoeff());
  return ev.size() == 0 || ev.minCoeff() >= -1e-12 * scale;
}

inline TrivialLimit trivial_limit_ids(const Abvp& pt, std::optional<double> a = std::nullopt) {
  TrivialLimit t;
  const Eigh& ne = pt.neumann_eigh();
  const RVec& lam = ne.values;
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  if (lam.size() < 2 || std::abs(lam(0)) > 1e-10 * scale)
    throw Error(Errc::ZeroNotSimple, "0 is not an eigenvalue of the Neumann operator");
  if (lam(1) <= 1e-10 * scale) throw Error(Errc::ZeroNotSimple, "0 is not simple or not isolated");
  t.lambda1 = lam(1);
  if (a) {
    if (!(*a > 0.0 && *a <= 1.0)) throw Error(Errc::InputError, "a must lie in (0, 1]");
    if (!bd_map_estimate_holds(pt, *a)) throw Error(Errc::BdMapEstimateFails, "a = " + std::to_string(*a));
    t.a = *a;
  } else {
    bool found = false;
    for (double c : {1.0, 0.5, 0.1})
      if (bd_map_estimate_holds(pt, c)) {
        t.a = c;
        found = true;
        break;
      }
    if (!found) throw Error(Errc::BdMapEstimateFails, "no a in {1, 0.5, 0.1} passes");
  }
  const Vec phi0 = ne.vectors.col(0);  // normalised in ℋ̃
  const Vec psi0 = pt.gamma_matrix() * phi0;
  const double npsi = pt.boundary().norm(psi0);
  if (npsi <= 1e-12) throw Error(Errc::ZeroNotSimple, "the ground state has zero boundary trace");
  t.gamma = 1.0 / (npsi * npsi);
  {
    LinOp l0 = pt.dtn(0.0);
    RVec mu = eigh_hermitian(orthonormal_coords(l0.m, l0.dom.weights(), l0.dom.weights())).values;
    Index k0 = 0;
    for (Index i = 1; i < mu.size(); ++i)
      if (std::abs(mu(i)) < std::abs(mu(k0))) k0 = i;
    t.mu1 = kInf;
    for (Index i = 0; i < mu.size(); ++i)
      if (i != k0) t.mu1 = std::min(t.mu1, std::abs(mu(i)));
  }
  t.trivial = trivial_point_abvp();
  const RVec& w = pt.space().weights();
  const RVec& wg = pt.boundary().weights();
  t.ids.j = phi0;
  t.ids.j1 = phi0;
  t.ids.jp = phi0.adjoint() * w.cast<cplx>().asDiagonal();
  t.ids.jp1 = t.ids.jp;
  t.ids.i = psi0;
  t.ids.ip = t.gamma * psi0.adjoint() * wg.cast<cplx>().asDiagonal();
  const double iso = std::isinf(t.mu1) ? 0.0 : 1.0 / std::sqrt(t.mu1);
  t.delta = std::max({iso, std::sqrt(t.a + 2.0 / (t.a * t.lambda1)) / npsi, 1.0 / std::sqrt(t.lambda1)});
  t.report = closeness(t.trivial, pt, t.ids);
  const double slack = 1e-9 * std::max(1.0, t.delta);
  if (t.report.total > t.delta + slack)
    throw Error(Errc::HypothesisFails, "measured defect " + std::to_string(t.report.total) + " exceeds delta " +
                                           std::to_string(t.delta));
  return t;
}

// ---- smoothing ------------------------------------------------------------------

struct SmoothingOp {
  Mat b;                        // ℋ^dec -> ℋ^dec
  std::vector<std::vector<Mat>> chi;  // chi[v][k] : 𝒢_e -> ℋ_v, e = incident(v)[k]
  double c = 0.0;               // C² = sup_v Σ_e ‖χ_{e,v}‖²
  double hypothesis_residual = 0.0;
  double constraint_residual = 0.0;  // max over samples, relative to ‖f‖_{ℋ¹,dec}
};

// Trace mismatch C f = (Γ_{∂₋e,e} f − Γ_{∂₊e,e} f)_e on ℋ^dec.
inline Mat coupling_constraint(const VertexCoupling& vc) {
  const Graph& g = vc.bp.graph;
  Mat c = Mat::Zero(vc.e_off.back(), vc.h_off.back());
  for (Index e = 0; e < g.ne(); ++e) {
    auto s = vc.sides(e);
    c.middleRows(vc.e_off[e], vc.bp.edge_space[e].dim()) =
        vc.edge_trace(s[0].first, s[0].second) - vc.edge_trace(s[1].first, s[1].second);
  }
  return c;
}

inline Mat decoupled_h1(const VertexCoupling& vc) { return vc.decoupled.h1_gram(); }

// χ_{e,v} = S_v(−1) π*_{v,e}; needs Γ_{v,e} χ_{e',v} = δ_{ee'}.
inline SmoothingOp smoothing_from_solutions(const VertexCoupling& vc, int samples = 50) {
  const Graph& g = vc.bp.graph;
  SmoothingOp s;
  const Index n = vc.h_off.back();
  s.b = Mat::Zero(n, n);
  s.chi.resize(static_cast<size_t>(g.nv()));
  for (Index v = 0; v < g.nv(); ++v) {
    const Abvp& pv = vc.bp.vertex[v];
    const Mat sv = pv.solution_operator(-1.0).m;
    const Mat h1v = pv.h1_gram();
    const auto& inc = g.incident(v);
    double csum = 0.0;
    for (size_t k = 0; k < inc.size(); ++k) {
      const Index e = inc[k];
      const WeightedSpace& ge = vc.bp.edge_space[e];
      Mat pis = adjoint_matrix(vc.bp.trace[v][k], pv.boundary().weights(), ge.weights());
      s.chi[v].push_back(sv * pis);
      const double cn = opnorm(s.chi[v][k], ge.gram(), h1v);
      csum += cn * cn;
    }
    s.c = std::max(s.c, csum);
    for (size_t k = 0; k < inc.size(); ++k)
      for (size_t k2 = 0; k2 < inc.size(); ++k2) {
        Mat t = vc.bp.trace[v][k] * pv.gamma_matrix() * s.chi[v][k2];
        Mat want = Mat::Zero(t.rows(), t.cols());
        if (k == k2) want.setIdentity();
        const double r = (t - want).norm();
        s.hypothesis_residual = std::max(s.hypothesis_residual, r);
        if (r > 1e-10)
          throw Error(Errc::HypothesisFails, "Gamma_{" + g.vertex_id(v) + "," + g.edge(inc[k]).id + "} chi_{" +
                                                 g.edge(inc[k2]).id + "," + g.vertex_id(v) + "} " +
                                                 (k == k2 ? "!= id" : "!= 0") + " (residual " + std::to_string(r) + ")");
      }
    for (size_t k = 0; k < inc.size(); ++k) {
      const Index e = inc[k];
      auto sd = vc.sides(e);
      const auto& o = sd[0].first == v ? sd[1] : sd[0];
      Mat diff = vc.edge_trace(v, k) - vc.edge_trace(o.first, o.second);
      s.b.middleRows(vc.h_off[v], pv.space().dim()) += 0.5 * s.chi[v][k] * diff;
    }
  }
  s.c = std::sqrt(s.c);
  const Mat c = coupling_constraint(vc), h1 = decoupled_h1(vc);
  CaseRng rng(0x5300, 0, static_cast<std::uint64_t>(n));
  for (int i = 0; i < samples; ++i) {
    Vec f = rng.cvec(n);
    const double nf = std::sqrt((f.adjoint() * h1 * f)(0, 0).real());
    s.constraint_residual = std::max(s.constraint_residual, (c * (f - s.b * f)).norm() / nf);
  }
  if (s.constraint_residual > 1e-10)
    throw Error(Errc::HypothesisFails, "f - Bf violates the coupling (residual " + std::to_string(s.constraint_residual) + ")");
  return s;
}

// ---- coupled closeness -----------------------------------------------------------

inline Side side_of(const VertexCoupling& vc) {
  return Side{vc.decoupled.weight_matrix(), vc.basis, vc.coupled.form_matrix(), vc.coupled.gamma_matrix(),
              vc.coupled.boundary_weight_matrix(), vc.coupled.half_gram()};
}

inline IdentificationSet identity_ids(const Abvp& p) {
  const Index n = p.space().dim(), m = p.boundary().dim();
  Mat in = Mat::Identity(n, n), im = Mat::Identity(m, m);
  return {in, in, in, in, im, im};
}

struct CoupledCloseness {
  IdentificationSet ids;     // global, ℋ¹ parts in coupled coordinates
  ClosenessReport report;
  std::vector<double> delta_v;
  double delta = 0.0;        // sup_v δ_v
  double smallness_fwd = 0.0, smallness_bwd = 0.0;
  double gamma_sup = 0.0, gamma_sup_tilde = 0.0;
  double bound = 0.0;        // δ max{3, sup‖Γ_v‖ + 1, sup‖Γ̃_v‖ + 1}
  double range_residual = 0.0;  // J¹, J′¹ land in the coupled domains
};

inline CoupledCloseness coupled_closeness(const VertexCoupling& a, const VertexCoupling& b,
                                          const std::vector<IdentificationSet>& vids, const SmoothingOp& ba,
                                          const SmoothingOp& bb) {
  const Graph& g = a.bp.graph;
  if (g.nv() != b.bp.graph.nv() || g.ne() != b.bp.graph.ne() || static_cast<Index>(vids.size()) != g.nv())
    throw Error(Errc::InputError, "families must live on the same graph with one identification set per vertex");
  CoupledCloseness cc;
  std::vector<Mat> j, jp, j1, jp1;
  for (Index v = 0; v < g.nv(); ++v) {
    ClosenessReport rv = closeness(a.bp.vertex[v], b.bp.vertex[v], vids[v]);
    cc.delta_v.push_back(rv.total);
    cc.delta = std::max(cc.delta, rv.total);
    j.push_back(vids[v].j);
    jp.push_back(vids[v].jp);
    j1.push_back(vids[v].j1);
    jp1.push_back(vids[v].jp1);
  }
  const Mat jd = block_diag(j), jpd = block_diag(jp), j1d = block_diag(j1), jp1d = block_diag(jp1);
  const Mat wa = a.decoupled.weight_matrix(), wb = b.decoupled.weight_matrix();
  const Index na = wa.rows(), nb = wb.rows();
  // J¹ = (1 − B̃) J^{1,dec} on the coupled domain, in coupled coordinates
  const Mat j1full = (Mat::Identity(nb, nb) - bb.b) * j1d * a.basis;
  const Mat jp1full = (Mat::Identity(na, na) - ba.b) * jp1d * b.basis;
  cc.ids.j = jd;
  cc.ids.jp = jpd;
  cc.ids.j1 = b.basis.adjoint() * wb * j1full;
  cc.ids.jp1 = a.basis.adjoint() * wa * jp1full;
  cc.range_residual = std::max((b.basis * cc.ids.j1 - j1full).norm() / std::max(1.0, j1full.norm()),
                               (a.basis * cc.ids.jp1 - jp1full).norm() / std::max(1.0, jp1full.norm()));
  // (Iφ)_e = ½ Σ_{v=∂±e} π̃_{v,e} I_v π*_{v,e} φ_e
  auto boundary_id = [&](const VertexCoupling& from, const VertexCoupling& to, bool prime) {
    Mat out = Mat::Zero(to.e_off.back(), from.e_off.back());
    for (Index e = 0; e < g.ne(); ++e)
      for (const auto& [v, k] : from.sides(e)) {
        const Mat& iv = prime ? vids[v].ip : vids[v].i;
        Mat pis = adjoint_matrix(from.bp.trace[v][k], from.bp.vertex[v].boundary().weights(),
                                 from.bp.edge_space[e].weights());
        out.block(to.e_off[e], from.e_off[e], to.bp.edge_space[e].dim(), from.bp.edge_space[e].dim()) +=
            0.5 * to.bp.trace[v][k] * iv * pis;
      }
    return out;
  };
  cc.ids.i = boundary_id(a, b, false);
  cc.ids.ip = boundary_id(b, a, true);
  const Side sa = side_of(a), sb = side_of(b);
  cc.smallness_fwd = opnorm(bb.b * j1d * a.basis, sa.h1(), b.decoupled.h1_gram());
  cc.smallness_bwd = opnorm(ba.b * jp1d * b.basis, sb.h1(), a.decoupled.h1_gram());
  const double slack = 1e-12 * std::max(1.0, cc.delta);
  if (cc.smallness_fwd > cc.delta + slack || cc.smallness_bwd > cc.delta + slack)
    throw Error(Errc::SmallnessFails, "smoothing defects (" + std::to_string(cc.smallness_fwd) + ", " +
                                          std::to_string(cc.smallness_bwd) + ") exceed delta " +
                                          std::to_string(cc.delta));
  cc.gamma_sup = a.gamma_sup;
  cc.gamma_sup_tilde = b.gamma_sup;
  cc.bound = cc.delta * std::max({3.0, cc.gamma_sup + 1.0, cc.gamma_sup_tilde + 1.0});
  cc.report = closeness(sa, sb, cc.ids);
  return cc;
}

}  // namespace glx
