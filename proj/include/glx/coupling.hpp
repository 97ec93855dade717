#pragma once

// Direct sums and couplings of ABVPs along a graph.
//
// A coupled ABVP is realised on an orthonormal basis Y (columns in the
// decoupled coordinates) of its constraint subspace; it is then a plain Abvp
// with unit weights and reuses abvp.hpp unchanged.

#include <algorithm>
#include <string>
#include <vector>

#include "glx/abvp.hpp"
#include "glx/graph.hpp"

namespace glx {

// Sorted multiset comparison; kInf when the sizes differ.
inline double multiset_distance(RVec a, RVec b) {
  if (a.size() != b.size()) return kInf;
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

inline RVec concat(const std::vector<RVec>& parts) {
  Index n = 0;
  for (const auto& p : parts) n += p.size();
  RVec out(n);
  Index k = 0;
  for (const auto& p : parts) {
    out.segment(k, p.size()) = p;
    k += p.size();
  }
  return out;
}

inline RVec drop_near(const RVec& v, double x, double tol) {
  std::vector<double> keep;
  for (Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i) - x) >= tol) keep.push_back(v(i));
  return Eigen::Map<RVec>(keep.data(), static_cast<Index>(keep.size()));
}

// Block-diagonal Γ and h; stays split when every summand is split.
inline Abvp direct_sum(const std::vector<Abvp>& parts) {
  if (parts.size() == 1) return parts.front();
  std::vector<WeightedSpace> hs, gs;
  std::vector<Mat> gam, q;
  bool split = true;
  for (const auto& p : parts) split = split && p.is_split();
  std::vector<Index> sidx;
  Index off = 0;
  for (const auto& p : parts) {
    hs.push_back(p.space());
    gs.push_back(p.boundary());
    gam.push_back(p.gamma_matrix());
    q.push_back(p.form_matrix());
    if (split)
      for (Index i : p.split_indices()) sidx.push_back(i + off);
    off += p.space().dim();
  }
  std::optional<std::vector<Index>> s;
  if (split) s = sidx;
  return Abvp(direct_sum(hs, "decoupled"), direct_sum(gs, "decoupled boundary"), block_diag(gam),
              block_diag(q), s);
}

inline std::vector<Index> offsets(const std::vector<Index>& dims) {
  std::vector<Index> o(dims.size() + 1, 0);
  for (size_t i = 0; i < dims.size(); ++i) o[i + 1] = o[i] + dims[i];
  return o;
}

// Block-diagonal Λ^dec(z) of a family.
inline Mat decoupled_dtn(const std::vector<Abvp>& parts, cplx z) {
  std::vector<Mat> b;
  for (const auto& p : parts) b.push_back(p.dtn(z).m);
  return block_diag(b);
}

// ---- vertex coupling ------------------------------------------------------

struct VertexCouplingBlueprint {
  Graph graph;
  std::vector<Abvp> vertex;                // Π_v by vertex index
  std::vector<WeightedSpace> edge_space;   // 𝒢_e by edge index
  std::vector<std::vector<Mat>> trace;     // trace[v][k] = π_{v,e}, e = incident(v)[k]
};

struct VertexCoupling {
  VertexCouplingBlueprint bp;
  Abvp decoupled;
  Abvp coupled;
  Mat basis;       // Y : coupled coordinates -> ℋ^dec, orthonormal
  Mat iota;        // ι : 𝒢 -> 𝒢^dec
  std::vector<Index> h_off, g_off, e_off;
  double gamma_sup = 0.0;  // sup_v ‖Γ_v‖_{ℋ¹_v -> 𝒢_v}

  // Γ_{v,e} = π_{v,e} Γ_v as a map ℋ^dec -> 𝒢_e.
  Mat edge_trace(Index v, size_t k) const {
    const Graph& g = bp.graph;
    Index e = g.incident(v)[k];
    Mat t = Mat::Zero(bp.edge_space[e].dim(), h_off.back());
    t.middleCols(h_off[v], bp.vertex[v].space().dim()) = bp.trace[v][k] * bp.vertex[v].gamma_matrix();
    return t;
  }
  // sides[e] = {(v, k)} with e = incident(v)[k], v = ∂₋e first
  std::vector<std::pair<Index, size_t>> sides(Index e) const {
    const Graph& g = bp.graph;
    std::vector<std::pair<Index, size_t>> s;
    for (Index v : {g.edge(e).src, g.edge(e).dst}) {
      const auto& inc = g.incident(v);
      s.push_back({v, static_cast<size_t>(std::find(inc.begin(), inc.end(), e) - inc.begin())});
    }
    return s;
  }
};

inline double trace_bound(const Abvp& p) {
  return opnorm(p.gamma_matrix(), p.h1_gram(), p.boundary_weight_matrix());
}

inline void check_blueprint(const VertexCouplingBlueprint& bp) {
  const Graph& g = bp.graph;
  validate(g);
  auto fail = [](const std::string& m) { throw Error(Errc::BlueprintInvalid, m); };
  if (static_cast<Index>(bp.vertex.size()) != g.nv()) fail("one vertex ABVP per vertex required");
  if (static_cast<Index>(bp.edge_space.size()) != g.ne()) fail("one edge space per edge required");
  if (static_cast<Index>(bp.trace.size()) != g.nv()) fail("traces missing");
  for (Index v = 0; v < g.nv(); ++v) {
    const auto& inc = g.incident(v);
    const WeightedSpace& gv = bp.vertex[v].boundary();
    if (bp.trace[v].size() != inc.size())
      fail("vertex '" + g.vertex_id(v) + "': one trace per incident edge required");
    Mat m = Mat::Zero(gv.dim(), gv.dim());
    for (size_t k = 0; k < inc.size(); ++k) {
      const Mat& p = bp.trace[v][k];
      const WeightedSpace& ge = bp.edge_space[inc[k]];
      if (p.rows() != ge.dim() || p.cols() != gv.dim())
        fail("trace (" + g.vertex_id(v) + "," + g.edge(inc[k]).id + ") has the wrong shape");
      m += p.adjoint() * ge.gram() * p;
    }
    if ((m - gv.gram()).norm() > 1e-12 * std::max(1.0, gv.gram().norm()))
      fail("ι_v is not isometric at vertex '" + g.vertex_id(v) + "'");
  }
  for (Index e = 0; e < g.ne(); ++e) {
    auto rank_of = [&](Index v) {
      const auto& inc = g.incident(v);
      size_t k = static_cast<size_t>(std::find(inc.begin(), inc.end(), e) - inc.begin());
      return Mat(bp.trace[v][k] * bp.vertex[v].gamma_matrix());
    };
    Mat a = rank_of(g.edge(e).src), b = rank_of(g.edge(e).dst);
    Mat ab(a.rows(), a.cols() + b.cols());
    ab << a, b;
    Index ra = numerical_rank(a, 1e-10), rb = numerical_rank(b, 1e-10), rab = numerical_rank(ab, 1e-10);
    if (ra != rab || rb != rab) fail("ranges of the two traces differ on edge '" + g.edge(e).id + "'");
  }
}

inline VertexCoupling vertex_couple(const VertexCouplingBlueprint& bp) {
  const Graph& g = bp.graph;
  VertexCoupling vc;
  vc.bp = bp;
  if (g.ne() == 0) {
    // Empty coupling: nothing to identify.
    if (static_cast<Index>(bp.vertex.size()) != g.nv()) throw Error(Errc::BlueprintInvalid, "vertex count");
    vc.decoupled = direct_sum(bp.vertex);
    vc.coupled = vc.decoupled;
    const Index n = vc.decoupled.space().dim(), m = vc.decoupled.boundary().dim();
    vc.basis = Mat::Identity(n, n);
    vc.iota = Mat::Identity(m, m);
    std::vector<Index> hd, gd;
    for (const auto& p : bp.vertex) {
      hd.push_back(p.space().dim());
      gd.push_back(p.boundary().dim());
    }
    vc.h_off = offsets(hd);
    vc.g_off = offsets(gd);
    vc.e_off = {0};
    for (const auto& p : bp.vertex) vc.gamma_sup = std::max(vc.gamma_sup, trace_bound(p));
    return vc;
  }
  check_blueprint(bp);
  vc.decoupled = direct_sum(bp.vertex);
  std::vector<Index> hd, gd, ed;
  for (const auto& p : bp.vertex) {
    hd.push_back(p.space().dim());
    gd.push_back(p.boundary().dim());
    vc.gamma_sup = std::max(vc.gamma_sup, trace_bound(p));
  }
  for (const auto& s : bp.edge_space) ed.push_back(s.dim());
  vc.h_off = offsets(hd);
  vc.g_off = offsets(gd);
  vc.e_off = offsets(ed);
  const Index n = vc.h_off.back(), m = vc.e_off.back();

  Mat c(m, n), gam(m, n);
  for (Index e = 0; e < g.ne(); ++e) {
    auto s = vc.sides(e);
    Mat a = vc.edge_trace(s[0].first, s[0].second), b = vc.edge_trace(s[1].first, s[1].second);
    c.middleRows(vc.e_off[e], ed[e]) = a - b;
    gam.middleRows(vc.e_off[e], ed[e]) = 0.5 * (a + b);
  }
  vc.basis = weighted_kernel(c, vc.decoupled.space().weights());

  vc.iota = Mat::Zero(vc.g_off.back(), m);
  for (Index v = 0; v < g.nv(); ++v) {
    const auto& inc = g.incident(v);
    const RVec& wv = bp.vertex[v].boundary().weights();
    for (size_t k = 0; k < inc.size(); ++k) {
      Index e = inc[k];
      vc.iota.block(vc.g_off[v], vc.e_off[e], gd[v], ed[e]) =
          adjoint_matrix(bp.trace[v][k], wv, bp.edge_space[e].weights());
    }
  }

  const Mat& y = vc.basis;
  vc.coupled = Abvp(WeightedSpace::unit(y.cols(), "coupled"), direct_sum(bp.edge_space, "edges"),
                    gam * y, y.adjoint() * vc.decoupled.form_matrix() * y);
  return vc;
}

// ι* Λ^dec(z) ι
inline Mat coupled_dtn_oracle(const VertexCoupling& vc, cplx z) {
  Mat ld = decoupled_dtn(vc.bp.vertex, z);
  Mat ia = adjoint_matrix(vc.iota, vc.coupled.boundary().weights(), vc.decoupled.boundary().weights());
  return ia * ld * vc.iota;
}

struct CouplingReport {
  Index kernel_dim = 0;
  Index kernel_dim_dec = 0;
  double kernel_fit = 0.0;         // basis-fit residual of ker Γ against ⊕ ker Γ_v
  double dirichlet_union = 0.0;    // multiset distance of Dirichlet spectra
  double solution_decoupling = 0.0;
  double dtn_two_path = 0.0;       // max over z, relative
  double gamma_norm_sq = 0.0;      // ‖Γ‖²
  double gamma_norm_bound = 0.0;   // (1/2) sup ‖Γ_v‖² or sup ‖Γ_e‖²
};

// Residual of fitting the columns of a (W-orthonormal) into span b.
inline double basis_fit(const Mat& a, const Mat& b, const RVec& w) {
  if (a.cols() == 0) return 0.0;
  Mat proj = b * (b.adjoint() * w.cast<cplx>().asDiagonal() * a);
  return spectral_norm(orthonormal_coords(a - proj, RVec::Ones(a.cols()), w));
}

inline Mat decoupled_kernel(const std::vector<Abvp>& parts) {
  std::vector<Mat> b;
  for (const auto& p : parts) {
    const DirichletData& d = p.dirichlet();
    // rescale to the ambient weights so that columns are orthonormal there
    b.push_back(d.embed * d.space.weights().cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal());
  }
  return block_diag(b);
}

inline RVec decoupled_dirichlet_spectrum(const std::vector<Abvp>& parts) {
  std::vector<RVec> s;
  for (const auto& p : parts) s.push_back(p.dirichlet().spectrum);
  return concat(s);
}

inline CouplingReport coupling_report_impl(const Abvp& coupled, const Abvp& decoupled,
                                           const std::vector<Abvp>& parts, const Mat& y,
                                           const Mat& iota, const std::vector<cplx>& zs,
                                           const std::function<Mat(cplx)>& oracle) {
  CouplingReport r;
  const RVec& wd = decoupled.space().weights();
  const DirichletData& dc = coupled.dirichlet();
  Mat kc = y * dc.embed * dc.space.weights().cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
  Mat kd = decoupled_kernel(parts);
  r.kernel_dim = kc.cols();
  r.kernel_dim_dec = kd.cols();
  r.kernel_fit = r.kernel_dim == r.kernel_dim_dec ? std::max(basis_fit(kc, kd, wd), basis_fit(kd, kc, wd)) : kInf;
  r.dirichlet_union = multiset_distance(dc.spectrum, decoupled_dirichlet_spectrum(parts));
  for (cplx z : zs) {
    Mat sc = y * coupled.solution_operator(z).m;
    Mat sd = decoupled.solution_operator(z).m * iota;
    r.solution_decoupling = std::max(r.solution_decoupling, (sc - sd).norm() / std::max(1.0, sd.norm()));
    Mat l1 = coupled.dtn(z).m, l2 = oracle(z);
    r.dtn_two_path = std::max(r.dtn_two_path, (l1 - l2).norm() / std::max(1.0, l2.norm()));
  }
  double g = trace_bound(coupled);
  r.gamma_norm_sq = g * g;
  return r;
}

inline CouplingReport vertex_coupling_report(const VertexCoupling& vc, const std::vector<cplx>& zs) {
  CouplingReport r = coupling_report_impl(vc.coupled, vc.decoupled, vc.bp.vertex, vc.basis, vc.iota, zs,
                                          [&](cplx z) { return coupled_dtn_oracle(vc, z); });
  r.gamma_norm_bound = 0.5 * vc.gamma_sup * vc.gamma_sup;
  return r;
}

// ---- star components --------------------------------------------------------

// Graph ABVPs of the star components, coupled along the edge leaves.
inline VertexCouplingBlueprint star_blueprint(const Graph& g) {
  VertexCouplingBlueprint bp;
  bp.graph = g.with_boundary({});
  for (const Star& s : star_components(g)) {
    bp.vertex.push_back(graph_abvp(s.graph));
    const Index d = g.deg(s.center);
    std::vector<Mat> tr;
    for (Index k = 0; k < d; ++k) {
      Mat p = Mat::Zero(1, d);
      p(0, k) = 1.0;
      tr.push_back(p);
    }
    bp.trace.push_back(tr);
  }
  for (Index e = 0; e < g.ne(); ++e) bp.edge_space.push_back(WeightedSpace::unit(1, g.edge(e).id));
  return bp;
}

// Λ_v(z) = (1 - z) I - (d (1 - z))^{-1} 𝟙
inline Mat star_dtn_closed(Index d, cplx z) {
  return (1.0 - z) * Mat::Identity(d, d) - Mat::Constant(d, d, 1.0 / (static_cast<double>(d) * (1.0 - z)));
}

// Subdivision/line-graph relation Λ(z) = α(z) + β(z)(1 - Δ_LG) fitted from ι*Λ^dec ι.
struct LineGraphReport {
  Index r = 0;
  std::vector<cplx> z, alpha, beta;
  double affine_residual = 0.0;  // max relative Frobenius residual of the affine fit
  // α ≈ a1 (1 - z) + a2 / (1 - z), β ≈ b / (1 - z)
  double a1 = 0.0, a2 = 0.0, b = 0.0;
  double model_residual = 0.0;
  double printed_alpha_dev = 0.0;  // max |α - 2(1 - z)|
  double printed_beta_dev = 0.0;   // max |β + (2r - 2)/((1 - z) r)|
  double oracle_map_residual = 0.0;    // multiset distance, eigenvalue 1 removed
  double forward_map_residual = 0.0;   // max dist(μ(λ), spec Δ_LG)
  double printed_map_residual = 0.0;   // same for 1 - r/(r-1) (1-λ)²
  double beta_decay = 0.0;             // max |β(±1e4)| / |β(-1)|
  RVec spec_sg, spec_lg;
};

inline LineGraphReport line_graph_dtn_check(const Graph& g, const std::vector<cplx>& zs) {
  auto rd = regular_degree(g);
  if (!rd || *rd < 2) throw Error(Errc::NotRegular, "graph is not r-regular with r >= 2");
  LineGraphReport rep;
  rep.r = *rd;
  const double r = static_cast<double>(rep.r);
  VertexCoupling vc = vertex_couple(star_blueprint(g));
  Graph lg = line_graph(g);
  Mat dl = normalized_laplacian(lg).m;
  const Index m = dl.rows();
  Mat one_minus = Mat::Identity(m, m) - dl;

  auto fit = [&](cplx z, double* res) {
    Mat lam = coupled_dtn_oracle(vc, z);
    const Mat id = Mat::Identity(m, m);
    Eigen::Matrix2cd a;
    Eigen::Vector2cd rhs;
    auto ip = [](const Mat& x, const Mat& y) { return (x.conjugate().cwiseProduct(y)).sum(); };
    a << ip(id, id), ip(id, one_minus), ip(one_minus, id), ip(one_minus, one_minus);
    rhs << ip(id, lam), ip(one_minus, lam);
    Eigen::Vector2cd ab = a.fullPivLu().solve(rhs);
    if (res) *res = (lam - ab(0) * id - ab(1) * one_minus).norm() / std::max(1.0, lam.norm());
    return ab;
  };

  // rows: [ (1-z)  1/(1-z) ] (a1, a2) = α ; b/(1-z) = β
  Eigen::MatrixXd ma(2 * zs.size(), 2);
  Eigen::VectorXd va(2 * zs.size()), mb(2 * zs.size()), vb(2 * zs.size());
  for (size_t i = 0; i < zs.size(); ++i) {
    cplx z = zs[i];
    double res = 0.0;
    Eigen::Vector2cd ab = fit(z, &res);
    rep.z.push_back(z);
    rep.alpha.push_back(ab(0));
    rep.beta.push_back(ab(1));
    rep.affine_residual = std::max(rep.affine_residual, res);
    rep.printed_alpha_dev = std::max(rep.printed_alpha_dev, std::abs(ab(0) - 2.0 * (1.0 - z)));
    rep.printed_beta_dev = std::max(rep.printed_beta_dev, std::abs(ab(1) + (2 * r - 2) / ((1.0 - z) * r)));
    cplx u = 1.0 - z, iu = 1.0 / u;
    ma(2 * i, 0) = u.real();
    ma(2 * i, 1) = iu.real();
    ma(2 * i + 1, 0) = u.imag();
    ma(2 * i + 1, 1) = iu.imag();
    va(2 * i) = ab(0).real();
    va(2 * i + 1) = ab(0).imag();
    mb(2 * i) = iu.real();
    mb(2 * i + 1) = iu.imag();
    vb(2 * i) = ab(1).real();
    vb(2 * i + 1) = ab(1).imag();
  }
  Eigen::Vector2d a12 = ma.colPivHouseholderQr().solve(va);
  rep.a1 = a12(0);
  rep.a2 = a12(1);
  rep.b = mb.dot(vb) / mb.squaredNorm();
  rep.model_residual = std::max((ma * a12 - va).cwiseAbs().maxCoeff(), (mb * rep.b - vb).cwiseAbs().maxCoeff());

  rep.spec_sg = spectrum(normalized_laplacian(subdivision(g)));
  rep.spec_lg = spectrum(normalized_laplacian(lg));
  std::vector<double> pred;
  for (Index i = 0; i < rep.spec_lg.size(); ++i) {
    double arg = (rep.b * (rep.spec_lg(i) - 1.0) - rep.a2) / rep.a1;
    if (arg < -1e-9) continue;
    double s = std::sqrt(std::max(arg, 0.0));
    pred.push_back(1.0 - s);
    pred.push_back(1.0 + s);
  }
  RVec pv = Eigen::Map<RVec>(pred.data(), static_cast<Index>(pred.size()));
  rep.oracle_map_residual = multiset_distance(drop_near(pv, 1.0, 1e-6), drop_near(rep.spec_sg, 1.0, 1e-6));
  auto nearest = [](const RVec& s, double x) {
    double d = kInf;
    for (Index i = 0; i < s.size(); ++i) d = std::min(d, std::abs(s(i) - x));
    return d;
  };
  RVec sg1 = drop_near(rep.spec_sg, 1.0, 1e-6);
  for (Index i = 0; i < sg1.size(); ++i) {
    double t = (1.0 - sg1(i)) * (1.0 - sg1(i));
    rep.forward_map_residual = std::max(rep.forward_map_residual, nearest(rep.spec_lg, 1.0 + (rep.a1 * t + rep.a2) / rep.b));
    rep.printed_map_residual = std::max(rep.printed_map_residual, nearest(rep.spec_lg, 1.0 - r / (r - 1.0) * t));
  }
  const double b0 = std::abs(fit(-1.0, nullptr)(1));
  rep.beta_decay = std::max(std::abs(fit(-1e4, nullptr)(1)), std::abs(fit(1e4, nullptr)(1))) / b0;
  return rep;
}

// ---- edge coupling ----------------------------------------------------------

struct EdgeCouplingBlueprint {
  Graph graph;
  std::vector<Abvp> edge;                        // Π_e by edge index
  std::vector<std::vector<Index>> minus_idx;     // coordinates of 𝒢_{e,∂₋e} in 𝒢_e
  std::vector<std::vector<Index>> plus_idx;      // coordinates of 𝒢_{e,∂₊e} in 𝒢_e
  std::vector<Mat> vertex_subspace;              // basis of 𝒢_v in 𝒢_v^max coordinates
};

// Coordinates of 𝒢^dec making up 𝒢_v^max, in incidence order.
inline std::vector<Index> max_coords(const EdgeCouplingBlueprint& bp, const std::vector<Index>& goff, Index v) {
  std::vector<Index> out;
  for (Index e : bp.graph.incident(v)) {
    const auto& side = bp.graph.is_source(e, v) ? bp.minus_idx[e] : bp.plus_idx[e];
    for (Index i : side) out.push_back(goff[e] + i);
  }
  return out;
}

struct EdgeCoupling {
  EdgeCouplingBlueprint bp;
  Abvp decoupled;
  Abvp coupled;
  Mat basis;  // Y : coupled coordinates -> ℋ^dec
  Mat iota;   // ι : 𝒢 = ⊕𝒢_v -> 𝒢^dec
  std::vector<Index> ge_off;  // 𝒢_e offsets in 𝒢^dec
  std::vector<Index> gv_off;  // 𝒢_v offsets in 𝒢
  double gamma_sup = 0.0;
};

inline void check_blueprint(const EdgeCouplingBlueprint& bp, const std::vector<Index>& goff) {
  const Graph& g = bp.graph;
  validate(g);
  auto fail = [](const std::string& m) { throw Error(Errc::BlueprintInvalid, m); };
  if (static_cast<Index>(bp.edge.size()) != g.ne() || static_cast<Index>(bp.minus_idx.size()) != g.ne() ||
      static_cast<Index>(bp.plus_idx.size()) != g.ne())
    fail("one edge ABVP and splitting per edge required");
  if (static_cast<Index>(bp.vertex_subspace.size()) != g.nv()) fail("one vertex subspace per vertex required");
  for (Index e = 0; e < g.ne(); ++e) {
    std::vector<Index> all = bp.minus_idx[e];
    all.insert(all.end(), bp.plus_idx[e].begin(), bp.plus_idx[e].end());
    std::sort(all.begin(), all.end());
    bool ok = static_cast<Index>(all.size()) == bp.edge[e].boundary().dim();
    for (size_t i = 0; ok && i < all.size(); ++i) ok = all[i] == static_cast<Index>(i);
    if (!ok) fail("splitting blocks do not partition the coordinates of 𝒢_e for edge '" + g.edge(e).id + "'");
  }
  RVec wg = direct_sum([&] {
              std::vector<WeightedSpace> s;
              for (const auto& p : bp.edge) s.push_back(p.boundary());
              return s;
            }())
                .weights();
  for (Index v = 0; v < g.nv(); ++v) {
    auto mc = max_coords(bp, goff, v);
    const Mat& b = bp.vertex_subspace[v];
    if (b.rows() != static_cast<Index>(mc.size()))
      fail("vertex subspace at '" + g.vertex_id(v) + "' has the wrong ambient dimension");
    RVec w(static_cast<Index>(mc.size()));
    for (size_t i = 0; i < mc.size(); ++i) w(static_cast<Index>(i)) = wg(mc[i]);
    Mat gram = b.adjoint() * w.cast<cplx>().asDiagonal() * b;
    if ((gram - Mat::Identity(b.cols(), b.cols())).norm() > 1e-12 * std::max<double>(1.0, static_cast<double>(b.cols())))
      fail("vertex subspace basis at '" + g.vertex_id(v) + "' is not orthonormal");
  }
}

inline EdgeCoupling edge_couple(const EdgeCouplingBlueprint& bp) {
  const Graph& g = bp.graph;
  EdgeCoupling ec;
  ec.bp = bp;
  std::vector<Index> ed, vd;
  for (const auto& p : bp.edge) ed.push_back(p.boundary().dim());
  ec.ge_off = offsets(ed);
  check_blueprint(bp, ec.ge_off);
  ec.decoupled = direct_sum(bp.edge);
  for (const auto& p : bp.edge) ec.gamma_sup = std::max(ec.gamma_sup, trace_bound(p));
  for (const auto& b : bp.vertex_subspace) vd.push_back(b.cols());
  ec.gv_off = offsets(vd);
  const Index m = ec.ge_off.back();
  ec.iota = Mat::Zero(m, ec.gv_off.back());
  for (Index v = 0; v < g.nv(); ++v) {
    auto mc = max_coords(bp, ec.ge_off, v);
    for (size_t i = 0; i < mc.size(); ++i)
      ec.iota.block(mc[i], ec.gv_off[v], 1, vd[v]) = bp.vertex_subspace[v].row(static_cast<Index>(i));
  }
  const RVec& wg = ec.decoupled.boundary().weights();
  Mat ia = ec.iota.adjoint() * wg.cast<cplx>().asDiagonal();  // ι*
  const Mat& gd = ec.decoupled.gamma_matrix();
  Mat c = (Mat::Identity(m, m) - ec.iota * ia) * gd;
  ec.basis = weighted_kernel(c, ec.decoupled.space().weights());
  const Mat& y = ec.basis;
  ec.coupled = Abvp(WeightedSpace::unit(y.cols(), "coupled"), WeightedSpace::unit(ec.iota.cols(), "vertex spaces"),
                    ia * gd * y, y.adjoint() * ec.decoupled.form_matrix() * y);
  return ec;
}

inline Mat coupled_dtn_oracle(const EdgeCoupling& ec, cplx z) {
  Mat ld = decoupled_dtn(ec.bp.edge, z);
  Mat ia = ec.iota.adjoint() * ec.decoupled.boundary().weights().cast<cplx>().asDiagonal();
  return ia * ld * ec.iota;
}

inline CouplingReport edge_coupling_report(const EdgeCoupling& ec, const std::vector<cplx>& zs) {
  CouplingReport r = coupling_report_impl(ec.coupled, ec.decoupled, ec.bp.edge, ec.basis, ec.iota, zs,
                                          [&](cplx z) { return coupled_dtn_oracle(ec, z); });
  r.gamma_norm_bound = ec.gamma_sup * ec.gamma_sup;
  return r;
}

// Diagonal {(η, …, η)} of the common fibre at v, orthonormal in 𝒢_v^max.
inline Mat standard_vertex_subspace(const std::vector<RVec>& fibres) {
  if (fibres.empty()) throw Error(Errc::FibreMismatch, "vertex without incident edges");
  const RVec& w0 = fibres.front();
  for (const auto& w : fibres)
    if (w.size() != w0.size() || (w - w0).cwiseAbs().maxCoeff() > 0.0)
      throw Error(Errc::FibreMismatch, "incident fibres differ in dimension or weights");
  const Index d = static_cast<Index>(fibres.size()), k = w0.size();
  Mat b = Mat::Zero(d * k, k);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < k; ++j) b(i * k + j, j) = s / std::sqrt(w0(j));
  return b;
}

inline std::vector<RVec> side_fibres(const EdgeCouplingBlueprint& bp, Index v) {
  std::vector<RVec> out;
  for (Index e : bp.graph.incident(v)) {
    const auto& side = bp.graph.is_source(e, v) ? bp.minus_idx[e] : bp.plus_idx[e];
    RVec w(static_cast<Index>(side.size()));
    for (size_t i = 0; i < side.size(); ++i) w(static_cast<Index>(i)) = bp.edge[e].boundary().weights()(side[i]);
    out.push_back(w);
  }
  return out;
}

inline void use_standard_subspaces(EdgeCouplingBlueprint& bp) {
  bp.vertex_subspace.clear();
  for (Index v = 0; v < bp.graph.nv(); ++v) {
    try {
      bp.vertex_subspace.push_back(standard_vertex_subspace(side_fibres(bp, v)));
    } catch (const Error& ex) {
      throw Error(Errc::FibreMismatch, "vertex '" + bp.graph.vertex_id(v) + "': " + ex.what());
    }
  }
}

// Averaged DtN (Λφ)(v) = (1/deg v) Σ_{e∈E_v} (Λ_e φ_e)(v) on value coordinates
// ⊕_v 𝒦_{v,0}. Each block dtn[e] acts on 𝒢_e with the side coordinates given.
inline Mat averaged_dtn(const Graph& g, const std::vector<Mat>& dtn, const std::vector<std::vector<Index>>& minus,
                        const std::vector<std::vector<Index>>& plus, std::vector<Index>* value_off = nullptr) {
  std::vector<Index> kd(g.nv(), 0);
  for (Index v = 0; v < g.nv(); ++v) {
    if (g.deg(v) == 0) throw Error(Errc::FibreMismatch, "isolated vertex");
    Index e = g.incident(v)[0];
    kd[v] = static_cast<Index>((g.is_source(e, v) ? minus[e] : plus[e]).size());
  }
  auto off = offsets(kd);
  Mat out = Mat::Zero(off.back(), off.back());
  for (Index v = 0; v < g.nv(); ++v)
    for (Index e : g.incident(v)) {
      const auto& rows = g.is_source(e, v) ? minus[e] : plus[e];
      for (Index u : {g.edge(e).src, g.edge(e).dst}) {
        const auto& cols = g.is_source(e, u) ? minus[e] : plus[e];
        if (static_cast<Index>(rows.size()) != kd[v] || static_cast<Index>(cols.size()) != kd[u])
          throw Error(Errc::FibreMismatch, "fibre dimension changes along edge '" + g.edge(e).id + "'");
        for (Index i = 0; i < kd[v]; ++i)
          for (Index j = 0; j < kd[u]; ++j)
            out(off[v] + i, off[u] + j) += dtn[e](rows[i], cols[j]) / static_cast<double>(g.deg(v));
      }
    }
  if (value_off) *value_off = off;
  return out;
}

// value = U · (standard basis coefficient), U = diag(1/√(deg v · w_j)).
inline RVec standard_value_scale(const Graph& g, const std::vector<RVec>& model_weights) {
  std::vector<RVec> parts;
  for (Index v = 0; v < g.nv(); ++v)
    parts.push_back((static_cast<double>(g.deg(v)) * model_weights[v]).cwiseSqrt().cwiseInverse());
  return concat(parts);
}

inline Mat averaged_dtn(const EdgeCoupling& ec, cplx z) {
  std::vector<Mat> d;
  for (const auto& p : ec.bp.edge) d.push_back(p.dtn(z).m);
  return averaged_dtn(ec.bp.graph, d, ec.bp.minus_idx, ec.bp.plus_idx);
}

inline std::vector<RVec> model_weights(const EdgeCouplingBlueprint& bp) {
  std::vector<RVec> out;
  for (Index v = 0; v < bp.graph.nv(); ++v) out.push_back(side_fibres(bp, v).front());
  return out;
}

// Π_e = (id, ℂ², |f₂ - f₁|², ℂ², ℂ²), standard vertex spaces.
inline EdgeCouplingBlueprint trivial_edge_blueprint(const Graph& g) {
  validate(g);
  EdgeCouplingBlueprint bp;
  bp.graph = g.with_boundary({});
  Mat q(2, 2);
  q << 1.0, -1.0, -1.0, 1.0;
  for (Index e = 0; e < g.ne(); ++e) {
    bp.edge.push_back(Abvp::trivial(WeightedSpace::unit(2, g.edge(e).id), q));
    bp.minus_idx.push_back({0});
    bp.plus_idx.push_back({1});
  }
  use_standard_subspaces(bp);
  return bp;
}

// ---- trivial vertex ABVPs -------------------------------------------------

struct TrivialVertexCoupling {
  EdgeCoupling edge;    // Π
  Abvp coupled;         // Π̃ on ⊕ℋ_e ⊕ ⊕𝒢_v
  Mat basis;            // Ỹ : Π̃ coordinates -> ℋ_dec ⊕ 𝒢
  Mat u1;               // U¹ : Π coordinates -> Π̃ coordinates
  Mat t;                // T : 𝒢 -> 𝒢̃ (identity)
};

struct TrivialVertexReport {
  double intertwining = 0.0;   // ‖TΓ - Γ̃U¹‖ (matrix, relative)
  double form_matrix = 0.0;    // ‖U¹ᴴ Q̃ U¹ - Q‖ (relative)
  double form_random = 0.0;    // max |h̃(U¹f) - h(f)| / ‖f‖²_{ℋ¹}
  double range_residual = 0.0; // U¹ lands in ℋ̃¹
  double u1_bound = 0.0;       // ‖U¹‖² vs 1 + ‖Γ^ext‖
  Index kernel_dim = 0, kernel_dim_tilde = 0;
  double norm_change_spectrum = 0.0;  // spec H̃^Neu vs generalised spec (Q, I + ΓᴴΓ)
};

inline TrivialVertexCoupling trivial_vertex_couple(const EdgeCouplingBlueprint& bp) {
  TrivialVertexCoupling tv;
  tv.edge = edge_couple(bp);
  const EdgeCoupling& ec = tv.edge;
  const Index n = ec.decoupled.space().dim(), k = ec.iota.cols();
  RVec wt(n + k);
  wt << ec.decoupled.space().weights(), RVec::Ones(k);
  Mat c(ec.iota.rows(), n + k);
  c << ec.decoupled.gamma_matrix(), -ec.iota;
  tv.basis = weighted_kernel(c, wt);
  const Mat& yt = tv.basis;
  Mat qt = Mat::Zero(n + k, n + k);
  qt.topLeftCorner(n, n) = ec.decoupled.form_matrix();
  Mat gt(k, n + k);
  gt << Mat::Zero(k, n), Mat::Identity(k, k);
  tv.coupled = Abvp(WeightedSpace::unit(yt.cols(), "vertex-edge coupled"), WeightedSpace::unit(k, "vertex spaces"),
                    gt * yt, yt.adjoint() * qt * yt);
  Mat lifted(n + k, ec.basis.cols());
  lifted << ec.basis, ec.coupled.gamma_matrix();
  tv.u1 = yt.adjoint() * wt.cast<cplx>().asDiagonal() * lifted;
  tv.t = Mat::Identity(k, k);
  return tv;
}

inline TrivialVertexReport trivial_vertex_report(const TrivialVertexCoupling& tv, CaseRng& rng, int samples = 100) {
  TrivialVertexReport r;
  const Abvp& p = tv.edge.coupled;
  const Abvp& pt = tv.coupled;
  const Mat& u1 = tv.u1;
  Mat lhs = tv.t * p.gamma_matrix(), rhs = pt.gamma_matrix() * u1;
  r.intertwining = (lhs - rhs).norm() / std::max(1.0, lhs.norm());
  Mat qq = u1.adjoint() * pt.form_matrix() * u1;
  r.form_matrix = (qq - p.form_matrix()).norm() / std::max(1.0, p.form_matrix().norm());
  const Index n = tv.edge.decoupled.space().dim();
  Mat lifted(tv.basis.rows(), u1.cols());
  lifted << tv.edge.basis, p.gamma_matrix();
  RVec wt(tv.basis.rows());
  wt << tv.edge.decoupled.space().weights(), RVec::Ones(tv.basis.rows() - n);
  r.range_residual = spectral_norm(orthonormal_coords(tv.basis * u1 - lifted, RVec::Ones(u1.cols()), wt));
  Mat h1 = p.h1_gram(), h1t = pt.h1_gram();
  for (int i = 0; i < samples; ++i) {
    Vec f = rng.cvec(p.space().dim());
    Vec uf = u1 * f;
    double a = std::abs(uf.dot(pt.form_matrix() * uf) - f.dot(p.form_matrix() * f));
    r.form_random = std::max(r.form_random, a / std::abs(f.dot(h1 * f)));
  }
  double gext = opnorm(p.gamma_matrix(), h1, Mat::Identity(p.boundary().dim(), p.boundary().dim()));
  double nu = opnorm(u1, h1, h1t);
  r.u1_bound = nu * nu / (1.0 + gext);
  r.kernel_dim = p.space().dim() - numerical_rank(p.form_matrix(), 1e-10);
  r.kernel_dim_tilde = pt.space().dim() - numerical_rank(pt.form_matrix(), 1e-10);
  // Π̃ carries the norm ‖x‖² + ‖Γx‖² on the Π coordinates.
  Mat m = Mat::Identity(p.space().dim(), p.space().dim()) + p.gamma_matrix().adjoint() * p.gamma_matrix();
  Mat li = sqrt_psd(m).inverse();
  RVec gen = eigh_hermitian(li * p.form_matrix() * li).values;
  r.norm_change_spectrum = multiset_distance(gen, pt.neumann_spectrum());
  return r;
}

}  // namespace glx
