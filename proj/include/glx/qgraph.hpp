#pragma once

// Vector-valued quantum graphs: −f″ + K_e f on edges of length ℓ_e, vertex
// conditions f(v) ∈ 𝒢_v, f⃗′(v) ⊥ 𝒢_v. Fibres carry unit weights.
// Edge boundary coordinates: f(∂₋e) first (t = 0), then f(∂₊e) (t = ℓ_e).

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "glx/coupling.hpp"
#include "glx/graph.hpp"
#include "glx/hilbert.hpp"
#include "glx/rng.hpp"
#include "glx/secular.hpp"

namespace glx {

// c(w) = cos √w, s(w) = sin √w / √w; both entire, no branch choice needed.
inline cplx entire_c(cplx w) {
  if (std::abs(w) < 0.25) {
    cplx term = 1.0, sum = 1.0;
    for (int k = 1; k < 12; ++k) {
      term *= -w / (static_cast<double>(2 * k - 1) * static_cast<double>(2 * k));
      sum += term;
    }
    return sum;
  }
  return std::cos(std::sqrt(w));
}

inline cplx entire_s(cplx w) {
  if (std::abs(w) < 0.25) {
    cplx term = 1.0, sum = 1.0;
    for (int k = 1; k < 12; ++k) {
      term *= -w / (static_cast<double>(2 * k) * static_cast<double>(2 * k + 1));
      sum += term;
    }
    return sum;
  }
  const cplx r = std::sqrt(w);
  return std::sin(r) / r;
}

inline Mat interval_dtn(double len, cplx z) {
  if (!(len > 0)) throw Error(Errc::InputError, "edge length must be positive");
  const cplx w = len * len * z;
  const cplx s = entire_s(w);
  if (std::abs(s) <= 1e-12) {
    const long n = std::lround(std::sqrt(std::abs(w)) / std::numbers::pi);
    throw Error(Errc::DirichletPole, "z is the interval Dirichlet eigenvalue n=" + std::to_string(n));
  }
  const cplx c = entire_c(w), f = 1.0 / (len * s);
  Mat m(2, 2);
  m << f * c, -f, -f, f * c;
  return m;
}

// Λ_e(z) = Λ₀(z − K) on 𝒦 ⊕ 𝒦.
inline Mat edge_dtn(double len, const Mat& k, cplx z) {
  const Index d = k.rows();
  const WeightedSpace fib = WeightedSpace::unit(d);
  auto entry = [&](bool diag) {
    return matfunc(LinOp(fib, fib, k), [&](double kappa) {
             const cplx w = len * len * (z - kappa);
             const cplx s = entire_s(w);
             if (std::abs(s) <= 1e-12) {
               const long n = std::lround(std::sqrt(std::abs(w)) / std::numbers::pi);
               throw Error(Errc::DirichletPole,
                           "pole (n=" + std::to_string(n) + ", kappa=" + std::to_string(kappa) + ")");
             }
             return (diag ? entire_c(w) : cplx(-1.0)) / (len * s);
           }).m;
  };
  Mat c = entry(true), s = entry(false);
  Mat out(2 * d, 2 * d);
  out << c, s, s, c;
  return out;
}

struct QuantumGraph {
  Graph graph;
  std::vector<double> length;  // by edge index
  std::vector<Mat> fibre;      // K_e, Hermitian
  bool standard = true;
  std::vector<Mat> vertex_space;  // explicit bases in 𝒢_v^max (incidence order), used when !standard

  Index fibre_dim(Index e) const { return fibre[e].rows(); }
  double min_length() const { return *std::min_element(length.begin(), length.end()); }
};

inline void validate(const QuantumGraph& qg) {
  const Graph& g = qg.graph;
  validate(g);
  if (g.ne() == 0) throw Error(Errc::InputError, "quantum graph without edges");
  if (static_cast<Index>(qg.length.size()) != g.ne() || static_cast<Index>(qg.fibre.size()) != g.ne())
    throw Error(Errc::InputError, "one length and one fibre operator per edge required");
  for (Index e = 0; e < g.ne(); ++e) {
    if (!(qg.length[e] > 0) || !std::isfinite(qg.length[e]))
      throw Error(Errc::InputError, "edge '" + g.edge(e).id + "': length must be positive");
    const Mat& k = qg.fibre[e];
    if (k.rows() != k.cols() || k.rows() == 0)
      throw Error(Errc::InputError, "edge '" + g.edge(e).id + "': K must be square and nonempty");
    if ((k - k.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(Errc::NotSelfAdjoint, "edge '" + g.edge(e).id + "': K is not Hermitian");
  }
  for (Index v = 0; v < g.nv(); ++v) {
    if (g.deg(v) == 0) throw Error(Errc::IsolatedVertex, "vertex '" + g.vertex_id(v) + "'");
    if (qg.standard) {
      const Mat& k0 = qg.fibre[g.incident(v)[0]];
      for (Index e : g.incident(v)) {
        const Mat& k = qg.fibre[e];
        if (k.rows() != k0.rows() || (k - k0).cwiseAbs().maxCoeff() > 1e-12)
          throw Error(Errc::FibreMismatch, "standard vertex '" + g.vertex_id(v) + "' needs equal fibre data");
      }
    }
  }
  if (!qg.standard) {
    if (static_cast<Index>(qg.vertex_space.size()) != g.nv())
      throw Error(Errc::InputError, "one vertex space per vertex required");
    for (Index v = 0; v < g.nv(); ++v) {
      Index m = 0;
      for (Index e : g.incident(v)) m += qg.fibre_dim(e);
      const Mat& b = qg.vertex_space[v];
      if (b.rows() != m)
        throw Error(Errc::InputError, "vertex space at '" + g.vertex_id(v) + "' has the wrong ambient dimension");
      if ((b.adjoint() * b - Mat::Identity(b.cols(), b.cols())).norm() > 1e-10)
        throw Error(Errc::InputError, "vertex space basis at '" + g.vertex_id(v) + "' is not orthonormal");
    }
  }
}

inline std::vector<std::vector<Index>> side_coords(const QuantumGraph& qg, bool plus) {
  std::vector<std::vector<Index>> out;
  for (Index e = 0; e < qg.graph.ne(); ++e) {
    std::vector<Index> s;
    for (Index i = 0; i < qg.fibre_dim(e); ++i) s.push_back(plus ? qg.fibre_dim(e) + i : i);
    out.push_back(s);
  }
  return out;
}

// Vertex bases in 𝒢_v^max, standard ones built from the common fibre.
inline std::vector<Mat> vertex_bases(const QuantumGraph& qg) {
  if (!qg.standard) return qg.vertex_space;
  std::vector<Mat> out;
  for (Index v = 0; v < qg.graph.nv(); ++v) {
    std::vector<RVec> fib;
    for (Index e : qg.graph.incident(v)) fib.push_back(RVec::Ones(qg.fibre_dim(e)));
    out.push_back(standard_vertex_subspace(fib));
  }
  return out;
}

struct QgLayout {
  std::vector<Index> ge_off;  // 𝒢_e offsets in 𝒢^dec
  std::vector<Index> gv_off;  // 𝒢_v offsets in 𝒢
  Mat iota;                   // 𝒢 -> 𝒢^dec, isometric
};

inline QgLayout qg_layout(const QuantumGraph& qg) {
  validate(qg);
  const Graph& g = qg.graph;
  QgLayout l;
  std::vector<Index> ed, vd;
  for (Index e = 0; e < g.ne(); ++e) ed.push_back(2 * qg.fibre_dim(e));
  auto bases = vertex_bases(qg);
  for (const auto& b : bases) vd.push_back(b.cols());
  l.ge_off = offsets(ed);
  l.gv_off = offsets(vd);
  l.iota = Mat::Zero(l.ge_off.back(), l.gv_off.back());
  for (Index v = 0; v < g.nv(); ++v) {
    Index r = 0;
    for (Index e : g.incident(v)) {
      const Index d = qg.fibre_dim(e), base = l.ge_off[e] + (g.is_source(e, v) ? 0 : d);
      l.iota.block(base, l.gv_off[v], d, vd[v]) = bases[v].middleRows(r, d);
      r += d;
    }
  }
  return l;
}

inline Mat decoupled_qg_dtn(const QuantumGraph& qg, cplx z) {
  std::vector<Mat> b;
  for (Index e = 0; e < qg.graph.ne(); ++e) b.push_back(edge_dtn(qg.length[e], qg.fibre[e], z));
  return block_diag(b);
}

// ι^H Λ^dec(z) ι in orthonormal vertex-basis coordinates.
inline Mat qg_dtn_basis(const QuantumGraph& qg, const QgLayout& l, cplx z) {
  return l.iota.adjoint() * decoupled_qg_dtn(qg, z) * l.iota;
}

inline Mat qg_dtn_basis(const QuantumGraph& qg, cplx z) { return qg_dtn_basis(qg, qg_layout(qg), z); }

// Standard: the averaged DtN on ⊕_v 𝒦_v with vertex weights deg v.
// Otherwise the basis form on a unit-weight space.
inline LinOp qg_dtn(const QuantumGraph& qg, cplx z) {
  if (!qg.standard) {
    Mat m = qg_dtn_basis(qg, z);
    WeightedSpace s = WeightedSpace::unit(m.rows(), "vertex spaces");
    return LinOp(s, s, m);
  }
  validate(qg);
  const Graph& g = qg.graph;
  std::vector<Mat> d;
  for (Index e = 0; e < g.ne(); ++e) d.push_back(edge_dtn(qg.length[e], qg.fibre[e], z));
  Mat a = averaged_dtn(g, d, side_coords(qg, false), side_coords(qg, true));
  std::vector<RVec> w;
  for (Index v = 0; v < g.nv(); ++v)
    w.push_back(RVec::Constant(qg.fibre_dim(g.incident(v)[0]), static_cast<double>(g.deg(v))));
  WeightedSpace s(concat(w), "vertex values");
  return LinOp(s, s, a);
}

struct DirichletPoint {
  double at;
  Index edge;
  Index n;
  double kappa;
  Vec eta;  // unit eigenvector of K_e
};

inline std::vector<DirichletPoint> dirichlet_points(const QuantumGraph& qg, double lmin, double lmax) {
  std::vector<DirichletPoint> out;
  for (Index e = 0; e < qg.graph.ne(); ++e) {
    Eigh ek = eigh_hermitian(qg.fibre[e]);
    const double l = qg.length[e];
    for (Index j = 0; j < ek.values.size(); ++j)
      for (Index n = 1;; ++n) {
        const double at = std::pow(static_cast<double>(n) * std::numbers::pi / l, 2) + ek.values(j);
        if (at > lmax) break;
        if (at >= lmin) out.push_back({at, e, n, ek.values(j), ek.vectors.col(j)});
      }
  }
  std::sort(out.begin(), out.end(), [](const DirichletPoint& a, const DirichletPoint& b) { return a.at < b.at; });
  return out;
}

inline std::vector<double> dirichlet_spectrum(const QuantumGraph& qg, double lmax) {
  validate(qg);
  std::vector<double> out;
  for (const auto& p : dirichlet_points(qg, -kInf, lmax)) out.push_back(p.at);
  return out;
}

// Outward derivatives of √(2/ℓ) sin(nπt/ℓ) η at both ends, in 𝒢^dec.
inline Vec dirichlet_flux(const QuantumGraph& qg, const QgLayout& l, const DirichletPoint& p) {
  Vec f = Vec::Zero(l.ge_off.back());
  const double len = qg.length[p.edge], k = static_cast<double>(p.n) * std::numbers::pi / len;
  const double amp = std::sqrt(2.0 / len) * k;
  const Index d = qg.fibre_dim(p.edge), o = l.ge_off[p.edge];
  f.segment(o, d) = -amp * p.eta;
  f.segment(o + d, d) = (p.n % 2 ? -amp : amp) * p.eta;
  return f;
}

inline SpectrumReport neumann_spectrum(const QuantumGraph& qg, const SecularOptions& opt) {
  const QgLayout l = qg_layout(qg);
  const double margin = opt.grid_step() + opt.half_width() + 1.0;
  std::vector<PoleData> poles;
  for (const auto& p : dirichlet_points(qg, opt.lo - margin, opt.hi + margin))
    poles.push_back({p.at, Mat(l.iota.adjoint() * dirichlet_flux(qg, l, p)), 1});
  return secular_spectrum([&](double lam) { return qg_dtn_basis(qg, l, cplx(lam, 0.0)); }, poles, opt);
}

inline std::vector<DispersionRow> qg_dispersion(const QuantumGraph& qg, double lo, double hi, double step) {
  const QgLayout l = qg_layout(qg);
  return dispersion([&](double lam) { return qg_dtn_basis(qg, l, cplx(lam, 0.0)); }, lo, hi, step);
}

// Unit lengths, standard vertices, common fibre K₀: λ is an eigenvalue off the
// Dirichlet points iff 1 − cos√(λ − κ) ∈ spec Δ_G for some κ ∈ spec K₀.
inline SpectrumReport equilateral_spectrum(const Graph& g, const Mat& k0, const SecularOptions& opt) {
  if (!(opt.lo < opt.hi)) throw Error(Errc::InputError, "window needs lo < hi");
  if (num_components(g) != 1) throw Error(Errc::InvalidGraph, "equilateral spectrum needs a connected graph");
  if ((k0 - k0.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw Error(Errc::NotSelfAdjoint, "K0 is not Hermitian");
  const RVec mu = spectrum(normalized_laplacian(g));
  const RVec kap = eigh_hermitian(k0).values;
  const double hw = opt.half_width(), pi = std::numbers::pi;
  SpectrumReport rep;
  rep.method = "equilateral";
  std::vector<double> dir;
  for (Index j = 0; j < kap.size(); ++j)
    for (Index n = 1; std::pow(n * pi, 2) + kap(j) <= opt.hi + hw; ++n) dir.push_back(std::pow(n * pi, 2) + kap(j));
  rep.unresolved = pole_windows(dir, opt.lo, opt.hi, hw);
  for (auto& w : rep.unresolved) w = {std::max(w.first, opt.lo), std::min(w.second, opt.hi)};
  std::vector<double> lam;
  for (Index j = 0; j < kap.size(); ++j)
    for (Index i = 0; i < mu.size(); ++i) {
      if (mu(i) < -1e-10 || mu(i) > 2.0 + 1e-10)
        throw Error(Errc::MuOutOfRange, "mu = " + std::to_string(mu(i)));
      const double theta = std::acos(std::clamp(1.0 - mu(i), -1.0, 1.0));
      std::vector<double> ts;
      for (Index m = 0;; ++m) {
        const double base = 2.0 * pi * static_cast<double>(m);
        if (std::pow(std::max(0.0, base - theta), 2) + kap(j) > opt.hi + 1.0) break;
        for (double t : {base + theta, base - theta})
          if (t >= -1e-12) ts.push_back(std::max(0.0, t));
      }
      std::sort(ts.begin(), ts.end());
      ts.erase(std::unique(ts.begin(), ts.end(), [](double a, double b) { return b - a <= 1e-12; }), ts.end());
      for (double t : ts) {
        const double x = kap(j) + t * t;
        if (x >= opt.lo && x <= opt.hi && !rep.in_window(x)) lam.push_back(x);
      }
    }
  group_roots(lam, 1e-9, &rep.eigenvalues, &rep.multiplicity);
  return rep;
}

// ---- finite differences ------------------------------------------------------

struct FdResult {
  SpectrumReport report;
  double vertex_residual = 0.0;  // max_v |P_v Σ f⃗′_e(v)| / ‖f‖_∞ over the returned modes
  Index unknowns = 0;
};

namespace detail {

using SpMat = Eigen::SparseMatrix<cplx>;

// Eigenpairs of a sparse, nearly Hermitian L nearest above σ by shift-invert
// subspace iteration with Rayleigh-Ritz; ascending by real part.
inline void lowest_eigs(const SpMat& l, double sigma, Index count, RVec* vals, Mat* vecs) {
  const Index n = l.rows();
  if (n <= 600) {
    Eigen::ComplexEigenSolver<Mat> es{Mat(l)};
    std::vector<Index> idx(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return es.eigenvalues()(a).real() < es.eigenvalues()(b).real(); });
    const Index c = std::min(count, n);
    *vals = RVec(c);
    *vecs = Mat(n, c);
    for (Index i = 0; i < c; ++i) {
      (*vals)(i) = es.eigenvalues()(idx[static_cast<size_t>(i)]).real();
      vecs->col(i) = es.eigenvectors().col(idx[static_cast<size_t>(i)]);
    }
    return;
  }
  SpMat a = l;
  for (Index i = 0; i < n; ++i) a.coeffRef(i, i) -= sigma;
  Eigen::SparseLU<SpMat> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error(Errc::DomainError, "sparse factorisation failed");
  const Index p = std::min(n, count + 8);
  CaseRng rng(0xfd, 0, static_cast<std::uint64_t>(n));
  Mat x = rng.cmat(n, p);
  RVec prev = RVec::Constant(count, kInf);
  for (int it = 0; it < 1000; ++it) {
    x = lu.solve(x);
    Eigen::HouseholderQR<Mat> qr(x);
    x = qr.householderQ() * Mat::Identity(n, p);
    Mat h = x.adjoint() * (l * x);
    Eigen::ComplexEigenSolver<Mat> es(h);
    std::vector<Index> idx(static_cast<size_t>(p));
    for (Index i = 0; i < p; ++i) idx[static_cast<size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return es.eigenvalues()(a).real() < es.eigenvalues()(b).real(); });
    Mat v(p, p);
    RVec cur(count);
    for (Index i = 0; i < p; ++i) v.col(i) = es.eigenvectors().col(idx[static_cast<size_t>(i)]);
    for (Index i = 0; i < count; ++i) cur(i) = es.eigenvalues()(idx[static_cast<size_t>(i)]).real();
    x = x * v;
    const double change = (cur - prev).cwiseAbs().maxCoeff() / std::max(1.0, cur.cwiseAbs().maxCoeff());
    prev = cur;
    if (change < 1e-13 && it > 3) break;
  }
  *vals = prev;
  *vecs = x.leftCols(count);
}

}  // namespace detail

// Second-order FD on interior nodes; vertex values f_e(v) = B_{v,e} c_v with c_v
// eliminated through the one-sided flux condition P_v Σ_e f⃗′_e(v) = 0.
inline FdResult fd_oracle(const QuantumGraph& qg, double h, Index count) {
  const QgLayout lay = qg_layout(qg);
  const Graph& g = qg.graph;
  if (!(h > 0) || h > qg.min_length() / 8.0)
    throw Error(Errc::MeshTooCoarse, "h = " + std::to_string(h) + " exceeds l0/8 = " + std::to_string(qg.min_length() / 8.0));
  if (count < 1) throw Error(Errc::InputError, "count must be positive");
  const auto bases = vertex_bases(qg);
  std::vector<Index> nseg(static_cast<size_t>(g.ne())), off(static_cast<size_t>(g.ne()) + 1, 0);
  std::vector<double> he(static_cast<size_t>(g.ne()));
  for (Index e = 0; e < g.ne(); ++e) {
    nseg[e] = static_cast<Index>(std::ceil(qg.length[e] / h - 1e-9));
    he[e] = qg.length[e] / static_cast<double>(nseg[e]);
    off[e + 1] = off[e] + (nseg[e] - 1) * qg.fibre_dim(e);
  }
  const Index n = off.back();
  // node i ∈ [1, nseg-1] of edge e, counted from the end at v
  auto node = [&](Index e, Index v, Index i) {
    const Index j = g.is_source(e, v) ? i : nseg[e] - i;
    return off[e] + (j - 1) * qg.fibre_dim(e);
  };
  // rows of B_v belonging to e
  auto bblock = [&](Index v, Index e) {
    Index r = 0;
    for (Index f : g.incident(v)) {
      if (f == e) break;
      r += qg.fibre_dim(f);
    }
    return bases[v].middleRows(r, qg.fibre_dim(e));
  };
  // c_v = G_v u, dense over the incident nodes 1 and 2
  std::vector<Mat> gmap(static_cast<size_t>(g.nv()));
  std::vector<std::vector<Index>> gcols(static_cast<size_t>(g.nv()));
  for (Index v = 0; v < g.nv(); ++v) {
    const Index k = bases[v].cols();
    Mat m = Mat::Zero(k, k);
    for (Index e : g.incident(v)) {
      Mat b = bblock(v, e);
      m += (1.5 / he[e]) * b.adjoint() * b;
    }
    std::vector<Index> cols;
    std::vector<Mat> parts;
    for (Index e : g.incident(v)) {
      Mat b = bblock(v, e);
      const Index d = qg.fibre_dim(e);
      for (Index i : {1, 2}) {
        const double coef = (i == 1 ? 4.0 : -1.0) / (2.0 * he[e]);
        for (Index c = 0; c < d; ++c) cols.push_back(node(e, v, i) + c);
        parts.push_back(coef * b.adjoint());
      }
    }
    Mat rhs(k, static_cast<Index>(cols.size()));
    Index c0 = 0;
    for (const auto& p : parts) {
      rhs.middleCols(c0, p.cols()) = p;
      c0 += p.cols();
    }
    gmap[v] = k ? Mat(m.ldlt().solve(rhs)) : Mat(0, static_cast<Index>(cols.size()));
    gcols[v] = cols;
  }
  std::vector<Eigen::Triplet<cplx>> tr;
  for (Index e = 0; e < g.ne(); ++e) {
    const Index d = qg.fibre_dim(e), src = g.edge(e).src;
    const double ih2 = 1.0 / (he[e] * he[e]);
    for (Index i = 1; i < nseg[e]; ++i) {
      const Index r = node(e, src, i);
      for (Index a = 0; a < d; ++a) {
        tr.emplace_back(r + a, r + a, 2.0 * ih2);
        for (Index b = 0; b < d; ++b)
          if (qg.fibre[e](a, b) != cplx(0.0)) tr.emplace_back(r + a, r + b, qg.fibre[e](a, b));
        if (i > 1) tr.emplace_back(r + a, node(e, src, i - 1) + a, -ih2);
        if (i < nseg[e] - 1) tr.emplace_back(r + a, node(e, src, i + 1) + a, -ih2);
      }
    }
    // the neighbour of the end nodes is the vertex value B_{v,e} G_v u
    for (Index v : {src, g.edge(e).dst}) {
      if (bases[v].cols() == 0) continue;
      Mat c = -ih2 * bblock(v, e) * gmap[v];
      const Index r = node(e, v, 1);
      for (Index a = 0; a < d; ++a)
        for (size_t j = 0; j < gcols[v].size(); ++j)
          if (c(a, static_cast<Index>(j)) != cplx(0.0)) tr.emplace_back(r + a, gcols[v][j], c(a, static_cast<Index>(j)));
    }
  }
  detail::SpMat l(n, n);
  l.setFromTriplets(tr.begin(), tr.end());
  double sigma = kInf;
  for (const auto& k : qg.fibre) sigma = std::min(sigma, eigh_hermitian(k).values.minCoeff());
  RVec vals;
  Mat vecs;
  detail::lowest_eigs(l, sigma - 1.0, std::min(count, n), &vals, &vecs);

  FdResult res;
  res.unknowns = n;
  res.report.method = "finite-difference";
  std::vector<double> v(vals.data(), vals.data() + vals.size());
  group_roots(v, 1e-9 * std::max(1.0, vals.cwiseAbs().maxCoeff()), &res.report.eigenvalues, &res.report.multiplicity);
  for (Index m = 0; m < vecs.cols(); ++m) {
    const Vec u = vecs.col(m);
    const double scale = std::max(u.cwiseAbs().maxCoeff(), 1e-300);
    for (Index x = 0; x < g.nv(); ++x) {
      if (bases[x].cols() == 0) continue;
      Vec cu(static_cast<Index>(gcols[x].size()));
      for (size_t j = 0; j < gcols[x].size(); ++j) cu(static_cast<Index>(j)) = u(gcols[x][j]);
      const Vec cv = gmap[x] * cu;
      Vec flux = Vec::Zero(bases[x].cols());
      for (Index e : g.incident(x)) {
        const Index d = qg.fibre_dim(e);
        Mat b = bblock(x, e);
        Vec f0 = b * cv;
        auto f = [&](Index i) { return Vec(u.segment(node(e, x, i), d)); };
        // outward derivative, third-order one-sided stencil
        Vec dv = (11.0 * f0 - 18.0 * f(1) + 9.0 * f(2) - 2.0 * f(3)) / (6.0 * he[e]);
        flux += b.adjoint() * dv;
      }
      res.vertex_residual = std::max(res.vertex_residual, flux.norm() / scale);
    }
  }
  return res;
}

}  // namespace glx
