#pragma once

// Weighted finite-dimensional inner-product spaces and operators between them.
// Coordinates are never rescaled: a vector f in a space with weights w has
// norm^2 = sum_i |f_i|^2 w_i, and every adjoint carries the weight ratio.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "glx/error.hpp"

namespace glx {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class WeightedSpace {
 public:
  WeightedSpace() = default;
  explicit WeightedSpace(RVec weights, std::string label = {})
      : w_(std::move(weights)), label_(std::move(label)) {
    for (Index i = 0; i < w_.size(); ++i)
      if (!(w_(i) > 0.0) || !std::isfinite(w_(i)))
        throw Error(Errc::DomainError, "weight " + std::to_string(i) + " of space '" + label_ +
                                           "' is not a positive finite number");
  }
  static WeightedSpace unit(Index n, std::string label = {}) {
    return WeightedSpace(RVec::Ones(n), std::move(label));
  }

  Index dim() const { return w_.size(); }
  const RVec& weights() const { return w_; }
  const std::string& label() const { return label_; }

  // <f, g> = sum_i f_i conj(g_i) w_i
  cplx inner(const Vec& f, const Vec& g) const {
    return (f.array() * g.conjugate().array() * w_.cast<cplx>().array()).sum();
  }
  double norm(const Vec& f) const {
    return std::sqrt((f.cwiseAbs2().array() * w_.array()).sum());
  }
  Mat gram() const { return w_.cast<cplx>().asDiagonal(); }

  bool same_as(const WeightedSpace& o) const { return w_.size() == o.w_.size() && w_ == o.w_; }

 private:
  RVec w_;
  std::string label_;
};

inline WeightedSpace direct_sum(const std::vector<WeightedSpace>& parts, std::string label = {}) {
  Index n = 0;
  for (const auto& p : parts) n += p.dim();
  RVec w(n);
  Index k = 0;
  for (const auto& p : parts) {
    w.segment(k, p.dim()) = p.weights();
    k += p.dim();
  }
  return WeightedSpace(std::move(w), std::move(label));
}

struct LinOp {
  WeightedSpace dom;
  WeightedSpace cod;
  Mat m;  // cod.dim() x dom.dim()

  LinOp() = default;
  LinOp(WeightedSpace d, WeightedSpace c, Mat coeff)
      : dom(std::move(d)), cod(std::move(c)), m(std::move(coeff)) {
    if (m.rows() != cod.dim() || m.cols() != dom.dim())
      throw Error(Errc::DomainError, "operator shape does not match its spaces");
  }
  Vec operator()(const Vec& f) const { return m * f; }
};

inline LinOp identity(const WeightedSpace& s) {
  return LinOp(s, s, Mat::Identity(s.dim(), s.dim()));
}

// a after b
inline LinOp compose(const LinOp& a, const LinOp& b) {
  if (a.dom.dim() != b.cod.dim()) throw Error(Errc::DomainError, "compose: dimension mismatch");
  return LinOp(b.dom, a.cod, a.m * b.m);
}

// T*_{ij} = conj(T_{ji}) w_cod(j) / w_dom(i)
inline Mat adjoint_matrix(const Mat& t, const RVec& w_dom, const RVec& w_cod) {
  Mat a = t.adjoint();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) a(i, j) *= w_cod(j) / w_dom(i);
  return a;
}

inline LinOp adjoint(const LinOp& t) {
  return LinOp(t.cod, t.dom, adjoint_matrix(t.m, t.dom.weights(), t.cod.weights()));
}

// W_cod^{1/2} T W_dom^{-1/2}: the coefficients of T in orthonormal coordinates.
inline Mat orthonormal_coords(const Mat& t, const RVec& w_dom, const RVec& w_cod) {
  return w_cod.cwiseSqrt().cast<cplx>().asDiagonal() * t *
         w_dom.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
}

inline double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

// Operator norm w.r.t. the weighted norms of domain and codomain.
inline double norm(const LinOp& t) {
  return spectral_norm(orthonormal_coords(t.m, t.dom.weights(), t.cod.weights()));
}

struct GramForm {
  WeightedSpace space;
  Mat q;  // q(f, g) = g^H q f

  GramForm() = default;
  GramForm(WeightedSpace s, Mat coeff) : space(std::move(s)), q(std::move(coeff)) {
    if (q.rows() != space.dim() || q.cols() != space.dim())
      throw Error(Errc::DomainError, "form shape does not match its space");
  }
  static GramForm plain(const WeightedSpace& s) { return GramForm(s, s.gram()); }
  cplx operator()(const Vec& f, const Vec& g) const { return g.dot(q * f); }
};

struct Eigh {
  RVec values;  // ascending
  Mat vectors;  // columns, orthonormal w.r.t. the weighted inner product
};

inline Eigh eigh_hermitian(const Mat& h) {
  Eigh out;
  if (h.rows() == 0) {
    out.values = RVec(0);
    out.vectors = Mat(0, 0);
    return out;
  }
  Mat s = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

// Relative self-adjointness defect in orthonormal coordinates (Frobenius).
inline double self_adjoint_defect(const Mat& m_on) {
  const double n = m_on.norm();
  if (n == 0.0) return 0.0;
  return (m_on - m_on.adjoint()).norm() / n;
}

inline Eigh eigh(const LinOp& t, double tol = 1e-10) {
  if (!t.dom.same_as(t.cod)) throw Error(Errc::NotSelfAdjoint, "eigh needs domain == codomain");
  const RVec& w = t.dom.weights();
  Mat m = orthonormal_coords(t.m, w, w);
  if (self_adjoint_defect(m) > tol)
    throw Error(Errc::NotSelfAdjoint, "relative defect " + std::to_string(self_adjoint_defect(m)));
  Eigh e = eigh_hermitian(m);
  e.vectors = w.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() * e.vectors;
  return e;
}

inline RVec spectrum(const LinOp& t) { return eigh(t).values; }

// f(K) = sum_k f(lambda_k) v_k <., v_k>
inline LinOp matfunc(const LinOp& k, const std::function<cplx(double)>& f) {
  Eigh e = eigh(k);
  Vec fv(e.values.size());
  for (Index i = 0; i < fv.size(); ++i) {
    cplx v;
    try {
      v = f(e.values(i));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& ex) {
      throw Error(Errc::DomainError, std::string("function failed at an eigenvalue: ") + ex.what());
    }
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(Errc::DomainError,
                  "function undefined at eigenvalue " + std::to_string(e.values(i)));
    fv(i) = v;
  }
  const RVec& w = k.dom.weights();
  Mat vinv = e.vectors.adjoint() * w.cast<cplx>().asDiagonal();
  return LinOp(k.dom, k.cod, e.vectors * fv.asDiagonal() * vinv);
}

// Hermitian PSD square root.
inline Mat sqrt_psd(const Mat& g) {
  Eigh e = eigh_hermitian(g);
  RVec s = e.values.cwiseMax(0.0).cwiseSqrt();
  return e.vectors * s.cast<cplx>().asDiagonal() * e.vectors.adjoint();
}

// Split a PSD Gram into its range (with the inverse square-root factor) and
// its numerical nullspace, truncating at relative threshold rel.
struct GramFactor {
  Mat inv_sqrt;  // n x r, P with P^H G P = I_r
  Mat null;      // n x (n-r), orthonormal (Euclidean)
};

inline GramFactor factor_gram(const Mat& g, double rel = 1e-12) {
  Eigh e = eigh_hermitian(g);
  const Index n = g.rows();
  double smax = n ? std::max(0.0, e.values.maxCoeff()) : 0.0;
  std::vector<Index> keep, drop;
  for (Index i = 0; i < n; ++i) (e.values(i) > rel * smax && smax > 0 ? keep : drop).push_back(i);
  GramFactor f;
  f.inv_sqrt = Mat(n, static_cast<Index>(keep.size()));
  for (Index k = 0; k < static_cast<Index>(keep.size()); ++k)
    f.inv_sqrt.col(k) = e.vectors.col(keep[k]) / std::sqrt(e.values(keep[k]));
  f.null = Mat(n, static_cast<Index>(drop.size()));
  for (Index k = 0; k < static_cast<Index>(drop.size()); ++k) f.null.col(k) = e.vectors.col(drop[k]);
  return f;
}

// sup ||T f||_cod / ||f||_dom where ||f||^2_dom = f^H dom f etc.
// Largest generalised singular value; a degenerate domain Gram is restricted
// to its range, which requires T to vanish on the truncated directions.
inline double opnorm(const Mat& t, const Mat& dom_gram, const Mat& cod_gram) {
  if (t.rows() == 0 || t.cols() == 0) return 0.0;
  GramFactor f = factor_gram(dom_gram);
  Mat cs = sqrt_psd(cod_gram);
  Mat ct = cs * t;
  if (f.null.cols() > 0) {
    const double scale = spectral_norm(ct);
    const double leak = spectral_norm(ct * f.null);
    if (leak > 1e-8 * std::max(scale, 1e-300) && leak > 1e-14)
      throw Error(Errc::DegenerateNorm, "domain Gram is singular on a direction T does not kill");
  }
  if (f.inv_sqrt.cols() == 0) return 0.0;
  return spectral_norm(ct * f.inv_sqrt);
}

inline double opnorm(const LinOp& t, const GramForm& dom, const GramForm& cod) {
  if (dom.space.dim() != t.dom.dim() || cod.space.dim() != t.cod.dim())
    throw Error(Errc::DomainError, "opnorm: Gram dimensions do not match operator");
  return opnorm(t.m, dom.q, cod.q);
}

// sup |u^H M f| / (||u||_gu ||f||_gf) for positive definite Grams.
inline double bilinear_norm(const Mat& m, const Mat& gu, const Mat& gf) {
  if (m.size() == 0) return 0.0;
  GramFactor fu = factor_gram(gu), ff = factor_gram(gf);
  if (fu.null.cols() > 0 || ff.null.cols() > 0)
    throw Error(Errc::DegenerateNorm, "bilinear_norm needs definite Grams");
  return spectral_norm(fu.inv_sqrt.adjoint() * m * ff.inv_sqrt);
}

inline Mat block_diag(const std::vector<Mat>& blocks) {
  Index r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  Mat out = Mat::Zero(r, c);
  Index i = 0, j = 0;
  for (const auto& b : blocks) {
    out.block(i, j, b.rows(), b.cols()) = b;
    i += b.rows();
    j += b.cols();
  }
  return out;
}

// Orthonormal basis (w.r.t. weights w) of ker C, rank cut at rel * sigma_max.
inline Mat weighted_kernel(const Mat& c, const RVec& w, double rel = 1e-12) {
  const Index n = w.size();
  RVec isw = w.cwiseSqrt().cwiseInverse();
  if (c.rows() == 0) return isw.cast<cplx>().asDiagonal() * Mat::Identity(n, n);
  Mat cs = c * isw.cast<cplx>().asDiagonal();
  Eigen::JacobiSVD<Mat> svd(cs, Eigen::ComputeFullV);
  const RVec& sv = svd.singularValues();
  double smax = sv.size() ? sv(0) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel * smax && smax > 0) ++rank;
  Mat y = svd.matrixV().rightCols(n - rank);
  return isw.cast<cplx>().asDiagonal() * y;
}

inline Index numerical_rank(const Mat& a, double rel = 1e-12) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const RVec& sv = svd.singularValues();
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel * sv(0) && sv(0) > 0) ++r;
  return r;
}

}  // namespace glx
