#pragma once

// Finite-dimensional ABVPs (Γ, 𝒢, h, ℋ¹ = ℋ, ℋ) and their derived objects.
//
// Conventions: Q is the Gram matrix of h (h(f, g) = g^H Q f), W and W_G the
// weight matrices of ℋ and 𝒢. The Neumann operator is T = W^{-1} Q.
// ker Γ is carried by an isometric embedding E (columns in ℋ coordinates) and
// R is a fixed right inverse of Γ (the lift).

#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "glx/graph.hpp"
#include "glx/hilbert.hpp"

namespace glx {

inline constexpr double kDirichletGuard = 1e-8;

struct DirichletData {
  WeightedSpace space;  // coordinates on ker Γ
  Mat embed;            // E : ker-space -> ℋ, isometric
  LinOp op;             // H^Dir
  RVec spectrum;        // ascending
  Mat vectors;          // eigenvectors of op, orthonormal in `space`
};

struct KreinResult {
  double residual = 0.0;  // operator norm of the difference of both sides
  double relative = 0.0;  // residual / ||(H^Neu - z)^{-1}||
};

struct SpectralRelation {
  bool in_neumann = false;    // lambda within 1e-8 of spec H^Neu
  bool dtn_singular = false;  // min |eig Λ(lambda)| < 1e-8
  double min_dtn_eig = 0.0;
  double dist_neumann = 0.0;
};

class Abvp {
 public:
  Abvp() = default;

  Abvp(WeightedSpace h, WeightedSpace g, Mat gamma, Mat form,
       std::optional<std::vector<Index>> split = std::nullopt)
      : h_(std::move(h)), g_(std::move(g)), gamma_(std::move(gamma)), q_(std::move(form)),
        split_(std::move(split)), cache_(std::make_shared<Cache>()) {
    check();
  }

  // ℋ = 𝒢 ⊕ ker Γ with Γ the restriction to the coordinates bidx.
  static Abvp from_split(const WeightedSpace& h, const std::vector<Index>& bidx, Mat form,
                         const std::string& glabel = "boundary") {
    RVec wg(static_cast<Index>(bidx.size()));
    Mat gam = Mat::Zero(static_cast<Index>(bidx.size()), h.dim());
    for (size_t j = 0; j < bidx.size(); ++j) {
      if (bidx[j] < 0 || bidx[j] >= h.dim()) throw Error(Errc::InvalidAbvp, "split index out of range");
      wg(static_cast<Index>(j)) = h.weights()(bidx[j]);
      gam(static_cast<Index>(j), bidx[j]) = 1.0;
    }
    return Abvp(h, WeightedSpace(wg, glabel), gam, std::move(form), bidx);
  }

  // Γ = id, 𝒢 = ℋ.
  static Abvp trivial(const WeightedSpace& h, Mat form) {
    std::vector<Index> all(static_cast<size_t>(h.dim()));
    for (Index i = 0; i < h.dim(); ++i) all[static_cast<size_t>(i)] = i;
    return from_split(h, all, std::move(form), h.label());
  }

  const WeightedSpace& space() const { return h_; }
  const WeightedSpace& boundary() const { return g_; }
  LinOp gamma() const { return LinOp(h_, g_, gamma_); }
  const Mat& gamma_matrix() const { return gamma_; }
  GramForm form() const { return GramForm(h_, q_); }
  const Mat& form_matrix() const { return q_; }
  bool is_split() const { return split_.has_value(); }
  const std::vector<Index>& split_indices() const {
    if (!split_) throw Error(Errc::NotSplit, "ABVP has no designated splitting");
    return *split_;
  }
  std::vector<Index> interior_indices() const {
    std::set<Index> b(split_indices().begin(), split_indices().end());
    std::vector<Index> r;
    for (Index i = 0; i < h_.dim(); ++i)
      if (!b.count(i)) r.push_back(i);
    return r;
  }

  Mat weight_matrix() const { return h_.gram(); }
  Mat boundary_weight_matrix() const { return g_.gram(); }
  // ‖f‖²_{ℋ¹} = h(f) + ‖f‖²
  Mat h1_gram() const { return q_ + h_.gram(); }

  LinOp neumann() const {
    return LinOp(h_, h_, h_.weights().cwiseInverse().cast<cplx>().asDiagonal() * q_);
  }

  const Eigh& neumann_eigh() const {
    std::call_once(cache_->neu_once, [&] { cache_->neu = eigh(neumann()); });
    return cache_->neu;
  }
  const RVec& neumann_spectrum() const { return neumann_eigh().values; }

  const DirichletData& dirichlet() const {
    std::call_once(cache_->dir_once, [&] { build_dirichlet(); });
    return cache_->dir;
  }

  double dirichlet_distance(cplx z) const {
    const RVec& s = dirichlet().spectrum;
    double d = kInf;
    for (Index i = 0; i < s.size(); ++i) d = std::min(d, std::abs(z - s(i)));
    return d;
  }

  // S(z) : 𝒢 -> ℋ, by a direct solve of E^H (Q - zW) S(z) = 0, Γ S(z) = id.
  LinOp solution_operator(cplx z) const {
    guard(z);
    const DirichletData& d = dirichlet();
    const Mat& r = lift();
    Mat s = r;
    if (d.embed.cols() > 0) {
      Mat m = q_ - z * h_.gram();
      Mat lhs = d.embed.adjoint() * m * d.embed;
      Mat rhs = d.embed.adjoint() * m * r;
      s -= d.embed * lhs.partialPivLu().solve(rhs);
    }
    return LinOp(g_, h_, s);
  }

  // Λ(z) from the Dirichlet eigenbasis: W_G Λ = R^H M R - (R^H M E V) Δ (V^H E^H M R).
  LinOp dtn(cplx z) const {
    guard(z);
    const Fast& f = fast();
    const RVec& d = dirichlet().spectrum;
    Mat wl = f.p0 - z * f.p1;
    if (d.size() > 0) {
      Mat x = f.vx0 - z * f.vx1;
      Mat y = f.vx0 - std::conj(z) * f.vx1;
      Vec delta(d.size());
      for (Index i = 0; i < d.size(); ++i) delta(i) = 1.0 / (d(i) - z);
      wl -= y.adjoint() * delta.asDiagonal() * x;
    }
    return LinOp(g_, g_, g_.weights().cwiseInverse().cast<cplx>().asDiagonal() * wl);
  }

  // (A - z) - B (D - z)^{-1} B* from the block structure of H^Neu.
  LinOp dtn_schur(cplx z) const {
    guard(z);
    const auto& b = split_indices();
    const auto in = interior_indices();
    Mat t = neumann().m;
    const Index m = static_cast<Index>(b.size()), k = static_cast<Index>(in.size());
    Mat a(m, m), bb(m, k), bs(k, m), dd(k, k);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) a(i, j) = t(b[i], b[j]);
      for (Index j = 0; j < k; ++j) bb(i, j) = t(b[i], in[j]);
    }
    for (Index i = 0; i < k; ++i) {
      for (Index j = 0; j < m; ++j) bs(i, j) = t(in[i], b[j]);
      for (Index j = 0; j < k; ++j) dd(i, j) = t(in[i], in[j]);
    }
    Mat lam = a - z * Mat::Identity(m, m);
    if (k > 0) lam -= bb * (dd - z * Mat::Identity(k, k)).partialPivLu().solve(bs);
    return LinOp(g_, g_, lam);
  }

  // Operator of the form l_z(φ, ψ) = (h - z)(S(z)φ, S(-1)ψ).
  LinOp dtn_form(cplx z) const {
    Mat sz = solution_operator(z).m;
    Mat sm = solution_operator(-1.0).m;
    Mat gl = sm.adjoint() * (q_ - z * h_.gram()) * sz;
    return LinOp(g_, g_, g_.weights().cwiseInverse().cast<cplx>().asDiagonal() * gl);
  }

  // Γ' = (A B): the boundary rows of H^Neu.
  LinOp gamma_prime() const {
    const auto& b = split_indices();
    Mat t = neumann().m;
    Mat gp(static_cast<Index>(b.size()), h_.dim());
    for (size_t i = 0; i < b.size(); ++i) gp.row(static_cast<Index>(i)) = t.row(b[i]);
    return LinOp(h_, g_, gp);
  }

  // |h(f,g) - <Ĥf, g> - <Γ'f, Γg>| with Ĥ the interior rows of H^Neu.
  double green_residual(const Vec& f, const Vec& g) const {
    const auto in = interior_indices();
    Vec hf = Vec::Zero(h_.dim());
    Vec tf = neumann().m * f;
    for (Index i : in) hf(i) = tf(i);
    cplx lhs = g.dot(q_ * f);
    cplx rhs = h_.inner(hf, g) + g_.inner(gamma_prime().m * f, gamma_ * g);
    return std::abs(lhs - rhs);
  }

  // (H^Neu - z)^{-1} = (H^Dir - z)^{-1} ⊕ 0 + S(z) Λ(z)^{-1} S(z̄)*.
  // The Dirichlet resolvent is extended by zero on (ker Γ)^⊥; for a split
  // ABVP this is the boundary block.
  KreinResult krein_residual(cplx z) const {
    double dn = kInf;
    const RVec& sn = neumann_spectrum();
    for (Index i = 0; i < sn.size(); ++i) dn = std::min(dn, std::abs(z - sn(i)));
    if (dn <= kDirichletGuard || dirichlet_distance(z) <= kDirichletGuard)
      throw Error(Errc::SpectrumHit, "z too close to spec H^Neu or spec H^Dir");
    const Mat w = h_.gram();
    Mat lhs = (q_ - z * w).partialPivLu().solve(w);
    Mat rhs = dirichlet_resolvent_ext(z);
    if (g_.dim() > 0) {
      Mat lam = dtn(z).m;
      Eigen::JacobiSVD<Mat> svd(orthonormal_coords(lam, g_.weights(), g_.weights()));
      const RVec& sv = svd.singularValues();
      if (sv(sv.size() - 1) <= 1e-14 * std::max(1.0, sv(0)))
        throw Error(Errc::SingularDtN, "Λ(z) is numerically singular");
      Mat sz = solution_operator(z).m;
      Mat szb_adj = adjoint_matrix(solution_operator(std::conj(z)).m, g_.weights(), h_.weights());
      rhs += sz * lam.partialPivLu().solve(szb_adj);
    }
    KreinResult r;
    const RVec& wv = h_.weights();
    r.residual = spectral_norm(orthonormal_coords(lhs - rhs, wv, wv));
    r.relative = r.residual / spectral_norm(orthonormal_coords(lhs, wv, wv));
    return r;
  }

  // E (H^Dir - z)^{-1} E*, as an operator on ℋ.
  Mat dirichlet_resolvent_ext(cplx z) const {
    const DirichletData& d = dirichlet();
    const Index n = h_.dim();
    if (d.spectrum.size() == 0) return Mat::Zero(n, n);
    Vec delta(d.spectrum.size());
    for (Index i = 0; i < delta.size(); ++i) delta(i) = 1.0 / (d.spectrum(i) - z);
    Mat ev = d.embed * d.vectors;
    return ev * delta.asDiagonal() * ev.adjoint() * h_.gram();
  }

  SpectralRelation spectral_relation_check(double lambda) const {
    guard(lambda);
    SpectralRelation s;
    const RVec& sn = neumann_spectrum();
    s.dist_neumann = kInf;
    for (Index i = 0; i < sn.size(); ++i) s.dist_neumann = std::min(s.dist_neumann, std::abs(lambda - sn(i)));
    s.in_neumann = s.dist_neumann < 1e-8;
    s.min_dtn_eig = kInf;
    if (g_.dim() > 0) {
      // Λ(λ) may vanish identically at λ, so no relative symmetry check here
      RVec ev = eigh_hermitian(orthonormal_coords(dtn(lambda).m, g_.weights(), g_.weights())).values;
      s.min_dtn_eig = ev.cwiseAbs().minCoeff();
    }
    s.dtn_singular = s.min_dtn_eig < 1e-8;
    return s;
  }

  // Smallest c with ‖S(-1)φ‖_ℋ <= c ‖φ‖_𝒢.
  double regularity_constant() const {
    return opnorm(solution_operator(-1.0).m, g_.gram(), h_.gram());
  }

  // Gram of the 𝒢^{1/2}-norm, ‖φ‖² = l_{-1}(φ).
  Mat half_gram() const {
    Mat g = g_.gram() * dtn(-1.0).m;
    return 0.5 * (g + g.adjoint());
  }

  // Right inverse of Γ used to lift boundary data.
  const Mat& lift() const {
    std::call_once(cache_->lift_once, [&] {
      if (split_) {
        Mat r = Mat::Zero(h_.dim(), g_.dim());
        for (size_t j = 0; j < split_->size(); ++j) r((*split_)[j], static_cast<Index>(j)) = 1.0;
        cache_->lift = r;
      } else {
        Mat gs = adjoint_matrix(gamma_, h_.weights(), g_.weights());
        cache_->lift = gs * (gamma_ * gs).partialPivLu().inverse();
      }
    });
    return cache_->lift;
  }

 private:
  struct Fast {
    Mat p0, p1, vx0, vx1;
  };
  struct Cache {
    std::once_flag neu_once, dir_once, lift_once, fast_once;
    Eigh neu;
    DirichletData dir;
    Mat lift;
    Fast fast;
  };

  void guard(cplx z) const {
    if (dirichlet_distance(z) <= kDirichletGuard)
      throw Error(Errc::DirichletSpectrumHit,
                  "z = (" + std::to_string(z.real()) + "," + std::to_string(z.imag()) +
                      ") is within 1e-8 of spec H^Dir");
  }

  void check() {
    const Index n = h_.dim(), m = g_.dim();
    if (gamma_.rows() != m || gamma_.cols() != n)
      throw Error(Errc::InvalidAbvp, "Γ has the wrong shape");
    if (q_.rows() != n || q_.cols() != n) throw Error(Errc::InvalidAbvp, "form has the wrong shape");
    const double qn = q_.norm();
    if ((q_ - q_.adjoint()).norm() > 1e-12 * std::max(1.0, qn))
      throw Error(Errc::InvalidAbvp, "form is not Hermitian");
    q_ = 0.5 * (q_ + q_.adjoint());
    if (n > 0) {
      RVec ev = eigh_hermitian(q_).values;
      if (ev(0) < -1e-11 * std::max(1.0, ev(n - 1)))
        throw Error(Errc::InvalidAbvp, "form is not non-negative");
    }
    if (m > 0 && numerical_rank(gamma_) != m) throw Error(Errc::InvalidAbvp, "Γ is not surjective");
    if (split_) {
      std::set<Index> seen;
      if (static_cast<Index>(split_->size()) != m) throw Error(Errc::InvalidAbvp, "split size != dim 𝒢");
      for (size_t j = 0; j < split_->size(); ++j) {
        Index i = (*split_)[j];
        if (i < 0 || i >= n || !seen.insert(i).second)
          throw Error(Errc::InvalidAbvp, "split indices must be distinct coordinates");
        if (g_.weights()(static_cast<Index>(j)) != h_.weights()(i))
          throw Error(Errc::InvalidAbvp, "split: boundary weight differs from ℋ weight");
        for (Index c = 0; c < n; ++c)
          if (std::abs(gamma_(static_cast<Index>(j), c) - (c == i ? 1.0 : 0.0)) > 1e-14)
            throw Error(Errc::InvalidAbvp, "split: Γ is not the coordinate restriction");
      }
    }
  }

  void build_dirichlet() const {
    DirichletData d;
    if (split_) {
      auto in = interior_indices();
      const Index k = static_cast<Index>(in.size());
      RVec wk(k);
      d.embed = Mat::Zero(h_.dim(), k);
      for (Index j = 0; j < k; ++j) {
        wk(j) = h_.weights()(in[j]);
        d.embed(in[j], j) = 1.0;
      }
      d.space = WeightedSpace(wk, "ker Γ");
    } else {
      d.embed = weighted_kernel(gamma_, h_.weights());
      d.space = WeightedSpace::unit(d.embed.cols(), "ker Γ");
    }
    Mat qk = d.embed.adjoint() * q_ * d.embed;
    d.op = LinOp(d.space, d.space, d.space.weights().cwiseInverse().cast<cplx>().asDiagonal() * qk);
    Eigh e = eigh(d.op);
    d.spectrum = e.values;
    d.vectors = e.vectors;
    cache_->dir = std::move(d);
  }

  const Fast& fast() const {
    std::call_once(cache_->fast_once, [&] {
      const DirichletData& d = dirichlet();
      const Mat& r = lift();
      const Mat w = h_.gram();
      Fast f;
      f.p0 = r.adjoint() * q_ * r;
      f.p1 = r.adjoint() * w * r;
      Mat ev = d.embed * d.vectors;
      f.vx0 = ev.adjoint() * q_ * r;
      f.vx1 = ev.adjoint() * w * r;
      cache_->fast = std::move(f);
    });
    return cache_->fast;
  }

  WeightedSpace h_, g_;
  Mat gamma_, q_;
  std::optional<std::vector<Index>> split_;
  std::shared_ptr<Cache> cache_;
};

// ℋ = ℓ²(V, deg), 𝒢 = ℓ²(∂V, deg), Γ = restriction, h = graph energy.
inline Abvp graph_abvp(const Graph& g) {
  validate(g);
  return Abvp::from_split(degree_space(g), g.boundary(), energy_gram(g), "boundary vertices");
}

}  // namespace glx
