#pragma once

// Roots of λ ↦ det Λ(λ) for a Hermitian, Loewner-decreasing matrix family with
// known poles. Sorted eigenvalues are then non-increasing between poles, so a
// zero of branch j is bracketed by ν_j(a) > 0 >= ν_j(b).

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "glx/hilbert.hpp"
#include "glx/parallel.hpp"

namespace glx {

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending, distinct
  std::vector<int> multiplicity;
  std::vector<std::pair<double, double>> unresolved;  // closed windows around poles
  std::string method;

  std::vector<double> expanded() const {
    std::vector<double> out;
    for (size_t i = 0; i < eigenvalues.size(); ++i)
      for (int k = 0; k < multiplicity[i]; ++k) out.push_back(eigenvalues[i]);
    return out;
  }
  bool in_window(double x) const {
    for (const auto& w : unresolved)
      if (x >= w.first && x <= w.second) return true;
    return false;
  }
};

struct SecularOptions {
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.0;  // 0: (hi - lo) / 2000
  double tol = 1e-10;

  double grid_step() const { return step > 0 ? step : (hi - lo) / 2000.0; }
  double half_width() const { return std::max(2.0 * grid_step(), 1e-6); }
};

using HermitianFamily = std::function<Mat(double)>;

inline RVec sorted_eigs(const Mat& m) { return eigh_hermitian(m).values; }

// Merged windows [p - hw, p + hw] for poles near [lo, hi].
inline std::vector<std::pair<double, double>> pole_windows(std::vector<double> poles, double lo, double hi, double hw) {
  std::sort(poles.begin(), poles.end());
  std::vector<std::pair<double, double>> w;
  for (double p : poles) {
    if (p + hw < lo || p - hw > hi) continue;
    if (!w.empty() && p - hw <= w.back().second)
      w.back().second = std::max(w.back().second, p + hw);
    else
      w.push_back({p - hw, p + hw});
  }
  return w;
}

// Groups sorted roots closer than gap; returns (mean, count).
inline void group_roots(std::vector<double> roots, double gap, std::vector<double>* vals, std::vector<int>* mult) {
  std::sort(roots.begin(), roots.end());
  for (size_t i = 0; i < roots.size();) {
    size_t j = i;
    double s = 0.0;
    while (j < roots.size() && roots[j] - roots[i] <= gap) s += roots[j++];
    vals->push_back(s / static_cast<double>(j - i));
    mult->push_back(static_cast<int>(j - i));
    i = j;
  }
}

// A pole p of Λ with residue F F^H (F in the coordinates of Λ) carrying
// `dirichlet_mult` Dirichlet eigenvectors. dirichlet_mult < 0: residue unknown.
struct PoleData {
  double at = 0.0;
  Mat flux;
  Index dirichlet_mult = -1;
};

namespace detail {

inline Index count_negative(const RVec& v) {
  Index n = 0;
  for (Index i = 0; i < v.size(); ++i) n += v(i) < 0.0;
  return n;
}

// Distinct pole locations with concatenated residue factors.
inline std::vector<PoleData> merge_poles(std::vector<PoleData> poles) {
  std::sort(poles.begin(), poles.end(), [](const PoleData& a, const PoleData& b) { return a.at < b.at; });
  std::vector<PoleData> out;
  for (auto& p : poles) {
    if (!out.empty() && p.at - out.back().at <= 1e-9 * std::max(1.0, std::abs(p.at))) {
      PoleData& q = out.back();
      if (q.dirichlet_mult < 0 || p.dirichlet_mult < 0) {
        q.dirichlet_mult = -1;
        continue;
      }
      Mat f(q.flux.rows(), q.flux.cols() + p.flux.cols());
      f << q.flux, p.flux;
      q.flux = f;
      q.dirichlet_mult += p.dirichlet_mult;
    } else {
      out.push_back(std::move(p));
    }
  }
  return out;
}

// Eigenvalue multiplicity exactly at a pole: zeros of the regular part
// compressed to ker F^H, plus Dirichlet eigenvectors whose flux vanishes in Λ's
// coordinates (invisible to Λ). Returns (at-pole zeros of Λ's regular branches,
// total multiplicity, rank of residue).
struct PoleResolution {
  Index regular_zeros = 0;
  Index multiplicity = 0;
  Index residue_rank = 0;
};

inline PoleResolution resolve_pole(const HermitianFamily& dtn, const PoleData& p, double gap) {
  const double d = std::min(1e-5 * std::max(1.0, std::abs(p.at)), 0.25 * gap);
  auto avg = [&](double h) { return Mat(0.5 * (dtn(p.at + h) + dtn(p.at - h))); };
  // the pole parts cancel in the symmetric mean; Richardson removes O(h²)
  Mat a0 = (4.0 * avg(d) - avg(2.0 * d)) / 3.0;
  a0 = 0.5 * (a0 + a0.adjoint());
  const Index n = a0.rows();
  PoleResolution r;
  Mat kerbasis;
  if (p.flux.cols() == 0) {
    kerbasis = Mat::Identity(n, n);
  } else {
    Eigh er = eigh_hermitian(p.flux * p.flux.adjoint());
    const double rmax = std::max(0.0, er.values.maxCoeff());
    std::vector<Index> k;
    for (Index i = 0; i < n; ++i)
      if (er.values(i) <= 1e-10 * rmax) k.push_back(i);
    kerbasis = Mat(n, static_cast<Index>(k.size()));
    for (size_t i = 0; i < k.size(); ++i) kerbasis.col(static_cast<Index>(i)) = er.vectors.col(k[i]);
  }
  r.residue_rank = n - kerbasis.cols();
  if (kerbasis.cols() > 0) {
    RVec c = eigh_hermitian(kerbasis.adjoint() * a0 * kerbasis).values;
    const double thr = 1e-7 * std::max(1.0, spectral_norm(a0));
    for (Index i = 0; i < c.size(); ++i) r.regular_zeros += std::abs(c(i)) <= thr;
  }
  r.multiplicity = r.regular_zeros + std::max<Index>(0, p.dirichlet_mult - r.residue_rank);
  return r;
}

}  // namespace detail

// Roots of the sorted eigenvalue branches of dtn on [lo, hi]. Pole neighbourhoods
// are skipped by the grid; a window is then resolved when every root it contains
// sits exactly at a pole with known residue (checked by counting negative
// eigenvalues across the window), and reported as unresolved otherwise.
inline SpectrumReport secular_spectrum(const HermitianFamily& dtn, const std::vector<PoleData>& pole_data,
                                       const SecularOptions& opt) {
  if (!(opt.lo < opt.hi)) throw Error(Errc::InputError, "window needs lo < hi");
  if (!(opt.tol > 0)) throw Error(Errc::InputError, "tol must be positive");
  const double step = opt.grid_step(), hw = opt.half_width();
  const std::vector<PoleData> pd = detail::merge_poles(pole_data);
  std::vector<double> poles;
  for (const auto& p : pd) poles.push_back(p.at);
  SpectrumReport rep;
  rep.method = "secular";

  // Segments of the extended window free of poles.
  const double elo = opt.lo - step, ehi = opt.hi + step;
  auto all_w = pole_windows(poles, elo, ehi, hw);
  std::vector<std::pair<double, double>> seg;
  double cur = elo;
  for (const auto& w : all_w) {
    if (w.first > cur) seg.push_back({cur, w.first});
    cur = std::max(cur, w.second);
  }
  if (cur < ehi) seg.push_back({cur, ehi});

  std::vector<double> roots;
  for (const auto& s : seg) {
    const Index n = std::max<Index>(1, static_cast<Index>(std::ceil((s.second - s.first) / step)));
    std::vector<double> x(static_cast<size_t>(n + 1));
    for (Index i = 0; i <= n; ++i)
      x[static_cast<size_t>(i)] = s.first + (s.second - s.first) * static_cast<double>(i) / static_cast<double>(n);
    std::vector<RVec> ev(x.size());
    parallel_for(x.size(), [&](size_t i) { ev[i] = sorted_eigs(dtn(x[i])); });
    std::vector<std::pair<size_t, Index>> brackets;
    for (size_t i = 0; i + 1 < x.size(); ++i)
      for (Index j = 0; j < ev[i].size(); ++j)
        if (ev[i](j) > 0.0 && ev[i + 1](j) <= 0.0) brackets.push_back({i, j});
    std::vector<double> found(brackets.size());
    parallel_for(brackets.size(), [&](size_t k) {
      const size_t i0 = brackets[k].first;
      const Index j = brackets[k].second;
      double a = x[i0], b = x[i0 + 1], fa = ev[i0](j), fb = ev[i0 + 1](j);
      while (b - a > opt.tol && fb != 0.0) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double fm = sorted_eigs(dtn(m))(j);
        if (fm > 0.0) {
          a = m;
          fa = fm;
        } else {
          b = m;
          fb = fm;
        }
      }
      // final secant step inside the bracket
      found[k] = fb == 0.0 ? b : a + fa * (b - a) / (fa - fb);
    });
    roots.insert(roots.end(), found.begin(), found.end());
  }
  std::vector<double> keep;
  for (double r : roots)
    if (r >= opt.lo - opt.tol && r <= opt.hi + opt.tol) keep.push_back(r);
  std::vector<double> vals;
  std::vector<int> mult;
  group_roots(keep, 4.0 * opt.tol, &vals, &mult);

  for (const auto& w : pole_windows(poles, opt.lo, opt.hi, hw)) {
    std::vector<size_t> inside;
    for (size_t i = 0; i < pd.size(); ++i)
      if (pd[i].at >= w.first && pd[i].at <= w.second) inside.push_back(i);
    bool ok = true;
    for (size_t i : inside) ok = ok && pd[i].dirichlet_mult >= 0;
    std::vector<std::pair<double, Index>> at_pole;
    if (ok) {
      Index reg = 0, rank = 0;
      for (size_t i : inside) {
        double gap = kInf;
        if (i > 0) gap = std::min(gap, pd[i].at - pd[i - 1].at);
        if (i + 1 < pd.size()) gap = std::min(gap, pd[i + 1].at - pd[i].at);
        detail::PoleResolution r = detail::resolve_pole(dtn, pd[i], gap);
        reg += r.regular_zeros;
        rank += r.residue_rank;
        if (r.multiplicity > 0) at_pole.push_back({pd[i].at, r.multiplicity});
      }
      const Index dneg = detail::count_negative(sorted_eigs(dtn(w.second))) -
                         detail::count_negative(sorted_eigs(dtn(w.first)));
      ok = dneg + rank == reg;
    }
    if (ok) {
      for (const auto& [x, m] : at_pole)
        if (x >= opt.lo && x <= opt.hi) {
          vals.push_back(x);
          mult.push_back(static_cast<int>(m));
        }
    } else {
      rep.unresolved.push_back({std::max(w.first, opt.lo), std::min(w.second, opt.hi)});
    }
  }
  std::vector<size_t> order(vals.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return vals[a] < vals[b]; });
  for (size_t i : order) {
    if (rep.in_window(vals[i])) continue;
    rep.eigenvalues.push_back(vals[i]);
    rep.multiplicity.push_back(mult[i]);
  }
  return rep;
}

// Poles with unknown residues: every window stays unresolved.
inline SpectrumReport secular_spectrum(const HermitianFamily& dtn, const std::vector<double>& poles,
                                       const SecularOptions& opt) {
  std::vector<PoleData> pd;
  for (double p : poles) pd.push_back({p, Mat(), -1});
  return secular_spectrum(dtn, pd, opt);
}

// Eigenvalue branches of λ ↦ Λ(λ) on the grid lo + i·step, labelled by
// eigenvector continuity (overlap > 0.7) between neighbouring points.
struct DispersionRow {
  double lambda;
  Index branch;
  double value;  // NaN where Λ(λ) cannot be evaluated
};

inline std::vector<DispersionRow> dispersion(const HermitianFamily& dtn, double lo, double hi, double step) {
  if (!(lo < hi) || !(step > 0)) throw Error(Errc::InputError, "dispersion needs lo < hi and step > 0");
  const Index n = static_cast<Index>(std::llround((hi - lo) / step));
  std::vector<Eigh> eg(static_cast<size_t>(n + 1));
  std::vector<char> ok(static_cast<size_t>(n + 1), 0);
  parallel_for(eg.size(), [&](size_t i) {
    try {
      eg[i] = eigh_hermitian(dtn(lo + step * static_cast<double>(i)));
      ok[i] = 1;
    } catch (const Error&) {
      ok[i] = 0;
    }
  });
  Index dim = 0;
  for (size_t i = 0; i < eg.size(); ++i)
    if (ok[i]) dim = eg[i].values.size();
  std::vector<DispersionRow> rows;
  std::vector<Index> label(static_cast<size_t>(dim));
  for (Index j = 0; j < dim; ++j) label[static_cast<size_t>(j)] = j;
  const Eigh* prev = nullptr;
  for (size_t i = 0; i < eg.size(); ++i) {
    const double lam = lo + step * static_cast<double>(i);
    if (!ok[i]) {
      for (Index j = 0; j < dim; ++j) rows.push_back({lam, j, std::nan("")});
      prev = nullptr;
      continue;
    }
    std::vector<Index> next(static_cast<size_t>(dim), -1);
    if (prev) {
      std::vector<char> used(static_cast<size_t>(dim), 0);
      Mat ov = (prev->vectors.adjoint() * eg[i].vectors).cwiseAbs().cast<cplx>();
      for (Index j = 0; j < dim; ++j) {
        Index best = -1;
        double bo = 0.7;
        for (Index k = 0; k < dim; ++k)
          if (!used[static_cast<size_t>(k)] && std::abs(ov(k, j)) > bo) {
            bo = std::abs(ov(k, j));
            best = k;
          }
        if (best >= 0) {
          used[static_cast<size_t>(best)] = 1;
          next[static_cast<size_t>(j)] = label[static_cast<size_t>(best)];
        }
      }
      // unmatched columns take the unused labels in sorted order
      std::vector<Index> free;
      for (Index k = 0; k < dim; ++k)
        if (!used[static_cast<size_t>(k)]) free.push_back(label[static_cast<size_t>(k)]);
      std::sort(free.begin(), free.end());
      size_t f = 0;
      for (Index j = 0; j < dim; ++j)
        if (next[static_cast<size_t>(j)] < 0) next[static_cast<size_t>(j)] = free[f++];
    } else {
      for (Index j = 0; j < dim; ++j) next[static_cast<size_t>(j)] = j;
    }
    label = next;
    std::vector<DispersionRow> here;
    for (Index j = 0; j < dim; ++j) here.push_back({lam, label[static_cast<size_t>(j)], eg[i].values(j)});
    std::sort(here.begin(), here.end(), [](const DispersionRow& a, const DispersionRow& b) { return a.branch < b.branch; });
    rows.insert(rows.end(), here.begin(), here.end());
    prev = &eg[i];
  }
  return rows;
}

}  // namespace glx
