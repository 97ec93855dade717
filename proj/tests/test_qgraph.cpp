#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "glx/qgraph.hpp"

using namespace glx;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

QuantumGraph metric(const Graph& g, std::vector<double> len, Index dim = 1) {
  QuantumGraph qg;
  qg.graph = g;
  qg.length = std::move(len);
  for (Index e = 0; e < g.ne(); ++e) qg.fibre.push_back(Mat::Zero(dim, dim));
  return qg;
}

QuantumGraph unit_edge() { return metric(graphs::k2(), {1.0}); }

// Λ(k²) = k / sin(kℓ) [[cos kℓ, -1], [-1, cos kℓ]] from u'' + k²u = 0
Mat interval_closed(double len, cplx z) {
  const cplx k = std::sqrt(z);
  const cplx s = std::sin(k * len), c = std::cos(k * len);
  Mat m(2, 2);
  m << k * c / s, -k / s, -k / s, k * c / s;
  return m;
}

std::vector<double> within(const std::vector<double>& v, double lo, double hi) {
  std::vector<double> out;
  for (double x : v)
    if (x >= lo && x <= hi) out.push_back(x);
  return out;
}

}  // namespace

TEST(Interval, MatchesTrigonometricClosedForm) {
  for (double len : {1.0, 0.4, 2.5})
    for (cplx z : {cplx(-1.0), cplx(3.0), cplx(0.7, 0.2), cplx(20.0, -1.0)})
      EXPECT_LT(max_abs(interval_dtn(len, z) - interval_closed(len, z)), 1e-10) << len << " " << z;
}

TEST(Interval, FrozenValues) {
  Mat a = interval_dtn(1.0, -1.0);
  // coth 1 and -1/sinh 1
  EXPECT_NEAR(a(0, 0).real(), 1.3130352854993312, 1e-13);
  EXPECT_NEAR(a(0, 1).real(), -0.85091812823932156, 1e-13);
  Mat b = interval_dtn(1.0, 0.0);
  EXPECT_LT(max_abs(b - (Mat(2, 2) << 1.0, -1.0, -1.0, 1.0).finished()), 1e-15);
  // near z = 0 the series branch and the closed form agree
  EXPECT_LT(max_abs(interval_dtn(1.0, cplx(1e-3, 1e-3)) - interval_closed(1.0, cplx(1e-3, 1e-3))), 1e-10);
}

TEST(Interval, DirichletPoleIsRejected) {
  EXPECT_THROW(interval_dtn(1.0, kPi * kPi), Error);
  EXPECT_THROW(interval_dtn(0.5, 4.0 * kPi * kPi), Error);
}

TEST(Interval, VectorFibreDiagonalises) {
  Mat k = Mat::Zero(2, 2);
  k(1, 1) = 9.0;
  const cplx z(4.0, 0.3);
  Mat m = edge_dtn(1.0, k, z);
  Mat s0 = interval_dtn(1.0, z), s1 = interval_dtn(1.0, z - 9.0);
  // blocks: minus end coordinates (0, 1), plus end (2, 3)
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      EXPECT_NEAR(std::abs(m(2 * a, 2 * b) - s0(a, b)), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(m(2 * a + 1, 2 * b + 1) - s1(a, b)), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(m(2 * a, 2 * b + 1)), 0.0, 1e-12);
    }
}

TEST(QGraph, ValidateRejectsBadData) {
  QuantumGraph qg = metric(graphs::cycle(3), {1.0, 1.0, 1.0});
  EXPECT_NO_THROW(validate(qg));
  QuantumGraph neg = qg;
  neg.length[1] = -1.0;
  EXPECT_THROW(validate(neg), Error);
  QuantumGraph mism = qg;
  mism.fibre[0] = Mat::Identity(1, 1);
  try {
    validate(mism);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::FibreMismatch);
  }
  QuantumGraph nh = metric(graphs::k2(), {1.0}, 2);
  nh.fibre[0](0, 1) = 1.0;
  try {
    validate(nh);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotSelfAdjoint);
  }
}

TEST(QGraph, DirichletSpectrumIsEdgewise) {
  QuantumGraph qg = metric(graphs::path(3), {1.0, 0.5});
  std::vector<double> d = dirichlet_spectrum(qg, 200.0);
  std::vector<double> want;
  for (int n = 1; n * n * kPi * kPi <= 200.0; ++n) want.push_back(n * n * kPi * kPi);
  for (int n = 1; 4.0 * n * n * kPi * kPi <= 200.0; ++n) want.push_back(4.0 * n * n * kPi * kPi);
  std::sort(want.begin(), want.end());
  ASSERT_EQ(d.size(), want.size());
  for (size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], want[i], 1e-9);
}

TEST(QGraph, StandardDtnEqualsBasisForm) {
  QuantumGraph qg = metric(graphs::complete(4), {1.0, 0.6, 0.8, 1.3, 0.9, 1.1});
  for (cplx z : {cplx(-1.0), cplx(2.0, 0.5)}) {
    LinOp l = qg_dtn(qg, z);
    Mat on = orthonormal_coords(l.m, l.dom.weights(), l.cod.weights());
    EXPECT_LT(max_abs(on - qg_dtn_basis(qg, z)), 1e-12);
  }
  // Λ(0) on a connected graph kills the constants
  Mat l0 = qg_dtn_basis(qg, 0.0);
  EXPECT_NEAR(eigh_hermitian(l0).values.cwiseAbs().minCoeff(), 0.0, 1e-12);
}

TEST(QGraph, SingleEdgeNeumannSpectrum) {
  SecularOptions opt;
  opt.lo = 0.0;
  opt.hi = 50.0;
  SpectrumReport r = neumann_spectrum(unit_edge(), opt);
  EXPECT_TRUE(r.unresolved.empty());
  ASSERT_EQ(r.eigenvalues.size(), 3u);
  const double want[] = {0.0, kPi * kPi, 4.0 * kPi * kPi};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.eigenvalues[i], want[i], 1e-6);
    EXPECT_EQ(r.multiplicity[i], 1);
  }
}

TEST(QGraph, MixedLengthStarAgreesWithFd) {
  QuantumGraph qg = metric(graphs::star(3), {1.0, 0.7, 0.5});
  SecularOptions opt;
  opt.lo = -0.5;
  opt.hi = 40.0;
  SpectrumReport sec = neumann_spectrum(qg, opt);
  FdResult fd = fd_oracle(qg, 1.0 / 200, 6);
  std::vector<double> s = sec.expanded(), f = fd.report.expanded();
  ASSERT_GE(s.size(), 4u);
  for (size_t i = 0; i < 4; ++i) EXPECT_NEAR(s[i], f[i], 2e-3 * std::max(1.0, s[i])) << i;
  EXPECT_LT(fd.vertex_residual, 1e-3);
}

TEST(QGraph, FdRejectsCoarseMesh) {
  try {
    fd_oracle(unit_edge(), 0.2, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MeshTooCoarse);
  }
}

TEST(QGraph, FdConvergesQuadratically) {
  const double pi2 = kPi * kPi;
  // one-sided vertex stencil adds an O(h³) term, so stay off the coarsest meshes
  FdResult a = fd_oracle(unit_edge(), 1.0 / 100, 3), b = fd_oracle(unit_edge(), 1.0 / 200, 3), c = fd_oracle(unit_edge(), 1.0 / 400, 3);
  const double ea = std::abs(a.report.expanded()[1] - pi2), eb = std::abs(b.report.expanded()[1] - pi2),
               ec = std::abs(c.report.expanded()[1] - pi2);
  EXPECT_NEAR(ea / eb, 4.0, 0.5);
  EXPECT_NEAR(eb / ec, 4.0, 0.5);
}

// Equilateral standard DtN on ℓ²(V, deg): Λ(z) = (√z / sin√z)(cos√z − 1 + Δ_G).
TEST(QGraph, EquilateralDtnFactorises) {
  const Graph g = graphs::cycle(4);
  const QuantumGraph qg = metric(g, {1, 1, 1, 1});
  const Mat lap = normalized_laplacian(g).m;
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> re(-5.0, 30.0), im(0.1, 3.0);
  for (int i = 0; i < 20; ++i) {
    const cplx z(re(eng), im(eng));
    const cplx k = std::sqrt(z);
    const Mat want = (k / std::sin(k)) * ((std::cos(k) - 1.0) * Mat::Identity(4, 4) + lap);
    EXPECT_LT(max_abs(qg_dtn(qg, z).m - want), 1e-10 * std::max(1.0, max_abs(want))) << z;
  }
}

TEST(QGraph, EquilateralCycleMatchesSecular) {
  Mat k0 = Mat::Zero(1, 1);
  SecularOptions opt;
  opt.lo = 0.0;
  opt.hi = 20.0;
  SpectrumReport eq = equilateral_spectrum(graphs::cycle(4), k0, opt);
  SpectrumReport sec = neumann_spectrum(metric(graphs::cycle(4), {1, 1, 1, 1}), opt);
  bool found = false;
  for (size_t i = 0; i < eq.eigenvalues.size(); ++i)
    if (std::abs(eq.eigenvalues[i] - kPi * kPi / 4.0) < 1e-8) {
      found = true;
      EXPECT_EQ(eq.multiplicity[i], 2);
    }
  EXPECT_TRUE(found);
  std::vector<double> a, b;
  for (double x : eq.expanded())
    if (!eq.in_window(x)) a.push_back(x);
  for (double x : sec.expanded())
    if (!eq.in_window(x)) b.push_back(x);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-8);
}

TEST(QGraph, EquilateralRejectsDisconnected) {
  Graph two({"a", "b", "c", "d"}, {{"x", "a", "b"}, {"y", "c", "d"}});
  SecularOptions opt;
  opt.lo = 0.0;
  opt.hi = 10.0;
  EXPECT_THROW(equilateral_spectrum(two, Mat::Zero(1, 1), opt), Error);
}

TEST(QGraph, VectorFibreShiftsSpectrum) {
  QuantumGraph scalar = metric(graphs::cycle(4), {1, 1, 1, 1});
  QuantumGraph vec = metric(graphs::cycle(4), {1, 1, 1, 1}, 2);
  for (auto& k : vec.fibre) k(1, 1) = 9.0;
  SecularOptions opt;
  opt.lo = 0.0;
  opt.hi = 20.0;
  std::vector<double> s = neumann_spectrum(scalar, opt).expanded(), v = neumann_spectrum(vec, opt).expanded();
  std::vector<double> want = s;
  for (double x : s)
    if (x + 9.0 <= 20.0) want.push_back(x + 9.0);
  std::sort(want.begin(), want.end());
  ASSERT_EQ(v.size(), want.size());
  for (size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], want[i], 1e-8);
}

TEST(QGraph, DispersionGridContract) {
  auto rows = qg_dispersion(metric(graphs::cycle(3), {1.0, 0.8, 1.2}), 0.0, 5.0, 0.05);
  // 101 grid points, 3 branches
  EXPECT_EQ(rows.size(), 101u * 3u);
  std::set<Index> branches;
  for (const auto& r : rows) branches.insert(r.branch);
  EXPECT_EQ(branches.size(), 3u);
}

TEST(Secular, GraphAbvpScalarFamily) {
  // K₂, ∂ = {a}: Λ(λ) = (1 - λ) - 1/(1 - λ), zeros 0 and 2, pole 1
  auto lam = [](double x) {
    Mat m(1, 1);
    m(0, 0) = (1.0 - x) - 1.0 / (1.0 - x);
    return m;
  };
  SecularOptions opt;
  opt.lo = -0.5;
  opt.hi = 2.5;
  SpectrumReport r = secular_spectrum(lam, std::vector<double>{1.0}, opt);
  ASSERT_EQ(r.eigenvalues.size(), 2u);
  EXPECT_NEAR(r.eigenvalues[0], 0.0, 1e-9);
  EXPECT_NEAR(r.eigenvalues[1], 2.0, 1e-9);
  ASSERT_EQ(r.unresolved.size(), 1u);
  EXPECT_TRUE(r.in_window(1.0));
  EXPECT_THROW(secular_spectrum(lam, std::vector<double>{1.0}, SecularOptions{2.0, 1.0}), Error);
}

TEST(Secular, RootsGroupedIntoMultiplicities) {
  std::vector<double> vals;
  std::vector<int> mult;
  group_roots({1.0, 1.0 + 1e-12, 2.0, 3.0, 3.0 - 1e-12, 3.0}, 1e-9, &vals, &mult);
  ASSERT_EQ(vals.size(), 3u);
  EXPECT_EQ(mult, (std::vector<int>{2, 1, 3}));
}

TEST(Secular, PoleWindowsMerge) {
  auto w = pole_windows({1.0, 1.05, 3.0, 10.0}, 0.0, 5.0, 0.1);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NEAR(w[0].first, 0.9, 1e-15);
  EXPECT_NEAR(w[0].second, 1.15, 1e-15);
  EXPECT_EQ(within({0.5, 1.5, 2.5}, 1.0, 2.0).size(), 1u);
}
