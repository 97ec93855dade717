#include <gtest/gtest.h>

#include <numbers>

#include "glx/abvp.hpp"
#include "glx/coupling.hpp"

using namespace glx;

namespace {

constexpr double kPi = std::numbers::pi;

RVec sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return Eigen::Map<RVec>(v.data(), static_cast<Index>(v.size()));
}

// spec Δ_{C_n} = {1 - cos(2πk/n)}
RVec cycle_spectrum(int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(1.0 - std::cos(2.0 * kPi * k / n));
  return sorted(v);
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

// ---- hilbert --------------------------------------------------------------------------

TEST(Hilbert, WeightedInnerProduct) {
  WeightedSpace s(RVec::Constant(2, 1.0));
  s = WeightedSpace((RVec(2) << 1.0, 3.0).finished());
  Vec f(2), g(2);
  f << cplx(1, 1), 2.0;
  g << 1.0, cplx(0, 1);
  // (1+i)·1·1 + 2·(−i)·3
  EXPECT_NEAR(std::abs(s.inner(f, g) - cplx(1.0, -5.0)), 0.0, 1e-15);
  EXPECT_THROW(WeightedSpace((RVec(2) << 1.0, 0.0).finished()), Error);
}

TEST(Hilbert, AdjointIsWeightedTranspose) {
  CaseRng rng(1, 0, 0);
  WeightedSpace d(rng.weights(3)), c(rng.weights(4));
  LinOp t(d, c, rng.cmat(4, 3));
  LinOp ta = adjoint(t);
  for (int k = 0; k < 10; ++k) {
    Vec f = rng.cvec(3), g = rng.cvec(4);
    EXPECT_NEAR(std::abs(c.inner(t(f), g) - d.inner(f, ta(g))), 0.0, 1e-12);
  }
  EXPECT_LT(max_abs(adjoint(ta).m - t.m), 1e-14);
}

TEST(Hilbert, EighOrthonormalInWeights) {
  CaseRng rng(1, 0, 1);
  WeightedSpace s(rng.weights(5));
  // self-adjoint in the weighted product: T = W^{-1} A with A Hermitian
  Mat a = rng.hermitian(5);
  LinOp t(s, s, s.weights().cwiseInverse().cast<cplx>().asDiagonal() * a);
  Eigh e = eigh(t);
  Mat gram = e.vectors.adjoint() * s.gram() * e.vectors;
  EXPECT_LT(max_abs(gram - Mat::Identity(5, 5)), 1e-12);
  EXPECT_LT(max_abs(t.m * e.vectors - e.vectors * e.values.cast<cplx>().asDiagonal()), 1e-12);
  for (Index i = 1; i < 5; ++i) EXPECT_LE(e.values(i - 1), e.values(i));
  LinOp bad(s, s, rng.cmat(5, 5));
  EXPECT_THROW(eigh(bad), Error);
}

TEST(Hilbert, MatfuncSquareRootSquares) {
  CaseRng rng(1, 0, 2);
  WeightedSpace s(rng.weights(4));
  Mat b = rng.cmat(4, 4);
  Mat a = b.adjoint() * b + Mat::Identity(4, 4);
  LinOp t(s, s, s.weights().cwiseInverse().cast<cplx>().asDiagonal() * a);
  LinOp r = matfunc(t, [](double x) { return cplx(std::sqrt(x), 0.0); });
  EXPECT_LT(max_abs(r.m * r.m - t.m), 1e-10);
  EXPECT_THROW(matfunc(t, [](double) { return cplx(std::nan(""), 0.0); }), Error);
}

TEST(Hilbert, OpnormMatchesWeightedSpectralNorm) {
  // diag(2, 1) from weights (1, 4) to weights (1, 1): sup |2x|, |y| / sqrt(x² + 4y²) = 2
  Mat t = Mat::Zero(2, 2);
  t(0, 0) = 2.0;
  t(1, 1) = 1.0;
  Mat dom = Mat::Identity(2, 2);
  dom(1, 1) = 4.0;
  EXPECT_NEAR(opnorm(t, dom, Mat::Identity(2, 2)), 2.0, 1e-14);
  // degenerate domain Gram killed by T is fine, not killed is an error
  Mat sing = Mat::Zero(2, 2);
  sing(0, 0) = 1.0;
  Mat kills = Mat::Zero(2, 2);
  kills(0, 0) = 3.0;
  EXPECT_NEAR(opnorm(kills, sing, Mat::Identity(2, 2)), 3.0, 1e-14);
  EXPECT_THROW(opnorm(Mat::Identity(2, 2), sing, Mat::Identity(2, 2)), Error);
}

TEST(Hilbert, WeightedKernelIsOrthonormal) {
  CaseRng rng(1, 0, 3);
  RVec w = rng.weights(6);
  Mat c = rng.cmat(2, 6);
  Mat y = weighted_kernel(c, w);
  ASSERT_EQ(y.cols(), 4);
  EXPECT_LT(max_abs(c * y), 1e-12);
  EXPECT_LT(max_abs(y.adjoint() * w.cast<cplx>().asDiagonal() * y - Mat::Identity(4, 4)), 1e-12);
}

// ---- graph ------------------------------------------------------------------------------

TEST(Graph, ValidateRejectsLoopsAndDangling) {
  EXPECT_THROW(validate(Graph({"a"}, {{"l", "a", "a"}})), Error);
  EXPECT_THROW(validate(Graph({"a", "b"}, {{"e", "a", "c"}})), Error);
  EXPECT_THROW(validate(Graph({"a", "b"}, {{"e", "a", "b"}}, {"z"})), Error);
  ValidationReport r = validate(graphs::petersen());
  EXPECT_EQ(r.sum_deg, 2 * r.num_edges);
  EXPECT_LT(r.reorder_residual, 1e-12);
}

TEST(Graph, CycleSpectrumClosedForm) {
  for (int n : {3, 4, 5, 8})
    EXPECT_LT(multiset_distance(spectrum(normalized_laplacian(graphs::cycle(n))), cycle_spectrum(n)), 1e-12) << n;
  EXPECT_LT(multiset_distance(spectrum(normalized_laplacian(graphs::cycle(4))), (RVec(4) << 0, 1, 1, 2).finished()),
            1e-12);
}

TEST(Graph, CompleteAndPetersenSpectra) {
  // K_n: {0, n/(n-1) (n-1 times)}; Petersen (3-regular): 1 - {3, 1×5, -2×4}/3
  RVec k4(4);
  k4 << 0, 4.0 / 3, 4.0 / 3, 4.0 / 3;
  EXPECT_LT(multiset_distance(spectrum(normalized_laplacian(graphs::complete(4))), k4), 1e-12);
  RVec pet(10);
  pet << 0, 2.0 / 3, 2.0 / 3, 2.0 / 3, 2.0 / 3, 2.0 / 3, 5.0 / 3, 5.0 / 3, 5.0 / 3, 5.0 / 3;
  EXPECT_LT(multiset_distance(spectrum(normalized_laplacian(graphs::petersen())), pet), 1e-12);
}

TEST(Graph, SubdivisionAndLineGraphShapes) {
  Graph s = subdivision(graphs::k2());
  EXPECT_EQ(s.nv(), 3);
  EXPECT_EQ(s.ne(), 2);
  EXPECT_EQ(degree_sequence(s), (std::vector<Index>{1, 1, 2}));
  // S C_n = C_2n and L C_n = C_n
  for (int n : {3, 4, 6}) {
    EXPECT_LT(multiset_distance(spectrum(normalized_laplacian(subdivision(graphs::cycle(n)))), cycle_spectrum(2 * n)),
              1e-12);
    EXPECT_LT(multiset_distance(spectrum(normalized_laplacian(line_graph(graphs::cycle(n)))), cycle_spectrum(n)),
              1e-12);
  }
  // L K_4 is the octahedron, 4-regular on 6 vertices
  Graph lk4 = line_graph(graphs::complete(4));
  EXPECT_EQ(lk4.nv(), 6);
  EXPECT_EQ(regular_degree(lk4), std::optional<Index>(4));
}

TEST(Graph, StarComponentsGlueToSubdivision) {
  for (const Graph& g : {graphs::cycle(3), graphs::complete(4), graphs::star(3)}) {
    auto stars = star_components(g);
    ASSERT_EQ(static_cast<Index>(stars.size()), g.nv());
    std::vector<Graph> parts;
    for (const auto& s : stars) {
      EXPECT_EQ(static_cast<Index>(s.graph.boundary_ids().size()), g.deg(s.center));
      parts.push_back(s.graph);
    }
    Graph glued = glue(parts);
    Graph sg = subdivision(g);
    EXPECT_EQ(glued.nv(), sg.nv());
    EXPECT_EQ(glued.ne(), sg.ne());
    EXPECT_LT(multiset_distance(spectrum(normalized_laplacian(glued)), spectrum(normalized_laplacian(sg))), 1e-12);
  }
}

TEST(Graph, RandomFixturesAreConnected) {
  for (std::uint64_t i = 0; i < 20; ++i) {
    CaseRng rng(3, 0, i);
    Graph g = graphs::random_connected(rng, rng.integer(2, 30));
    EXPECT_EQ(num_components(g), 1);
    auto b = graphs::random_boundary(rng, g);
    EXPECT_GE(b.size(), 1u);
    EXPECT_NO_THROW(validate(g.with_boundary(b)));
  }
}

// ---- abvp-core -------------------------------------------------------------------------

TEST(Abvp, NeumannIsNormalisedLaplacian) {
  Graph g = graphs::cycle(5).with_boundary({"v0", "v2"});
  Abvp p = graph_abvp(g);
  EXPECT_LT(max_abs(p.neumann().m - normalized_laplacian(g).m), 1e-15);
}

TEST(Abvp, K2OneBoundaryVertex) {
  Abvp p = graph_abvp(graphs::k2().with_boundary({"a"}));
  // H^Dir = 1 on ker Γ = span δ_b; Λ(z) = (1 - z) - 1/(1 - z)
  EXPECT_LT(multiset_distance(p.dirichlet().spectrum, (RVec(1) << 1.0).finished()), 1e-14);
  for (cplx z : {cplx(-1.0), cplx(0.5), cplx(0.3, 2.0)}) {
    cplx want = (1.0 - z) - 1.0 / (1.0 - z);
    EXPECT_NEAR(std::abs(p.dtn(z).m(0, 0) - want), 0.0, 1e-13);
  }
  // S(-1)φ = (φ, φ/2), so ‖S(-1)‖ = √(5/4)
  EXPECT_NEAR(p.regularity_constant(), std::sqrt(1.25), 1e-13);
  EXPECT_THROW(p.dtn(1.0), Error);
}

TEST(Abvp, TrivialAbvpCollapses) {
  CaseRng rng(2, 0, 0);
  Mat b = rng.cmat(3, 3);
  Abvp p = Abvp::trivial(WeightedSpace::unit(3), b.adjoint() * b);
  EXPECT_EQ(p.dirichlet().spectrum.size(), 0);
  const cplx z(-0.7, 0.2);
  EXPECT_LT(max_abs(p.dtn(z).m - (p.form_matrix() - z * Mat::Identity(3, 3))), 1e-12);
  EXPECT_LT(p.krein_residual(z).residual, 1e-12);
  EXPECT_NEAR(p.regularity_constant(), 1.0, 1e-14);
  Vec f = rng.cvec(3), g = rng.cvec(3);
  EXPECT_LT(p.green_residual(f, g), 1e-12);
}

TEST(Abvp, ThreeDtnRoutesAgree) {
  for (std::uint64_t i = 0; i < 10; ++i) {
    CaseRng rng(2, 1, i);
    Graph g = graphs::random_connected(rng, rng.integer(3, 20));
    Abvp p = graph_abvp(g.with_boundary(graphs::random_boundary(rng, g)));
    for (cplx z : {cplx(-1.0), cplx(0.4, 0.9), cplx(3.0, -0.1)}) {
      Mat a = p.dtn(z).m, b = p.dtn_schur(z).m, c = p.dtn_form(z).m;
      EXPECT_LT(max_abs(a - b) / std::max(1.0, max_abs(b)), 1e-10);
      EXPECT_LT(max_abs(a - c) / std::max(1.0, max_abs(b)), 1e-10);
      // Λ(z)* = Λ(z̄)
      const RVec& w = p.boundary().weights();
      EXPECT_LT(max_abs(adjoint_matrix(a, w, w) - p.dtn(std::conj(z)).m), 1e-10);
    }
  }
}

TEST(Abvp, PathKreinAndGreen) {
  Abvp p = graph_abvp(graphs::path_amb().with_boundary({"a", "b"}));
  EXPECT_LT(p.krein_residual(-1.0).residual, 1e-12);
  CaseRng rng(2, 2, 0);
  for (int k = 0; k < 20; ++k) EXPECT_LT(p.green_residual(rng.cvec(3), rng.cvec(3)), 1e-12);
}

TEST(Abvp, SpectralRelationK2) {
  Abvp p = graph_abvp(graphs::k2().with_boundary({"a"}));
  SpectralRelation s0 = p.spectral_relation_check(0.0), s1 = p.spectral_relation_check(0.5);
  EXPECT_TRUE(s0.in_neumann);
  EXPECT_TRUE(s0.dtn_singular);
  EXPECT_FALSE(s1.in_neumann);
  EXPECT_FALSE(s1.dtn_singular);
  // Λ(0.5) = 0.5 - 2
  EXPECT_NEAR(s1.min_dtn_eig, 1.5, 1e-13);
}

TEST(Abvp, DtnBranchesDecrease) {
  Abvp p = graph_abvp(graphs::cycle(6).with_boundary({"v0", "v3"}));
  const RVec& d = p.dirichlet().spectrum;
  const RVec& w = p.boundary().weights();
  // first gap (−∞, d_0) sampled on 100 points
  RVec prev;
  for (int i = 0; i < 100; ++i) {
    const double lam = -2.0 + (d(0) - 1e-3 + 2.0) * i / 99.0;
    RVec ev = eigh_hermitian(orthonormal_coords(p.dtn(lam).m, w, w)).values;
    if (i) {
      for (Index j = 0; j < ev.size(); ++j) EXPECT_LE(ev(j), prev(j) + 1e-12);
    }
    prev = ev;
  }
}

TEST(Abvp, HalfGramIsPositive) {
  Abvp p = graph_abvp(graphs::petersen().with_boundary({"p0", "p3", "p7"}));
  RVec ev = eigh_hermitian(p.half_gram()).values;
  EXPECT_GT(ev.minCoeff(), 0.0);
}

TEST(Abvp, RejectsBadInput) {
  WeightedSpace h = WeightedSpace::unit(2);
  Mat q = Mat::Identity(2, 2);
  q(0, 1) = 1.0;  // not Hermitian
  EXPECT_THROW(Abvp::from_split(h, {0}, q), Error);
  Mat neg = -Mat::Identity(2, 2);
  EXPECT_THROW(Abvp::from_split(h, {0}, neg), Error);
  Abvp nonsplit(h, WeightedSpace::unit(1), (Mat(1, 2) << 1.0, 1.0).finished(), Mat::Identity(2, 2));
  EXPECT_THROW(nonsplit.gamma_prime(), Error);
}

// ---- coupling ---------------------------------------------------------------------------

TEST(Coupling, DirectSumIsBlockDiagonal) {
  Abvp a = graph_abvp(graphs::k2().with_boundary({"a"}));
  Abvp b = graph_abvp(graphs::cycle(3).with_boundary({"v1"}));
  Abvp s = direct_sum({a, b});
  EXPECT_EQ(s.space().dim(), 5);
  EXPECT_LT(multiset_distance(s.dirichlet().spectrum, concat({a.dirichlet().spectrum, b.dirichlet().spectrum})),
            1e-12);
  Abvp one = direct_sum({a});
  EXPECT_LT(max_abs(one.form_matrix() - a.form_matrix()), 1e-15);
}

TEST(Coupling, StarCouplingIsSubdivision) {
  for (const Graph& g : {graphs::k2(), graphs::cycle(3), graphs::cycle(4), graphs::complete(4), graphs::star(3)}) {
    VertexCoupling vc = vertex_couple(star_blueprint(g));
    CaseRng rng(4, 0, static_cast<std::uint64_t>(g.nv()));
    std::vector<cplx> zs;
    for (int i = 0; i < 20; ++i) zs.push_back(cplx(rng.uniform(-3, 3), rng.uniform(0.2, 2.0)));
    CouplingReport r = vertex_coupling_report(vc, zs);
    EXPECT_EQ(r.kernel_dim, r.kernel_dim_dec);
    EXPECT_LT(r.kernel_fit, 1e-10);
    EXPECT_LT(r.dirichlet_union, 1e-8);
    EXPECT_LT(r.dtn_two_path, 1e-10);
    EXPECT_LE(r.gamma_norm_sq, r.gamma_norm_bound + 1e-12);
    EXPECT_LT(multiset_distance(vc.coupled.neumann_spectrum(), spectrum(normalized_laplacian(subdivision(g)))),
              1e-10);
  }
}

TEST(Coupling, C3SubdivisionSpectrum) {
  // Δ_{C6}: 1 - cos(πk/3)
  VertexCoupling vc = vertex_couple(star_blueprint(graphs::cycle(3)));
  EXPECT_LT(multiset_distance(vc.coupled.neumann_spectrum(), cycle_spectrum(6)), 1e-10);
}

TEST(Coupling, StarDtnClosedForm) {
  for (Index d : {1, 2, 3, 5}) {
    Graph star = star_components(graphs::star(d)).front().graph;
    Abvp p = graph_abvp(star);
    for (cplx z : {cplx(-1.0), cplx(0.0), cplx(0.2, 0.4)})
      EXPECT_LT(max_abs(p.dtn(z).m - star_dtn_closed(d, z)), 1e-12);
  }
}

TEST(Coupling, CycleDtnAtMinusOnePositive) {
  VertexCoupling vc = vertex_couple(star_blueprint(graphs::cycle(4)));
  LinOp l = vc.coupled.dtn(-1.0);
  Eigh e = eigh(l);
  EXPECT_GT(e.values.minCoeff(), 0.0);
}

TEST(Coupling, SubdivisionEnergyIdentityOracle) {
  // f̃(v) = f(v), f̃(e) = mean of the endpoints: each edge contributes
  // 2 |(f(u) - f(v))/2|², so h_SG(f̃) = h_G(f)/2.
  Graph g = graphs::petersen();
  Graph sg = subdivision(g);
  Mat emb = Mat::Zero(sg.nv(), g.nv());
  for (Index v = 0; v < g.nv(); ++v) emb(sg.vertex_index(g.vertex_id(v)), v) = 1.0;
  for (Index e = 0; e < g.ne(); ++e) {
    Index k = sg.vertex_index(edge_node_id(g, g.edge(e).id));
    emb(k, g.edge(e).src) = emb(k, g.edge(e).dst) = 0.5;
  }
  CaseRng rng(4, 1, 0);
  for (int i = 0; i < 20; ++i) {
    Vec f = rng.cvec(g.nv());
    Vec ft = emb * f;
    const double hg = f.dot(energy_gram(g) * f).real(), hs = ft.dot(energy_gram(sg) * ft).real();
    EXPECT_NEAR(hg, 2.0 * hs, 1e-12 * hg);
  }
}

TEST(Coupling, LineGraphFitFrozen) {
  // ι*Λ^dec ι = 2(1 - z) - 2/(r(1 - z)) - (2r - 2)/(r(1 - z)) (1 - Δ_LG)
  for (const Graph& g : {graphs::cycle(4), graphs::complete(4)}) {
    LineGraphReport r = line_graph_dtn_check(g, {-1.0, cplx(0.3, 0.7), -0.5, cplx(2.0, 1.0)});
    const double rr = static_cast<double>(r.r);
    EXPECT_LT(r.affine_residual, 1e-12);
    EXPECT_NEAR(r.a1, 2.0, 1e-12);
    EXPECT_NEAR(r.a2, -2.0 / rr, 1e-12);
    EXPECT_NEAR(r.b, -(2.0 * rr - 2.0) / rr, 1e-12);
    EXPECT_LT(r.oracle_map_residual, 1e-8);
    EXPECT_LT(r.forward_map_residual, 1e-8);
    EXPECT_GT(r.printed_alpha_dev, 0.1);
    EXPECT_LT(r.beta_decay, 1e-3);
  }
  EXPECT_THROW(line_graph_dtn_check(graphs::star(3), {-1.0}), Error);
}

TEST(Coupling, TrivialEdgeAbvpsGiveShiftedLaplacian) {
  for (const Graph& g : {graphs::k2(), graphs::cycle(3), graphs::cycle(4), graphs::petersen()}) {
    EdgeCoupling ec = edge_couple(trivial_edge_blueprint(g));
    LinOp lap = normalized_laplacian(g);
    const RVec& wg = ec.coupled.boundary().weights();
    Mat on = orthonormal_coords(lap.m, lap.dom.weights(), lap.dom.weights());
    for (cplx z : {cplx(-1.0), cplx(0.5, 0.5), cplx(3.0, -1.0)}) {
      Mat l = orthonormal_coords(ec.coupled.dtn(z).m, wg, wg);
      EXPECT_LT(max_abs(l - (on - z * Mat::Identity(on.rows(), on.cols()))), 1e-12);
      // closed-form single edge DtN
      Mat le = ec.bp.edge[0].dtn(z).m;
      Mat want(2, 2);
      want << 1.0 - z, -1.0, -1.0, 1.0 - z;
      EXPECT_LT(max_abs(le - want), 1e-13);
    }
    EXPECT_LT(multiset_distance(ec.coupled.neumann_spectrum(), spectrum(lap)), 1e-10);
  }
}

TEST(Coupling, StandardSubspaceShapes) {
  Mat one = standard_vertex_subspace({RVec::Ones(1)});
  EXPECT_EQ(one.cols(), 1);
  EXPECT_NEAR(std::abs(one(0, 0)), 1.0, 1e-15);
  Mat two = standard_vertex_subspace({RVec::Ones(1), RVec::Ones(1)});
  ASSERT_EQ(two.cols(), 1);
  EXPECT_NEAR(std::abs(two(0, 0)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(two(1, 0)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(standard_vertex_subspace({RVec::Ones(1), RVec::Ones(2)}), Error);
}

TEST(Coupling, AveragedDtnMatchesOracle) {
  EdgeCoupling ec = edge_couple(trivial_edge_blueprint(graphs::cycle(3)));
  for (cplx z : {cplx(-1.0), cplx(0.2, 0.3)}) {
    Mat a = averaged_dtn(ec, z);
    Mat o = coupled_dtn_oracle(ec, z);
    EXPECT_LT(max_abs(a - o), 1e-12);
  }
}

TEST(Coupling, FullVertexSpacesGiveDirectSum) {
  EdgeCouplingBlueprint bp = trivial_edge_blueprint(graphs::cycle(3));
  for (Index v = 0; v < 3; ++v) bp.vertex_subspace[v] = Mat::Identity(2, 2);
  EdgeCoupling ec = edge_couple(bp);
  EXPECT_EQ(ec.coupled.space().dim(), ec.decoupled.space().dim());
  EXPECT_LT(multiset_distance(ec.coupled.neumann_spectrum(), ec.decoupled.neumann_spectrum()), 1e-12);
}

TEST(Coupling, TrivialVertexReduction) {
  for (const Graph& g : {graphs::cycle(3), graphs::complete(4), graphs::k2()}) {
    TrivialVertexCoupling tv = trivial_vertex_couple(trivial_edge_blueprint(g));
    CaseRng rng(4, 2, static_cast<std::uint64_t>(g.nv()));
    TrivialVertexReport r = trivial_vertex_report(tv, rng, 100);
    EXPECT_LT(r.intertwining, 1e-12);
    EXPECT_LT(r.form_matrix, 1e-12);
    EXPECT_LT(r.form_random, 1e-12);
    EXPECT_LT(r.range_residual, 1e-12);
    EXPECT_LE(r.u1_bound, 1.0 + 1e-12);
    EXPECT_EQ(r.kernel_dim, r.kernel_dim_tilde);
    EXPECT_LT(r.norm_change_spectrum, 1e-10);
  }
}
