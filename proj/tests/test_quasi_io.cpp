#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "glx/io.hpp"
#include "glx/quasi_iso.hpp"
#include "glx/verify.hpp"

using namespace glx;

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Abvp path_a() { return graph_abvp(graphs::path_amb().with_boundary({"a"})); }

}  // namespace

// ---- quasi-iso -------------------------------------------------------------------------

TEST(QuasiIso, IdentityIdsHaveZeroDefect) {
  Abvp p = graph_abvp(graphs::cycle(5).with_boundary({"v1", "v3"}));
  ClosenessReport r = closeness(p, p, identity_ids(p));
  EXPECT_LT(r.total, 1e-13);
}

TEST(QuasiIso, ScaledFormDefectIsExact) {
  // J = id between h and (1+ε)h: forms defect sup |ε h(u, f)| / (‖u‖₁ ‖f‖₁)
  Abvp p = graph_abvp(graphs::cycle(4).with_boundary({"v0"}));
  const double eps = 0.25;
  Abvp q = Abvp::from_split(p.space(), p.split_indices(), (1.0 + eps) * p.form_matrix());
  ClosenessReport r = closeness(p, q, identity_ids(p));
  // oracle: largest generalised eigenvalue of (ε Q) against the ℋ¹ Grams,
  // ε λ / sqrt((1 + λ)(1 + (1+ε) λ)) maximised over spec H^Neu = {0, 1, 1, 2}
  double want = 0.0;
  for (double lam : {0.0, 1.0, 2.0}) want = std::max(want, eps * lam / std::sqrt((1 + lam) * (1 + (1 + eps) * lam)));
  EXPECT_NEAR(r.forms, want, 1e-12);
  EXPECT_LT(r.bd_fwd + r.bd_bwd + r.qu_max, 1e-13);
}

TEST(QuasiIso, TrivialLimitPathConstants) {
  TrivialLimit t = trivial_limit_ids(path_a(), 1.0);
  EXPECT_NEAR(t.lambda1, 1.0, 1e-12);
  EXPECT_NEAR(t.gamma, 4.0, 1e-12);
  EXPECT_TRUE(std::isinf(t.mu1));
  EXPECT_NEAR(t.delta, 2.0 * std::sqrt(3.0), 1e-12);
  // frozen measured components
  EXPECT_LT(t.report.forms, 1e-14);
  EXPECT_NEAR(t.report.bd_bwd, 2.0 / std::sqrt(3.0), 1e-10);
  EXPECT_NEAR(t.report.qu[2], 1.0 / std::sqrt(2.0), 1e-10);
  CaseRng rng(9, 0, 0);
  EXPECT_LE(sample_excess(side_of(t.trivial), side_of(path_a()), t.ids, t.delta, rng, 200), 0.0);
}

TEST(QuasiIso, TrivialLimitDefaultA) {
  TrivialLimit t = trivial_limit_ids(graph_abvp(graphs::cycle(4).with_boundary({"v0"})));
  EXPECT_EQ(t.a, 1.0);
  EXPECT_NEAR(t.delta, 2.0 * std::sqrt(3.0), 1e-12);
  EXPECT_LE(t.report.total, t.delta);
}

TEST(QuasiIso, TrivialLimitErrors) {
  // disconnected graph: 0 is not simple
  Graph two({"a", "b", "c", "d"}, {{"x", "a", "b"}, {"y", "c", "d"}}, {"a"});
  try {
    trivial_limit_ids(graph_abvp(two));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroNotSimple);
  }
  EXPECT_THROW(trivial_limit_ids(path_a(), 1.5), Error);
  EXPECT_TRUE(bd_map_estimate_holds(path_a(), 1.0));
}

TEST(QuasiIso, SmoothingSolvesConstraint) {
  VertexCoupling vc = vertex_couple(star_blueprint(graphs::k2()));
  SmoothingOp s = smoothing_from_solutions(vc);
  EXPECT_LT(s.constraint_residual, 1e-12);
  EXPECT_LT(s.hypothesis_residual, 1e-10);
  EXPECT_NEAR(s.c, std::sqrt(1.5), 1e-10);
}

TEST(QuasiIso, CoupledSweepScalesLinearly) {
  auto pts = verify::coupled_sweep(graphs::cycle(3), {1e-1, 1e-2, 1e-3, 1e-4});
  double prev = kInf;
  for (const auto& p : pts) {
    const double m = p.cc.report.forms_and_maps();
    EXPECT_LE(m, p.cc.bound);
    EXPECT_LT(m, prev);
    EXPECT_LT(p.cc.range_residual, 1e-12);
    EXPECT_NEAR(m / p.eps, pts.back().cc.report.forms_and_maps() / pts.back().eps, 0.1 * m / p.eps);
    prev = m;
  }
}

// ---- io ----------------------------------------------------------------------------------

TEST(Io, GraphRoundTrip) {
  Graph g = graphs::petersen().with_boundary({"p1", "p4"});
  std::string text = io::dump(io::to_json(g));
  Graph h = io::parse_graph(io::parse_text(text, "t"));
  EXPECT_EQ(h.vertex_ids(), g.vertex_ids());
  EXPECT_EQ(h.boundary_ids(), g.boundary_ids());
  ASSERT_EQ(h.ne(), g.ne());
  for (Index e = 0; e < g.ne(); ++e) EXPECT_EQ(h.edge(e).id, g.edge(e).id);
}

TEST(Io, ErrorsNameTheField) {
  auto msg = [](const std::string& text) {
    try {
      io::parse_graph(io::parse_text(text, "in"));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InputError);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(msg(R"({"vertices":["a","b"],"edges":[{"id":"e","src":"a"}]})").find("edges[0].dst"), std::string::npos);
  EXPECT_NE(msg(R"({"edges":[]})").find("vertices"), std::string::npos);
  EXPECT_NE(msg(R"({"vertices":["a"],"edges":[{"id":"e","src":"a","dst":"a"}]})").find("loop"), std::string::npos);
  EXPECT_NE(msg("{not json").find("malformed"), std::string::npos);
}

TEST(Io, QuantumGraphParsing) {
  const char* text = R"({
    "graph": {"vertices": ["a", "b"], "edges": [{"id": "e", "src": "a", "dst": "b"}]},
    "edges": [{"id": "e", "length": 2.0, "fibre_dim": 2, "K": [[0, [1, 0]], [[1, 0], 3]]}],
    "vertex_spaces": "standard"})";
  QuantumGraph qg = io::parse_qgraph(io::parse_text(text, "q"));
  EXPECT_EQ(qg.length[0], 2.0);
  EXPECT_EQ(qg.fibre_dim(0), 2);
  EXPECT_NEAR(std::abs(qg.fibre[0](1, 1) - 3.0), 0.0, 0.0);
  const char* bad = R"({"graph": {"vertices": ["a", "b"], "edges": [{"id": "e", "src": "a", "dst": "b"}]},
    "edges": [{"id": "e", "length": -1}]})";
  try {
    io::parse_qgraph(io::parse_text(bad, "q"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("length"), std::string::npos);
  }
}

TEST(Io, AbvpAndBlueprintParsing) {
  const char* text = R"({"weights": [1, 2], "split": [0], "form": [[1, -1], [-1, 1]]})";
  Abvp p = io::parse_abvp(io::parse_text(text, "p"));
  EXPECT_EQ(p.boundary().dim(), 1);
  EXPECT_EQ(p.boundary().weights()(0), 1.0);
  VertexCouplingBlueprint bp = io::parse_vertex_blueprint(
      io::parse_text(R"({"graph": {"vertices": ["a", "b"], "edges": [{"id": "e", "src": "a", "dst": "b"}]}})", "b"));
  VertexCoupling vc = vertex_couple(bp);
  EXPECT_EQ(vc.coupled.space().dim(), 3);
}

TEST(Io, SeventeenDigits) {
  EXPECT_EQ(io::num(0.1), "0.10000000000000001");
  EXPECT_EQ(io::dump(io::json(1.0 / 3.0)), "0.33333333333333331");
  EXPECT_EQ(io::dump(io::jnum(kInf)), "\"inf\"");
  EXPECT_EQ(std::stod(io::num(std::acos(-1.0))), std::acos(-1.0));
}

TEST(Io, CsvHeaders) {
  SpectrumReport r;
  r.eigenvalues = {0.0, 2.5};
  r.multiplicity = {1, 2};
  r.method = "secular";
  EXPECT_EQ(io::spectrum_csv(r), "lambda,multiplicity,method\n0,1,secular\n2.5,2,secular\n");
  EXPECT_EQ(io::dispersion_csv({}).rfind("lambda,branch_index,eigenvalue_of_dtn\n", 0), 0u);
  EXPECT_EQ(io::sweep_csv({}).rfind("epsilon,delta_measured,delta_bound\n", 0), 0u);
}

// ---- verify --------------------------------------------------------------------------------

TEST(Verify, SuitesAreDeterministic) {
  auto a = io::dump(verify::to_json(verify::run("green", 11)));
  auto b = io::dump(verify::to_json(verify::run("green", 11)));
  EXPECT_EQ(a, b);
  EXPECT_THROW(verify::run("nope", 1), Error);
}

TEST(Verify, FastSuitesPass) {
  for (const char* s : {"krein", "green", "subdivision-corollary", "thm314", "prop210", "thm42"}) {
    verify::SuiteReport r = verify::run(s, 7);
    EXPECT_TRUE(r.pass) << s << " " << io::dump(r.details);
    EXPECT_GT(r.cases, 0);
  }
}

TEST(Verify, SubdivisionEmbeddingOracle) {
  Graph g = graphs::cycle(5);
  Mat emb = verify::subdivision_embedding(g);
  Graph sg = subdivision(g);
  CaseRng rng(5, 0, 0);
  Vec f = rng.cvec(g.nv());
  Vec ft = emb * f;
  EXPECT_NEAR(f.dot(energy_gram(g) * f).real(), 2.0 * ft.dot(energy_gram(sg) * ft).real(), 1e-12);
  EXPECT_LT(max_abs(emb.topRows(g.nv()) - Mat::Identity(g.nv(), g.nv())), 0.0 + 1e-15);
}

// ---- cli ------------------------------------------------------------------------------------

#ifdef GLX_BIN
namespace {

struct CliRun {
  int code;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(GLX_BIN) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int st = pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string tmp(const std::string& name, const std::string& text) {
  const std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << text;
  return path;
}

const char* kC4 = R"({"vertices": ["a", "b", "c", "d"], "edges": [
  {"id": "ab", "src": "a", "dst": "b"}, {"id": "bc", "src": "b", "dst": "c"},
  {"id": "cd", "src": "c", "dst": "d"}, {"id": "da", "src": "d", "dst": "a"}]})";

}  // namespace

TEST(Cli, GraphSpectrumAndSubdivision) {
  CliRun r = run("graph --input " + tmp("c4.json", kC4) + " --spectrum");
  ASSERT_EQ(r.code, 0);
  auto j = io::json::parse(r.out);
  std::vector<double> s = j["spectrum"].get<std::vector<double>>();
  ASSERT_EQ(s.size(), 4u);
  const double want[] = {0, 1, 1, 2};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(s[i], want[i], 1e-12);
  CliRun k = run("graph --input " +
              tmp("k2.json", R"({"vertices":["a","b"],"edges":[{"id":"e","src":"a","dst":"b"}]})") +
              " --subdivision");
  ASSERT_EQ(k.code, 0);
  EXPECT_EQ(io::json::parse(k.out)["vertices"].size(), 3u);
}

TEST(Cli, GraphDtnNeedsBoundary) {
  EXPECT_EQ(run("graph --input " + tmp("c4b.json", kC4) + " --dtn -1").code, 2);
  std::string withb = std::string(kC4);
  withb.insert(withb.rfind('}'), R"(, "boundary": ["a"])");
  CliRun r = run("graph --input " + tmp("c4c.json", withb) + " --dtn -1,0");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(io::json::parse(r.out)["dtn"].size(), 1u);
}

TEST(Cli, MalformedEdgeExitsTwo) {
  CliRun r = run("graph --input " + tmp("bad.json", R"({"vertices":["a","b"],"edges":[{"id":"e","src":"a"}]})") +
              " --spectrum");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(run("graph --input /nonexistent.json --spectrum").code, 2);
  EXPECT_EQ(run("verify nosuch").code, 2);
}

TEST(Cli, QgSpectrumWritesJsonAndCsv) {
  const std::string in = tmp("edge.json", R"({"graph": {"vertices": ["a", "b"], "edges": [{"id": "e", "src": "a", "dst": "b"}]},
    "edges": [{"id": "e", "length": 1.0}]})");
  const std::string out = ::testing::TempDir() + "edge_spec.json";
  CliRun r = run("qg spectrum --input " + in + " --window 0 50 --out " + out);
  ASSERT_EQ(r.code, 0);
  std::ifstream js(out);
  auto j = io::json::parse(js);
  ASSERT_EQ(j["eigenvalues"].size(), 3u);
  EXPECT_NEAR(j["eigenvalues"][1]["lambda"].get<double>(), 9.8696044010893586, 1e-6);
  std::ifstream cs(::testing::TempDir() + "edge_spec.csv");
  std::string header;
  std::getline(cs, header);
  EXPECT_EQ(header, "lambda,multiplicity,method");
}

TEST(Cli, QgEquilateralAndDispersion) {
  const std::string in = tmp("c4q.json", std::string(R"({"graph": )") + kC4 + R"(, "edges": [
    {"id": "ab", "length": 1}, {"id": "bc", "length": 1}, {"id": "cd", "length": 1}, {"id": "da", "length": 1}]})");
  CliRun r = run("qg equilateral --input " + in + " --window 0 20");
  ASSERT_EQ(r.code, 0);
  const std::string json_part = r.out.substr(0, r.out.find("lambda,multiplicity"));
  auto j = io::json::parse(json_part);
  bool found = false;
  for (const auto& e : j["eigenvalues"])
    if (std::abs(e["lambda"].get<double>() - 2.4674011002723395) < 1e-8) {
      found = true;
      EXPECT_EQ(e["multiplicity"].get<int>(), 2);
    }
  EXPECT_TRUE(found);
  CliRun d = run("qg dispersion --input " + in + " --window 0 2 --grid-step 0.5");
  ASSERT_EQ(d.code, 0);
  // 5 grid points × 4 vertex coordinates, plus the header
  EXPECT_EQ(std::count(d.out.begin(), d.out.end(), '\n'), 21);
}

TEST(Cli, VerifyExitCodes) {
  CliRun r = run("verify thm42 --seed 7");
  EXPECT_EQ(r.code, 0);
  auto j = io::json::parse(r.out);
  EXPECT_EQ(j["suite"], "thm42");
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(run("verify thm42 --seed 7").out, r.out);
}
#endif
