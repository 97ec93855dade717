// glx: batch front end. Exit codes: 0 all checks passed, 1 a mathematical
// check failed, 2 input or configuration error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "glx/io.hpp"
#include "glx/verify.hpp"

namespace {

using glx::io::json;

int exit_code(glx::Errc c) {
  switch (c) {
    case glx::Errc::MuOutOfRange:
    case glx::Errc::HypothesisFails:
    case glx::Errc::SmallnessFails:
    case glx::Errc::SingularDtN:
    case glx::Errc::ZeroNotSimple:
    case glx::Errc::BdMapEstimateFails:
      return 1;
    default:
      return 2;
  }
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty())
    std::cout << text;
  else
    glx::io::write_file(out, text);
}

std::string csv_path(const std::string& out) {
  const auto dot = out.find_last_of('.');
  const auto slash = out.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + ".csv";
  return out.substr(0, dot) + ".csv";
}

// "re" or "re,im"
glx::cplx parse_z(const std::string& s) {
  try {
    const auto comma = s.find(',');
    size_t used = 0;
    const double re = std::stod(s.substr(0, comma), &used);
    if (comma == std::string::npos) {
      if (used != s.size()) throw std::invalid_argument(s);
      return {re, 0.0};
    }
    const std::string tail = s.substr(comma + 1);
    const double im = std::stod(tail, &used);
    if (used != tail.size()) throw std::invalid_argument(s);
    return {re, im};
  } catch (const std::logic_error&) {
    throw glx::Error(glx::Errc::InputError, "--dtn: expected RE or RE,IM, got '" + s + "'");
  }
}

struct Common {
  std::string input, out;
  std::vector<double> window;
  double grid_step = 0.0, tol = 1e-10;
  std::uint64_t seed = 0;
};

glx::SecularOptions secular_options(const Common& c) {
  glx::SecularOptions o;
  if (c.window.size() != 2) throw glx::Error(glx::Errc::InputError, "--window: LO HI required");
  o.lo = c.window[0];
  o.hi = c.window[1];
  if (!(o.lo < o.hi)) throw glx::Error(glx::Errc::InputError, "--window: need LO < HI");
  if (!(c.tol > 0)) throw glx::Error(glx::Errc::InputError, "--tol: must be positive");
  if (c.grid_step < 0) throw glx::Error(glx::Errc::InputError, "--grid-step: must be positive");
  o.step = c.grid_step;
  o.tol = c.tol;
  return o;
}

int cmd_graph(const Common& c, bool sub, bool line, bool spec, const std::string& dtn) {
  if (static_cast<int>(sub) + static_cast<int>(line) + static_cast<int>(spec) + static_cast<int>(!dtn.empty()) != 1)
    throw glx::Error(glx::Errc::InputError, "graph: choose exactly one of --subdivision, --line, --spectrum, --dtn");
  const glx::Graph g = glx::io::parse_graph(glx::io::read_file(c.input));
  json j;
  if (sub) j = glx::io::to_json(glx::subdivision(g));
  if (line) j = glx::io::to_json(glx::line_graph(g));
  if (spec) j = {{"spectrum", glx::io::to_json(glx::spectrum(glx::normalized_laplacian(g)))}};
  if (!dtn.empty()) {
    const glx::cplx z = parse_z(dtn);
    if (g.boundary_ids().empty()) throw glx::Error(glx::Errc::InputError, "graph.boundary: --dtn needs a boundary");
    const glx::LinOp l = glx::graph_abvp(g).dtn(z);
    j = {{"z", glx::io::to_json(z)}, {"boundary", g.boundary_ids()}, {"dtn", glx::io::to_json(l.m)}};
  }
  emit(c.out, glx::io::dump(j) + "\n");
  return 0;
}

int cmd_qg(const Common& c, const std::string& mode) {
  const glx::QuantumGraph qg = glx::io::parse_qgraph(glx::io::read_file(c.input));
  const glx::SecularOptions o = secular_options(c);
  if (mode == "dispersion") {
    emit(c.out, glx::io::dispersion_csv(glx::qg_dispersion(qg, o.lo, o.hi, o.grid_step())));
    return 0;
  }
  glx::SpectrumReport rep;
  if (mode == "spectrum") {
    rep = glx::neumann_spectrum(qg, o);
  } else {
    for (glx::Index e = 0; e < qg.graph.ne(); ++e)
      if (std::abs(qg.length[e] - 1.0) > 1e-12)
        throw glx::Error(glx::Errc::InputError, "qgraph.edges: equilateral mode needs unit lengths");
    if (!qg.standard) throw glx::Error(glx::Errc::InputError, "qgraph.vertex_spaces: equilateral mode needs standard");
    for (const auto& k : qg.fibre)
      if (k.rows() != qg.fibre[0].rows() || (k - qg.fibre[0]).cwiseAbs().maxCoeff() > 1e-12)
        throw glx::Error(glx::Errc::InputError, "qgraph.edges: equilateral mode needs one common K");
    rep = glx::equilateral_spectrum(qg.graph, qg.fibre[0], o);
  }
  json j = glx::io::to_json(rep);
  j["window"] = json::array({o.lo, o.hi});
  emit(c.out, glx::io::dump(j) + "\n");
  const std::string csv = glx::io::spectrum_csv(rep);
  if (c.out.empty())
    std::cout << csv;
  else
    glx::io::write_file(csv_path(c.out), csv);
  return 0;
}

int cmd_verify(const Common& c, const std::string& suite) {
  std::vector<glx::verify::SuiteReport> reps;
  if (suite == "all") {
    for (const auto& n : glx::verify::suite_names()) reps.push_back(glx::verify::run(n, c.seed));
  } else {
    reps.push_back(glx::verify::run(suite, c.seed));
  }
  json j;
  bool pass = true;
  if (reps.size() == 1) {
    j = glx::verify::to_json(reps[0]);
    pass = reps[0].pass;
  } else {
    glx::verify::SuiteReport all{"all"};
    json parts = json::array();
    for (const auto& r : reps) {
      all.cases += r.cases;
      all.max_residual = std::max(all.max_residual, r.max_residual);
      all.pass = all.pass && r.pass;
      parts.push_back(glx::verify::to_json(r));
    }
    j = glx::verify::to_json(all);
    j["suites"] = parts;
    pass = all.pass;
  }
  j["seed"] = c.seed;
  emit(c.out, glx::io::dump(j) + "\n");
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glx: abstract boundary value problems on graphs"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* s, bool input) {
    auto* o = s->add_option("--input", c.input, "input JSON");
    if (input) o->required()->check(CLI::ExistingFile);
    s->add_option("--out", c.out, "output path (stdout if absent)");
  };

  bool sub = false, line = false, spec = false;
  std::string dtn;
  auto* g = app.add_subcommand("graph", "graph constructions, spectra and DtN maps");
  add_common(g, true);
  g->add_flag("--subdivision", sub, "subdivision graph");
  g->add_flag("--line", line, "line graph");
  g->add_flag("--spectrum", spec, "spectrum of the normalised Laplacian");
  g->add_option("--dtn", dtn, "DtN map of the graph ABVP at z = RE[,IM]");

  std::string mode;
  auto* q = app.add_subcommand("qg", "quantum graph spectra and dispersion");
  add_common(q, true);
  q->add_option("mode", mode, "spectrum | equilateral | dispersion")
      ->required()
      ->check(CLI::IsMember({"spectrum", "equilateral", "dispersion"}));
  q->add_option("--window", c.window, "LO HI")->expected(2)->required();
  q->add_option("--grid-step", c.grid_step, "grid step (default window/2000)");
  q->add_option("--tol", c.tol, "root tolerance");

  std::string suite;
  std::vector<std::string> choices = glx::verify::suite_names();
  choices.push_back("all");
  auto* v = app.add_subcommand("verify", "run a verification suite");
  v->add_option("suite", suite, "suite name")->required()->check(CLI::IsMember(choices));
  v->add_option("--seed", c.seed, "seed for randomized suites");
  v->add_option("--out", c.out, "output path (stdout if absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*g) return cmd_graph(c, sub, line, spec, dtn);
    if (*q) return cmd_qg(c, mode);
    return cmd_verify(c, suite);
  } catch (const glx::Error& e) {
    std::cerr << "glx: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "glx: " << e.what() << "\n";
    return 2;
  }
}
