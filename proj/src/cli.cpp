#include "geofactor/cli.hpp"

#include "geofactor/certify.hpp"

#include <CLI11.hpp>

#include <boost/version.hpp>
#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace geofactor {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Options
{
  std::string problem, target, cert, out, report, input, family, kernel, G, problem_out;
  double gap_tol = 1e-6;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  int threads = 0;
  int restarts = 8;
  double A = 0.0;
};

class Session
{
public:
  Session(std::string command, const Options& o, std::ostream& out) : o_(o), out_(out)
  {
    manifest_.command = std::move(command);
    manifest_.seed = o.seed;
    opts_.gap_tol = o.gap_tol;
    opts_.seed = o.seed;
    opts_.restarts = o.restarts;
    opts_.threads = o.threads > 0 ? o.threads : env_threads();
    out_ << std::setprecision(15);
  }

  Json load(const std::string& path)
  {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw JsonError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    manifest_.inputs.emplace_back(path, fnv1a_digest(buf.str()));
    return parse_json(buf.str(), path);
  }

  void tolerance(const std::string& name, double v) { manifest_.tolerances[name] = v; }

  /// Adds the manifest and writes to path when one was given.
  void emit(Json doc, const std::string& path)
  {
    doc["manifest"] = manifest_.to_json();
    if (!path.empty())
    {
      write_json_file(path, doc);
      out_ << "wrote: " << path << "\n";
    }
  }

  void finish()
  {
    const auto dt = std::chrono::steady_clock::now() - start_;
    out_ << "wall_time_s: " << std::chrono::duration<double>(dt).count() << "\n";
  }

  const Options& o() const { return o_; }
  const SolverOptions& opts() const { return opts_; }
  std::ostream& out() { return out_; }

private:
  static int env_threads()
  {
    if (const char* env = std::getenv("GEOFACTOR_THREADS"))
    {
      const int t = std::atoi(env);
      if (t > 0)
        return t;
    }
    return 1;
  }

  const Options& o_;
  std::ostream& out_;
  RunManifest manifest_;
  SolverOptions opts_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Json values_json(const RealFunction& f)
{
  Json v = Json::array();
  for (std::size_t i = 0; i < f.size(); ++i)
    v.push_back(f[i]);
  return v;
}

Json report_json(const CertReport& r)
{
  return Json{{"pass", r.pass},
              {"pointwise_max_violation", r.pointwise_max_violation},
              {"per_j_dual_norm_slack", r.per_j_dual_norm_slack},
              {"product_form_slack", r.product_form_slack},
              {"structural_error", r.structural_error}};
}

void print_report(std::ostream& out, const CertReport& r)
{
  if (!r.structural_error.empty())
    out << "structural_error: " << r.structural_error << "\n";
  out << "pointwise_max_violation: " << r.pointwise_max_violation << "\n";
  for (std::size_t j = 0; j < r.per_j_dual_norm_slack.size(); ++j)
    out << "dual_norm_slack[" << j << "]: " << r.per_j_dual_norm_slack[j] << "\n";
  out << "verdict: " << (r.pass ? "PASS" : "FAIL") << "\n";
}

std::vector<double> number_list(const Json& j, const char* key)
{
  if (!j.contains(key) || !j.at(key).is_array())
    throw JsonError(std::string("field '") + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j.at(key))
    out.push_back(exponent_from_json(v));
  return out;
}

double number_field(const Json& j, const char* key)
{
  if (!j.contains(key))
    throw JsonError(std::string("missing field '") + key + "'");
  return exponent_from_json(j.at(key));
}

Rational rational_from_json(const Json& v)
{
  if (v.is_number_integer())
    return Rational(v.get<long long>());
  if (v.is_string())
    return parse_rational(v.get<std::string>());
  if (v.is_number())
    return parse_rational(v.dump());
  throw JsonError("expected a rational as an integer, decimal or \"a/b\" string");
}

IntMatrix int_matrix(const Json& v, const std::string& what)
{
  if (!v.is_array())
    throw JsonError(what + " must be an array of integer rows");
  IntMatrix M;
  for (const auto& row : v)
  {
    if (!row.is_array())
      throw JsonError(what + " must be an array of integer rows");
    std::vector<long long> r;
    for (const auto& e : row)
    {
      if (!e.is_number_integer())
        throw JsonError(what + " entries must be integers");
      r.push_back(e.get<long long>());
    }
    M.push_back(std::move(r));
  }
  return M;
}

std::vector<IntMatrix> int_matrices(const Json& j, const char* key)
{
  if (!j.contains(key) || !j.at(key).is_array())
    throw JsonError(std::string("field '") + key + "' must be an array of matrices");
  std::vector<IntMatrix> out;
  for (const auto& m : j.at(key))
    out.push_back(int_matrix(m, key));
  return out;
}

void write_problem(Session& s, const GeometricMeanProblem& problem)
{
  if (!s.o().problem_out.empty())
  {
    write_json_file(s.o().problem_out, to_json(problem));
    s.out() << "wrote: " << s.o().problem_out << "\n";
  }
}

/// Summary plus exit status for a constructed certificate of `problem`.
int finish_certificate(Session& s, const GeometricMeanProblem& problem, const FactorisationCertificate& cert, Json doc)
{
  const CertReport r = check_factorisation(problem, cert, s.o().tol);
  s.out() << "K: " << cert.K << "\n";
  print_report(s.out(), r);
  doc["report"] = report_json(r);
  write_problem(s, problem);
  s.emit(std::move(doc), s.o().out);
  s.finish();
  return r.pass ? kExitOk : kExitVerificationFailed;
}

// ---------------------------------------------------------------------------

int cmd_solve(Session& s)
{
  const GeometricMeanProblem problem = problem_from_json(s.load(s.o().problem));
  const RealFunction G = function_from_json(s.load(s.o().target), problem.target());
  s.tolerance("gap_tol", s.o().gap_tol);
  const Factorisation f = factorise(problem, G, s.opts());
  const CertReport r = check_factorisation(problem, f.certificate);
  Json doc = to_json(f.certificate);
  doc["eta"] = f.dual.eta;
  doc["gap"] = f.gap;
  doc["iters"] = f.dual.iterations;
  doc["converged"] = f.dual.converged;
  s.out() << "K: " << f.certificate.K << "\neta: " << f.dual.eta << "\ngap: " << f.gap
          << "\niters: " << f.dual.iterations << "\n";
  print_report(s.out(), r);
  s.emit(std::move(doc), s.o().out);
  s.finish();
  return r.pass && f.gap <= s.o().gap_tol ? kExitOk : kExitVerificationFailed;
}

int cmd_certify(Session& s)
{
  const GeometricMeanProblem problem = problem_from_json(s.load(s.o().problem));
  const Json cj = s.load(s.o().cert);
  const FactorisationCertificate cert = certificate_from_json(cj, problem);
  s.tolerance("tol", s.o().tol);
  const CertReport r = check_factorisation(problem, cert, s.o().tol);
  s.out() << "K: " << cert.K << "\n";
  Json doc = report_json(r);
  if (cj.contains("eta") && cj.at("eta").is_number())
  {
    const double gap = duality_gap(cert.K, cj.at("eta").get<double>());
    s.out() << "gap: " << gap << "\n";
    doc["gap"] = gap;
  }
  print_report(s.out(), r);
  s.emit(std::move(doc), s.o().report);
  s.finish();
  return r.pass ? kExitOk : kExitVerificationFailed;
}

int cmd_best_constant(Session& s)
{
  const GeometricMeanProblem problem = problem_from_json(s.load(s.o().problem));
  s.tolerance("gap_tol", s.o().gap_tol);
  const BestConstant b = best_constant(problem, s.opts());
  s.out() << "A: " << b.value << "\nstable: " << (b.stable ? "true" : "false") << "\nstarts: " << b.starts << "\n";
  Json witnesses = Json::array();
  for (const auto& w : b.witnesses)
    witnesses.push_back(to_json(w));
  s.emit(Json{{"A", b.value}, {"stable", b.stable}, {"starts", b.starts}, {"witnesses", witnesses}}, s.o().out);
  s.finish();
  return kExitOk;
}

int cmd_maurey(Session& s)
{
  const GeometricMeanProblem problem = problem_from_json(s.load(s.o().problem));
  s.tolerance("gap_tol", s.o().gap_tol);
  const MaureyFactorisation m = maurey_factorise(problem, s.o().A, s.opts());
  Json gs = Json::array();
  for (const auto& g : m.gs)
    gs.push_back(to_json(g));
  s.out() << "norm: " << m.norm << "\nraw_norm: " << m.raw_norm << "\nscale: " << m.scale
          << "\ncontrol_constant: " << m.control_constant << "\ngap: " << m.gap << "\n";
  s.emit(Json{{"gs", gs},
              {"A", s.o().A},
              {"norm", m.norm},
              {"raw_norm", m.raw_norm},
              {"scale", m.scale},
              {"control_constant", m.control_constant},
              {"augmented_constant", m.augmented_constant},
              {"gap", m.gap}},
         s.o().out);
  s.finish();
  return std::abs(m.norm - 1.0) <= 1e-6 ? kExitOk : kExitVerificationFailed;
}

int cmd_holder(Session& s)
{
  const Json in = s.load(s.o().input);
  const RealFunction G = function_from_json(in.at("G"));
  const double q = number_field(in, "q");
  const auto q_js = number_list(in, "q_js");
  const auto alphas = number_list(in, "alphas");
  const GeometricMeanProblem problem = holder_problem(G.space(), alphas, q_js, q);
  const RealFunction Gp(problem.target(), G.values());
  FactorisationCertificate cert{Gp, holder_factorise(Gp, q, q_js, alphas), 1.0};
  return finish_certificate(s, problem, cert, to_json(cert));
}

int cmd_lw(Session& s)
{
  const Json in = s.load(s.o().input);
  LWGrid grid = LWGrid::coordinate(static_cast<int>(number_field(in, "m")), static_cast<int>(number_field(in, "n")));
  if (in.contains("directions"))
  {
    grid.directions.clear();
    for (const auto& row : int_matrix(in.at("directions"), "directions"))
      grid.directions.emplace_back(row.begin(), row.end());
  }
  const GeometricMeanProblem problem = lw_problem(grid);
  const RealFunction M = function_from_json(in.at("M"), problem.target());
  const FactorisationCertificate cert = lw_certificate(M, grid);
  return finish_certificate(s, problem, cert, to_json(cert));
}

int cmd_interpolate(Session& s)
{
  const Json in = s.load(s.o().input);
  std::vector<PositiveKernelOperator> ops;
  for (const auto& o : in.at("operators"))
    ops.push_back(operator_from_json(o));
  const InterpolationSchedule schedule(number_field(in, "q0"), number_field(in, "q1"), number_list(in, "p0"),
                                       number_list(in, "p1"), number_field(in, "theta"));
  s.tolerance("gap_tol", s.o().gap_tol);
  const GeometricMeanProblem P0 = endpoint_problem(ops, schedule.q0, schedule.p0);
  const GeometricMeanProblem P1 = endpoint_problem(ops, schedule.q1, schedule.p1);
  const RealFunction G = function_from_json(in.at("G"), P0.target());
  const auto c0 = equalise(P0, factorise(P0, endpoint_target(G, schedule.s0), s.opts()).certificate);
  const auto c1 = equalise(P1, factorise(P1, endpoint_target(G, schedule.s1), s.opts()).certificate);
  const InterpolatedCertificate ic = interpolation_combine(ops, c0, c1, schedule);
  const GeometricMeanProblem Pt = interpolated_problem(ops, schedule);
  Json doc = to_json(ic.certificate);
  doc["constant"] = ic.constant;
  doc["bound"] = ic.bound;
  doc["schedule"] = Json{{"beta", schedule.beta}, {"alpha", schedule.alpha}, {"Q", schedule.Q},
                         {"P", schedule.P}, {"S", schedule.S}};
  s.out() << "constant: " << ic.constant << "\nbound: " << ic.bound << "\n";
  const int rc = finish_certificate(s, Pt, ic.certificate, std::move(doc));
  if (rc == kExitOk && ic.constant > ic.bound * (1.0 + 1e-9))
  {
    s.out() << "constant exceeds the interpolated bound\n";
    return kExitVerificationFailed;
  }
  return rc;
}

int cmd_bl_check(Session& s)
{
  const Json in = s.load(s.o().input);
  const std::size_t n = static_cast<std::size_t>(number_field(in, "n"));
  std::vector<RationalMatrix> maps;
  for (const auto& m : in.at("maps"))
  {
    RationalMatrix B;
    for (const auto& row : m)
    {
      std::vector<Rational> r;
      for (const auto& e : row)
        r.push_back(rational_from_json(e));
      B.push_back(std::move(r));
    }
    maps.push_back(std::move(B));
  }
  std::vector<Rational> p;
  for (const auto& e : in.at("p"))
    p.push_back(rational_from_json(e));
  const int depth = in.contains("depth") ? in.at("depth").get<int>() : 3;
  const BLPolytopeReport r = bl_polytope_check(BLDatum(n, std::move(maps), std::move(p)), depth);

  Json lattice = Json::array();
  for (const auto& V : r.lattice)
    lattice.push_back(to_json(V));
  Json critical = Json::array();
  for (const auto& V : r.critical_subspaces)
    critical.push_back(to_json(V));
  Json doc{{"member", r.member}, {"scaling", r.scaling}, {"closed", r.closed}, {"rounds", r.rounds},
           {"lattice_size", r.lattice_size}, {"lattice", lattice}, {"critical_subspaces", critical}};
  if (r.violating_subspace)
    doc["violating_subspace"] = to_json(*r.violating_subspace);
  s.out() << "member: " << (r.member ? "true" : "false") << "\nscaling: " << (r.scaling ? "true" : "false")
          << "\nlattice_size: " << r.lattice_size << "\ncritical: " << r.critical_subspaces.size()
          << "\nclosed: " << (r.closed ? "true" : "false") << "\n";
  for (const auto& V : r.lattice)
    s.out() << "subspace: " << to_json(V).dump() << "\n";
  s.emit(std::move(doc), s.o().out);
  s.finish();
  return kExitOk;
}

int cmd_bl_combine(Session& s)
{
  const Json in = s.load(s.o().input);
  BlockModel model;
  model.m = static_cast<int>(number_field(in, "m"));
  model.k1 = static_cast<std::size_t>(number_field(in, "k1"));
  model.k2 = static_cast<std::size_t>(number_field(in, "k2"));
  model.tilde = int_matrices(in, "tilde");
  model.gamma = int_matrices(in, "gamma");
  model.quotient = int_matrices(in, "quotient");
  model.p = number_list(in, "p");
  s.tolerance("gap_tol", s.o().gap_tol);
  const GeometricMeanProblem full = model.full_problem();
  const RealFunction G = function_from_json(in.at("G"), full.target());
  const BlockCombination c = bl_combine_solve(model, G, s.opts());
  Json doc = to_json(c.certificate);
  doc["K1"] = c.K1;
  doc["K2"] = c.K2;
  s.out() << "K1: " << c.K1 << "\nK2: " << c.K2 << "\n";
  const int rc = finish_certificate(s, full, c.certificate, std::move(doc));
  if (rc == kExitOk && c.certificate.K > c.K1 * c.K2 * (1.0 + 1e-9))
    return kExitVerificationFailed;
  return rc;
}

Json sides_json(const KakeyaSides& k)
{
  Json pts = Json::array();
  for (const auto& p : k.support)
    pts.push_back(Json{{"x", p.x}, {"inner", p.inner}});
  return Json{{"lhs", k.lhs},         {"rhs_base", k.rhs_base}, {"ratio", k.ratio},
              {"lhs_expression", k.lhs_expression}, {"rhs_expression", k.rhs_expression},
              {"exact", k.exact},     {"support", pts}};
}

void print_sides(std::ostream& out, const KakeyaSides& k)
{
  out << "lhs: " << k.lhs_expression << " = " << k.lhs << "\n";
  out << "rhs_base: " << k.rhs_expression << " = " << k.rhs_base << "\n";
  out << "ratio: " << k.ratio << "\n";
  for (const auto& p : k.support)
  {
    out << "point: (";
    for (std::size_t i = 0; i < p.x.size(); ++i)
      out << (i ? "," : "") << p.x[i];
    out << ") summand_inner: " << p.inner << "\n";
  }
}

int cmd_kakeya_sides(Session& s, const KakeyaFamily& family)
{
  const KakeyaSides k = ffkakeya_sides(family);
  print_sides(s.out(), k);
  Json doc = sides_json(k);
  doc["family"] = to_json(family);
  s.emit(std::move(doc), s.o().out);
  s.finish();
  return kExitOk;
}

int cmd_kakeya_to_problem(Session& s)
{
  const KakeyaFamily family = family_from_json(s.load(s.o().family));
  const GeometricMeanProblem problem = to_geomean_problem(family);
  s.out() << "points: " << problem.target()->size() << "\n";
  if (!s.o().out.empty())
  {
    write_json_file(s.o().out, to_json(problem));
    s.out() << "wrote: " << s.o().out << "\n";
  }
  s.finish();
  return kExitOk;
}

Json witnesses_json(const std::vector<RealFunction>& ws)
{
  Json out = Json::array();
  for (const auto& w : ws)
    out.push_back(values_json(w));
  return out;
}

int cmd_kernel_best(Session& s)
{
  const GeneralKernel kernel = kernel_from_json(s.load(s.o().kernel));
  const KernelBestConstant b = kernel_best_constant(kernel, s.opts());
  s.out() << "A: " << b.value << "\nstable: " << (b.stable ? "true" : "false") << "\n";
  s.emit(Json{{"A", b.value}, {"stable", b.stable}, {"starts", b.starts}, {"witnesses", witnesses_json(b.witnesses)}},
         s.o().out);
  s.finish();
  return kExitOk;
}

Json matrices_json(const std::vector<Eigen::MatrixXd>& S)
{
  Json out = Json::array();
  for (const auto& m : S)
  {
    Json rows = Json::array();
    for (Eigen::Index x = 0; x < m.rows(); ++x)
    {
      Json r = Json::array();
      for (Eigen::Index y = 0; y < m.cols(); ++y)
        r.push_back(m(x, y));
      rows.push_back(r);
    }
    out.push_back(rows);
  }
  return out;
}

int cmd_kernel_fact(Session& s)
{
  const GeneralKernel kernel = kernel_from_json(s.load(s.o().kernel));
  const RealFunction G = function_from_json(s.load(s.o().G), kernel.target);
  const KernelFactorisation f = kernel_factorisation_constant(kernel, G);
  const KernelCheck c = check_kernel_factorisation(kernel, G, f.S, f.A * (1.0 + 1e-9), s.o().tol);
  s.out() << "A: " << f.A << "\nsuboptimality: " << f.suboptimality << "\nverdict: " << (c.pass ? "PASS" : "FAIL")
          << "\n";
  s.emit(Json{{"A", f.A}, {"S", matrices_json(f.S)}, {"suboptimality", f.suboptimality},
              {"newton_steps", f.newton_steps}, {"pass", c.pass}},
         s.o().out);
  s.finish();
  return c.pass ? kExitOk : kExitVerificationFailed;
}

int cmd_demo_gap(Session& s)
{
  const GapDemo d = gap_demo(s.opts());
  s.out() << "inequality_constant: " << d.inequality_constant << "  (2^(1/4) = " << std::pow(2.0, 0.25) << ")\n"
          << "brute_force_constant: " << d.brute_force_constant << "\n"
          << "factorisation_constant: " << d.factorisation_constant << "  (2^(1/2) = " << std::sqrt(2.0) << ")\n";
  for (std::size_t j = 0; j < d.inequality.witnesses.size(); ++j)
    s.out() << "witness f" << j + 1 << ": " << values_json(d.inequality.witnesses[j]).dump() << "\n";
  s.out() << "G: " << values_json(d.G).dump() << "\n";
  for (std::size_t j = 0; j < d.factorisation.S.size(); ++j)
    s.out() << "S" << j + 1 << ": " << matrices_json({d.factorisation.S[j]}).front().dump() << "\n";
  s.emit(Json{{"inequality_constant", d.inequality_constant},
              {"brute_force_constant", d.brute_force_constant},
              {"factorisation_constant", d.factorisation_constant},
              {"witnesses", witnesses_json(d.inequality.witnesses)},
              {"G", values_json(d.G)},
              {"S", matrices_json(d.factorisation.S)}},
         s.o().out);
  s.finish();
  return kExitOk;
}

} // namespace

Json RunManifest::to_json() const
{
  Json in = Json::array();
  for (const auto& [path, digest] : inputs)
    in.push_back(Json{{"path", path}, {"fnv1a", digest}});
  Json tol = Json::object();
  for (const auto& [k, v] : tolerances)
    tol[k] = v;
  return Json{{"command", command}, {"inputs", in}, {"seed", seed}, {"tolerances", tol}, {"versions", versions_json()}};
}

Json versions_json()
{
  const std::string eigen = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION);
  const std::string json = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                           std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  return Json{{"geofactor", kVersion}, {"eigen", eigen}, {"boost", BOOST_LIB_VERSION}, {"nlohmann_json", json},
              {"cli11", CLI11_VERSION}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Pointwise factorisations for weighted geometric-mean inequalities", "geofactor"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;

  auto solver_flags = [&o](CLI::App* c) {
    c->add_option("--gap-tol", o.gap_tol, "relative duality gap target")->capture_default_str();
    c->add_option("--seed", o.seed, "random seed")->capture_default_str();
    c->add_option("--threads", o.threads, "worker threads (default: GEOFACTOR_THREADS or 1)");
  };

  auto* solve = app.add_subcommand("solve", "factorise a target through the dual problem");
  solve->add_option("--problem", o.problem, "problem JSON")->required();
  solve->add_option("--target", o.target, "target function JSON")->required();
  solve->add_option("--out", o.out, "certificate output");
  solver_flags(solve);

  auto* certify = app.add_subcommand("certify", "verify a certificate; exit 1 if it fails");
  certify->add_option("--problem", o.problem)->required();
  certify->add_option("--cert", o.cert)->required();
  certify->add_option("--tol", o.tol)->capture_default_str();
  certify->add_option("--report", o.report, "report JSON output");

  auto* best = app.add_subcommand("best-constant", "multistart lower bound on the inequality constant");
  best->add_option("--problem", o.problem)->required();
  best->add_option("--restarts", o.restarts)->capture_default_str();
  best->add_option("--out", o.out);
  solver_flags(best);

  auto* maurey = app.add_subcommand("maurey", "Maurey factorisation for output exponents below one");
  maurey->add_option("--problem", o.problem)->required();
  maurey->add_option("--A", o.A, "inequality constant")->required();
  maurey->add_option("--out", o.out);
  solver_flags(maurey);

  auto* construct = app.add_subcommand("construct", "explicit factorisations");
  construct->require_subcommand(1);
  std::vector<CLI::App*> builders;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"holder", "Hölder factorisation"},
           {"lw", "Loomis-Whitney telescoping on (Z_m)^n"},
           {"interpolate", "combine endpoint factorisations"},
           {"bl-check", "Brascamp-Lieb polytope membership"},
           {"bl-combine", "block-triangular combination on finite groups"}})
  {
    auto* b = construct->add_subcommand(name, help);
    b->add_option("--input", o.input, "input JSON")->required();
    b->add_option("--out", o.out);
    b->add_option("--tol", o.tol)->capture_default_str();
    if (name != "bl-check")
      b->add_option("--problem-out", o.problem_out, "write the problem JSON");
    if (name == "interpolate" || name == "bl-combine")
      solver_flags(b);
    builders.push_back(b);
  }

  auto* kakeya = app.add_subcommand("kakeya", "finite-field multilinear Kakeya");
  kakeya->require_subcommand(1);
  auto* k_sides = kakeya->add_subcommand("sides", "both sides of the inequality");
  k_sides->add_option("--family", o.family)->required();
  k_sides->add_option("--out", o.out);
  auto* k_f33 = kakeya->add_subcommand("f33", "the F_3^3 configuration");
  k_f33->add_option("--out", o.out);
  auto* k_problem = kakeya->add_subcommand("to-problem", "geometric-mean problem for independent families");
  k_problem->add_option("--family", o.family)->required();
  k_problem->add_option("--out", o.out);

  auto* kernel = app.add_subcommand("kernel", "general multilinear kernels");
  kernel->require_subcommand(1);
  auto* kb = kernel->add_subcommand("best-constant", "inequality constant by multistart ascent");
  kb->add_option("--kernel", o.kernel)->required();
  kb->add_option("--out", o.out);
  solver_flags(kb);
  auto* kf = kernel->add_subcommand("fact-constant", "least factorisation constant for a target");
  kf->add_option("--kernel", o.kernel)->required();
  kf->add_option("--G", o.G, "target function JSON")->required();
  kf->add_option("--out", o.out);
  kf->add_option("--tol", o.tol)->capture_default_str();

  auto* demo = app.add_subcommand("demo-gap", "inequality constant versus factorisation constant");
  demo->add_option("--out", o.out);
  solver_flags(demo);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try
  {
    app.parse(argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::string command;
  for (const auto* c = &app; !c->get_subcommands().empty();)
  {
    c = c->get_subcommands().front();
    command += (command.empty() ? "" : " ") + c->get_name();
  }

  try
  {
    Session s(command, o, out);
    if (solve->parsed())
      return cmd_solve(s);
    if (certify->parsed())
      return cmd_certify(s);
    if (best->parsed())
      return cmd_best_constant(s);
    if (maurey->parsed())
      return cmd_maurey(s);
    if (builders[0]->parsed())
      return cmd_holder(s);
    if (builders[1]->parsed())
      return cmd_lw(s);
    if (builders[2]->parsed())
      return cmd_interpolate(s);
    if (builders[3]->parsed())
      return cmd_bl_check(s);
    if (builders[4]->parsed())
      return cmd_bl_combine(s);
    if (k_sides->parsed())
      return cmd_kakeya_sides(s, family_from_json(s.load(o.family)));
    if (k_f33->parsed())
      return cmd_kakeya_sides(s, build_f33_example());
    if (k_problem->parsed())
      return cmd_kakeya_to_problem(s);
    if (kb->parsed())
      return cmd_kernel_best(s);
    if (kf->parsed())
      return cmd_kernel_fact(s);
    if (demo->parsed())
      return cmd_demo_gap(s);
  }
  catch (const JsonError& e)
  {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  catch (const nlohmann::json::exception& e)
  {
    err << "error: JSON schema: " << e.what() << "\n";
    return kExitUsage;
  }
  catch (const NumericalFailure& e)
  {
    err << "error: " << e.what() << "\n";
    return kExitVerificationFailed;
  }
  catch (const Error& e)
  {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << "error: no command\n";
  return kExitUsage;
}

} // namespace geofactor
