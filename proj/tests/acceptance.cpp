// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "support.hpp"

#include "geofactor/brascamp_lieb.hpp"
#include "geofactor/certify.hpp"
#include "geofactor/cli.hpp"
#include "geofactor/constructions.hpp"
#include "geofactor/kakeya.hpp"
#include "geofactor/kernel.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

using namespace geofactor;
using namespace testsupport;

namespace {

struct Outcome
{
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what)
  {
    if (!ok && pass)
      detail = what;
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome kakeya_f33()
{
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream out, err;
  const int rc = run_cli({"kakeya", "f33"}, out, err);
  const KakeyaSides s = ffkakeya_sides(build_f33_example());
  const double elapsed = seconds_since(t0);

  const double lhs = 6.0 + 2.0 * std::pow(2.0, 1.5);
  const double rhs = std::pow(5.0, 1.5);
  o.require(rc == 0, "kakeya f33 exit code " + std::to_string(rc));
  o.require(out.str().find("ratio: 1.04262074022689") != std::string::npos, "CLI did not print the ratio");
  o.require(s.lhs_expression == "6 + 2*2^(3/2)", "lhs expression " + s.lhs_expression);
  o.require(s.rhs_expression == "5^(3/2)", "rhs expression " + s.rhs_expression);
  o.require(std::abs(s.lhs - lhs) <= 1e-12 * lhs, "lhs " + fmt(s.lhs));
  o.require(std::abs(s.rhs_base - rhs) <= 1e-12 * rhs, "rhs_base " + fmt(s.rhs_base));
  o.require(std::abs(s.ratio - lhs / rhs) <= 1e-12, "ratio " + fmt(s.ratio));
  o.require(s.ratio > 1.04, "ratio not above 1.04");
  o.require(s.support.size() == 5, "expected five intersection points");
  o.require(elapsed < 1.0, "runtime " + fmt(elapsed) + " s");
  if (o.pass)
    o.detail = "lhs=" + s.lhs_expression + " rhs=" + s.rhs_expression + " ratio=" + fmt(s.ratio) + " (" +
               fmt(elapsed) + " s)";
  return o;
}

// 2 ---------------------------------------------------------------------------

Outcome general_kernel_gap()
{
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto path = std::filesystem::temp_directory_path() / "geofactor_acceptance_gap.json";
  std::ostringstream out, err;
  const int rc = run_cli({"demo-gap", "--out", path.string()}, out, err);
  const double elapsed = seconds_since(t0);
  o.require(rc == 0, "demo-gap exit code " + std::to_string(rc) + ": " + err.str());
  if (!o.pass)
    return o;
  const Json doc = read_json_file(path.string());
  std::filesystem::remove(path);
  const double ineq = doc.at("inequality_constant").get<double>();
  const double brute = doc.at("brute_force_constant").get<double>();
  const double fact = doc.at("factorisation_constant").get<double>();
  const double a4 = std::pow(2.0, 0.25);
  o.require(std::abs(ineq - a4) <= 1e-6, "inequality constant " + fmt(ineq));
  o.require(brute <= a4 + 1e-9 && brute >= a4 - 1e-3, "brute force " + fmt(brute));
  o.require(std::abs(fact - std::sqrt(2.0)) <= 1e-6, "factorisation constant " + fmt(fact));
  o.require(elapsed < 10.0, "runtime " + fmt(elapsed) + " s");
  if (o.pass)
    o.detail = "A=" + fmt(ineq) + " brute=" + fmt(brute) + " factorisation=" + fmt(fact) + " (" + fmt(elapsed) + " s)";
  return o;
}

// 3 ---------------------------------------------------------------------------

Outcome strong_duality()
{
  Outcome o;
  Rng rng(3);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = -1.0;
  int passed = 0;
  for (int i = 0; i < 200; ++i)
  {
    const GeometricMeanProblem P = random_problem(rng);
    const RealFunction G = random_target(rng, P.target());
    const Factorisation f = factorise(P, G);
    const CertReport r = check_factorisation(P, f.certificate);
    worst = std::max(worst, f.gap);
    const bool ok = f.gap <= 1e-6 && f.gap >= -1e-9 && r.pass;
    passed += ok ? 1 : 0;
    o.require(ok, "instance " + std::to_string(i) + " gap " + fmt(f.gap) + (r.pass ? "" : " (check failed)"));
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 60.0, "runtime " + fmt(elapsed) + " s");
  if (o.pass)
    o.detail = std::to_string(passed) + "/200 instances, worst gap " + fmt(worst) + " (" + fmt(elapsed) + " s)";
  return o;
}

// 4 ---------------------------------------------------------------------------

double direct_norm(const RealFunction& f, double r)
{
  const auto& w = f.space()->weights();
  if (std::isinf(r))
    return f.values().maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    s += w[i] * std::pow(f.values()[i], r);
  return std::pow(s, 1.0 / r);
}

double dual_exponent(double q)
{
  return q == 1.0 ? kInfinity : q / (q - 1.0);
}

Outcome holder_closed_form()
{
  Outcome o;
  Rng rng(4);
  double worst_identity = 0.0;
  double worst_K = 0.0;
  for (int i = 0; i < 100; ++i)
  {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 6));
    const std::size_t d = static_cast<std::size_t>(rng.integer(1, 3));
    const SpacePtr X = random_space(rng, n, "x");
    const RealFunction G = random_target(rng, X, 0.1);
    const std::vector<double> alphas = random_alphas(rng, d);
    std::vector<double> q_js;
    double inv_q = 0.0;
    const bool all_one = i % 10 == 0;
    for (std::size_t j = 0; j < d; ++j)
    {
      q_js.push_back(all_one ? 1.0 : (rng.uniform() < 0.2 ? 1.0 : rng.uniform(1.0, 6.0)));
      inv_q += alphas[j] / q_js[j];
    }
    const double q = all_one ? 1.0 : 1.0 / inv_q;
    std::vector<RealFunction> gs;
    try
    {
      gs = holder_factorise(G, q, q_js, alphas);
    }
    catch (const Error& e)
    {
      o.require(false, std::string("holder_factorise threw: ") + e.what());
      return o;
    }
    const double Gnorm = direct_norm(G, dual_exponent(q));
    for (Eigen::Index x = 0; x < G.values().size(); ++x)
    {
      double prod = 1.0;
      for (std::size_t j = 0; j < d; ++j)
        prod *= std::pow(gs[j].values()[x], alphas[j]);
      const double g = G.values()[x];
      const double err = g > 0.0 ? std::abs(prod - g) / g : prod;
      worst_identity = std::max(worst_identity, err);
    }
    for (std::size_t j = 0; j < d; ++j)
      worst_identity = std::max(worst_identity, relative_error(direct_norm(gs[j], dual_exponent(q_js[j])), Gnorm));
    const GeometricMeanProblem P = holder_problem(X, alphas, q_js, q);
    const Factorisation f = factorise(P, RealFunction(P.target(), G.values()));
    worst_K = std::max(worst_K, std::abs(f.certificate.K - 1.0));
  }
  o.require(worst_identity <= 1e-12, "identity error " + fmt(worst_identity));
  o.require(worst_K <= 1e-6, "solver |K-1| " + fmt(worst_K));
  if (o.pass)
    o.detail = "100 instances, identity error " + fmt(worst_identity) + ", solver |K-1| " + fmt(worst_K);
  return o;
}

// 5 ---------------------------------------------------------------------------

long long det3(const std::vector<std::vector<int>>& a)
{
  return static_cast<long long>(a[0][0]) * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
         static_cast<long long>(a[0][1]) * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         static_cast<long long>(a[0][2]) * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

std::size_t grid_index(std::vector<int> x, int m)
{
  std::size_t idx = 0;
  for (int v : x)
    idx = idx * static_cast<std::size_t>(m) + static_cast<std::size_t>(((v % m) + m) % m);
  return idx;
}

std::vector<int> grid_point(std::size_t idx, int m, int n)
{
  std::vector<int> x(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i)
  {
    x[static_cast<std::size_t>(i)] = static_cast<int>(idx % static_cast<std::size_t>(m));
    idx /= static_cast<std::size_t>(m);
  }
  return x;
}

Outcome loomis_whitney()
{
  Outcome o;
  Rng rng(5);
  const int m = 5;
  const int n = 3;
  double worst_line = 0.0;
  double worst_product = 0.0;
  double worst_K = 0.0;
  int grids = 0;
  while (grids < 5)
  {
    std::vector<std::vector<int>> dirs(3, std::vector<int>(3));
    for (auto& r : dirs)
      for (auto& v : r)
        v = rng.integer(0, m - 1);
    if (det3(dirs) % m == 0)
      continue;
    ++grids;
    const LWGrid grid{m, n, dirs};
    const GeometricMeanProblem P = lw_problem(grid);
    for (int t = 0; t < 20; ++t)
    {
      const RealFunction M = random_target(rng, P.target(), 0.1);
      const auto S = lw_telescoping(M, grid);
      double mn = 0.0;
      for (Eigen::Index i = 0; i < M.values().size(); ++i)
        mn += std::pow(M.values()[i], 3.0);
      for (std::size_t x = 0; x < grid.points(); ++x)
      {
        const auto px = grid_point(x, m, n);
        double prod = 1.0;
        for (std::size_t j = 0; j < 3; ++j)
        {
          prod *= S[j].values()[static_cast<Eigen::Index>(x)];
          double line = 0.0;
          for (int s = 0; s < m; ++s)
          {
            std::vector<int> y = px;
            for (int c = 0; c < n; ++c)
              y[static_cast<std::size_t>(c)] += s * dirs[j][static_cast<std::size_t>(c)];
            line += S[j].values()[static_cast<Eigen::Index>(grid_index(y, m))];
          }
          worst_line = std::max(worst_line, std::abs(line - 1.0));
        }
        const double target = std::pow(M.values()[static_cast<Eigen::Index>(x)], 3.0) / mn;
        worst_product = std::max(worst_product, target > 0.0 ? std::abs(prod - target) / target : prod);
      }
      const FactorisationCertificate cert = lw_certificate(M, grid);
      const CertReport r = check_factorisation(P, cert, 1e-9);
      o.require(r.pass, "certificate failed to verify");
      const double Kactual = std::max({r.per_j_dual_norm_slack[0], r.per_j_dual_norm_slack[1],
                                       r.per_j_dual_norm_slack[2]});
      worst_K = std::max({worst_K, std::abs(cert.K - 1.0), std::abs(Kactual)});
    }
  }
  o.require(worst_line <= 1e-12, "line sum error " + fmt(worst_line));
  o.require(worst_product <= 1e-12, "product error " + fmt(worst_product));
  o.require(worst_K <= 1e-9, "|K-1| " + fmt(worst_K));
  if (o.pass)
    o.detail = "5 grids x 20 M, line error " + fmt(worst_line) + ", product error " + fmt(worst_product) +
               ", |K-1| " + fmt(worst_K);
  return o;
}

// 6 ---------------------------------------------------------------------------

Outcome interpolation()
{
  Outcome o;
  Rng rng(6);
  double worst_identity = 0.0;
  double worst_ratio = 0.0;
  int combos = 0;
  for (int i = 0; i < 100; ++i)
  {
    const std::size_t d = static_cast<std::size_t>(rng.integer(1, 3));
    double q0, q1;
    std::vector<double> p0(d), p1(d);
    double s0, s1;
    do
    {
      q0 = rng.uniform(1.0, 3.0);
      q1 = rng.uniform(1.0, 3.0);
      s0 = s1 = 0.0;
      for (std::size_t j = 0; j < d; ++j)
      {
        p0[j] = rng.uniform(1.0, 4.0);
        p1[j] = rng.uniform(1.0, 4.0);
        s0 += q0 / p0[j];
        s1 += q1 / p1[j];
      }
    } while (s0 <= 1.05 || s1 <= 1.05);

    const std::size_t nx = static_cast<std::size_t>(rng.integer(1, 4));
    const SpacePtr X = random_space(rng, nx, "x");
    std::vector<PositiveKernelOperator> ops;
    for (std::size_t j = 0; j < d; ++j)
    {
      const std::size_t ny = static_cast<std::size_t>(rng.integer(1, 4));
      ops.emplace_back(random_space(rng, ny, "y"), X, random_kernel(rng, nx, ny));
    }
    const RealFunction G = random_target(rng, X, 0.1);
    const GeometricMeanProblem P0 = endpoint_problem(ops, q0, p0);
    const GeometricMeanProblem P1 = endpoint_problem(ops, q1, p1);
    const auto c0 = factorise(P0, endpoint_target(RealFunction(P0.target(), G.values()), s0)).certificate;
    const auto c1 = factorise(P1, endpoint_target(RealFunction(P1.target(), G.values()), s1)).certificate;

    for (int t = 1; t <= 9; ++t)
    {
      const double theta = 0.1 * t;
      const InterpolationSchedule sch(q0, q1, p0, p1, theta);
      // Exponent oracle from first principles.
      const double sd0 = s0 / (s0 - 1.0);
      const double sd1 = s1 / (s1 - 1.0);
      const double lambda = 1.0 / ((1.0 - theta) * sd0 + theta * sd1);
      const double w0 = sd0 * q0 / s0 * (1.0 - theta);
      const double w1 = sd1 * q1 / s1 * theta;
      const double q_over_s = lambda * (w0 + w1);
      const double alpha = w1 / (w0 + w1);
      const double S = 1.0 / (1.0 - lambda);
      const double Q = q_over_s * S;
      double beta_sum = 0.0;
      for (std::size_t j = 0; j < d; ++j)
      {
        const double beta = lambda * (w0 / p0[j] + w1 / p1[j]);
        beta_sum += beta;
        const double P = q_over_s / beta;
        worst_identity = std::max(worst_identity, std::abs(1.0 / P - ((1.0 - alpha) / p0[j] + alpha / p1[j])));
        worst_identity = std::max(worst_identity, std::abs(sch.beta[j] - beta) + std::abs(1.0 / sch.P[j] - 1.0 / P));
      }
      worst_identity = std::max(worst_identity, std::abs(beta_sum - 1.0));
      worst_identity = std::max(worst_identity, std::abs(1.0 / Q - ((1.0 - alpha) / q0 + alpha / q1)));
      worst_identity = std::max(worst_identity, std::abs(1.0 / sch.Q - 1.0 / Q) + std::abs(sch.alpha - alpha));

      const InterpolatedCertificate ic = interpolation_combine(ops, c0, c1, sch);
      const CertReport r = check_factorisation(interpolated_problem(ops, sch), ic.certificate);
      o.require(r.pass, "combined certificate failed at pair " + std::to_string(i) + ", theta " + fmt(theta));
      worst_ratio = std::max(worst_ratio, ic.constant / ic.bound);
      ++combos;
    }
  }
  o.require(worst_identity <= 1e-12, "identity error " + fmt(worst_identity));
  o.require(worst_ratio <= 1.0 + 1e-9, "constant/bound " + fmt(worst_ratio));
  if (o.pass)
    o.detail = std::to_string(combos) + " combinations, identity error " + fmt(worst_identity) +
               ", max constant/bound " + fmt(worst_ratio);
  return o;
}

// 7 ---------------------------------------------------------------------------

Outcome maurey()
{
  Outcome o;
  {
    const SpacePtr X = counting_space(2, "x");
    const GeometricMeanProblem P({identity_operator(X)}, {1.0}, {1.0}, 0.5);
    const MaureyFactorisation m = maurey_factorise(P, 2.0);
    o.require(std::abs(m.gs[0][0] - 2.0) <= 1e-6 && std::abs(m.gs[0][1] - 2.0) <= 1e-6,
              "2-point identity returned (" + fmt(m.gs[0][0]) + ", " + fmt(m.gs[0][1]) + ")");
  }
  Rng rng(7);
  double worst_norm = 0.0;
  double worst_control = 0.0;
  InstanceShape shape;
  shape.d_max = 3;
  shape.size_max = 4;
  shape.q_choices = {0.3, 0.5, 0.7};
  for (int i = 0; i < 50; ++i)
  {
    const GeometricMeanProblem P = random_problem(rng, shape);
    const double A = best_constant(P).value;
    const MaureyFactorisation m = maurey_factorise(P, A);
    // ||∏ g_j^{α_j}||_{q'} with q' < 0 by direct summation.
    const double qd = P.q() / (P.q() - 1.0);
    double s = 0.0;
    const auto& mu = P.target()->weights();
    for (Eigen::Index x = 0; x < mu.size(); ++x)
    {
      double prod = 1.0;
      for (std::size_t j = 0; j < P.arity(); ++j)
        prod *= std::pow(m.gs[j].values()[x], P.alpha(j));
      s += mu[x] * std::pow(prod, qd);
    }
    worst_norm = std::max(worst_norm, std::abs(std::pow(s, 1.0 / qd) - 1.0));
    for (int k = 0; k < 100; ++k)
      for (std::size_t j = 0; j < P.arity(); ++j)
      {
        const auto& dom = P.op(j).domain();
        Eigen::VectorXd f(static_cast<Eigen::Index>(dom->size()));
        for (Eigen::Index y = 0; y < f.size(); ++y)
          f[y] = rng.exponential();
        const RealFunction Tf = apply(P.op(j), RealFunction(dom, f));
        double lhs = 0.0;
        for (Eigen::Index x = 0; x < mu.size(); ++x)
          lhs += mu[x] * m.gs[j].values()[x] * Tf.values()[x];
        const double rhs = A * input_norm(P, j, f);
        worst_control = std::max(worst_control, lhs / rhs - 1.0);
      }
  }
  o.require(worst_norm <= 1e-6, "norm error " + fmt(worst_norm));
  o.require(worst_control <= 1e-6, "L1 control exceeded by " + fmt(worst_control));
  if (o.pass)
    o.detail = "g=(2,2) for the 2-point case; 50 instances, norm error " + fmt(worst_norm) +
               ", worst control excess " + fmt(worst_control);
  return o;
}

// 8 ---------------------------------------------------------------------------

RationalMatrix drop_coordinate(std::size_t n, std::size_t j)
{
  RationalMatrix B;
  for (std::size_t i = 0; i < n; ++i)
  {
    if (i == j)
      continue;
    std::vector<Rational> row(n, Rational(0));
    row[i] = 1;
    B.push_back(row);
  }
  return B;
}

Subspace axis(std::size_t n, std::size_t i)
{
  std::vector<Rational> e(n, Rational(0));
  e[i] = 1;
  return Subspace::span(n, {e});
}

bool contains(const std::vector<Subspace>& xs, const Subspace& v)
{
  return std::find(xs.begin(), xs.end(), v) != xs.end();
}

Outcome bl_polytope()
{
  Outcome o;
  for (std::size_t n : {2u, 3u})
  {
    std::vector<RationalMatrix> maps;
    for (std::size_t j = 0; j < n; ++j)
      maps.push_back(drop_coordinate(n, j));
    const BLPolytopeReport r = bl_polytope_check(BLDatum(n, maps, std::vector<Rational>(n, Rational(1, n - 1))));
    o.require(r.member && r.scaling && r.closed, std::to_string(n) + "-D Loomis-Whitney not a member");
    // Generated lattice of the coordinate kernels: all coordinate subspaces.
    o.require(r.lattice_size == (1u << n), std::to_string(n) + "-D lattice has " + std::to_string(r.lattice_size));
    for (std::size_t i = 0; i < n; ++i)
      o.require(contains(r.critical_subspaces, axis(n, i)), "axis " + std::to_string(i) + " not critical");
    o.require(!contains(r.critical_subspaces, Subspace::zero(n)) && !contains(r.critical_subspaces, Subspace::whole(n)),
              "trivial subspace flagged critical");
  }
  const BLPolytopeReport bad = bl_polytope_check(
      BLDatum(2, {drop_coordinate(2, 0), drop_coordinate(2, 1)}, {Rational(2, 5), Rational(2, 5)}));
  o.require(!bad.member && !bad.scaling, "scaling-violating exponents accepted");
  if (o.pass)
    o.detail = "2-D: 4 subspaces, 3-D: 8 subspaces, axes critical, p=(2/5,2/5) rejected";
  return o;
}

// 9 ---------------------------------------------------------------------------

Outcome gradient_check()
{
  Outcome o;
  Rng rng(9);
  const std::vector<InstanceShape> classes = {
      {1, 5, {1.0}, {1.0}}, {2, 5, {1.0, 2.0}, {2.0}}, {3, 4, {1.0, 2.0}, {4.0}}, {3, 6, {2.0, kInfinity}, {1.0, 2.0}}};
  double worst = 0.0;
  for (const auto& shape : classes)
  {
    const GeometricMeanProblem P = random_problem(rng, shape);
    const RealFunction G = random_target(rng, P.target(), 0.0);
    for (int t = 0; t < 50; ++t)
    {
      std::vector<Eigen::VectorXd> hs;
      for (std::size_t j = 0; j < P.arity(); ++j)
        hs.push_back(positive_vector(rng, P.op(j).domain()->size()).array() + 0.05);
      const double b = dual_budget(P, G, hs);
      for (auto& h : hs)
        h /= b;
      const auto grad = dual_gradient(P, G, hs);
      double scale = 0.0;
      double err = 0.0;
      for (std::size_t j = 0; j < hs.size(); ++j)
        for (Eigen::Index y = 0; y < hs[j].size(); ++y)
        {
          auto up = hs;
          auto down = hs;
          up[j][y] += 1e-5;
          down[j][y] -= 1e-5;
          const double fd = (dual_objective(P, G, up) - dual_objective(P, G, down)) / 2e-5;
          err = std::max(err, std::abs(fd - grad[j][y]));
          scale = std::max(scale, std::abs(grad[j][y]));
        }
      worst = std::max(worst, err / std::max(scale, 1e-300));
    }
  }
  o.require(worst <= 1e-5, "relative gradient error " + fmt(worst));
  if (o.pass)
    o.detail = "4 classes x 50 points, worst relative error " + fmt(worst);
  return o;
}

} // namespace

int main()
{
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"F_3^3 Kakeya reproduction", kakeya_f33},
      {"general-kernel gap", general_kernel_gap},
      {"strong-duality suite", strong_duality},
      {"Holder closed form", holder_closed_form},
      {"Loomis-Whitney telescoping", loomis_whitney},
      {"interpolation combiner", interpolation},
      {"Maurey reduction", maurey},
      {"BL polytope", bl_polytope},
      {"gradient check", gradient_check},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i)
  {
    Outcome r;
    try
    {
      r = criteria[i].second();
    }
    catch (const std::exception& e)
    {
      r = Outcome{false, std::string("exception: ") + e.what()};
    }
    failures += r.pass ? 0 : 1;
    std::cout << (r.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << r.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
