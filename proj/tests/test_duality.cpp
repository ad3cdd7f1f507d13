#include "support.hpp"

#include "geofactor/certify.hpp"
#include "geofactor/constructions.hpp"
#include "geofactor/error.hpp"

#include <doctest.h>

using namespace geofactor;
using namespace testsupport;

namespace {

GeometricMeanProblem identity_problem(std::size_t n, double p, double q)
{
  const SpacePtr X = counting_space(n, "x");
  return GeometricMeanProblem({identity_operator(X)}, {1.0}, {p}, q);
}

GeometricMeanProblem holder_2pt()
{
  const SpacePtr X = counting_space(2, "x");
  return GeometricMeanProblem({identity_operator(X), identity_operator(X)}, {0.5, 0.5}, {1.0, 1.0}, 1.0);
}

/// F(h) by direct summation, independent of the library's objective.
double objective_oracle(const GeometricMeanProblem& P, const RealFunction& G, const std::vector<Eigen::VectorXd>& hs)
{
  const auto& mu = P.target()->weights();
  double total = 0.0;
  for (Eigen::Index x = 0; x < mu.size(); ++x)
  {
    double prod = 1.0;
    for (std::size_t j = 0; j < P.arity(); ++j)
    {
      const auto& k = P.op(j).kernel();
      const auto& nu = P.op(j).domain()->weights();
      double th = 0.0;
      for (Eigen::Index y = 0; y < k.cols(); ++y)
        th += k(x, y) * hs[j][y] * nu[y];
      prod *= std::pow(th / P.alpha(j), P.alpha(j));
    }
    total += mu[x] * G.values()[x] * prod;
  }
  return total;
}

/// Maximises F over the simplex {Σ_j Σ_y h_j(y) = 1/||G||_∞} (p_j = 1, q = 1,
/// counting inputs) by pairwise mass transfers with a shrinking step.
double simplex_search_oracle(const GeometricMeanProblem& P, const RealFunction& G)
{
  std::vector<std::pair<std::size_t, Eigen::Index>> slots;
  std::vector<Eigen::VectorXd> h;
  for (std::size_t j = 0; j < P.arity(); ++j)
  {
    h.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P.op(j).domain()->size())));
    for (Eigen::Index y = 0; y < h.back().size(); ++y)
      slots.emplace_back(j, y);
  }
  const double budget = 1.0 / G.values().maxCoeff();
  for (auto [j, y] : slots)
    h[j][y] = budget / static_cast<double>(slots.size());
  double best = objective_oracle(P, G, h);
  for (double step = budget / 4.0; step > 1e-13 * budget; step /= 2.0)
  {
    bool moved = true;
    while (moved)
    {
      moved = false;
      for (auto [ja, ya] : slots)
        for (auto [jb, yb] : slots)
        {
          if (ja == jb && ya == yb)
            continue;
          const double t = std::min(step, h[ja][ya]);
          if (t <= 0.0)
            continue;
          h[ja][ya] -= t;
          h[jb][yb] += t;
          const double v = objective_oracle(P, G, h);
          if (v > best * (1.0 + 1e-15))
          {
            best = v;
            moved = true;
          }
          else
          {
            h[ja][ya] += t;
            h[jb][yb] -= t;
          }
        }
    }
  }
  return best;
}

GeometricMeanProblem counting_product_instance(Rng& rng, std::size_t nx, std::size_t ny)
{
  const SpacePtr X = counting_space(nx, "x");
  std::vector<PositiveKernelOperator> ops;
  for (int j = 0; j < 2; ++j)
  {
    const SpacePtr Y = counting_space(ny, "y" + std::to_string(j) + "_");
    ops.emplace_back(Y, X, random_kernel(rng, nx, ny));
  }
  return GeometricMeanProblem(std::move(ops), {0.5, 0.5}, {1.0, 1.0}, 1.0);
}

} // namespace

TEST_CASE("identity and Hoelder duals attain one")
{
  const auto P = identity_problem(2, 1.0, 1.0);
  const RealFunction G = RealFunction::constant(P.target(), 1.0);
  CHECK(dual_ascent(P, G).eta == doctest::Approx(1.0).epsilon(1e-9));

  const auto H = holder_2pt();
  const auto fact = factorise(H, RealFunction::constant(H.target(), 1.0));
  CHECK(fact.dual.eta == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(fact.certificate.K - fact.dual.eta) <= 1e-6);
}

TEST_CASE("dual value matches an independent simplex search")
{
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial)
  {
    const auto P = counting_product_instance(rng, 3, 3);
    const RealFunction G(P.target(), positive_vector(rng, 3));
    const auto fact = factorise(P, G);
    const double eta = fact.dual.eta;
    const double oracle = simplex_search_oracle(P, G);
    CHECK(oracle <= fact.certificate.K * (1.0 + 1e-12));
    CHECK(relative_error(eta, oracle) <= 1e-5);
  }
}

TEST_CASE("balancing formula on a single point")
{
  const SpacePtr X = counting_space(1, "x");
  const SpacePtr Y1 = counting_space(1, "a");
  const SpacePtr Y2 = counting_space(1, "b");
  const GeometricMeanProblem P({PositiveKernelOperator(Y1, X, Eigen::MatrixXd::Ones(1, 1)),
                                PositiveKernelOperator(Y2, X, Eigen::MatrixXd::Ones(1, 1))},
                               {0.5, 0.5}, {1.0, 1.0}, 1.0);
  DualCertificate dual;
  dual.hs = {RealFunction(Y1, Eigen::VectorXd::Constant(1, 1.0)), RealFunction(Y2, Eigen::VectorXd::Constant(1, 4.0))};
  const auto cert = recover_primal(P, RealFunction::constant(X, 1.0), dual);
  CHECK(cert.gs[0][0] == doctest::Approx(2.0));
  CHECK(cert.gs[1][0] == doctest::Approx(0.5));
  CHECK(std::sqrt(cert.gs[0][0] * cert.gs[1][0]) == doctest::Approx(1.0));
}

TEST_CASE("equal operators and duals give equal factors")
{
  Rng rng(22);
  const SpacePtr X = random_space(rng, 4, "x");
  const SpacePtr Y = random_space(rng, 3, "y");
  const PositiveKernelOperator T(Y, X, random_kernel(rng, 4, 3));
  const GeometricMeanProblem P({T, T}, {0.5, 0.5}, {1.0, 1.0}, 1.0);
  const RealFunction G(X, positive_vector(rng, 4));
  DualCertificate dual;
  const RealFunction h(Y, positive_vector(rng, 3));
  dual.hs = {h, h};
  const auto cert = recover_primal(P, G, dual);
  for (std::size_t j = 0; j < 2; ++j)
    CHECK((cert.gs[j].values() - G.values()).cwiseAbs().maxCoeff() <= 1e-12 * G.values().maxCoeff());
}

TEST_CASE("recovered factors reproduce G exactly on its support")
{
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial)
  {
    const auto P = random_problem(rng);
    const RealFunction G = random_target(rng, P.target(), 0.3);
    const auto dual = dual_ascent(P, G);
    const auto cert = recover_primal(P, G, dual);
    const Eigen::VectorXd prod = geometric_mean(cert.gs, P.alphas()).values();
    for (std::size_t x = 0; x < G.size(); ++x)
    {
      if (G[x] > 0.0)
        CHECK(std::abs(prod[static_cast<Eigen::Index>(x)] - G[x]) <= 1e-12 * G[x]);
      else
        CHECK(prod[static_cast<Eigen::Index>(x)] == 0.0);
    }
  }
}

TEST_CASE("factorisation examples")
{
  SUBCASE("2-D Loomis-Whitney with uniform G")
  {
    const auto P = lw_problem(LWGrid::coordinate(3, 2));
    const auto fact = factorise(P, RealFunction::constant(P.target(), 1.0));
    CHECK(std::abs(fact.certificate.K - 1.0) <= 1e-6);
    CHECK(check_factorisation(P, fact.certificate).pass);
  }
  SUBCASE("random saturating 4x3x3 instance")
  {
    Rng rng(24);
    const SpacePtr X = random_space(rng, 4, "x");
    std::vector<PositiveKernelOperator> ops;
    for (int j = 0; j < 2; ++j)
      ops.emplace_back(random_space(rng, 3, "y"), X, random_kernel(rng, 4, 3));
    const GeometricMeanProblem P(std::move(ops), random_alphas(rng, 2), {1.0, 2.0}, 2.0);
    const auto fact = factorise(P, RealFunction(X, positive_vector(rng, 4)));
    CHECK(fact.gap >= -1e-9);
    CHECK(fact.gap <= 1e-6);
    CHECK(check_factorisation(P, fact.certificate).pass);
  }
}

TEST_CASE("weak duality for random feasible points")
{
  Rng rng(25);
  for (int trial = 0; trial < 200; ++trial)
  {
    const auto P = random_problem(rng);
    const RealFunction G = random_target(rng, P.target());
    std::vector<Eigen::VectorXd> hs;
    for (std::size_t j = 0; j < P.arity(); ++j)
      hs.push_back(positive_vector(rng, P.op(j).domain()->size()));
    const double budget = dual_budget(P, G, hs);
    for (auto& h : hs)
      h /= budget;
    const double eta = objective_oracle(P, G, hs);

    // Any positive g_j scaled up until ∏ g_j^{α_j} ≥ G is primal feasible.
    std::vector<RealFunction> gs;
    for (std::size_t j = 0; j < P.arity(); ++j)
      gs.emplace_back(P.target(), positive_vector(rng, G.size()));
    const Eigen::VectorXd prod = geometric_mean(gs, P.alphas()).values();
    const double lift = (G.values().array() / prod.array()).maxCoeff();
    double K = 0.0;
    for (std::size_t j = 0; j < P.arity(); ++j)
    {
      gs[j] = gs[j].scaled(lift);
      K = std::max(K, input_dual_norm(P, j, adjoint_apply(P.op(j), gs[j]).values()) / lp_norm(G, P.q_dual()));
    }
    CHECK(eta <= K * (1.0 + 1e-12));
  }
}

TEST_CASE("scaling G leaves the constant unchanged")
{
  Rng rng(26);
  for (int trial = 0; trial < 20; ++trial)
  {
    const auto P = random_problem(rng);
    const RealFunction G = random_target(rng, P.target());
    const double c = std::exp(rng.uniform(-5.0, 5.0));
    SolverOptions opts;
    opts.gap_tol = 1e-10;
    const double K1 = factorise(P, G, opts).certificate.K;
    const double K2 = factorise(P, G.scaled(c), opts).certificate.K;
    CHECK(relative_error(K2, K1) <= 1e-8);
  }
}

TEST_CASE("dual objective is concave")
{
  Rng rng(27);
  for (int trial = 0; trial < 200; ++trial)
  {
    const auto P = random_problem(rng);
    const RealFunction G = random_target(rng, P.target());
    std::vector<Eigen::VectorXd> a, b, mid;
    for (std::size_t j = 0; j < P.arity(); ++j)
    {
      a.push_back(positive_vector(rng, P.op(j).domain()->size()));
      b.push_back(positive_vector(rng, P.op(j).domain()->size()));
      mid.push_back(0.5 * (a.back() + b.back()));
    }
    const double fa = dual_objective(P, G, a);
    const double fb = dual_objective(P, G, b);
    CHECK(dual_objective(P, G, mid) >= 0.5 * fa + 0.5 * fb - 1e-12 * std::max(1.0, fa + fb));
    CHECK(fa == doctest::Approx(objective_oracle(P, G, a)).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradient matches central differences")
{
  Rng rng(28);
  for (int trial = 0; trial < 20; ++trial)
  {
    const auto P = random_problem(rng);
    const RealFunction G(P.target(), positive_vector(rng, P.target()->size()));
    std::vector<Eigen::VectorXd> hs;
    for (std::size_t j = 0; j < P.arity(); ++j)
      hs.push_back(positive_vector(rng, P.op(j).domain()->size()) + Eigen::VectorXd::Constant(
                                                                        static_cast<Eigen::Index>(P.op(j).domain()->size()), 0.5));
    const auto grad = dual_gradient(P, G, hs);
    for (std::size_t j = 0; j < P.arity(); ++j)
      for (Eigen::Index y = 0; y < hs[j].size(); ++y)
      {
        const double step = 1e-5 * hs[j][y];
        auto up = hs, down = hs;
        up[j][y] += step;
        down[j][y] -= step;
        const double fd = (dual_objective(P, G, up) - dual_objective(P, G, down)) / (2.0 * step);
        CHECK(std::abs(fd - grad[j][y]) <= 1e-5 * std::max(std::abs(fd), 1e-3 * dual_objective(P, G, hs) / hs[j][y]));
      }
  }
}

TEST_CASE("solver preconditions")
{
  const SpacePtr X = counting_space(2, "x");
  Eigen::Matrix2d k;
  k << 1.0, 0.0, 0.0, 0.0;
  const GeometricMeanProblem P({PositiveKernelOperator(X, X, k)}, {1.0}, {1.0}, 1.0);
  CHECK_THROWS_AS(dual_ascent(P, RealFunction::constant(X, 1.0)), SaturationFailure);
  // The unreachable point is harmless once G vanishes there.
  CHECK(dual_ascent(P, RealFunction(X, Eigen::Vector2d(1.0, 0.0))).eta == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(dual_ascent(P, RealFunction::constant(X, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(factorise(identity_problem(2, 1.0, 0.5), RealFunction::constant(X, 1.0)), InvalidArgument);
}

TEST_CASE("dual ascent is deterministic")
{
  Rng rng(29);
  const auto P = random_problem(rng);
  const RealFunction G = random_target(rng, P.target());
  const auto a = dual_ascent(P, G);
  const auto b = dual_ascent(P, G);
  CHECK(a.eta == b.eta);
  CHECK(a.iterations == b.iterations);
  for (std::size_t j = 0; j < P.arity(); ++j)
    CHECK(a.hs[j].values() == b.hs[j].values());
}

TEST_CASE("general q reduction")
{
  SUBCASE("q = 1 is the identity")
  {
    const auto P = holder_2pt();
    const RealFunction G(P.target(), Eigen::Vector2d(1.0, 3.0));
    const auto red = reduce_general_q(P, G);
    CHECK(red.reduced.target()->weights() == P.target()->weights());
    CHECK(red.unit_target.values() == G.values());
  }
  SUBCASE("constant G on two points")
  {
    const auto P = identity_problem(2, 1.0, 2.0);
    const auto red = reduce_general_q(P, RealFunction::constant(P.target(), 1.0));
    CHECK(red.reduced.q() == 1.0);
    CHECK(red.reduced.target()->weights().isApprox(Eigen::Vector2d::Constant(1.0 / std::sqrt(2.0))));
    CHECK(red.unit_target.values().isApprox(Eigen::Vector2d::Ones()));
  }
  SUBCASE("round trip against the direct solve")
  {
    Rng rng(30);
    for (int trial = 0; trial < 30; ++trial)
    {
      InstanceShape shape;
      shape.q_choices = {2.0, 3.0, kInfinity};
      const auto P = random_problem(rng, shape);
      const RealFunction G = random_target(rng, P.target(), 0.3);
      const auto red = reduce_general_q(P, G);
      const auto reduced_fact = factorise(red.reduced, red.unit_target);
      const auto cert = red.back_map(reduced_fact.certificate);
      CHECK(check_factorisation(P, cert, 1e-6).pass);
      CHECK(relative_error(cert.K, factorise(P, G).certificate.K) <= 2e-6);
    }
  }
}

TEST_CASE("Maurey factorisation")
{
  SUBCASE("identity on two points")
  {
    const auto m = maurey_factorise(identity_problem(2, 1.0, 0.5), 2.0);
    CHECK(m.gs[0][0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(m.gs[0][1] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(m.norm == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("single point")
  {
    const SpacePtr X = counting_space(1, "x");
    const std::vector<double> c{2.0, 0.5, 3.0};
    std::vector<PositiveKernelOperator> ops;
    for (double cj : c)
      ops.emplace_back(counting_space(1, "y"), X, Eigen::MatrixXd::Constant(1, 1, cj));
    const std::vector<double> alphas{0.2, 0.3, 0.5};
    const GeometricMeanProblem P(ops, alphas, {1.0, 1.0, 1.0}, 0.5);
    double A = 1.0;
    for (std::size_t j = 0; j < 3; ++j)
      A *= std::pow(c[j], alphas[j]);
    const auto m = maurey_factorise(P, A);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(m.gs[j][0] == doctest::Approx(A / c[j]).epsilon(1e-6));
  }
  CHECK_THROWS_AS(maurey_factorise(identity_problem(2, 1.0, 2.0), 1.0), InvalidArgument);
  CHECK_THROWS_AS(maurey_factorise(identity_problem(2, 1.0, 0.5), 0.0), InvalidArgument);
}

TEST_CASE("best constant")
{
  CHECK(best_constant(identity_problem(3, 2.0, 2.0)).value == doctest::Approx(1.0).epsilon(1e-9));
  const auto lw = lw_problem(LWGrid::coordinate(3, 2));
  CHECK(best_constant(lw).value == doctest::Approx(1.0).epsilon(1e-6));

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial)
  {
    const auto P = random_problem(rng);
    const auto bc = best_constant(P);
    std::vector<Eigen::VectorXd> fs;
    for (const auto& w : bc.witnesses)
      fs.push_back(w.values());
    CHECK(inequality_ratio(P, fs) == doctest::Approx(bc.value).epsilon(1e-9));
    // At q = 1 the search is global and A dominates every per-G constant.
    if (P.q() == 1.0)
    {
      const RealFunction G = random_target(rng, P.target());
      CHECK(bc.value >= dual_ascent(P, G).eta * (1.0 - 1e-6));
    }
  }
}
