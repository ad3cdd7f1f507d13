#include "support.hpp"

#include "geofactor/error.hpp"

#include <doctest.h>

using namespace geofactor;
using namespace testsupport;

namespace {

PositiveKernelOperator identity2()
{
  const SpacePtr X = counting_space(2, "x");
  return PositiveKernelOperator(X, X, Eigen::Matrix2d::Identity());
}

PositiveKernelOperator ones2()
{
  const SpacePtr X = counting_space(2, "x");
  return PositiveKernelOperator(X, X, Eigen::Matrix2d::Ones());
}

} // namespace

TEST_CASE("measure spaces reject nonpositive weights and duplicate labels")
{
  CHECK_THROWS_AS(MeasureSpace({"a", "b"}, Eigen::Vector2d(1.0, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(MeasureSpace({"a", "a"}, Eigen::Vector2d(1.0, 1.0)), InvalidArgument);
  const MeasureSpace s = MeasureSpace::counting(3, "p");
  CHECK(s.size() == 3);
  CHECK(s.index_of("p2") == std::optional<std::size_t>(2));
  CHECK_FALSE(s.index_of("q").has_value());
}

TEST_CASE("apply and adjoint on small kernels")
{
  const SpacePtr X = counting_space(2, "x");
  const RealFunction f(X, Eigen::Vector2d(3.0, 5.0));
  CHECK(apply(identity2(), f).values().isApprox(Eigen::Vector2d(3.0, 5.0)));
  CHECK(apply(ones2(), f).values().isApprox(Eigen::Vector2d(8.0, 8.0)));

  const RealFunction g(X, Eigen::Vector2d(1.0, 2.0));
  CHECK(adjoint_apply(identity2(), g).values().isApprox(Eigen::Vector2d(1.0, 2.0)));
  CHECK(adjoint_apply(ones2(), g).values().isApprox(Eigen::Vector2d(3.0, 3.0)));
}

TEST_CASE("apply to a unit mass picks out a weighted column")
{
  Rng rng(11);
  const SpacePtr X = random_space(rng, 3, "x");
  const SpacePtr Y = random_space(rng, 4, "y");
  const Eigen::MatrixXd k = random_kernel(rng, 3, 4);
  const PositiveKernelOperator T(Y, X, k);
  for (Eigen::Index y = 0; y < 4; ++y)
  {
    const RealFunction e(Y, Eigen::VectorXd::Unit(4, y));
    const Eigen::VectorXd expected = k.col(y) * Y->weights()[y];
    CHECK((apply(T, e).values() - expected).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("operators refuse functions on the wrong space")
{
  const SpacePtr Y = counting_space(3, "y");
  const RealFunction f(Y, Eigen::Vector3d(1.0, 1.0, 1.0));
  CHECK_THROWS_AS(apply(identity2(), f), SpaceMismatch);
  CHECK_THROWS_AS(RealFunction(Y, Eigen::Vector3d(1.0, -1.0, 0.0)), InvalidArgument);
}

TEST_CASE("pairing identity and positivity on random operators")
{
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial)
  {
    const std::size_t nx = static_cast<std::size_t>(rng.integer(1, 6));
    const std::size_t ny = static_cast<std::size_t>(rng.integer(1, 6));
    const SpacePtr X = random_space(rng, nx, "x");
    const SpacePtr Y = random_space(rng, ny, "y");
    const PositiveKernelOperator T(Y, X, random_kernel(rng, nx, ny));
    const RealFunction f(Y, positive_vector(rng, ny));
    const RealFunction g(X, positive_vector(rng, nx));
    const RealFunction Tf = apply(T, f);
    const double lhs = pairing(g, Tf);
    const double rhs = pairing(adjoint_apply(T, g), f);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    CHECK(Tf.values().minCoeff() >= 0.0);
  }
}

TEST_CASE("lp norms")
{
  const SpacePtr X2 = counting_space(2, "x");
  CHECK(lp_norm(RealFunction(X2, Eigen::Vector2d(2.0, 2.0)), -1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lp_norm(RealFunction(X2, Eigen::Vector2d(3.0, 4.0)), kInfinity) == 4.0);
  const SpacePtr W = make_space({"a", "b", "c"}, Eigen::Vector3d(1.0, 1.0, 2.0));
  CHECK(lp_norm(RealFunction(W, Eigen::Vector3d(1.0, 2.0, 3.0)), 2.0) ==
        doctest::Approx(std::sqrt(23.0)).epsilon(1e-15));
  CHECK_THROWS_AS(lp_norm(RealFunction(X2, Eigen::Vector2d(0.0, 1.0)), -1.0), InvalidArgument);
  CHECK_THROWS_AS(lp_norm(RealFunction(X2, Eigen::Vector2d(1.0, 1.0)), 0.0), InvalidArgument);
}

TEST_CASE("Hoelder inequality for random positive functions")
{
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial)
  {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 8));
    const SpacePtr X = random_space(rng, n, "x");
    const RealFunction f(X, positive_vector(rng, n));
    const RealFunction g(X, positive_vector(rng, n));
    const double q = rng.uniform() < 0.2 ? kInfinity : 1.0 + 4.0 * rng.uniform();
    const double lhs = pairing(f, g);
    const double rhs = lp_norm(f, q) * lp_norm(g, kothe_dual_exponent(q));
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("geometric mean")
{
  const SpacePtr X = counting_space(2, "x");
  const std::vector<double> half{0.5, 0.5};
  {
    const std::vector<RealFunction> fs{RealFunction::constant(X, 3.0), RealFunction::constant(X, 3.0)};
    CHECK(geometric_mean(fs, half).values().isApprox(Eigen::Vector2d(3.0, 3.0)));
  }
  {
    const std::vector<RealFunction> fs{RealFunction(X, Eigen::Vector2d(4.0, 0.0)),
                                       RealFunction(X, Eigen::Vector2d(1.0, 9.0))};
    const Eigen::VectorXd gm = geometric_mean(fs, half).values();
    CHECK(gm[0] == doctest::Approx(2.0));
    CHECK(gm[1] == 0.0);
  }
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial)
  {
    const std::size_t d = static_cast<std::size_t>(rng.integer(1, 4));
    const SpacePtr Y = random_space(rng, 5, "y");
    const auto alphas = random_alphas(rng, d);
    const double c = rng.uniform(0.1, 10.0);
    std::vector<RealFunction> fs, scaled;
    for (std::size_t j = 0; j < d; ++j)
    {
      fs.emplace_back(Y, positive_vector(rng, 5));
      scaled.push_back(fs.back().scaled(c));
    }
    const Eigen::VectorXd a = geometric_mean(scaled, alphas).values();
    const Eigen::VectorXd b = c * geometric_mean(fs, alphas).values();
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * b.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("saturation")
{
  CHECK(saturation_check(identity2()));
  const SpacePtr X = counting_space(2, "x");
  Eigen::Matrix2d k;
  k << 1.0, 1.0, 0.0, 0.0;
  const PositiveKernelOperator T(X, X, k);
  CHECK_FALSE(saturation_check(T));
  // Null sets are modelled by leaving points out, so the row only matters
  // where it must be reached.
  CHECK(saturation_check(T, {true, false}));
  CHECK_FALSE(saturation_check(T, {false, true}));
}

TEST_CASE("Koethe dual exponents")
{
  CHECK(kothe_dual_exponent(2.0) == 2.0);
  CHECK(kothe_dual_exponent(1.0) == kInfinity);
  CHECK(kothe_dual_exponent(kInfinity) == 1.0);
  CHECK(kothe_dual_exponent(0.5) == doctest::Approx(-1.0));
  CHECK(kothe_dual_exponent(4.0) == doctest::Approx(4.0 / 3.0));
}
