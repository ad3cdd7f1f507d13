#pragma once

// Random instance generators shared by the unit tests and the acceptance gate.

#include "geofactor/duality.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using geofactor::GeometricMeanProblem;
using geofactor::PositiveKernelOperator;
using geofactor::RealFunction;
using geofactor::SpacePtr;

class Rng
{
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double exponential() { return -std::log1p(-uniform()); }
  int integer(int lo, int hi) { return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  template <class T>
  const T& pick(const std::vector<T>& xs) { return xs[static_cast<std::size_t>(integer(0, static_cast<int>(xs.size()) - 1))]; }
  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
};

inline SpacePtr random_space(Rng& rng, std::size_t n, const std::string& prefix, bool counting = false)
{
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w[i] = counting ? 1.0 : rng.uniform(0.5, 2.0);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i)
    labels.push_back(prefix + std::to_string(i));
  return geofactor::make_space(std::move(labels), std::move(w));
}

/// Nonnegative kernel with about a third of the entries zero but no zero row.
inline Eigen::MatrixXd random_kernel(Rng& rng, std::size_t rows, std::size_t cols)
{
  Eigen::MatrixXd k(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index x = 0; x < k.rows(); ++x)
  {
    for (Eigen::Index y = 0; y < k.cols(); ++y)
      k(x, y) = rng.uniform() < 0.35 ? 0.0 : rng.exponential();
    if (k.row(x).maxCoeff() <= 0.0)
      k(x, rng.integer(0, static_cast<int>(cols) - 1)) = rng.exponential() + 0.1;
  }
  return k;
}

inline std::vector<double> random_alphas(Rng& rng, std::size_t d)
{
  std::vector<double> a(d);
  double s = 0.0;
  for (auto& v : a)
  {
    v = rng.exponential() + 0.05;
    s += v;
  }
  for (auto& v : a)
    v /= s;
  return a;
}

struct InstanceShape
{
  std::size_t d_max = 3;
  std::size_t size_max = 6;
  std::vector<double> p_choices{1.0, 2.0};
  std::vector<double> q_choices{1.0, 2.0, 4.0};
};

inline GeometricMeanProblem random_problem(Rng& rng, const InstanceShape& shape = {})
{
  const std::size_t d = static_cast<std::size_t>(rng.integer(1, static_cast<int>(shape.d_max)));
  const std::size_t nx = static_cast<std::size_t>(rng.integer(1, static_cast<int>(shape.size_max)));
  const SpacePtr X = random_space(rng, nx, "x");
  std::vector<PositiveKernelOperator> ops;
  std::vector<double> p;
  for (std::size_t j = 0; j < d; ++j)
  {
    const std::size_t ny = static_cast<std::size_t>(rng.integer(1, static_cast<int>(shape.size_max)));
    const SpacePtr Y = random_space(rng, ny, "y" + std::to_string(j) + "_");
    ops.emplace_back(Y, X, random_kernel(rng, nx, ny));
    p.push_back(rng.pick(shape.p_choices));
  }
  return GeometricMeanProblem(std::move(ops), random_alphas(rng, d), std::move(p), rng.pick(shape.q_choices));
}

/// Positive target with an occasional zero, never identically zero.
inline RealFunction random_target(Rng& rng, const SpacePtr& X, double zero_rate = 0.15)
{
  Eigen::VectorXd v(static_cast<Eigen::Index>(X->size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = rng.uniform() < zero_rate ? 0.0 : rng.exponential() + 0.01;
  if (v.maxCoeff() <= 0.0)
    v[0] = 1.0;
  return RealFunction(X, std::move(v));
}

inline Eigen::VectorXd positive_vector(Rng& rng, std::size_t n)
{
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = rng.exponential() + 1e-3;
  return v;
}

inline double relative_error(double a, double b)
{
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace testsupport
