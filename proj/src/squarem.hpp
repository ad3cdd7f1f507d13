#pragma once

// SQUAREM extrapolation (squared iterative method, Varadhan-Roland) around a
// monotone MM map, carried out on log h so that iterates stay positive.
//
// An engine provides normalised(h), evaluate(h) -> E with fields phi and
// min_L, step(h, e) and residual(e, rule). Entries that are exactly zero stay
// zero: the MM map cannot revive them either.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace geofactor::detail {

using Vectors = std::vector<Eigen::VectorXd>;

enum class StopRule
{
  ProductGap,
  Stationarity,
};

template <class E>
struct Ascent
{
  Vectors h;
  E eval;
  int iterations = 0;
  bool converged = false;
};

inline constexpr double kLogFloor = 1e-300;
inline constexpr double kLogClamp = 690.0;
inline constexpr double kRecentreBelow = 1e-100;
inline constexpr double kInfinityLog = 1e308;

inline Eigen::VectorXd stacked_log(const Vectors& h)
{
  Eigen::Index n = 0;
  for (const auto& v : h)
    n += v.size();
  Eigen::VectorXd out(n);
  Eigen::Index o = 0;
  for (const auto& v : h)
    for (Eigen::Index i = 0; i < v.size(); ++i)
      out[o++] = std::log(std::max(v[i], kLogFloor));
  return out;
}

inline Vectors unstack_exp(const Eigen::VectorXd& x, const Vectors& shape)
{
  Vectors out;
  out.reserve(shape.size());
  Eigen::Index o = 0;
  for (const auto& v : shape)
  {
    // Each block is renormalised afterwards, so shifting by its max is free
    // and keeps exp from overflowing.
    double top = -kInfinityLog;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v[i] > 0.0)
        top = std::max(top, x[o + i]);
    Eigen::VectorXd h(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i, ++o)
      h[i] = v[i] > 0.0 ? std::exp(std::clamp(x[o] - top, -kLogClamp, 0.0)) : 0.0;
    out.push_back(std::move(h));
  }
  return out;
}

/// Runs accelerated MM until residual ≤ tol or max_iters map evaluations.
/// Points where the evaluation's min_L drops below 1e-100 are pulled halfway
/// back towards `centre` before continuing.
template <class Engine>
auto ascend(const Engine& engine, Vectors start, const Vectors& centre, int max_iters, double tol, StopRule rule)
{
  using E = decltype(engine.evaluate(start));
  Ascent<E> r;
  r.h = engine.normalised(std::move(start));
  r.eval = engine.evaluate(r.h);
  while (r.iterations < max_iters)
  {
    if (engine.residual(r.eval, rule) <= tol)
    {
      r.converged = true;
      break;
    }
    if (r.eval.min_L < kRecentreBelow)
    {
      for (std::size_t j = 0; j < r.h.size(); ++j)
        r.h[j] = 0.5 * (r.h[j] + centre[j]);
      r.h = engine.normalised(std::move(r.h));
      r.eval = engine.evaluate(r.h);
      ++r.iterations;
      continue;
    }
    const Vectors h1 = engine.step(r.h, r.eval);
    const E e1 = engine.evaluate(h1);
    Vectors h2 = engine.step(h1, e1);
    E e2 = engine.evaluate(h2);
    r.iterations += 2;

    const Eigen::VectorXd x0 = stacked_log(r.h);
    const Eigen::VectorXd x1 = stacked_log(h1);
    const Eigen::VectorXd x2 = stacked_log(h2);
    const Eigen::VectorXd dr = x1 - x0;
    const Eigen::VectorXd dv = x2 - 2.0 * x1 + x0;
    const double nr = dr.norm();
    const double nv = dv.norm();
    if (nv > 0.0 && std::isfinite(nr / nv))
    {
      const double a = -std::max(1.0, nr / nv);
      const Eigen::VectorXd x = x0 - 2.0 * a * dr + a * a * dv;
      const Vectors hx = engine.normalised(unstack_exp(x, r.h));
      const E ex = engine.evaluate(hx);
      Vectors h3 = engine.step(hx, ex);
      E e3 = engine.evaluate(h3);
      ++r.iterations;
      if (std::isfinite(e3.phi) && e3.phi >= e2.phi)
      {
        r.h = std::move(h3);
        r.eval = std::move(e3);
        continue;
      }
    }
    r.h = std::move(h2);
    r.eval = std::move(e2);
  }
  if (!r.converged && engine.residual(r.eval, rule) <= tol)
    r.converged = true;
  return r;
}

} // namespace geofactor::detail
