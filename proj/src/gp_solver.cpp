#include "gp_solver.hpp"

#include "geofactor/error.hpp"

#include <cmath>
#include <limits>

namespace geofactor::detail {

namespace {

double row_dot(const SparseRow& r, const Eigen::VectorXd& z)
{
  double s = 0.0;
  for (const auto& [i, a] : r.entries)
    s += a * z[i];
  return s;
}

/// Log-sum-exp of the constraint terms and the softmax weights.
double terms(const LseConstraint& c, const Eigen::VectorXd& z, std::vector<double>& weights)
{
  const std::size_t n = c.rows.size();
  weights.resize(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k)
  {
    weights[k] = c.offsets[k] + row_dot(c.rows[k], z);
    top = std::max(top, weights[k]);
  }
  double total = 0.0;
  for (auto& w : weights)
  {
    w = std::exp(w - top);
    total += w;
  }
  for (auto& w : weights)
    w /= total;
  return top + std::log(total);
}

struct Barrier
{
  double value = 0.0;
  bool feasible = true;
};

Barrier barrier_value(const GpProgram& p, const Eigen::VectorXd& z, double tau)
{
  Barrier b;
  b.value = tau * p.cost.dot(z);
  std::vector<double> w;
  for (const auto& c : p.constraints)
  {
    const double f = terms(c, z, w);
    if (!(f < 0.0))
    {
      b.feasible = false;
      return b;
    }
    b.value -= std::log(-f);
  }
  return b;
}

void derivatives(const GpProgram& p, const Eigen::VectorXd& z, double tau, Eigen::VectorXd& grad,
                 Eigen::MatrixXd& hess)
{
  const Eigen::Index n = z.size();
  grad = tau * p.cost;
  hess = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> w;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  std::vector<int> touched;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto& c : p.constraints)
  {
    const double f = terms(c, z, w);
    const double inv = -1.0 / f;
    touched.clear();
    for (std::size_t k = 0; k < c.rows.size(); ++k)
      for (const auto& [i, a] : c.rows[k].entries)
      {
        g[i] += w[k] * a;
        if (!seen[static_cast<std::size_t>(i)])
        {
          seen[static_cast<std::size_t>(i)] = 1;
          touched.push_back(i);
        }
      }
    // ∇²f = Σ_k w_k a_k a_kᵀ − g gᵀ; the barrier adds ∇²f/(−f) + g gᵀ/f².
    const bool curved = c.rows.size() > 1;
    if (curved)
      for (std::size_t k = 0; k < c.rows.size(); ++k)
        for (const auto& [i, a] : c.rows[k].entries)
          for (const auto& [l, b] : c.rows[k].entries)
            hess(i, l) += inv * w[k] * a * b;
    const double outer = inv * inv - (curved ? inv : 0.0);
    for (int i : touched)
    {
      grad[i] += inv * g[i];
      for (int l : touched)
        hess(i, l) += outer * g[i] * g[l];
    }
    for (int i : touched)
    {
      g[i] = 0.0;
      seen[static_cast<std::size_t>(i)] = 0;
    }
  }
}

} // namespace

double constraint_value(const LseConstraint& c, const Eigen::VectorXd& z)
{
  std::vector<double> w;
  return terms(c, z, w);
}

GpResult solve_barrier(const GpProgram& program, Eigen::VectorXd z0, double tol)
{
  GpResult r;
  r.z = std::move(z0);
  if (!barrier_value(program, r.z, 1.0).feasible)
    throw NumericalFailure("barrier method needs a strictly feasible starting point");
  const double m = static_cast<double>(program.constraints.size());
  double tau = 1.0;
  constexpr int kMaxNewton = 200;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  while (true)
  {
    for (int it = 0; it < kMaxNewton; ++it)
    {
      derivatives(program, r.z, tau, grad, hess);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      Eigen::VectorXd step = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite())
      {
        const double shift = 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
        hess.diagonal().array() += shift;
        step = hess.ldlt().solve(-grad);
      }
      const double decrement = -grad.dot(step);
      ++r.newton_steps;
      if (!(decrement > 2e-14))
        break;
      const Barrier here = barrier_value(program, r.z, tau);
      double s = 1.0;
      while (s > 1e-20)
      {
        const Barrier next = barrier_value(program, r.z + s * step, tau);
        if (next.feasible && next.value <= here.value - 0.25 * s * decrement)
          break;
        s *= 0.5;
      }
      if (!(s > 1e-20))
        break;
      r.z += s * step;
    }
    r.gap_bound = m / tau;
    if (r.gap_bound <= tol)
      break;
    tau *= 10.0;
  }
  return r;
}

} // namespace geofactor::detail
