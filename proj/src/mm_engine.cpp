#include "mm_engine.hpp"

#include "geofactor/measure.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>

namespace geofactor::detail {

namespace {

double power_norm(const Eigen::VectorXd& nu, const Eigen::VectorXd& h, double p)
{
  if (p == kInfinity)
    return h.size() == 0 ? 0.0 : h.maxCoeff();
  if (p == 1.0)
    return nu.dot(h);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i)
    if (h[i] > 0.0)
      acc += nu[i] * std::pow(h[i], p);
  return std::pow(acc, 1.0 / p);
}

double conjugate(double p)
{
  if (p == 1.0)
    return kInfinity;
  if (p == kInfinity)
    return 1.0;
  return p / (p - 1.0);
}

} // namespace

Engine::Engine(Vectors nus, std::vector<Eigen::MatrixXd> kernels, Eigen::VectorXd w, std::vector<double> beta,
               std::vector<double> p)
    : nus_(std::move(nus)), kernels_(std::move(kernels)), w_(std::move(w)), beta_(std::move(beta)),
      p_(std::move(p))
{
  weighted_.reserve(kernels_.size());
  for (std::size_t j = 0; j < kernels_.size(); ++j)
    weighted_.push_back(kernels_[j] * nus_[j].asDiagonal());
}

double Engine::norm(std::size_t j, const Eigen::VectorXd& h) const
{
  return power_norm(nus_[j], h, p_[j]);
}

double Engine::dual_norm(std::size_t j, const Eigen::VectorXd& v) const
{
  return power_norm(nus_[j], v, conjugate(p_[j]));
}

Vectors Engine::normalised(Vectors h) const
{
  for (std::size_t j = 0; j < h.size(); ++j)
  {
    const double top = h[j].size() > 0 ? h[j].maxCoeff() : 0.0;
    if (top > 0.0 && std::isfinite(top))
      h[j] /= top;
    const double n = norm(j, h[j]);
    if (n > 0.0 && std::isfinite(n))
      h[j] /= n;
  }
  return h;
}

Vectors Engine::uniform_start() const
{
  Vectors h;
  h.reserve(arity());
  for (std::size_t j = 0; j < arity(); ++j)
    h.push_back(Eigen::VectorXd::Ones(nus_[j].size()));
  return normalised(std::move(h));
}

Vectors Engine::random_start(std::mt19937_64& rng) const
{
  Vectors h;
  h.reserve(arity());
  for (std::size_t j = 0; j < arity(); ++j)
  {
    Eigen::VectorXd v(nus_[j].size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v[i] = exponential(rng) + 1e-3;
    h.push_back(std::move(v));
  }
  return normalised(std::move(h));
}

Evaluation Engine::evaluate(const Vectors& h) const
{
  Evaluation e;
  const Eigen::Index nx = w_.size();
  e.pi = Eigen::VectorXd::Ones(nx);
  e.L.reserve(arity());
  e.min_L = kInfinity;
  for (std::size_t j = 0; j < arity(); ++j)
  {
    e.L.push_back(weighted_[j] * h[j]);
    const Eigen::VectorXd& L = e.L.back();
    for (Eigen::Index x = 0; x < nx; ++x)
    {
      e.pi[x] *= L[x] > 0.0 ? std::pow(L[x], beta_[j]) : 0.0;
      e.min_L = std::min(e.min_L, L[x]);
    }
  }
  const Eigen::VectorXd wpi = w_.cwiseProduct(e.pi);
  e.phi = wpi.sum();
  e.v.reserve(arity());
  e.dual_norms.reserve(arity());
  for (std::size_t j = 0; j < arity(); ++j)
  {
    Eigen::VectorXd ratio(nx);
    for (Eigen::Index x = 0; x < nx; ++x)
      ratio[x] = e.L[j][x] > 0.0 ? wpi[x] / e.L[j][x] : 0.0;
    e.v.push_back(kernels_[j].transpose() * ratio);
    e.dual_norms.push_back(dual_norm(j, e.v.back()));
  }
  return e;
}

Vectors Engine::step(const Vectors& h, const Evaluation& e) const
{
  Vectors out;
  out.reserve(arity());
  for (std::size_t j = 0; j < arity(); ++j)
  {
    if (p_[j] == kInfinity)
    {
      out.push_back(Eigen::VectorXd::Ones(h[j].size()));
      continue;
    }
    Eigen::VectorXd next = h[j].cwiseProduct(e.v[j]);
    if (p_[j] != 1.0)
      next = next.array().pow(1.0 / p_[j]).matrix();
    const double n = norm(j, next);
    if (n > 0.0 && std::isfinite(n))
      next /= n;
    else
      next = h[j];
    out.push_back(std::move(next));
  }
  return out;
}

double Engine::stationarity(const Evaluation& e)
{
  if (!(e.phi > 0.0) || !std::isfinite(e.phi))
    return kInfinity;
  double worst = 0.0;
  for (double m : e.dual_norms)
    worst = std::max(worst, m / e.phi - 1.0);
  return worst;
}

double Engine::product_gap(const Evaluation& e) const
{
  if (!(e.phi > 0.0) || !std::isfinite(e.phi))
    return kInfinity;
  double total = 0.0;
  for (double b : beta_)
    total += b;
  double log_ratio = 0.0;
  for (std::size_t j = 0; j < arity(); ++j)
    log_ratio += beta_[j] / total * std::log(e.dual_norms[j] / e.phi);
  return std::expm1(log_ratio);
}

double Engine::residual(const Evaluation& e, StopRule rule) const
{
  return rule == StopRule::ProductGap ? product_gap(e) : stationarity(e);
}

} // namespace geofactor::detail
