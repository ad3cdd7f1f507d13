#include "geofactor/duality.hpp"

#include "geofactor/certify.hpp"
#include "geofactor/error.hpp"
#include "mm_engine.hpp"
#include "parallel.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>

namespace geofactor {

namespace {

using detail::Vectors;

void require_target(const GeometricMeanProblem& problem, const RealFunction& G)
{
  if (!same_space(G.space(), problem.target()))
    throw SpaceMismatch("G must live on the problem's codomain");
  if (G.values().maxCoeff() <= 0.0)
    throw InvalidArgument("G must not vanish identically");
}

void require_inputs(const GeometricMeanProblem& problem, const Vectors& hs)
{
  if (hs.size() != problem.arity())
    throw InvalidArgument("need one dual function per operator");
  for (std::size_t j = 0; j < hs.size(); ++j)
    if (static_cast<std::size_t>(hs[j].size()) != problem.op(j).domain()->size())
      throw SpaceMismatch("dual function " + std::to_string(j) + " has the wrong length");
}

std::vector<std::size_t> support_of(const RealFunction& G)
{
  std::vector<std::size_t> s;
  for (std::size_t x = 0; x < G.size(); ++x)
    if (G[x] > 0.0)
      s.push_back(x);
  return s;
}

Eigen::MatrixXd rows(const Eigen::MatrixXd& k, const std::vector<std::size_t>& idx)
{
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), k.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = k.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

/// T_j h_j on the whole codomain.
Vectors images(const GeometricMeanProblem& problem, const Vectors& hs)
{
  Vectors L;
  L.reserve(problem.arity());
  for (std::size_t j = 0; j < problem.arity(); ++j)
    L.push_back(problem.op(j).weighted_kernel() * hs[j]);
  return L;
}

/// ∏_k (α_k^{-1} L_k)^{α_k}.
Eigen::VectorXd balanced_product(const GeometricMeanProblem& problem, const Vectors& L)
{
  Eigen::VectorXd pi = Eigen::VectorXd::Ones(L.front().size());
  for (std::size_t j = 0; j < problem.arity(); ++j)
    for (Eigen::Index x = 0; x < pi.size(); ++x)
      pi[x] *= L[j][x] > 0.0 ? std::pow(L[j][x] / problem.alpha(j), problem.alpha(j)) : 0.0;
  return pi;
}

detail::Engine engine_on_support(const GeometricMeanProblem& problem, const std::vector<std::size_t>& support,
                                 const Eigen::VectorXd& w, const std::vector<double>& beta)
{
  Vectors nus;
  std::vector<Eigen::MatrixXd> kernels;
  for (const auto& op : problem.operators())
  {
    nus.push_back(op.domain()->weights());
    kernels.push_back(rows(op.kernel(), support));
  }
  return detail::Engine(std::move(nus), std::move(kernels), w, beta, problem.input_exponents());
}

std::vector<RealFunction> as_functions(const GeometricMeanProblem& problem, const Vectors& hs)
{
  std::vector<RealFunction> out;
  out.reserve(hs.size());
  for (std::size_t j = 0; j < hs.size(); ++j)
    out.emplace_back(problem.op(j).domain(), hs[j]);
  return out;
}

} // namespace

double dual_objective(const GeometricMeanProblem& problem, const RealFunction& G, const Vectors& hs)
{
  require_inputs(problem, hs);
  if (!same_space(G.space(), problem.target()))
    throw SpaceMismatch("G must live on the problem's codomain");
  const Eigen::VectorXd pi = balanced_product(problem, images(problem, hs));
  return problem.target()->weights().cwiseProduct(G.values()).dot(pi);
}

Vectors dual_gradient(const GeometricMeanProblem& problem, const RealFunction& G, const Vectors& hs)
{
  require_inputs(problem, hs);
  if (!same_space(G.space(), problem.target()))
    throw SpaceMismatch("G must live on the problem's codomain");
  const Vectors L = images(problem, hs);
  const Eigen::VectorXd pi = balanced_product(problem, L);
  const Eigen::VectorXd& mu = problem.target()->weights();
  Vectors grad;
  grad.reserve(problem.arity());
  for (std::size_t j = 0; j < problem.arity(); ++j)
  {
    Eigen::VectorXd g(pi.size());
    for (Eigen::Index x = 0; x < pi.size(); ++x)
      g[x] = L[j][x] > 0.0 ? problem.alpha(j) * G.values()[x] * pi[x] / L[j][x] : 0.0;
    const auto& op = problem.op(j);
    grad.push_back(op.domain()->weights().cwiseProduct(op.kernel().transpose() * mu.cwiseProduct(g)));
  }
  return grad;
}

double dual_budget(const GeometricMeanProblem& problem, const RealFunction& G, const Vectors& hs)
{
  require_inputs(problem, hs);
  double total = 0.0;
  for (std::size_t j = 0; j < problem.arity(); ++j)
    total += input_norm(problem, j, hs[j]);
  return lp_norm(G, problem.q_dual()) * total;
}

DualCertificate dual_ascent(const GeometricMeanProblem& problem, const RealFunction& G, const SolverOptions& opts)
{
  require_target(problem, G);
  if (!(opts.gap_tol > 0.0))
    throw InvalidArgument("gap_tol must be positive");
  std::vector<bool> mask(G.size());
  for (std::size_t x = 0; x < G.size(); ++x)
    mask[x] = G[x] > 0.0;
  for (std::size_t j = 0; j < problem.arity(); ++j)
    if (!saturation_check(problem.op(j), mask))
      throw SaturationFailure("operator " + std::to_string(j) + " has a zero kernel row on supp(G)");

  const auto support = support_of(G);
  Eigen::VectorXd w(static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i)
    w[static_cast<Eigen::Index>(i)] = problem.target()->weight(support[i]) * G[support[i]];
  const auto engine = engine_on_support(problem, support, w, problem.alphas());

  // Half the tolerance leaves room for the roundoff of the public recomputation.
  const auto centre = engine.uniform_start();
  auto result =
      detail::ascend(engine, centre, centre, opts.max_iters, 0.5 * opts.gap_tol, detail::StopRule::ProductGap);

  const double gnorm = lp_norm(G, problem.q_dual());
  Vectors hs = std::move(result.h);
  for (std::size_t j = 0; j < hs.size(); ++j)
    hs[j] *= problem.alpha(j) / gnorm;

  DualCertificate dual;
  dual.eta = dual_objective(problem, G, hs);
  dual.feasibility_slack = 1.0 - dual_budget(problem, G, hs);
  dual.hs = as_functions(problem, hs);
  dual.iterations = result.iterations;
  dual.converged = result.converged;
  return dual;
}

FactorisationCertificate recover_primal(const GeometricMeanProblem& problem, const RealFunction& G,
                                        const DualCertificate& dual)
{
  if (!same_space(G.space(), problem.target()))
    throw SpaceMismatch("G must live on the problem's codomain");
  Vectors hs;
  for (const auto& h : dual.hs)
    hs.push_back(h.values());
  require_inputs(problem, hs);
  const Vectors L = images(problem, hs);
  const Eigen::VectorXd pi = balanced_product(problem, L);

  std::vector<RealFunction> gs;
  for (std::size_t j = 0; j < problem.arity(); ++j)
  {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(pi.size());
    for (Eigen::Index x = 0; x < pi.size(); ++x)
    {
      if (!(G.values()[x] > 0.0))
        continue;
      if (!(L[j][x] > 0.0))
        throw NumericalFailure("T_" + std::to_string(j) + " h vanishes at a point of supp(G)");
      g[x] = problem.alpha(j) * G.values()[x] * pi[x] / L[j][x];
    }
    gs.emplace_back(problem.target(), std::move(g));
  }

  const double gnorm = lp_norm(G, problem.q_dual());
  double K = 0.0;
  for (std::size_t j = 0; j < problem.arity(); ++j)
    K = std::max(K, input_dual_norm(problem, j, adjoint_apply(problem.op(j), gs[j]).values()));
  return FactorisationCertificate{G, std::move(gs), K / gnorm};
}

FactorisationCertificate equalise(const GeometricMeanProblem& problem, FactorisationCertificate cert)
{
  std::vector<double> m(problem.arity());
  double log_mean = 0.0;
  for (std::size_t j = 0; j < problem.arity(); ++j)
  {
    m[j] = input_dual_norm(problem, j, adjoint_apply(problem.op(j), cert.gs[j]).values());
    if (!(m[j] > 0.0) || !std::isfinite(m[j]))
      return cert;
    log_mean += problem.alpha(j) * std::log(m[j]);
  }
  const double M = std::exp(log_mean);
  for (std::size_t j = 0; j < problem.arity(); ++j)
    cert.gs[j] = cert.gs[j].scaled(M / m[j]);
  cert.K = M / lp_norm(cert.G, problem.q_dual());
  return cert;
}

Factorisation factorise(const GeometricMeanProblem& problem, const RealFunction& G, const SolverOptions& opts)
{
  if (!(problem.q() >= 1.0))
    throw InvalidArgument("factorise needs q >= 1; use maurey_factorise for q < 1");
  DualCertificate dual = dual_ascent(problem, G, opts);
  FactorisationCertificate cert = equalise(problem, recover_primal(problem, G, dual));
  const double gap = duality_gap(cert.K, dual.eta);
  return Factorisation{std::move(cert), std::move(dual), gap};
}

FactorisationCertificate GeneralQReduction::back_map(const FactorisationCertificate& reduced_cert) const
{
  std::vector<RealFunction> gs;
  for (const auto& gamma : reduced_cert.gs)
  {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(original_target.size()));
    for (std::size_t i = 0; i < support.size(); ++i)
      g[static_cast<Eigen::Index>(support[i])] = gamma[i] * original_target[support[i]];
    gs.emplace_back(original_target.space(), std::move(g));
  }
  return FactorisationCertificate{original_target, std::move(gs), reduced_cert.K, reduced_cert.tolerance};
}

GeneralQReduction reduce_general_q(const GeometricMeanProblem& problem, const RealFunction& G)
{
  require_target(problem, G);
  if (problem.q() == 1.0)
  {
    std::vector<std::size_t> all(G.size());
    for (std::size_t x = 0; x < all.size(); ++x)
      all[x] = x;
    return GeneralQReduction{problem, G, G, std::move(all)};
  }
  if (!(problem.q() > 1.0))
    throw InvalidArgument("reduce_general_q needs q >= 1");

  const double gnorm = lp_norm(G, problem.q_dual());
  const auto support = support_of(G);
  const auto& x = *problem.target();
  std::vector<std::string> labels;
  Eigen::VectorXd weights(static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i)
  {
    labels.push_back(x.labels()[support[i]]);
    weights[static_cast<Eigen::Index>(i)] = x.weight(support[i]) * G[support[i]] / gnorm;
  }
  const SpacePtr reduced_space = make_space(std::move(labels), std::move(weights));
  std::vector<PositiveKernelOperator> ops;
  for (const auto& op : problem.operators())
    ops.emplace_back(op.domain(), reduced_space, rows(op.kernel(), support));
  GeometricMeanProblem reduced(std::move(ops), problem.alphas(), problem.input_exponents(), 1.0);
  return GeneralQReduction{std::move(reduced), RealFunction::constant(reduced_space, 1.0), G, support};
}

GeometricMeanProblem maurey_augmented_problem(const GeometricMeanProblem& problem)
{
  const double q = problem.q();
  if (!(q > 0.0 && q < 1.0))
    throw InvalidArgument("the Maurey augmentation needs 0 < q < 1");
  std::vector<PositiveKernelOperator> ops = problem.operators();
  const SpacePtr point = make_space({"lambda"}, Eigen::VectorXd::Ones(1));
  ops.emplace_back(point, problem.target(), Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(problem.target()->size()), 1));
  std::vector<double> beta;
  for (double a : problem.alphas())
    beta.push_back(a * q);
  beta.push_back(1.0 - q);
  std::vector<double> p = problem.input_exponents();
  p.push_back(1.0);
  // Σβ = 1 may miss the 1e-12 check by an ulp or two; renormalise defensively.
  double sum = 0.0;
  for (double b : beta)
    sum += b;
  for (double& b : beta)
    b /= sum;
  return GeometricMeanProblem(std::move(ops), std::move(beta), std::move(p), 1.0);
}

MaureyFactorisation maurey_factorise(const GeometricMeanProblem& problem, double A, const SolverOptions& opts)
{
  if (!(A > 0.0) || !std::isfinite(A))
    throw InvalidArgument("maurey_factorise needs a finite constant A > 0");
  const GeometricMeanProblem augmented = maurey_augmented_problem(problem);
  const double q = problem.q();
  // Undoing the augmentation raises the constant to the power 1/q, which
  // multiplies the relative gap by about 1/q.
  SolverOptions tight = opts;
  tight.gap_tol = opts.gap_tol * q;
  const auto fact = factorise(augmented, RealFunction::constant(problem.target(), 1.0), tight);

  MaureyFactorisation out;
  out.augmented_constant = fact.certificate.K;
  out.gap = fact.gap;
  const double lift = std::pow(A, 1.0 - q);
  for (std::size_t j = 0; j < problem.arity(); ++j)
    out.gs.push_back(fact.certificate.gs[j].scaled(lift));

  std::vector<double> alphas = problem.alphas();
  const RealFunction product = geometric_mean(out.gs, alphas);
  if (product.values().minCoeff() <= 0.0)
    throw NumericalFailure("a Maurey factor vanishes; the augmented solve was not strictly positive");
  out.raw_norm = lp_norm(product, problem.q_dual());
  out.scale = 1.0 / out.raw_norm;
  for (auto& g : out.gs)
    g = g.scaled(out.scale);
  out.norm = lp_norm(geometric_mean(out.gs, alphas), problem.q_dual());
  for (std::size_t j = 0; j < problem.arity(); ++j)
    out.control_constant =
        std::max(out.control_constant, input_dual_norm(problem, j, adjoint_apply(problem.op(j), out.gs[j]).values()));
  return out;
}

namespace {

constexpr int kMaxItersPerStart = 50000;

/// Hölder extremal for h ↦ ⟨k, h⟩_ν on the unit L^p(ν) sphere.
Eigen::VectorXd holder_extremal(const Eigen::VectorXd& k, const Eigen::VectorXd& nu, double p)
{
  Eigen::VectorXd f = Eigen::VectorXd::Zero(k.size());
  if (p == kInfinity)
    return Eigen::VectorXd::Ones(k.size());
  if (p == 1.0)
  {
    Eigen::Index y = 0;
    k.maxCoeff(&y);
    f[y] = 1.0 / nu[y];
    return f;
  }
  const double pd = p / (p - 1.0);
  for (Eigen::Index y = 0; y < k.size(); ++y)
    f[y] = k[y] > 0.0 ? std::pow(k[y], pd - 1.0) : 0.0;
  return f;
}

BestConstant sup_norm_constant(const GeometricMeanProblem& problem)
{
  BestConstant best;
  best.starts = 1;
  best.stable = true;
  const std::size_t nx = problem.target()->size();
  std::size_t arg = 0;
  for (std::size_t x = 0; x < nx; ++x)
  {
    double value = 1.0;
    for (std::size_t j = 0; j < problem.arity(); ++j)
    {
      const Eigen::VectorXd row = problem.op(j).kernel().row(static_cast<Eigen::Index>(x)).transpose();
      value *= std::pow(input_dual_norm(problem, j, row), problem.alpha(j));
    }
    if (value > best.value)
    {
      best.value = value;
      arg = x;
    }
  }
  for (std::size_t j = 0; j < problem.arity(); ++j)
  {
    const auto& op = problem.op(j);
    Eigen::VectorXd f = holder_extremal(op.kernel().row(static_cast<Eigen::Index>(arg)).transpose(),
                                        op.domain()->weights(), problem.p(j));
    const double n = input_norm(problem, j, f);
    if (n > 0.0)
      f /= n;
    else
      f = Eigen::VectorXd::Ones(f.size()) / input_norm(problem, j, Eigen::VectorXd::Ones(f.size()));
    best.witnesses.emplace_back(op.domain(), std::move(f));
  }
  return best;
}

} // namespace

BestConstant best_constant(const GeometricMeanProblem& problem, const SolverOptions& opts)
{
  if (problem.q() == kInfinity)
    return sup_norm_constant(problem);

  // Points where some kernel row vanishes contribute nothing for any input.
  std::vector<std::size_t> live;
  for (std::size_t x = 0; x < problem.target()->size(); ++x)
  {
    bool ok = true;
    for (const auto& op : problem.operators())
      ok = ok && op.kernel().row(static_cast<Eigen::Index>(x)).maxCoeff() > 0.0;
    if (ok)
      live.push_back(x);
  }
  std::vector<double> beta;
  for (double a : problem.alphas())
    beta.push_back(problem.q() * a);

  BestConstant best;
  if (live.empty())
  {
    best.stable = true;
    for (std::size_t j = 0; j < problem.arity(); ++j)
    {
      const auto& d = problem.op(j).domain();
      Eigen::VectorXd f = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d->size()));
      best.witnesses.emplace_back(d, f / input_norm(problem, j, f));
    }
    return best;
  }
  Eigen::VectorXd w(static_cast<Eigen::Index>(live.size()));
  for (std::size_t i = 0; i < live.size(); ++i)
    w[static_cast<Eigen::Index>(i)] = problem.target()->weight(live[i]);
  const auto engine = engine_on_support(problem, live, w, beta);

  const std::size_t starts = static_cast<std::size_t>(std::max(opts.restarts, 1));
  std::vector<detail::AscentResult> runs(starts);
  const double tol = std::min(opts.gap_tol, 1e-9);
  const auto centre = engine.uniform_start();
  detail::parallel_for(starts, opts.threads, [&](std::size_t i) {
    Vectors start;
    if (i == 0)
      start = engine.uniform_start();
    else
    {
      auto rng = detail::substream(opts.seed, i);
      start = engine.random_start(rng);
    }
    runs[i] = detail::ascend(engine, std::move(start), centre, std::min(opts.max_iters, kMaxItersPerStart), tol,
                             detail::StopRule::Stationarity);
  });

  std::size_t arg = 0;
  for (std::size_t i = 1; i < starts; ++i)
    if (runs[i].eval.phi > runs[arg].eval.phi)
      arg = i;
  const double top = runs[arg].eval.phi;
  best.value = std::pow(top, 1.0 / problem.q());
  best.starts = static_cast<int>(starts);
  best.stable = true;
  for (const auto& r : runs)
    if (r.eval.phi >= top * (1.0 - 1e-6) && !r.converged)
      best.stable = false;
  best.witnesses = as_functions(problem, runs[arg].h);
  return best;
}

} // namespace geofactor
