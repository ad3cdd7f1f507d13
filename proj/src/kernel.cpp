#include "geofactor/kernel.hpp"

#include "geofactor/certify.hpp"
#include "geofactor/error.hpp"
#include "gp_solver.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "squarem.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace geofactor {

GeneralKernel::GeneralKernel(SpacePtr target_, std::vector<SpacePtr> inputs_, std::vector<double> values_,
                             std::vector<double> input_exponents_, double output_exponent_)
    : target(std::move(target_)), inputs(std::move(inputs_)), values(std::move(values_)),
      input_exponents(std::move(input_exponents_)), output_exponent(output_exponent_)
{
  if (!target)
    throw InvalidArgument("kernel needs a target space");
  if (inputs.empty())
    throw InvalidArgument("kernel needs at least one input space");
  if (input_exponents.size() != inputs.size())
    throw InvalidArgument("kernel: need one input exponent per input space");
  for (const auto& y : inputs)
    if (!y)
      throw InvalidArgument("kernel: null input space");
  if (values.size() != target->size() * tuples())
    throw InvalidArgument("kernel: tensor has " + std::to_string(values.size()) + " entries, expected " +
                          std::to_string(target->size() * tuples()));
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("kernel entries must be finite and nonnegative");
  for (double p : input_exponents)
    if (!(p >= 1.0))
      throw InvalidArgument("kernel: input exponents must lie in [1, inf]");
  if (!(output_exponent > 0.0))
    throw InvalidArgument("kernel: output exponent must be positive");
}

std::size_t GeneralKernel::tuples() const
{
  std::size_t n = 1;
  for (const auto& y : inputs)
    n *= y->size();
  return n;
}

std::size_t GeneralKernel::index(std::size_t x, const std::vector<std::size_t>& ys) const
{
  std::size_t i = x;
  for (std::size_t j = 0; j < inputs.size(); ++j)
    i = i * inputs[j]->size() + ys[j];
  return i;
}

std::vector<std::size_t> GeneralKernel::tuple(std::size_t t) const
{
  std::vector<std::size_t> ys(inputs.size());
  for (std::size_t j = inputs.size(); j-- > 0;)
  {
    ys[j] = t % inputs[j]->size();
    t /= inputs[j]->size();
  }
  return ys;
}

GeneralKernel product_kernel(const GeometricMeanProblem& problem)
{
  const std::size_t d = problem.arity();
  for (double a : problem.alphas())
    if (std::abs(a - 1.0 / static_cast<double>(d)) > 1e-12)
      throw InvalidArgument("product_kernel needs equal weights 1/d");
  std::vector<SpacePtr> inputs;
  for (const auto& op : problem.operators())
    inputs.push_back(op.domain());
  GeneralKernel K(problem.target(), inputs,
                  std::vector<double>(problem.target()->size() * [&] {
                    std::size_t n = 1;
                    for (const auto& y : inputs)
                      n *= y->size();
                    return n;
                  }()),
                  problem.input_exponents(), problem.q());
  for (std::size_t x = 0; x < problem.target()->size(); ++x)
    for (std::size_t t = 0; t < K.tuples(); ++t)
    {
      const auto ys = K.tuple(t);
      double v = 1.0;
      for (std::size_t j = 0; j < d; ++j)
        v *= problem.op(j).kernel()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(ys[j]));
      K.values[K.index(x, ys)] = v;
    }
  return K;
}

namespace {

double lp(const MeasureSpace& s, const Eigen::VectorXd& v, double p)
{
  return lp_norm(s, v, p);
}

/// Precomputed tuple data: decoded indices and ν-products per tuple.
struct TupleTable
{
  std::vector<std::vector<std::size_t>> ys;
  std::vector<double> nu;
};

TupleTable tuple_table(const GeneralKernel& K)
{
  TupleTable t;
  for (std::size_t i = 0; i < K.tuples(); ++i)
  {
    auto ys = K.tuple(i);
    double w = 1.0;
    for (std::size_t j = 0; j < K.arity(); ++j)
      w *= K.inputs[j]->weight(ys[j]);
    t.ys.push_back(std::move(ys));
    t.nu.push_back(w);
  }
  return t;
}

Eigen::VectorXd apply_values(const GeneralKernel& K, const TupleTable& tab, const std::vector<Eigen::VectorXd>& fs)
{
  const std::size_t nx = K.target->size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nx));
  for (std::size_t x = 0; x < nx; ++x)
  {
    double acc = 0.0;
    for (std::size_t t = 0; t < tab.ys.size(); ++t)
    {
      const double k = K.values[x * tab.ys.size() + t];
      if (k == 0.0)
        continue;
      double term = k * tab.nu[t];
      for (std::size_t j = 0; j < K.arity(); ++j)
        term *= fs[j][static_cast<Eigen::Index>(tab.ys[t][j])];
      acc += term;
    }
    out[static_cast<Eigen::Index>(x)] = acc;
  }
  return out;
}

} // namespace

RealFunction kernel_apply(const GeneralKernel& kernel, const std::vector<RealFunction>& fs)
{
  if (fs.size() != kernel.arity())
    throw InvalidArgument("kernel_apply: need one input per kernel slot");
  std::vector<Eigen::VectorXd> vs;
  for (std::size_t j = 0; j < fs.size(); ++j)
  {
    if (!same_space(fs[j].space(), kernel.inputs[j]))
      throw SpaceMismatch("kernel_apply: input " + std::to_string(j) + " is on the wrong space");
    vs.push_back(fs[j].values());
  }
  return RealFunction(kernel.target, apply_values(kernel, tuple_table(kernel), vs));
}

double kernel_ratio(const GeneralKernel& kernel, const std::vector<Eigen::VectorXd>& fs)
{
  const double d = static_cast<double>(kernel.arity());
  double rhs = 1.0;
  for (std::size_t j = 0; j < kernel.arity(); ++j)
    rhs *= std::pow(lp(*kernel.inputs[j], fs[j], kernel.input_exponents[j]), 1.0 / d);
  if (!(rhs > 0.0))
    return 0.0;
  const Eigen::VectorXd T = apply_values(kernel, tuple_table(kernel), fs);
  return lp(*kernel.target, T.array().pow(1.0 / d).matrix(), kernel.output_exponent) / rhs;
}

namespace {

using detail::Vectors;

struct KernelEvaluation
{
  double phi = 0.0;
  double min_L = 0.0;
  Vectors v;
  std::vector<double> dual_norms;
};

/// Minorise-maximise engine for Φ(f) = Σ_{x∈live} w(x) T(f)(x)^β on unit
/// spheres. Jensen on Σ_x and on the tuple sum inside T gives the same
/// multiplicative update f_j ∝ (f_j v_j)^{1/p_j} as the product case.
class KernelEngine
{
public:
  KernelEngine(const GeneralKernel& K, std::vector<std::size_t> live, Eigen::VectorXd w, double beta)
      : K_(K), tab_(tuple_table(K)), live_(std::move(live)), w_(std::move(w)), beta_(beta)
  {
  }

  double norm(std::size_t j, const Eigen::VectorXd& f) const
  {
    return lp(*K_.inputs[j], f, K_.input_exponents[j]);
  }

  Vectors normalised(Vectors f) const
  {
    for (std::size_t j = 0; j < f.size(); ++j)
    {
      const double n = norm(j, f[j]);
      if (n > 0.0 && std::isfinite(n))
        f[j] /= n;
    }
    return f;
  }

  Vectors uniform_start() const
  {
    Vectors f;
    for (const auto& y : K_.inputs)
      f.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(y->size())));
    return normalised(std::move(f));
  }

  Vectors random_start(std::mt19937_64& rng) const
  {
    Vectors f;
    for (const auto& y : K_.inputs)
    {
      Eigen::VectorXd v(static_cast<Eigen::Index>(y->size()));
      for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = detail::exponential(rng) + 1e-3;
      f.push_back(std::move(v));
    }
    return normalised(std::move(f));
  }

  KernelEvaluation evaluate(const Vectors& f) const
  {
    KernelEvaluation e;
    const std::size_t d = K_.arity();
    const std::size_t nt = tab_.ys.size();
    for (const auto& y : K_.inputs)
      e.v.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(y->size())));
    e.min_L = kInfinity;
    std::vector<double> T(live_.size(), 0.0);
    for (std::size_t i = 0; i < live_.size(); ++i)
    {
      const double* row = K_.values.data() + live_[i] * nt;
      for (std::size_t t = 0; t < nt; ++t)
      {
        if (row[t] == 0.0)
          continue;
        double term = row[t] * tab_.nu[t];
        for (std::size_t j = 0; j < d; ++j)
          term *= f[j][static_cast<Eigen::Index>(tab_.ys[t][j])];
        T[i] += term;
      }
      e.min_L = std::min(e.min_L, T[i]);
      if (T[i] > 0.0)
        e.phi += w_[static_cast<Eigen::Index>(i)] * std::pow(T[i], beta_);
    }
    // v_j(y) = Σ_x w T^{β−1} Σ_{tuples with y_j = y} K ∏_{k≠j} f_k ν_k, so ⟨v_j, f_j⟩_ν = Φ.
    for (std::size_t i = 0; i < live_.size(); ++i)
    {
      if (!(T[i] > 0.0))
        continue;
      const double outer = w_[static_cast<Eigen::Index>(i)] * std::pow(T[i], beta_ - 1.0);
      const double* row = K_.values.data() + live_[i] * nt;
      for (std::size_t t = 0; t < nt; ++t)
      {
        if (row[t] == 0.0)
          continue;
        const auto& ys = tab_.ys[t];
        for (std::size_t j = 0; j < d; ++j)
        {
          double term = outer * row[t] * tab_.nu[t] / K_.inputs[j]->weight(ys[j]);
          for (std::size_t k = 0; k < d; ++k)
            if (k != j)
              term *= f[k][static_cast<Eigen::Index>(ys[k])];
          e.v[j][static_cast<Eigen::Index>(ys[j])] += term;
        }
      }
    }
    for (std::size_t j = 0; j < d; ++j)
      e.dual_norms.push_back(lp(*K_.inputs[j], e.v[j], kothe_dual_exponent(K_.input_exponents[j])));
    return e;
  }

  Vectors step(const Vectors& f, const KernelEvaluation& e) const
  {
    Vectors out;
    for (std::size_t j = 0; j < f.size(); ++j)
    {
      const double p = K_.input_exponents[j];
      if (p == kInfinity)
      {
        out.push_back(Eigen::VectorXd::Ones(f[j].size()));
        continue;
      }
      Eigen::VectorXd next = f[j].cwiseProduct(e.v[j]);
      if (p != 1.0)
        next = next.array().pow(1.0 / p).matrix();
      const double n = norm(j, next);
      if (n > 0.0 && std::isfinite(n))
        next /= n;
      else
        next = f[j];
      out.push_back(std::move(next));
    }
    return out;
  }

  double residual(const KernelEvaluation& e, detail::StopRule) const
  {
    if (!(e.phi > 0.0) || !std::isfinite(e.phi))
      return kInfinity;
    double worst = 0.0;
    for (double m : e.dual_norms)
      worst = std::max(worst, m / e.phi - 1.0);
    return worst;
  }

private:
  const GeneralKernel& K_;
  TupleTable tab_;
  std::vector<std::size_t> live_;
  Eigen::VectorXd w_;
  double beta_;
};

constexpr int kKernelItersPerStart = 50000;

struct Run
{
  double value = 0.0;
  Vectors f;
  bool converged = false;
};

/// Best Φ^{1/β·(1/d)}-type value over `live` with multistart; returns Φ.
std::vector<Run> multistart(const GeneralKernel& K, const std::vector<std::size_t>& live, const Eigen::VectorXd& w,
                            double beta, const SolverOptions& opts)
{
  const KernelEngine engine(K, live, w, beta);
  const auto centre = engine.uniform_start();
  const std::size_t starts = static_cast<std::size_t>(std::max(opts.restarts, 1));
  std::vector<Run> runs(starts);
  const double tol = std::min(opts.gap_tol, 1e-10);
  detail::parallel_for(starts, opts.threads, [&](std::size_t i) {
    Vectors start;
    if (i == 0)
      start = centre;
    else
    {
      auto rng = detail::substream(opts.seed, i);
      start = engine.random_start(rng);
    }
    auto r = detail::ascend(engine, std::move(start), centre, std::min(opts.max_iters, kKernelItersPerStart), tol,
                            detail::StopRule::Stationarity);
    runs[i] = Run{r.eval.phi, std::move(r.h), r.converged};
  });
  return runs;
}

bool row_alive(const GeneralKernel& K, std::size_t x)
{
  const std::size_t nt = K.tuples();
  for (std::size_t t = 0; t < nt; ++t)
    if (K.values[x * nt + t] > 0.0)
      return true;
  return false;
}

std::vector<RealFunction> to_functions(const GeneralKernel& K, const Vectors& f)
{
  std::vector<RealFunction> out;
  for (std::size_t j = 0; j < f.size(); ++j)
    out.emplace_back(K.inputs[j], f[j]);
  return out;
}

} // namespace

KernelBestConstant kernel_best_constant(const GeneralKernel& kernel, const SolverOptions& opts)
{
  const double d = static_cast<double>(kernel.arity());
  const double r = kernel.output_exponent;
  KernelBestConstant best;
  std::vector<std::size_t> live;
  for (std::size_t x = 0; x < kernel.target->size(); ++x)
    if (row_alive(kernel, x))
      live.push_back(x);
  best.starts = std::max(opts.restarts, 1);
  if (live.empty())
  {
    best.stable = true;
    best.witnesses = to_functions(kernel, KernelEngine(kernel, {}, {}, 1.0).uniform_start());
    return best;
  }

  // Each candidate is (Φ-derived value, run); r = ∞ maximises each point separately.
  std::vector<std::pair<double, Run>> candidates;
  if (r == kInfinity)
  {
    for (std::size_t x : live)
    {
      auto runs = multistart(kernel, {x}, Eigen::VectorXd::Ones(1), 1.0, opts);
      for (auto& run : runs)
        candidates.emplace_back(std::pow(run.value, 1.0 / d), std::move(run));
    }
  }
  else
  {
    Eigen::VectorXd w(static_cast<Eigen::Index>(live.size()));
    for (std::size_t i = 0; i < live.size(); ++i)
      w[static_cast<Eigen::Index>(i)] = kernel.target->weight(live[i]);
    auto runs = multistart(kernel, live, w, r / d, opts);
    for (auto& run : runs)
      candidates.emplace_back(std::pow(run.value, 1.0 / r), std::move(run));
  }
  std::size_t arg = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].first > candidates[arg].first)
      arg = i;
  best.value = candidates[arg].first;
  best.stable = true;
  for (const auto& [v, run] : candidates)
    if (v >= best.value * (1.0 - 1e-6) && !run.converged)
      best.stable = false;
  best.witnesses = to_functions(kernel, candidates[arg].second.f);
  return best;
}

namespace {

/// Variable layout of the factorisation programme.
struct Layout
{
  std::vector<std::map<std::pair<std::size_t, std::size_t>, int>> s;
  std::vector<std::map<std::size_t, int>> u;
  int t = -1;
  int n = 0;
};

} // namespace

KernelFactorisation kernel_factorisation_constant(const GeneralKernel& kernel, const RealFunction& G_in)
{
  if (!same_space(G_in.space(), kernel.target))
    throw SpaceMismatch("G must live on the kernel's target space");
  if (G_in.values().maxCoeff() <= 0.0)
    throw InvalidArgument("G must not vanish identically");
  const double rd = kothe_dual_exponent(kernel.output_exponent);
  const RealFunction G = G_in.scaled(1.0 / lp_norm(G_in, rd));
  const std::size_t d = kernel.arity();
  const std::size_t nt = kernel.tuples();
  const TupleTable tab = tuple_table(kernel);

  Layout lay;
  lay.s.resize(d);
  lay.u.resize(d);
  struct Active
  {
    std::size_t x;
    std::size_t t;
    double level;
  };
  std::vector<Active> active;
  for (std::size_t x = 0; x < G.size(); ++x)
  {
    if (!(G[x] > 0.0))
      continue;
    if (!row_alive(kernel, x))
      throw SaturationFailure("kernel vanishes identically at a point of supp(G)");
    for (std::size_t t = 0; t < nt; ++t)
    {
      const double k = kernel.values[x * nt + t];
      if (!(k > 0.0))
        continue;
      active.push_back({x, t, std::log(k) + static_cast<double>(d) * std::log(G[x])});
      for (std::size_t j = 0; j < d; ++j)
        lay.s[j].try_emplace({x, tab.ys[t][j]}, 0);
    }
  }
  for (std::size_t j = 0; j < d; ++j)
    for (auto& [key, idx] : lay.s[j])
      idx = lay.n++;
  for (std::size_t j = 0; j < d; ++j)
  {
    const double p = kernel.input_exponents[j];
    if (p == 1.0 || p == kInfinity)
      continue;
    for (const auto& [key, idx] : lay.s[j])
      lay.u[j].try_emplace(key.second, 0);
    for (auto& [y, idx] : lay.u[j])
      idx = lay.n++;
  }
  lay.t = lay.n++;

  detail::GpProgram prog;
  prog.cost = Eigen::VectorXd::Zero(lay.n);
  prog.cost[lay.t] = 1.0;
  for (const auto& a : active)
  {
    detail::LseConstraint c;
    detail::SparseRow row;
    for (std::size_t j = 0; j < d; ++j)
      row.entries.push_back({lay.s[j].at({a.x, tab.ys[a.t][j]}), -1.0});
    c.add_term(a.level, std::move(row));
    prog.constraints.push_back(std::move(c));
  }
  const auto& mu = *kernel.target;
  for (std::size_t j = 0; j < d; ++j)
  {
    const double p = kernel.input_exponents[j];
    const auto& nu = *kernel.inputs[j];
    if (p == kInfinity)
    {
      detail::LseConstraint c;
      for (const auto& [key, idx] : lay.s[j])
        c.add_term(std::log(mu.weight(key.first)) + std::log(nu.weight(key.second)),
                   detail::SparseRow{{{idx, 1.0}, {lay.t, -1.0}}});
      prog.constraints.push_back(std::move(c));
      continue;
    }
    std::map<std::size_t, detail::LseConstraint> per_y;
    for (const auto& [key, idx] : lay.s[j])
    {
      const int bound = p == 1.0 ? lay.t : lay.u[j].at(key.second);
      per_y[key.second].add_term(std::log(mu.weight(key.first)), detail::SparseRow{{{idx, 1.0}, {bound, -1.0}}});
    }
    for (auto& [y, c] : per_y)
      prog.constraints.push_back(std::move(c));
    if (p != 1.0)
    {
      const double pd = kothe_dual_exponent(p);
      detail::LseConstraint c;
      for (const auto& [y, idx] : lay.u[j])
        c.add_term(std::log(nu.weight(y)), detail::SparseRow{{{idx, pd}, {lay.t, -pd}}});
      prog.constraints.push_back(std::move(c));
    }
  }

  // Strictly feasible start: a common level σ clearing every tuple constraint.
  double top = -kInfinity;
  for (const auto& a : active)
    top = std::max(top, a.level);
  const double sigma = top / static_cast<double>(d) + 1.0;
  Eigen::VectorXd z = Eigen::VectorXd::Constant(lay.n, sigma);
  for (std::size_t j = 0; j < d; ++j)
    for (const auto& [y, idx] : lay.u[j])
    {
      double m = 0.0;
      for (const auto& [key, sidx] : lay.s[j])
        if (key.second == y)
          m += mu.weight(key.first) * std::exp(sigma);
      z[idx] = std::log(m) + 1.0;
    }
  z[lay.t] = 0.0;
  double need = -kInfinity;
  for (std::size_t c = active.size(); c < prog.constraints.size(); ++c)
  {
    const auto& con = prog.constraints[c];
    // Every norm constraint is linear in t with coefficient −1 or −p'.
    double coeff = 0.0;
    for (const auto& [i, a] : con.rows.front().entries)
      if (i == lay.t)
        coeff = -a;
    if (coeff > 0.0)
      need = std::max(need, detail::constraint_value(con, z) / coeff);
  }
  z[lay.t] = need + 1.0;

  const auto res = detail::solve_barrier(prog, z, 1e-11);

  KernelFactorisation out;
  out.newton_steps = res.newton_steps;
  for (std::size_t j = 0; j < d; ++j)
  {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(G.size()),
                                              static_cast<Eigen::Index>(kernel.inputs[j]->size()));
    for (const auto& [key, idx] : lay.s[j])
      S(static_cast<Eigen::Index>(key.first), static_cast<Eigen::Index>(key.second)) = std::exp(res.z[idx]);
    out.S.push_back(std::move(S));
  }
  // The witness is strictly feasible, so its own marginal norm is an attained constant.
  const KernelCheck check = check_kernel_factorisation(kernel, G, out.S, 0.0, 0.0);
  for (double m : check.marginal_norms)
    out.A = std::max(out.A, m);
  out.suboptimality = out.A * -std::expm1(-res.gap_bound);
  return out;
}

KernelCheck check_kernel_factorisation(const GeneralKernel& kernel, const RealFunction& G_in,
                                       const std::vector<Eigen::MatrixXd>& S, double A, double tol)
{
  KernelCheck out;
  const std::size_t d = kernel.arity();
  if (S.size() != d || !same_space(G_in.space(), kernel.target))
    return out;
  const double rd = kothe_dual_exponent(kernel.output_exponent);
  const RealFunction G = G_in.scaled(1.0 / lp_norm(G_in, rd));
  const std::size_t nt = kernel.tuples();
  const TupleTable tab = tuple_table(kernel);
  for (std::size_t x = 0; x < G.size(); ++x)
  {
    if (!(G[x] > 0.0))
      continue;
    for (std::size_t t = 0; t < nt; ++t)
    {
      const double k = kernel.values[x * nt + t];
      if (!(k > 0.0))
        continue;
      const double need = std::pow(k, 1.0 / static_cast<double>(d)) * G[x];
      double have = 1.0;
      for (std::size_t j = 0; j < d; ++j)
        have *= std::pow(S[j](static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(tab.ys[t][j])),
                         1.0 / static_cast<double>(d));
      out.pointwise_max_violation = std::max(out.pointwise_max_violation, (need - have) / need);
    }
  }
  bool ok = out.pointwise_max_violation <= tol;
  const Eigen::VectorXd& mu = kernel.target->weights();
  for (std::size_t j = 0; j < d; ++j)
  {
    const Eigen::VectorXd marginal = S[j].transpose() * mu;
    const double m = lp_norm(*kernel.inputs[j], marginal, kothe_dual_exponent(kernel.input_exponents[j]));
    out.marginal_norms.push_back(m);
    ok = ok && m <= A * (1.0 + tol);
  }
  out.pass = ok;
  return out;
}

GeneralKernel two_point_kernel()
{
  const SpacePtr X = make_space({"1", "2"}, Eigen::VectorXd::Ones(2));
  const SpacePtr Y1 = make_space({"1", "2"}, Eigen::VectorXd::Ones(2));
  const SpacePtr Y2 = make_space({"1", "2"}, Eigen::VectorXd::Ones(2));
  GeneralKernel K(X, {Y1, Y2}, std::vector<double>(8, 0.0), {2.0, 2.0}, 4.0);
  K.values[K.index(0, {0, 0})] = 1.0;
  K.values[K.index(1, {0, 0})] = 1.0;
  K.values[K.index(1, {1, 1})] = 1.0;
  return K;
}

GapDemo gap_demo(const SolverOptions& opts)
{
  const GeneralKernel K = two_point_kernel();
  const RealFunction G(K.target, Eigen::Vector2d(0.0, 1.0));
  GapDemo demo{0.0, 0.0, 0.0, G, kernel_best_constant(K, opts), kernel_factorisation_constant(K, G)};
  demo.inequality_constant = demo.inequality.value;
  demo.brute_force_constant = brute_force_constant(K, 1000);
  demo.factorisation_constant = demo.factorisation.A;
  return demo;
}

} // namespace geofactor
