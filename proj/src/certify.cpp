#include "geofactor/certify.hpp"

#include "geofactor/error.hpp"
#include "geofactor/kernel.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace geofactor {

namespace {

constexpr double kEps = 1e-300;

std::string fit_error(const GeometricMeanProblem& problem, const FactorisationCertificate& cert)
{
  if (!same_space(cert.G.space(), problem.target()))
    return "G does not live on the problem's codomain";
  if (cert.gs.size() != problem.arity())
    return "certificate has " + std::to_string(cert.gs.size()) + " factors, problem has " +
           std::to_string(problem.arity()) + " operators";
  for (const auto& g : cert.gs)
    if (!same_space(g.space(), problem.target()))
      return "a factor g_j does not live on the problem's codomain";
  if (!(cert.K >= 0.0) || !std::isfinite(cert.K))
    return "constant K is not a finite nonnegative number";
  return {};
}

} // namespace

CertReport check_factorisation(const GeometricMeanProblem& problem, const FactorisationCertificate& cert,
                               std::optional<double> tol)
{
  CertReport report;
  report.structural_error = fit_error(problem, cert);
  if (!report.structural_error.empty())
    return report;
  const double t = tol.value_or(cert.tolerance);
  try
  {
    const RealFunction product = geometric_mean(cert.gs, problem.alphas());
    for (std::size_t x = 0; x < cert.G.size(); ++x)
    {
      const double G = cert.G[x];
      if (G > 0.0)
        report.pointwise_max_violation =
            std::max(report.pointwise_max_violation, (G - product[x]) / std::max(G, kEps));
    }

    const double bound = cert.K * lp_norm(cert.G, problem.q_dual());
    double log_product = 0.0;
    bool any_zero = false;
    bool ok = report.pointwise_max_violation <= t;
    for (std::size_t j = 0; j < problem.arity(); ++j)
    {
      const double m = lp_norm(*problem.op(j).domain(), adjoint_apply(problem.op(j), cert.gs[j]).values(),
                               kothe_dual_exponent(problem.p(j)));
      const double slack = bound > 0.0 ? m / bound - 1.0 : (m > 0.0 ? kInfinity : 0.0);
      report.per_j_dual_norm_slack.push_back(slack);
      ok = ok && slack <= t;
      if (m > 0.0)
        log_product += problem.alpha(j) * std::log(m);
      else
        any_zero = true;
    }
    if (any_zero)
      report.product_form_slack = bound > 0.0 ? -1.0 : 0.0;
    else
      report.product_form_slack = bound > 0.0 ? std::exp(log_product) / bound - 1.0 : kInfinity;
    report.pass = ok;
  }
  catch (const std::exception& e)
  {
    report.structural_error = e.what();
    report.pass = false;
  }
  return report;
}

bool easy_half_check(const GeometricMeanProblem& problem, double K, int n_samples, std::uint64_t seed,
                     const std::vector<std::vector<Eigen::VectorXd>>& extra_witnesses, double tol)
{
  for (const auto& fs : extra_witnesses)
    if (inequality_ratio(problem, fs) > K * (1.0 + tol))
      return false;
  auto rng = detail::substream(seed, 0);
  for (int s = 0; s < n_samples; ++s)
  {
    std::vector<Eigen::VectorXd> fs;
    for (std::size_t j = 0; j < problem.arity(); ++j)
    {
      Eigen::VectorXd f(static_cast<Eigen::Index>(problem.op(j).domain()->size()));
      for (Eigen::Index y = 0; y < f.size(); ++y)
        f[y] = detail::exponential(rng);
      fs.push_back(f / input_norm(problem, j, f));
    }
    if (inequality_ratio(problem, fs) > K * (1.0 + tol))
      return false;
  }
  return true;
}

double duality_gap(double K, double eta)
{
  return (K - eta) / std::max(eta, kEps);
}

namespace {

/// Binomial coefficient as a double (only compared against the budget).
double choose(double n, double k)
{
  double c = 1.0;
  for (int i = 1; i <= static_cast<int>(k); ++i)
    c = c * (n - k + i) / i;
  return c;
}

/// All compositions of `resolution` into `parts` nonnegative parts.
std::vector<Eigen::VectorXd> simplex_mesh(std::size_t parts, int resolution)
{
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd cur = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parts));
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == parts)
    {
      cur[static_cast<Eigen::Index>(i)] = left;
      out.push_back(cur / resolution);
      return;
    }
    for (int k = left; k >= 0; --k)
    {
      cur[static_cast<Eigen::Index>(i)] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, resolution);
  return out;
}

std::vector<std::vector<Eigen::VectorXd>> meshes(const std::vector<std::size_t>& sizes, int resolution)
{
  if (resolution < 1)
    throw InvalidArgument("mesh resolution must be at least 1");
  double total = 1.0;
  for (std::size_t n : sizes)
    total *= choose(static_cast<double>(n) - 1.0 + resolution, static_cast<double>(n) - 1.0);
  if (total > kBruteForceBudget)
    throw BudgetExceeded("simplex mesh would visit " + std::to_string(total) + " points (budget 1e7)");
  std::vector<std::vector<Eigen::VectorXd>> out;
  for (std::size_t n : sizes)
    out.push_back(simplex_mesh(n, resolution));
  return out;
}

/// Visits every element of the product of the meshes, reusing one buffer.
template <class Fn>
void for_each_product(const std::vector<std::vector<Eigen::VectorXd>>& mesh, Fn&& fn)
{
  std::vector<std::size_t> idx(mesh.size(), 0);
  std::vector<Eigen::VectorXd> fs;
  for (const auto& m : mesh)
    fs.push_back(m.front());
  while (true)
  {
    fn(fs);
    std::size_t j = mesh.size();
    while (j > 0)
    {
      --j;
      if (++idx[j] < mesh[j].size())
      {
        fs[j] = mesh[j][idx[j]];
        break;
      }
      idx[j] = 0;
      fs[j] = mesh[j][0];
      if (j == 0)
        return;
    }
  }
}

} // namespace

double brute_force_constant(const GeometricMeanProblem& problem, int resolution)
{
  std::vector<std::size_t> sizes;
  for (const auto& op : problem.operators())
    sizes.push_back(op.domain()->size());
  const auto mesh = meshes(sizes, resolution);
  double best = 0.0;
  for_each_product(mesh, [&](const std::vector<Eigen::VectorXd>& fs) {
    best = std::max(best, inequality_ratio(problem, fs));
  });
  return best;
}

double brute_force_constant(const GeneralKernel& kernel, int resolution)
{
  std::vector<std::size_t> sizes;
  for (const auto& y : kernel.inputs)
    sizes.push_back(y->size());
  const auto mesh = meshes(sizes, resolution);
  double best = 0.0;
  for_each_product(mesh, [&](const std::vector<Eigen::VectorXd>& fs) {
    best = std::max(best, kernel_ratio(kernel, fs));
  });
  return best;
}

} // namespace geofactor
