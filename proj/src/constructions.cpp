#include "geofactor/constructions.hpp"

#include "geofactor/certify.hpp"
#include "geofactor/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace geofactor {

std::vector<RealFunction> holder_factorise(const RealFunction& G, double q, const std::vector<double>& q_js,
                                           const std::vector<double>& alphas)
{
  if (q_js.size() != alphas.size() || q_js.empty())
    throw InvalidArgument("holder_factorise: need one exponent per weight");
  if (!(q >= 1.0) || !std::isfinite(q))
    throw InvalidArgument("holder_factorise: q must lie in [1, inf)");
  double relation = 0.0;
  for (std::size_t j = 0; j < q_js.size(); ++j)
  {
    if (!(q_js[j] >= 1.0) || !std::isfinite(q_js[j]))
      throw InvalidArgument("holder_factorise: q_j must lie in [1, inf)");
    relation += alphas[j] / q_js[j];
  }
  if (std::abs(relation - 1.0 / q) > 1e-12)
    throw InvalidArgument("holder_factorise: exponents violate sum alpha_j/q_j = 1/q");

  std::vector<RealFunction> gs;
  if (q == 1.0)
  {
    for (double qj : q_js)
      if (qj != 1.0)
        throw InvalidArgument("holder_factorise: q = 1 with unequal q_j has no power-law factorisation");
    for (std::size_t j = 0; j < q_js.size(); ++j)
      gs.push_back(G);
    return gs;
  }
  const double qd = kothe_dual_exponent(q);
  const double norm = lp_norm(G, qd);
  for (double qj : q_js)
  {
    if (qj == q)
    {
      gs.push_back(G);
      continue;
    }
    // q_j = 1 makes q_j' infinite and the factor constant.
    const double ratio = qj == 1.0 ? 0.0 : qd / kothe_dual_exponent(qj);
    Eigen::VectorXd g(static_cast<Eigen::Index>(G.size()));
    for (std::size_t x = 0; x < G.size(); ++x)
      g[static_cast<Eigen::Index>(x)] = std::pow(norm, 1.0 - ratio) * std::pow(G[x], ratio);
    gs.emplace_back(G.space(), std::move(g));
  }
  return gs;
}

PositiveKernelOperator identity_operator(const SpacePtr& space)
{
  Eigen::MatrixXd k = space->weights().cwiseInverse().asDiagonal();
  return PositiveKernelOperator(space, space, std::move(k));
}

GeometricMeanProblem holder_problem(const SpacePtr& space, const std::vector<double>& alphas,
                                    const std::vector<double>& q_js, double q)
{
  std::vector<PositiveKernelOperator> ops(alphas.size(), identity_operator(space));
  return GeometricMeanProblem(std::move(ops), alphas, q_js, q);
}

// ---------------------------------------------------------------------------

namespace {

int mod(long long a, int m)
{
  const long long r = a % m;
  return static_cast<int>(r < 0 ? r + m : r);
}

/// Exact integer determinant by fraction-free (Bareiss) elimination.
boost::multiprecision::cpp_int determinant(std::vector<std::vector<boost::multiprecision::cpp_int>> a)
{
  const std::size_t n = a.size();
  boost::multiprecision::cpp_int sign = 1;
  boost::multiprecision::cpp_int prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k)
  {
    if (a[k][k] == 0)
    {
      std::size_t r = k + 1;
      while (r < n && a[r][k] == 0)
        ++r;
      if (r == n)
        return 0;
      std::swap(a[k], a[r]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j)
        a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

} // namespace

LWGrid LWGrid::coordinate(int m, int n)
{
  LWGrid g{m, n, {}};
  for (int j = 0; j < n; ++j)
  {
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(j)] = 1;
    g.directions.push_back(std::move(e));
  }
  return g;
}

bool LWGrid::invertible() const
{
  if (m < 2 || n < 1 || directions.size() != static_cast<std::size_t>(n))
    return false;
  std::vector<std::vector<boost::multiprecision::cpp_int>> a;
  for (const auto& w : directions)
  {
    if (w.size() != static_cast<std::size_t>(n))
      return false;
    std::vector<boost::multiprecision::cpp_int> row;
    for (int v : w)
      row.emplace_back(mod(v, m));
    a.push_back(std::move(row));
  }
  const boost::multiprecision::cpp_int det = determinant(std::move(a)) % m;
  return std::gcd(static_cast<long long>(mod(static_cast<long long>(det), m)), static_cast<long long>(m)) == 1;
}

std::size_t LWGrid::points() const
{
  std::size_t p = 1;
  for (int i = 0; i < n; ++i)
    p *= static_cast<std::size_t>(m);
  return p;
}

std::vector<int> LWGrid::point(std::size_t index) const
{
  std::vector<int> x(static_cast<std::size_t>(n));
  for (int i = n; i-- > 0;)
  {
    x[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::size_t>(m));
    index /= static_cast<std::size_t>(m);
  }
  return x;
}

std::size_t LWGrid::index(const std::vector<int>& x) const
{
  std::size_t i = 0;
  for (int v : x)
    i = i * static_cast<std::size_t>(m) + static_cast<std::size_t>(mod(v, m));
  return i;
}

std::size_t LWGrid::shift(std::size_t idx, std::size_t j, int t) const
{
  auto x = point(idx);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = mod(static_cast<long long>(x[i]) + static_cast<long long>(t) * directions[j][i], m);
  return index(x);
}

std::size_t LWGrid::line_of(std::size_t idx, std::size_t j) const
{
  std::size_t least = idx;
  for (int t = 1; t < m; ++t)
    least = std::min(least, shift(idx, j, t));
  return least;
}

SpacePtr lw_space(const LWGrid& grid)
{
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < grid.points(); ++i)
  {
    std::string s = "(";
    const auto x = grid.point(i);
    for (std::size_t k = 0; k < x.size(); ++k)
      s += (k ? "," : "") + std::to_string(x[k]);
    labels.push_back(s + ")");
  }
  return make_space(std::move(labels), Eigen::VectorXd::Ones(static_cast<Eigen::Index>(grid.points())));
}

namespace {

void require_grid(const LWGrid& grid)
{
  if (!grid.invertible())
    throw InvalidArgument("direction matrix is not invertible mod m");
}

} // namespace

std::vector<RealFunction> lw_telescoping(const RealFunction& M, const LWGrid& grid)
{
  require_grid(grid);
  if (M.size() != grid.points())
    throw SpaceMismatch("M must live on (Z_m)^n");
  const double n = grid.n;
  const double norm = lp_norm(M, n);
  if (!(norm > 0.0))
    throw InvalidArgument("M must not vanish identically");

  std::vector<Eigen::VectorXd> N;
  N.push_back((M.values() / norm).array().pow(n).matrix());
  for (std::size_t j = 0; j < grid.directions.size(); ++j)
  {
    Eigen::VectorXd next(N.back().size());
    for (std::size_t x = 0; x < grid.points(); ++x)
    {
      double s = 0.0;
      for (int t = 0; t < grid.m; ++t)
        s += N.back()[static_cast<Eigen::Index>(grid.shift(x, j, t))];
      next[static_cast<Eigen::Index>(x)] = s;
    }
    N.push_back(std::move(next));
  }

  std::vector<RealFunction> S;
  for (std::size_t j = 1; j < N.size(); ++j)
  {
    Eigen::VectorXd s(N[j].size());
    for (Eigen::Index x = 0; x < s.size(); ++x)
      s[x] = N[j][x] > 0.0 ? N[j - 1][x] / N[j][x] : 1.0 / grid.m;
    S.emplace_back(M.space(), std::move(s));
  }
  return S;
}

GeometricMeanProblem lw_problem(const LWGrid& grid)
{
  require_grid(grid);
  const SpacePtr X = lw_space(grid);
  std::vector<PositiveKernelOperator> ops;
  for (std::size_t j = 0; j < grid.directions.size(); ++j)
  {
    std::map<std::size_t, std::size_t> lines;
    for (std::size_t x = 0; x < grid.points(); ++x)
      lines.try_emplace(grid.line_of(x, j), 0);
    std::vector<std::string> labels;
    std::size_t k = 0;
    for (auto& [least, id] : lines)
    {
      id = k++;
      labels.push_back("L" + std::to_string(j) + X->labels()[least]);
    }
    const SpacePtr Y = make_space(std::move(labels), Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k)));
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.points()), static_cast<Eigen::Index>(k));
    for (std::size_t x = 0; x < grid.points(); ++x)
      kernel(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(lines.at(grid.line_of(x, j)))) = 1.0;
    ops.emplace_back(Y, X, std::move(kernel));
  }
  const double n = grid.n;
  return GeometricMeanProblem(std::move(ops), std::vector<double>(grid.directions.size(), 1.0 / n),
                              std::vector<double>(grid.directions.size(), 1.0), n / (n - 1.0));
}

FactorisationCertificate lw_certificate(const RealFunction& M, const LWGrid& grid)
{
  const auto S = lw_telescoping(M, grid);
  const double norm = lp_norm(M, grid.n);
  const GeometricMeanProblem problem = lw_problem(grid);
  const RealFunction G(problem.target(), M.values());
  std::vector<RealFunction> gs;
  for (const auto& s : S)
    gs.emplace_back(problem.target(), s.values() * norm);
  return FactorisationCertificate{G, std::move(gs), 1.0};
}

double lw_affine_constant(const std::vector<std::vector<double>>& directions)
{
  const auto n = static_cast<Eigen::Index>(directions.size());
  if (n < 2)
    throw InvalidArgument("affine Loomis-Whitney constant needs n >= 2");
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    if (static_cast<Eigen::Index>(directions[static_cast<std::size_t>(i)].size()) != n)
      throw InvalidArgument("direction vectors must have length n");
    for (Eigen::Index k = 0; k < n; ++k)
      w(i, k) = directions[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  const double wedge = std::abs(w.determinant());
  if (!(wedge > 0.0))
    throw InvalidArgument("directions are linearly dependent");
  return std::pow(wedge, -1.0 / static_cast<double>(n - 1));
}

// ---------------------------------------------------------------------------

double endpoint_output_exponent(double q, const std::vector<double>& p)
{
  double inv = 0.0;
  for (double pj : p)
  {
    if (!(pj >= 1.0) || !std::isfinite(pj))
      throw InvalidArgument("endpoint input exponents must lie in [1, inf)");
    inv += 1.0 / pj;
  }
  return q * inv;
}

InterpolationSchedule::InterpolationSchedule(double q0_, double q1_, std::vector<double> p0_,
                                             std::vector<double> p1_, double theta_)
    : q0(q0_), q1(q1_), p0(std::move(p0_)), p1(std::move(p1_)), theta(theta_)
{
  if (p0.empty() || p0.size() != p1.size())
    throw InvalidArgument("interpolation: endpoint exponent lists must be nonempty and of equal length");
  if (!(theta >= 0.0 && theta <= 1.0))
    throw InvalidArgument("interpolation: theta must lie in [0, 1]");
  if (!(q0 > 0.0) || !(q1 > 0.0) || !std::isfinite(q0) || !std::isfinite(q1))
    throw InvalidArgument("interpolation: q_0, q_1 must be positive and finite");
  s0 = endpoint_output_exponent(q0, p0);
  s1 = endpoint_output_exponent(q1, p1);
  if (!(s0 > 1.0) || !(s1 > 1.0))
    throw InvalidArgument("interpolation: endpoints need s_k = q_k sum_j 1/p_jk > 1");
  const double sd0 = s0 / (s0 - 1.0);
  const double sd1 = s1 / (s1 - 1.0);
  const double c0 = q0 * sd0 / s0;
  const double c1 = q1 * sd1 / s1;
  lambda = 1.0 / ((1.0 - theta) * sd0 + theta * sd1);
  const double mix = c0 * (1.0 - theta) + c1 * theta;
  Q_over_S = lambda * mix;
  alpha = c1 * theta / mix;
  Q = 1.0 / ((1.0 - alpha) / q0 + alpha / q1);
  S = 1.0 / (1.0 - lambda);
  for (std::size_t j = 0; j < p0.size(); ++j)
  {
    gamma.push_back(c0 / p0[j] * (1.0 - theta) + c1 / p1[j] * theta);
    beta.push_back(lambda * gamma.back());
    P.push_back(Q_over_S / beta.back());
  }
}

GeometricMeanProblem endpoint_problem(const std::vector<PositiveKernelOperator>& ops, double q,
                                      const std::vector<double>& p)
{
  const double s = endpoint_output_exponent(q, p);
  std::vector<double> alphas;
  for (double pj : p)
    alphas.push_back(q / (pj * s));
  return GeometricMeanProblem(ops, std::move(alphas), std::vector<double>(ops.size(), 1.0), s);
}

GeometricMeanProblem interpolated_problem(const std::vector<PositiveKernelOperator>& ops,
                                          const InterpolationSchedule& schedule)
{
  return GeometricMeanProblem(ops, schedule.beta, std::vector<double>(ops.size(), 1.0), schedule.S);
}

RealFunction endpoint_target(const RealFunction& G, double s)
{
  const double mass = lp_norm(G, 1.0);
  if (!(mass > 0.0))
    throw InvalidArgument("endpoint_target: G must not vanish identically");
  const double sd = s / (s - 1.0);
  return RealFunction(G.space(), (G.values() / mass).array().pow(1.0 / sd).matrix());
}

InterpolatedCertificate interpolation_combine(const std::vector<PositiveKernelOperator>& ops,
                                              const FactorisationCertificate& cert0,
                                              const FactorisationCertificate& cert1,
                                              const InterpolationSchedule& schedule)
{
  if (ops.size() != schedule.arity())
    throw InvalidArgument("interpolation: schedule and operator counts differ");
  const GeometricMeanProblem P0 = endpoint_problem(ops, schedule.q0, schedule.p0);
  const GeometricMeanProblem P1 = endpoint_problem(ops, schedule.q1, schedule.p1);
  const CertReport r0 = check_factorisation(P0, cert0);
  const CertReport r1 = check_factorisation(P1, cert1);
  if (!r0.pass || !r1.pass)
    throw InvalidArgument("interpolation: endpoint certificate does not verify");

  const double sd0 = schedule.s0 / (schedule.s0 - 1.0);
  const double sd1 = schedule.s1 / (schedule.s1 - 1.0);
  const Eigen::VectorXd G = cert0.G.values().array().pow(sd0).matrix();
  const Eigen::VectorXd G1 = cert1.G.values().array().pow(sd1).matrix();
  if ((G - G1).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, G.cwiseAbs().maxCoeff()))
    throw InvalidArgument("interpolation: endpoint targets are not powers of one common G");

  const GeometricMeanProblem Pt = interpolated_problem(ops, schedule);
  const double theta = schedule.theta;
  const double c0 = schedule.q0 * sd0 / schedule.s0;
  const double c1 = schedule.q1 * sd1 / schedule.s1;
  std::vector<RealFunction> gs;
  for (std::size_t j = 0; j < ops.size(); ++j)
  {
    const double a = c0 / schedule.p0[j] * (1.0 - theta) / schedule.gamma[j];
    const double b = c1 / schedule.p1[j] * theta / schedule.gamma[j];
    Eigen::VectorXd m(cert0.gs[j].values().size());
    for (Eigen::Index x = 0; x < m.size(); ++x)
      m[x] = std::pow(cert0.gs[j].values()[x], a) * std::pow(cert1.gs[j].values()[x], b);
    gs.emplace_back(Pt.target(), std::move(m));
  }
  const RealFunction Gt(Pt.target(), G.array().pow(schedule.lambda).matrix());

  InterpolatedCertificate out{equalise(Pt, FactorisationCertificate{Gt, std::move(gs), 0.0}), 0.0, 0.0};
  out.constant = std::pow(out.certificate.K, 1.0 / schedule.Q_over_S);
  const double A0 = std::pow(cert0.K, schedule.s0 / schedule.q0);
  const double A1 = std::pow(cert1.K, schedule.s1 / schedule.q1);
  out.bound = std::pow(A0, 1.0 - schedule.alpha) * std::pow(A1, schedule.alpha);
  return out;
}

} // namespace geofactor
