#include "geofactor/brascamp_lieb.hpp"

#include "geofactor/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace geofactor {

namespace {

// The cpp_int string constructor reads a leading 0 as octal and 0x as hex.
boost::multiprecision::cpp_int parse_integer(std::string s, const std::string& text)
{
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+'))
  {
    negative = s[0] == '-';
    s.erase(0, 1);
  }
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidArgument("malformed rational '" + text + "'");
  const auto first = s.find_first_not_of('0');
  const boost::multiprecision::cpp_int v(first == std::string::npos ? std::string("0") : s.substr(first));
  return negative ? boost::multiprecision::cpp_int(-v) : v;
}

} // namespace

Rational parse_rational(const std::string& text)
{
  std::string s = text;
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  if (s.empty())
    throw InvalidArgument("empty rational literal");
  const auto slash = s.find('/');
  if (slash != std::string::npos)
  {
    const auto num = parse_integer(s.substr(0, slash), text);
    const auto den = parse_integer(s.substr(slash + 1), text);
    if (den == 0)
      throw InvalidArgument("zero denominator in '" + text + "'");
    return Rational(num, den);
  }
  const auto dot = s.find('.');
  if (dot == std::string::npos)
    return Rational(parse_integer(s, text));
  std::string whole = s.substr(0, dot);
  const std::string frac = s.substr(dot + 1);
  if (frac.empty() || frac.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidArgument("malformed decimal '" + text + "'");
  const bool negative = !whole.empty() && whole[0] == '-';
  if (!whole.empty() && (whole[0] == '-' || whole[0] == '+'))
    whole.erase(0, 1);
  boost::multiprecision::cpp_int scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i)
    scale *= 10;
  const Rational r(parse_integer(whole + frac, text), scale);
  return negative ? Rational(-r) : r;
}

std::string to_string(const Rational& r)
{
  return r.str();
}

namespace {

/// Nonzero rows of the reduced row echelon form.
RationalMatrix rref(RationalMatrix a, std::size_t cols)
{
  std::size_t row = 0;
  for (std::size_t c = 0; c < cols && row < a.size(); ++c)
  {
    std::size_t pivot = row;
    while (pivot < a.size() && a[pivot][c] == 0)
      ++pivot;
    if (pivot == a.size())
      continue;
    std::swap(a[row], a[pivot]);
    const Rational lead = a[row][c];
    for (auto& v : a[row])
      v /= lead;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
      if (i == row || a[i][c] == 0)
        continue;
      const Rational f = a[i][c];
      for (std::size_t k = 0; k < cols; ++k)
        a[i][k] -= f * a[row][k];
    }
    ++row;
  }
  a.resize(row);
  return a;
}

void require_width(const RationalMatrix& m, std::size_t n)
{
  for (const auto& r : m)
    if (r.size() != n)
      throw InvalidArgument("matrix rows must have length " + std::to_string(n));
}

} // namespace

std::size_t rank(RationalMatrix m)
{
  const std::size_t cols = m.empty() ? 0 : m.front().size();
  return rref(std::move(m), cols).size();
}

Subspace Subspace::span(std::size_t n, RationalMatrix vectors)
{
  require_width(vectors, n);
  return Subspace(n, rref(std::move(vectors), n));
}

Subspace Subspace::zero(std::size_t n)
{
  return Subspace(n, {});
}

Subspace Subspace::whole(std::size_t n)
{
  RationalMatrix id(n, std::vector<Rational>(n, Rational(0)));
  for (std::size_t i = 0; i < n; ++i)
    id[i][i] = 1;
  return Subspace(n, std::move(id));
}

Subspace Subspace::kernel(const RationalMatrix& B, std::size_t n)
{
  require_width(B, n);
  const RationalMatrix R = rref(B, n);
  std::vector<std::size_t> pivots;
  std::vector<bool> is_pivot(n, false);
  for (const auto& row : R)
    for (std::size_t c = 0; c < n; ++c)
      if (row[c] != 0)
      {
        pivots.push_back(c);
        is_pivot[c] = true;
        break;
      }
  RationalMatrix basis;
  for (std::size_t f = 0; f < n; ++f)
  {
    if (is_pivot[f])
      continue;
    std::vector<Rational> v(n, Rational(0));
    v[f] = 1;
    for (std::size_t i = 0; i < R.size(); ++i)
      v[pivots[i]] = -R[i][f];
    basis.push_back(std::move(v));
  }
  return span(n, std::move(basis));
}

Subspace Subspace::operator+(const Subspace& other) const
{
  RationalMatrix all = basis_;
  all.insert(all.end(), other.basis_.begin(), other.basis_.end());
  return span(n_, std::move(all));
}

Subspace Subspace::annihilator() const
{
  if (basis_.empty())
    return whole(n_);
  return kernel(basis_, n_);
}

Subspace Subspace::intersect(const Subspace& other) const
{
  return (annihilator() + other.annihilator()).annihilator();
}

bool Subspace::operator<(const Subspace& other) const
{
  if (n_ != other.n_)
    return n_ < other.n_;
  if (dim() != other.dim())
    return dim() < other.dim();
  return basis_ < other.basis_;
}

std::size_t image_dim(const RationalMatrix& B, const Subspace& V)
{
  RationalMatrix images;
  for (const auto& v : V.basis())
  {
    std::vector<Rational> w(B.size(), Rational(0));
    for (std::size_t i = 0; i < B.size(); ++i)
      for (std::size_t k = 0; k < v.size(); ++k)
        w[i] += B[i][k] * v[k];
    images.push_back(std::move(w));
  }
  return images.empty() ? 0 : rank(std::move(images));
}

BLDatum::BLDatum(std::size_t n_, std::vector<RationalMatrix> maps_, std::vector<Rational> exponents)
    : n(n_), maps(std::move(maps_)), p(std::move(exponents))
{
  if (n == 0)
    throw InvalidArgument("BL datum needs n >= 1");
  if (maps.empty() || maps.size() != p.size())
    throw InvalidArgument("BL datum needs one exponent per map");
  for (std::size_t j = 0; j < maps.size(); ++j)
  {
    if (maps[j].empty())
      throw InvalidArgument("BL map " + std::to_string(j) + " has no rows");
    require_width(maps[j], n);
    if (rank(maps[j]) != maps[j].size())
      throw InvalidArgument("BL map " + std::to_string(j) + " does not have full row rank");
    if (p[j] < 0 || p[j] > 1)
      throw InvalidArgument("BL exponents must lie in [0, 1]");
  }
}

bool BLDatum::scaling_holds() const
{
  Rational total = 0;
  for (std::size_t j = 0; j < maps.size(); ++j)
    total += p[j] * static_cast<long long>(target_dim(j));
  return total == static_cast<long long>(n);
}

namespace {

std::vector<Subspace> one_round(const std::set<Subspace>& lattice)
{
  std::vector<Subspace> fresh;
  const std::vector<Subspace> items(lattice.begin(), lattice.end());
  std::set<Subspace> seen;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t k = i + 1; k < items.size(); ++k)
      for (Subspace s : {items[i] + items[k], items[i].intersect(items[k])})
        if (!lattice.count(s) && seen.insert(s).second)
          fresh.push_back(std::move(s));
  return fresh;
}

} // namespace

BLPolytopeReport bl_polytope_check(const BLDatum& datum, int depth)
{
  if (depth < 1)
    throw InvalidArgument("lattice depth must be at least 1");
  const std::size_t n = datum.n;
  std::set<Subspace> lattice{Subspace::zero(n), Subspace::whole(n)};
  for (const auto& B : datum.maps)
    lattice.insert(Subspace::kernel(B, n));

  BLPolytopeReport report;
  for (int r = 0; r < depth; ++r)
  {
    const auto fresh = one_round(lattice);
    if (fresh.empty())
    {
      report.closed = true;
      break;
    }
    lattice.insert(fresh.begin(), fresh.end());
    report.rounds = r + 1;
  }
  if (!report.closed)
    report.closed = one_round(lattice).empty();

  report.scaling = datum.scaling_holds();
  bool inequalities = true;
  for (const auto& V : lattice)
  {
    Rational rhs = 0;
    for (std::size_t j = 0; j < datum.maps.size(); ++j)
      rhs += datum.p[j] * static_cast<long long>(image_dim(datum.maps[j], V));
    const Rational lhs = static_cast<long long>(V.dim());
    if (lhs > rhs)
    {
      if (inequalities)
        report.violating_subspace = V;
      inequalities = false;
    }
    else if (lhs == rhs && V.dim() > 0 && V.dim() < n)
      report.critical_subspaces.push_back(V);
  }
  report.member = report.scaling && inequalities;
  report.lattice.assign(lattice.begin(), lattice.end());
  report.lattice_size = report.lattice.size();
  return report;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t power(int m, std::size_t k)
{
  std::size_t r = 1;
  for (std::size_t i = 0; i < k; ++i)
    r *= static_cast<std::size_t>(m);
  return r;
}

std::vector<long long> digits(std::size_t index, int m, std::size_t k)
{
  std::vector<long long> x(k);
  for (std::size_t i = k; i-- > 0;)
  {
    x[i] = static_cast<long long>(index % static_cast<std::size_t>(m));
    index /= static_cast<std::size_t>(m);
  }
  return x;
}

SpacePtr group_space(int m, std::size_t k, const std::string& prefix)
{
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < power(m, k); ++i)
  {
    std::string s = prefix + "(";
    const auto x = digits(i, m, k);
    for (std::size_t c = 0; c < k; ++c)
      s += (c ? "," : "") + std::to_string(x[c]);
    labels.push_back(s + ")");
  }
  return make_space(std::move(labels), Eigen::VectorXd::Ones(static_cast<Eigen::Index>(labels.size())));
}

void require_shape(const IntMatrix& M, std::size_t rows, std::size_t cols, const std::string& what)
{
  if (M.size() != rows)
    throw InvalidArgument(what + " has " + std::to_string(M.size()) + " rows, expected " + std::to_string(rows));
  for (const auto& r : M)
    if (r.size() != cols)
      throw InvalidArgument(what + " rows must have length " + std::to_string(cols));
}

double total_exponent(const std::vector<double>& p)
{
  double s = 0.0;
  for (double v : p)
    s += v;
  return s;
}

std::vector<double> weights_of(const std::vector<double>& p)
{
  const double s = total_exponent(p);
  std::vector<double> a;
  for (double v : p)
    a.push_back(v / s);
  return a;
}

} // namespace

GeometricMeanProblem group_problem(int m, std::size_t k, const std::vector<IntMatrix>& maps,
                                   const std::vector<double>& alphas, double q)
{
  if (m < 2)
    throw InvalidArgument("group modulus must be at least 2");
  const SpacePtr X = group_space(m, k, "");
  std::vector<PositiveKernelOperator> ops;
  for (std::size_t j = 0; j < maps.size(); ++j)
  {
    const std::size_t a = maps[j].size();
    for (const auto& r : maps[j])
      if (r.size() != k)
        throw InvalidArgument("group map rows must have length " + std::to_string(k));
    const SpacePtr Y = group_space(m, a, "B" + std::to_string(j));
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(X->size()), static_cast<Eigen::Index>(Y->size()));
    for (std::size_t x = 0; x < X->size(); ++x)
    {
      const auto v = digits(x, m, k);
      std::size_t y = 0;
      for (std::size_t i = 0; i < a; ++i)
      {
        long long s = 0;
        for (std::size_t c = 0; c < k; ++c)
          s += maps[j][i][c] * v[c];
        s %= m;
        y = y * static_cast<std::size_t>(m) + static_cast<std::size_t>(s < 0 ? s + m : s);
      }
      kernel(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = 1.0;
    }
    ops.emplace_back(Y, X, std::move(kernel));
  }
  return GeometricMeanProblem(std::move(ops), alphas, std::vector<double>(maps.size(), 1.0), q);
}

void BlockModel::validate() const
{
  if (m < 2)
    throw InvalidArgument("block model modulus must be at least 2");
  if (p.empty() || tilde.size() != p.size() || gamma.size() != p.size() || quotient.size() != p.size())
    throw InvalidArgument("block model needs one (tilde, gamma, quotient, p) per map");
  for (std::size_t j = 0; j < p.size(); ++j)
  {
    if (!(p[j] > 0.0))
      throw InvalidArgument("block model exponents must be positive");
    require_shape(tilde[j], tilde[j].size(), k1, "tilde[" + std::to_string(j) + "]");
    require_shape(gamma[j], tilde[j].size(), k2, "gamma[" + std::to_string(j) + "]");
    require_shape(quotient[j], quotient[j].size(), k2, "quotient[" + std::to_string(j) + "]");
  }
  if (!(total_exponent(p) >= 1.0))
    throw InvalidArgument("block model needs sum p_j >= 1");
}

GeometricMeanProblem BlockModel::full_problem() const
{
  validate();
  std::vector<IntMatrix> maps;
  for (std::size_t j = 0; j < p.size(); ++j)
  {
    IntMatrix B;
    for (std::size_t i = 0; i < tilde[j].size(); ++i)
    {
      std::vector<long long> row = tilde[j][i];
      row.insert(row.end(), gamma[j][i].begin(), gamma[j][i].end());
      B.push_back(std::move(row));
    }
    for (const auto& qrow : quotient[j])
    {
      std::vector<long long> row(k1, 0);
      row.insert(row.end(), qrow.begin(), qrow.end());
      B.push_back(std::move(row));
    }
    maps.push_back(std::move(B));
  }
  return group_problem(m, k1 + k2, maps, weights_of(p), total_exponent(p));
}

GeometricMeanProblem BlockModel::u_problem() const
{
  validate();
  return group_problem(m, k1, tilde, weights_of(p), total_exponent(p));
}

GeometricMeanProblem BlockModel::quotient_problem() const
{
  validate();
  return group_problem(m, k2, quotient, weights_of(p), total_exponent(p));
}

BlockSplit split_target(const BlockModel& model, const RealFunction& G)
{
  model.validate();
  const std::size_t nx = power(model.m, model.k1);
  const std::size_t ny = power(model.m, model.k2);
  if (G.size() != nx * ny)
    throw SpaceMismatch("G must live on (Z_m)^{k1+k2}");
  const double pd = kothe_dual_exponent(total_exponent(model.p));
  const SpacePtr X1 = model.u_problem().target();
  const SpacePtr X2 = model.quotient_problem().target();
  Eigen::VectorXd M(static_cast<Eigen::Index>(ny));
  std::vector<std::optional<RealFunction>> H(ny);
  for (std::size_t y = 0; y < ny; ++y)
  {
    Eigen::VectorXd slice(static_cast<Eigen::Index>(nx));
    for (std::size_t x = 0; x < nx; ++x)
      slice[static_cast<Eigen::Index>(x)] = G[x * ny + y];
    const double norm = lp_norm(*X1, slice, pd);
    M[static_cast<Eigen::Index>(y)] = norm;
    if (norm > 0.0)
      H[y] = RealFunction(X1, slice / norm);
  }
  return BlockSplit{RealFunction(X2, std::move(M)), std::move(H)};
}

namespace {

bool close_to(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
  if (a.size() != b.size())
    return false;
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

} // namespace

BlockCombination bl_combine(const BlockModel& model, const RealFunction& G,
                            const std::vector<std::optional<FactorisationCertificate>>& slices,
                            const FactorisationCertificate& quotient)
{
  const BlockSplit split = split_target(model, G);
  const std::size_t nx = power(model.m, model.k1);
  const std::size_t ny = power(model.m, model.k2);
  const std::size_t d = model.arity();
  if (slices.size() != ny)
    throw InvalidArgument("need one slice certificate per point of the quotient group");
  if (quotient.gs.size() != d || !close_to(quotient.G.values(), split.M.values()))
    throw InvalidArgument("quotient certificate does not match M(y) = ||G(., y)||");

  BlockCombination out{FactorisationCertificate{G, {}, 0.0}, 0.0, quotient.K};
  for (std::size_t y = 0; y < ny; ++y)
  {
    if (!split.H[y])
      continue;
    if (!slices[y] || slices[y]->gs.size() != d || !close_to(slices[y]->G.values(), split.H[y]->values()))
      throw InvalidArgument("slice certificate " + std::to_string(y) + " does not match H_y");
    out.K1 = std::max(out.K1, slices[y]->K);
  }

  const GeometricMeanProblem full = model.full_problem();
  for (std::size_t j = 0; j < d; ++j)
  {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nx * ny));
    for (std::size_t y = 0; y < ny; ++y)
    {
      if (!split.H[y])
        continue;
      const auto& h = slices[y]->gs[j];
      if (h.size() != nx)
        throw InvalidArgument("slice factor has the wrong size");
      for (std::size_t x = 0; x < nx; ++x)
        g[static_cast<Eigen::Index>(x * ny + y)] = h[x] * quotient.gs[j][y];
    }
    out.certificate.gs.emplace_back(full.target(), std::move(g));
  }
  out.certificate.G = RealFunction(full.target(), G.values());
  double worst = 0.0;
  for (std::size_t j = 0; j < d; ++j)
    worst = std::max(worst, input_dual_norm(full, j, adjoint_apply(full.op(j), out.certificate.gs[j]).values()));
  out.certificate.K = worst / lp_norm(out.certificate.G, full.q_dual());
  return out;
}

BlockCombination bl_combine_solve(const BlockModel& model, const RealFunction& G, const SolverOptions& opts)
{
  const BlockSplit split = split_target(model, G);
  const GeometricMeanProblem U = model.u_problem();
  const GeometricMeanProblem W = model.quotient_problem();
  std::vector<std::optional<FactorisationCertificate>> slices(split.H.size());
  for (std::size_t y = 0; y < split.H.size(); ++y)
    if (split.H[y])
      slices[y] = factorise(U, *split.H[y], opts).certificate;
  const FactorisationCertificate quotient = factorise(W, split.M, opts).certificate;
  return bl_combine(model, G, slices, quotient);
}

} // namespace geofactor
