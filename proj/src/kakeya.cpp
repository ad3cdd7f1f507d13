#include "geofactor/kakeya.hpp"

#include "geofactor/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

namespace geofactor {

using boost::multiprecision::cpp_int;

namespace {

int reduce(long long v, int q)
{
  const long long r = v % q;
  return static_cast<int>(r < 0 ? r + q : r);
}

int inverse_mod(int a, int q)
{
  // Fermat: a^{q-2} mod q for prime q.
  long long result = 1;
  long long base = a;
  for (int e = q - 2; e > 0; e >>= 1)
  {
    if (e & 1)
      result = result * base % q;
    base = base * base % q;
  }
  return static_cast<int>(result);
}

std::string vector_label(const FieldVector& v)
{
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + std::to_string(v[i]);
  return s + ")";
}

std::size_t point_count(int q, std::size_t n)
{
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i)
  {
    total *= static_cast<std::size_t>(q);
    if (static_cast<double>(total) > kKakeyaBudget)
      throw BudgetExceeded("F_q^n has more than 1e7 points");
  }
  return total;
}

std::size_t point_index(const FieldVector& x, int q)
{
  std::size_t idx = 0;
  for (int v : x)
    idx = idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(v);
  return idx;
}

FieldVector point_at(std::size_t idx, int q, std::size_t n)
{
  FieldVector x(n);
  for (std::size_t i = n; i-- > 0;)
  {
    x[i] = static_cast<int>(idx % static_cast<std::size_t>(q));
    idx /= static_cast<std::size_t>(q);
  }
  return x;
}

} // namespace

bool is_prime(int q)
{
  if (q < 2)
    return false;
  for (int d = 2; d * d <= q; ++d)
    if (q % d == 0)
      return false;
  return true;
}

KakeyaLine::KakeyaLine(int q, FieldVector base, FieldVector direction) : q_(q)
{
  if (!is_prime(q))
    throw InvalidArgument("Kakeya lines need a prime field size, got " + std::to_string(q));
  if (base.empty() || base.size() != direction.size())
    throw InvalidArgument("line base and direction must have the same positive length");
  for (auto& v : base)
    v = reduce(v, q);
  for (auto& v : direction)
    v = reduce(v, q);
  const auto lead = std::find_if(direction.begin(), direction.end(), [](int v) { return v != 0; });
  if (lead == direction.end())
    throw InvalidArgument("line direction must be nonzero");
  const int inv = inverse_mod(*lead, q);
  for (auto& v : direction)
    v = static_cast<int>(static_cast<long long>(v) * inv % q);
  dir_ = std::move(direction);
  base_ = base;
  for (int t = 1; t < q; ++t)
  {
    FieldVector p(base.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = reduce(base[i] + static_cast<long long>(t) * dir_[i], q);
    base_ = std::min(base_, p);
  }
}

std::vector<FieldVector> KakeyaLine::points() const
{
  std::vector<FieldVector> out;
  for (int t = 0; t < q_; ++t)
  {
    FieldVector p(base_.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = reduce(base_[i] + static_cast<long long>(t) * dir_[i], q_);
    out.push_back(std::move(p));
  }
  return out;
}

bool KakeyaLine::contains(const FieldVector& x) const
{
  if (x.size() != base_.size())
    return false;
  for (const auto& p : points())
  {
    bool same = true;
    for (std::size_t i = 0; i < p.size() && same; ++i)
      same = p[i] == reduce(x[i], q_);
    if (same)
      return true;
  }
  return false;
}

std::string KakeyaLine::label() const
{
  return vector_label(base_) + "+t" + vector_label(dir_);
}

bool KakeyaLine::operator<(const KakeyaLine& o) const
{
  if (q_ != o.q_)
    return q_ < o.q_;
  if (dir_ != o.dir_)
    return dir_ < o.dir_;
  return base_ < o.base_;
}

void KakeyaFamily::validate() const
{
  if (!is_prime(q))
    throw InvalidArgument("Kakeya families need a prime field size, got " + std::to_string(q));
  if (n < 2)
    throw InvalidArgument("Kakeya families need n >= 2");
  if (families.size() != n)
    throw InvalidArgument("expected " + std::to_string(n) + " families, got " + std::to_string(families.size()));
  for (std::size_t j = 0; j < n; ++j)
  {
    std::set<KakeyaLine> seen;
    for (const auto& wl : families[j])
    {
      if (wl.line.field() != q || wl.line.dim() != n)
        throw InvalidArgument("family " + std::to_string(j) + " has a line outside F_q^n");
      if (!(wl.a >= 0.0) || !std::isfinite(wl.a))
        throw InvalidArgument("line weights must be finite and nonnegative");
      if (!seen.insert(wl.line).second)
        throw InvalidArgument("family " + std::to_string(j) + " repeats line " + wl.line.label());
    }
  }
}

std::size_t rank_mod(int q, std::vector<FieldVector> rows)
{
  if (!is_prime(q))
    throw InvalidArgument("rank_mod needs a prime modulus");
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  for (auto& r : rows)
    for (auto& v : r)
      v = reduce(v, q);
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows.size(); ++c)
  {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][c] == 0)
      ++pivot;
    if (pivot == rows.size())
      continue;
    std::swap(rows[rank], rows[pivot]);
    const int inv = inverse_mod(rows[rank][c], q);
    for (auto& v : rows[rank])
      v = static_cast<int>(static_cast<long long>(v) * inv % q);
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
      if (i == rank || rows[i][c] == 0)
        continue;
      const long long f = rows[i][c];
      for (std::size_t k = 0; k < cols; ++k)
        rows[i][k] = reduce(rows[i][k] - f * rows[rank][k], q);
    }
    ++rank;
  }
  return rank;
}

int wedge_indicator(int q, const std::vector<FieldVector>& directions)
{
  for (const auto& d : directions)
    if (std::all_of(d.begin(), d.end(), [q](int v) { return reduce(v, q) == 0; }))
      throw InvalidArgument("wedge_indicator needs nonzero vectors");
  if (directions.empty() || directions.front().size() != directions.size())
    return 0;
  return rank_mod(q, directions) == directions.size() ? 1 : 0;
}

namespace {

bool integral_weights(const KakeyaFamily& family)
{
  for (const auto& fam : family.families)
    for (const auto& wl : fam)
      if (wl.a != std::floor(wl.a) || wl.a > 9.0e15)
        return false;
  return true;
}

/// v = p^e for a prime p, or nothing.
std::optional<std::pair<cpp_int, long long>> prime_power(cpp_int v)
{
  if (v < 2)
    return std::nullopt;
  for (cpp_int p = 2; p * p <= v; ++p)
  {
    if (v % p != 0)
      continue;
    long long e = 0;
    while (v % p == 0)
    {
      v /= p;
      ++e;
    }
    if (v != 1)
      return std::nullopt;
    return std::make_pair(p, e);
  }
  return std::make_pair(v, 1LL);
}

std::optional<cpp_int> integer_root(const cpp_int& v, long long k)
{
  const double guess = std::round(std::pow(static_cast<double>(v), 1.0 / static_cast<double>(k)));
  for (long long c = std::max(0LL, static_cast<long long>(guess) - 1); c <= static_cast<long long>(guess) + 1; ++c)
    if (boost::multiprecision::pow(cpp_int(c), static_cast<unsigned>(k)) == v)
      return cpp_int(c);
  return std::nullopt;
}

/// v^(num/den) written as an integer when rational, else reduced over a prime base.
std::string power_expression(const cpp_int& v, long long num, long long den)
{
  const long long g = std::gcd(num, den);
  num /= g;
  den /= g;
  if (den == 1)
    return cpp_int(boost::multiprecision::pow(v, static_cast<unsigned>(num))).str();
  if (const auto root = integer_root(v, den))
    return cpp_int(boost::multiprecision::pow(*root, static_cast<unsigned>(num))).str();
  if (const auto pp = prime_power(v))
  {
    const long long e = pp->second * num;
    const long long h = std::gcd(e, den);
    if (den / h == 1)
      return cpp_int(boost::multiprecision::pow(pp->first, static_cast<unsigned>(e / h))).str();
    return pp->first.str() + "^(" + std::to_string(e / h) + "/" + std::to_string(den / h) + ")";
  }
  return v.str() + "^(" + std::to_string(num) + "/" + std::to_string(den) + ")";
}

std::string number(double v)
{
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace

KakeyaSides ffkakeya_sides(const KakeyaFamily& family)
{
  family.validate();
  const int q = family.q;
  const std::size_t n = family.n;
  const std::size_t N = point_count(q, n);

  // through[j][x] lists the lines of family j through point x.
  std::vector<std::vector<std::vector<std::size_t>>> through(n, std::vector<std::vector<std::size_t>>(N));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < family.families[j].size(); ++l)
      for (const auto& p : family.families[j][l].line.points())
        through[j][point_index(p, q)].push_back(l);

  double budget = static_cast<double>(N);
  for (std::size_t x = 0; x < N; ++x)
  {
    double tuples = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      tuples *= static_cast<double>(through[j][x].size());
    budget += tuples;
  }
  if (budget > kKakeyaBudget)
    throw BudgetExceeded("Kakeya tuple enumeration exceeds 1e7");

  const bool exact = integral_weights(family);
  const double root = 1.0 / static_cast<double>(n - 1);
  KakeyaSides out;
  out.exact = exact;
  std::map<cpp_int, long long> exact_groups;
  std::map<double, long long> float_groups;

  for (std::size_t x = 0; x < N; ++x)
  {
    bool empty = false;
    for (std::size_t j = 0; j < n && !empty; ++j)
      empty = through[j][x].empty();
    if (empty)
      continue;
    cpp_int exact_inner = 0;
    double inner = 0.0;
    std::vector<std::size_t> pick(n, 0);
    while (true)
    {
      std::vector<FieldVector> dirs;
      double prod = 1.0;
      cpp_int exact_prod = 1;
      for (std::size_t j = 0; j < n; ++j)
      {
        const auto& wl = family.families[j][through[j][x][pick[j]]];
        dirs.push_back(wl.line.direction());
        prod *= wl.a;
        if (exact)
          exact_prod *= cpp_int(static_cast<long long>(wl.a));
      }
      if (prod > 0.0 && wedge_indicator(q, dirs) == 1)
      {
        inner += prod;
        exact_inner += exact_prod;
      }
      std::size_t j = n;
      while (j-- > 0)
      {
        if (++pick[j] < through[j][x].size())
          break;
        pick[j] = 0;
      }
      if (j == static_cast<std::size_t>(-1))
        break;
    }
    if (exact)
      inner = static_cast<double>(exact_inner);
    if (inner > 0.0)
    {
      out.support.push_back(KakeyaPoint{point_at(x, q, n), inner});
      out.lhs += std::pow(inner, root);
      if (exact)
        ++exact_groups[exact_inner];
      else
        ++float_groups[inner];
    }
  }

  std::map<double, long long> sums;
  std::map<cpp_int, long long> exact_sums;
  out.rhs_base = 1.0;
  for (const auto& fam : family.families)
  {
    double s = 0.0;
    for (const auto& wl : fam)
      s += wl.a;
    out.rhs_base *= std::pow(s, root);
    if (exact)
      ++exact_sums[cpp_int(static_cast<long long>(s))];
    else
      ++sums[s];
  }
  out.ratio = out.rhs_base > 0.0 ? out.lhs / out.rhs_base : 0.0;

  const long long k = static_cast<long long>(n - 1);
  if (exact)
  {
    cpp_int rational_part = 0;
    std::vector<std::string> terms;
    for (const auto& [v, c] : exact_groups)
    {
      const std::string e = power_expression(v, 1, k);
      if (e.find('^') == std::string::npos)
        rational_part += c * cpp_int(e);
      else
        terms.push_back((c == 1 ? "" : std::to_string(c) + "*") + e);
    }
    std::string lhs = rational_part != 0 || terms.empty() ? rational_part.str() : "";
    for (const auto& t : terms)
      lhs += (lhs.empty() ? "" : " + ") + t;
    out.lhs_expression = lhs;
    std::string rhs;
    for (const auto& [s, c] : exact_sums)
      rhs += (rhs.empty() ? "" : " * ") + power_expression(s, c, k);
    out.rhs_expression = rhs;
  }
  else
  {
    std::string lhs;
    for (const auto& [v, c] : float_groups)
      lhs += (lhs.empty() ? "" : " + ") + std::to_string(c) + "*" + number(v) + "^(1/" + std::to_string(k) + ")";
    out.lhs_expression = lhs.empty() ? "0" : lhs;
    std::string rhs;
    for (const auto& [s, c] : sums)
      rhs += (rhs.empty() ? "" : " * ") + number(s) + "^(" + std::to_string(c) + "/" + std::to_string(k) + ")";
    out.rhs_expression = rhs;
  }
  return out;
}

KakeyaFamily build_f33_example()
{
  auto line = [](FieldVector base, FieldVector dir, double a) {
    return WeightedLine{KakeyaLine(3, std::move(base), std::move(dir)), a};
  };
  KakeyaFamily f;
  f.q = 3;
  f.n = 3;
  f.families = {
      {line({0, 2, 2}, {1, 1, 0}, 2), line({0, 2, 1}, {2, 1, 1}, 2), line({0, 0, 0}, {1, 1, 0}, 1)},
      {line({2, 0, 2}, {0, 1, 0}, 2), line({0, 0, 0}, {0, 1, 1}, 2), line({0, 2, 1}, {0, 1, 0}, 1)},
      {line({0, 2, 1}, {0, 0, 1}, 2), line({0, 0, 0}, {1, 0, 1}, 2), line({2, 1, 2}, {0, 0, 1}, 1)},
  };
  return f;
}

GeometricMeanProblem to_geomean_problem(const KakeyaFamily& family)
{
  family.validate();
  const int q = family.q;
  const std::size_t n = family.n;

  // Independence only depends on the direction of each chosen line.
  std::vector<std::vector<std::size_t>> reps(n);
  for (std::size_t j = 0; j < n; ++j)
  {
    if (family.families[j].empty())
      throw InvalidArgument("family " + std::to_string(j) + " has no lines");
    std::set<FieldVector> seen;
    for (std::size_t l = 0; l < family.families[j].size(); ++l)
      if (seen.insert(family.families[j][l].line.direction()).second)
        reps[j].push_back(l);
  }
  std::vector<std::size_t> pick(n, 0);
  while (true)
  {
    std::vector<FieldVector> dirs;
    for (std::size_t j = 0; j < n; ++j)
      dirs.push_back(family.families[j][reps[j][pick[j]]].line.direction());
    if (wedge_indicator(q, dirs) == 0)
    {
      std::string tuple;
      for (std::size_t j = 0; j < n; ++j)
        tuple += (j ? ", " : "") + family.families[j][reps[j][pick[j]]].line.label();
      throw InvalidArgument("dependent directions for the line tuple [" + tuple + "]");
    }
    std::size_t j = n;
    while (j-- > 0)
    {
      if (++pick[j] < reps[j].size())
        break;
      pick[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1))
      break;
  }

  const std::size_t N = point_count(q, n);
  std::vector<std::vector<bool>> covered(n, std::vector<bool>(N, false));
  for (std::size_t j = 0; j < n; ++j)
    for (const auto& wl : family.families[j])
      for (const auto& p : wl.line.points())
        covered[j][point_index(p, q)] = true;
  std::vector<std::size_t> xs;
  for (std::size_t x = 0; x < N; ++x)
  {
    bool all = true;
    for (std::size_t j = 0; j < n && all; ++j)
      all = covered[j][x];
    if (all)
      xs.push_back(x);
  }
  if (xs.empty())
    throw InvalidArgument("no point of F_q^n meets a line from every family");

  std::vector<std::string> labels;
  for (std::size_t x : xs)
    labels.push_back(vector_label(point_at(x, q, n)));
  const SpacePtr X = make_space(labels, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(xs.size())));

  std::vector<PositiveKernelOperator> ops;
  for (std::size_t j = 0; j < n; ++j)
  {
    const auto& fam = family.families[j];
    std::vector<std::string> names;
    for (const auto& wl : fam)
      names.push_back(wl.line.label());
    const SpacePtr Y = make_space(names, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(fam.size())));
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(fam.size()));
    for (std::size_t l = 0; l < fam.size(); ++l)
      for (const auto& p : fam[l].line.points())
      {
        const auto it = std::lower_bound(xs.begin(), xs.end(), point_index(p, q));
        if (it != xs.end() && *it == point_index(p, q))
          k(static_cast<Eigen::Index>(it - xs.begin()), static_cast<Eigen::Index>(l)) = 1.0;
      }
    ops.emplace_back(Y, X, std::move(k));
  }
  const double nd = static_cast<double>(n);
  return GeometricMeanProblem(std::move(ops), std::vector<double>(n, 1.0 / nd), std::vector<double>(n, 1.0), nd / (nd - 1.0));
}

std::vector<Eigen::VectorXd> family_weights(const KakeyaFamily& family)
{
  std::vector<Eigen::VectorXd> out;
  for (const auto& fam : family.families)
  {
    Eigen::VectorXd a(static_cast<Eigen::Index>(fam.size()));
    for (std::size_t l = 0; l < fam.size(); ++l)
      a[static_cast<Eigen::Index>(l)] = fam[l].a;
    out.push_back(std::move(a));
  }
  return out;
}

} // namespace geofactor
