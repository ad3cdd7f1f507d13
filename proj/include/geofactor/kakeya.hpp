#pragma once

#include "geofactor/problem.hpp"

#include <string>
#include <vector>

namespace geofactor {

using FieldVector = std::vector<int>;

/// A line {base + t·dir} in F_q^n for prime q. The canonical form has the
/// first nonzero direction entry equal to 1 and the lexicographically least
/// base point on the line.
class KakeyaLine
{
public:
  /// Reduces entries mod q and canonicalises; throws on a zero direction.
  KakeyaLine(int q, FieldVector base, FieldVector direction);

  int field() const { return q_; }
  std::size_t dim() const { return base_.size(); }
  const FieldVector& base() const { return base_; }
  const FieldVector& direction() const { return dir_; }

  /// The q points of the line, t = 0, …, q−1 from the canonical base.
  std::vector<FieldVector> points() const;
  bool contains(const FieldVector& x) const;
  std::string label() const;

  bool operator==(const KakeyaLine& o) const { return q_ == o.q_ && base_ == o.base_ && dir_ == o.dir_; }
  bool operator<(const KakeyaLine& o) const;

private:
  int q_;
  FieldVector base_;
  FieldVector dir_;
};

struct WeightedLine
{
  KakeyaLine line;
  double a = 0.0;
};

/// n families of weighted lines in F_q^n.
struct KakeyaFamily
{
  int q = 2;
  std::size_t n = 2;
  std::vector<std::vector<WeightedLine>> families;

  /// q prime, n families of lines in F_q^n, a ≥ 0, no repeated line in a family.
  void validate() const;
};

bool is_prime(int q);

/// 1 iff the vectors are linearly independent over F_q (exact rank mod q).
int wedge_indicator(int q, const std::vector<FieldVector>& directions);
std::size_t rank_mod(int q, std::vector<FieldVector> rows);

struct KakeyaPoint
{
  FieldVector x;
  /// Σ over line tuples through x of ∏ a_{l_j} · wedge.
  double inner = 0.0;
};

struct KakeyaSides
{
  double lhs = 0.0;
  double rhs_base = 0.0;
  double ratio = 0.0;
  /// Sums of c·v^(1/(n−1)) grouped by inner value v, e.g. "3*2 + 2*8^(1/2)".
  std::string lhs_expression;
  std::string rhs_expression;
  /// Points with a nonzero summand, in lexicographic order.
  std::vector<KakeyaPoint> support;
  /// True when every weight is an integer and inner sums were formed exactly.
  bool exact = false;
};

constexpr double kKakeyaBudget = 1e7;

/// Both sides of Zhang's inequality without the constant. Throws
/// BudgetExceeded when points plus enumerated tuples exceed kKakeyaBudget.
KakeyaSides ffkakeya_sides(const KakeyaFamily& family);

/// The F_3^3 configuration with C_3 > 1.04: two directions per family, three
/// weighted lines each (weights 2, 2, 1).
KakeyaFamily build_f33_example();

/// X = points met by a line of every family (counting measure), Y_j = lines of
/// family j, kernel χ_l(x), α_j = 1/n, p_j = 1, q = n/(n−1). Throws
/// InvalidArgument naming a tuple of lines with dependent directions.
GeometricMeanProblem to_geomean_problem(const KakeyaFamily& family);

/// The weights a_{l} of family j as a vector on Y_j of to_geomean_problem.
std::vector<Eigen::VectorXd> family_weights(const KakeyaFamily& family);

} // namespace geofactor
