#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geofactor {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A finite point set with strictly positive point masses.
///
/// This is the atomic stand-in for a measure space (X, dμ). Null sets are
/// modelled by leaving the points out, so every weight is > 0.
class MeasureSpace
{
public:
  MeasureSpace(std::vector<std::string> labels, Eigen::VectorXd weights);

  /// Counting measure on n points labelled "<prefix>0", "<prefix>1", ...
  static MeasureSpace counting(std::size_t n, const std::string& prefix = "");

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
  std::optional<std::size_t> index_of(const std::string& label) const;

  bool operator==(const MeasureSpace& other) const;

private:
  std::vector<std::string> labels_;
  Eigen::VectorXd weights_;
};

using SpacePtr = std::shared_ptr<const MeasureSpace>;

SpacePtr make_space(std::vector<std::string> labels, Eigen::VectorXd weights);
SpacePtr counting_space(std::size_t n, const std::string& prefix = "");

/// True when both pointers denote the same space (by identity or content).
bool same_space(const SpacePtr& a, const SpacePtr& b);

/// A nonnegative function on a finite measure space.
class RealFunction
{
public:
  RealFunction(SpacePtr space, Eigen::VectorXd values);

  static RealFunction constant(SpacePtr space, double c);

  const SpacePtr& space() const { return space_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  RealFunction scaled(double c) const;

private:
  SpacePtr space_;
  Eigen::VectorXd values_;
};

/// Nonnegative kernel k(x, y) acting by (Tf)(x) = Σ_y k(x,y) f(y) ν(y).
///
/// Rows of the kernel are indexed by codomain points, columns by domain points.
class PositiveKernelOperator
{
public:
  PositiveKernelOperator(SpacePtr domain, SpacePtr codomain, Eigen::MatrixXd kernel);

  const SpacePtr& domain() const { return domain_; }
  const SpacePtr& codomain() const { return codomain_; }
  const Eigen::MatrixXd& kernel() const { return kernel_; }

  /// k(x, y) ν(y): the matrix that maps domain values to codomain values.
  Eigen::MatrixXd weighted_kernel() const;

private:
  SpacePtr domain_;
  SpacePtr codomain_;
  Eigen::MatrixXd kernel_;
};

RealFunction apply(const PositiveKernelOperator& op, const RealFunction& f);

/// (T*g)(y) = Σ_x k(x,y) g(x) μ(x).
RealFunction adjoint_apply(const PositiveKernelOperator& op, const RealFunction& g);

/// ⟨f, g⟩ = Σ_x μ(x) f(x) g(x).
double pairing(const RealFunction& f, const RealFunction& g);

/// (Σ μ(x) f(x)^r)^{1/r} for r ∈ (-∞,0) ∪ (0,∞], r = ∞ giving the max.
///
/// Negative exponents require f > 0 everywhere and throw InvalidArgument
/// otherwise.
double lp_norm(const MeasureSpace& space, const Eigen::VectorXd& values, double r);
double lp_norm(const RealFunction& f, double r);

/// Pointwise ∏ f_j(x)^{α_j}, with 0^α = 0 for α > 0.
RealFunction geometric_mean(std::span<const RealFunction> fs, std::span<const double> alphas);

/// Finite form of saturation: every point of the codomain has a nonzero kernel row.
bool saturation_check(const PositiveKernelOperator& op);

/// Saturation restricted to the points where mask is true.
bool saturation_check(const PositiveKernelOperator& op, const std::vector<bool>& mask);

/// q' with 1/q + 1/q' = 1; q = 1 ↦ ∞, q = ∞ ↦ 1, q ∈ (0,1) ↦ q' < 0.
double kothe_dual_exponent(double q);

} // namespace geofactor
