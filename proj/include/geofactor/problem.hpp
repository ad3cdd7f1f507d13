#pragma once

#include "geofactor/measure.hpp"

#include <vector>

namespace geofactor {

/// The data of a weighted geometric-mean norm inequality
///
///     || ∏_j (T_j f_j)^{α_j} ||_{L^q(X)} ≤ A ∏_j ||f_j||_{L^{p_j}(Y_j)}^{α_j}.
///
/// All operators share the codomain X. The α_j are positive and sum to one,
/// p_j ∈ [1, ∞] and q ∈ (0, ∞].
class GeometricMeanProblem
{
public:
  GeometricMeanProblem(std::vector<PositiveKernelOperator> operators, std::vector<double> alphas,
                       std::vector<double> input_exponents, double output_exponent);

  std::size_t arity() const { return operators_.size(); }
  const std::vector<PositiveKernelOperator>& operators() const { return operators_; }
  const PositiveKernelOperator& op(std::size_t j) const { return operators_[j]; }
  const std::vector<double>& alphas() const { return alphas_; }
  double alpha(std::size_t j) const { return alphas_[j]; }
  const std::vector<double>& input_exponents() const { return p_; }
  double p(std::size_t j) const { return p_[j]; }
  double q() const { return q_; }
  /// Conjugate of the output exponent, the norm G is measured in.
  double q_dual() const;
  const SpacePtr& target() const { return operators_.front().codomain(); }

  /// Same operators and exponents, different output exponent.
  GeometricMeanProblem with_output_exponent(double q) const;

private:
  std::vector<PositiveKernelOperator> operators_;
  std::vector<double> alphas_;
  std::vector<double> p_;
  double q_;
};

/// Norm of a function on Y_j in the problem's input lattice L^{p_j}.
double input_norm(const GeometricMeanProblem& problem, std::size_t j, const Eigen::VectorXd& f);

/// Conjugate norm L^{p_j'} on Y_j, the norm T_j^* g_j is measured in.
double input_dual_norm(const GeometricMeanProblem& problem, std::size_t j, const Eigen::VectorXd& v);

/// ||∏(T_j f_j)^{α_j}||_q / ∏||f_j||_{p_j}^{α_j}; zero when some f_j vanishes.
double inequality_ratio(const GeometricMeanProblem& problem, const std::vector<Eigen::VectorXd>& fs);

} // namespace geofactor
