#include "geofactor/problem.hpp"

#include "geofactor/error.hpp"

#include <cmath>
#include <numeric>

namespace geofactor {

GeometricMeanProblem::GeometricMeanProblem(std::vector<PositiveKernelOperator> operators,
                                           std::vector<double> alphas,
                                           std::vector<double> input_exponents,
                                           double output_exponent)
    : operators_(std::move(operators)), alphas_(std::move(alphas)), p_(std::move(input_exponents)),
      q_(output_exponent)
{
  if (operators_.empty())
    throw InvalidArgument("problem needs at least one operator");
  if (alphas_.size() != operators_.size() || p_.size() != operators_.size())
    throw InvalidArgument("problem: need one alpha and one input exponent per operator");
  for (const auto& op : operators_)
    if (!same_space(op.codomain(), operators_.front().codomain()))
      throw SpaceMismatch("problem: operators must share one codomain");
  double sum = 0.0;
  for (double a : alphas_)
  {
    if (!(a > 0.0))
      throw InvalidArgument("problem: alphas must be positive");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw InvalidArgument("problem: alphas must sum to 1 (got " + std::to_string(sum) + ")");
  for (double p : p_)
    if (!(p >= 1.0))
      throw InvalidArgument("problem: input exponents must lie in [1, inf]");
  if (!(q_ > 0.0))
    throw InvalidArgument("problem: output exponent must lie in (0, inf]");
}

double GeometricMeanProblem::q_dual() const
{
  return kothe_dual_exponent(q_);
}

GeometricMeanProblem GeometricMeanProblem::with_output_exponent(double q) const
{
  return GeometricMeanProblem(operators_, alphas_, p_, q);
}

double input_norm(const GeometricMeanProblem& problem, std::size_t j, const Eigen::VectorXd& f)
{
  return lp_norm(*problem.op(j).domain(), f, problem.p(j));
}

double input_dual_norm(const GeometricMeanProblem& problem, std::size_t j, const Eigen::VectorXd& v)
{
  return lp_norm(*problem.op(j).domain(), v, kothe_dual_exponent(problem.p(j)));
}

double inequality_ratio(const GeometricMeanProblem& problem, const std::vector<Eigen::VectorXd>& fs)
{
  const auto& x = *problem.target();
  Eigen::VectorXd gm = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(x.size()));
  double rhs = 1.0;
  for (std::size_t j = 0; j < problem.arity(); ++j)
  {
    const auto& op = problem.op(j);
    const Eigen::VectorXd tf = op.kernel() * fs[j].cwiseProduct(op.domain()->weights());
    gm.array() *= tf.array().pow(problem.alpha(j));
    rhs *= std::pow(input_norm(problem, j, fs[j]), problem.alpha(j));
  }
  if (!(rhs > 0.0))
    return 0.0;
  return lp_norm(x, gm, problem.q()) / rhs;
}

} // namespace geofactor
