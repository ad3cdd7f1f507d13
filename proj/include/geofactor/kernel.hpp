#pragma once

#include "geofactor/duality.hpp"

#include <cstdint>
#include <vector>

namespace geofactor {

/// Dense nonnegative tensor K(x, y_1, …, y_d) defining
///
///     T(f_1,…,f_d)(x) = Σ_{y_1…y_d} K(x, y) f_1(y_1)⋯f_d(y_d) ν_1(y_1)⋯ν_d(y_d),
///
/// with the inequality ||T(f)^{1/d}||_{L^r(X)} ≤ A ∏ ||f_j||_{L^{p_j}}^{1/d}.
/// Storage is row-major with x slowest and y_d fastest.
struct GeneralKernel
{
  GeneralKernel(SpacePtr target, std::vector<SpacePtr> inputs, std::vector<double> values,
                std::vector<double> input_exponents, double output_exponent);

  std::size_t arity() const { return inputs.size(); }
  std::size_t index(std::size_t x, const std::vector<std::size_t>& ys) const;
  double at(std::size_t x, const std::vector<std::size_t>& ys) const { return values[index(x, ys)]; }
  /// Number of y-tuples, ∏ |Y_j|.
  std::size_t tuples() const;
  /// Decodes the t-th tuple in storage order.
  std::vector<std::size_t> tuple(std::size_t t) const;

  SpacePtr target;
  std::vector<SpacePtr> inputs;
  std::vector<double> values;
  std::vector<double> input_exponents;
  double output_exponent;
};

/// K(x, y) = ∏_j k_j(x, y_j) for the operators of a problem, with that
/// problem's exponents. Requires equal weights α_j = 1/d.
GeneralKernel product_kernel(const GeometricMeanProblem& problem);

RealFunction kernel_apply(const GeneralKernel& kernel, const std::vector<RealFunction>& fs);

/// ||T(f)^{1/d}||_r / ∏ ||f_j||_{p_j}^{1/d}; zero when some f_j vanishes.
double kernel_ratio(const GeneralKernel& kernel, const std::vector<Eigen::VectorXd>& fs);

struct KernelBestConstant
{
  double value = 0.0;
  std::vector<RealFunction> witnesses;
  bool stable = false;
  int starts = 0;
};

/// Multistart minorise-maximise ascent over normalised inputs. Nonconcave in
/// general, so the result is the best lower bound found.
KernelBestConstant kernel_best_constant(const GeneralKernel& kernel, const SolverOptions& opts = {});

struct KernelFactorisation
{
  double A = 0.0;
  /// S_j(x, y_j) as |X| × |Y_j| matrices; zero off the constrained slots.
  std::vector<Eigen::MatrixXd> S;
  /// Upper bound on A − A_opt from the barrier method's duality measure.
  double suboptimality = 0.0;
  int newton_steps = 0;
};

/// Least A such that K(x,y)^{1/d} G(x) ≤ ∏_j S_j(x,y_j)^{1/d} for every tuple
/// and ||Σ_x μ(x) S_j(x,·)||_{p_j'} ≤ A. G is normalised to ||G||_{r'} = 1
/// internally. Throws SaturationFailure when K(x,·) ≡ 0 at a point of supp(G).
KernelFactorisation kernel_factorisation_constant(const GeneralKernel& kernel, const RealFunction& G);

struct KernelCheck
{
  double pointwise_max_violation = 0.0;
  std::vector<double> marginal_norms;
  bool pass = false;
};

/// Verifies a factorisation witness at constant A, normalising G first.
KernelCheck check_kernel_factorisation(const GeneralKernel& kernel, const RealFunction& G,
                                       const std::vector<Eigen::MatrixXd>& S, double A, double tol = 1e-9);

/// X = Y_1 = Y_2 = {1,2} with counting measure, r = 4, p_j = 2 and
/// K(1,1,1) = K(2,1,1) = K(2,2,2) = 1.
GeneralKernel two_point_kernel();

struct GapDemo
{
  double inequality_constant = 0.0;
  double brute_force_constant = 0.0;
  double factorisation_constant = 0.0;
  RealFunction G;
  KernelBestConstant inequality;
  KernelFactorisation factorisation;
};

/// The inequality holds with 2^{1/4} while G = (0,1) needs A = 2^{1/2}.
GapDemo gap_demo(const SolverOptions& opts = {});

} // namespace geofactor
