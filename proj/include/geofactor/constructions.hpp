#pragma once

#include "geofactor/duality.hpp"

#include <cstdint>
#include <vector>

namespace geofactor {

// ---------------------------------------------------------------------------
// Hölder

/// g_j = ||G||_{q'}^{1−q'/q_j'} G^{q'/q_j'}, so that ∏ g_j^{α_j} = G and
/// ||g_j||_{q_j'} = ||G||_{q'}. Needs Σ α_j/q_j = 1/q with q, q_j ∈ [1, ∞);
/// q = 1 is accepted only when every q_j = 1 (then g_j = G).
std::vector<RealFunction> holder_factorise(const RealFunction& G, double q, const std::vector<double>& q_js,
                                           const std::vector<double>& alphas);

/// Identity operator on a space: kernel δ_{xy}/μ(y), so (Tf)(x) = f(x).
PositiveKernelOperator identity_operator(const SpacePtr& space);

/// The Hölder inequality ||∏ f_j^{α_j}||_q ≤ ∏ ||f_j||_{q_j}^{α_j} as a problem.
GeometricMeanProblem holder_problem(const SpacePtr& space, const std::vector<double>& alphas,
                                    const std::vector<double>& q_js, double q);

// ---------------------------------------------------------------------------
// Discrete Loomis–Whitney on (Z_m)^n

struct LWGrid
{
  int m = 2;
  int n = 2;
  /// directions[j] is ω_j ∈ (Z_m)^n; entries are reduced mod m.
  std::vector<std::vector<int>> directions;

  /// Coordinate directions e_1, …, e_n.
  static LWGrid coordinate(int m, int n);

  /// det of the direction matrix mod m is a unit (checked exactly).
  bool invertible() const;
  std::size_t points() const;
  std::vector<int> point(std::size_t index) const;
  std::size_t index(const std::vector<int>& point) const;
  /// x + t·ω_j.
  std::size_t shift(std::size_t index, std::size_t j, int t) const;
  /// Canonical line id through a point in direction ω_j: the least index on the line.
  std::size_t line_of(std::size_t index, std::size_t j) const;
};

/// Counting measure on (Z_m)^n with labels "(a,b,…)".
SpacePtr lw_space(const LWGrid& grid);

/// Telescoping factors S_j = N_{j−1}/N_j with N_0 = (M/||M||_n)^n and N_k the
/// sum of N_{k−1} along ω_k. On lines where N_j vanishes S_j = 1/m, which keeps
/// every line sum equal to one and ∏ S_j = M^n/||M||_n^n everywhere.
std::vector<RealFunction> lw_telescoping(const RealFunction& M, const LWGrid& grid);

/// The problem ||∏ (f_j∘π_j)^{1/n}||_{n/(n−1)} ≤ ∏ ||f_j||_1^{1/n} where
/// π_j sends a point to its line in direction ω_j (counting measure on lines).
GeometricMeanProblem lw_problem(const LWGrid& grid);

/// Certificate with G = M and g_j = ||M||_n S_j for lw_problem; K = 1.
FactorisationCertificate lw_certificate(const RealFunction& M, const LWGrid& grid);

/// |ω_1 ∧ … ∧ ω_n|^{−1/(n−1)} for real direction vectors: the affine
/// Loomis–Whitney constant of the continuum problem.
double lw_affine_constant(const std::vector<std::vector<double>>& directions);

// ---------------------------------------------------------------------------
// Interpolation of factorisations for composition operators

/// Exponent calculus between endpoint data (q_0, p_{j0}) and (q_1, p_{j1}).
/// Each endpoint corresponds to a problem with α_{jk} = q_k/(p_{jk}s_k),
/// L^1 inputs and output exponent s_k = q_k Σ_j 1/p_{jk} > 1.
struct InterpolationSchedule
{
  InterpolationSchedule(double q0, double q1, std::vector<double> p0, std::vector<double> p1, double theta);

  double q0, q1;
  std::vector<double> p0, p1;
  double theta;

  double s0, s1;
  std::vector<double> gamma;
  double lambda;
  std::vector<double> beta;
  double alpha;
  double Q;
  std::vector<double> P;
  /// Q(θ)/S(θ) from the λ-formula.
  double Q_over_S;
  /// S(θ) from S' = 1/λ.
  double S;

  std::size_t arity() const { return p0.size(); }
};

/// Output exponent s_k and weights α_{jk} of an endpoint.
double endpoint_output_exponent(double q, const std::vector<double>& p);
GeometricMeanProblem endpoint_problem(const std::vector<PositiveKernelOperator>& ops, double q,
                                      const std::vector<double>& p);
/// The problem at θ: weights β_j(θ), output S(θ), L^1 inputs.
GeometricMeanProblem interpolated_problem(const std::vector<PositiveKernelOperator>& ops,
                                          const InterpolationSchedule& schedule);

/// The endpoint targets are G^{1/s_k'} for one G ≥ 0 with ∫ G dμ = 1.
RealFunction endpoint_target(const RealFunction& G, double s);

struct InterpolatedCertificate
{
  FactorisationCertificate certificate;
  /// K in the original normalisation, K^{S/Q}.
  double constant = 0.0;
  /// A_0^{1−α} A_1^{α} with A_k = K_k^{s_k/q_k} of the endpoint certificates.
  double bound = 0.0;
};

/// Combines verified endpoint certificates into one for the θ-problem via
/// M_{jθ} = (M_{j0}^{e_{j0}(1−θ)} M_{j1}^{e_{j1}θ})^{1/γ_j}, then equalises.
/// Throws InvalidArgument if an endpoint certificate fails verification or
/// the endpoint targets do not come from a common G.
InterpolatedCertificate interpolation_combine(const std::vector<PositiveKernelOperator>& ops,
                                              const FactorisationCertificate& cert0,
                                              const FactorisationCertificate& cert1,
                                              const InterpolationSchedule& schedule);

} // namespace geofactor
