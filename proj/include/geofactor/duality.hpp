#pragma once

#include "geofactor/problem.hpp"

#include <cstdint>
#include <vector>

namespace geofactor {

struct SolverOptions
{
  int max_iters = 200000;
  double gap_tol = 1e-6;
  std::uint64_t seed = 0;
  int restarts = 8;
  int threads = 1;
};

/// Dual witnesses (h_j) of the finite concave maximisation.
///
/// The h_j are stored scaled so that ||G||_{q'} Σ_j ||h_j||_{p_j} = 1; the
/// multiplier ψ is implicit as ψ(x) = ∏_j (α_j^{-1} T_j h_j(x))^{α_j}.
struct DualCertificate
{
  std::vector<RealFunction> hs;
  double eta = 0.0;
  /// 1 − ||G||_{q'} Σ_j ||h_j||_{p_j}; zero up to roundoff for solver output.
  double feasibility_slack = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Primal witnesses: G ≤ ∏ g_j^{α_j} and ||T_j^* g_j||_{p_j'} ≤ K ||G||_{q'}.
struct FactorisationCertificate
{
  RealFunction G;
  std::vector<RealFunction> gs;
  double K = 0.0;
  double tolerance = 1e-9;
};

struct Factorisation
{
  FactorisationCertificate certificate;
  DualCertificate dual;
  double gap = 0.0;
};

/// F(h) = Σ_x μ(x) G(x) ∏_j (α_j^{-1} T_j h_j(x))^{α_j}.
double dual_objective(const GeometricMeanProblem& problem, const RealFunction& G,
                      const std::vector<Eigen::VectorXd>& hs);

/// ∂F/∂h_j(y) = ν_j(y) (T_j^* g_j)(y) with g_j the balancing factor of h.
std::vector<Eigen::VectorXd> dual_gradient(const GeometricMeanProblem& problem, const RealFunction& G,
                                           const std::vector<Eigen::VectorXd>& hs);

/// ||G||_{q'} Σ_j ||h_j||_{p_j}; feasible duals have budget ≤ 1.
double dual_budget(const GeometricMeanProblem& problem, const RealFunction& G,
                   const std::vector<Eigen::VectorXd>& hs);

/// Maximises F over h_j ≥ 0 with budget ≤ 1. Throws SaturationFailure when some
/// T_j has a zero kernel row on supp(G), InvalidArgument when G ≡ 0.
DualCertificate dual_ascent(const GeometricMeanProblem& problem, const RealFunction& G,
                            const SolverOptions& opts = {});

/// Balancing formula g_j = α_j G ∏_k(α_k^{-1}T_kh_k)^{α_k} / T_jh_j on supp(G),
/// zero elsewhere; K = max_j ||T_j^* g_j||_{p_j'} / ||G||_{q'}.
FactorisationCertificate recover_primal(const GeometricMeanProblem& problem, const RealFunction& G,
                                        const DualCertificate& dual);

/// Rescales g_j by s_j with ∏ s_j^{α_j} = 1 so all ||T_j^* g_j|| coincide.
FactorisationCertificate equalise(const GeometricMeanProblem& problem, FactorisationCertificate cert);

/// Dual ascent followed by primal recovery and equalisation. Requires q ≥ 1.
Factorisation factorise(const GeometricMeanProblem& problem, const RealFunction& G,
                        const SolverOptions& opts = {});

/// Passage to the q = 1 problem on supp(G) with measure G dμ / ||G||_{q'}.
struct GeneralQReduction
{
  GeometricMeanProblem reduced;
  RealFunction unit_target;
  RealFunction original_target;
  /// Index in the original space of each point of the reduced space.
  std::vector<std::size_t> support;

  /// g_j = γ_j · G, extended by zero off supp(G); K is unchanged.
  FactorisationCertificate back_map(const FactorisationCertificate& reduced_cert) const;
};

GeneralQReduction reduce_general_q(const GeometricMeanProblem& problem, const RealFunction& G);

struct MaureyFactorisation
{
  std::vector<RealFunction> gs;
  /// ||∏ g_j^{α_j}||_{q'} of A^{1−q} G_j before normalisation.
  double raw_norm = 0.0;
  /// Common factor applied to reach norm exactly 1.
  double scale = 1.0;
  double norm = 0.0;
  /// max_j ||T_j^* g_j||_{p_j'}; the L^1 control holds with this constant.
  double control_constant = 0.0;
  /// Constant of the augmented q = 1 factorisation (close to A^q).
  double augmented_constant = 0.0;
  double gap = 0.0;
};

/// Factorisation through L^1 for 0 < q < 1 via the lattice augmentation
/// T_{d+1}: λ ↦ λ·1 with weights β_j = α_j q, β_{d+1} = 1 − q.
MaureyFactorisation maurey_factorise(const GeometricMeanProblem& problem, double A,
                                     const SolverOptions& opts = {});

/// The problem with the trivial lattice appended, solved with G ≡ 1.
GeometricMeanProblem maurey_augmented_problem(const GeometricMeanProblem& problem);

struct BestConstant
{
  double value = 0.0;
  /// Maximising inputs, normalised to ||f_j||_{p_j} = 1.
  std::vector<RealFunction> witnesses;
  /// Every restart that reached the best value satisfied the stationarity test.
  bool stable = false;
  int starts = 0;
};

/// Multistart ascent for sup ||∏(T_jf_j)^{α_j}||_q / ∏||f_j||^{α_j}.
/// Always a lower bound; concave (hence global) when q ≤ 1.
BestConstant best_constant(const GeometricMeanProblem& problem, const SolverOptions& opts = {});

} // namespace geofactor
