#pragma once

#include "geofactor/duality.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace geofactor {

struct GeneralKernel;

struct CertReport
{
  /// max_x (G − ∏ g_j^{α_j}) / max(G, ε), clipped below at 0.
  double pointwise_max_violation = 0.0;
  /// ||T_j^* g_j||_{p_j'} / (K ||G||_{q'}) − 1 for each j.
  std::vector<double> per_j_dual_norm_slack;
  /// ∏_j ||T_j^* g_j||^{α_j} / (K ||G||_{q'}) − 1.
  double product_form_slack = 0.0;
  bool pass = false;
  /// Set when the certificate does not even fit the problem's spaces.
  std::string structural_error;
};

/// Evaluates both factorisation constraints with measure_core primitives only.
/// Uses cert.tolerance unless tol is given. Never throws.
CertReport check_factorisation(const GeometricMeanProblem& problem, const FactorisationCertificate& cert,
                               std::optional<double> tol = std::nullopt);

/// Samples f_j with i.i.d. exponential values and tests the norm inequality
/// with constant K. Extra witnesses are tested first.
bool easy_half_check(const GeometricMeanProblem& problem, double K, int n_samples, std::uint64_t seed,
                     const std::vector<std::vector<Eigen::VectorXd>>& extra_witnesses = {},
                     double tol = 1e-9);

/// (K − eta) / max(eta, ε).
double duality_gap(double K, double eta);

/// Upper bound on simplex-mesh points the oracle is willing to visit.
inline constexpr double kBruteForceBudget = 1e7;

/// Max of the inequality ratio over f_j on the simplex mesh {k/resolution}
/// (the mesh points are then normalised). Throws BudgetExceeded past the budget.
double brute_force_constant(const GeometricMeanProblem& problem, int resolution);

/// Same oracle for a general multilinear kernel.
double brute_force_constant(const GeneralKernel& kernel, int resolution);

} // namespace geofactor
