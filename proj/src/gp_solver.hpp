#pragma once

// Log-barrier interior-point method for small geometric programmes in
// convex form:
//
//     minimise cᵀz  subject to  log Σ_k exp(b_k + a_kᵀz) ≤ 0  for each constraint.
//
// A single-term constraint is an ordinary linear inequality aᵀz + b ≤ 0.

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace geofactor::detail {

struct SparseRow
{
  std::vector<std::pair<int, double>> entries;
};

struct LseConstraint
{
  std::vector<double> offsets;
  std::vector<SparseRow> rows;

  void add_term(double offset, SparseRow row)
  {
    offsets.push_back(offset);
    rows.push_back(std::move(row));
  }
};

struct GpProgram
{
  Eigen::VectorXd cost;
  std::vector<LseConstraint> constraints;
};

struct GpResult
{
  Eigen::VectorXd z;
  /// m/τ at termination: cᵀz exceeds the optimum by at most this much.
  double gap_bound = 0.0;
  int newton_steps = 0;
};

/// Value of constraint i at z.
double constraint_value(const LseConstraint& c, const Eigen::VectorXd& z);

/// Central-path following from a strictly feasible z0 until m/τ ≤ tol.
GpResult solve_barrier(const GpProgram& program, Eigen::VectorXd z0, double tol);

} // namespace geofactor::detail
