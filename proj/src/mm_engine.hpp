#pragma once

// Minorise-maximise engine for Φ(h) = Σ_x w(x) ∏_j (A_j h_j)(x)^{β_j} over
// the product of unit spheres ||h_j||_{L^{p_j}(ν_j)} = 1.
//
// With π(x) = ∏ L_j^{β_j}, v_j = k_j^T(w π / L_j), two applications of Jensen
// (on log Σ_x and on log L_j) give the separable minoriser whose maximiser is
// h_j ∝ (h_j v_j)^{1/p_j}. At a stationary point ⟨v_j, h_j⟩_ν = Φ = ||v_j||_{p_j'}.

#include "squarem.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace geofactor::detail {

struct Evaluation
{
  double phi = 0.0;
  Vectors L;
  Eigen::VectorXd pi;
  /// v_j(y) = Σ_x k_j(x,y) w(x) π(x) / L_j(x), without the ν weight.
  Vectors v;
  /// ||v_j||_{p_j'}.
  std::vector<double> dual_norms;
  double min_L = 0.0;
};

class Engine
{
public:
  /// kernels[j] is k_j restricted to active rows; nus[j] the domain weights.
  Engine(Vectors nus, std::vector<Eigen::MatrixXd> kernels, Eigen::VectorXd w, std::vector<double> beta,
         std::vector<double> p);

  std::size_t arity() const { return kernels_.size(); }
  const Eigen::VectorXd& nu(std::size_t j) const { return nus_[j]; }
  double p(std::size_t j) const { return p_[j]; }
  double beta(std::size_t j) const { return beta_[j]; }

  double norm(std::size_t j, const Eigen::VectorXd& h) const;
  double dual_norm(std::size_t j, const Eigen::VectorXd& v) const;
  Vectors normalised(Vectors h) const;
  Vectors uniform_start() const;
  Vectors random_start(std::mt19937_64& rng) const;

  Evaluation evaluate(const Vectors& h) const;
  Vectors step(const Vectors& h, const Evaluation& e) const;

  /// max_j ||v_j||/Φ − 1 ≥ 0; zero exactly at stationary points.
  static double stationarity(const Evaluation& e);
  /// ∏_j (||v_j||/Φ)^{β_j/Σβ} − 1: the equalised primal/dual gap when Σβ = 1.
  double product_gap(const Evaluation& e) const;
  double residual(const Evaluation& e, StopRule rule) const;

private:
  Vectors nus_;
  std::vector<Eigen::MatrixXd> kernels_;
  std::vector<Eigen::MatrixXd> weighted_;
  Eigen::VectorXd w_;
  std::vector<double> beta_;
  std::vector<double> p_;
};

using AscentResult = Ascent<Evaluation>;

} // namespace geofactor::detail
