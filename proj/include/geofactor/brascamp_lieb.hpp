#pragma once

#include "geofactor/duality.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <vector>

namespace geofactor {

using Rational = boost::multiprecision::cpp_rational;
using RationalMatrix = std::vector<std::vector<Rational>>;

/// Parses "3", "-2/5" or a decimal such as "0.25" exactly.
Rational parse_rational(const std::string& text);
std::string to_string(const Rational& r);

/// A subspace of Q^n stored by its reduced row echelon basis, which is unique.
class Subspace
{
public:
  static Subspace span(std::size_t n, RationalMatrix vectors);
  static Subspace zero(std::size_t n);
  static Subspace whole(std::size_t n);
  /// {v : Bv = 0}.
  static Subspace kernel(const RationalMatrix& B, std::size_t n);

  std::size_t ambient() const { return n_; }
  std::size_t dim() const { return basis_.size(); }
  const RationalMatrix& basis() const { return basis_; }

  Subspace operator+(const Subspace& other) const;
  /// Intersection via annihilators: (U ∩ W)^⊥ = U^⊥ + W^⊥.
  Subspace intersect(const Subspace& other) const;
  Subspace annihilator() const;

  bool operator==(const Subspace& other) const { return n_ == other.n_ && basis_ == other.basis_; }
  bool operator<(const Subspace& other) const;

private:
  Subspace(std::size_t n, RationalMatrix rref) : n_(n), basis_(std::move(rref)) {}
  std::size_t n_ = 0;
  RationalMatrix basis_;
};

std::size_t rank(RationalMatrix m);
/// dim B(V) for a linear map B: Q^n → Q^{n_j}.
std::size_t image_dim(const RationalMatrix& B, const Subspace& V);

/// Linear maps B_j: Q^n → Q^{n_j} of full row rank with exponents p_j.
struct BLDatum
{
  BLDatum(std::size_t n, std::vector<RationalMatrix> maps, std::vector<Rational> exponents);

  std::size_t n;
  std::vector<RationalMatrix> maps;
  std::vector<Rational> p;

  std::size_t target_dim(std::size_t j) const { return maps[j].size(); }
  /// Σ p_j n_j = n.
  bool scaling_holds() const;
};

struct BLPolytopeReport
{
  bool member = false;
  bool scaling = false;
  /// Every generated subspace, ordered by dimension then basis.
  std::vector<Subspace> lattice;
  std::vector<Subspace> critical_subspaces;
  /// A generated subspace with dim V > Σ p_j dim B_jV, if any.
  std::optional<Subspace> violating_subspace;
  std::size_t lattice_size = 0;
  /// Closure under + and ∩ was reached within the depth budget.
  bool closed = false;
  int rounds = 0;
};

/// Generates the lattice from {ker B_j} (with {0} and Q^n) by up to `depth`
/// rounds of pairwise sums and intersections, then tests every member.
BLPolytopeReport bl_polytope_check(const BLDatum& datum, int depth = 3);

// ---------------------------------------------------------------------------
// Block-triangular combination on finite abelian groups

using IntMatrix = std::vector<std::vector<long long>>;

/// The model R^n ≈ (Z_m)^{k1} × (Z_m)^{k2}, with U the first factor, and maps
/// B_j(x, y) = (B̃_j x + Γ_j y, B̃̃_j y) into (Z_m)^{a_j} × (Z_m)^{b_j}. Target
/// dimensions may be zero (a one-point group). The inequality in weighted form
/// is ∫ ∏ f_j(B_j ·)^{p_j} ≤ C ∏ ||f_j||_1^{p_j}. As a geometric-mean problem it
/// has α_j = p_j/p, L^1 inputs and output exponent p = Σ p_j, which must be ≥ 1.
struct BlockModel
{
  int m = 2;
  std::size_t k1 = 1;
  std::size_t k2 = 1;
  std::vector<IntMatrix> tilde;      // a_j × k1
  std::vector<IntMatrix> gamma;      // a_j × k2
  std::vector<IntMatrix> quotient;   // b_j × k2
  std::vector<double> p;

  /// Throws InvalidArgument when the block shapes do not fit.
  void validate() const;
  std::size_t arity() const { return p.size(); }

  GeometricMeanProblem full_problem() const;
  /// Maps B̃_j on (Z_m)^{k1}.
  GeometricMeanProblem u_problem() const;
  /// Maps B̃̃_j on (Z_m)^{k2}.
  GeometricMeanProblem quotient_problem() const;
};

/// Composition operators f ↦ f∘B_j on (Z_m)^k with the given integer maps.
GeometricMeanProblem group_problem(int m, std::size_t k, const std::vector<IntMatrix>& maps,
                                   const std::vector<double>& alphas, double q);

/// G(x,y) = H_y(x) M(y) with M(y) = ||G(·,y)||_{p'}; H_y is absent where M(y) = 0.
struct BlockSplit
{
  RealFunction M;
  std::vector<std::optional<RealFunction>> H;
};

BlockSplit split_target(const BlockModel& model, const RealFunction& G);

struct BlockCombination
{
  FactorisationCertificate certificate;
  /// max_y of the slice constants and the quotient constant.
  double K1 = 0.0;
  double K2 = 0.0;
};

/// Combines slice certificates (one per y with M(y) > 0, for the U-problem)
/// with a quotient certificate into G_j(x,y) = H_{jy}(x) M_j(y). Sup-norm
/// bounds on the slices hold for every translate, which is what the shear Γ_j
/// needs. Throws InvalidArgument when the pieces do not match the split of G.
BlockCombination bl_combine(const BlockModel& model, const RealFunction& G,
                            const std::vector<std::optional<FactorisationCertificate>>& slices,
                            const FactorisationCertificate& quotient);

/// Splits G, solves every sub-problem with factorise and combines.
BlockCombination bl_combine_solve(const BlockModel& model, const RealFunction& G, const SolverOptions& opts = {});

} // namespace geofactor
