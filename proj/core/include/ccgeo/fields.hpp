#ifndef CCGEO_FIELDS_HPP
#define CCGEO_FIELDS_HPP

#include <functional>
#include <optional>
#include <vector>

#include "ccgeo/common.hpp"
#include "ccgeo/expr.hpp"

namespace ccgeo {

/// Finite-difference policy shared by Jacobians and higher derivatives.
/// First-order differences use a point-scaled step; each extra nesting level
/// switches to a larger fixed step to limit cancellation against the noise
/// floor of the inner evaluator.
struct FdPolicy {
  double base_step = 1e-6;
  double nested_step = 1e-4;

  double step(const Vec& x, int fd_level) const {
    if (fd_level > 0) return nested_step;
    return std::max(base_step, base_step * x.cwiseAbs().maxCoeff());
  }
};

/// A vector field f . grad on R^n with optional analytic Jacobian and
/// optional polynomial coefficients.  `word` records the bracket word over
/// the horizontal letters {1..m}; horizontal fields have length 1.
struct VectorField {
  int dim = 0;
  std::vector<int> word;
  int length = 0;
  std::function<Vec(const Vec&)> coeffs;
  std::function<Mat(const Vec&)> jacobian;      // null -> central differences
  std::optional<std::vector<Poly>> poly;        // analytic form when known
  int fd_level = 0;                             // FD nesting depth inside coeffs

  Vec operator()(const Vec& x) const { return coeffs(x); }

  /// Analytic Jacobian when available, otherwise central differences of
  /// coeffs with the policy step.
  Mat jac(const Vec& x, const FdPolicy& fd = {}) const;
};

/// Builds a field from polynomial coefficients (analytic Jacobian attached).
VectorField make_poly_field(std::vector<Poly> coeffs, std::vector<int> word);

/// Coefficient vector of [V, W] at x:  DW(x) V(x) - DV(x) W(x).
Vec bracket(const VectorField& V, const VectorField& W, const Vec& x,
            const FdPolicy& fd = {});

/// Field-valued bracket with a numeric evaluator chain (Jacobians of bracket
/// members by nested central differences).
VectorField bracket_field(const VectorField& V, const VectorField& W,
                          std::vector<int> word, const FdPolicy& fd = {});

/// Field-valued bracket by exact polynomial differentiation.  Both arguments
/// must carry polynomial coefficients.
VectorField symbolic_bracket(const VectorField& V, const VectorField& W,
                             std::vector<int> word);

/// Horizontal family H = {X_1..X_m} with its involutivity step and the box
/// on which sup norms and flows are taken.
struct Family {
  int dim = 0;
  int step = 1;
  Box domain_box;
  std::vector<VectorField> horizontal;

  int m() const { return static_cast<int>(horizontal.size()); }
  void validate() const;

  /// Copy with analytic Jacobians and polynomial data stripped, so every
  /// derivative downstream goes through finite differences.
  Family numeric() const;
};

enum class BracketMode {
  Auto,     // propagate polynomial coefficients when the family carries them
  Numeric,  // always build the recursive finite-difference evaluator chain
};

/// Ordered commutator family P_s = {Y_1..Y_q}; the first m members are the
/// horizontal fields.  Words of length <= s ordered by length then lexicographic
/// word; words whose two final letters coincide are identically zero brackets
/// and are dropped.
struct CommutatorBasis {
  int dim = 0;
  int m = 0;
  int step = 1;
  Box domain_box;
  std::vector<VectorField> members;
  std::vector<int> lengths;
  /// Optional analytic structure constants (i, j, k, x) -> c_ij^k.
  std::function<double(int, int, int, const Vec&)> analytic_constants;

  int q() const { return static_cast<int>(members.size()); }
  const VectorField& Y(int j) const { return members[j]; }  // 0-based

  /// n x q matrix of member values at x.
  MatX member_matrix(const Vec& x) const;
  /// n x q matrix of r^{l_j} Y_j(x).
  MatX scaled_member_matrix(const Vec& x, double r) const;
  /// Member index for a bracket word, or -1.
  int index_of_word(const std::vector<int>& w) const;
};

CommutatorBasis generate_commutators(const Family& fam,
                                     BracketMode mode = BracketMode::Auto);

/// Dense q*q*q coefficient array c[ (i*q + j)*q + k ] = c_ij^k.
struct StructureConstants {
  int q = 0;
  std::vector<double> c;
  double max_residual = 0.0;         // worst reconstruction residual
  std::vector<int> frame;            // member indices used as the solving frame

  double at(int i, int j, int k) const { return c[(static_cast<std::size_t>(i) * q + j) * q + k]; }
  double& at(int i, int j, int k) { return c[(static_cast<std::size_t>(i) * q + j) * q + k]; }
};

/// Solves [Y_i, Y_j](x) = sum_k c_ij^k Y_k(x) over a maximal independent
/// sub-tuple selected at rank_tol; throws NotInvolutive when a bracket leaves
/// the span.
StructureConstants structure_constants(const CommutatorBasis& basis, const Vec& x,
                                       double rank_tol = 1e-8,
                                       const FdPolicy& fd = {});

/// Single pair [Y_i, Y_j](x) expressed in the members of `frame` (indices into
/// the basis).  Returns the coefficient vector aligned with `frame` plus the
/// reconstruction residual.
struct PairConstants {
  Vec coeff;
  double residual = 0.0;
};
PairConstants structure_constants_pair(const CommutatorBasis& basis, int i, int j,
                                       const Vec& x, const std::vector<int>& frame,
                                       const FdPolicy& fd = {});

/// Scaled constants chat with [r^{l_j} Y_j, r^{l_k} Y_k] = sum_i chat_jk^i r^{l_i} Y_i.
/// Pairs with l_j + l_k <= s are re-expanded algebraically through the Jacobi
/// identity; deeper pairs scale the supplied pointwise constants.
StructureConstants scaled_structure_constants(const CommutatorBasis& basis,
                                              const StructureConstants& c, double r);

/// Integer re-expansion of [X_u, X_v] in right-nested bracket words of length
/// |u| + |v| (Jacobi identity path).  Structurally zero words are dropped.
std::vector<std::pair<std::vector<int>, long>> jacobi_word_expansion(
    const std::vector<int>& u, const std::vector<int>& v);

/// Admissible constant: sum of sup-norms of coefficient derivatives up to
/// order s plus sups of |c_ij^l| and |Y_k c_ij^l| over the grid.
double admissible_constant_L1(const Family& fam, const CommutatorBasis& basis,
                              const std::vector<Vec>& grid,
                              double rank_tol = 1e-8, const FdPolicy& fd = {});

}  // namespace ccgeo

#endif  // CCGEO_FIELDS_HPP
