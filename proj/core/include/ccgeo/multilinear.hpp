#ifndef CCGEO_MULTILINEAR_HPP
#define CCGEO_MULTILINEAR_HPP

#include <vector>

#include "ccgeo/fields.hpp"

namespace ccgeo {

/// Strictly increasing multi-index into the commutator family (0-based).
struct TupleIndex {
  std::vector<int> idx;

  TupleIndex() = default;
  explicit TupleIndex(std::vector<int> i) : idx(std::move(i)) {}
  /// From 1-based indices as they appear on the CLI.
  static TupleIndex from_one_based(const std::vector<int>& i);

  int p() const { return static_cast<int>(idx.size()); }
  int degree(const CommutatorBasis& basis) const;
  void validate(const CommutatorBasis& basis) const;
  bool operator==(const TupleIndex& o) const { return idx == o.idx; }
  std::string str() const;  // 1-based, comma separated
};

/// All strictly increasing p-tuples over {0..q-1} in lexicographic order.
std::vector<TupleIndex> enumerate_tuples(int p, int q);

/// Components of Y_{i_1} ^ ... ^ Y_{i_p} on the e_K basis, K in I(p, n).
struct WedgeVector {
  int p = 0;
  int n = 0;
  std::vector<double> comps;  // aligned with enumerate_tuples(p, n)

  double norm() const;
  double dot(const WedgeVector& o) const;
};

/// Wedge of the given column block (columns taken in order, no sorting).
WedgeVector wedge_columns(const MatX& cols);
WedgeVector wedge_components(const CommutatorBasis& basis, const TupleIndex& I,
                             const Vec& x);

struct CramerResult {
  Vec xi;
  double residual = 0.0;
};

/// Solves sum_k xi^k cols_k = W by the minor-replacement rule
/// xi^k = <Y_I, iota^k(W) Y_I> / |Y_I|^2; when `check_span` is set, a
/// reconstruction residual above span_tol * |W| throws NotInSpan.
CramerResult cramer_coordinates(const MatX& cols, const Vec& W, double rank_tol,
                                bool check_span, double span_tol = 1e-6);
CramerResult cramer_coordinates(const CommutatorBasis& basis, const TupleIndex& I,
                                const Vec& x, const Vec& W, double rank_tol = 1e-8,
                                double span_tol = 1e-6);

/// |Lambda_p(x, r)| = sqrt( sum_{I in I(p,q)} r^{2 l(I)} |Y_I(x)|^2 ).
double lambda_vector(const CommutatorBasis& basis, int p, const Vec& x, double r);

/// Numerical rank of [Y_1(x) ... Y_q(x)] at rank_tol (relative to the largest
/// singular value).
int pointwise_rank(const CommutatorBasis& basis, const Vec& x,
                   double rank_tol = 1e-8);

/// min over the sample of |Lambda_{p_x}(x, 1)|.
double nu_infimum(const CommutatorBasis& basis, const std::vector<Vec>& sample,
                  double rank_tol = 1e-8);

struct MaximalTuple {
  TupleIndex I;
  double value = 0.0;        // |Y_I(x)| r^{l(I)}
  TupleIndex runner_up;      // empty when no second tuple exists
  double runner_value = 0.0;
};

/// Exhaustive argmax of |Y_I(x)| r^{l(I)} over I(p_x, q); ties broken by
/// smallest degree, then lexicographic indices.  The result is eta-maximal
/// for every eta < 1; the parameter is validated for interface parity.
MaximalTuple select_maximal_tuple(const CommutatorBasis& basis, const Vec& x,
                                  double r, double rank_tol = 1e-8,
                                  double eta = 0.5);

}  // namespace ccgeo

#endif  // CCGEO_MULTILINEAR_HPP
