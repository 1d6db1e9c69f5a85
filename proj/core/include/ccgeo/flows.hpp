#ifndef CCGEO_FLOWS_HPP
#define CCGEO_FLOWS_HPP

#include "ccgeo/integrate.hpp"
#include "ccgeo/multilinear.hpp"

namespace ccgeo {

/// max_j |h_j|^{1 / l_{i_j}}.
double box_norm(const Vec& h, const TupleIndex& I, const CommutatorBasis& basis);

/// Point of the coordinate box Q_I(r) together with its anisotropic norm.
struct BoxPoint {
  Vec h;
  TupleIndex tuple;
  double box_norm = 0.0;
};
BoxPoint make_box_point(Vec h, TupleIndex I, const CommutatorBasis& basis);

/// Time-t flow of the field from x.
Vec flow(const VectorField& field, const Vec& x, double t,
         const IntegratorConfig& cfg);

/// Time-T flow of sum_j b_j Y_j from x (b indexed over the whole family).
Vec flow_combination(const VecX& b, const CommutatorBasis& basis, const Vec& x,
                     double T, const IntegratorConfig& cfg);

/// Approximate exponential of h X_w: iterated group commutators of horizontal
/// flows with fractional time rescaling t = |h|^{1/l}; negative h applies the
/// exact inverse composition.  First-order: exp_ap(h X_w) x = x + h g_w(x)
/// + O(|h|^{1 + 1/l}).
Vec approx_exponential(const CommutatorBasis& basis, const std::vector<int>& word,
                       double h, const Vec& x, const IntegratorConfig& cfg);

/// E_{I,x,r}(h) = exp_ap(h_1 r^{l_1} Y_{i_1}) o ... o exp_ap(h_p r^{l_p} Y_{i_p}) x,
/// rightmost factor applied first.
Vec map_E(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x,
          double r, const Vec& h, const IntegratorConfig& cfg);

/// Phi_{I,x,r}(u) = exp( sum_j u_j r^{l_j} Y_{i_j} ) x.
Vec map_Phi(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x,
            double r, const Vec& u, const IntegratorConfig& cfg);

/// Central-difference Jacobian columns of an R^p -> R^n map.
Mat jacobian_of_map(const std::function<Vec(const Vec&)>& map, const Vec& h,
                    double step = 1e-5);

}  // namespace ccgeo

#endif  // CCGEO_FLOWS_HPP
