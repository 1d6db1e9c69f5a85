#ifndef CCGEO_PULLBACK_HPP
#define CCGEO_PULLBACK_HPP

#include "ccgeo/controls.hpp"
#include "ccgeo/flows.hpp"

namespace ccgeo {

/// First-order frame correction of E at h: dE(h) = [Ytilde_I(E(h))](I_p + chi).
struct ChiResult {
  Mat chi;
  double residual_abs = 0.0;  // worst column reconstruction error
  double residual_rel = 0.0;  // relative to |dE|
  Mat dE;
  Vec image;
};

ChiResult chi_matrix(const CommutatorBasis& basis, const TupleIndex& I,
                     const Vec& x, double r, const Vec& h,
                     const IntegratorConfig& cfg, double fd_step = 1e-5);

/// chi evaluator bound to a maximal triple.
struct FrameExpansion {
  TupleIndex tuple;
  Vec base;
  double radius = 0.0;
  std::function<ChiResult(const Vec&)> chi;
};
FrameExpansion make_frame_expansion(const CommutatorBasis& basis, const TupleIndex& I,
                                    const Vec& x, double r, const IntegratorConfig& cfg);

/// Coefficients of the scaled brackets in the scaled tuple frame on a
/// rho-ball around x0, with sup reports and maximality warnings.
struct RescaledConstants {
  std::function<Vec(int i, int j, const Vec& y)> ctilde_pair;  // -> R^p
  double sup_c = 0.0;
  double sup_yc = 0.0;
  std::vector<Vec> maximality_violations;
  double reconstruction_residual = 0.0;  // worst |[Yt_i,Yt_j] - sum c Yt_{i_k}|
};

RescaledConstants rescaled_constants_on_ball(const CommutatorBasis& basis,
                                             const TupleIndex& I, const Vec& x0,
                                             double r, const std::vector<Vec>& sample,
                                             double rank_tol = 1e-8);

/// Radial matrix ODE d/drho (rho A(rho w)) = -(A^2 + C A + C) with A(0) = 0;
/// the substitution M = rho A removes the coordinate singularity and the
/// series start M = -(rho/2) C seeds the integration below rho_init.
struct AOdeResult {
  std::vector<double> rhos;
  std::vector<Mat> A;
  std::vector<Vec> phi;  // Phi(rho w) carried along the ray
};

AOdeResult solve_A_ode(const CommutatorBasis& basis, const TupleIndex& I,
                       const Vec& x, double r, const Vec& omega, double rho_max,
                       const IntegratorConfig& cfg,
                       const std::vector<double>& record_rhos = {});

/// A(u) by solving along the ray through u.
Mat A_at(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x, double r,
         const Vec& u, const IntegratorConfig& cfg);

/// Pullback frame bound to a maximal triple: A and C evaluators.
struct PullbackFrame {
  TupleIndex tuple;
  Vec base;
  double radius = 0.0;
  std::function<Mat(const Vec&)> A;
  std::function<Mat(const Vec&)> C_matrix;
};
PullbackFrame make_pullback_frame(const CommutatorBasis& basis, const TupleIndex& I,
                                  const Vec& x, double r, const IntegratorConfig& cfg);

/// Time-1 flow of sum_j v_j Z_j from u1 in box coordinates, where
/// Z_j = d_j + sum_k A_jk(u) d_k.
Vec map_Psi(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x,
            double r, const Vec& u1, const Vec& v, const IntegratorConfig& cfg);

/// Lift of a subunit path through E: discrete stepping of
/// dE(theta) theta' = gamma' with per-step projection back onto gamma.
struct LiftResult {
  std::vector<double> times;
  std::vector<Vec> theta;
  double max_box_norm = 0.0;
  double max_tracking_residual = 0.0;
};

LiftResult lift_path(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x,
                     double r, const ControlPath& controls, double eps,
                     const IntegratorConfig& cfg, int steps = 1000);

/// theta(u) with E(theta(u)) = Phi(u), obtained by lifting the ray t -> Phi(tu).
struct LiftPhiPoint {
  Vec theta;
  double residual = 0.0;  // |E(theta(u)) - Phi(u)|
};
LiftPhiPoint lift_Phi_point(const CommutatorBasis& basis, const TupleIndex& I,
                            const Vec& x, double r, const Vec& u,
                            const IntegratorConfig& cfg, int steps = 400);

struct LiftPhiReport {
  std::vector<Vec> u;
  std::vector<Vec> theta;
  std::vector<double> residual;
  std::vector<double> dtheta_dev;  // |dtheta(u) - I| (operator norm)
  double max_dev = 0.0;
  double max_residual = 0.0;
};
LiftPhiReport lift_Phi_through_E(const CommutatorBasis& basis, const TupleIndex& I,
                                 const Vec& x, double r, double eta3,
                                 const std::vector<Vec>& grid,
                                 const IntegratorConfig& cfg, double fd_step = 1e-3);

/// Grid-certified non-collision check of E on Q_I(eps1), with the lift-based
/// cross-check of the actual injectivity mechanism.
struct InjectivityReport {
  int points = 0;
  double min_pair_ratio = 0.0;  // min |E(h1)-E(h2)| / |h1-h2|
  double threshold = 0.0;       // kappa * sigma_min(dE(0))
  bool collision_free = false;
  double lift_max_dev = 0.0;    // max |dtheta - I| over probe points
  bool lift_consistent = false;
};
InjectivityReport injectivity_check_E(const CommutatorBasis& basis, const TupleIndex& I,
                                      const Vec& x, double r, double eps1,
                                      int grid_per_axis, const IntegratorConfig& cfg,
                                      double eta3 = 0.0, double kappa = 0.1);

/// |(I+chi)^{-1}(I+b) - I| <= 2(|chi| + |b|) for |chi| <= 1/2.
struct NeumannVerdict {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};
NeumannVerdict neumann_bound_check(const Mat& chi, const Mat& b);

}  // namespace ccgeo

#endif  // CCGEO_PULLBACK_HPP
