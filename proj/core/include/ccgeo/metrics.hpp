#ifndef CCGEO_METRICS_HPP
#define CCGEO_METRICS_HPP

#include "ccgeo/pullback.hpp"

namespace ccgeo {

enum class Metric { cc, rho };

inline const char* metric_name(Metric m) { return m == Metric::cc ? "cc" : "rho"; }

/// Cross-entropy search parameters; defaults follow the distance-search
/// calibration (8 segments, population 64, 40 iterations).
struct SearchParams {
  int segments = 8;
  int population = 64;
  int iterations = 40;
  double elite_frac = 0.25;
  double reach_tol = 0.01;   // accept when within reach_tol * r of the target
  long budget = 200000;      // total simulation cap per reach_upper call
};

struct ReachResult {
  bool reached = false;      // false = Unreached verdict, not a proof
  double radius = 0.0;       // certified upper bound when reached
  double miss = 0.0;         // final distance of the witness endpoint
  ControlPath witness;
  long evals = 0;
};

/// Certified upper bound on the control distance: bisection on r around a
/// cross-entropy/random-restart search over piecewise-constant controls.
ReachResult reach_upper(const CommutatorBasis& basis, const Vec& x, const Vec& y,
                        Metric metric, const IntegratorConfig& cfg,
                        std::uint64_t seed = 0, SearchParams params = {});

/// Single feasibility decision: can controls at radius r steer x to within
/// tol * r of y?  Early-terminates on the first witness; warm_start, when
/// given, seeds the search mean with a previous witness schedule.  A custom
/// miss functional (with its own acceptance level) replaces the Euclidean
/// endpoint distance when supplied.
ReachResult reach_decide(const CommutatorBasis& basis, const Vec& x, const Vec& y,
                         double r, Metric metric, const IntegratorConfig& cfg,
                         std::uint64_t seed, SearchParams params,
                         const MatX* warm_start = nullptr,
                         const std::function<double(const Vec&)>& miss_fn = {},
                         double accept_at = -1.0);

/// Inner approximation of a control ball by N random admissible paths.
struct BallCloud {
  Vec center;
  double radius = 0.0;
  Metric metric = Metric::cc;
  std::vector<std::pair<Vec, ControlPath>> points;
};
BallCloud sample_ball(const CommutatorBasis& basis, const Vec& x, double r,
                      Metric metric, int N, std::uint64_t seed,
                      const IntegratorConfig& cfg, int segments = 8);

/// Empirical double inclusion: the largest inner factor c for which all
/// sampled rho-ball points at radius c eps^s r lift into Q_I(eps), and the
/// smallest outer factors bounding the rho-distance of box and Phi images.
struct BallBoxReport {
  double inner_c = 0.0;            // empirical inverse of the lifting constant
  int inner_samples = 0;
  double inner_max_box_norm = 0.0;
  double inner_max_residual = 0.0;
  std::vector<Vec> unliftable;     // points that failed at the reported c
  double outer_C_box = 0.0;        // max reach / (eps^{1/s} r) over E(Q_I(eps))
  double outer_C_phi = 0.0;        // max reach / (eta2^{1/s} r) over Phi(B(eta2))
  std::vector<Vec> outer_unreached;  // probe images the search never certified
  double eta2 = 0.0;
};
BallBoxReport ball_box_check(const CommutatorBasis& basis, const TupleIndex& I,
                             const Vec& x, double r, double eps, int N,
                             std::uint64_t seed, const IntegratorConfig& cfg,
                             double eta2 = 0.0, int outer_grid = 16);

}  // namespace ccgeo

#endif  // CCGEO_METRICS_HPP
