#ifndef CCGEO_CONTROLS_HPP
#define CCGEO_CONTROLS_HPP

#include "ccgeo/integrate.hpp"
#include "ccgeo/fields.hpp"

namespace ccgeo {

/// Piecewise-constant control schedule driving a subunit path.  With
/// degree_weights the velocity is sum_j b_j radius^{l_j} Y_j over the whole
/// commutator family; without it, sum_j b_j radius X_j over the horizontal
/// fields only.  Durations are positive and sum to one.
struct ControlPath {
  struct Segment {
    VecX b;
    double duration = 0.0;
  };
  std::vector<Segment> segments;
  bool degree_weights = true;
  double radius = 0.0;

  void validate(const CommutatorBasis& basis) const;
  /// Segment coefficients at normalized time t in [0, 1).
  const VecX& coeffs_at(double t) const;
  /// FNV-1a over the schedule bytes; provenance key for cloud CSV rows.
  std::uint64_t hash() const;
};

/// Velocity field of the schedule at (t, y).
Vec control_velocity(const CommutatorBasis& basis, const ControlPath& path,
                     double t, const Vec& y);

/// Endpoint of the controlled path from x0; the observer sees accepted steps.
Vec simulate_path(const CommutatorBasis& basis, const Vec& x0,
                  const ControlPath& path, const IntegratorConfig& cfg,
                  const std::function<void(double, const Vec&)>& observer = {});

}  // namespace ccgeo

#endif  // CCGEO_CONTROLS_HPP
