#ifndef CCGEO_INTEGRATE_HPP
#define CCGEO_INTEGRATE_HPP

#include <cmath>
#include <functional>

#include "ccgeo/common.hpp"

namespace ccgeo {

/// Adaptive embedded Runge-Kutta 4(5); Dormand-Prince coefficients with FSAL
/// and PI-free step control.  Tolerances are tight by default so ODE error
/// stays negligible against the finite-difference steps used around it.
struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 0.0;  // 0 disables the cap
  Box domain;             // empty disables the guard
  long max_steps = 500000;
};

namespace detail {

template <class VecT>
double dp_error_norm(const VecT& err, const VecT& y0, const VecT& y1, double atol,
                     double rtol) {
  double acc = 0.0;
  for (int i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double e = err[i] / sc;
    acc += e * e;
  }
  return std::sqrt(acc / err.size());
}

}  // namespace detail

/// Integrates dy/dt = rhs(t, y) from t0 to t1.  The observer, when given, is
/// called at t0 and after every accepted step.  Throws EscapedDomain with the
/// first time the trajectory is seen outside cfg.domain.
template <class Rhs, class VecT = Vec>
VecT integrate(Rhs&& rhs, VecT y, double t0, double t1, const IntegratorConfig& cfg,
               const std::function<void(double, const VecT&)>& observer = {}) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (!cfg.domain.contains(y))
    throw EscapedDomain("initial point outside the domain box", t0);
  if (observer) observer(t0, y);
  const double T = t1 - t0;
  if (T == 0.0) return y;
  const double dir = T > 0 ? 1.0 : -1.0;
  const double span = std::abs(T);

  double h = span <= 0.1 ? span : span / 20.0;
  if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
  double t = t0;

  VecT k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()),
      k6(y.size()), k7(y.size()), ytmp(y.size()), ynew(y.size()), err(y.size());
  rhs(t, y, k1);
  long steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (++steps > cfg.max_steps)
      throw Error("integrator exceeded the step budget");
    const double remaining = std::abs(t1 - t);
    if (remaining <= 1e-14 * std::max({1.0, std::abs(t), std::abs(t1)})) break;
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw Error("integrator step underflow");
    const bool last = h >= remaining;
    const double hs = dir * (last ? remaining : h);

    ytmp = y + hs * (a21 * k1);
    rhs(t + 0.2 * hs, ytmp, k2);
    ytmp = y + hs * (a31 * k1 + a32 * k2);
    rhs(t + 0.3 * hs, ytmp, k3);
    ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + 0.8 * hs, ytmp, k4);
    ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + 8.0 / 9.0 * hs, ytmp, k5);
    ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + hs, ytmp, k6);
    ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + hs, ynew, k7);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double en = detail::dp_error_norm(err, y, ynew, cfg.abs_tol, cfg.rel_tol);
    if (en <= 1.0) {
      t = last ? t1 : t + hs;
      y.swap(ynew);
      k1.swap(k7);  // FSAL
      if (!cfg.domain.contains(y))
        throw EscapedDomain("trajectory left the domain box", t);
      if (observer) observer(t, y);
    }
    double factor = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
    factor = std::min(5.0, std::max(0.2, factor));
    h *= factor;
    if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
  }
  return y;
}

}  // namespace ccgeo

#endif  // CCGEO_INTEGRATE_HPP
