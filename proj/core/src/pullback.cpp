#include "ccgeo/pullback.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace ccgeo {

namespace {

Mat scaled_frame(const CommutatorBasis& basis, const TupleIndex& I, double r,
                 const Vec& y) {
  Mat cols(basis.dim, I.p());
  for (int k = 0; k < I.p(); ++k)
    cols.col(k) = std::pow(r, basis.lengths[I.idx[k]]) * basis.Y(I.idx[k]).coeffs(y);
  return cols;
}

CramerResult frame_solve(const Mat& frame, const Vec& w) {
  return cramer_coordinates(MatX(frame), w, 0.0, /*check_span=*/false);
}

/// Coefficients of scaled brackets in the scaled tuple frame.  Pairs of total
/// length <= s go through the word re-expansion (exact); deeper pairs use the
/// pointwise bracket.  Either way the result is projected on the frame by the
/// minor-replacement rule.
class Ctilde {
 public:
  Ctilde(const CommutatorBasis& basis, TupleIndex I, double r)
      : basis_(&basis), I_(std::move(I)), r_(r) {
    const int p = I_.p();
    expansions_.resize(static_cast<std::size_t>(p) * p);
    for (int a = 0; a < p; ++a) {
      for (int c = 0; c < p; ++c) {
        if (a == c) continue;
        const int i = I_.idx[a], j = I_.idx[c];
        if (basis_->lengths[i] + basis_->lengths[j] <= basis_->step)
          expansions_[a * p + c] = algebraic_terms(i, j);
      }
    }
  }

  /// ctilde_{ij}^. (y) in R^p for arbitrary member indices i, j.
  Vec pair(int i, int j, const Vec& y, double* residual = nullptr) const {
    const int p = I_.p();
    if (i == j) {
      if (residual) *residual = 0.0;
      return Vec::Zero(p);
    }
    Vec w;
    if (basis_->lengths[i] + basis_->lengths[j] <= basis_->step)
      w = assemble(algebraic_terms(i, j), y);
    else
      w = std::pow(r_, basis_->lengths[i] + basis_->lengths[j]) *
          bracket(basis_->Y(i), basis_->Y(j), y);
    return project(w, y, residual);
  }

  /// C(u)_ab = sum_c u_c ctilde_{i_a i_c}^b (y).
  Mat C(const Vec& u, const Vec& y) const {
    const int p = I_.p();
    Mat out = Mat::Zero(p, p);
    const Mat frame = scaled_frame(*basis_, I_, r_, y);
    for (int a = 0; a < p; ++a) {
      Vec w = Vec::Zero(basis_->dim);
      for (int c = 0; c < p; ++c) {
        if (u[c] == 0.0 || a == c) continue;
        const int i = I_.idx[a], j = I_.idx[c];
        Vec piece;
        if (basis_->lengths[i] + basis_->lengths[j] <= basis_->step)
          piece = assemble(expansions_[a * p + c], y);
        else
          piece = std::pow(r_, basis_->lengths[i] + basis_->lengths[j]) *
                  bracket(basis_->Y(i), basis_->Y(j), y);
        w += u[c] * piece;
      }
      if (w.squaredNorm() == 0.0) continue;
      const auto res = frame_solve(frame, w);
      for (int b = 0; b < p; ++b) out(a, b) = res.xi[b];
    }
    return out;
  }

 private:
  using Terms = std::vector<std::pair<int, double>>;  // (member, coeff * r^{l})

  Terms algebraic_terms(int i, int j) const {
    Terms out;
    for (const auto& [w, c] :
         jacobi_word_expansion(basis_->Y(i).word, basis_->Y(j).word)) {
      const int k = basis_->index_of_word(w);
      if (k < 0) throw Error("internal: expansion word missing from basis");
      out.push_back({k, static_cast<double>(c) * std::pow(r_, basis_->lengths[k])});
    }
    return out;
  }

  Vec assemble(const Terms& terms, const Vec& y) const {
    Vec w = Vec::Zero(basis_->dim);
    for (const auto& [k, c] : terms) w += c * basis_->Y(k).coeffs(y);
    return w;
  }

  Vec project(const Vec& w, const Vec& y, double* residual) const {
    const Mat frame = scaled_frame(*basis_, I_, r_, y);
    const auto res = frame_solve(frame, w);
    if (residual) *residual = res.residual;
    return res.xi;
  }

  const CommutatorBasis* basis_;
  TupleIndex I_;
  double r_;
  std::vector<Terms> expansions_;
};

}  // namespace

ChiResult chi_matrix(const CommutatorBasis& basis, const TupleIndex& I,
                     const Vec& x, double r, const Vec& h,
                     const IntegratorConfig& cfg, double fd_step) {
  I.validate(basis);
  ChiResult out;
  out.image = map_E(basis, I, x, r, h, cfg);
  out.dE = jacobian_of_map(
      [&](const Vec& hh) { return map_E(basis, I, x, r, hh, cfg); }, h, fd_step);
  const Mat frame = scaled_frame(basis, I, r, out.image);

  const int p = I.p();
  out.chi = Mat::Zero(p, p);
  double worst = 0.0;
  for (int j = 0; j < p; ++j) {
    CramerResult cr;
    try {
      cr = frame_solve(frame, out.dE.col(j));
    } catch (const DegenerateTuple&) {
      throw FrameCollapse("tuple frame degenerate at E(h) for h = " +
                          std::to_string(box_norm(h, I, basis)));
    }
    worst = std::max(worst, cr.residual);
    for (int k = 0; k < p; ++k) out.chi(k, j) = cr.xi[k] - (k == j ? 1.0 : 0.0);
  }
  out.residual_abs = worst;
  const double dnorm = out.dE.norm();
  out.residual_rel = dnorm > 0 ? worst / dnorm : worst;
  return out;
}

FrameExpansion make_frame_expansion(const CommutatorBasis& basis, const TupleIndex& I,
                                    const Vec& x, double r,
                                    const IntegratorConfig& cfg) {
  FrameExpansion fe;
  fe.tuple = I;
  fe.base = x;
  fe.radius = r;
  fe.chi = [&basis, I, x, r, cfg](const Vec& h) {
    return chi_matrix(basis, I, x, r, h, cfg);
  };
  return fe;
}

RescaledConstants rescaled_constants_on_ball(const CommutatorBasis& basis,
                                             const TupleIndex& I, const Vec& x0,
                                             double r, const std::vector<Vec>& sample,
                                             double rank_tol) {
  I.validate(basis);
  auto ct = std::make_shared<Ctilde>(basis, I, r);
  RescaledConstants out;
  out.ctilde_pair = [ct](int i, int j, const Vec& y) { return ct->pair(i, j, y); };

  const int q = basis.q();
  const int p = I.p();
  const double delta = 1e-4;
  for (const auto& y : sample) {
    // eta-maximality of (I, y, r); a violated point invalidates the sups there.
    const auto sel = select_maximal_tuple(basis, y, r, rank_tol);
    Mat fr = scaled_frame(basis, I, r, y);
    const double mine = wedge_columns(MatX(fr)).norm();
    if (mine <= 0.25 * sel.value) {
      out.maximality_violations.push_back(y);
      continue;
    }
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < q; ++j) {
        if (i == j) continue;
        double resid = 0.0;
        const Vec c = ct->pair(i, j, y, &resid);
        out.reconstruction_residual = std::max(out.reconstruction_residual, resid);
        out.sup_c = std::max(out.sup_c, c.cwiseAbs().maxCoeff());
        for (int l = 0; l < q; ++l) {
          const double w = std::pow(r, basis.lengths[l]);
          IntegratorConfig fc = {};
          fc.domain = basis.domain_box;
          const Vec yp = flow(basis.Y(l), y, delta, fc);
          const Vec ym = flow(basis.Y(l), y, -delta, fc);
          const Vec d = w * (ct->pair(i, j, yp) - ct->pair(i, j, ym)) / (2.0 * delta);
          out.sup_yc = std::max(out.sup_yc, d.cwiseAbs().maxCoeff());
        }
      }
    }
  }
  (void)p;
  return out;
}

namespace {

struct RayState {
  int n = 0;
  int p = 0;

  VecX pack(const Vec& y, const Mat& M) const {
    VecX z(n + p * p);
    z.head(n) = y;
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) z[n + a * p + b] = M(a, b);
    return z;
  }
  Vec unpack_y(const VecX& z) const { return z.head(n); }
  Mat unpack_M(const VecX& z) const {
    Mat M(p, p);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) M(a, b) = z[n + a * p + b];
    return M;
  }
};

}  // namespace

AOdeResult solve_A_ode(const CommutatorBasis& basis, const TupleIndex& I,
                       const Vec& x, double r, const Vec& omega, double rho_max,
                       const IntegratorConfig& cfg,
                       const std::vector<double>& record_rhos) {
  I.validate(basis);
  if (omega.size() != I.p()) throw ArgumentError("solve_A_ode: omega size mismatch");
  if (!(rho_max > 0.0)) throw ArgumentError("solve_A_ode: rho_max must be positive");
  const Vec w = omega / omega.norm();
  const int p = I.p();
  const int n = basis.dim;
  Ctilde ct(basis, I, r);
  RayState rs{n, p};

  auto ray_field = [&](const Vec& y) {
    Vec v = Vec::Zero(n);
    for (int k = 0; k < p; ++k)
      v += w[k] * std::pow(r, basis.lengths[I.idx[k]]) * basis.Y(I.idx[k]).coeffs(y);
    return v;
  };

  AOdeResult out;
  auto record = [&](double rho, const Mat& A, const Vec& y) {
    out.rhos.push_back(rho);
    out.A.push_back(A);
    out.phi.push_back(y);
  };

  // Series start below rho_init: A = -C/2, M = rho A.
  const double rho_init = std::min(1e-4, 0.25 * rho_max);
  IntegratorConfig flow_cfg = cfg;
  flow_cfg.domain = basis.domain_box;
  Vec y0 = integrate([&](double, const Vec& y, Vec& dy) { dy = ray_field(y); }, x,
                     0.0, rho_init, flow_cfg);
  Mat C0 = ct.C(rho_init * w, y0);
  Mat M0 = -0.5 * rho_init * C0;
  record(0.0, Mat::Zero(p, p), x);

  std::vector<double> stops = record_rhos;
  stops.push_back(rho_max);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::remove_if(stops.begin(), stops.end(),
                             [&](double s) { return s <= rho_init || s > rho_max; }),
              stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  VecX z = rs.pack(y0, M0);
  double rho = rho_init;
  IntegratorConfig acfg = cfg;
  acfg.domain = Box{};  // guard applies to the carried point, checked below

  auto rhs = [&](double t, const VecX& zz, VecX& dz) {
    const Vec y = rs.unpack_y(zz);
    if (!basis.domain_box.contains(y))
      throw EscapedDomain("A-ode ray left the domain box", t);
    const Mat M = rs.unpack_M(zz);
    const Mat A = M / t;
    if (A.norm() > 40.0)
      throw RadiusTooLarge("A blow-up along the ray", t);
    const Mat C = ct.C(t * w, y);
    const Mat Mp = -(A * A + C * A + C);
    dz.resize(zz.size());
    dz.head(n) = ray_field(y);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) dz[n + a * p + b] = Mp(a, b);
  };

  for (double stop : stops) {
    z = integrate(rhs, z, rho, stop, acfg);
    rho = stop;
    record(rho, rs.unpack_M(z) / rho, rs.unpack_y(z));
  }
  return out;
}

Mat A_at(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x, double r,
         const Vec& u, const IntegratorConfig& cfg) {
  const double rho = u.norm();
  const int p = I.p();
  if (rho < 1e-7) return Mat::Zero(p, p);
  auto res = solve_A_ode(basis, I, x, r, u / rho, rho, cfg);
  return res.A.back();
}

PullbackFrame make_pullback_frame(const CommutatorBasis& basis, const TupleIndex& I,
                                  const Vec& x, double r,
                                  const IntegratorConfig& cfg) {
  PullbackFrame pf;
  pf.tuple = I;
  pf.base = x;
  pf.radius = r;
  auto ct = std::make_shared<Ctilde>(basis, I, r);
  pf.A = [&basis, I, x, r, cfg](const Vec& u) { return A_at(basis, I, x, r, u, cfg); };
  pf.C_matrix = [&basis, ct, I, x, r, cfg](const Vec& u) {
    const Vec y = map_Phi(basis, I, x, r, u, cfg);
    return ct->C(u, y);
  };
  return pf;
}

Vec map_Psi(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x,
            double r, const Vec& u1, const Vec& v, const IntegratorConfig& cfg) {
  I.validate(basis);
  if (u1.size() != I.p() || v.size() != I.p())
    throw ArgumentError("map_Psi: u1 and v must match the tuple grade");
  if (v.norm() == 0.0) return u1;

  // Fixed-step RK4 in box coordinates; the Z-frame is smooth and nearly
  // constant at these radii, so A evaluation dominates the cost.
  const int N = 20;
  auto rhs = [&](const Vec& u) -> Vec {
    const Mat A = A_at(basis, I, x, r, u, cfg);
    return v + A.transpose() * v;
  };
  Vec u = u1;
  const double dt = 1.0 / N;
  for (int k = 0; k < N; ++k) {
    const Vec k1 = rhs(u);
    const Vec k2 = rhs(u + 0.5 * dt * k1);
    const Vec k3 = rhs(u + 0.5 * dt * k2);
    const Vec k4 = rhs(u + dt * k3);
    u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

namespace {

/// Advances the curve across [t0, t1], splitting at the control breakpoints
/// so every integrator call sees a smooth autonomous field (the velocity is
/// frozen at each piece midpoint, exact for piecewise-constant controls).
Vec advance_curve(const Vec& y0, double t0, double t1,
                  const std::function<Vec(double, const Vec&)>& velocity,
                  const std::vector<double>& breakpoints,
                  const IntegratorConfig& cfg) {
  Vec y = y0;
  double t = t0;
  while (t < t1 - 1e-15) {
    double next = t1;
    for (double b : breakpoints) {
      if (b > t + 1e-12 && b < next) next = b;
    }
    const double mid = 0.5 * (t + next);
    y = integrate(
        [&velocity, mid](double, const Vec& yy, Vec& dy) { dy = velocity(mid, yy); },
        y, t, next, cfg);
    t = next;
  }
  return y;
}

/// Shared stepping core for lifts: advances theta so that E(theta(t)) tracks
/// the curve driven by `velocity`, with a quasi-Newton projection per step
/// (the frame Jacobian stands in for dE; the chi correction is absorbed by
/// the iteration).
LiftResult lift_generic(const CommutatorBasis& basis, const TupleIndex& I,
                        const Vec& x, double r,
                        const std::function<Vec(double, const Vec&)>& velocity,
                        const std::vector<double>& breakpoints,
                        const IntegratorConfig& cfg, int steps, double proj_tol) {
  LiftResult out;
  const int p = I.p();
  Vec theta = Vec::Zero(p);
  Vec gamma = x;
  const double dt = 1.0 / steps;
  const int keep_every = std::max(1, steps / 100);

  out.times.push_back(0.0);
  out.theta.push_back(theta);

  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    // predictor in frame coordinates
    Vec v = velocity(t + 0.5 * dt, gamma);
    CramerResult cr;
    try {
      cr = frame_solve(scaled_frame(basis, I, r, gamma), v);
    } catch (const DegenerateTuple&) {
      throw FrameCollapse("lift frame degenerate at t = " + std::to_string(t));
    }
    theta += dt * cr.xi;

    gamma = advance_curve(gamma, t, t + dt, velocity, breakpoints, cfg);
    if (!basis.domain_box.contains(gamma))
      throw EscapedDomain("lifted curve left the domain box", t + dt);

    // projection E(theta) -> gamma
    double rn = 0.0;
    bool ok = false;
    for (int it = 0; it < 10; ++it) {
      const Vec y = map_E(basis, I, x, r, theta, cfg);
      const Vec resid = gamma - y;
      rn = resid.norm();
      if (rn <= proj_tol) {
        ok = true;
        break;
      }
      CramerResult step;
      try {
        step = frame_solve(scaled_frame(basis, I, r, y), resid);
      } catch (const DegenerateTuple&) {
        throw FrameCollapse("lift frame degenerate during projection");
      }
      theta += step.xi;
    }
    if (!ok)
      throw LiftDiverged("lift projection stalled (residual " + std::to_string(rn) +
                             ")",
                         t + dt);
    out.max_tracking_residual = std::max(out.max_tracking_residual, rn);
    const double bn = box_norm(theta, I, basis);
    out.max_box_norm = std::max(out.max_box_norm, bn);
    if (bn > 1.0)
      throw LiftDiverged("lift left the unit coordinate box", t + dt);
    if ((k + 1) % keep_every == 0 || k + 1 == steps) {
      out.times.push_back(t + dt);
      out.theta.push_back(theta);
    }
  }
  return out;
}

}  // namespace

LiftResult lift_path(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x,
                     double r, const ControlPath& controls, double eps,
                     const IntegratorConfig& cfg, int steps) {
  I.validate(basis);
  controls.validate(basis);
  if (!(eps > 0.0)) throw ArgumentError("lift_path: eps must be positive");
  const double proj_tol = std::max(1e-12, 1e-8 * r);
  auto velocity = [&](double t, const Vec& y) {
    return control_velocity(basis, controls, t, y);
  };
  std::vector<double> breakpoints;
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < controls.segments.size(); ++s) {
    acc += controls.segments[s].duration;
    breakpoints.push_back(acc);
  }
  return lift_generic(basis, I, x, r, velocity, breakpoints, cfg, steps, proj_tol);
}

LiftPhiPoint lift_Phi_point(const CommutatorBasis& basis, const TupleIndex& I,
                            const Vec& x, double r, const Vec& u,
                            const IntegratorConfig& cfg, int steps) {
  I.validate(basis);
  if (u.size() != I.p()) throw ArgumentError("lift_Phi_point: u size mismatch");
  LiftPhiPoint out;
  if (u.norm() == 0.0) {
    out.theta = Vec::Zero(I.p());
    return out;
  }
  auto velocity = [&](double, const Vec& y) {
    Vec v = Vec::Zero(basis.dim);
    for (int k = 0; k < I.p(); ++k)
      v += u[k] * std::pow(r, basis.lengths[I.idx[k]]) * basis.Y(I.idx[k]).coeffs(y);
    return v;
  };
  const double proj_tol = std::max(1e-12, 1e-8 * r);
  auto lift = lift_generic(basis, I, x, r, velocity, {}, cfg, steps, proj_tol);
  out.theta = lift.theta.back();
  out.residual = (map_E(basis, I, x, r, out.theta, cfg) -
                  map_Phi(basis, I, x, r, u, cfg))
                     .norm();
  return out;
}

LiftPhiReport lift_Phi_through_E(const CommutatorBasis& basis, const TupleIndex& I,
                                 const Vec& x, double r, double eta3,
                                 const std::vector<Vec>& grid,
                                 const IntegratorConfig& cfg, double fd_step) {
  LiftPhiReport rep;
  rep.u.assign(grid.begin(), grid.end());
  rep.theta.resize(grid.size());
  rep.residual.resize(grid.size());
  rep.dtheta_dev.resize(grid.size());
  const int p = I.p();

  parallel_for(grid.size(), [&](std::size_t g) {
    const Vec& u = grid[g];
    if (u.norm() > eta3 * (1.0 + 1e-9))
      throw ArgumentError("lift_Phi_through_E: grid point outside B(eta3)");
    auto pt = lift_Phi_point(basis, I, x, r, u, cfg);
    rep.theta[g] = pt.theta;
    rep.residual[g] = pt.residual;
    Mat dtheta(p, p);
    for (int k = 0; k < p; ++k) {
      Vec up = u, um = u;
      up[k] += fd_step;
      um[k] -= fd_step;
      const auto tp = lift_Phi_point(basis, I, x, r, up, cfg);
      const auto tm = lift_Phi_point(basis, I, x, r, um, cfg);
      dtheta.col(k) = (tp.theta - tm.theta) / (2.0 * fd_step);
    }
    rep.dtheta_dev[g] = operator_norm(dtheta - Mat::Identity(p, p));
  });

  for (std::size_t g = 0; g < grid.size(); ++g) {
    rep.max_dev = std::max(rep.max_dev, rep.dtheta_dev[g]);
    rep.max_residual = std::max(rep.max_residual, rep.residual[g]);
  }
  return rep;
}

InjectivityReport injectivity_check_E(const CommutatorBasis& basis, const TupleIndex& I,
                                      const Vec& x, double r, double eps1,
                                      int grid_per_axis, const IntegratorConfig& cfg,
                                      double eta3, double kappa) {
  I.validate(basis);
  if (grid_per_axis < 2) throw ArgumentError("injectivity grid needs >= 2 per axis");
  const int p = I.p();

  std::vector<Vec> hs;
  {
    std::vector<int> digit(p, 0);
    while (true) {
      Vec h(p);
      for (int k = 0; k < p; ++k) {
        const double half = std::pow(eps1, basis.lengths[I.idx[k]]);
        h[k] = -half + 2.0 * half * digit[k] / (grid_per_axis - 1);
      }
      hs.push_back(h);
      int k = p - 1;
      while (k >= 0 && digit[k] == grid_per_axis - 1) digit[k--] = 0;
      if (k < 0) break;
      ++digit[k];
    }
  }

  std::vector<Vec> images(hs.size());
  parallel_for(hs.size(), [&](std::size_t i) {
    images[i] = map_E(basis, I, x, r, hs[i], cfg);
  });

  InjectivityReport rep;
  rep.points = static_cast<int>(hs.size());
  const Mat dE0 = jacobian_of_map(
      [&](const Vec& hh) { return map_E(basis, I, x, r, hh, cfg); },
      Vec::Zero(p), 1e-5);
  Eigen::JacobiSVD<MatX> svd{MatX(dE0)};
  const double sigma_min = svd.singularValues()[svd.singularValues().size() - 1];
  rep.threshold = kappa * sigma_min;

  double min_ratio = std::numeric_limits<double>::infinity();
  std::size_t bad_a = 0, bad_b = 0;
  for (std::size_t a = 0; a < hs.size(); ++a) {
    for (std::size_t b = a + 1; b < hs.size(); ++b) {
      const double dh = (hs[a] - hs[b]).norm();
      const double di = (images[a] - images[b]).norm();
      const double ratio = di / dh;
      if (ratio < min_ratio) {
        min_ratio = ratio;
        bad_a = a;
        bad_b = b;
      }
    }
  }
  rep.min_pair_ratio = min_ratio;
  rep.collision_free = min_ratio >= rep.threshold;
  if (!rep.collision_free)
    throw NotInjective("image points collide: ratio " + std::to_string(min_ratio) +
                           " below threshold " + std::to_string(rep.threshold),
                       hs[bad_a], hs[bad_b]);

  if (eta3 > 0.0) {
    std::vector<Vec> probes;
    probes.push_back(Vec::Zero(p));
    for (int k = 0; k < p; ++k) {
      Vec u = Vec::Zero(p);
      u[k] = 0.6 * eta3;
      probes.push_back(u);
    }
    auto lr = lift_Phi_through_E(basis, I, x, r, eta3, probes, cfg);
    rep.lift_max_dev = lr.max_dev;
    rep.lift_consistent = lr.max_dev <= 0.5;
  }
  return rep;
}

NeumannVerdict neumann_bound_check(const Mat& chi, const Mat& b) {
  const double nchi = operator_norm(chi);
  if (nchi > 0.5 + 1e-12)
    throw ArgumentError("neumann_bound_check requires |chi| <= 1/2");
  const int p = static_cast<int>(chi.rows());
  const Mat lhs_m =
      (Mat::Identity(p, p) + chi).inverse() * (Mat::Identity(p, p) + b) -
      Mat::Identity(p, p);
  NeumannVerdict v;
  v.lhs = operator_norm(lhs_m);
  v.rhs = 2.0 * (nchi + operator_norm(b));
  v.ok = v.lhs <= v.rhs + 1e-12;
  return v;
}

}  // namespace ccgeo
