#include "ccgeo/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numeric>

namespace ccgeo {

// --- ControlPath ------------------------------------------------------------

void ControlPath::validate(const CommutatorBasis& basis) const {
  if (segments.empty()) throw ArgumentError("control path needs segments");
  const int want = degree_weights ? basis.q() : basis.m;
  double total = 0.0;
  for (const auto& s : segments) {
    if (s.b.size() != want)
      throw ArgumentError("control segment dimension must be " + std::to_string(want));
    if (s.b.norm() > 1.0 + 1e-9)
      throw ArgumentError("control coefficients must satisfy |b| <= 1");
    if (!(s.duration > 0.0)) throw ArgumentError("segment durations must be positive");
    total += s.duration;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ArgumentError("segment durations must sum to 1");
  if (!(radius >= 0.0)) throw ArgumentError("control path radius must be >= 0");
}

const VecX& ControlPath::coeffs_at(double t) const {
  double acc = 0.0;
  for (const auto& s : segments) {
    acc += s.duration;
    if (t < acc) return s.b;
  }
  return segments.back().b;
}

std::uint64_t ControlPath::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& s : segments) {
    mix(s.b.data(), sizeof(double) * s.b.size());
    mix(&s.duration, sizeof(double));
  }
  mix(&radius, sizeof(double));
  return h;
}

Vec control_velocity(const CommutatorBasis& basis, const ControlPath& path,
                     double t, const Vec& y) {
  const VecX& b = path.coeffs_at(t);
  Vec v = Vec::Zero(basis.dim);
  if (path.degree_weights) {
    for (int j = 0; j < basis.q(); ++j) {
      if (b[j] == 0.0) continue;
      v += b[j] * std::pow(path.radius, basis.lengths[j]) * basis.Y(j).coeffs(y);
    }
  } else {
    for (int j = 0; j < basis.m; ++j) {
      if (b[j] == 0.0) continue;
      v += b[j] * path.radius * basis.Y(j).coeffs(y);
    }
  }
  return v;
}

Vec simulate_path(const CommutatorBasis& basis, const Vec& x0,
                  const ControlPath& path, const IntegratorConfig& cfg,
                  const std::function<void(double, const Vec&)>& observer) {
  path.validate(basis);
  Vec y = x0;
  double t = 0.0;
  for (const auto& seg : path.segments) {
    const VecX& b = seg.b;
    auto rhs = [&](double, const Vec& yy, Vec& dy) {
      dy.setZero(yy.size());
      if (path.degree_weights) {
        for (int j = 0; j < basis.q(); ++j)
          if (b[j] != 0.0)
            dy += b[j] * std::pow(path.radius, basis.lengths[j]) * basis.Y(j).coeffs(yy);
      } else {
        for (int j = 0; j < basis.m; ++j)
          if (b[j] != 0.0) dy += b[j] * path.radius * basis.Y(j).coeffs(yy);
      }
    };
    std::function<void(double, const Vec&)> obs;
    if (observer) {
      const double t0 = t;
      obs = [&observer, t0](double tt, const Vec& yy) { observer(t0 + tt, yy); };
    }
    y = integrate(rhs, y, 0.0, seg.duration, cfg, obs);
    t += seg.duration;
  }
  return y;
}

// --- cross-entropy reachability ----------------------------------------------

namespace {

int control_dim(const CommutatorBasis& basis, Metric metric) {
  return metric == Metric::rho ? basis.q() : basis.m;
}

ControlPath path_from_matrix(const MatX& B, Metric metric, double r) {
  ControlPath path;
  path.degree_weights = metric == Metric::rho;
  path.radius = r;
  const int K = static_cast<int>(B.cols());
  for (int k = 0; k < K; ++k) {
    ControlPath::Segment s;
    s.b = B.col(k);
    s.duration = 1.0 / K;
    path.segments.push_back(std::move(s));
  }
  return path;
}

void clamp_columns(MatX& B) {
  for (int k = 0; k < B.cols(); ++k) {
    const double n = B.col(k).norm();
    if (n > 1.0) B.col(k) /= n;
  }
}

}  // namespace

ReachResult reach_decide(const CommutatorBasis& basis, const Vec& x, const Vec& y,
                         double r, Metric metric, const IntegratorConfig& cfg,
                         std::uint64_t seed, SearchParams params,
                         const MatX* warm_start,
                         const std::function<double(const Vec&)>& miss_fn,
                         double accept_at) {
  const int d = control_dim(basis, metric);
  const int K = params.segments;
  auto miss_of = [&](const Vec& end) {
    return miss_fn ? miss_fn(end) : (end - y).norm();
  };
  const double tol = accept_at >= 0.0 ? accept_at : params.reach_tol * r;
  Rng rng(seed, 0x9e3779b9);

  ReachResult best;
  best.miss = std::numeric_limits<double>::infinity();

  MatX mean = warm_start && warm_start->rows() == d && warm_start->cols() == K
                  ? *warm_start
                  : MatX::Zero(d, K);
  MatX stdev = MatX::Constant(d, K, warm_start ? 0.25 : 0.6);
  const int elites = std::max(2, static_cast<int>(params.population * params.elite_frac));
  std::vector<std::pair<double, int>> scored(params.population);
  std::vector<MatX> pop(params.population);

  double floor = 0.05;
  for (int iter = 0; iter < params.iterations; ++iter) {
    if (best.evals >= params.budget) break;
    for (int c = 0; c < params.population; ++c) {
      MatX B(d, K);
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < K; ++k)
          B(i, k) = mean(i, k) + stdev(i, k) * rng.normal();
      clamp_columns(B);
      pop[c] = std::move(B);
      double cost;
      try {
        const ControlPath path = path_from_matrix(pop[c], metric, r);
        const Vec end = simulate_path(basis, x, path, cfg);
        cost = miss_of(end);
        ++best.evals;
        if (cost < best.miss) {
          best.miss = cost;
          best.witness = path;
        }
      } catch (const EscapedDomain&) {
        cost = std::numeric_limits<double>::infinity();
        ++best.evals;
      }
      scored[c] = {cost, c};
      if (cost <= tol) {
        best.reached = true;
        best.radius = r;
        return best;
      }
    }
    std::sort(scored.begin(), scored.end());
    MatX new_mean = MatX::Zero(d, K);
    int used = 0;
    for (int e = 0; e < elites; ++e) {
      if (!std::isfinite(scored[e].first)) break;
      new_mean += pop[scored[e].second];
      ++used;
    }
    if (used == 0) continue;
    new_mean /= used;
    MatX var = MatX::Zero(d, K);
    for (int e = 0; e < used; ++e) {
      const MatX diff = pop[scored[e].second] - new_mean;
      var += diff.cwiseProduct(diff);
    }
    var /= used;
    mean = new_mean;
    // the exploration floor decays so late iterations can settle on the
    // precision the acceptance tolerance asks for
    floor = std::max(5e-4, floor * 0.85);
    stdev = (var.cwiseSqrt().array() + floor).matrix();
  }

  // polish: focused shrinking search around the best schedule found
  if (!best.reached && std::isfinite(best.miss) && best.miss <= 20.0 * tol &&
      best.evals < params.budget) {
    MatX center(d, K);
    for (int k = 0; k < K; ++k) center.col(k) = best.witness.segments[k].b;
    double sigma = 0.05;
    for (int iter = 0; iter < 40 && best.evals < params.budget; ++iter) {
      bool improved = false;
      for (int c = 0; c < 24; ++c) {
        MatX B = center;
        for (int i = 0; i < d; ++i)
          for (int k = 0; k < K; ++k) B(i, k) += sigma * rng.normal();
        clamp_columns(B);
        try {
          const ControlPath path = path_from_matrix(B, metric, r);
          const Vec end = simulate_path(basis, x, path, cfg);
          const double cost = miss_of(end);
          ++best.evals;
          if (cost < best.miss) {
            best.miss = cost;
            best.witness = path;
            center = B;
            improved = true;
          }
          if (cost <= tol) {
            best.reached = true;
            best.radius = r;
            return best;
          }
        } catch (const EscapedDomain&) {
          ++best.evals;
        }
      }
      sigma = improved ? sigma : std::max(1e-5, sigma * 0.6);
    }
  }
  best.radius = r;
  return best;
}

namespace {

bool lex_before(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

ControlPath reverse_path(const ControlPath& path) {
  ControlPath out = path;
  std::reverse(out.segments.begin(), out.segments.end());
  for (auto& seg : out.segments) seg.b = -seg.b;
  return out;
}

}  // namespace

ReachResult reach_upper(const CommutatorBasis& basis, const Vec& x, const Vec& y,
                        Metric metric, const IntegratorConfig& cfg,
                        std::uint64_t seed, SearchParams params) {
  if (x.size() != basis.dim || y.size() != basis.dim)
    throw ArgumentError("reach_upper: point dimension mismatch");
  if (!basis.domain_box.contains(x) || !basis.domain_box.contains(y))
    throw ArgumentError("reach_upper: points must lie in the domain box");

  // The distance is symmetric and a reversed schedule is admissible at the
  // same radius, so searching from the canonical endpoint order keeps the
  // estimate symmetric in (x, y).
  if (lex_before(y, x)) {
    ReachResult rev = reach_upper(basis, y, x, metric, cfg, seed, params);
    rev.witness = reverse_path(rev.witness);
    return rev;
  }

  ReachResult out;
  if ((x - y).norm() == 0.0) {
    out.reached = true;
    out.radius = 0.0;
    out.witness = path_from_matrix(MatX::Zero(control_dim(basis, metric), params.segments),
                                   metric, 0.0);
    return out;
  }

  long spent = 0;
  MatX warm;
  double warm_radius = 0.0;
  auto remember = [&](const ReachResult& res, double r) {
    if (!res.reached) return;
    const int K = static_cast<int>(res.witness.segments.size());
    warm.resize(res.witness.segments[0].b.size(), K);
    for (int k = 0; k < K; ++k) warm.col(k) = res.witness.segments[k].b;
    warm_radius = r;
  };
  auto decide = [&](double r, std::uint64_t salt) {
    SearchParams p = params;
    p.budget = params.budget - spent;
    MatX seed_mean;
    const MatX* ws = nullptr;
    if (warm.size() > 0 && warm_radius > 0.0) {
      seed_mean = warm;
      for (int i = 0; i < seed_mean.rows(); ++i) {
        const double l = metric == Metric::rho ? basis.lengths[i] : 1.0;
        seed_mean.row(i) *= std::pow(warm_radius / r, l);
      }
      clamp_columns(seed_mean);
      ws = &seed_mean;
    }
    ReachResult res = reach_decide(basis, x, y, r, metric, cfg, seed ^ salt, p, ws);
    spent += res.evals;
    remember(res, r);
    return res;
  };

  // Expand until feasible.  The slowest admissible speed at radius r is
  // r^s for the degree-weighted metric, so reachability can switch on well
  // above the Euclidean gap; an obstruction is only declared once the miss
  // stagnates while the speed capacity already dwarfs it.
  const double eff = metric == Metric::rho ? basis.step : 1.0;
  const double r_init = std::max((x - y).norm(), 1e-3);
  const double r_cap = 64.0 * r_init;  // a certificate beyond this is vacuous
  double r_hi = r_init;
  double r_lo = 0.0;
  ReachResult hi_res;
  bool feasible = false;
  double prev_miss = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  for (int round = 0; round < 18 && r_hi <= r_cap; ++round) {
    hi_res = decide(r_hi, 0x1000 + round);
    out.evals = spent;
    if (hi_res.reached) {
      feasible = true;
      break;
    }
    stagnant = hi_res.miss > 0.9 * prev_miss ? stagnant + 1 : 0;
    const double capacity = std::pow(std::min(r_hi, 1.0), eff) * std::max(r_hi, 1.0);
    if (stagnant >= 3 && capacity >= 20.0 * hi_res.miss &&
        hi_res.miss > 2.0 * params.reach_tol * r_hi) {
      out.reached = false;
      out.miss = hi_res.miss;
      return out;
    }
    prev_miss = hi_res.miss;
    r_lo = r_hi;
    r_hi *= 2.0;
    if (spent >= params.budget) break;
  }
  if (!feasible) {
    out.reached = false;
    out.miss = hi_res.miss;
    return out;
  }

  out = hi_res;
  out.evals = spent;

  // Bisect down to ~1% of the certified radius.
  for (int round = 0; round < 12 && spent < params.budget; ++round) {
    if (r_hi - r_lo <= 0.01 * r_hi) break;
    const double mid = 0.5 * (r_lo + r_hi);
    ReachResult res = decide(mid, 0x2000 + round);
    if (res.reached) {
      r_hi = mid;
      out = res;
      out.evals = spent;
    } else {
      r_lo = mid;
    }
  }
  out.radius = r_hi;
  out.evals = spent;
  return out;
}

// --- ball sampling ------------------------------------------------------------

BallCloud sample_ball(const CommutatorBasis& basis, const Vec& x, double r,
                      Metric metric, int N, std::uint64_t seed,
                      const IntegratorConfig& cfg, int segments) {
  if (N < 1) throw ArgumentError("sample_ball: N must be >= 1");
  if (!(r >= 0.0)) throw ArgumentError("sample_ball: radius must be >= 0");
  BallCloud cloud;
  cloud.center = x;
  cloud.radius = r;
  cloud.metric = metric;
  cloud.points.resize(N);

  const int d = control_dim(basis, metric);
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t i) {
    for (int retry = 0; retry < 50; ++retry) {
      Rng rng(seed, i * 64 + retry);
      ControlPath path;
      path.degree_weights = metric == Metric::rho;
      path.radius = r;
      for (int k = 0; k < segments; ++k) {
        ControlPath::Segment s;
        s.b = VecX(rng.in_unit_ball(d));
        s.duration = 1.0 / segments;
        path.segments.push_back(std::move(s));
      }
      try {
        const Vec end = simulate_path(basis, x, path, cfg);
        cloud.points[i] = {end, std::move(path)};
        return;
      } catch (const EscapedDomain&) {
        continue;  // resample
      }
    }
    throw Error("sample_ball: retries exhausted (trajectories keep escaping)");
  });
  return cloud;
}

// --- ball-box inclusion probes --------------------------------------------------

BallBoxReport ball_box_check(const CommutatorBasis& basis, const TupleIndex& I,
                             const Vec& x, double r, double eps, int N,
                             std::uint64_t seed, const IntegratorConfig& cfg,
                             double eta2, int outer_grid) {
  I.validate(basis);
  if (!(eps >= 0.0)) throw ArgumentError("ball_box_check: eps must be >= 0");
  BallBoxReport rep;
  rep.eta2 = eta2;
  if (eps == 0.0) return rep;  // both inclusions degenerate to {x}

  const int s = basis.step;

  // (a) inner: largest c whose rho-ball at c eps^s r lifts entirely into
  // Q_I(eps).  The 0.85 scan factor keeps neighboring probes within the
  // cross-seed stability tolerance.
  if (N > 0) {
    struct Probe {
      bool ok = false;
      double max_bn = 0.0, max_res = 0.0;
      std::vector<Vec> failures;
    };
    int scan_count = 0;
    auto probe = [&](double c) {
      const double radius = c * std::pow(eps, s) * r;
      BallCloud cloud = sample_ball(basis, x, radius, Metric::rho, N,
                                    seed + 17 * scan_count++, cfg);
      Probe pr;
      std::atomic<bool> all_ok{true};
      std::mutex m;
      parallel_for(cloud.points.size(), [&](std::size_t i) {
        if (!all_ok.load()) return;  // fail fast during the scan
        try {
          auto lift = lift_path(basis, I, x, r, cloud.points[i].second, eps, cfg);
          std::lock_guard<std::mutex> lk(m);
          pr.max_bn = std::max(pr.max_bn, lift.max_box_norm);
          pr.max_res = std::max(pr.max_res, lift.max_tracking_residual);
          if (lift.max_box_norm > eps || lift.max_tracking_residual > 1e-6 * r) {
            all_ok = false;
            pr.failures.push_back(cloud.points[i].first);
          }
        } catch (const Error&) {
          std::lock_guard<std::mutex> lk(m);
          all_ok = false;
          pr.failures.push_back(cloud.points[i].first);
        }
      });
      pr.ok = all_ok.load();
      return pr;
    };

    double c = 1.0;
    Probe pr = probe(c);
    if (pr.ok) {
      // grow until the lifts leave the box, keep the last full success
      while (scan_count < 36 && c < 16.0) {
        const double next = c / 0.85;
        Probe up = probe(next);
        if (!up.ok) {
          rep.unliftable.clear();
          break;
        }
        c = next;
        pr = up;
      }
    } else {
      while (scan_count < 36) {
        c *= 0.85;
        Probe down = probe(c);
        if (down.ok) {
          pr = down;
          break;
        }
        pr = down;
      }
      rep.unliftable = pr.failures;
    }
    if (pr.ok) {
      rep.inner_c = c;
      rep.inner_samples = N;
      rep.inner_max_box_norm = pr.max_bn;
      rep.inner_max_residual = pr.max_res;
      rep.unliftable.clear();
    }
  }

  // (b) outer: rho-distance bounds of box and Phi images.
  const int p = I.p();
  if (outer_grid > 0) {
    Rng rng(seed, 0xabcdef);
    std::vector<Vec> hs;
    for (int k = 0; k < p; ++k) {
      for (double sgn : {-1.0, 1.0}) {
        Vec h = Vec::Zero(p);
        h[k] = sgn * std::pow(eps, basis.lengths[I.idx[k]]);
        hs.push_back(h);
      }
    }
    while (static_cast<int>(hs.size()) < outer_grid) {
      Vec h(p);
      for (int k = 0; k < p; ++k)
        h[k] = rng.uniform(-1.0, 1.0) * std::pow(eps, basis.lengths[I.idx[k]]);
      hs.push_back(h);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const Vec yimg = map_E(basis, I, x, r, hs[i], cfg);
      auto res = reach_upper(basis, x, yimg, Metric::rho, cfg, seed + 31 * i);
      if (!res.reached) {
        // falsifies the inclusion at this probe; reported, not thrown
        worst = std::numeric_limits<double>::infinity();
        rep.outer_unreached.push_back(yimg);
        continue;
      }
      worst = std::max(worst, res.radius / (std::pow(eps, 1.0 / s) * r));
    }
    rep.outer_C_box = worst;
  }

  if (eta2 > 0.0 && outer_grid > 0) {
    Rng rng(seed, 0xfedcba);
    double worst_phi = 0.0;
    std::vector<Vec> us;
    for (int k = 0; k < p; ++k) {
      for (double sgn : {-1.0, 1.0}) {
        Vec u = Vec::Zero(p);
        u[k] = sgn * eta2;
        us.push_back(u);
      }
    }
    const int extras = std::max(0, outer_grid - 2 * p);
    for (int extra = 0; extra < extras; ++extra)
      us.push_back(Vec(eta2 * rng.in_unit_ball(p)));
    for (std::size_t i = 0; i < us.size(); ++i) {
      const Vec yimg = map_Phi(basis, I, x, r, us[i], cfg);
      auto res = reach_upper(basis, x, yimg, Metric::rho, cfg, seed + 47 * i);
      if (!res.reached) {
        worst_phi = std::numeric_limits<double>::infinity();
        rep.outer_unreached.push_back(yimg);
        continue;
      }
      worst_phi = std::max(worst_phi, res.radius / (std::pow(eta2, 1.0 / s) * r));
    }
    rep.outer_C_phi = worst_phi;
  }
  return rep;
}

}  // namespace ccgeo
