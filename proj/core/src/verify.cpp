#include "ccgeo/verify.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ccgeo/families.hpp"
#include "ccgeo/measures.hpp"

namespace ccgeo {

namespace {

struct Ctx {
  BuiltinFamily bf;
  CommutatorBasis basis;
  IntegratorConfig cfg;    // default tolerances, domain guard on
  IntegratorConfig tight;  // for finite-difference Jacobians of maps
};

Ctx make_ctx(const std::string& name) {
  Ctx c;
  c.bf = make_builtin(name);
  c.basis = generate_commutators(c.bf.family);
  c.cfg.domain = c.bf.family.domain_box;
  c.tight = c.cfg;
  c.tight.rel_tol = 1e-12;
  c.tight.abs_tol = 1e-13;
  return c;
}

double acceptance_radius(const std::string& name) {
  if (name == "euclid2in3") return 0.5;
  if (name == "shear") return 0.25;
  return 0.1;
}

Vec jitter_point(const Ctx& c, Rng& rng, double scale = 0.15) {
  Vec x = c.bf.base_point;
  for (int i = 0; i < x.size(); ++i) x[i] += scale * rng.uniform(-1.0, 1.0);
  return x;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// --- 1: numeric vs symbolic brackets ---------------------------------------

CriterionResult criterion_brackets(std::uint64_t seed) {
  CriterionResult res{1, "bracket-consistency", false, 0.0, "", 0.0};
  double worst = 0.0;
  std::string worst_at;
  for (const std::string name : {"heisenberg", "grushin", "martinet", "shear"}) {
    Ctx c = make_ctx(name);
    const auto numeric = generate_commutators(c.bf.family, BracketMode::Numeric);
    Rng rng(seed, 0x101);
    for (int trial = 0; trial < 100; ++trial) {
      Vec x = c.bf.base_point;
      for (int i = 0; i < x.size(); ++i) x[i] += 0.8 * rng.uniform(-1.0, 1.0);
      for (int j = 0; j < c.basis.q(); ++j) {
        const Vec sym = c.basis.Y(j).coeffs(x);
        const Vec num = numeric.Y(j).coeffs(x);
        const double rel = (num - sym).norm() / std::max(sym.norm(), 1e-6);
        if (rel > worst) {
          worst = rel;
          worst_at = name + " word " + std::to_string(j + 1);
        }
      }
    }
  }
  res.measured = worst;
  res.pass = worst <= 1e-6;
  res.details = "max relative bracket error " + fmt(worst) + " at " + worst_at +
                " (tolerance 1e-6)";
  return res;
}

// --- 2: first-order rate of the approximate exponential ---------------------

CriterionResult criterion_exp_ap(std::uint64_t seed) {
  CriterionResult res{2, "exp-ap-order", false, 0.0, "", 0.0};
  double worst_margin = std::numeric_limits<double>::infinity();
  std::string worst_at = "(all below noise floor)";
  int tested = 0;
  for (const auto& name : builtin_names()) {
    Ctx c = make_ctx(name);
    Rng rng(seed, 0x202);
    const Vec x1 = c.bf.base_point;
    const Vec x2 = jitter_point(c, rng);
    for (int j = 0; j < c.basis.q(); ++j) {
      const int l = c.basis.lengths[j];
      const double target = 1.0 + 1.0 / l - 0.15;
      for (const Vec& x : {x1, x2}) {
        const Vec g = c.basis.Y(j).coeffs(x);
        std::vector<double> hs, rem;
        for (double e = -2.0; e >= -5.01; e -= 0.5) {
          const double h = std::pow(10.0, e);
          for (double sgn : {1.0, -1.0}) {
            const Vec img =
                approx_exponential(c.basis, c.basis.Y(j).word, sgn * h, x, c.tight);
            hs.push_back(h);
            rem.push_back((img - x - sgn * h * g).norm());
          }
        }
        const double floor = 1e-11 * (1.0 + x.norm());
        const double slope = loglog_slope(hs, rem, floor);
        if (std::isnan(slope)) continue;  // identity up to noise: vacuous
        ++tested;
        const double margin = slope - target;
        if (margin < worst_margin) {
          worst_margin = margin;
          worst_at = name + " word " + std::to_string(j + 1) + " (slope " +
                     fmt(slope) + ", target " + fmt(target) + ")";
        }
      }
    }
  }
  res.measured = worst_margin;
  res.pass = tested == 0 || worst_margin >= 0.0;
  res.details = "worst slope margin " + fmt(worst_margin) + " at " + worst_at +
                "; " + std::to_string(tested) + " word/point fits";
  return res;
}

// --- 3: chi bound and frame reconstruction ----------------------------------

CriterionResult criterion_chi(std::uint64_t) {
  CriterionResult res{3, "chi-bound", false, 0.0, "", 0.0};
  double worst_chi0 = 0.0, worst_resid = 0.0, worst_fit = 0.0;
  for (const std::string name : {"heisenberg", "grushin"}) {
    Ctx c = make_ctx(name);
    const double r = acceptance_radius(name);
    const auto sel = select_maximal_tuple(c.basis, c.bf.base_point, r);
    const TupleIndex I = sel.I;
    const int p = I.p();
    const double eps0 = c.bf.guards.eps0;

    std::vector<Vec> grid;
    {
      std::vector<int> digit(p, 0);
      const int g = 7;
      while (true) {
        Vec h(p);
        for (int k = 0; k < p; ++k) {
          const double half = std::pow(eps0, c.basis.lengths[I.idx[k]]);
          h[k] = -half + 2.0 * half * digit[k] / (g - 1);
        }
        grid.push_back(h);
        int k = p - 1;
        while (k >= 0 && digit[k] == g - 1) digit[k--] = 0;
        if (k < 0) break;
        ++digit[k];
      }
    }
    std::vector<double> chin(grid.size()), bn(grid.size()), rel(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
      const auto cr = chi_matrix(c.basis, I, c.bf.base_point, r, grid[i], c.tight);
      chin[i] = operator_norm(cr.chi);
      bn[i] = box_norm(grid[i], I, c.basis);
      rel[i] = cr.residual_rel;
    });
    for (std::size_t i = 0; i < grid.size(); ++i) {
      worst_resid = std::max(worst_resid, rel[i]);
      if (bn[i] < 1e-12) {
        worst_chi0 = std::max(worst_chi0, chin[i]);
      } else {
        worst_fit = std::max(worst_fit, chin[i] / bn[i]);
      }
    }
  }
  res.measured = worst_fit;
  res.pass = worst_chi0 <= 1e-3 && worst_resid <= 1e-4 && std::isfinite(worst_fit);
  res.details = "fitted C " + fmt(worst_fit) + ", |chi(0)| " + fmt(worst_chi0) +
                " (<= 1e-3), frame residual " + fmt(worst_resid) + " (<= 1e-4)";
  return res;
}

// --- 4: A-ode pushforward ----------------------------------------------------

CriterionResult criterion_a_ode(std::uint64_t seed) {
  CriterionResult res{4, "a-ode-pushforward", false, 0.0, "", 0.0};
  Ctx c = make_ctx("heisenberg");
  const double r = 0.1;
  const auto sel = select_maximal_tuple(c.basis, c.bf.base_point, r);
  const TupleIndex I = sel.I;
  const int p = I.p();
  Rng rng(seed, 0x404);

  double worst = 0.0;
  for (int ray = 0; ray < 5; ++ray) {
    const Vec omega = rng.on_sphere(p);
    std::vector<double> rhos;
    for (int k = 1; k <= 10; ++k) rhos.push_back(c.bf.guards.eta1 * k / 10.0);
    const auto sol = solve_A_ode(c.basis, I, c.bf.base_point, r, omega,
                                 rhos.back(), c.cfg, rhos);
    for (std::size_t s = 1; s < sol.rhos.size(); ++s) {
      const double rho = sol.rhos[s];
      if (rho <= 0.0) continue;
      const Vec u = rho * omega;
      const Mat dPhi = jacobian_of_map(
          [&](const Vec& uu) {
            return map_Phi(c.basis, I, c.bf.base_point, r, uu, c.tight);
          },
          u, 1e-6);
      const Vec y = sol.phi[s];
      for (int j = 0; j < p; ++j) {
        Vec zj = Vec::Zero(p);
        zj[j] = 1.0;
        zj += sol.A[s].row(j).transpose();
        const Vec push = dPhi * zj;
        const Vec want =
            std::pow(r, c.basis.lengths[I.idx[j]]) * c.basis.Y(I.idx[j]).coeffs(y);
        worst = std::max(worst, (push - want).norm() / want.norm());
      }
    }
  }

  // commuting constant fields: A vanishes identically
  Ctx e = make_ctx("euclid2in3");
  const auto esel = select_maximal_tuple(e.basis, e.bf.base_point, 0.5);
  double eworst = 0.0;
  Rng erng(seed, 0x405);
  for (int k = 0; k < 5; ++k) {
    const Vec u = Vec(0.3 * erng.in_unit_ball(esel.I.p()));
    eworst = std::max(eworst,
                      A_at(e.basis, esel.I, e.bf.base_point, 0.5, u, e.cfg).norm());
  }

  res.measured = worst;
  res.pass = worst <= 1e-3 && eworst <= 1e-12;
  res.details = "max pushforward mismatch " + fmt(worst) +
                " (<= 1e-3); euclid |A| " + fmt(eworst) + " (<= 1e-12)";
  return res;
}

// --- 5: Psi bi-Lipschitz ------------------------------------------------------

CriterionResult criterion_psi(std::uint64_t seed) {
  CriterionResult res{5, "psi-bilipschitz", false, 0.0, "", 0.0};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::string worst;
  for (const auto& name : builtin_names()) {
    Ctx c = make_ctx(name);
    const double r = acceptance_radius(name);
    const auto sel = select_maximal_tuple(c.basis, c.bf.base_point, r);
    const int p = sel.I.p();
    const double eta2 = c.bf.guards.eta2;
    Rng rng(seed, 0x505);
    const int pairs = 200;
    std::vector<double> ratios(pairs);
    std::vector<std::array<Vec, 3>> draws(pairs);
    for (int k = 0; k < pairs; ++k) {
      Vec u1 = Vec(eta2 * rng.in_unit_ball(p));
      Vec v(p), vb(p);
      do {
        v = Vec(eta2 * rng.in_unit_ball(p));
        vb = Vec(eta2 * rng.in_unit_ball(p));
      } while ((v - vb).norm() < 1e-3 * eta2);
      draws[k] = {u1, v, vb};
    }
    parallel_for(pairs, [&](std::size_t k) {
      const auto& [u1, v, vb] = draws[k];
      const Vec a = map_Psi(c.basis, sel.I, c.bf.base_point, r, u1, v, c.cfg);
      const Vec b = map_Psi(c.basis, sel.I, c.bf.base_point, r, u1, vb, c.cfg);
      ratios[k] = (a - b).norm() / (v - vb).norm();
    });
    for (double rt : ratios) {
      if (rt < lo) {
        lo = rt;
        worst = name;
      }
      if (rt > hi) {
        hi = rt;
        worst = name;
      }
    }
  }
  res.measured = std::max(hi, 1.0 / lo);
  res.pass = lo >= 0.5 && hi <= 2.0;
  res.details = "ratio range [" + fmt(lo) + ", " + fmt(hi) +
                "] within [0.5, 2]; extremal family " + worst;
  return res;
}

// --- 6: inner ball-box inclusion ----------------------------------------------

CriterionResult criterion_inner(std::uint64_t seed) {
  CriterionResult res{6, "ballbox-inner", false, 0.0, "", 0.0};
  bool ok = true;
  std::ostringstream det;
  double headline = 0.0;
  for (const std::string name : {"heisenberg", "grushin"}) {
    Ctx c = make_ctx(name);
    for (double r : {0.05, 0.1}) {
      const auto sel = select_maximal_tuple(c.basis, c.bf.base_point, r);
      double cs[2];
      for (int sdx = 0; sdx < 2; ++sdx) {
        const auto rep = ball_box_check(c.basis, sel.I, c.bf.base_point, r, 0.3,
                                        200, seed + sdx, c.cfg, 0.0, 0);
        cs[sdx] = rep.inner_c;
        if (rep.inner_c <= 0.0 || rep.inner_max_residual > 1e-6 * r) ok = false;
      }
      const double spread = std::abs(cs[0] - cs[1]) / std::max(cs[0], cs[1]);
      if (spread > 0.25) ok = false;
      headline = std::max(headline, cs[0]);
      det << name << " r=" << r << " c=" << fmt(cs[0]) << "/" << fmt(cs[1]) << "; ";
    }
  }
  res.measured = headline;
  res.pass = ok;
  res.details = "inner constants (two seeds): " + det.str();
  return res;
}

// --- 7: outer ball-box bound ----------------------------------------------------

CriterionResult criterion_outer(std::uint64_t seed) {
  CriterionResult res{7, "ballbox-outer", false, 0.0, "", 0.0};
  bool ok = true;
  double headline = 0.0;
  std::ostringstream det;
  for (const std::string name : {"euclid2in3", "heisenberg", "grushin"}) {
    Ctx c = make_ctx(name);
    const double r = acceptance_radius(name);
    const auto sel = select_maximal_tuple(c.basis, c.bf.base_point, r);
    double cboxs[2], cphis[2];
    for (int sdx = 0; sdx < 2; ++sdx) {
      const auto rep =
          ball_box_check(c.basis, sel.I, c.bf.base_point, r, 0.3, 0,
                         seed + 100 * sdx, c.cfg, c.bf.guards.eta2, 10);
      cboxs[sdx] = rep.outer_C_box;
      cphis[sdx] = rep.outer_C_phi;
      if (!std::isfinite(rep.outer_C_box) || rep.outer_C_box <= 0.0) ok = false;
      if (!std::isfinite(rep.outer_C_phi) || rep.outer_C_phi <= 0.0) ok = false;
    }
    if (std::abs(cboxs[0] - cboxs[1]) > 0.25 * std::max(cboxs[0], cboxs[1])) ok = false;
    if (std::abs(cphis[0] - cphis[1]) > 0.25 * std::max(cphis[0], cphis[1])) ok = false;
    headline = std::max({headline, cboxs[0], cphis[0]});
    det << name << " C_box=" << fmt(cboxs[0]) << "/" << fmt(cboxs[1])
        << " C_phi=" << fmt(cphis[0]) << "/" << fmt(cphis[1]) << "; ";
  }
  res.measured = headline;
  res.pass = ok;
  res.details = "outer constants (two seeds): " + det.str();
  return res;
}

// --- 8: injectivity --------------------------------------------------------------

CriterionResult criterion_injectivity(std::uint64_t) {
  CriterionResult res{8, "injectivity", false, 0.0, "", 0.0};
  bool ok = true;
  double worst_dev = 0.0;
  std::ostringstream det;
  for (const auto& name : builtin_names()) {
    Ctx c = make_ctx(name);
    const double r = acceptance_radius(name);
    const auto sel = select_maximal_tuple(c.basis, c.bf.base_point, r);
    try {
      const auto rep =
          injectivity_check_E(c.basis, sel.I, c.bf.base_point, r,
                              c.bf.guards.eps1, 9, c.cfg, c.bf.guards.eta3);
      if (!rep.collision_free || !rep.lift_consistent) ok = false;
      worst_dev = std::max(worst_dev, rep.lift_max_dev);
      det << name << " ratio " << fmt(rep.min_pair_ratio) << " dtheta-dev "
          << fmt(rep.lift_max_dev) << "; ";
    } catch (const NotInjective& e) {
      ok = false;
      det << name << " COLLISION (" << e.what() << "); ";
    }
  }
  res.measured = worst_dev;
  res.pass = ok && worst_dev <= 0.5;
  res.details = "no grid collisions; max |dtheta - I| " + fmt(worst_dev) +
                " (<= 0.5): " + det.str();
  return res;
}

// --- 9: doubling -------------------------------------------------------------------

CriterionResult criterion_doubling(std::uint64_t seed) {
  CriterionResult res{9, "doubling", false, 0.0, "", 0.0};
  struct Row {
    const char* family;
    double r, want, tol;
  };
  const Row rows[] = {{"euclid2in3", 0.3, 4.0, 0.10},
                      {"heisenberg", 0.1, 16.0, 0.15},
                      {"grushin", 0.1, 8.0, 0.15}};
  bool ok = true;
  std::ostringstream det;
  double worst_rel = 0.0;
  for (const auto& row : rows) {
    Ctx c = make_ctx(row.family);
    const auto rep = doubling_ratio(c.basis, c.bf.base_point, row.r, Metric::cc,
                                    20000, seed, c.cfg, c.bf.guards.cover_eps);
    const double rel = std::abs(rep.ratio - row.want) / row.want;
    worst_rel = std::max(worst_rel, rel);
    if (rel > row.tol) ok = false;
    det << row.family << " ratio " << fmt(rep.ratio) << " (want " << row.want
        << " +- " << 100 * row.tol << "%); ";
  }
  res.measured = worst_rel;
  res.pass = ok;
  res.details = det.str();
  return res;
}

// --- 10: Poincare ------------------------------------------------------------------

CriterionResult criterion_poincare(std::uint64_t seed) {
  CriterionResult res{10, "poincare", false, 0.0, "", 0.0};
  bool ok = true;
  double worst = 0.0;
  std::ostringstream det;
  for (const auto& name : builtin_names()) {
    Ctx c = make_ctx(name);
    const auto suite = default_test_suite(c.bf.family.dim, seed ^ 0xbeef);
    for (double r : {0.1, 0.2}) {
      double maxes[2];
      for (int sdx = 0; sdx < 2; ++sdx) {
        const auto rep =
            poincare_ratio(c.bf.family, c.basis, c.bf.base_point, r, suite, 5000,
                           seed + 7 * sdx, c.cfg, 3.0, c.bf.guards.cover_eps);
        maxes[sdx] = rep.max_ratio;
        for (const auto& tf : rep.rows) {
          if (tf.flagged) ok = false;
          if (tf.name == "const" && tf.ratio != 0.0) ok = false;
        }
        if (!(rep.max_ratio <= 10.0)) ok = false;
      }
      if (std::abs(maxes[0] - maxes[1]) > 0.25 * std::max(maxes[0], maxes[1]))
        ok = false;
      worst = std::max({worst, maxes[0], maxes[1]});
      det << name << " r=" << r << " max " << fmt(maxes[0]) << "/" << fmt(maxes[1])
          << "; ";
    }
  }
  res.measured = worst;
  res.pass = ok;
  res.details = "max LHS/RHS over suite (two seeds): " + det.str();
  return res;
}

// --- 11: orbit confinement -----------------------------------------------------------

CriterionResult criterion_orbit(std::uint64_t seed) {
  CriterionResult res{11, "orbit-confinement", false, 0.0, "", 0.0};
  bool ok = true;
  double worst_dev = 0.0;
  std::ostringstream det;
  for (const std::string name : {"euclid2in3", "shear"}) {
    Ctx c = make_ctx(name);
    const Vec x = c.bf.base_point;
    const double inv = x[2];  // third coordinate is flow-invariant
    const double r = acceptance_radius(name);

    for (Metric m : {Metric::cc, Metric::rho}) {
      const auto cloud = sample_ball(c.basis, x, r, m, 200, seed, c.cfg);
      for (const auto& [pt, path] : cloud.points)
        worst_dev = std::max(worst_dev, std::abs(pt[2] - inv));
    }

    // lifted paths track curves that stay on the orbit
    const auto sel = select_maximal_tuple(c.basis, x, r);
    const auto cloud = sample_ball(c.basis, x, 0.25 * r, Metric::rho, 20,
                                   seed ^ 0x77, c.cfg);
    for (const auto& [pt, path] : cloud.points) {
      const auto lift = lift_path(c.basis, sel.I, x, r, path, 0.9, c.cfg, 400);
      const Vec end = map_E(c.basis, sel.I, x, r, lift.theta.back(), c.cfg);
      worst_dev = std::max(worst_dev, std::abs(end[2] - inv));
    }

    // cross-orbit targets stay unreached
    Vec y = x;
    y[2] += 0.5;
    SearchParams sp;
    sp.budget = 30000;
    const auto rr = reach_upper(c.basis, x, y, Metric::cc, c.cfg, seed, sp);
    if (rr.reached) ok = false;
    det << name << " dev " << fmt(worst_dev) << (rr.reached ? " REACHED-bad" : "")
        << "; ";
  }
  res.measured = worst_dev;
  res.pass = ok && worst_dev <= 1e-8;
  res.details = "max invariant-coordinate drift " + fmt(worst_dev) +
                " (<= 1e-8); cross-orbit unreached: " + det.str();
  return res;
}

// --- 12: Neumann bound ---------------------------------------------------------------

CriterionResult criterion_neumann(std::uint64_t seed) {
  CriterionResult res{12, "neumann-bound", false, 0.0, "", 0.0};
  Rng rng(seed, 0xc0c);
  double worst_slack = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = 1 + static_cast<int>(rng.next() % 5);
    Mat chi(p, p), b(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        chi(i, j) = rng.normal();
        b(i, j) = rng.normal();
      }
    const double nc = operator_norm(chi);
    if (nc > 0.0) chi *= (0.5 * rng.uniform()) / nc;
    const double nb = operator_norm(b);
    if (nb > 0.0) b *= (2.0 * rng.uniform()) / nb;
    const auto v = neumann_bound_check(chi, b);
    if (!v.ok) ok = false;
    worst_slack = std::min(worst_slack, v.rhs - v.lhs);
  }
  res.measured = worst_slack;
  res.pass = ok;
  res.details = "1000 random trials, min slack rhs-lhs " + fmt(worst_slack);
  return res;
}

}  // namespace

std::vector<std::pair<int, std::string>> criterion_catalog() {
  return {{1, "bracket-consistency"}, {2, "exp-ap-order"},
          {3, "chi-bound"},           {4, "a-ode-pushforward"},
          {5, "psi-bilipschitz"},     {6, "ballbox-inner"},
          {7, "ballbox-outer"},       {8, "injectivity"},
          {9, "doubling"},            {10, "poincare"},
          {11, "orbit-confinement"},  {12, "neumann-bound"}};
}

CriterionResult run_criterion(int id, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult res;
  switch (id) {
    case 1: res = criterion_brackets(seed); break;
    case 2: res = criterion_exp_ap(seed); break;
    case 3: res = criterion_chi(seed); break;
    case 4: res = criterion_a_ode(seed); break;
    case 5: res = criterion_psi(seed); break;
    case 6: res = criterion_inner(seed); break;
    case 7: res = criterion_outer(seed); break;
    case 8: res = criterion_injectivity(seed); break;
    case 9: res = criterion_doubling(seed); break;
    case 10: res = criterion_poincare(seed); break;
    case 11: res = criterion_orbit(seed); break;
    case 12: res = criterion_neumann(seed); break;
    default: throw ArgumentError("unknown criterion id " + std::to_string(id));
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
  return res;
}

SuiteResult run_suite(std::uint64_t seed, const std::string& only,
                      const std::function<void(const CriterionResult&)>& on_result) {
  SuiteResult out;
  out.all_pass = true;
  for (const auto& [id, name] : criterion_catalog()) {
    if (!only.empty() && name.find(only) == std::string::npos) continue;
    CriterionResult res = run_criterion(id, seed);
    out.all_pass = out.all_pass && res.pass;
    if (on_result) on_result(res);
    out.results.push_back(std::move(res));
  }
  if (out.results.empty())
    throw ArgumentError("no criterion matches \"" + only + "\"");
  return out;
}

}  // namespace ccgeo
