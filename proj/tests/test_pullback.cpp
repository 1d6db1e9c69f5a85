#include <doctest.h>

#include "ccgeo/families.hpp"
#include "ccgeo/metrics.hpp"

using namespace ccgeo;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

struct Fixture {
  BuiltinFamily bf;
  CommutatorBasis basis;
  IntegratorConfig cfg;
  IntegratorConfig tight;
  explicit Fixture(const char* name) : bf(make_builtin(name)) {
    basis = generate_commutators(bf.family);
    cfg.domain = bf.family.domain_box;
    tight = cfg;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-13;
  }
};

ControlPath constant_path(const VecX& b, double radius, bool degree_weights) {
  ControlPath p;
  p.degree_weights = degree_weights;
  p.radius = radius;
  ControlPath::Segment s;
  s.b = b;
  s.duration = 1.0;
  p.segments.push_back(std::move(s));
  return p;
}

}  // namespace

TEST_CASE("chi: commuting constant fields give chi = 0") {
  Fixture f("euclid2in3");
  const TupleIndex I({0, 1});
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    const Vec h = Vec(0.5 * rng.in_unit_ball(2));
    const auto cr = chi_matrix(f.basis, I, f.bf.base_point, 0.5, h, f.tight);
    CHECK(operator_norm(cr.chi) < 1e-7);
    CHECK(cr.residual_rel < 1e-7);
  }
}

TEST_CASE("chi: vanishes at h = 0 and grows linearly in the box norm") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto sel = select_maximal_tuple(f.basis, f.bf.base_point, r);
  const auto at0 =
      chi_matrix(f.basis, sel.I, f.bf.base_point, r, v3(0, 0, 0), f.tight);
  CHECK(operator_norm(at0.chi) <= 1e-3);
  CHECK(at0.residual_rel <= 1e-4);

  Rng rng(11);
  std::vector<double> bns, chis;
  for (int t = 0; t < 24; ++t) {
    Vec h(3);
    for (int k = 0; k < 3; ++k)
      h[k] = rng.uniform(-1.0, 1.0) *
             std::pow(f.bf.guards.eps0, f.basis.lengths[sel.I.idx[k]]);
    const auto cr = chi_matrix(f.basis, sel.I, f.bf.base_point, r, h, f.tight);
    CHECK(cr.residual_rel <= 1e-4);
    bns.push_back(box_norm(h, sel.I, f.basis));
    chis.push_back(operator_norm(cr.chi));
  }
  const double slope = loglog_slope(bns, chis, 1e-9);
  CHECK(slope >= 0.9);
}

TEST_CASE("chi: fitted linear constant is stable under grid refinement") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto sel = select_maximal_tuple(f.basis, f.bf.base_point, r);
  auto fit_c = [&](int npts, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < npts; ++t) {
      Vec h(3);
      for (int k = 0; k < 3; ++k)
        h[k] = rng.uniform(-1.0, 1.0) *
               std::pow(f.bf.guards.eps0, f.basis.lengths[sel.I.idx[k]]);
      const double bn = box_norm(h, sel.I, f.basis);
      if (bn < 1e-3) continue;
      const auto cr = chi_matrix(f.basis, sel.I, f.bf.base_point, r, h, f.tight);
      worst = std::max(worst, operator_norm(cr.chi) / bn);
    }
    return worst;
  };
  const double coarse = fit_c(30, 7);
  const double fine = fit_c(90, 7);  // superset of the coarse stream
  CHECK(std::abs(fine - coarse) <= 0.2 * std::max(fine, coarse));
}

TEST_CASE("frame expansion closure reports the same values") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto sel = select_maximal_tuple(f.basis, f.bf.base_point, r);
  const auto fe = make_frame_expansion(f.basis, sel.I, f.bf.base_point, r, f.tight);
  const Vec h = v3(0.05, -0.04, 0.002);
  const auto a = fe.chi(h);
  const auto b = chi_matrix(f.basis, sel.I, f.bf.base_point, r, h, f.tight);
  CHECK((a.chi - b.chi).norm() == doctest::Approx(0.0));
}

TEST_CASE("rescaled constants: zero for commuting fields, exact for Heisenberg") {
  Fixture e("euclid2in3");
  const auto Ie = select_maximal_tuple(e.basis, e.bf.base_point, 0.5).I;
  auto rce = rescaled_constants_on_ball(e.basis, Ie, e.bf.base_point, 0.5,
                                        {e.bf.base_point});
  CHECK(rce.sup_c == doctest::Approx(0.0));

  Fixture h("heisenberg");
  const double r = 0.1;
  const auto I = select_maximal_tuple(h.basis, h.bf.base_point, r).I;
  std::vector<Vec> sample = {h.bf.base_point, v3(0.001, -0.002, 0.0005)};
  auto rc = rescaled_constants_on_ball(h.basis, I, h.bf.base_point, r, sample);
  const Vec c12 = rc.ctilde_pair(0, 1, h.bf.base_point);
  CHECK(c12[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(c12[1] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(c12[2] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rc.maximality_violations.empty());

  // reconstruction on the sample: [Yt_i, Yt_j] = sum_k ctilde Yt_{i_k}
  for (const Vec& y : sample) {
    for (int i = 0; i < h.basis.q(); ++i) {
      for (int j = 0; j < h.basis.q(); ++j) {
        if (i == j) continue;
        const Vec lhs = std::pow(r, h.basis.lengths[i] + h.basis.lengths[j]) *
                        bracket(h.basis.Y(i), h.basis.Y(j), y);
        const Vec c = rc.ctilde_pair(i, j, y);
        Vec rhs = Vec::Zero(3);
        for (int k = 0; k < I.p(); ++k)
          rhs += c[k] * std::pow(r, h.basis.lengths[I.idx[k]]) *
                 h.basis.Y(I.idx[k]).coeffs(y);
        CHECK((lhs - rhs).norm() <= 1e-6 * (1.0 + lhs.norm()));
      }
    }
  }
}

TEST_CASE("A ode: identically zero for commuting fields") {
  Fixture e("euclid2in3");
  const auto I = select_maximal_tuple(e.basis, e.bf.base_point, 0.5).I;
  const Vec u = v2(0.2, -0.3);
  CHECK(A_at(e.basis, I, e.bf.base_point, 0.5, u, e.cfg).norm() <= 1e-14);
}

TEST_CASE("A ode: small-radius linear growth and pushforward identity") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  Rng rng(7);
  const Vec omega = rng.on_sphere(3);
  std::vector<double> rhos = {0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  const auto sol =
      solve_A_ode(f.basis, I, f.bf.base_point, r, omega, 0.3, f.cfg, rhos);

  // |A(rho w)| <= C rho with a finite fitted slope near zero
  std::vector<double> rr, an;
  for (std::size_t s = 1; s < sol.rhos.size(); ++s) {
    rr.push_back(sol.rhos[s]);
    an.push_back(operator_norm(sol.A[s]));
  }
  const double slope = loglog_slope(rr, an, 1e-14);
  CHECK(std::isfinite(slope));
  CHECK(slope >= 0.8);

  // dPhi(u) (e_j + A_j(u)) tracks the scaled member at Phi(u)
  for (std::size_t s = 2; s < sol.rhos.size(); ++s) {
    const Vec u = sol.rhos[s] * omega;
    const Mat dPhi = jacobian_of_map(
        [&](const Vec& uu) {
          return map_Phi(f.basis, I, f.bf.base_point, r, uu, f.tight);
        },
        u, 1e-6);
    for (int j = 0; j < 3; ++j) {
      Vec zj = Vec::Zero(3);
      zj[j] = 1.0;
      zj += sol.A[s].row(j).transpose();
      const Vec want = std::pow(r, f.basis.lengths[I.idx[j]]) *
                       f.basis.Y(I.idx[j]).coeffs(sol.phi[s]);
      CHECK((dPhi * zj - want).norm() <= 1e-4 * want.norm());
    }
  }
}

TEST_CASE("A ode matches the direct pullback of the frame") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  Rng rng(13);
  for (int t = 0; t < 3; ++t) {
    const Vec u = Vec(0.08 * rng.in_unit_ball(3));
    const Mat A = A_at(f.basis, I, f.bf.base_point, r, u, f.cfg);
    const Mat dPhi = jacobian_of_map(
        [&](const Vec& uu) {
          return map_Phi(f.basis, I, f.bf.base_point, r, uu, f.tight);
        },
        u, 1e-6);
    const Vec y = map_Phi(f.basis, I, f.bf.base_point, r, u, f.tight);
    // hat A row j solves dPhi (e_j + hat a_j) = Yt_{i_j}(Phi(u))
    for (int j = 0; j < 3; ++j) {
      const Vec want = std::pow(r, f.basis.lengths[I.idx[j]]) *
                       f.basis.Y(I.idx[j]).coeffs(y);
      const Vec hj = Mat(dPhi).colPivHouseholderQr().solve(want);
      for (int k = 0; k < 3; ++k)
        CHECK(A(j, k) - (hj[k] - (k == j ? 1.0 : 0.0)) ==
              doctest::Approx(0.0).epsilon(1e-3).scale(1.0));
    }
  }
}

TEST_CASE("map_Psi: identity at v = 0 and translation for commuting fields") {
  Fixture e("euclid2in3");
  const auto I = select_maximal_tuple(e.basis, e.bf.base_point, 0.5).I;
  const Vec u1 = v2(0.1, -0.2);
  CHECK((map_Psi(e.basis, I, e.bf.base_point, 0.5, u1, v2(0, 0), e.cfg) - u1)
            .norm() == 0.0);
  const Vec img = map_Psi(e.basis, I, e.bf.base_point, 0.5, u1, v2(0.3, 0.1), e.cfg);
  CHECK((img - v2(0.4, -0.1)).norm() < 1e-10);
}

TEST_CASE("map_Psi: sampled bi-Lipschitz ratios stay in [1/2, 2]") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  const double eta2 = f.bf.guards.eta2;
  Rng rng(17);
  for (int t = 0; t < 12; ++t) {
    const Vec u1 = Vec(eta2 * rng.in_unit_ball(3));
    Vec v = Vec(eta2 * rng.in_unit_ball(3));
    Vec vb = Vec(eta2 * rng.in_unit_ball(3));
    if ((v - vb).norm() < 1e-3 * eta2) continue;
    const Vec a = map_Psi(f.basis, I, f.bf.base_point, r, u1, v, f.cfg);
    const Vec b = map_Psi(f.basis, I, f.bf.base_point, r, u1, vb, f.cfg);
    const double ratio = (a - b).norm() / (v - vb).norm();
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 2.0);
  }
}

TEST_CASE("lift_path: zero controls stay at the origin") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  const auto lift = lift_path(f.basis, I, f.bf.base_point, r,
                              constant_path(VecX::Zero(4), 0.001, true), 0.3,
                              f.cfg, 200);
  CHECK(lift.max_box_norm == doctest::Approx(0.0));
  CHECK(lift.max_tracking_residual <= 1e-9);
}

TEST_CASE("lift_path: single-member control moves one coordinate") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  VecX b = VecX::Zero(4);
  b[0] = 1.0;  // drive along Y_1 only
  const double R = 0.004;
  const auto lift = lift_path(f.basis, I, f.bf.base_point, r,
                              constant_path(b, R, true), 0.3, f.cfg, 400);
  const Vec theta = lift.theta.back();
  // gamma(1) = x + R e_1; theta should solve E(theta) = gamma with only the
  // first coordinate active: h_1 r = R
  CHECK(theta[0] == doctest::Approx(R / r).epsilon(1e-6));
  CHECK(std::abs(theta[1]) <= 1e-6);
  CHECK(std::abs(theta[2]) <= 1e-6);
  CHECK(lift.max_tracking_residual <= 1e-6 * r);
}

TEST_CASE("lift_path: random Heisenberg controls stay inside the half box") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const double eps = 0.3;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  const double R = 0.5 * std::pow(eps, 2) * r;  // inner scaling at c = 1/2
  const auto cloud = sample_ball(f.basis, f.bf.base_point, R, Metric::rho, 20, 5, f.cfg);
  for (const auto& [pt, path] : cloud.points) {
    const auto lift = lift_path(f.basis, I, f.bf.base_point, r, path, eps, f.cfg);
    CHECK(lift.max_box_norm <= eps / 2.0 + 0.05);
    CHECK(lift.max_tracking_residual <= 1e-6 * r);
    const Vec end = map_E(f.basis, I, f.bf.base_point, r, lift.theta.back(), f.cfg);
    CHECK((end - pt).norm() <= 1e-6 * r);
  }
}

TEST_CASE("lift_Phi_through_E: trivial cases and Heisenberg residuals") {
  Fixture e("euclid2in3");
  const auto Ie = select_maximal_tuple(e.basis, e.bf.base_point, 0.5).I;
  const auto pe = lift_Phi_point(e.basis, Ie, e.bf.base_point, 0.5, v2(0.2, -0.1), e.cfg);
  CHECK((pe.theta - v2(0.2, -0.1)).norm() < 1e-8);
  CHECK(pe.residual < 1e-9);

  Fixture f("heisenberg");
  const double r = 0.1;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  std::vector<Vec> grid;
  Rng rng(23);
  grid.push_back(Vec(Vec::Zero(3)));
  for (int t = 0; t < 4; ++t) grid.push_back(Vec(0.2 * rng.in_unit_ball(3)));
  const auto rep = lift_Phi_through_E(f.basis, I, f.bf.base_point, r, 0.2, grid, f.cfg);
  CHECK(rep.max_residual <= 1e-6);
  CHECK(rep.max_dev <= 0.5);
}

TEST_CASE("injectivity: affine chart is trivially injective") {
  Fixture e("euclid2in3");
  const auto I = select_maximal_tuple(e.basis, e.bf.base_point, 0.5).I;
  const auto rep = injectivity_check_E(e.basis, I, e.bf.base_point, 0.5, 0.4, 5, e.cfg);
  CHECK(rep.collision_free);
  CHECK(rep.min_pair_ratio > rep.threshold);
}

TEST_CASE("injectivity: Heisenberg box grid has no collisions") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  const auto rep = injectivity_check_E(f.basis, I, f.bf.base_point, r,
                                       f.bf.guards.eps1, 5, f.cfg, f.bf.guards.eta3);
  CHECK(rep.collision_free);
  CHECK(rep.lift_consistent);
}

TEST_CASE("injectivity: single-member tuple is monotone along its curve") {
  Fixture s("shear");
  const Vec x0 = v3(0, 0, 0);  // rank drops to 1 on the singular plane
  const TupleIndex I({0});
  const auto rep = injectivity_check_E(s.basis, I, x0, 0.3, 0.5, 9, s.cfg);
  CHECK(rep.collision_free);
}

TEST_CASE("neumann bound: worked examples and random trials") {
  CHECK(neumann_bound_check(Mat::Zero(2, 2), Mat::Zero(2, 2)).lhs ==
        doctest::Approx(0.0));
  const auto v = neumann_bound_check(0.1 * Mat::Identity(2, 2), Mat::Zero(2, 2));
  CHECK(v.lhs == doctest::Approx(1.0 - 1.0 / 1.1));
  CHECK(v.rhs == doctest::Approx(0.2));
  CHECK(v.ok);

  Mat big = 0.6 * Mat::Identity(3, 3);
  CHECK_THROWS_AS(neumann_bound_check(big, Mat::Zero(3, 3)), ArgumentError);

  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const int p = 1 + static_cast<int>(rng.next() % 4);
    Mat chi(p, p), b(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        chi(i, j) = rng.normal();
        b(i, j) = rng.normal();
      }
    const double nc = operator_norm(chi);
    if (nc > 0) chi *= 0.4 * rng.uniform() / nc;
    const double nb = operator_norm(b);
    if (nb > 0) b *= 0.3 * rng.uniform() / nb;
    CHECK(neumann_bound_check(chi, b).ok);
  }
}
