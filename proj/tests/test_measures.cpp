#include <doctest.h>

#include "ccgeo/families.hpp"
#include "ccgeo/measures.hpp"

using namespace ccgeo;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

struct Fixture {
  BuiltinFamily bf;
  CommutatorBasis basis;
  IntegratorConfig cfg;
  explicit Fixture(const char* name) : bf(make_builtin(name)) {
    basis = generate_commutators(bf.family);
    cfg.domain = bf.family.domain_box;
  }
};

}  // namespace

TEST_CASE("sigma_ball: planar disk area") {
  Fixture f("euclid2in3");
  const double r = 0.3;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  const auto rep = sigma_ball(f.basis, I, f.bf.base_point, r, Metric::cc, 4000, 9,
                              f.cfg, f.bf.guards.cover_eps);
  const double want = M_PI * r * r;
  CHECK_FALSE(rep.unreliable);
  CHECK(std::abs(rep.sigma_p - want) <= 0.05 * want);
}

TEST_CASE("sigma_ball: determinism under a fixed seed") {
  Fixture f("euclid2in3");
  const double r = 0.2;
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  const auto a = sigma_ball(f.basis, I, f.bf.base_point, r, Metric::cc, 500, 4, f.cfg);
  const auto b = sigma_ball(f.basis, I, f.bf.base_point, r, Metric::cc, 500, 4, f.cfg);
  CHECK(a.sigma_p == b.sigma_p);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("sigma_ball: vanishing-radius estimate collapses") {
  Fixture f("euclid2in3");
  const auto I = select_maximal_tuple(f.basis, f.bf.base_point, 0.2).I;
  const auto rep = sigma_ball(f.basis, I, f.bf.base_point, 1e-4, Metric::cc, 400, 5,
                              f.cfg, f.bf.guards.cover_eps);
  CHECK(rep.sigma_p <= 1e-6);
}

TEST_CASE("sigma_ball: monotone in the radius within noise") {
  Fixture f("heisenberg");
  const double r = 0.1;
  const auto I_half = select_maximal_tuple(f.basis, f.bf.base_point, r / 2).I;
  const auto I_full = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
  const auto small = sigma_ball(f.basis, I_half, f.bf.base_point, r / 2, Metric::cc,
                                2500, 8, f.cfg, f.bf.guards.cover_eps);
  const auto big = sigma_ball(f.basis, I_full, f.bf.base_point, r, Metric::cc, 2500,
                              8, f.cfg, f.bf.guards.cover_eps);
  CHECK(big.sigma_p - small.sigma_p >= -2.0 * (big.std_error + small.std_error));
}

TEST_CASE("sigma_ball: Heisenberg volume growth exponent") {
  Fixture f("heisenberg");
  std::vector<double> rs = {0.05, 0.1, 0.2};
  std::vector<double> sig;
  for (double r : rs) {
    const auto I = select_maximal_tuple(f.basis, f.bf.base_point, r).I;
    const auto rep = sigma_ball(f.basis, I, f.bf.base_point, r, Metric::cc, 2500, 21,
                                f.cfg, f.bf.guards.cover_eps);
    CHECK_FALSE(rep.unreliable);
    sig.push_back(rep.sigma_p);
  }
  const double slope = loglog_slope(rs, sig);
  CHECK(std::abs(slope - 4.0) <= 0.2);
}

TEST_CASE("doubling: planar factor four") {
  Fixture f("euclid2in3");
  const auto rep = doubling_ratio(f.basis, f.bf.base_point, 0.3, Metric::cc, 4000,
                                  31, f.cfg, f.bf.guards.cover_eps);
  CHECK(std::abs(rep.ratio - 4.0) <= 0.4);
}

TEST_CASE("poincare: constant functions give ratio zero") {
  Fixture f("euclid2in3");
  std::vector<TestFunction> suite = {
      make_test_function("const", Poly::constant(3.0, 3))};
  const auto rep = poincare_ratio(f.bf.family, f.basis, f.bf.base_point, 0.2, suite,
                                  1200, 3, f.cfg, 3.0, f.bf.guards.cover_eps);
  CHECK(rep.rows.size() == 1);
  CHECK(rep.rows[0].ratio == 0.0);
  CHECK_FALSE(rep.rows[0].flagged);
}

TEST_CASE("poincare: planar coordinate stays within the classical regime") {
  Fixture f("euclid2in3");
  std::vector<TestFunction> suite = {
      make_test_function("x1", Poly::variable(0, 3))};
  const auto rep = poincare_ratio(f.bf.family, f.basis, f.bf.base_point, 0.2, suite,
                                  2500, 7, f.cfg, 3.0, f.bf.guards.cover_eps);
  CHECK(rep.max_ratio > 0.0);
  CHECK(rep.max_ratio <= 2.0);
}

TEST_CASE("poincare: scaling the function leaves the ratio unchanged") {
  Fixture f("heisenberg");
  const Poly fpoly = Poly::variable(0, 3) * Poly::variable(1, 3);
  std::vector<TestFunction> one = {make_test_function("f", fpoly)};
  std::vector<TestFunction> ten = {make_test_function("10f", fpoly * 10.0)};
  const auto a = poincare_ratio(f.bf.family, f.basis, f.bf.base_point, 0.1, one,
                                1500, 11, f.cfg, 3.0, f.bf.guards.cover_eps);
  const auto b = poincare_ratio(f.bf.family, f.basis, f.bf.base_point, 0.1, ten,
                                1500, 11, f.cfg, 3.0, f.bf.guards.cover_eps);
  CHECK(a.max_ratio == doctest::Approx(b.max_ratio).epsilon(1e-9));
}

TEST_CASE("cloud effective rank follows the orbit dimension") {
  Fixture s("shear");
  // p = 1 on the singular plane: the cloud is a segment
  const auto line = sample_ball(s.basis, v3(0, 0, 0), 0.2, Metric::cc, 120, 3, s.cfg);
  std::vector<Vec> pts;
  for (const auto& [pt, path] : line.points) pts.push_back(pt);
  CHECK(cloud_effective_rank(pts) == 1);

  // p = 2 off it: the cloud fills a surface patch
  const auto plane = sample_ball(s.basis, v3(0.25, 0.4, 1.0), 0.2, Metric::cc, 120, 3, s.cfg);
  pts.clear();
  for (const auto& [pt, path] : plane.points) pts.push_back(pt);
  CHECK(cloud_effective_rank(pts) == 2);
}

TEST_CASE("default suite contains coordinates, quadratics and random polys") {
  const auto suite = default_test_suite(3, 99);
  REQUIRE(suite.size() >= 10);
  CHECK(suite[0].name == "const");
  bool has_sq = false, has_cross = false, has_rand = false;
  for (const auto& tf : suite) {
    if (tf.name == "x1^2") has_sq = true;
    if (tf.name == "x1*x2") has_cross = true;
    if (tf.name.rfind("rand", 0) == 0) has_rand = true;
  }
  CHECK(has_sq);
  CHECK(has_cross);
  CHECK(has_rand);
}
