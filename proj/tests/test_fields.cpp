#include <doctest.h>

#include "ccgeo/families.hpp"
#include "ccgeo/multilinear.hpp"

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

Vec random_point(Rng& rng, int dim, double scale) {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = scale * rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("bracket: Heisenberg pair gives the vertical direction") {
  const auto bf = make_builtin("heisenberg");
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    const Vec x = random_point(rng, 3, 2.0);
    const Vec b = bracket(bf.family.horizontal[0], bf.family.horizontal[1], x);
    CHECK((b - v3(0, 0, 1)).norm() < 1e-12);
  }
}

TEST_CASE("bracket: [V, V] vanishes") {
  const auto bf = make_builtin("grushin");
  const Vec x = v2(0.7, -1.2);
  const Vec b = bracket(bf.family.horizontal[1], bf.family.horizontal[1], x);
  CHECK(b.norm() == doctest::Approx(0.0));
}

TEST_CASE("bracket: Grushin at (2,5)") {
  const auto bf = make_builtin("grushin");
  const Vec b = bracket(bf.family.horizontal[0], bf.family.horizontal[1], v2(2, 5));
  CHECK((b - v2(0, 1)).norm() < 1e-12);
}

TEST_CASE("bracket rejects dimension mismatch") {
  const auto h = make_builtin("heisenberg");
  const auto g = make_builtin("grushin");
  CHECK_THROWS_AS(bracket(h.family.horizontal[0], g.family.horizontal[0], v3(0, 0, 0)),
                  ArgumentError);
}

TEST_CASE("generate_commutators: Heisenberg words and lengths") {
  const auto bf = make_builtin("heisenberg");
  const auto basis = generate_commutators(bf.family);
  REQUIRE(basis.q() == 4);
  CHECK(basis.members[0].word == std::vector<int>{1});
  CHECK(basis.members[1].word == std::vector<int>{2});
  CHECK(basis.members[2].word == std::vector<int>{1, 2});
  CHECK(basis.members[3].word == std::vector<int>{2, 1});
  CHECK(basis.lengths == std::vector<int>{1, 1, 2, 2});
  // (2,1) = -(1,2)
  const Vec x = v3(0.3, -0.4, 0.1);
  CHECK((basis.Y(2).coeffs(x) + basis.Y(3).coeffs(x)).norm() < 1e-12);
}

TEST_CASE("generate_commutators: step 1 returns the horizontal family") {
  auto fam = make_builtin("heisenberg").family;
  fam.step = 1;
  const auto basis = generate_commutators(fam);
  CHECK(basis.q() == 2);
  CHECK(basis.lengths == std::vector<int>{1, 1});
}

TEST_CASE("generate_commutators: Martinet depth-3 word") {
  const auto bf = make_builtin("martinet");
  const auto basis = generate_commutators(bf.family);
  const int j = basis.index_of_word({1, 1, 2});
  REQUIRE(j >= 0);
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const Vec x = random_point(rng, 3, 1.5);
    CHECK((basis.Y(j).coeffs(x) - v3(0, 0, 2)).norm() < 1e-12);
  }
}

TEST_CASE("numeric bracket chain matches the symbolic one") {
  for (const char* name : {"heisenberg", "grushin", "martinet", "shear"}) {
    const auto bf = make_builtin(name);
    const auto sym = generate_commutators(bf.family);
    const auto num = generate_commutators(bf.family, BracketMode::Numeric);
    Rng rng(23);
    for (int t = 0; t < 100; ++t) {
      const Vec x = random_point(rng, bf.family.dim, 0.8);
      for (int j = 0; j < sym.q(); ++j) {
        const Vec a = sym.Y(j).coeffs(x);
        const Vec b = num.Y(j).coeffs(x);
        CHECK((a - b).norm() <= 1e-6 * std::max(a.norm(), 1e-6));
      }
    }
  }
}

TEST_CASE("fully finite-difference Jacobians stay within the type tolerance") {
  const auto bf = make_builtin("heisenberg");
  const Family numeric_fam = bf.family.numeric();
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    const Vec x = random_point(rng, 3, 1.0);
    for (int j = 0; j < 2; ++j) {
      const Mat exact = bf.family.horizontal[j].jac(x);
      const Mat fd = numeric_fam.horizontal[j].jac(x);
      CHECK((exact - fd).norm() <= 1e-5 * (1.0 + exact.norm()));
    }
  }
}

TEST_CASE("antisymmetry of the numeric bracket") {
  const auto bf = make_builtin("martinet");
  const auto basis = generate_commutators(bf.family, BracketMode::Numeric);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Vec x = random_point(rng, 3, 1.0);
    for (int i = 0; i < basis.q(); ++i) {
      for (int j = i + 1; j < basis.q(); ++j) {
        const Vec ab = bracket(basis.Y(i), basis.Y(j), x);
        const Vec ba = bracket(basis.Y(j), basis.Y(i), x);
        CHECK((ab + ba).norm() <= 1e-9 * (1.0 + ab.norm()));
      }
    }
  }
}

TEST_CASE("Jacobi identity residual is small for analytic families") {
  const auto bf = make_builtin("martinet");
  const auto& X1 = bf.family.horizontal[0];
  const auto& X2 = bf.family.horizontal[1];
  const auto basis = generate_commutators(bf.family);
  const VectorField& Y12 = basis.members[basis.index_of_word({1, 2})];
  Rng rng(13);
  for (int t = 0; t < 20; ++t) {
    const Vec x = random_point(rng, 3, 1.0);
    // [X1,[X2,Y12]] + [X2,[Y12,X1]] + [Y12,[X1,X2]]
    const VectorField b23 = bracket_field(X2, Y12, {});
    const VectorField b31n = bracket_field(Y12, X1, {});
    const VectorField b12 = bracket_field(X1, X2, {});
    const Vec total = bracket(X1, b23, x) + bracket(X2, b31n, x) +
                      bracket(Y12, b12, x);
    double scale = bracket(X1, b23, x).norm() + bracket(X2, b31n, x).norm() +
                   bracket(Y12, b12, x).norm();
    CHECK(total.norm() <= 1e-4 * (scale + 1.0));
  }
}

TEST_CASE("structure constants: commuting fields give zeros") {
  const auto bf = make_builtin("euclid2in3");
  const auto basis = generate_commutators(bf.family);
  const auto sc = structure_constants(basis, v3(0.4, 0.5, -0.7));
  for (double c : sc.c) CHECK(c == 0.0);
  CHECK(sc.max_residual == doctest::Approx(0.0));
}

TEST_CASE("structure constants: Heisenberg c_12^3 = 1") {
  const auto bf = make_builtin("heisenberg");
  const auto basis = generate_commutators(bf.family);
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    const Vec x = random_point(rng, 3, 1.0);
    const auto sc = structure_constants(basis, x);
    CHECK(sc.at(0, 1, 2) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sc.at(1, 0, 2) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(std::abs(sc.at(0, 1, 3)) < 1e-9);
    CHECK(sc.max_residual < 1e-9);
  }
}

TEST_CASE("structure constants: shear family vanishes at (0,0,1)") {
  const auto bf = make_builtin("shear");
  const auto basis = generate_commutators(bf.family);
  const auto sc = structure_constants(basis, v3(0, 0, 1));
  for (double c : sc.c) CHECK(c == 0.0);
  CHECK(sc.max_residual == doctest::Approx(0.0));
}

TEST_CASE("structure constants: non-involutive family is reported") {
  // Martinet cut at step 2: [Y1, [X1,X2]] = 2 d3 leaves span{Y(x)} at the origin.
  auto fam = make_builtin("martinet").family;
  fam.step = 2;
  const auto basis = generate_commutators(fam);
  CHECK_THROWS_AS(structure_constants(basis, v3(0, 0, 0)), NotInvolutive);
}

TEST_CASE("scaled structure constants: r = 1 reproduces the algebra") {
  const auto bf = make_builtin("heisenberg");
  const auto basis = generate_commutators(bf.family);
  const Vec x = v3(0.1, 0.2, -0.1);
  const auto sc = structure_constants(basis, x);
  const auto hat = scaled_structure_constants(basis, sc, 1.0);
  CHECK(hat.at(0, 1, 2) == doctest::Approx(1.0));
  // the reversed pair re-expands through its own canonical word (2,1)
  CHECK(hat.at(1, 0, 3) == doctest::Approx(1.0));
  CHECK(hat.at(1, 0, 2) == doctest::Approx(0.0));
}

TEST_CASE("scaled structure constants: algebraic pair verified by brackets") {
  const auto bf = make_builtin("heisenberg");
  const auto basis = generate_commutators(bf.family);
  const double r = 0.5;
  const Vec x = v3(0.0, 0.0, 0.0);
  const auto sc = structure_constants(basis, x);
  const auto hat = scaled_structure_constants(basis, sc, r);
  CHECK(hat.at(0, 1, 2) == doctest::Approx(1.0));
  // [r Y1, r Y2](x) = sum_i chat r^{l_i} Y_i(x)
  const Vec lhs = r * r * bracket(basis.Y(0), basis.Y(1), x);
  Vec rhs = Vec::Zero(3);
  for (int i = 0; i < basis.q(); ++i)
    rhs += hat.at(0, 1, i) * std::pow(r, basis.lengths[i]) * basis.Y(i).coeffs(x);
  CHECK((lhs - rhs).norm() < 1e-12);
}

TEST_CASE("scaled structure constants: deep pair scales by r^{l_j+l_k-l_i}") {
  const auto bf = make_builtin("heisenberg");
  const auto basis = generate_commutators(bf.family);
  // synthetic constants: pair (1,3) has l = 1 + 2 = s + 1, support on l_i = 2
  StructureConstants sc;
  sc.q = basis.q();
  sc.c.assign(static_cast<std::size_t>(sc.q) * sc.q * sc.q, 0.0);
  sc.at(0, 2, 2) = 0.7;
  const auto hat = scaled_structure_constants(basis, sc, 0.25);
  CHECK(hat.at(0, 2, 2) == doctest::Approx(0.25 * 0.7));
}

TEST_CASE("scaled identity on sampled points and radii") {
  for (const char* name : {"heisenberg", "martinet"}) {
    const auto bf = make_builtin(name);
    const auto basis = generate_commutators(bf.family);
    Rng rng(41);
    for (double r : {1.0, 0.5, 0.1}) {
      const Vec x = random_point(rng, 3, 0.5);
      const auto sc = structure_constants(basis, x);
      const auto hat = scaled_structure_constants(basis, sc, r);
      for (int j = 0; j < basis.q(); ++j) {
        for (int k = 0; k < basis.q(); ++k) {
          if (j == k) continue;
          const Vec lhs = std::pow(r, basis.lengths[j] + basis.lengths[k]) *
                          bracket(basis.Y(j), basis.Y(k), x);
          Vec rhs = Vec::Zero(3);
          for (int i = 0; i < basis.q(); ++i) {
            const double c = hat.at(j, k, i);
            if (c != 0.0)
              rhs += c * std::pow(r, basis.lengths[i]) * basis.Y(i).coeffs(x);
          }
          CHECK((lhs - rhs).norm() <= 1e-6 * (1.0 + lhs.norm()));
        }
      }
    }
  }
}

TEST_CASE("admissible constant: commuting unit fields give exactly 2") {
  const auto bf = make_builtin("euclid2in3");
  const auto basis = generate_commutators(bf.family);
  std::vector<Vec> grid;
  Rng rng(2);
  for (int t = 0; t < 5; ++t) grid.push_back(random_point(rng, 3, 2.0));
  CHECK(admissible_constant_L1(bf.family, basis, grid) == doctest::Approx(2.0));
}

TEST_CASE("admissible constant: grid sups are monotone under refinement") {
  const auto bf = make_builtin("heisenberg");
  const auto basis = generate_commutators(bf.family);
  std::vector<Vec> grid;
  Rng rng(8);
  for (int t = 0; t < 4; ++t) grid.push_back(random_point(rng, 3, 1.0));
  const double l1 = admissible_constant_L1(bf.family, basis, grid);
  CHECK(std::isfinite(l1));
  std::vector<Vec> refined = grid;
  for (int t = 0; t < 4; ++t) refined.push_back(random_point(rng, 3, 1.0));
  const double l2 = admissible_constant_L1(bf.family, basis, refined);
  CHECK(l2 >= l1 - 1e-12);
}

TEST_CASE("admissible constant: Grushin coefficient sup over the box") {
  const auto bf = make_builtin("grushin");
  const auto basis = generate_commutators(bf.family);
  // Corners of [-2,2]^2 realize sup |f_2| = 2.
  std::vector<Vec> grid = {v2(-2, -2), v2(-2, 2), v2(2, -2), v2(2, 2), v2(0, 0)};
  const double l1 = admissible_constant_L1(bf.family, basis, grid);
  // D^0 terms alone contribute 1 (f1) + 2 (f2 at |x1| = 2).
  CHECK(l1 >= 3.0 - 1e-9);
}

TEST_CASE("custom family JSON round trip") {
  const std::string doc = R"({
    "dim": 2, "step": 2,
    "fields": [{"coeffs": ["1", "0"]}, {"coeffs": ["0", "x1"]}],
    "domain_box": [[-3, 3], [-3, 3]]
  })";
  const Family fam = family_from_json(doc);
  CHECK(fam.dim == 2);
  CHECK(fam.m() == 2);
  const auto basis = generate_commutators(fam);
  CHECK(basis.q() == 4);
  const Vec b = bracket(fam.horizontal[0], fam.horizontal[1], v2(2, 5));
  CHECK((b - v2(0, 1)).norm() < 1e-12);
}

TEST_CASE("custom family JSON rejects unknown keys and bad shapes") {
  CHECK_THROWS_AS(family_from_json(R"({"dim": 2})"), ArgumentError);
  CHECK_THROWS_AS(family_from_json(R"({"dim": 2, "step": 1, "fields": [], "extra": 1})"),
                  ArgumentError);
  CHECK_THROWS_AS(
      family_from_json(
          R"({"dim": 2, "step": 1, "fields": [{"coeffs": ["1"]}]})"),
      ArgumentError);
  CHECK_THROWS_AS(
      family_from_json(
          R"({"dim": 2, "step": 1, "fields": [{"coeffs": ["1", "0"], "name": "x"}]})"),
      ArgumentError);
}
