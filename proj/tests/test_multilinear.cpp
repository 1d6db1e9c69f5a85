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

struct Fixture {
  BuiltinFamily bf;
  CommutatorBasis basis;
  explicit Fixture(const char* name) : bf(make_builtin(name)) {
    basis = generate_commutators(bf.family);
  }
};

// Brute-force |Lambda_p| by direct minor enumeration, kept independent of the
// library path (no WedgeVector use).
double lambda_brute(const CommutatorBasis& basis, int p, const Vec& x, double r) {
  const MatX M = basis.member_matrix(x);
  double acc = 0.0;
  for (const auto& I : enumerate_tuples(p, basis.q())) {
    MatX cols(basis.dim, p);
    for (int k = 0; k < p; ++k) cols.col(k) = M.col(I.idx[k]);
    double v2sum = 0.0;
    for (const auto& K : enumerate_tuples(p, basis.dim)) {
      MatX minor(p, p);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) minor(a, b) = cols(K.idx[a], b);
      const double d = minor.determinant();
      v2sum += d * d;
    }
    acc += std::pow(r, 2.0 * I.degree(basis)) * v2sum;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("wedge components: orthonormal pair") {
  Fixture f("euclid2in3");
  const auto w = wedge_components(f.basis, TupleIndex({0, 1}), v3(0.2, -0.1, 3.0));
  CHECK(w.norm() == doctest::Approx(1.0));
  // only the (1,2) row pair is populated
  const auto rows = enumerate_tuples(2, 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double want = (rows[i].idx == std::vector<int>{0, 1}) ? 1.0 : 0.0;
    CHECK(w.comps[i] == doctest::Approx(want));
  }
}

TEST_CASE("wedge components: zero column collapses the wedge") {
  Fixture f("grushin");
  const auto w = wedge_components(f.basis, TupleIndex({0, 1}), v2(0, 0));
  CHECK(w.norm() == doctest::Approx(0.0));
}

TEST_CASE("wedge components: Grushin at (2,0)") {
  Fixture f("grushin");
  const auto w = wedge_components(f.basis, TupleIndex({0, 1}), v2(2, 0));
  CHECK(w.norm() == doctest::Approx(2.0));
}

TEST_CASE("cramer: unit vectors reproduce themselves") {
  Fixture f("heisenberg");
  const Vec x = v3(0.3, 0.1, -0.2);
  const TupleIndex I({0, 1, 2});
  for (int k = 0; k < 3; ++k) {
    const Vec w = f.basis.Y(I.idx[k]).coeffs(x);
    const auto res = cramer_coordinates(f.basis, I, x, w);
    for (int j = 0; j < 3; ++j)
      CHECK(res.xi[j] == doctest::Approx(j == k ? 1.0 : 0.0).epsilon(1e-12));
    CHECK(res.residual < 1e-12);
  }
}

TEST_CASE("cramer: reconstruction of a random span combination") {
  Fixture f("heisenberg");
  const Vec x = v3(0, 0, 0);
  const TupleIndex I({0, 1});
  const Vec w = 2.0 * f.basis.Y(0).coeffs(x) + 3.0 * f.basis.Y(1).coeffs(x);
  const auto res = cramer_coordinates(f.basis, I, x, w);
  CHECK(res.xi[0] == doctest::Approx(2.0));
  CHECK(res.xi[1] == doctest::Approx(3.0));
}

TEST_CASE("cramer: orthogonal target raises NotInSpan") {
  Fixture f("euclid2in3");
  CHECK_THROWS_AS(
      cramer_coordinates(f.basis, TupleIndex({0, 1}), v3(0, 0, 0), v3(0, 0, 1)),
      NotInSpan);
}

TEST_CASE("cramer: degenerate tuple raises") {
  Fixture f("grushin");
  CHECK_THROWS_AS(
      cramer_coordinates(f.basis, TupleIndex({0, 1}), v2(0, 0), v2(1, 0)),
      DegenerateTuple);
}

TEST_CASE("cramer exactness for random in-span targets") {
  Fixture f("martinet");
  Rng rng(19);
  int checked = 0;
  while (checked < 50) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-1.0, 1.0);
    const auto sel = select_maximal_tuple(f.basis, x, 1.0);
    MatX cols(3, sel.I.p());
    for (int k = 0; k < sel.I.p(); ++k) cols.col(k) = f.basis.Y(sel.I.idx[k]).coeffs(x);
    if (wedge_columns(cols).norm() < 1e-6) continue;
    Vec coeff(sel.I.p());
    for (int k = 0; k < sel.I.p(); ++k) coeff[k] = rng.uniform(-2.0, 2.0);
    const Vec w = cols * VecX(coeff);
    const auto res = cramer_coordinates(cols, w, 0.0, true);
    CHECK(res.residual <= 1e-9 * std::max(w.norm(), 1e-12));
    ++checked;
  }
}

TEST_CASE("lambda vector: euclid is 1, matches brute force") {
  Fixture f("euclid2in3");
  const Vec x = v3(0.5, 0.5, 0.5);
  CHECK(lambda_vector(f.basis, 2, x, 1.0) == doctest::Approx(1.0));
  CHECK(lambda_vector(f.basis, 2, x, 1.0) ==
        doctest::Approx(lambda_brute(f.basis, 2, x, 1.0)));
}

TEST_CASE("lambda vector: Heisenberg grade 3 at the origin") {
  Fixture f("heisenberg");
  CHECK(lambda_vector(f.basis, 3, v3(0, 0, 0), 1.0) ==
        doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("lambda vector: nondecreasing in r and equals brute force") {
  Fixture f("martinet");
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-1.0, 1.0);
    double prev = 0.0;
    for (double r : {0.1, 0.5, 1.0}) {
      const double v = lambda_vector(f.basis, 2, x, r);
      CHECK(v >= prev - 1e-15);
      CHECK(v == doctest::Approx(lambda_brute(f.basis, 2, x, r)));
      prev = v;
    }
  }
}

TEST_CASE("pointwise rank across families") {
  Fixture h("heisenberg");
  CHECK(pointwise_rank(h.basis, v3(0.7, -0.9, 2.0)) == 3);
  Fixture s("shear");
  CHECK(pointwise_rank(s.basis, v3(0, 0, 0)) == 1);
  CHECK(pointwise_rank(s.basis, v3(0, 0, 1)) == 2);
}

TEST_CASE("nu infimum") {
  Fixture e("euclid2in3");
  std::vector<Vec> sample = {v3(0, 0, 0), v3(1, -1, 2)};
  CHECK(nu_infimum(e.basis, sample) == doctest::Approx(1.0));

  // a sample through the Grushin singular line attains sqrt(2) there
  Fixture g("grushin");
  std::vector<Vec> gs = {v2(0, 0), v2(0.5, 0.2), v2(-1, 1)};
  CHECK(nu_infimum(g.basis, gs) == doctest::Approx(std::sqrt(2.0)));

  // singleton sample equals the pointwise value
  std::vector<Vec> one = {v2(0.3, 0.0)};
  CHECK(nu_infimum(g.basis, one) ==
        doctest::Approx(lambda_vector(g.basis, pointwise_rank(g.basis, one[0]),
                                      one[0], 1.0)));
}

TEST_CASE("maximal tuple: Grushin switch between bracket and coefficient") {
  Fixture g("grushin");
  const auto big = select_maximal_tuple(g.basis, v2(0.5, 0), 0.1);
  CHECK(big.I.idx == std::vector<int>{0, 1});
  const auto small = select_maximal_tuple(g.basis, v2(0.001, 0), 0.1);
  CHECK(small.I.idx == std::vector<int>{0, 2});
}

TEST_CASE("maximal tuple: Heisenberg tie breaks to the lexicographic tuple") {
  Fixture h("heisenberg");
  const auto sel = select_maximal_tuple(h.basis, v3(0, 0, 0), 0.2);
  CHECK(sel.I.idx == std::vector<int>{0, 1, 2});
}

TEST_CASE("maximal tuple: degenerate point raises") {
  // all fields vanish at the origin for this custom family
  const Family fam = family_from_json(
      R"({"dim": 2, "step": 1, "fields": [{"coeffs": ["x1", "0"]}, {"coeffs": ["0", "x2"]}]})");
  const auto basis = generate_commutators(fam);
  CHECK_THROWS_AS(select_maximal_tuple(basis, v2(0, 0), 0.1), DegeneratePoint);
}

TEST_CASE("maximality certificate by exhaustive enumeration") {
  for (const char* name : {"heisenberg", "martinet", "grushin"}) {
    Fixture f(name);
    Rng rng(59);
    for (int t = 0; t < 10; ++t) {
      Vec x(f.bf.family.dim);
      for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
      const double r = rng.uniform(0.05, 0.5);
      const auto sel = select_maximal_tuple(f.basis, x, r);
      const int p = sel.I.p();
      for (const auto& J : enumerate_tuples(p, f.basis.q())) {
        const double vj = wedge_components(f.basis, J, x).norm() *
                          std::pow(r, J.degree(f.basis));
        CHECK(sel.value >= vj * (1.0 - 1e-9));
      }
    }
  }
}

TEST_CASE("argmax is invariant under common positive scaling") {
  Fixture f("heisenberg");
  auto scaled = f.basis;
  for (auto& m : scaled.members) {
    auto base = m.coeffs;
    m.coeffs = [base](const Vec& x) { return Vec(7.5 * base(x)); };
    m.jacobian = nullptr;
    m.poly.reset();
  }
  Rng rng(71);
  for (int t = 0; t < 10; ++t) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-1.0, 1.0);
    const double r = rng.uniform(0.05, 0.5);
    CHECK(select_maximal_tuple(f.basis, x, r).I.idx ==
          select_maximal_tuple(scaled, x, r).I.idx);
  }
}

TEST_CASE("tuple validation") {
  Fixture f("heisenberg");
  CHECK_THROWS_AS(TupleIndex({1, 0}).validate(f.basis), ArgumentError);
  CHECK_THROWS_AS(TupleIndex({0, 9}).validate(f.basis), ArgumentError);
  CHECK_THROWS_AS(TupleIndex(std::vector<int>{}).validate(f.basis), ArgumentError);
  CHECK(TupleIndex({0, 2, 3}).degree(f.basis) == 5);
}
