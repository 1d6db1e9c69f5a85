#ifndef CCGEO_EXPR_HPP
#define CCGEO_EXPR_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ccgeo/common.hpp"

namespace ccgeo {

/// Sparse multivariate polynomial in up to kMaxDim variables.  Backs the
/// analytic coefficient evaluators of the built-in families and the custom
/// family parser; exact derivatives make symbolic brackets available as an
/// oracle against the finite-difference path.
class Poly {
 public:
  using Exps = std::array<std::uint8_t, kMaxDim>;

  Poly() : nvars_(0) {}
  explicit Poly(int nvars) : nvars_(nvars) {}

  static Poly constant(double c, int nvars);
  static Poly variable(int index, int nvars);  // 0-based

  /// Parses "+ - * ^" expressions over variables x1..xn with numeric
  /// constants and parentheses.  Throws ArgumentError on malformed input.
  static Poly parse(const std::string& text, int nvars);

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;

  double eval(const Vec& x) const;
  Poly derivative(int var) const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double c) const;
  Poly operator-() const { return *this * -1.0; }
  Poly pow(int k) const;

  std::string str() const;

 private:
  void add_term(const Exps& e, double c);
  void normalize();

  int nvars_;
  std::vector<std::pair<Exps, double>> terms_;  // sorted by exponents
};

}  // namespace ccgeo

#endif  // CCGEO_EXPR_HPP
