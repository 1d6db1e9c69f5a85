#include "ccgeo/flows.hpp"

#include <cmath>

namespace ccgeo {

double box_norm(const Vec& h, const TupleIndex& I, const CommutatorBasis& basis) {
  if (h.size() != I.p()) throw ArgumentError("box_norm: h does not match the tuple");
  double m = 0.0;
  for (int j = 0; j < h.size(); ++j)
    m = std::max(m, std::pow(std::abs(h[j]), 1.0 / basis.lengths[I.idx[j]]));
  return m;
}

BoxPoint make_box_point(Vec h, TupleIndex I, const CommutatorBasis& basis) {
  BoxPoint bp;
  bp.box_norm = box_norm(h, I, basis);
  bp.h = std::move(h);
  bp.tuple = std::move(I);
  return bp;
}

Vec flow(const VectorField& field, const Vec& x, double t,
         const IntegratorConfig& cfg) {
  if (field.dim != x.size()) throw ArgumentError("flow: dimension mismatch");
  return integrate(
      [&field](double, const Vec& y, Vec& dy) { dy = field.coeffs(y); }, x, 0.0,
      t, cfg);
}

Vec flow_combination(const VecX& b, const CommutatorBasis& basis, const Vec& x,
                     double T, const IntegratorConfig& cfg) {
  if (b.size() != basis.q())
    throw ArgumentError("flow_combination: coefficient vector must have length q");
  std::vector<int> active;
  for (int j = 0; j < b.size(); ++j)
    if (b[j] != 0.0) active.push_back(j);
  if (active.empty() || T == 0.0) {
    if (!cfg.domain.contains(x))
      throw EscapedDomain("initial point outside the domain box", 0.0);
    return x;
  }
  return integrate(
      [&](double, const Vec& y, Vec& dy) {
        dy.setZero(y.size());
        for (int j : active) dy += b[j] * basis.Y(j).coeffs(y);
      },
      x, 0.0, T, cfg);
}

namespace {

Vec exp_ap_rec(const CommutatorBasis& basis, const std::vector<int>& word,
               double a, const Vec& x, const IntegratorConfig& cfg) {
  if (a == 0.0) {
    if (!cfg.domain.contains(x))
      throw EscapedDomain("initial point outside the domain box", 0.0);
    return x;
  }
  const int l = static_cast<int>(word.size());
  const VectorField& head = basis.Y(word[0] - 1);
  if (l == 1) return flow(head, x, a, cfg);

  const double t = std::pow(std::abs(a), 1.0 / l);
  const double s = std::pow(t, l - 1);
  const std::vector<int> tail(word.begin() + 1, word.end());
  Vec y = x;
  if (a > 0.0) {
    y = flow(head, y, -t, cfg);
    y = exp_ap_rec(basis, tail, -s, y, cfg);
    y = flow(head, y, t, cfg);
    y = exp_ap_rec(basis, tail, s, y, cfg);
  } else {
    // exact inverse of the composition above
    y = exp_ap_rec(basis, tail, -s, y, cfg);
    y = flow(head, y, -t, cfg);
    y = exp_ap_rec(basis, tail, s, y, cfg);
    y = flow(head, y, t, cfg);
  }
  return y;
}

}  // namespace

Vec approx_exponential(const CommutatorBasis& basis, const std::vector<int>& word,
                       double h, const Vec& x, const IntegratorConfig& cfg) {
  if (word.empty()) throw ArgumentError("approx_exponential: empty word");
  for (int w : word)
    if (w < 1 || w > basis.m)
      throw ArgumentError("approx_exponential: word letter out of range");
  return exp_ap_rec(basis, word, h, x, cfg);
}

Vec map_E(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x,
          double r, const Vec& h, const IntegratorConfig& cfg) {
  I.validate(basis);
  if (h.size() != I.p()) throw ArgumentError("map_E: h does not match the tuple");
  if (!(r > 0.0)) throw ArgumentError("map_E: radius must be positive");
  Vec y = x;
  for (int k = I.p() - 1; k >= 0; --k) {
    const int j = I.idx[k];
    const double a = h[k] * std::pow(r, basis.lengths[j]);
    y = exp_ap_rec(basis, basis.Y(j).word, a, y, cfg);
  }
  return y;
}

Vec map_Phi(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x,
            double r, const Vec& u, const IntegratorConfig& cfg) {
  I.validate(basis);
  if (u.size() != I.p()) throw ArgumentError("map_Phi: u does not match the tuple");
  if (!(r > 0.0)) throw ArgumentError("map_Phi: radius must be positive");
  VecX b = VecX::Zero(basis.q());
  for (int k = 0; k < I.p(); ++k)
    b[I.idx[k]] = u[k] * std::pow(r, basis.lengths[I.idx[k]]);
  return flow_combination(b, basis, x, 1.0, cfg);
}

Mat jacobian_of_map(const std::function<Vec(const Vec&)>& map, const Vec& h,
                    double step) {
  const int p = static_cast<int>(h.size());
  Vec hp = h, hm = h;
  Mat J;
  for (int k = 0; k < p; ++k) {
    hp[k] = h[k] + step;
    hm[k] = h[k] - step;
    const Vec col = (map(hp) - map(hm)) / (2.0 * step);
    if (k == 0) J.resize(col.size(), p);
    J.col(k) = col;
    hp[k] = h[k];
    hm[k] = h[k];
  }
  return J;
}

}  // namespace ccgeo
