#include "ccgeo/fields.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "ccgeo/multilinear.hpp"

namespace ccgeo {

Mat VectorField::jac(const Vec& x, const FdPolicy& fd) const {
  if (jacobian) return jacobian(x);
  const int n = static_cast<int>(x.size());
  const double h = fd.step(x, fd_level);
  Mat J(n, n);
  Vec xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    J.col(j) = (coeffs(xp) - coeffs(xm)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return J;
}

VectorField make_poly_field(std::vector<Poly> coeffs, std::vector<int> word) {
  VectorField f;
  f.dim = static_cast<int>(coeffs.size());
  f.word = std::move(word);
  f.length = static_cast<int>(f.word.size());
  auto polys = std::make_shared<std::vector<Poly>>(std::move(coeffs));
  auto derivs = std::make_shared<std::vector<std::vector<Poly>>>();
  derivs->resize(polys->size());
  for (std::size_t i = 0; i < polys->size(); ++i) {
    for (int j = 0; j < f.dim; ++j) (*derivs)[i].push_back((*polys)[i].derivative(j));
  }
  const int n = f.dim;
  f.coeffs = [polys, n](const Vec& x) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = (*polys)[i].eval(x);
    return v;
  };
  f.jacobian = [derivs, n](const Vec& x) {
    Mat J(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) J(i, j) = (*derivs)[i][j].eval(x);
    return J;
  };
  f.poly = *polys;
  return f;
}

Vec bracket(const VectorField& V, const VectorField& W, const Vec& x,
            const FdPolicy& fd) {
  if (V.dim != W.dim || V.dim != x.size())
    throw ArgumentError("bracket: dimension mismatch");
  return W.jac(x, fd) * V.coeffs(x) - V.jac(x, fd) * W.coeffs(x);
}

VectorField bracket_field(const VectorField& V, const VectorField& W,
                          std::vector<int> word, const FdPolicy& fd) {
  VectorField out;
  out.dim = V.dim;
  out.word = std::move(word);
  out.length = static_cast<int>(out.word.size());
  const int lv = V.jacobian ? V.fd_level : V.fd_level + 1;
  const int lw = W.jacobian ? W.fd_level : W.fd_level + 1;
  out.fd_level = std::max(lv, lw);
  out.coeffs = [V, W, fd](const Vec& x) { return bracket(V, W, x, fd); };
  return out;
}

VectorField symbolic_bracket(const VectorField& V, const VectorField& W,
                             std::vector<int> word) {
  if (!V.poly || !W.poly)
    throw ArgumentError("symbolic_bracket requires polynomial coefficients");
  const int n = V.dim;
  std::vector<Poly> out;
  out.reserve(n);
  for (int a = 0; a < n; ++a) {
    Poly acc(n);
    for (int b = 0; b < n; ++b) {
      acc = acc + (*W.poly)[a].derivative(b) * (*V.poly)[b] -
            (*V.poly)[a].derivative(b) * (*W.poly)[b];
    }
    out.push_back(acc);
  }
  return make_poly_field(std::move(out), std::move(word));
}

void Family::validate() const {
  if (dim < 1 || dim > kMaxDim)
    throw ArgumentError("family dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (step < 1) throw ArgumentError("family step must be >= 1");
  if (horizontal.empty()) throw ArgumentError("family needs at least one field");
  for (const auto& f : horizontal) {
    if (f.dim != dim) throw ArgumentError("horizontal fields must share the family dimension");
    if (f.length != 1) throw ArgumentError("horizontal fields must have length 1");
  }
  if (!domain_box.empty() && domain_box.dim() != dim)
    throw ArgumentError("domain box dimension mismatch");
}

Family Family::numeric() const {
  Family out = *this;
  for (auto& f : out.horizontal) {
    f.jacobian = nullptr;
    f.poly.reset();
  }
  return out;
}

namespace {

bool structurally_zero(const std::vector<int>& w) {
  const std::size_t l = w.size();
  return l >= 2 && w[l - 2] == w[l - 1];
}

void enumerate_words(int m, int s, std::vector<std::vector<int>>& out) {
  std::vector<int> w;
  for (int len = 1; len <= s; ++len) {
    w.assign(len, 1);
    while (true) {
      if (!structurally_zero(w)) out.push_back(w);
      int i = len - 1;
      while (i >= 0 && w[i] == m) {
        w[i] = 1;
        --i;
      }
      if (i < 0) break;
      ++w[i];
    }
  }
}

}  // namespace

CommutatorBasis generate_commutators(const Family& fam, BracketMode mode) {
  fam.validate();
  CommutatorBasis basis;
  basis.dim = fam.dim;
  basis.m = fam.m();
  basis.step = fam.step;
  basis.domain_box = fam.domain_box;

  bool symbolic = mode == BracketMode::Auto;
  if (symbolic) {
    for (const auto& f : fam.horizontal)
      if (!f.poly) symbolic = false;
  }

  std::vector<std::vector<int>> words;
  enumerate_words(fam.m(), fam.step, words);

  std::map<std::vector<int>, int> index;
  for (const auto& w : words) {
    VectorField member;
    if (w.size() == 1) {
      member = fam.horizontal[w[0] - 1];
      member.word = w;
      member.length = 1;
    } else {
      std::vector<int> tail(w.begin() + 1, w.end());
      auto it = index.find(tail);
      if (it == index.end()) throw Error("internal: missing tail word");
      const VectorField& head = basis.members[w[0] - 1];
      const VectorField& rest = basis.members[it->second];
      member = symbolic ? symbolic_bracket(head, rest, w)
                        : bracket_field(head, rest, w);
    }
    index[w] = static_cast<int>(basis.members.size());
    basis.members.push_back(std::move(member));
    basis.lengths.push_back(static_cast<int>(w.size()));
  }
  return basis;
}

MatX CommutatorBasis::member_matrix(const Vec& x) const {
  MatX M(dim, q());
  for (int j = 0; j < q(); ++j) M.col(j) = members[j].coeffs(x);
  return M;
}

MatX CommutatorBasis::scaled_member_matrix(const Vec& x, double r) const {
  MatX M = member_matrix(x);
  for (int j = 0; j < q(); ++j) M.col(j) *= std::pow(r, lengths[j]);
  return M;
}

int CommutatorBasis::index_of_word(const std::vector<int>& w) const {
  for (int j = 0; j < q(); ++j)
    if (members[j].word == w) return j;
  return -1;
}

PairConstants structure_constants_pair(const CommutatorBasis& basis, int i, int j,
                                       const Vec& x, const std::vector<int>& frame,
                                       const FdPolicy& fd) {
  PairConstants out;
  const int p = static_cast<int>(frame.size());
  if (i == j || p == 0) {
    out.coeff = Vec::Zero(std::max(p, 0));
    return out;
  }
  Vec b = basis.analytic_constants ? Vec() : bracket(basis.Y(i), basis.Y(j), x, fd);
  if (basis.analytic_constants) {
    out.coeff = Vec::Zero(p);
    for (int k = 0; k < p; ++k) out.coeff[k] = basis.analytic_constants(i, j, frame[k], x);
    return out;
  }
  Mat cols(basis.dim, p);
  for (int k = 0; k < p; ++k) cols.col(k) = basis.Y(frame[k]).coeffs(x);
  auto res = cramer_coordinates(cols, b, 0.0, /*check_span=*/false);
  out.coeff = res.xi;
  out.residual = res.residual;
  return out;
}

StructureConstants structure_constants(const CommutatorBasis& basis, const Vec& x,
                                       double rank_tol, const FdPolicy& fd) {
  const int q = basis.q();
  StructureConstants out;
  out.q = q;
  out.c.assign(static_cast<std::size_t>(q) * q * q, 0.0);

  const MatX M = basis.member_matrix(x);
  const int p = pointwise_rank(basis, x, rank_tol);
  std::vector<int> frame;
  if (p > 0) {
    auto sel = select_maximal_tuple(basis, x, 1.0, rank_tol);
    frame = sel.I.idx;
  }
  out.frame = frame;

  // Brackets whose norm sits at the finite-difference noise floor are zero.
  const double abs_floor = std::max(1e-12, rank_tol) * (1.0 + M.norm());

  for (int i = 0; i < q; ++i) {
    for (int j = i + 1; j < q; ++j) {
      const Vec b = bracket(basis.Y(i), basis.Y(j), x, fd);
      const double bn = b.norm();
      if (bn <= abs_floor) continue;
      if (frame.empty())
        throw NotInvolutive("bracket [" + std::to_string(i + 1) + "," +
                                std::to_string(j + 1) +
                                "] nonzero where the family vanishes",
                            i, j, x);
      Mat cols(basis.dim, static_cast<int>(frame.size()));
      for (std::size_t k = 0; k < frame.size(); ++k)
        cols.col(static_cast<int>(k)) = M.col(frame[k]);
      auto res = cramer_coordinates(cols, b, 0.0, /*check_span=*/false);
      if (res.residual > rank_tol * bn && res.residual > abs_floor)
        throw NotInvolutive("bracket [" + std::to_string(i + 1) + "," +
                                std::to_string(j + 1) +
                                "] is not in the span of the family (residual " +
                                std::to_string(res.residual) + ")",
                            i, j, x);
      out.max_residual = std::max(out.max_residual, res.residual);
      for (std::size_t k = 0; k < frame.size(); ++k) {
        out.at(i, j, frame[k]) = res.xi[static_cast<int>(k)];
        out.at(j, i, frame[k]) = -res.xi[static_cast<int>(k)];
      }
    }
  }
  return out;
}

std::vector<std::pair<std::vector<int>, long>> jacobi_word_expansion(
    const std::vector<int>& u, const std::vector<int>& v) {
  std::vector<std::pair<std::vector<int>, long>> out;
  auto add = [&out](const std::vector<int>& w, long c) {
    if (c == 0) return;
    for (auto& [w0, c0] : out) {
      if (w0 == w) {
        c0 += c;
        return;
      }
    }
    out.push_back({w, c});
  };

  if (u.size() == 1) {
    std::vector<int> w;
    w.push_back(u[0]);
    w.insert(w.end(), v.begin(), v.end());
    if (!structurally_zero(w)) add(w, 1);
    return out;
  }

  // [[X_a, X_u'], X_v] = [X_a, [X_u', X_v]] - [X_u', [X_a, X_v]]
  const int a = u[0];
  const std::vector<int> tail(u.begin() + 1, u.end());

  for (const auto& [w, c] : jacobi_word_expansion(tail, v)) {
    std::vector<int> aw;
    aw.push_back(a);
    aw.insert(aw.end(), w.begin(), w.end());
    if (!structurally_zero(aw)) add(aw, c);
  }

  std::vector<int> av;
  av.push_back(a);
  av.insert(av.end(), v.begin(), v.end());
  if (!structurally_zero(av)) {
    for (const auto& [w, c] : jacobi_word_expansion(tail, av)) add(w, -c);
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const auto& t) { return t.second == 0; }),
            out.end());
  return out;
}

StructureConstants scaled_structure_constants(const CommutatorBasis& basis,
                                              const StructureConstants& c, double r) {
  if (!(r > 0.0 && r <= 1.0))
    throw ArgumentError("scaled_structure_constants requires r in (0, 1]");
  const int q = basis.q();
  if (c.q != q) throw ArgumentError("structure constants do not match the basis");
  StructureConstants out;
  out.q = q;
  out.c.assign(static_cast<std::size_t>(q) * q * q, 0.0);
  out.frame = c.frame;
  out.max_residual = c.max_residual;

  for (int j = 0; j < q; ++j) {
    for (int k = 0; k < q; ++k) {
      if (j == k) continue;
      const int lsum = basis.lengths[j] + basis.lengths[k];
      if (lsum <= basis.step) {
        for (const auto& [w, coeff] :
             jacobi_word_expansion(basis.members[j].word, basis.members[k].word)) {
          const int i = basis.index_of_word(w);
          if (i < 0) throw Error("internal: expansion word missing from basis");
          out.at(j, k, i) += static_cast<double>(coeff);
        }
      } else {
        for (int i = 0; i < q; ++i) {
          const double cij = c.at(j, k, i);
          if (cij == 0.0) continue;
          out.at(j, k, i) = std::pow(r, lsum - basis.lengths[i]) * cij;
        }
      }
    }
  }
  return out;
}

namespace {

// D^alpha f by nested central differences; `alpha` consumed leftmost-first.
Vec nested_derivative(const VectorField& f, const Vec& x, std::vector<int> alpha,
                      const FdPolicy& fd, int order) {
  int var = -1;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] > 0) {
      var = static_cast<int>(i);
      break;
    }
  }
  if (var < 0) return f.coeffs(x);
  alpha[var] -= 1;
  const double h = order >= 2 ? fd.nested_step : fd.step(x, f.fd_level);
  Vec xp = x, xm = x;
  xp[var] += h;
  xm[var] -= h;
  return (nested_derivative(f, xp, alpha, fd, order - 1) -
          nested_derivative(f, xm, alpha, fd, order - 1)) /
         (2.0 * h);
}

void enumerate_multi_indices(int n, int order, std::vector<int>& cur, int start,
                             std::vector<std::vector<int>>& out) {
  if (order == 0) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < n; ++i) {
    cur[i] += 1;
    enumerate_multi_indices(n, order - 1, cur, i, out);
    cur[i] -= 1;
  }
}

// One classical RK4 step of the flow of Y from x over time t; used only for
// the short directional moves of the L1 derivative terms.
Vec rk4_step(const VectorField& Y, const Vec& x, double t) {
  const Vec k1 = Y.coeffs(x);
  const Vec k2 = Y.coeffs(x + 0.5 * t * k1);
  const Vec k3 = Y.coeffs(x + 0.5 * t * k2);
  const Vec k4 = Y.coeffs(x + t * k3);
  return x + (t / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

double admissible_constant_L1(const Family& fam, const CommutatorBasis& basis,
                              const std::vector<Vec>& grid, double rank_tol,
                              const FdPolicy& fd) {
  fam.validate();
  if (grid.empty()) throw ArgumentError("admissible_constant_L1 needs a nonempty grid");
  for (const auto& x : grid)
    if (!fam.domain_box.contains(x))
      throw ArgumentError("admissible_constant_L1 grid leaves the domain box");

  const int n = fam.dim;
  const int q = basis.q();

  // Derivative sups of the horizontal coefficients.
  double total = 0.0;
  std::vector<std::vector<int>> alphas;
  for (int order = 0; order <= fam.step; ++order) {
    std::vector<int> cur(n, 0);
    enumerate_multi_indices(n, order, cur, 0, alphas);
  }
  for (const auto& f : fam.horizontal) {
    for (const auto& alpha : alphas) {
      int order = 0;
      for (int a : alpha) order += a;
      double sup = 0.0;
      for (const auto& x : grid)
        sup = std::max(sup, nested_derivative(f, x, alpha, fd, order).norm());
      total += sup;
    }
  }

  // Structure constants and their derivatives along member flows.
  std::vector<StructureConstants> cs;
  cs.reserve(grid.size());
  for (const auto& x : grid) cs.push_back(structure_constants(basis, x, rank_tol, fd));

  const double delta = fd.nested_step;
  MatX sup_c = MatX::Zero(q * q, q);
  MatX sup_yc = MatX::Zero(q * q, q * q);  // (i*q+j, k*q+l)
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Vec& x = grid[g];
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j)
        for (int l = 0; l < q; ++l)
          sup_c(i * q + j, l) = std::max(sup_c(i * q + j, l), std::abs(cs[g].at(i, j, l)));
    for (int k = 0; k < q; ++k) {
      const Vec xp = rk4_step(basis.Y(k), x, delta);
      const Vec xm = rk4_step(basis.Y(k), x, -delta);
      const auto cp = structure_constants(basis, xp, rank_tol, fd);
      const auto cm = structure_constants(basis, xm, rank_tol, fd);
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j)
          for (int l = 0; l < q; ++l) {
            const double d = std::abs(cp.at(i, j, l) - cm.at(i, j, l)) / (2.0 * delta);
            sup_yc(i * q + j, k * q + l) = std::max(sup_yc(i * q + j, k * q + l), d);
          }
    }
  }
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j)
      for (int k = 0; k < q; ++k)
        for (int l = 0; l < q; ++l)
          total += sup_c(i * q + j, l) + sup_yc(i * q + j, k * q + l);
  return total;
}

}  // namespace ccgeo
