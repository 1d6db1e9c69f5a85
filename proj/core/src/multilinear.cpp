#include "ccgeo/multilinear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccgeo {

TupleIndex TupleIndex::from_one_based(const std::vector<int>& i) {
  TupleIndex out;
  out.idx.reserve(i.size());
  for (int v : i) out.idx.push_back(v - 1);
  return out;
}

int TupleIndex::degree(const CommutatorBasis& basis) const {
  int d = 0;
  for (int i : idx) d += basis.lengths[i];
  return d;
}

void TupleIndex::validate(const CommutatorBasis& basis) const {
  if (idx.empty()) throw ArgumentError("empty tuple");
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= basis.q())
      throw ArgumentError("tuple index out of range");
    if (k > 0 && idx[k] <= idx[k - 1])
      throw ArgumentError("tuple indices must be strictly increasing");
  }
}

std::string TupleIndex::str() const {
  std::ostringstream os;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) os << ",";
    os << idx[k] + 1;
  }
  return os.str();
}

std::vector<TupleIndex> enumerate_tuples(int p, int q) {
  std::vector<TupleIndex> out;
  if (p < 1 || p > q) return out;
  std::vector<int> cur(p);
  for (int i = 0; i < p; ++i) cur[i] = i;
  while (true) {
    out.push_back(TupleIndex(cur));
    int i = p - 1;
    while (i >= 0 && cur[i] == q - p + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < p; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

double WedgeVector::norm() const {
  double s = 0.0;
  for (double c : comps) s += c * c;
  return std::sqrt(s);
}

double WedgeVector::dot(const WedgeVector& o) const {
  double s = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) s += comps[i] * o.comps[i];
  return s;
}

WedgeVector wedge_columns(const MatX& cols) {
  const int n = static_cast<int>(cols.rows());
  const int p = static_cast<int>(cols.cols());
  WedgeVector w;
  w.p = p;
  w.n = n;
  const auto rows = enumerate_tuples(p, n);
  w.comps.reserve(rows.size());
  Mat minor(p, p);
  for (const auto& K : rows) {
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) minor(a, b) = cols(K.idx[a], b);
    w.comps.push_back(minor.determinant());
  }
  return w;
}

WedgeVector wedge_components(const CommutatorBasis& basis, const TupleIndex& I,
                             const Vec& x) {
  I.validate(basis);
  if (I.p() > std::min(basis.dim, basis.q()))
    throw ArgumentError("tuple grade exceeds min(n, q)");
  MatX cols(basis.dim, I.p());
  for (int k = 0; k < I.p(); ++k) cols.col(k) = basis.Y(I.idx[k]).coeffs(x);
  return wedge_columns(cols);
}

CramerResult cramer_coordinates(const MatX& cols, const Vec& W, double rank_tol,
                                bool check_span, double span_tol) {
  const int p = static_cast<int>(cols.cols());
  const WedgeVector YI = wedge_columns(cols);
  const double vol2 = YI.dot(YI);
  const double floor = std::max(rank_tol * rank_tol, 1e-300);
  if (vol2 <= floor)
    throw DegenerateTuple("tuple volume " + std::to_string(std::sqrt(vol2)) +
                          " below rank tolerance");
  CramerResult out;
  out.xi = Vec::Zero(p);
  MatX replaced = cols;
  for (int k = 0; k < p; ++k) {
    replaced.col(k) = W;
    out.xi[k] = wedge_columns(replaced).dot(YI) / vol2;
    replaced.col(k) = cols.col(k);
  }
  out.residual = (cols * VecX(out.xi) - VecX(W)).norm();
  if (check_span && out.residual > span_tol * std::max(W.norm(), 1e-300))
    throw NotInSpan("vector is not in the span of the tuple (residual " +
                        std::to_string(out.residual) + ")",
                    out.residual);
  return out;
}

CramerResult cramer_coordinates(const CommutatorBasis& basis, const TupleIndex& I,
                                const Vec& x, const Vec& W, double rank_tol,
                                double span_tol) {
  I.validate(basis);
  MatX cols(basis.dim, I.p());
  for (int k = 0; k < I.p(); ++k) cols.col(k) = basis.Y(I.idx[k]).coeffs(x);
  return cramer_coordinates(cols, W, rank_tol, /*check_span=*/true, span_tol);
}

double lambda_vector(const CommutatorBasis& basis, int p, const Vec& x, double r) {
  if (p < 1 || p > std::min(basis.dim, basis.q()))
    throw ArgumentError("lambda_vector grade out of range");
  if (!(r > 0.0)) throw ArgumentError("lambda_vector needs r > 0");
  const MatX M = basis.member_matrix(x);
  double acc = 0.0;
  MatX cols(basis.dim, p);
  for (const auto& I : enumerate_tuples(p, basis.q())) {
    for (int k = 0; k < p; ++k) cols.col(k) = M.col(I.idx[k]);
    const double v = wedge_columns(cols).norm();
    acc += std::pow(r, 2.0 * I.degree(basis)) * v * v;
  }
  return std::sqrt(acc);
}

int pointwise_rank(const CommutatorBasis& basis, const Vec& x, double rank_tol) {
  const MatX M = basis.member_matrix(x);
  Eigen::JacobiSVD<MatX> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > rank_tol * sv[0]) ++rank;
  return rank;
}

double nu_infimum(const CommutatorBasis& basis, const std::vector<Vec>& sample,
                  double rank_tol) {
  if (sample.empty()) throw ArgumentError("nu_infimum needs a nonempty sample");
  double inf = std::numeric_limits<double>::infinity();
  for (const auto& x : sample) {
    const int p = pointwise_rank(basis, x, rank_tol);
    const double v = p == 0 ? 0.0 : lambda_vector(basis, p, x, 1.0);
    inf = std::min(inf, v);
  }
  return inf;
}

MaximalTuple select_maximal_tuple(const CommutatorBasis& basis, const Vec& x,
                                  double r, double rank_tol, double eta) {
  if (!(r > 0.0)) throw ArgumentError("select_maximal_tuple needs r > 0");
  if (!(eta > 0.0 && eta < 1.0))
    throw ArgumentError("select_maximal_tuple needs eta in (0, 1)");
  const int p = pointwise_rank(basis, x, rank_tol);
  if (p == 0)
    throw DegeneratePoint("all commutators vanish at the requested point");

  const MatX M = basis.member_matrix(x);
  const auto tuples = enumerate_tuples(p, basis.q());
  std::vector<double> values(tuples.size());
  MatX cols(basis.dim, p);
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    for (int k = 0; k < p; ++k) cols.col(k) = M.col(tuples[t].idx[k]);
    values[t] = wedge_columns(cols).norm() *
                std::pow(r, tuples[t].degree(basis));
  }
  const double vmax = *std::max_element(values.begin(), values.end());

  // Among near-exact ties pick the smallest degree, then lexicographic tuple.
  auto better = [&](std::size_t a, std::size_t b) {
    const int da = tuples[a].degree(basis), db = tuples[b].degree(basis);
    if (da != db) return da < db;
    return tuples[a].idx < tuples[b].idx;
  };
  std::size_t best = tuples.size();
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    if (values[t] < vmax * (1.0 - 1e-9)) continue;
    if (best == tuples.size() || better(t, best)) best = t;
  }

  MaximalTuple out;
  out.I = tuples[best];
  out.value = values[best];
  double second = -1.0;
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    if (t == best) continue;
    if (values[t] > second) {
      second = values[t];
      out.runner_up = tuples[t];
      out.runner_value = values[t];
    }
  }
  return out;
}

}  // namespace ccgeo
