#include "ccgeo/measures.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

namespace ccgeo {

namespace {

double box_volume(const CommutatorBasis& basis, const TupleIndex& I, double eps) {
  double v = 1.0;
  for (int k = 0; k < I.p(); ++k) v *= 2.0 * std::pow(eps, basis.lengths[I.idx[k]]);
  return v;
}

Vec sample_box_point(const CommutatorBasis& basis, const TupleIndex& I, double eps,
                     Rng& rng) {
  Vec h(I.p());
  for (int k = 0; k < I.p(); ++k)
    h[k] = rng.uniform(-1.0, 1.0) * std::pow(eps, basis.lengths[I.idx[k]]);
  return h;
}

/// Membership oracle for B_metric(x, R): box-norm thresholds calibrated on a
/// pilot batch of control searches; gray-zone points fall back to the search.
class BallOracle {
 public:
  BallOracle(const CommutatorBasis& basis, const TupleIndex& I, const Vec& x,
             double r_tuple, double R_ball, Metric metric,
             const IntegratorConfig& cfg, std::uint64_t seed, SearchParams search,
             double cover_eps)
      : basis_(basis),
        I_(I),
        x_(x),
        r_tuple_(r_tuple),
        R_(R_ball),
        metric_(metric),
        cfg_(cfg),
        seed_(seed),
        search_(search) {
    search_.population = 24;
    search_.iterations = 25;
    calibrate(cover_eps);
  }

  enum class Verdict { SurrogateIn, SurrogateOut, SearchedIn, SearchedOut };

  Verdict decide(const Vec& h, const Vec& y, std::uint64_t salt) const {
    const double bn = box_norm(h, I_, basis_);
    if (bn <= kappa_in_) return Verdict::SurrogateIn;
    if (bn >= kappa_out_) return Verdict::SurrogateOut;
    return search_decide(y, salt) ? Verdict::SearchedIn : Verdict::SearchedOut;
  }

  double kappa_in() const { return kappa_in_; }
  double kappa_out() const { return kappa_out_; }

 private:
  bool search_decide(const Vec& y, std::uint64_t salt) const {
    // Miss measured in the scaled tuple frame at the target: each direction
    // is judged on its own degree scale, so acceptance slack does not fatten
    // the ball along high-degree directions when the radius shrinks.
    MatX frame(basis_.dim, I_.p());
    for (int k = 0; k < I_.p(); ++k)
      frame.col(k) = std::pow(r_tuple_, basis_.lengths[I_.idx[k]]) *
                     basis_.Y(I_.idx[k]).coeffs(y);
    const Vec target = y;
    const double scale = r_tuple_;
    auto miss = [frame, target, scale](const Vec& end) -> double {
      const Vec d = end - target;
      try {
        const auto res = cramer_coordinates(frame, d, 0.0, /*check_span=*/false);
        return res.xi.norm() + res.residual / scale;
      } catch (const DegenerateTuple&) {
        return d.norm() / scale;
      }
    };
    // Tiered decision: a short search settles clear cases; only targets in
    // the uncertain band pay for the full search with polish.
    SearchParams quick = search_;
    quick.population = 16;
    quick.iterations = 6;
    const auto first = reach_decide(basis_, x_, y, R_, metric_, cfg_, seed_ ^ salt,
                                    quick, nullptr, miss, kFrameTol);
    if (first.reached) return true;
    if (first.miss > kQuickRejectBand * kFrameTol) return false;
    return reach_decide(basis_, x_, y, R_, metric_, cfg_, seed_ ^ salt ^ 0x9999,
                        search_, nullptr, miss, kFrameTol)
        .reached;
  }

  static constexpr double kFrameTol = 0.02;
  static constexpr double kQuickRejectBand = 6.0;

  void calibrate(double cover_eps) {
    const int pilot = 256;
    std::vector<std::pair<double, bool>> marks(pilot);
    parallel_for(pilot, [&](std::size_t i) {
      Rng prng(seed_, 0xca11b0 + i);
      const Vec h = sample_box_point(basis_, I_, cover_eps, prng);
      bool in = false;
      try {
        const Vec y = map_E(basis_, I_, x_, r_tuple_, h, cfg_);
        in = search_decide(y, 0x5a17 + i);
      } catch (const EscapedDomain&) {
        in = false;
      }
      marks[i] = {box_norm(h, I_, basis_), in};
    });
    std::sort(marks.begin(), marks.end());
    // kappa_in: prefix of the sorted pilots that is entirely inside.
    double kin = 0.0;
    double max_in = 0.0;
    for (const auto& [bn, in] : marks) {
      if (in) max_in = bn;
    }
    for (const auto& [bn, in] : marks) {
      if (!in) break;
      kin = bn;
    }
    kappa_in_ = 0.9 * kin;
    // kappa_out is only a generous margin beyond the observed in-extent: a
    // tight cut would silently reject in-ball points whenever the pilot
    // certifications under-reach near the boundary.
    kappa_out_ = max_in > 0.0 ? std::min(1.5 * max_in, cover_eps) : cover_eps;
    if (kappa_out_ < kappa_in_) kappa_in_ = 0.0;
  }

  const CommutatorBasis& basis_;
  TupleIndex I_;
  Vec x_;
  double r_tuple_;
  double R_;
  Metric metric_;
  IntegratorConfig cfg_;
  std::uint64_t seed_;
  SearchParams search_;
  double kappa_in_ = 0.0;
  double kappa_out_ = 0.0;
};

/// Draws M box samples, decides membership and accumulates the area-formula
/// weights.  Sample slots are indexed so the result is seed-deterministic
/// under any thread count.
SampleDump measure_samples(const CommutatorBasis& basis, const TupleIndex& I,
                          const Vec& x, double r, Metric metric, int M,
                          std::uint64_t seed, const IntegratorConfig& cfg,
                          double cover_eps, SearchParams search) {
  I.validate(basis);
  BallOracle oracle(basis, I, x, r, r, metric, cfg, seed, search, cover_eps);

  SampleDump out;
  out.h.resize(M);
  out.y.resize(M);
  out.w.assign(M, 0.0);
  const double volQ = box_volume(basis, I, cover_eps);

  std::atomic<long> surrogate_in{0}, surrogate_out{0}, searched{0};
  std::atomic<long> failures{0};
  std::atomic<long> edge_hits{0};

  parallel_for(M, [&](std::size_t i) {
    Rng rng(seed, 0xabc000 + i);
    const Vec h = sample_box_point(basis, I, cover_eps, rng);
    out.h[i] = h;
    try {
      const Vec y = map_E(basis, I, x, r, h, cfg);
      out.y[i] = y;
      const auto verdict = oracle.decide(h, y, 0xdec0 + i);
      switch (verdict) {
        case BallOracle::Verdict::SurrogateIn: ++surrogate_in; break;
        case BallOracle::Verdict::SurrogateOut: ++surrogate_out; return;
        case BallOracle::Verdict::SearchedIn: ++searched; break;
        case BallOracle::Verdict::SearchedOut: ++searched; return;
      }
      if (box_norm(h, I, basis) >= 0.97 * cover_eps) ++edge_hits;
      const Mat J = jacobian_of_map(
          [&](const Vec& hh) { return map_E(basis, I, x, r, hh, cfg); }, h, 1e-5);
      out.w[i] = volQ * wedge_columns(MatX(J)).norm();
    } catch (const Error&) {
      ++failures;
    }
  });

  MeasureReport rep;
  rep.center = x;
  rep.radius = r;
  rep.tuple = I;
  rep.sample_size = M;
  rep.box_eps = cover_eps;
  rep.oracle_mix.surrogate_in = surrogate_in.load();
  rep.oracle_mix.surrogate_out = surrogate_out.load();
  rep.oracle_mix.searched = searched.load();
  rep.oracle_mix.failures = failures.load();
  rep.failure_rate = static_cast<double>(failures.load()) / M;

  double mean = 0.0;
  for (double w : out.w) mean += w;
  mean /= M;
  double var = 0.0;
  for (double w : out.w) var += (w - mean) * (w - mean);
  var /= std::max(1, M - 1);
  rep.sigma_p = mean;
  rep.std_error = std::sqrt(var / M);
  rep.unreliable = rep.failure_rate > 0.05 || edge_hits.load() > M / 100;
  out.report = rep;
  return out;
}

}  // namespace

MeasureReport sigma_ball(const CommutatorBasis& basis, const TupleIndex& I,
                         const Vec& x, double r, Metric metric, int M,
                         std::uint64_t seed, const IntegratorConfig& cfg,
                         double cover_eps, SearchParams search) {
  return measure_samples(basis, I, x, r, metric, M, seed, cfg, cover_eps, search)
      .report;
}

SampleDump sigma_ball_samples(const CommutatorBasis& basis, const TupleIndex& I,
                              const Vec& x, double r, Metric metric, int M,
                              std::uint64_t seed, const IntegratorConfig& cfg,
                              double cover_eps, SearchParams search) {
  return measure_samples(basis, I, x, r, metric, M, seed, cfg, cover_eps, search);
}

DoublingReport doubling_ratio(const CommutatorBasis& basis, const Vec& x, double r,
                              Metric metric, int M, std::uint64_t seed,
                              const IntegratorConfig& cfg, double cover_eps,
                              double rank_tol) {
  DoublingReport rep;
  const TupleIndex I_r = select_maximal_tuple(basis, x, r, rank_tol).I;
  const TupleIndex I_2r = select_maximal_tuple(basis, x, 2.0 * r, rank_tol).I;
  // Common random numbers across the two radii: the box draws and oracle
  // streams pair up, so shared estimator noise cancels in the quotient.
  rep.at_r = sigma_ball(basis, I_r, x, r, metric, M, seed, cfg, cover_eps);
  rep.at_2r = sigma_ball(basis, I_2r, x, 2.0 * r, metric, M, seed, cfg, cover_eps);
  if (rep.at_r.unreliable || rep.at_2r.unreliable)
    throw Error("doubling_ratio: unreliable measure estimate");
  if (rep.at_r.sigma_p <= 0.0) throw Error("doubling_ratio: vanishing ball measure");
  rep.ratio = rep.at_2r.sigma_p / rep.at_r.sigma_p;
  return rep;
}

TestFunction make_test_function(const std::string& name, const Poly& f) {
  TestFunction tf;
  tf.name = name;
  tf.f = f;
  for (int i = 0; i < f.nvars(); ++i) tf.grad.push_back(f.derivative(i));
  return tf;
}

std::vector<TestFunction> default_test_suite(int dim, std::uint64_t seed,
                                             int n_random) {
  std::vector<TestFunction> suite;
  suite.push_back(make_test_function("const", Poly::constant(1.0, dim)));
  for (int i = 0; i < dim; ++i) {
    const Poly xi = Poly::variable(i, dim);
    suite.push_back(make_test_function("x" + std::to_string(i + 1), xi));
    suite.push_back(
        make_test_function("x" + std::to_string(i + 1) + "^2", xi * xi));
  }
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      suite.push_back(make_test_function(
          "x" + std::to_string(i + 1) + "*x" + std::to_string(j + 1),
          Poly::variable(i, dim) * Poly::variable(j, dim)));
  Rng rng(seed, 0xf00d);
  for (int k = 0; k < n_random; ++k) {
    Poly p = Poly::constant(rng.uniform(-1.0, 1.0), dim);
    for (int i = 0; i < dim; ++i) {
      p = p + Poly::variable(i, dim) * rng.uniform(-1.0, 1.0);
      for (int j = i; j < dim; ++j)
        p = p + Poly::variable(i, dim) * Poly::variable(j, dim) *
                    rng.uniform(-1.0, 1.0);
    }
    suite.push_back(make_test_function("rand" + std::to_string(k + 1), p));
  }
  return suite;
}

PoincareReport poincare_ratio(const Family& fam, const CommutatorBasis& basis,
                              const Vec& x, double r,
                              const std::vector<TestFunction>& suite, int M,
                              std::uint64_t seed, const IntegratorConfig& cfg,
                              double enlargement, double cover_eps,
                              double rank_tol) {
  if (suite.empty()) throw ArgumentError("poincare_ratio: empty test suite");
  PoincareReport rep;
  rep.enlargement = enlargement;

  const TupleIndex I_r = select_maximal_tuple(basis, x, r, rank_tol).I;
  const TupleIndex I_R =
      select_maximal_tuple(basis, x, enlargement * r, rank_tol).I;
  // Same streams for both balls so shared estimator noise cancels in the
  // LHS/RHS quotient.
  auto inner = measure_samples(basis, I_r, x, r, Metric::cc, M, seed, cfg,
                               cover_eps, {});
  auto outer = measure_samples(basis, I_R, x, enlargement * r, Metric::cc, M,
                               seed, cfg, cover_eps, {});


  double wsum = 0.0;
  for (double w : inner.w) wsum += w;
  if (wsum <= 0.0) throw Error("poincare_ratio: empty inner ball sample");

  for (const auto& tf : suite) {
    PoincareRow row;
    row.name = tf.name;

    // mean of f over the inner ball (self-normalized)
    double fbar = 0.0;
    for (std::size_t i = 0; i < inner.w.size(); ++i)
      if (inner.w[i] > 0.0) fbar += inner.w[i] * tf.f.eval(inner.y[i]);
    fbar /= wsum;

    double lhs = 0.0, lhs2 = 0.0;
    for (std::size_t i = 0; i < inner.w.size(); ++i) {
      if (inner.w[i] <= 0.0) continue;
      const double g = inner.w[i] * std::abs(tf.f.eval(inner.y[i]) - fbar);
      lhs += g;
      lhs2 += g * g;
    }
    lhs /= M;
    lhs2 /= M;
    const double lhs_se = std::sqrt(std::max(0.0, lhs2 - lhs * lhs) / M);

    double rhs = 0.0, rhs2 = 0.0;
    long rhs_contributions = 0;
    for (std::size_t i = 0; i < outer.w.size(); ++i) {
      if (outer.w[i] <= 0.0) continue;
      const Vec& y = outer.y[i];
      Vec grad(fam.dim);
      for (int a = 0; a < fam.dim; ++a) grad[a] = tf.grad[a].eval(y);
      double xsum = 0.0;
      for (const auto& X : fam.horizontal)
        xsum += std::abs(r * grad.dot(X.coeffs(y)));
      const double g = outer.w[i] * xsum;
      if (g > 0.0) ++rhs_contributions;
      rhs += g;
      rhs2 += g * g;
    }
    rhs /= M;
    rhs2 /= M;
    (void)rhs2;

    const double lhs_floor = 1e-12 * (1.0 + std::abs(fbar));
    row.lhs = lhs;
    row.rhs = rhs;
    if (lhs <= std::max(lhs_floor, 3.0 * lhs_se)) {
      row.ratio = 0.0;  // indistinguishable from zero oscillation
    } else if (rhs_contributions == 0) {
      row.flagged = true;  // derivative mass identically zero: not ratioed
      row.ratio = std::numeric_limits<double>::infinity();
    } else {
      row.ratio = lhs / rhs;
    }
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    rep.rows.push_back(std::move(row));
  }
  rep.inner = std::move(inner);
  rep.outer = std::move(outer);
  return rep;
}

int cloud_effective_rank(const std::vector<Vec>& points, double rel_cut) {
  if (points.empty()) return 0;
  const int n = static_cast<int>(points[0].size());
  MatX C(points.size(), n);
  Vec mean = Vec::Zero(n);
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    C.row(static_cast<int>(i)) = (points[i] - mean).transpose();
  Eigen::JacobiSVD<MatX> svd(C);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > rel_cut * sv[0]) ++rank;
  return rank;
}

}  // namespace ccgeo
