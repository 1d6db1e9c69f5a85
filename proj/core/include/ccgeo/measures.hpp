#ifndef CCGEO_MEASURES_HPP
#define CCGEO_MEASURES_HPP

#include "ccgeo/metrics.hpp"

namespace ccgeo {

/// Ball membership decided in box coordinates where possible (thresholds
/// calibrated against the control search on a pilot batch), with the
/// cross-entropy decision as the fallback in the gray zone.
struct OracleMix {
  long surrogate_in = 0;
  long surrogate_out = 0;
  long searched = 0;
  long failures = 0;
};

struct MeasureReport {
  Vec center;
  double radius = 0.0;
  TupleIndex tuple;
  double sigma_p = 0.0;
  double std_error = 0.0;
  std::string method = "area-formula";
  int sample_size = 0;
  double failure_rate = 0.0;
  bool unreliable = false;
  OracleMix oracle_mix;
  double box_eps = 0.0;  // parametrization box actually used
};

/// p-dimensional measure of B_metric(x, r) by Monte Carlo integration of the
/// Jacobian surface density |d_1 E ^ ... ^ d_p E| over the coordinate box,
/// restricted to the ball by the membership oracle.
MeasureReport sigma_ball(const CommutatorBasis& basis, const TupleIndex& I,
                         const Vec& x, double r, Metric metric, int M,
                         std::uint64_t seed, const IntegratorConfig& cfg,
                         double cover_eps = 1.3, SearchParams search = {});

/// Same estimate keeping the per-sample box points, images and area-formula
/// weights (zero weight = rejected), for plotting and re-weighting.
struct SampleDump {
  std::vector<Vec> h;
  std::vector<Vec> y;
  std::vector<double> w;
  MeasureReport report;
};
SampleDump sigma_ball_samples(const CommutatorBasis& basis, const TupleIndex& I,
                              const Vec& x, double r, Metric metric, int M,
                              std::uint64_t seed, const IntegratorConfig& cfg,
                              double cover_eps = 1.3, SearchParams search = {});

/// sigma_ball(2r) / sigma_ball(r), the tuple re-selected at 2r.
struct DoublingReport {
  double ratio = 0.0;
  MeasureReport at_r;
  MeasureReport at_2r;
};
DoublingReport doubling_ratio(const CommutatorBasis& basis, const Vec& x, double r,
                              Metric metric, int M, std::uint64_t seed,
                              const IntegratorConfig& cfg, double cover_eps = 1.3,
                              double rank_tol = 1e-8);

/// Test function with analytic gradient.
struct TestFunction {
  std::string name;
  Poly f;
  std::vector<Poly> grad;
};
TestFunction make_test_function(const std::string& name, const Poly& f);
/// Coordinates, quadratic monomials and seeded random degree-2 polynomials.
std::vector<TestFunction> default_test_suite(int dim, std::uint64_t seed,
                                             int n_random = 5);

struct PoincareRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool flagged = false;  // rhs below noise while lhs above it
};

struct PoincareReport {
  double max_ratio = 0.0;
  double enlargement = 3.0;
  std::vector<PoincareRow> rows;
  SampleDump inner;  // samples and diagnostics at radius r
  SampleDump outer;  // and at radius C r
};

/// max over the suite of int_{B(x,r)} |f - mean f| dsigma over
/// sum_j int_{B(x,Cr)} |r X_j f| dsigma, both by importance-weighted Monte
/// Carlo on the area-formula parametrization.
PoincareReport poincare_ratio(const Family& fam, const CommutatorBasis& basis,
                              const Vec& x, double r,
                              const std::vector<TestFunction>& suite, int M,
                              std::uint64_t seed, const IntegratorConfig& cfg,
                              double enlargement = 3.0, double cover_eps = 1.3,
                              double rank_tol = 1e-8);

/// Effective rank of a point cloud (PCA at a relative singular-value cut).
int cloud_effective_rank(const std::vector<Vec>& points, double rel_cut = 0.05);

}  // namespace ccgeo

#endif  // CCGEO_MEASURES_HPP
