#ifndef CCGEO_COMMON_HPP
#define CCGEO_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccgeo {

// Ambient dimension is small by design; fixed-capacity vectors keep the ODE
// and bracket hot paths off the heap.
constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Axis-aligned box in R^n used both as field domain and as integration guard.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {}

  static Box cube(int dim, double half) {
    Box b;
    b.lo = Vec::Constant(dim, -half);
    b.hi = Vec::Constant(dim, half);
    return b;
  }

  int dim() const { return static_cast<int>(lo.size()); }
  bool empty() const { return lo.size() == 0; }

  template <class VecT>
  bool contains(const VecT& x) const {
    if (empty()) return true;
    for (int i = 0; i < x.size() && i < lo.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Error taxonomy.  Verdicts that are expected outcomes (Unreached, failed
// inclusion probes) are returned in reports, not thrown.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ArgumentError : Error {
  using Error::Error;
};

/// A bracket of basis members could not be expressed in the span of the
/// family at a point: the family is not s-involutive there.
struct NotInvolutive : Error {
  int i = -1, j = -1;
  Vec at;
  NotInvolutive(const std::string& msg, int i_, int j_, Vec x)
      : Error(msg), i(i_), j(j_), at(std::move(x)) {}
};

struct DegenerateTuple : Error {
  using Error::Error;
};

struct DegeneratePoint : Error {
  using Error::Error;
};

struct NotInSpan : Error {
  double residual = 0.0;
  NotInSpan(const std::string& msg, double res) : Error(msg), residual(res) {}
};

struct EscapedDomain : Error {
  double exit_time = 0.0;
  EscapedDomain(const std::string& msg, double t) : Error(msg), exit_time(t) {}
};

struct RadiusTooLarge : Error {
  double blowup_rho = 0.0;
  RadiusTooLarge(const std::string& msg, double rho) : Error(msg), blowup_rho(rho) {}
};

struct FrameCollapse : Error {
  using Error::Error;
};

struct LiftDiverged : Error {
  double t = 0.0;
  LiftDiverged(const std::string& msg, double t_) : Error(msg), t(t_) {}
};

struct NotInjective : Error {
  Vec h1, h2;
  NotInjective(const std::string& msg, Vec a, Vec b)
      : Error(msg), h1(std::move(a)), h2(std::move(b)) {}
};

// ---------------------------------------------------------------------------
// Deterministic RNG.  Hand-rolled so that streams are reproducible across
// platforms and standard library versions; substreams are derived from
// (seed, stream) so parallel batches stay deterministic.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t st = seed ^ (0xd1342543de82ef95ULL * (stream + 1));
    for (int i = 0; i < 4; ++i) s_[i] = splitmix64(st);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal (Box-Muller, no caching so streams stay simple).
  double normal() {
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Uniform on the unit sphere S^{d-1}.
  Vec on_sphere(int d) {
    Vec v(d);
    double n2 = 0.0;
    do {
      for (int i = 0; i < d; ++i) v[i] = normal();
      n2 = v.squaredNorm();
    } while (n2 < 1e-12);
    return v / std::sqrt(n2);
  }

  /// Uniform in the closed unit ball of R^d.
  Vec in_unit_ball(int d) {
    Vec v = on_sphere(d);
    return v * std::pow(uniform(), 1.0 / d);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// Parallel map over an index range.  Results must be written to per-index
// slots by the body so the outcome does not depend on the thread count.
// CCGEO_THREADS caps the pool size.
// ---------------------------------------------------------------------------

int max_threads();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Least-squares slope of log(y) against log(x); pairs with y <= floor are
/// skipped.  Returns NaN when fewer than two usable pairs remain.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                    double floor = 0.0);

/// Spectral (operator) norm.
double operator_norm(const Mat& m);

}  // namespace ccgeo

#endif  // CCGEO_COMMON_HPP
