#include <benchmark/benchmark.h>

#include "ccgeo/families.hpp"
#include "ccgeo/measures.hpp"

namespace {

using namespace ccgeo;

struct Fixture {
  BuiltinFamily bf = make_builtin("heisenberg");
  CommutatorBasis basis = generate_commutators(bf.family);
  CommutatorBasis numeric = generate_commutators(bf.family, BracketMode::Numeric);
  IntegratorConfig cfg;
  Fixture() { cfg.domain = bf.family.domain_box; }
};

Fixture& fx() {
  static Fixture f;
  return f;
}

void BM_BracketNumeric(benchmark::State& state) {
  auto& f = fx();
  Vec x(3);
  x << 0.1, -0.2, 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.numeric.Y(2).coeffs(x));
  }
}
BENCHMARK(BM_BracketNumeric);

void BM_MapE(benchmark::State& state) {
  auto& f = fx();
  const auto sel = select_maximal_tuple(f.basis, f.bf.base_point, 0.1);
  Vec h(3);
  h << 0.2, -0.1, 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(map_E(f.basis, sel.I, f.bf.base_point, 0.1, h, f.cfg));
  }
}
BENCHMARK(BM_MapE);

void BM_CramerCoordinates(benchmark::State& state) {
  auto& f = fx();
  Vec x(3);
  x << 0.1, -0.2, 0.05;
  const auto sel = select_maximal_tuple(f.basis, x, 1.0);
  MatX cols(3, 3);
  for (int k = 0; k < 3; ++k) cols.col(k) = f.basis.Y(sel.I.idx[k]).coeffs(x);
  Vec w = cols * Eigen::Vector3d(0.3, -0.7, 0.2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cramer_coordinates(cols, w, 0.0, false));
  }
}
BENCHMARK(BM_CramerCoordinates);

void BM_LiftStep(benchmark::State& state) {
  auto& f = fx();
  const auto sel = select_maximal_tuple(f.basis, f.bf.base_point, 0.1);
  const auto cloud =
      sample_ball(f.basis, f.bf.base_point, 0.5 * 0.09 * 0.1, Metric::rho, 1, 7, f.cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lift_path(f.basis, sel.I, f.bf.base_point, 0.1,
                                       cloud.points[0].second, 0.3, f.cfg, 100));
  }
}
BENCHMARK(BM_LiftStep);

void BM_ReachDecide(benchmark::State& state) {
  auto& f = fx();
  Vec y(3);
  y << 0.05, 0.05, 0.0;
  SearchParams sp;
  sp.population = 24;
  sp.iterations = 25;
  std::uint64_t s = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        reach_decide(f.basis, f.bf.base_point, y, 0.1, Metric::cc, f.cfg, ++s, sp));
  }
}
BENCHMARK(BM_ReachDecide);

}  // namespace

BENCHMARK_MAIN();
