#include <benchmark/benchmark.h>

#include "stfem/analysis.hpp"
#include "stfem/assembly.hpp"
#include "stfem/ocp.hpp"
#include "stfem/solvers.hpp"

namespace {

using namespace stfem;

OcpProblem problem(int d, int m) { return build_problem(build_kuhn_mesh(d, m), 1.0 / (m * m), smooth_target(d - 1)); }

void BM_KuhnMesh(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(build_kuhn_mesh(d, m));
}

void BM_AssembleOperators(benchmark::State& state) {
  const Mesh mesh = build_kuhn_mesh(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const DofMap x = build_dofmap(mesh, SpaceRole::X);
  const DofMap y = build_dofmap(mesh, SpaceRole::Y);
  const Assembler as(mesh);
  for (auto _ : state) {
    benchmark::DoNotOptimize(as.stiffness_x(y, y));
    benchmark::DoNotOptimize(as.heat(y, x));
    benchmark::DoNotOptimize(as.mass(x, x));
  }
  state.counters["simplices"] = static_cast<double>(mesh.num_simplices());
}

void BM_BlockSpmv(benchmark::State& state) {
  const OcpProblem p = problem(3, static_cast<int>(state.range(0)));
  const SparseMatrix k = p.block_matrix();
  std::vector<double> x(k.rows(), 1.0);
  std::vector<double> y(k.rows());
  for (auto _ : state) {
    k.multiply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["nnz"] = static_cast<double>(k.values().size());
}

void BM_Ilu0Factor(benchmark::State& state) {
  const SparseMatrix k = problem(3, static_cast<int>(state.range(0))).block_matrix();
  for (auto _ : state) benchmark::DoNotOptimize(Ilu0(k));
}

void BM_SaddleSolve(benchmark::State& state) {
  const OcpProblem p = problem(3, static_cast<int>(state.range(0)));
  int iterations = 0;
  for (auto _ : state) {
    const OcpSolution s = solve(p);
    iterations = s.report.iterations;
    benchmark::DoNotOptimize(s.u.data());
  }
  state.counters["gmres_iterations"] = iterations;
}

void BM_ErrorQuadrature(benchmark::State& state) {
  const TargetSpec cube = cube_indicator(3);
  const OcpProblem p = build_problem(build_kuhn_mesh(3, 8), 1.0 / 64.0, cube);
  const OcpSolution s = solve(p);
  const int depth = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(l2_error(p, s, cube, depth));
}

}  // namespace

BENCHMARK(BM_KuhnMesh)->Args({3, 32})->Args({4, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleOperators)->Args({3, 16})->Args({3, 32})->Args({4, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockSpmv)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Ilu0Factor)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SaddleSolve)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorQuadrature)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
