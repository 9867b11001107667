// Parallel kernels against their serial reference versions.
// Run with OMP_NUM_THREADS set to compare thread counts.
#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "rcaqc/kernels.hpp"

using namespace rcaqc;
namespace k = rcaqc::kernels;

namespace {

Grid cube(int n) { return Grid{{n, n, n}, {1.5, 1.5, 1.5}, {0.0, 0.0, 0.0}}; }

std::vector<std::uint8_t> ball_mask(const Grid& g) {
  std::vector<std::uint8_t> m(g.size(), 0);
  const double c = 0.5 * (g.dims[0] - 1), r = 0.3 * g.dims[0];
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        const double d = std::hypot(x - c, y - c, z - c);
        m[g.index(x, y, z)] = std::abs(d - r) < 1.0;  // a shell, like a surface
      }
  return m;
}

std::vector<float> noise(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(100.0f, 20.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

struct Field {
  Grid grid;
  k::ControlLattice lattice;
  std::vector<Vec3> coeffs;
  std::vector<Vec3> disp;
};

Field smooth_field(int n) {
  Field f{cube(n), {}, {}, {}};
  f.lattice = k::ControlLattice::covering(f.grid, {16.0, 16.0, 16.0});
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  f.coeffs.resize(f.lattice.size());
  for (auto& c : f.coeffs) c = {u(rng), u(rng), u(rng)};
  f.disp.resize(f.grid.size());
  k::bspline_displacement(f.lattice, f.coeffs, f.grid, f.disp);
  return f;
}

void set_voxels(benchmark::State& state, std::size_t voxels) {
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * voxels));
}

// Distance transform. The serial version is all-pairs, so it only runs on
// small grids.
void BM_Edt(benchmark::State& state) {
  const Grid g = cube(static_cast<int>(state.range(0)));
  const auto m = ball_mask(g);
  for (auto _ : state) benchmark::DoNotOptimize(k::squared_distance_transform(g, m));
  set_voxels(state, g.size());
}
void BM_EdtSerial(benchmark::State& state) {
  const Grid g = cube(static_cast<int>(state.range(0)));
  const auto m = ball_mask(g);
  for (auto _ : state) benchmark::DoNotOptimize(k::serial::squared_distance_transform(g, m));
  set_voxels(state, g.size());
}
BENCHMARK(BM_Edt)->Arg(16)->Arg(24)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EdtSerial)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

template <bool Serial>
void BM_BoxSum(benchmark::State& state) {
  const Grid g = cube(static_cast<int>(state.range(0)));
  const auto f = noise(g.size(), 1);
  const std::vector<double> in(f.begin(), f.end());
  std::vector<double> out(g.size());
  for (auto _ : state) {
    if constexpr (Serial) k::serial::box_sum(g.dims, 2, in, out);
    else k::box_sum(g.dims, 2, in, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_voxels(state, g.size());
}
BENCHMARK(BM_BoxSum<false>)->Name("BM_BoxSum")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BoxSum<true>)->Name("BM_BoxSumSerial")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LocalNcc(benchmark::State& state) {
  const Grid g = cube(static_cast<int>(state.range(0)));
  const auto f = noise(g.size(), 1), m = noise(g.size(), 2);
  const k::LocalNcc ncc(g.dims, 2, 1e-2, f);
  for (auto _ : state) benchmark::DoNotOptimize(ncc.value(m));
  set_voxels(state, g.size());
}
void BM_LocalNccGradient(benchmark::State& state) {
  const Grid g = cube(static_cast<int>(state.range(0)));
  const auto f = noise(g.size(), 1), m = noise(g.size(), 2);
  const k::LocalNcc ncc(g.dims, 2, 1e-2, f);
  std::vector<float> grad(g.size());
  for (auto _ : state) benchmark::DoNotOptimize(ncc.value_and_gradient(m, grad));
  set_voxels(state, g.size());
}
void BM_LocalNccSerial(benchmark::State& state) {
  const Grid g = cube(static_cast<int>(state.range(0)));
  const auto f = noise(g.size(), 1), m = noise(g.size(), 2);
  for (auto _ : state) benchmark::DoNotOptimize(k::serial::local_ncc(g.dims, 2, 1e-2, f, m));
  set_voxels(state, g.size());
}
BENCHMARK(BM_LocalNcc)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LocalNccGradient)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LocalNccSerial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

template <bool Serial>
void BM_BsplineDisplacement(benchmark::State& state) {
  Field f = smooth_field(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Serial) k::serial::bspline_displacement(f.lattice, f.coeffs, f.grid, f.disp);
    else k::bspline_displacement(f.lattice, f.coeffs, f.grid, f.disp);
    benchmark::DoNotOptimize(f.disp.data());
  }
  set_voxels(state, f.grid.size());
}
BENCHMARK(BM_BsplineDisplacement<false>)->Name("BM_BsplineDisplacement")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BsplineDisplacement<true>)
    ->Name("BM_BsplineDisplacementSerial")
    ->Arg(32)
    ->Arg(64)
    ->Unit(benchmark::kMillisecond);

template <bool Serial>
void BM_BsplineAdjoint(benchmark::State& state) {
  Field f = smooth_field(static_cast<int>(state.range(0)));
  std::vector<Vec3> out(f.lattice.size());
  for (auto _ : state) {
    if constexpr (Serial) k::serial::bspline_adjoint(f.lattice, f.grid, f.disp, out);
    else k::bspline_adjoint(f.lattice, f.grid, f.disp, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_voxels(state, f.grid.size());
}
BENCHMARK(BM_BsplineAdjoint<false>)->Name("BM_BsplineAdjoint")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BsplineAdjoint<true>)->Name("BM_BsplineAdjointSerial")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

template <bool Serial>
void BM_WarpLinear(benchmark::State& state) {
  Field f = smooth_field(static_cast<int>(state.range(0)));
  const auto img = noise(f.grid.size(), 4);
  std::vector<float> out(f.grid.size());
  const Vec3 t{1.2, -0.7, 0.4};
  for (auto _ : state) {
    if constexpr (Serial) k::serial::warp_linear(f.grid, img, f.grid, t, f.disp, out);
    else k::warp_linear(f.grid, img, f.grid, t, f.disp, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_voxels(state, f.grid.size());
}
BENCHMARK(BM_WarpLinear<false>)->Name("BM_WarpLinear")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WarpLinear<true>)->Name("BM_WarpLinearSerial")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
