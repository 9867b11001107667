#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "rcaqc/kernels.hpp"

using namespace rcaqc;
using namespace rcaqc::kernels;

namespace {

std::vector<float> smooth_random(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng);
  std::vector<float> v(g.size());
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x)
        v[g.index(x, y, z)] = static_cast<float>(5.0 + std::sin(0.5 * x + a) + std::cos(0.4 * y + b) * std::sin(0.3 * z + c) +
                                                 0.2 * u(rng));
  return v;
}

}  // namespace

TEST_CASE("distance transform matches all-pairs search") {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution on(0.05);
  for (int t = 0; t < 5; ++t) {
    const Grid g{{9 + t, 7, 5 + t}, {1.0 + 0.5 * t, 0.7, 1.3}, {0, 0, 0}};
    std::vector<std::uint8_t> mask(g.size());
    for (auto& m : mask) m = on(rng);
    mask[0] = 1;
    const auto fast = squared_distance_transform(g, mask);
    const auto slow = serial::squared_distance_transform(g, mask);
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
  }
  const Grid g{{3, 3, 3}, {1, 1, 1}, {0, 0, 0}};
  for (double d : squared_distance_transform(g, std::vector<std::uint8_t>(27, 0))) CHECK(std::isinf(d));
}

TEST_CASE("box sum matches explicit windows") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int r : {1, 2, 3}) {
    const Index3 d{7, 5, 9};
    std::vector<double> in(7 * 5 * 9), a(in.size()), b(in.size());
    for (auto& v : in) v = u(rng);
    box_sum(d, r, in, a);
    serial::box_sum(d, r, in, b);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    std::vector<double> ones(in.size(), 1.0), cnt(in.size());
    serial::box_sum(d, r, ones, cnt);
    const auto c = box_count(d, r);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(c[i] == cnt[i]);
  }
}

TEST_CASE("local NCC matches the serial definition") {
  std::mt19937_64 rng(7);
  const Grid g{{10, 9, 8}, {1, 1, 1}, {0, 0, 0}};
  const auto f = smooth_random(g, rng), m = smooth_random(g, rng);
  const LocalNcc ncc(g.dims, 2, 1e-2, f);
  CHECK(ncc.value(m) == doctest::Approx(serial::local_ncc(g.dims, 2, 1e-2, f, m)).epsilon(1e-10));
  // Self-similarity stays below 1 only through epsilon.
  CHECK(ncc.value(f) > 0.9);
  CHECK(ncc.value(f) > ncc.value(m));
}

TEST_CASE("local NCC gradient matches finite differences") {
  std::mt19937_64 rng(8);
  const Grid g{{8, 8, 8}, {1, 1, 1}, {0, 0, 0}};
  const auto f = smooth_random(g, rng);
  auto m = smooth_random(g, rng);
  const LocalNcc ncc(g.dims, 2, 1e-2, f);
  std::vector<float> grad(g.size());
  ncc.value_and_gradient(m, grad);
  const double h = 1.0 / 64.0;  // exact in float around these magnitudes
  for (std::size_t i : {0ul, 9ul, 73ul, 200ul, 511ul}) {
    const float keep = m[i];
    m[i] = keep + static_cast<float>(h);
    const double up = ncc.value(m);
    m[i] = keep - static_cast<float>(h);
    const double down = ncc.value(m);
    m[i] = keep;
    CHECK(grad[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-3).scale(1e-6));
  }
}

TEST_CASE("B-spline displacement and adjoint") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Grid g{{13, 11, 9}, {1.5, 1.0, 2.0}, {3.0, -2.0, 0.0}};
  const auto lat = ControlLattice::covering(g, {5.0, 5.0, 5.0});
  std::vector<Vec3> c(lat.size());
  for (auto& v : c) v = {u(rng), u(rng), u(rng)};

  std::vector<Vec3> fast(g.size()), slow(g.size());
  bspline_displacement(lat, c, g, fast);
  serial::bspline_displacement(lat, c, g, slow);
  for (std::size_t i = 0; i < fast.size(); ++i)
    for (int a = 0; a < 3; ++a) CHECK(fast[i][a] == doctest::Approx(slow[i][a]).epsilon(1e-12));

  std::vector<Vec3> vals(g.size()), adj(lat.size()), adj_slow(lat.size());
  for (auto& v : vals) v = {u(rng), u(rng), u(rng)};
  bspline_adjoint(lat, g, vals, adj);
  serial::bspline_adjoint(lat, g, vals, adj_slow);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (int a = 0; a < 3; ++a) lhs += fast[i][a] * vals[i][a];
  for (std::size_t j = 0; j < lat.size(); ++j)
    for (int a = 0; a < 3; ++a) {
      rhs += c[j][a] * adj[j][a];
      CHECK(adj[j][a] == doctest::Approx(adj_slow[j][a]).epsilon(1e-10).scale(1e-9));
    }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("B-spline basis is a partition of unity") {
  for (double t : {0.0, 0.25, 0.5, 0.9}) {
    double w[4];
    bspline_basis(t, w);
    CHECK(w[0] + w[1] + w[2] + w[3] == doctest::Approx(1.0));
    for (double x : w) CHECK(x >= 0.0);
  }
}

TEST_CASE("trilinear warp matches the textbook form and its gradient") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const Grid mg{{12, 10, 8}, {1.0, 1.5, 2.0}, {0.0, 1.0, -1.0}};
  const Grid tg{{9, 9, 7}, {1.2, 1.3, 1.9}, {1.0, 0.0, 0.0}};
  const auto img = smooth_random(mg, rng);
  std::vector<Vec3> disp(tg.size());
  for (auto& d : disp) d = {u(rng), u(rng), u(rng)};
  const Vec3 t{0.7, -0.4, 0.3};

  std::vector<float> a(tg.size()), b(tg.size());
  std::vector<Vec3> grad(tg.size());
  warp_linear(mg, img, tg, t, disp, a, grad);
  serial::warp_linear(mg, img, tg, t, disp, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-5).scale(1e-5));

  // d out / d disp equals the spatial gradient of the interpolant.
  const double h = 1e-3;
  std::vector<float> up(tg.size()), down(tg.size());
  for (int axis = 0; axis < 3; ++axis) {
    auto dp = disp, dm = disp;
    for (auto& d : dp) d[axis] += h;
    for (auto& d : dm) d[axis] -= h;
    serial::warp_linear(mg, img, tg, t, dp, up);
    serial::warp_linear(mg, img, tg, t, dm, down);
    for (std::size_t i = 0; i < tg.size(); i += 37) {
      const double fd = (double(up[i]) - double(down[i])) / (2 * h);
      CHECK(grad[i][axis] == doctest::Approx(fd).epsilon(1e-2).scale(1.0));
    }
  }
}

TEST_CASE("nearest warp by one voxel shifts labels") {
  const Grid g{{5, 4, 3}, {2, 1, 1}, {0, 0, 0}};
  std::vector<std::uint8_t> l(g.size());
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<std::uint8_t>(i % 4);
  std::vector<Vec3> zero(g.size(), Vec3{0, 0, 0});
  std::vector<std::uint8_t> out(g.size());
  warp_nearest(g, l, g, {2.0, 0, 0}, zero, out);  // source = x - 2 mm = one voxel left
  for (int z = 0; z < 3; ++z)
    for (int y = 0; y < 4; ++y) {
      CHECK(out[g.index(0, y, z)] == 0);
      for (int x = 1; x < 5; ++x) CHECK(out[g.index(x, y, z)] == l[g.index(x - 1, y, z)]);
    }
}
