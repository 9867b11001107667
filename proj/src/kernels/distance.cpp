#include <cmath>
#include <limits>

#include "rcaqc/kernels.hpp"

namespace rcaqc::kernels {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct EnvelopeScratch {
  std::vector<double> f, d, z;
  std::vector<int> v;
  explicit EnvelopeScratch(int n) : f(n), d(n), z(n + 1), v(n) {}
};

// One-dimensional pass: d[q] = min_r ((q - r) * s)^2 + f[r].
void envelope_1d(EnvelopeScratch& s, int n, double spacing) {
  int first = 0;
  while (first < n && std::isinf(s.f[first])) ++first;
  if (first == n) {
    for (int q = 0; q < n; ++q) s.d[q] = kInf;
    return;
  }
  const auto meet = [&](int q, int r) {
    const double pq = q * spacing;
    const double pr = r * spacing;
    return ((s.f[q] + pq * pq) - (s.f[r] + pr * pr)) / (2.0 * (pq - pr));
  };
  int k = 0;
  s.v[0] = first;
  s.z[0] = -kInf;
  s.z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (std::isinf(s.f[q])) continue;
    double x = meet(q, s.v[k]);
    while (x <= s.z[k]) {
      --k;
      x = meet(q, s.v[k]);
    }
    ++k;
    s.v[k] = q;
    s.z[k] = x;
    s.z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    const double p = q * spacing;
    while (s.z[k + 1] < p) ++k;
    const double dq = (q - s.v[k]) * spacing;
    s.d[q] = dq * dq + s.f[s.v[k]];
  }
}

// Runs the 1D pass along `axis` over every line of `data` in place.
void pass(const Grid& g, int axis, std::vector<double>& data) {
  const int n = g.dims[axis];
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  const int n1 = g.dims[a1];
  const int n2 = g.dims[a2];
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(g.dims[0])
                                                       : static_cast<std::size_t>(g.dims[0]) * g.dims[1];
#pragma omp parallel
  {
    EnvelopeScratch s(n);
#pragma omp for schedule(static)
    for (int line = 0; line < n1 * n2; ++line) {
      Index3 idx{0, 0, 0};
      idx[a1] = line % n1;
      idx[a2] = line / n1;
      const std::size_t base = g.index(idx[0], idx[1], idx[2]);
      for (int q = 0; q < n; ++q) s.f[q] = data[base + q * stride];
      envelope_1d(s, n, g.spacing[axis]);
      for (int q = 0; q < n; ++q) data[base + q * stride] = s.d[q];
    }
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const Grid& grid, std::span<const std::uint8_t> mask) {
  std::vector<double> data(grid.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask[i] ? 0.0 : kInf;
  for (int axis = 0; axis < 3; ++axis) pass(grid, axis, data);
  return data;
}

namespace serial {

std::vector<double> squared_distance_transform(const Grid& grid, std::span<const std::uint8_t> mask) {
  std::vector<Index3> seeds;
  for (int z = 0; z < grid.dims[2]; ++z)
    for (int y = 0; y < grid.dims[1]; ++y)
      for (int x = 0; x < grid.dims[0]; ++x)
        if (mask[grid.index(x, y, z)]) seeds.push_back({x, y, z});
  std::vector<double> out(grid.size(), kInf);
  for (int z = 0; z < grid.dims[2]; ++z)
    for (int y = 0; y < grid.dims[1]; ++y)
      for (int x = 0; x < grid.dims[0]; ++x) {
        double best = kInf;
        for (const auto& s : seeds) {
          const double dx = (x - s[0]) * grid.spacing[0];
          const double dy = (y - s[1]) * grid.spacing[1];
          const double dz = (z - s[2]) * grid.spacing[2];
          best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        out[grid.index(x, y, z)] = best;
      }
  return out;
}

}  // namespace serial
}  // namespace rcaqc::kernels
