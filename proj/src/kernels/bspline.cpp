#include <cmath>

#include "rcaqc/kernels.hpp"

namespace rcaqc::kernels {
namespace {

// Support of one voxel line along an axis: first control index and weights.
struct AxisSupport {
  std::vector<int> first;
  std::vector<std::array<double, 4>> weight;
};

AxisSupport axis_support(const ControlLattice& lattice, const Grid& target, int axis) {
  const int n = target.dims[axis];
  AxisSupport s;
  s.first.resize(n);
  s.weight.resize(n);
  for (int i = 0; i < n; ++i) {
    const double p = target.origin[axis] + (i + 0.5) * target.spacing[axis];
    const double u = (p - lattice.origin[axis]) / lattice.spacing[axis];
    const double fl = std::floor(u);
    const int first = static_cast<int>(fl) - 1;
    if (first < 0 || first + 3 >= lattice.dims[axis])
      throw Error(ErrorCode::GridMismatch, "control lattice does not cover the target grid");
    s.first[i] = first;
    bspline_basis(u - fl, s.weight[i].data());
  }
  return s;
}

inline void axpy(Vec3& acc, double w, const Vec3& v) {
  acc[0] += w * v[0];
  acc[1] += w * v[1];
  acc[2] += w * v[2];
}

}  // namespace

ControlLattice ControlLattice::covering(const Grid& grid, const Vec3& spacing) {
  ControlLattice l;
  const Vec3 extent = grid.extent();
  for (int a = 0; a < 3; ++a) {
    if (!(spacing[a] > 0.0)) throw Error(ErrorCode::InvalidArgument, "control spacing must be positive");
    l.spacing[a] = spacing[a];
    l.origin[a] = grid.origin[a] - spacing[a];
    l.dims[a] = static_cast<int>(std::floor(extent[a] / spacing[a])) + 4;
  }
  return l;
}

void bspline_basis(double t, double w[4]) noexcept {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double s = 1.0 - t;
  w[0] = s * s * s / 6.0;
  w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
  w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
  w[3] = t3 / 6.0;
}

void bspline_displacement(const ControlLattice& lattice, std::span<const Vec3> coeffs,
                          const Grid& target, std::span<Vec3> out) {
  const auto sx = axis_support(lattice, target, 0);
  const auto sy = axis_support(lattice, target, 1);
  const auto sz = axis_support(lattice, target, 2);
  const int nx = target.dims[0], ny = target.dims[1], nz = target.dims[2];
  const int ly = lattice.dims[1], lz = lattice.dims[2];

  // Contract x: t1[cz][cy][x]
  std::vector<Vec3> t1(static_cast<std::size_t>(lz) * ly * nx);
#pragma omp parallel for schedule(static)
  for (int cz = 0; cz < lz; ++cz)
    for (int cy = 0; cy < ly; ++cy)
      for (int x = 0; x < nx; ++x) {
        Vec3 acc{0, 0, 0};
        const Vec3* row = &coeffs[lattice.index(sx.first[x], cy, cz)];
        for (int k = 0; k < 4; ++k) axpy(acc, sx.weight[x][k], row[k]);
        t1[(static_cast<std::size_t>(cz) * ly + cy) * nx + x] = acc;
      }

  // Contract y: t2[cz][y][x]
  std::vector<Vec3> t2(static_cast<std::size_t>(lz) * ny * nx);
#pragma omp parallel for schedule(static)
  for (int cz = 0; cz < lz; ++cz)
    for (int y = 0; y < ny; ++y) {
      Vec3* dst = &t2[(static_cast<std::size_t>(cz) * ny + y) * nx];
      for (int x = 0; x < nx; ++x) dst[x] = {0, 0, 0};
      for (int k = 0; k < 4; ++k) {
        const double w = sy.weight[y][k];
        const Vec3* src = &t1[(static_cast<std::size_t>(cz) * ly + sy.first[y] + k) * nx];
        for (int x = 0; x < nx; ++x) axpy(dst[x], w, src[x]);
      }
    }

  // Contract z
  const std::size_t plane = static_cast<std::size_t>(ny) * nx;
#pragma omp parallel for schedule(static)
  for (int z = 0; z < nz; ++z) {
    Vec3* dst = &out[z * plane];
    for (std::size_t i = 0; i < plane; ++i) dst[i] = {0, 0, 0};
    for (int k = 0; k < 4; ++k) {
      const double w = sz.weight[z][k];
      const Vec3* src = &t2[(sz.first[z] + k) * plane];
      for (std::size_t i = 0; i < plane; ++i) axpy(dst[i], w, src[i]);
    }
  }
}

void bspline_adjoint(const ControlLattice& lattice, const Grid& target, std::span<const Vec3> values,
                     std::span<Vec3> out) {
  const auto sx = axis_support(lattice, target, 0);
  const auto sy = axis_support(lattice, target, 1);
  const auto sz = axis_support(lattice, target, 2);
  const int nx = target.dims[0], ny = target.dims[1], nz = target.dims[2];
  const int lx = lattice.dims[0], ly = lattice.dims[1], lz = lattice.dims[2];
  const std::size_t plane = static_cast<std::size_t>(ny) * nx;

  // Each output slot gathers its contributions in increasing source order.
  std::vector<Vec3> a2(static_cast<std::size_t>(lz) * plane);
#pragma omp parallel for schedule(static)
  for (int cz = 0; cz < lz; ++cz) {
    Vec3* dst = &a2[cz * plane];
    for (std::size_t i = 0; i < plane; ++i) dst[i] = {0, 0, 0};
    for (int z = 0; z < nz; ++z) {
      const int k = cz - sz.first[z];
      if (k < 0 || k > 3) continue;
      const double w = sz.weight[z][k];
      const Vec3* src = &values[z * plane];
      for (std::size_t i = 0; i < plane; ++i) axpy(dst[i], w, src[i]);
    }
  }

  std::vector<Vec3> a1(static_cast<std::size_t>(lz) * ly * nx);
#pragma omp parallel for schedule(static)
  for (int cz = 0; cz < lz; ++cz)
    for (int cy = 0; cy < ly; ++cy) {
      Vec3* dst = &a1[(static_cast<std::size_t>(cz) * ly + cy) * nx];
      for (int x = 0; x < nx; ++x) dst[x] = {0, 0, 0};
      for (int y = 0; y < ny; ++y) {
        const int k = cy - sy.first[y];
        if (k < 0 || k > 3) continue;
        const double w = sy.weight[y][k];
        const Vec3* src = &a2[cz * plane + static_cast<std::size_t>(y) * nx];
        for (int x = 0; x < nx; ++x) axpy(dst[x], w, src[x]);
      }
    }

#pragma omp parallel for schedule(static)
  for (int cz = 0; cz < lz; ++cz)
    for (int cy = 0; cy < ly; ++cy) {
      const Vec3* src = &a1[(static_cast<std::size_t>(cz) * ly + cy) * nx];
      Vec3* dst = &out[lattice.index(0, cy, cz)];
      for (int cx = 0; cx < lx; ++cx) dst[cx] = {0, 0, 0};
      for (int x = 0; x < nx; ++x)
        for (int k = 0; k < 4; ++k) axpy(dst[sx.first[x] + k], sx.weight[x][k], src[x]);
    }
}

namespace serial {

void bspline_displacement(const ControlLattice& lattice, std::span<const Vec3> coeffs,
                          const Grid& target, std::span<Vec3> out) {
  for (int z = 0; z < target.dims[2]; ++z)
    for (int y = 0; y < target.dims[1]; ++y)
      for (int x = 0; x < target.dims[0]; ++x) {
        const Vec3 p = target.to_physical(x, y, z);
        int first[3];
        double w[3][4];
        for (int a = 0; a < 3; ++a) {
          const double u = (p[a] - lattice.origin[a]) / lattice.spacing[a];
          first[a] = static_cast<int>(std::floor(u)) - 1;
          bspline_basis(u - std::floor(u), w[a]);
        }
        Vec3 acc{0, 0, 0};
        for (int k = 0; k < 4; ++k)
          for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i)
              axpy(acc, w[0][i] * w[1][j] * w[2][k],
                   coeffs[lattice.index(first[0] + i, first[1] + j, first[2] + k)]);
        out[target.index(x, y, z)] = acc;
      }
}

void bspline_adjoint(const ControlLattice& lattice, const Grid& target, std::span<const Vec3> values,
                     std::span<Vec3> out) {
  for (auto& v : out) v = {0, 0, 0};
  for (int z = 0; z < target.dims[2]; ++z)
    for (int y = 0; y < target.dims[1]; ++y)
      for (int x = 0; x < target.dims[0]; ++x) {
        const Vec3 p = target.to_physical(x, y, z);
        int first[3];
        double w[3][4];
        for (int a = 0; a < 3; ++a) {
          const double u = (p[a] - lattice.origin[a]) / lattice.spacing[a];
          first[a] = static_cast<int>(std::floor(u)) - 1;
          bspline_basis(u - std::floor(u), w[a]);
        }
        const Vec3& v = values[target.index(x, y, z)];
        for (int k = 0; k < 4; ++k)
          for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i)
              axpy(out[lattice.index(first[0] + i, first[1] + j, first[2] + k)],
                   w[0][i] * w[1][j] * w[2][k], v);
      }
}

}  // namespace serial
}  // namespace rcaqc::kernels
