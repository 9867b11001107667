#include <cmath>

#include "rcaqc/kernels.hpp"

namespace rcaqc::kernels {
namespace {

struct Sampler {
  const Grid& grid;
  std::span<const float> data;

  float at(int x, int y, int z) const {
    if (!grid.contains(x, y, z)) return 0.0f;
    return data[grid.index(x, y, z)];
  }

  // Trilinear value and, optionally, the derivative with respect to the
  // continuous index.
  float sample(const Vec3& q, double* d) const {
    const double fx = std::floor(q[0]), fy = std::floor(q[1]), fz = std::floor(q[2]);
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy), z0 = static_cast<int>(fz);
    const double tx = q[0] - fx, ty = q[1] - fy, tz = q[2] - fz;
    if (x0 < -1 || y0 < -1 || z0 < -1 || x0 >= grid.dims[0] || y0 >= grid.dims[1] || z0 >= grid.dims[2]) {
      if (d) d[0] = d[1] = d[2] = 0.0;
      return 0.0f;
    }
    double c[2][2][2];
    if (x0 >= 0 && y0 >= 0 && z0 >= 0 && x0 + 1 < grid.dims[0] && y0 + 1 < grid.dims[1] &&
        z0 + 1 < grid.dims[2]) {
      const std::size_t sy = grid.dims[0], sz = sy * grid.dims[1];
      const float* p = data.data() + grid.index(x0, y0, z0);
      c[0][0][0] = p[0], c[0][0][1] = p[1], c[0][1][0] = p[sy], c[0][1][1] = p[sy + 1];
      c[1][0][0] = p[sz], c[1][0][1] = p[sz + 1], c[1][1][0] = p[sz + sy], c[1][1][1] = p[sz + sy + 1];
    } else {
      for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
          for (int i = 0; i < 2; ++i) c[k][j][i] = at(x0 + i, y0 + j, z0 + k);
    }
    const double c00 = c[0][0][0] + tx * (c[0][0][1] - c[0][0][0]);
    const double c01 = c[0][1][0] + tx * (c[0][1][1] - c[0][1][0]);
    const double c10 = c[1][0][0] + tx * (c[1][0][1] - c[1][0][0]);
    const double c11 = c[1][1][0] + tx * (c[1][1][1] - c[1][1][0]);
    const double c0 = c00 + ty * (c01 - c00);
    const double c1 = c10 + ty * (c11 - c10);
    if (d) {
      const double dx00 = c[0][0][1] - c[0][0][0], dx01 = c[0][1][1] - c[0][1][0];
      const double dx10 = c[1][0][1] - c[1][0][0], dx11 = c[1][1][1] - c[1][1][0];
      const double dx0 = dx00 + ty * (dx01 - dx00);
      const double dx1 = dx10 + ty * (dx11 - dx10);
      d[0] = dx0 + tz * (dx1 - dx0);
      d[1] = (c01 - c00) + tz * ((c11 - c10) - (c01 - c00));
      d[2] = c1 - c0;
    }
    return static_cast<float>(c0 + tz * (c1 - c0));
  }
};

// Target voxel index to moving continuous index is affine per axis:
// q = scale * i + offset + disp / moving spacing.
struct IndexMap {
  Vec3 scale, offset, inv;
  IndexMap(const Grid& moving, const Grid& target, const Vec3& translation) {
    for (int a = 0; a < 3; ++a) {
      inv[a] = 1.0 / moving.spacing[a];
      scale[a] = target.spacing[a] * inv[a];
      offset[a] = (target.origin[a] + 0.5 * target.spacing[a] - translation[a] - moving.origin[a]) * inv[a] - 0.5;
    }
  }
  Vec3 operator()(int x, int y, int z, const Vec3& d) const {
    return {scale[0] * x + offset[0] + d[0] * inv[0], scale[1] * y + offset[1] + d[1] * inv[1],
            scale[2] * z + offset[2] + d[2] * inv[2]};
  }
};

inline Vec3 source_index(const Grid& moving, const Grid& target, int x, int y, int z,
                         const Vec3& translation, const Vec3& disp) {
  const Vec3 p = target.to_physical(x, y, z);
  return moving.to_index({p[0] - translation[0] + disp[0], p[1] - translation[1] + disp[1],
                          p[2] - translation[2] + disp[2]});
}

}  // namespace

void warp_linear(const Grid& moving_grid, std::span<const float> moving, const Grid& target,
                 const Vec3& translation, std::span<const Vec3> disp, std::span<float> out,
                 std::span<Vec3> gradient) {
  const Sampler s{moving_grid, moving};
  const IndexMap map(moving_grid, target, translation);
  const bool want_grad = !gradient.empty();
#pragma omp parallel for schedule(static)
  for (int z = 0; z < target.dims[2]; ++z)
    for (int y = 0; y < target.dims[1]; ++y)
      for (int x = 0; x < target.dims[0]; ++x) {
        const std::size_t i = target.index(x, y, z);
        const Vec3 q = map(x, y, z, disp[i]);
        if (want_grad) {
          double d[3];
          out[i] = s.sample(q, d);
          gradient[i] = {d[0] / moving_grid.spacing[0], d[1] / moving_grid.spacing[1],
                         d[2] / moving_grid.spacing[2]};
        } else {
          out[i] = s.sample(q, nullptr);
        }
      }
}

void warp_nearest(const Grid& moving_grid, std::span<const std::uint8_t> moving, const Grid& target,
                  const Vec3& translation, std::span<const Vec3> disp, std::span<std::uint8_t> out) {
#pragma omp parallel for schedule(static)
  for (int z = 0; z < target.dims[2]; ++z)
    for (int y = 0; y < target.dims[1]; ++y)
      for (int x = 0; x < target.dims[0]; ++x) {
        const std::size_t i = target.index(x, y, z);
        const Vec3 q = source_index(moving_grid, target, x, y, z, translation, disp[i]);
        const int sx = static_cast<int>(std::floor(q[0] + 0.5));
        const int sy = static_cast<int>(std::floor(q[1] + 0.5));
        const int sz = static_cast<int>(std::floor(q[2] + 0.5));
        out[i] = moving_grid.contains(sx, sy, sz) ? moving[moving_grid.index(sx, sy, sz)] : 0;
      }
}

namespace serial {

void warp_linear(const Grid& moving_grid, std::span<const float> moving, const Grid& target,
                 const Vec3& translation, std::span<const Vec3> disp, std::span<float> out) {
  // Textbook form: weight each of the eight neighbours explicitly.
  for (int z = 0; z < target.dims[2]; ++z)
    for (int y = 0; y < target.dims[1]; ++y)
      for (int x = 0; x < target.dims[0]; ++x) {
        const std::size_t i = target.index(x, y, z);
        const Vec3 q = source_index(moving_grid, target, x, y, z, translation, disp[i]);
        const int base[3] = {static_cast<int>(std::floor(q[0])), static_cast<int>(std::floor(q[1])),
                             static_cast<int>(std::floor(q[2]))};
        double acc = 0.0;
        for (int c = 0; c < 8; ++c) {
          const int v[3] = {base[0] + (c & 1), base[1] + ((c >> 1) & 1), base[2] + ((c >> 2) & 1)};
          double w = 1.0;
          for (int a = 0; a < 3; ++a) w *= 1.0 - std::abs(q[a] - v[a]);
          if (moving_grid.contains(v[0], v[1], v[2])) acc += w * moving[moving_grid.index(v[0], v[1], v[2])];
        }
        out[i] = static_cast<float>(acc);
      }
}

}  // namespace serial
}  // namespace rcaqc::kernels
