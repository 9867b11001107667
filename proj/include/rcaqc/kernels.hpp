#pragma once

// Voxel-loop kernels shared by metrics and registration. Everything in
// rcaqc::kernels is OpenMP-parallel and deterministic: reductions go through
// fixed per-slice partial sums, so results do not depend on the thread count.
// rcaqc::kernels::serial holds straightforward reference versions that the
// tests and the benchmark compare against.

#include <cstdint>
#include <span>
#include <vector>

#include "rcaqc/volgrid.hpp"

namespace rcaqc::kernels {

/// Squared distance (mm^2) from every voxel center to the nearest voxel whose
/// mask entry is nonzero. All entries are +inf when the mask is empty.
/// Exact separable transform (lower envelope of parabolas per axis).
std::vector<double> squared_distance_transform(const Grid& grid, std::span<const std::uint8_t> mask);

/// Sum over the (2r+1)^3 window around each voxel, truncated at the border.
void box_sum(const Index3& dims, int radius, std::span<const double> in, std::span<double> out);

/// Number of in-bounds voxels in each truncated window.
std::vector<double> box_count(const Index3& dims, int radius);

/// Uniform cubic B-spline control lattice. Control point j sits at
/// origin + j * spacing along each axis.
struct ControlLattice {
  Index3 dims{4, 4, 4};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int x, int y, int z) const noexcept {
    return (static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x;
  }

  /// Lattice covering `grid` with the given control spacing: one control
  /// point outside the lower border and enough past the upper one so every
  /// voxel center has its full 4x4x4 support.
  static ControlLattice covering(const Grid& grid, const Vec3& spacing);

  bool operator==(const ControlLattice&) const = default;
};

/// Cubic B-spline basis weights at fractional offset t in [0,1).
void bspline_basis(double t, double w[4]) noexcept;

/// Dense displacement (mm) at every voxel center of `target`.
/// Separable tensor-product evaluation: three 1D contractions.
void bspline_displacement(const ControlLattice& lattice, std::span<const Vec3> coeffs,
                          const Grid& target, std::span<Vec3> out);

/// Adjoint of bspline_displacement: out[j] = sum_x w_j(x) * values[x].
void bspline_adjoint(const ControlLattice& lattice, const Grid& target,
                     std::span<const Vec3> values, std::span<Vec3> out);

/// Resample `moving` at source(x) = x - translation + disp(x) for every voxel
/// center x of `target`, trilinear, zero outside the moving grid. When
/// `gradient` is non-empty it receives the analytic spatial derivative of the
/// interpolant (intensity per mm) at the same positions.
void warp_linear(const Grid& moving_grid, std::span<const float> moving, const Grid& target,
                 const Vec3& translation, std::span<const Vec3> disp, std::span<float> out,
                 std::span<Vec3> gradient = {});

/// Nearest-neighbour label pull with the same mapping as warp_linear;
/// background outside the moving grid.
void warp_nearest(const Grid& moving_grid, std::span<const std::uint8_t> moving, const Grid& target,
                  const Vec3& translation, std::span<const Vec3> disp, std::span<std::uint8_t> out);

/// Mean local normalized cross-correlation over all voxels of a fixed image
/// and a candidate image on the same lattice. Box statistics of the fixed
/// image are cached at construction; the object owns scratch buffers and must
/// not be shared between threads.
class LocalNcc {
 public:
  LocalNcc(const Index3& dims, int radius, double epsilon, std::span<const float> fixed);

  double value(std::span<const float> moving) const;
  /// Returns the value and writes d(value)/d(moving[y]) into `grad`.
  double value_and_gradient(std::span<const float> moving, std::span<float> grad) const;

  const Index3& dims() const noexcept { return dims_; }

 private:
  double evaluate(std::span<const float> moving, std::span<float> grad) const;

  Index3 dims_;
  int radius_;
  double epsilon_;
  std::vector<float> fixed_;
  std::vector<double> count_;
  std::vector<double> sum_f_;
  std::vector<double> sum_ff_;
  mutable std::vector<double> scratch_[5];
};

namespace serial {

/// All-pairs nearest mask voxel, O(n * m).
std::vector<double> squared_distance_transform(const Grid& grid, std::span<const std::uint8_t> mask);

/// Explicit window loops.
void box_sum(const Index3& dims, int radius, std::span<const double> in, std::span<double> out);

/// Explicit window statistics per voxel, no caching.
double local_ncc(const Index3& dims, int radius, double epsilon, std::span<const float> fixed,
                 std::span<const float> moving);

/// Direct 64-term sum per voxel.
void bspline_displacement(const ControlLattice& lattice, std::span<const Vec3> coeffs,
                          const Grid& target, std::span<Vec3> out);

/// Direct per-voxel scatter.
void bspline_adjoint(const ControlLattice& lattice, const Grid& target,
                     std::span<const Vec3> values, std::span<Vec3> out);

void warp_linear(const Grid& moving_grid, std::span<const float> moving, const Grid& target,
                 const Vec3& translation, std::span<const Vec3> disp, std::span<float> out);

}  // namespace serial

}  // namespace rcaqc::kernels
