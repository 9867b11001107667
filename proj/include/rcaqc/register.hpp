#pragma once

#include <vector>

#include "rcaqc/kernels.hpp"
#include "rcaqc/volgrid.hpp"

namespace rcaqc {

struct Translation {
  Vec3 d{0.0, 0.0, 0.0};  // mm
};

/// Free-form deformation settings. Defaults: 3-level pyramid (x4, x2, x1),
/// 16 mm control spacing at the finest level, 5^3 NCC window,
/// bending-energy weight 1e-3, at most 100 iterations per level.
struct RegParams {
  int levels = 3;
  int max_iterations = 100;
  double control_spacing_mm = 16.0;
  int ncc_radius = 2;
  double ncc_epsilon = 1e-2;
  double bending_weight = 1e-3;
  /// Initial and minimum line-search step, in voxels of the current level.
  double initial_step_voxels = 1.0;
  double min_step_voxels = 0.02;
  /// Stop a level once an accepted step improves the objective by less than
  /// this fraction of its magnitude.
  double tolerance = 1e-3;

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;
};

/// Mapping from the fixed (target) grid into the moving (source) grid:
/// source(x) = x - translation + v(x), v a cubic B-spline displacement.
struct DeformationField {
  Translation translation;
  Grid target;
  Grid source;
  kernels::ControlLattice lattice;
  std::vector<Vec3> coefficients;

  /// Identity transform (zero coefficients) covering `target`.
  static DeformationField identity(const Grid& target, const Grid& source, const Translation& t,
                                   double control_spacing_mm);

  /// v(x) at every voxel center of `target`.
  std::vector<Vec3> dense_displacement() const;
  /// Source position of a physical point of the target space.
  Vec3 map_point(const Vec3& p) const;
};

struct LevelTrace {
  int iterations = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
};

struct RegistrationTrace {
  std::vector<LevelTrace> levels;
};

/// CoM(test) - CoM(ref): the shift that superposes the reference's center of
/// mass onto the test image's.
Translation com_align(const Volume& ref_img, const Volume& test_img);

/// Register `moving` onto `fixed`. Objective: -LNCC + bending_weight * bending
/// energy, gradient descent with backtracking, coarse to fine. Throws
/// DivergedRegistration if the objective becomes non-finite.
DeformationField ffd_register(const Volume& moving, const Volume& fixed, const Translation& init,
                              const RegParams& params, RegistrationTrace* trace = nullptr);

/// Backward nearest-neighbour label warp into `target_grid`.
LabelMap warp_labels(const LabelMap& labels, const DeformationField& field, const Grid& target_grid);

/// Backward trilinear image warp into `target_grid`.
Volume warp_image(const Volume& image, const DeformationField& field, const Grid& target_grid);

/// Bending energy approximated at the interior control points, in mm^-2.
/// When `grad` is non-empty it receives the gradient w.r.t. the coefficients.
double bending_energy(const kernels::ControlLattice& lattice, std::span<const Vec3> coeffs,
                      std::span<Vec3> grad = {});

/// Exact dyadic refinement of a cubic B-spline lattice built by
/// ControlLattice::covering: same displacement, half the control spacing.
std::vector<Vec3> refine_lattice(const kernels::ControlLattice& coarse, std::span<const Vec3> coeffs,
                                 const kernels::ControlLattice& fine);

/// Smooth with a binomial kernel and resample onto a grid with half the
/// voxel count per axis (rounded up) and the same physical extent.
Volume downsample_half(const Volume& v);

}  // namespace rcaqc
