#include "rcaqc/register.hpp"

#include <algorithm>
#include <cmath>

namespace rcaqc {

using kernels::ControlLattice;

void RegParams::validate() const {
  const auto bad = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (levels < 1) bad("levels must be >= 1");
  if (max_iterations < 1) bad("max_iterations must be >= 1");
  if (!(control_spacing_mm > 0.0)) bad("control_spacing_mm must be > 0");
  if (ncc_radius < 1) bad("ncc_radius must be >= 1");
  if (!(ncc_epsilon > 0.0)) bad("ncc_epsilon must be > 0");
  if (!(bending_weight >= 0.0)) bad("bending_weight must be >= 0");
  if (!(initial_step_voxels > 0.0) || !(min_step_voxels > 0.0) || min_step_voxels > initial_step_voxels)
    bad("step sizes must satisfy 0 < min_step_voxels <= initial_step_voxels");
  if (!(tolerance >= 0.0)) bad("tolerance must be >= 0");
}

Translation com_align(const Volume& ref_img, const Volume& test_img) {
  const Vec3 r = center_of_mass(ref_img);
  const Vec3 t = center_of_mass(test_img);
  return Translation{{t[0] - r[0], t[1] - r[1], t[2] - r[2]}};
}

DeformationField DeformationField::identity(const Grid& target, const Grid& source, const Translation& t,
                                            double control_spacing_mm) {
  DeformationField f;
  f.translation = t;
  f.target = target;
  f.source = source;
  f.lattice = ControlLattice::covering(target, {control_spacing_mm, control_spacing_mm, control_spacing_mm});
  f.coefficients.assign(f.lattice.size(), Vec3{0.0, 0.0, 0.0});
  return f;
}

std::vector<Vec3> DeformationField::dense_displacement() const {
  std::vector<Vec3> disp(target.size());
  kernels::bspline_displacement(lattice, coefficients, target, disp);
  return disp;
}

Vec3 DeformationField::map_point(const Vec3& p) const {
  int first[3];
  double w[3][4];
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - lattice.origin[a]) / lattice.spacing[a];
    first[a] = static_cast<int>(std::floor(u)) - 1;
    kernels::bspline_basis(u - std::floor(u), w[a]);
  }
  Vec3 v{0.0, 0.0, 0.0};
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        const int cx = first[0] + i, cy = first[1] + j, cz = first[2] + k;
        if (cx < 0 || cy < 0 || cz < 0 || cx >= lattice.dims[0] || cy >= lattice.dims[1] ||
            cz >= lattice.dims[2])
          continue;
        const double wt = w[0][i] * w[1][j] * w[2][k];
        const Vec3& c = coefficients[lattice.index(cx, cy, cz)];
        for (int a = 0; a < 3; ++a) v[a] += wt * c[a];
      }
  return {p[0] - translation.d[0] + v[0], p[1] - translation.d[1] + v[1], p[2] - translation.d[2] + v[2]};
}

// --- bending energy ---------------------------------------------------------

double bending_energy(const ControlLattice& lattice, std::span<const Vec3> coeffs, std::span<Vec3> grad) {
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), Vec3{0.0, 0.0, 0.0});
  const Index3& n = lattice.dims;
  if (n[0] < 3 || n[1] < 3 || n[2] < 3) return 0.0;

  // Per-axis stencils of the cubic B-spline at a knot: value, first and
  // second derivative.
  double value[3][3], first[3][3], second[3][3];
  for (int a = 0; a < 3; ++a) {
    const double h = lattice.spacing[a];
    value[a][0] = 1.0 / 6.0, value[a][1] = 4.0 / 6.0, value[a][2] = 1.0 / 6.0;
    first[a][0] = -0.5 / h, first[a][1] = 0.0, first[a][2] = 0.5 / h;
    second[a][0] = 1.0 / (h * h), second[a][1] = -2.0 / (h * h), second[a][2] = 1.0 / (h * h);
  }
  struct Op {
    const double* sx;
    const double* sy;
    const double* sz;
    double weight;
  };
  const Op ops[6] = {
      {second[0], value[1], value[2], 1.0}, {value[0], second[1], value[2], 1.0},
      {value[0], value[1], second[2], 1.0}, {first[0], first[1], value[2], 2.0},
      {first[0], value[1], first[2], 2.0},  {value[0], first[1], first[2], 2.0},
  };

  const double points = double(n[0] - 2) * (n[1] - 2) * (n[2] - 2);
  double energy = 0.0;
  for (int z = 1; z < n[2] - 1; ++z)
    for (int y = 1; y < n[1] - 1; ++y)
      for (int x = 1; x < n[0] - 1; ++x)
        for (const Op& op : ops) {
          Vec3 r{0.0, 0.0, 0.0};
          for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j)
              for (int i = 0; i < 3; ++i) {
                const double w = op.sx[i] * op.sy[j] * op.sz[k];
                if (w == 0.0) continue;
                const Vec3& c = coeffs[lattice.index(x + i - 1, y + j - 1, z + k - 1)];
                for (int a = 0; a < 3; ++a) r[a] += w * c[a];
              }
          energy += op.weight * (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
          if (!want_grad) continue;
          const double scale = 2.0 * op.weight / points;
          for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j)
              for (int i = 0; i < 3; ++i) {
                const double w = op.sx[i] * op.sy[j] * op.sz[k];
                if (w == 0.0) continue;
                Vec3& g = grad[lattice.index(x + i - 1, y + j - 1, z + k - 1)];
                for (int a = 0; a < 3; ++a) g[a] += scale * w * r[a];
              }
        }
  return energy / points;
}

// --- lattice refinement -----------------------------------------------------

namespace {

// Subdivide along one axis: coarse knot j sits at fine index 2j-1, fine index
// 2m sits halfway between coarse m and m+1.
std::vector<Vec3> subdivide_axis(const std::vector<Vec3>& in, const Index3& in_dims, int axis, int out_n,
                                 Index3& out_dims) {
  out_dims = in_dims;
  out_dims[axis] = out_n;
  std::vector<Vec3> out(static_cast<std::size_t>(out_dims[0]) * out_dims[1] * out_dims[2]);
  const auto at = [&](int x, int y, int z) -> Vec3 {
    const int idx[3] = {x, y, z};
    if (idx[axis] < 0 || idx[axis] >= in_dims[axis]) return {0.0, 0.0, 0.0};
    return in[(static_cast<std::size_t>(z) * in_dims[1] + y) * in_dims[0] + x];
  };
  for (int z = 0; z < out_dims[2]; ++z)
    for (int y = 0; y < out_dims[1]; ++y)
      for (int x = 0; x < out_dims[0]; ++x) {
        int p[3] = {x, y, z};
        const int k = p[axis];
        Vec3 v{0.0, 0.0, 0.0};
        const auto shifted = [&](int c) {
          int q[3] = {p[0], p[1], p[2]};
          q[axis] = c;
          return at(q[0], q[1], q[2]);
        };
        if (k % 2 == 0) {
          const int m = k / 2;
          const Vec3 a = shifted(m), b = shifted(m + 1);
          for (int i = 0; i < 3; ++i) v[i] = 0.5 * (a[i] + b[i]);
        } else {
          const int j = (k + 1) / 2;
          const Vec3 a = shifted(j - 1), b = shifted(j), c = shifted(j + 1);
          for (int i = 0; i < 3; ++i) v[i] = (a[i] + 6.0 * b[i] + c[i]) / 8.0;
        }
        out[(static_cast<std::size_t>(z) * out_dims[1] + y) * out_dims[0] + x] = v;
      }
  return out;
}

}  // namespace

std::vector<Vec3> refine_lattice(const ControlLattice& coarse, std::span<const Vec3> coeffs,
                                 const ControlLattice& fine) {
  for (int a = 0; a < 3; ++a) {
    const double expected = coarse.origin[a] + 0.5 * coarse.spacing[a];
    if (std::abs(fine.spacing[a] * 2.0 - coarse.spacing[a]) > 1e-9 * coarse.spacing[a] ||
        std::abs(fine.origin[a] - expected) > 1e-9 * coarse.spacing[a])
      throw Error(ErrorCode::InvalidArgument, "fine lattice is not a dyadic refinement");
  }
  std::vector<Vec3> cur(coeffs.begin(), coeffs.end());
  Index3 dims = coarse.dims;
  for (int axis = 0; axis < 3; ++axis) {
    Index3 next;
    cur = subdivide_axis(cur, dims, axis, fine.dims[axis], next);
    dims = next;
  }
  return cur;
}

// --- pyramid ----------------------------------------------------------------

Volume downsample_half(const Volume& v) {
  const Grid& g = v.grid();
  std::vector<double> buf(v.data().begin(), v.data().end());
  std::vector<double> line;
  const std::size_t strides[3] = {1, static_cast<std::size_t>(g.dims[0]),
                                  static_cast<std::size_t>(g.dims[0]) * g.dims[1]};
  static constexpr double kBinomial[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  for (int axis = 0; axis < 3; ++axis) {
    const int n = g.dims[axis];
    if (n < 2) continue;
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    line.resize(n);
    for (int l = 0; l < g.dims[a1] * g.dims[a2]; ++l) {
      const std::size_t base = strides[a1] * (l % g.dims[a1]) + strides[a2] * (l / g.dims[a1]);
      for (int i = 0; i < n; ++i) line[i] = buf[base + i * strides[axis]];
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k) acc += kBinomial[k + 2] * line[std::clamp(i + k, 0, n - 1)];
        buf[base + i * strides[axis]] = acc;
      }
    }
  }
  std::vector<float> smoothed(buf.begin(), buf.end());

  Grid out = g;
  for (int a = 0; a < 3; ++a) {
    out.dims[a] = (g.dims[a] + 1) / 2;
    out.spacing[a] = g.extent()[a] / out.dims[a];
  }
  std::vector<Vec3> zero(out.size(), Vec3{0.0, 0.0, 0.0});
  std::vector<float> data(out.size());
  kernels::warp_linear(g, smoothed, out, {0.0, 0.0, 0.0}, zero, data);
  return Volume(out, std::move(data));
}

// --- optimisation -----------------------------------------------------------

namespace {

class LevelObjective {
 public:
  LevelObjective(const Volume& fixed, const Volume& moving, const Translation& t, const ControlLattice& lattice,
                 const RegParams& p)
      : fixed_(fixed),
        moving_(moving),
        translation_(t),
        lattice_(lattice),
        ncc_(fixed.grid().dims, p.ncc_radius, p.ncc_epsilon, fixed.data()),
        bending_weight_(p.bending_weight),
        disp_(fixed.grid().size()),
        warped_(fixed.grid().size()),
        image_grad_(fixed.grid().size()),
        sim_grad_(fixed.grid().size()),
        force_(fixed.grid().size()),
        bend_grad_(lattice.size()) {}

  double value(std::span<const Vec3> coeffs) {
    kernels::bspline_displacement(lattice_, coeffs, fixed_.grid(), disp_);
    kernels::warp_linear(moving_.grid(), moving_.data(), fixed_.grid(), translation_.d, disp_, warped_);
    double f = -ncc_.value(warped_);
    if (bending_weight_ > 0.0) f += bending_weight_ * bending_energy(lattice_, coeffs);
    return f;
  }

  double value_and_gradient(std::span<const Vec3> coeffs, std::span<Vec3> grad) {
    kernels::bspline_displacement(lattice_, coeffs, fixed_.grid(), disp_);
    kernels::warp_linear(moving_.grid(), moving_.data(), fixed_.grid(), translation_.d, disp_, warped_,
                         image_grad_);
    double f = -ncc_.value_and_gradient(warped_, sim_grad_);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(force_.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double s = -static_cast<double>(sim_grad_[i]);
      force_[i] = {s * image_grad_[i][0], s * image_grad_[i][1], s * image_grad_[i][2]};
    }
    kernels::bspline_adjoint(lattice_, fixed_.grid(), force_, grad);
    if (bending_weight_ > 0.0) {
      f += bending_weight_ * bending_energy(lattice_, coeffs, bend_grad_);
      for (std::size_t j = 0; j < grad.size(); ++j)
        for (int a = 0; a < 3; ++a) grad[j][a] += bending_weight_ * bend_grad_[j][a];
    }
    return f;
  }

 private:
  const Volume& fixed_;
  const Volume& moving_;
  Translation translation_;
  ControlLattice lattice_;
  kernels::LocalNcc ncc_;
  double bending_weight_;
  std::vector<Vec3> disp_;
  std::vector<float> warped_;
  std::vector<Vec3> image_grad_;
  std::vector<float> sim_grad_;
  std::vector<Vec3> force_;
  std::vector<Vec3> bend_grad_;
};

void require_finite(double f) {
  if (!std::isfinite(f)) throw Error(ErrorCode::DivergedRegistration, "objective became non-finite");
}

LevelTrace optimise_level(LevelObjective& obj, std::vector<Vec3>& coeffs, double voxel_mm, double max_step_mm,
                          const RegParams& p) {
  LevelTrace trace;
  std::vector<Vec3> grad(coeffs.size()), trial(coeffs.size()), trial_grad(coeffs.size());
  double f = obj.value_and_gradient(coeffs, grad);
  require_finite(f);
  trace.initial_objective = f;
  double step = p.initial_step_voxels * voxel_mm;
  const double min_step = p.min_step_voxels * voxel_mm;

  for (int it = 0; it < p.max_iterations; ++it) {
    double gmax = 0.0;
    for (const Vec3& g : grad) gmax = std::max(gmax, std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]));
    if (!(gmax > 0.0)) break;

    // The first trial carries its gradient; backtracked trials are scored
    // by value alone and the gradient is computed once one is accepted.
    bool improved = false, have_grad = false;
    double ft = f;
    for (bool first = true; step >= min_step; first = false) {
      const double scale = step / gmax;
      for (std::size_t j = 0; j < coeffs.size(); ++j)
        for (int a = 0; a < 3; ++a) trial[j][a] = coeffs[j][a] - scale * grad[j][a];
      ft = first ? obj.value_and_gradient(trial, trial_grad) : obj.value(trial);
      require_finite(ft);
      if (ft < f) {
        improved = true;
        have_grad = first;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    if (!have_grad) ft = obj.value_and_gradient(trial, trial_grad);

    const double gain = (f - ft) / std::max(std::abs(f), 1e-12);
    coeffs.swap(trial);
    grad.swap(trial_grad);
    f = ft;
    ++trace.iterations;
    if (gain < p.tolerance) break;
    step = std::min(step * 1.5, max_step_mm);
  }
  trace.final_objective = f;
  return trace;
}

}  // namespace

DeformationField ffd_register(const Volume& moving, const Volume& fixed, const Translation& init,
                              const RegParams& params, RegistrationTrace* trace) {
  params.validate();
  for (double d : init.d)
    if (!std::isfinite(d)) throw Error(ErrorCode::InvalidArgument, "initial translation not finite");

  // Index 0 is the coarsest level.
  std::vector<Volume> fixed_pyr{fixed}, moving_pyr{moving};
  for (int l = 1; l < params.levels; ++l) {
    fixed_pyr.push_back(downsample_half(fixed_pyr.back()));
    moving_pyr.push_back(downsample_half(moving_pyr.back()));
  }
  std::reverse(fixed_pyr.begin(), fixed_pyr.end());
  std::reverse(moving_pyr.begin(), moving_pyr.end());

  const double coarsest = params.control_spacing_mm * std::ldexp(1.0, params.levels - 1);
  DeformationField field = DeformationField::identity(fixed.grid(), moving.grid(), init, coarsest);
  if (trace) trace->levels.clear();

  for (int l = 0; l < params.levels; ++l) {
    if (l > 0) {
      const double h = field.lattice.spacing[0] * 0.5;
      const auto fine = ControlLattice::covering(fixed.grid(), {h, h, h});
      field.coefficients = refine_lattice(field.lattice, field.coefficients, fine);
      field.lattice = fine;
    }
    const Grid& g = fixed_pyr[l].grid();
    const double voxel_mm = std::max({g.spacing[0], g.spacing[1], g.spacing[2]});
    LevelObjective obj(fixed_pyr[l], moving_pyr[l], init, field.lattice, params);
    const auto lt = optimise_level(obj, field.coefficients, voxel_mm, 0.5 * field.lattice.spacing[0], params);
    if (trace) trace->levels.push_back(lt);
  }
  return field;
}

LabelMap warp_labels(const LabelMap& labels, const DeformationField& field, const Grid& target_grid) {
  require_same_grid(labels.grid(), field.source, "warp_labels source");
  require_same_grid(target_grid, field.target, "warp_labels target");
  const auto disp = field.dense_displacement();
  std::vector<std::uint8_t> out(target_grid.size());
  kernels::warp_nearest(labels.grid(), labels.labels(), target_grid, field.translation.d, disp, out);
  return LabelMap(target_grid, std::move(out));
}

Volume warp_image(const Volume& image, const DeformationField& field, const Grid& target_grid) {
  require_same_grid(image.grid(), field.source, "warp_image source");
  require_same_grid(target_grid, field.target, "warp_image target");
  const auto disp = field.dense_displacement();
  std::vector<float> out(target_grid.size());
  kernels::warp_linear(image.grid(), image.data(), target_grid, field.translation.d, disp, out);
  return Volume(target_grid, std::move(out));
}

}  // namespace rcaqc
