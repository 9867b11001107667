#include <algorithm>
#include <cmath>

#include "rcaqc/kernels.hpp"

namespace rcaqc::kernels {
namespace {

std::size_t voxel_count(const Index3& d) {
  return static_cast<std::size_t>(d[0]) * d[1] * d[2];
}

// Window sum along x using a per-line prefix sum.
void box_pass_x(const Index3& d, int radius, std::span<double> data) {
  const int n = d[0];
  const int lines = d[1] * d[2];
#pragma omp parallel
  {
    std::vector<double> prefix(n + 1);
#pragma omp for schedule(static)
    for (int line = 0; line < lines; ++line) {
      double* row = data.data() + static_cast<std::size_t>(line) * n;
      prefix[0] = 0.0;
      for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + row[i];
      for (int i = 0; i < n; ++i) row[i] = prefix[std::min(n, i + radius + 1)] - prefix[std::max(0, i - radius)];
    }
  }
}

// Window sum over `rows` rows of length `len` spaced `stride` apart,
// combining whole rows so the inner loop is contiguous.
void box_rows(double* base, int rows, int len, std::size_t stride, int radius, std::vector<double>& copy,
              std::vector<double>& acc) {
  copy.resize(static_cast<std::size_t>(rows) * len);
  acc.assign(len, 0.0);
  for (int r = 0; r < rows; ++r) std::copy_n(base + r * stride, len, copy.data() + static_cast<std::size_t>(r) * len);
  const auto row = [&](int r) { return copy.data() + static_cast<std::size_t>(r) * len; };
  for (int r = 0; r < std::min(rows, radius + 1); ++r) {
    const double* src = row(r);
    for (int i = 0; i < len; ++i) acc[i] += src[i];
  }
  for (int r = 0; r < rows; ++r) {
    double* dst = base + r * stride;
    std::copy_n(acc.data(), len, dst);
    if (r + radius + 1 < rows) {
      const double* add = row(r + radius + 1);
      for (int i = 0; i < len; ++i) acc[i] += add[i];
    }
    if (r - radius >= 0) {
      const double* sub = row(r - radius);
      for (int i = 0; i < len; ++i) acc[i] -= sub[i];
    }
  }
}

void box_pass_y(const Index3& d, int radius, std::span<double> data) {
  const std::size_t slice = static_cast<std::size_t>(d[0]) * d[1];
#pragma omp parallel
  {
    std::vector<double> copy, acc;
#pragma omp for schedule(static)
    for (int z = 0; z < d[2]; ++z) box_rows(data.data() + z * slice, d[1], d[0], d[0], radius, copy, acc);
  }
}

void box_pass_z(const Index3& d, int radius, std::span<double> data) {
  const std::size_t slice = static_cast<std::size_t>(d[0]) * d[1];
#pragma omp parallel
  {
    std::vector<double> copy, acc;
#pragma omp for schedule(static)
    for (int y = 0; y < d[1]; ++y)
      box_rows(data.data() + static_cast<std::size_t>(y) * d[0], d[2], d[0], slice, radius, copy, acc);
  }
}

void box_sum_inplace(const Index3& dims, int radius, std::span<double> data) {
  box_pass_x(dims, radius, data);
  box_pass_y(dims, radius, data);
  box_pass_z(dims, radius, data);
}

}  // namespace

void box_sum(const Index3& dims, int radius, std::span<const double> in, std::span<double> out) {
  std::copy(in.begin(), in.end(), out.begin());
  box_sum_inplace(dims, radius, out);
}

std::vector<double> box_count(const Index3& dims, int radius) {
  std::vector<double> out(voxel_count(dims));
  for (int z = 0; z < dims[2]; ++z) {
    const int cz = std::min(dims[2], z + radius + 1) - std::max(0, z - radius);
    for (int y = 0; y < dims[1]; ++y) {
      const int cy = std::min(dims[1], y + radius + 1) - std::max(0, y - radius);
      for (int x = 0; x < dims[0]; ++x) {
        const int cx = std::min(dims[0], x + radius + 1) - std::max(0, x - radius);
        out[(static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x] = double(cx) * cy * cz;
      }
    }
  }
  return out;
}

LocalNcc::LocalNcc(const Index3& dims, int radius, double epsilon, std::span<const float> fixed)
    : dims_(dims), radius_(radius), epsilon_(epsilon), fixed_(fixed.begin(), fixed.end()) {
  const std::size_t n = voxel_count(dims);
  count_ = box_count(dims, radius);
  sum_f_.resize(n);
  sum_ff_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sum_f_[i] = fixed_[i];
    sum_ff_[i] = double(fixed_[i]) * fixed_[i];
  }
  box_sum_inplace(dims, radius, sum_f_);
  box_sum_inplace(dims, radius, sum_ff_);
  for (auto& s : scratch_) s.resize(n);
}

double LocalNcc::value(std::span<const float> moving) const { return evaluate(moving, {}); }

double LocalNcc::value_and_gradient(std::span<const float> moving, std::span<float> grad) const {
  return evaluate(moving, grad);
}

double LocalNcc::evaluate(std::span<const float> moving, std::span<float> grad) const {
  const std::size_t n = fixed_.size();
  const int nz = dims_[2];
  const std::size_t slice = static_cast<std::size_t>(dims_[0]) * dims_[1];
  auto& s_m = scratch_[0];
  auto& s_mm = scratch_[1];
  auto& s_fm = scratch_[2];
  auto& s_bm = scratch_[3];

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const double m = moving[i];
    s_m[i] = m;
    s_mm[i] = m * m;
    s_fm[i] = m * fixed_[i];
  }
  box_sum_inplace(dims_, radius_, s_m);
  box_sum_inplace(dims_, radius_, s_mm);
  box_sum_inplace(dims_, radius_, s_fm);

  const bool want_grad = !grad.empty();
  std::vector<double> partial(nz, 0.0);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < nz; ++z) {
    double acc = 0.0;
    for (std::size_t i = z * slice; i < (z + 1) * slice; ++i) {
      const double cnt = count_[i];
      const double mean_f = sum_f_[i] / cnt;
      const double mean_m = s_m[i] / cnt;
      const double cross = s_fm[i] - cnt * mean_f * mean_m;
      const double var_f = std::max(0.0, sum_ff_[i] - cnt * mean_f * mean_f) + epsilon_ * cnt;
      const double var_m = std::max(0.0, s_mm[i] - cnt * mean_m * mean_m) + epsilon_ * cnt;
      const double denom = std::sqrt(var_f * var_m);
      acc += cross / denom;
      if (want_grad) {
        const double alpha = 1.0 / denom;
        const double beta = cross / (var_m * denom);
        s_m[i] = alpha;
        s_mm[i] = alpha * mean_f;
        s_fm[i] = beta;
        s_bm[i] = beta * mean_m;
      }
    }
    partial[z] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  const double inv_n = 1.0 / static_cast<double>(n);

  if (want_grad) {
    // d cc(x) / d M(y) = alpha(x) (F(y) - mean_f(x)) - beta(x) (M(y) - mean_m(x))
    // for every window x containing y; windows are symmetric, so summing over
    // x is another box sum.
    box_sum_inplace(dims_, radius_, s_m);
    box_sum_inplace(dims_, radius_, s_mm);
    box_sum_inplace(dims_, radius_, s_fm);
    box_sum_inplace(dims_, radius_, s_bm);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const double g = fixed_[i] * s_m[i] - s_mm[i] - moving[i] * s_fm[i] + s_bm[i];
      grad[i] = static_cast<float>(g * inv_n);
    }
  }
  return total * inv_n;
}

namespace serial {

void box_sum(const Index3& dims, int radius, std::span<const double> in, std::span<double> out) {
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        double acc = 0.0;
        for (int k = std::max(0, z - radius); k <= std::min(dims[2] - 1, z + radius); ++k)
          for (int j = std::max(0, y - radius); j <= std::min(dims[1] - 1, y + radius); ++j)
            for (int i = std::max(0, x - radius); i <= std::min(dims[0] - 1, x + radius); ++i)
              acc += in[(static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i];
        out[(static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x] = acc;
      }
}

double local_ncc(const Index3& dims, int radius, double epsilon, std::span<const float> fixed,
                 std::span<const float> moving) {
  double total = 0.0;
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        double n = 0, sf = 0, sm = 0;
        const auto each = [&](auto&& fn) {
          for (int k = std::max(0, z - radius); k <= std::min(dims[2] - 1, z + radius); ++k)
            for (int j = std::max(0, y - radius); j <= std::min(dims[1] - 1, y + radius); ++j)
              for (int i = std::max(0, x - radius); i <= std::min(dims[0] - 1, x + radius); ++i)
                fn((static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i);
        };
        each([&](std::size_t i) {
          n += 1;
          sf += fixed[i];
          sm += moving[i];
        });
        const double mf = sf / n;
        const double mm = sm / n;
        double cross = 0, vf = 0, vm = 0;
        each([&](std::size_t i) {
          cross += (fixed[i] - mf) * (moving[i] - mm);
          vf += (fixed[i] - mf) * (fixed[i] - mf);
          vm += (moving[i] - mm) * (moving[i] - mm);
        });
        total += cross / std::sqrt((vf + epsilon * n) * (vm + epsilon * n));
      }
  return total / voxel_count(dims);
}

}  // namespace serial
}  // namespace rcaqc::kernels
