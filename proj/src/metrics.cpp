#include "rcaqc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcaqc/kernels.hpp"

namespace rcaqc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Mask = std::vector<std::uint8_t>;

Mask class_mask(const LabelMap& lm, std::uint8_t cls) {
  const auto l = lm.labels();
  Mask m(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) m[i] = l[i] == cls;
  return m;
}

Mask foreground_mask(const LabelMap& lm) {
  const auto l = lm.labels();
  Mask m(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) m[i] = l[i] != 0;
  return m;
}

Mask surface_of(const Grid& g, const Mask& m) {
  Mask s(m.size(), 0);
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
#pragma omp parallel for schedule(static)
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const std::size_t i = g.index(x, y, z);
        if (!m[i]) continue;
        const bool border = x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1;
        s[i] = border || !m[i - 1] || !m[i + 1] || !m[i - nx] || !m[i + nx] ||
               !m[i - static_cast<std::size_t>(nx) * ny] || !m[i + static_cast<std::size_t>(nx) * ny];
      }
  return s;
}

struct Box {
  Index3 lo{0, 0, 0};
  Index3 hi{-1, -1, -1};  // inclusive
  bool empty() const { return hi[0] < lo[0]; }
};

// Bounding box of the nonzero voxels of either mask, grown by one voxel
// (clipped to the grid). Every voxel at the box border is then either
// outside both masks or on the grid border, so surfaces are unchanged.
Box union_box(const Grid& g, const Mask& a, const Mask& b) {
  Box box;
  box.lo = g.dims;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        const std::size_t i = g.index(x, y, z);
        if (!a[i] && !b[i]) continue;
        const int p[3] = {x, y, z};
        for (int k = 0; k < 3; ++k) {
          box.lo[k] = std::min(box.lo[k], p[k]);
          box.hi[k] = std::max(box.hi[k], p[k]);
        }
      }
  if (box.hi[0] < 0) return Box{};
  for (int k = 0; k < 3; ++k) {
    box.lo[k] = std::max(0, box.lo[k] - 1);
    box.hi[k] = std::min(g.dims[k] - 1, box.hi[k] + 1);
  }
  return box;
}

struct Cropped {
  Grid grid;
  Mask a, b;
};

Cropped crop(const Grid& g, const Box& box, const Mask& a, const Mask& b) {
  Cropped c;
  for (int k = 0; k < 3; ++k) {
    c.grid.dims[k] = box.hi[k] - box.lo[k] + 1;
    c.grid.spacing[k] = g.spacing[k];
    c.grid.origin[k] = g.origin[k] + box.lo[k] * g.spacing[k];
  }
  c.a.resize(c.grid.size());
  c.b.resize(c.grid.size());
  for (int z = 0; z < c.grid.dims[2]; ++z)
    for (int y = 0; y < c.grid.dims[1]; ++y)
      for (int x = 0; x < c.grid.dims[0]; ++x) {
        const std::size_t src = g.index(x + box.lo[0], y + box.lo[1], z + box.lo[2]);
        const std::size_t dst = c.grid.index(x, y, z);
        c.a[dst] = a[src];
        c.b[dst] = b[src];
      }
  return c;
}

// Grid-border voxels of the crop that are not grid-border voxels of the full
// grid are never inside a mask (see union_box), so surface_of on the crop
// matches the full-grid surface.
SurfaceDistances distances_between(const Grid& g, const Mask& a, const Mask& b) {
  const Box box = union_box(g, a, b);
  if (box.empty()) throw Error(ErrorCode::UndefinedDistance, "both surfaces empty");
  const Cropped c = crop(g, box, a, b);
  const Mask sa = surface_of(c.grid, c.a);
  const Mask sb = surface_of(c.grid, c.b);
  const bool any_a = std::any_of(sa.begin(), sa.end(), [](auto v) { return v != 0; });
  const bool any_b = std::any_of(sb.begin(), sb.end(), [](auto v) { return v != 0; });
  if (!any_a || !any_b) throw Error(ErrorCode::UndefinedDistance, "a surface is empty");

  const auto da = kernels::squared_distance_transform(c.grid, sa);
  const auto db = kernels::squared_distance_transform(c.grid, sb);
  SurfaceDistances out;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i]) out.a_to_b.push_back(std::sqrt(db[i]));
    if (sb[i]) out.b_to_a.push_back(std::sqrt(da[i]));
  }
  return out;
}

double dice_of(const Mask& a, const Mask& b) {
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
    both += a[i] & b[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::optional<MetricValues> entry_metrics(const Grid& g, const Mask& a, const Mask& b) {
  const bool any_a = std::any_of(a.begin(), a.end(), [](auto v) { return v != 0; });
  const bool any_b = std::any_of(b.begin(), b.end(), [](auto v) { return v != 0; });
  if (!any_a && !any_b) return std::nullopt;
  if (!any_a || !any_b) return MetricValues::worst();
  MetricValues v;
  v.dsc = dice_of(a, b);
  const auto d = distances_between(g, a, b);
  v.msd = mean_surface_distance(d);
  v.rms = rms_surface_distance(d);
  v.hd = hausdorff_distance(d);
  return v;
}

void require_nonempty(const SurfaceDistances& d) {
  if (d.a_to_b.empty() || d.b_to_a.empty())
    throw Error(ErrorCode::UndefinedDistance, "empty surface distance list");
}

}  // namespace

std::string_view name(Metric m) noexcept {
  switch (m) {
    case Metric::DSC: return "dsc";
    case Metric::MSD: return "msd";
    case Metric::RMS: return "rms";
    case Metric::HD: return "hd";
  }
  return "?";
}

std::string_view name(Entry e) noexcept {
  switch (e) {
    case Entry::LVC: return "LVC";
    case Entry::LVM: return "LVM";
    case Entry::RVC: return "RVC";
    case Entry::Average: return "AV";
    case Entry::WholeHeart: return "WH";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  for (Metric m : kMetrics)
    if (name(m) == s) return m;
  if (s == "DSC") return Metric::DSC;
  if (s == "MSD") return Metric::MSD;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(s) + "'");
}

Entry parse_entry(std::string_view s) {
  for (Entry e : kEntries)
    if (name(e) == s) return e;
  throw Error(ErrorCode::InvalidArgument, "unknown entry '" + std::string(s) + "'");
}

double MetricValues::get(Metric m) const noexcept {
  switch (m) {
    case Metric::DSC: return dsc;
    case Metric::MSD: return msd;
    case Metric::RMS: return rms;
    case Metric::HD: return hd;
  }
  return 0.0;
}

void MetricValues::set(Metric m, double v) noexcept {
  switch (m) {
    case Metric::DSC: dsc = v; break;
    case Metric::MSD: msd = v; break;
    case Metric::RMS: rms = v; break;
    case Metric::HD: hd = v; break;
  }
}

MetricValues MetricValues::worst() noexcept { return {0.0, kInf, kInf, kInf}; }

double dice(const LabelMap& a, const LabelMap& b, std::uint8_t cls) {
  require_same_grid(a.grid(), b.grid(), "dice");
  return dice_of(class_mask(a, cls), class_mask(b, cls));
}

std::vector<Vec3> surface_voxels(const LabelMap& lm, std::uint8_t cls) {
  const Grid& g = lm.grid();
  const Mask s = surface_of(g, class_mask(lm, cls));
  std::vector<Vec3> pts;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x)
        if (s[g.index(x, y, z)]) pts.push_back(g.to_physical(x, y, z));
  return pts;
}

SurfaceDistances surface_distances(const LabelMap& a, const LabelMap& b, std::uint8_t cls) {
  require_same_grid(a.grid(), b.grid(), "surface_distances");
  return distances_between(a.grid(), class_mask(a, cls), class_mask(b, cls));
}

double mean_surface_distance(const SurfaceDistances& d) {
  require_nonempty(d);
  double s = 0.0;
  for (double v : d.a_to_b) s += v;
  for (double v : d.b_to_a) s += v;
  return s / static_cast<double>(d.a_to_b.size() + d.b_to_a.size());
}

double rms_surface_distance(const SurfaceDistances& d) {
  require_nonempty(d);
  double s = 0.0;
  for (double v : d.a_to_b) s += v * v;
  for (double v : d.b_to_a) s += v * v;
  return std::sqrt(s / static_cast<double>(d.a_to_b.size() + d.b_to_a.size()));
}

double hausdorff_distance(const SurfaceDistances& d) {
  require_nonempty(d);
  return std::max(*std::max_element(d.a_to_b.begin(), d.a_to_b.end()),
                  *std::max_element(d.b_to_a.begin(), d.b_to_a.end()));
}

LabelMap whole_heart(const LabelMap& lm) { return LabelMap(lm.grid(), foreground_mask(lm)); }

MetricSet full_metrics(const LabelMap& a, const LabelMap& b) {
  require_same_grid(a.grid(), b.grid(), "full_metrics");
  const Grid& g = a.grid();
  MetricSet out;
  const Entry classes[3] = {Entry::LVC, Entry::LVM, Entry::RVC};
  for (int c = 0; c < kNumForegroundClasses; ++c) {
    const auto cls = static_cast<std::uint8_t>(c + 1);
    out[classes[c]] = entry_metrics(g, class_mask(a, cls), class_mask(b, cls));
  }
  out[Entry::WholeHeart] = entry_metrics(g, foreground_mask(a), foreground_mask(b));

  MetricValues avg{0.0, 0.0, 0.0, 0.0};
  int present = 0;
  for (Entry e : classes) {
    if (!out[e]) continue;
    ++present;
    for (Metric m : kMetrics) avg.set(m, avg.get(m) + out[e]->get(m));
  }
  if (present > 0) {
    for (Metric m : kMetrics) avg.set(m, avg.get(m) / present);
    out[Entry::Average] = avg;
  }
  return out;
}

}  // namespace rcaqc
