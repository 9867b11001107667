#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "rcaqc/volgrid.hpp"

namespace rcaqc {

enum class Metric { DSC, MSD, RMS, HD };
inline constexpr std::array<Metric, 4> kMetrics{Metric::DSC, Metric::MSD, Metric::RMS, Metric::HD};

/// Rows of a metric report: the three classes, their mean and the merged
/// whole-heart class.
enum class Entry { LVC, LVM, RVC, Average, WholeHeart };
inline constexpr std::array<Entry, 5> kEntries{Entry::LVC, Entry::LVM, Entry::RVC, Entry::Average,
                                               Entry::WholeHeart};

std::string_view name(Metric m) noexcept;
std::string_view name(Entry e) noexcept;
Metric parse_metric(std::string_view s);
Entry parse_entry(std::string_view s);

/// True for DSC (larger is better), false for the surface distances.
constexpr bool higher_is_better(Metric m) noexcept { return m == Metric::DSC; }

/// One row of metrics. Distances are millimeters; +infinity marks an
/// unbounded distance (one of the two surfaces is empty).
struct MetricValues {
  double dsc = 0.0;
  double msd = 0.0;
  double rms = 0.0;
  double hd = 0.0;

  double get(Metric m) const noexcept;
  void set(Metric m, double v) noexcept;
  static MetricValues worst() noexcept;
};

/// Per-class, class-average and whole-heart metrics. An empty optional marks
/// an entry whose class is absent from both inputs.
struct MetricSet {
  std::array<std::optional<MetricValues>, 5> entries;

  std::optional<MetricValues>& operator[](Entry e) noexcept { return entries[static_cast<int>(e)]; }
  const std::optional<MetricValues>& operator[](Entry e) const noexcept {
    return entries[static_cast<int>(e)];
  }
};

/// 2|A∩B| / (|A|+|B|) for one label; 1 when both are empty.
double dice(const LabelMap& a, const LabelMap& b, std::uint8_t cls);

/// Centers (mm) of class voxels with at least one 6-neighbour outside the
/// class; voxels on the grid border always count.
std::vector<Vec3> surface_voxels(const LabelMap& lm, std::uint8_t cls);

struct SurfaceDistances {
  std::vector<double> a_to_b;
  std::vector<double> b_to_a;
};

/// Directed nearest-surface-point distances in both directions.
/// Throws UndefinedDistance when either surface is empty.
SurfaceDistances surface_distances(const LabelMap& a, const LabelMap& b, std::uint8_t cls);

// Pooled over the concatenation of both directed lists.
double mean_surface_distance(const SurfaceDistances& d);
double rms_surface_distance(const SurfaceDistances& d);
double hausdorff_distance(const SurfaceDistances& d);

/// Merge classes 1..3 into label 1.
LabelMap whole_heart(const LabelMap& lm);

MetricSet full_metrics(const LabelMap& a, const LabelMap& b);

}  // namespace rcaqc
