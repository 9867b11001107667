#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rcaqc/error.hpp"

namespace rcaqc {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

/// Axis-aligned voxel lattice. Physical position of voxel (i,j,k) is
/// origin + (index + 0.5) * spacing, i.e. origin is the outer corner of
/// voxel 0 and every physical coordinate in the library is voxel-center based.
struct Grid {
  Index3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int x, int y, int z) const noexcept {
    return (static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x;
  }
  Vec3 to_physical(double x, double y, double z) const noexcept {
    return {origin[0] + (x + 0.5) * spacing[0], origin[1] + (y + 0.5) * spacing[1],
            origin[2] + (z + 0.5) * spacing[2]};
  }
  /// Continuous voxel index of a physical point; integer values are voxel centers.
  Vec3 to_index(const Vec3& p) const noexcept {
    return {(p[0] - origin[0]) / spacing[0] - 0.5, (p[1] - origin[1]) / spacing[1] - 0.5,
            (p[2] - origin[2]) / spacing[2] - 0.5};
  }
  Vec3 extent() const noexcept {
    return {dims[0] * spacing[0], dims[1] * spacing[1], dims[2] * spacing[2]};
  }
  bool contains(int x, int y, int z) const noexcept {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
  }

  /// Throws CorruptHeader when dims < 1 or spacing is not finite and positive.
  void validate() const;

  bool operator==(const Grid&) const = default;
};

enum Label : std::uint8_t {
  kBackground = 0,
  kLVC = 1,  // left-ventricular cavity
  kLVM = 2,  // left-ventricular myocardium
  kRVC = 3,  // right-ventricular cavity
};
inline constexpr int kNumForegroundClasses = 3;
inline constexpr std::uint8_t kMaxLabel = kRVC;

/// Scalar intensity image. Immutable once built; all values finite.
class Volume {
 public:
  Volume(const Grid& grid, std::vector<float> data);
  Volume(const Grid& grid, float fill);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const float> data() const noexcept { return data_; }
  float at(int x, int y, int z) const noexcept { return data_[grid_.index(x, y, z)]; }

 private:
  Grid grid_;
  std::vector<float> data_;
};

/// Integer class map with codes 0..3. Immutable once built.
class LabelMap {
 public:
  LabelMap(const Grid& grid, std::vector<std::uint8_t> labels);
  explicit LabelMap(const Grid& grid);  // all background

  const Grid& grid() const noexcept { return grid_; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::uint8_t at(int x, int y, int z) const noexcept { return labels_[grid_.index(x, y, z)]; }
  std::size_t count(std::uint8_t label) const noexcept;

 private:
  Grid grid_;
  std::vector<std::uint8_t> labels_;
};

struct Reference {
  std::string id;
  Volume image;
  LabelMap labels;
};

/// Ordered atlas collection. Non-empty; every entry grid-consistent and
/// containing each foreground class.
class ReferenceSet {
 public:
  explicit ReferenceSet(std::vector<Reference> entries);

  std::size_t size() const noexcept { return entries_.size(); }
  const Reference& operator[](std::size_t i) const { return entries_.at(i); }
  std::span<const Reference> entries() const noexcept { return entries_; }

 private:
  std::vector<Reference> entries_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

/// Intensity-weighted mean voxel-center position in millimeters.
Vec3 center_of_mass(const Volume& v);
/// Foreground-count-weighted mean voxel-center position in millimeters.
Vec3 center_of_mass(const LabelMap& lm);

// ---------------------------------------------------------------------------
// NIfTI-1 single-file subset: magic "n+1", dim[0] == 3, datatypes
// uint8/int16/int32/float32/float64, orientation ignored (axis-aligned).

Volume load_nifti_volume(const std::filesystem::path& path);
LabelMap load_nifti_labels(const std::filesystem::path& path);
void save_nifti(const Volume& v, const std::filesystem::path& path);
void save_nifti(const LabelMap& lm, const std::filesystem::path& path);

// Raw test format: little-endian 3 x u32 dims, 3 x f32 spacing, then payload
// (float32 for volumes, uint8 for label maps). Origin is always zero.
Volume load_raw_volume(const std::filesystem::path& path);
LabelMap load_raw_labels(const std::filesystem::path& path);
void save_raw(const Volume& v, const std::filesystem::path& path);
void save_raw(const LabelMap& lm, const std::filesystem::path& path);

}  // namespace rcaqc
