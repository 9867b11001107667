#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcaqc/rca.hpp"
#include "rcaqc/volgrid.hpp"

namespace rcaqc {

/// Synthetic short-axis-like heart: ellipsoidal LV cavity, an ellipsoidal
/// myocardial shell around it and an RV crescent abutting the shell.
/// Lengths in mm, positions relative to the grid origin corner.
struct PhantomParams {
  Index3 dims{64, 64, 64};
  Vec3 spacing{1.5, 1.5, 1.5};
  Vec3 origin{0.0, 0.0, 0.0};

  Vec3 lv_center{44.0, 48.0, 48.0};
  Vec3 lv_radii{13.0, 13.0, 22.0};
  double myo_thickness = 6.0;
  Vec3 rv_offset{17.0, 0.0, -2.0};  // RV ellipsoid center relative to LV center
  Vec3 rv_radii{16.0, 23.0, 20.0};
  /// In-plane rotation of the whole heart about the LV long axis (z).
  double rotation_deg = 0.0;

  double background_mean = 0.0;
  double lvc_mean = 200.0;
  double lvm_mean = 70.0;
  double rvc_mean = 180.0;
  double noise_sigma = 6.0;
  std::uint64_t seed = 1;

  /// Throws InvalidPhantom for non-positive sizes or shapes leaving the grid.
  void validate() const;
  Grid grid() const { return Grid{dims, spacing, origin}; }
};

struct Phantom {
  Volume image;
  LabelMap labels;
};

Phantom generate_phantom(const PhantomParams& p);

enum class DegradeOp : unsigned {
  Erode = 1u << 0,
  Dilate = 1u << 1,
  Translate = 1u << 2,
  BoundaryJitter = 1u << 3,
  DropSlices = 1u << 4,
  RelabelNoise = 1u << 5,
};
inline constexpr unsigned kAllDegradeOps = 0x3f;
std::string degrade_ops_to_string(unsigned ops);
unsigned parse_degrade_ops(const std::string& s);  // "erode+drop_slices"

/// Severity in [0,1] scales every selected operator; 0 is the identity.
struct DegradeSpec {
  double severity = 0.0;
  unsigned operators = kAllDegradeOps;
  std::uint64_t seed = 1;
};

LabelMap degrade(const LabelMap& gt, const DegradeSpec& spec);

/// Anatomical jitter around the default phantom, drawn from `seed`.
PhantomParams jittered_params(std::uint64_t seed);

struct TestCaseSpec {
  std::string id;
  PhantomParams params;
  DegradeSpec degrade;
};

struct BatterySpec {
  std::vector<PhantomParams> references;
  std::vector<std::string> reference_ids;
  std::vector<TestCaseSpec> cases;
};

/// Parameter draws for a battery. Reference and case draws come from
/// disjoint seed streams; case k uses severities[k % severities.size()].
BatterySpec plan_battery(int n_cases, int n_refs, const std::vector<double>& severities, std::uint64_t seed);

struct Battery {
  BatterySpec spec;
  ReferenceSet references;
  std::vector<TestCase> cases;  // every case carries its ground truth
};

/// Materialise plan_battery: phantoms for every reference and case, and a
/// degraded segmentation per case.
Battery make_battery(int n_cases, int n_refs, const std::vector<double>& severities, std::uint64_t seed);
Battery build_battery(const BatterySpec& spec);

}  // namespace rcaqc
