#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rcaqc/evalqc.hpp"
#include "rcaqc/register.hpp"

namespace rcaqc {

struct PhantomConfig {
  int n_cases = 50;
  int n_refs = 20;
  std::vector<double> severities{0.0, 0.25, 0.5, 0.75, 1.0};
};

struct RefsizeConfig {
  std::vector<std::size_t> sizes{2, 5, 10, 15, 20};
  int runs = 5;
};

/// Batch configuration. Relative paths resolve against the directory of the
/// config file.
struct RunConfig {
  std::filesystem::path reference_manifest;
  std::filesystem::path case_manifest;
  std::filesystem::path output_dir;
  RegParams registration;
  Thresholds thresholds;
  int workers = 1;
  std::uint64_t seed = 1;
  std::size_t report_references = 5;
  PhantomConfig phantom;
  RefsizeConfig refsize;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Throws InvalidConfig on unknown keys, wrong types or invalid values.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

struct ConfigOverrides {
  std::optional<int> workers;
  std::optional<double> dsc_threshold;
  std::optional<double> msd_threshold;
  std::optional<std::uint64_t> seed;
};
void apply_overrides(RunConfig& cfg, const ConfigOverrides& o);

struct CaseEntry {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path segmentation;
  std::optional<std::filesystem::path> ground_truth;
};

/// {"references": [{"id", "image", "labels"}]}, paths relative to the manifest.
ReferenceSet load_reference_manifest(const std::filesystem::path& path);
/// {"cases": [{"id", "image", "segmentation", "ground_truth"?}]}. Ids must be
/// unique and made of [A-Za-z0-9._-].
std::vector<CaseEntry> load_case_manifest(const std::filesystem::path& path);
TestCase load_case(const CaseEntry& e);

// Commands. Exit codes: 0 success, 1 invalid configuration or input,
// 2 some case failed (the others still complete).
int cmd_run(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, std::ostream& log);
int cmd_phantom(const RunConfig& cfg, std::ostream& log);
int cmd_refsize(const RunConfig& cfg, std::ostream& log);

/// CSV cell for a metric value: "%.10g", "inf" when unbounded.
std::string format_value(double v);

}  // namespace rcaqc
