#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rcaqc/metrics.hpp"
#include "rcaqc/register.hpp"
#include "rcaqc/volgrid.hpp"

namespace rcaqc {

struct TestCase {
  std::string id;
  Volume image;
  LabelMap seg;
  std::optional<LabelMap> gt;

  /// Throws GridMismatch unless image, seg and gt share one grid.
  void validate() const;
};

/// Outcome of scoring one reference against a test case. `metrics` is empty
/// when the registration diverged; the reference then counts as worst case
/// for every entry.
struct ReferenceScore {
  std::optional<MetricSet> metrics;
  std::string failure;
};

/// Per entry and metric: index of the reference that produced the best value,
/// or -1 when no reference produced one.
using WinnerTable = std::array<std::array<int, 4>, 5>;

struct RcaPrediction {
  MetricSet predicted;
  WinnerTable winner;
  std::vector<ReferenceScore> per_reference;

  int winner_of(Entry e, Metric m) const { return winner[static_cast<int>(e)][static_cast<int>(m)]; }
};

/// Register one reference to the test image (CoM then FFD), warp its labels
/// into test space and compare them with the test segmentation.
ReferenceScore score_reference(const TestCase& tc, const Reference& ref, const RegParams& params);

/// Best value per entry and metric (max DSC, min distances) over the given
/// reference scores. Ties keep the lowest index. Diverged references and
/// unbounded distances never win over a finite value.
RcaPrediction reduce_scores(std::span<const ReferenceScore> scores);

/// Same, over a subset of `scores` given by index; winner indices refer to
/// positions in `subset`.
RcaPrediction reduce_scores(std::span<const ReferenceScore> scores, std::span<const std::size_t> subset);

RcaPrediction predict_quality(const TestCase& tc, std::span<const Reference> refs, const RegParams& params);
inline RcaPrediction predict_quality(const TestCase& tc, const ReferenceSet& refs, const RegParams& params) {
  return predict_quality(tc, refs.entries(), params);
}

/// Per-case report: winning references, predicted metrics, the real metrics
/// when available and `k` references evenly spaced over the WH-DSC ranking.
nlohmann::json rca_report(const RcaPrediction& pred, const TestCase& tc, std::span<const Reference> refs,
                          std::size_t k, const std::optional<MetricSet>& real = std::nullopt);

/// Positions into the WH-DSC ranking (best first) of `k` evenly spaced picks
/// out of `n`; k is clipped to n.
std::vector<std::size_t> evenly_spaced_ranks(std::size_t n, std::size_t k);

// JSON helpers shared by the CLI. Unbounded distances serialise as the
// string "unbounded"; absent entries as null.
nlohmann::json to_json(const MetricSet& m);
nlohmann::json metric_value_json(double v);

}  // namespace rcaqc
