#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcaqc/metrics.hpp"
#include "rcaqc/rca.hpp"

namespace rcaqc {

enum class QcLabel { Good, Poor };
std::string_view name(QcLabel l);

struct QcDecision {
  QcLabel label;
  Metric metric_used;
  double threshold;
};

/// Good iff value >= threshold for DSC and value <= threshold for the
/// distances. Both endpoints are good; NaN is poor.
QcDecision classify(double value, Metric metric, double threshold);

struct Thresholds {
  double dsc = 0.7;
  double msd_mm = 2.0;
};

/// Confusion of predicted against real decisions, "good" being positive.
struct Confusion {
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
  std::size_t total() const { return tp + fn + fp + tn; }
};

struct EvalSummary {
  Entry entry = Entry::WholeHeart;
  Metric metric = Metric::DSC;
  double threshold = 0.7;
  Confusion counts;
  double accuracy = 0.0;
  std::optional<double> tpr;  // empty without real positives
  std::optional<double> fpr;  // empty without real negatives
  // Per metric, over pairs where both values are finite.
  std::array<std::optional<double>, 4> mae{};
  std::array<std::optional<double>, 4> pearson_r{};
  std::array<std::size_t, 4> excluded_pairs{};
  /// Cases where the entry is absent from the prediction or the reference.
  std::size_t skipped = 0;
};

/// Classify predicted and real values of `entry` with `metric` at `threshold`
/// and summarise. Throws InvalidArgument on a length mismatch.
EvalSummary evaluate(std::span<const MetricSet> predicted, std::span<const MetricSet> real, Metric metric,
                     double threshold, Entry entry = Entry::WholeHeart);
EvalSummary evaluate(std::span<const RcaPrediction> preds, std::span<const MetricSet> real, Metric metric,
                     double threshold, Entry entry = Entry::WholeHeart);

/// Throws UndefinedCorrelation with fewer than two pairs or a constant input.
double pearson(std::span<const double> x, std::span<const double> y);
/// Pearson on average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Every reference scored against every case: scores[case][ref].
struct ScoreMatrix {
  std::vector<std::string> case_ids;
  std::vector<std::string> reference_ids;
  std::vector<std::vector<ReferenceScore>> scores;
};

ScoreMatrix score_matrix(std::span<const TestCase> cases, std::span<const Reference> refs, const RegParams& params,
                         int workers);

struct RefsizeRow {
  std::size_t size;
  int run;
  double accuracy;
};

struct RefsizeStat {
  std::size_t size;
  double mean, min, max;
};

struct RefsizeResult {
  std::vector<RefsizeRow> rows;      // size-major, then run
  std::vector<RefsizeStat> summary;  // one per size, in input order
};

/// Reference subset drawn for (size, run): `size` distinct indices out of
/// `n`, ascending, a pure function of the arguments.
std::vector<std::size_t> sample_subset(std::size_t n, std::size_t size, int run, std::uint64_t seed);

/// Reference-set size study over a precomputed score matrix. Accuracy of
/// the DSC decision on `entry` per size and run. Throws InvalidArgument when
/// a size is 0 or exceeds the reference count, or runs < 1.
RefsizeResult refsize_from_scores(const ScoreMatrix& scores, std::span<const MetricSet> real,
                                  std::span<const std::size_t> sizes, int runs, std::uint64_t seed,
                                  double dsc_threshold, Entry entry = Entry::WholeHeart);

/// Scores every case against every reference, then as above. Cases must
/// carry ground truth.
RefsizeResult refsize_study(std::span<const TestCase> cases, std::span<const Reference> refs,
                            const RegParams& params, std::span<const std::size_t> sizes, int runs,
                            std::uint64_t seed, double dsc_threshold, int workers);

}  // namespace rcaqc
