#include "rcaqc/evalqc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

namespace rcaqc {

std::string_view name(QcLabel l) { return l == QcLabel::Good ? "good" : "poor"; }

QcDecision classify(double value, Metric metric, double threshold) {
  const bool good = higher_is_better(metric) ? value >= threshold : value <= threshold;
  return QcDecision{good ? QcLabel::Good : QcLabel::Poor, metric, threshold};
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "pearson: length mismatch");
  if (x.size() < 2) throw Error(ErrorCode::UndefinedCorrelation, "pearson: fewer than two pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::UndefinedCorrelation, "pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "spearman: length mismatch");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

EvalSummary evaluate(std::span<const MetricSet> predicted, std::span<const MetricSet> real, Metric metric,
                     double threshold, Entry entry) {
  if (predicted.size() != real.size())
    throw Error(ErrorCode::InvalidArgument, "evaluate: predictions and real metrics differ in length");
  EvalSummary s;
  s.entry = entry;
  s.metric = metric;
  s.threshold = threshold;

  std::array<std::vector<double>, 4> px, rx;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto& p = predicted[i][entry];
    const auto& r = real[i][entry];
    if (!p || !r) {
      ++s.skipped;
      continue;
    }
    const bool pg = classify(p->get(metric), metric, threshold).label == QcLabel::Good;
    const bool rg = classify(r->get(metric), metric, threshold).label == QcLabel::Good;
    if (pg && rg) ++s.counts.tp;
    else if (!pg && rg) ++s.counts.fn;
    else if (pg && !rg) ++s.counts.fp;
    else ++s.counts.tn;

    for (Metric m : kMetrics) {
      const int k = static_cast<int>(m);
      const double a = p->get(m), b = r->get(m);
      if (std::isfinite(a) && std::isfinite(b)) {
        px[k].push_back(a);
        rx[k].push_back(b);
      } else {
        ++s.excluded_pairs[k];
      }
    }
  }

  const Confusion& c = s.counts;
  if (c.total() > 0) s.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fn > 0) s.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.fp + c.tn > 0) s.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);

  for (int k = 0; k < 4; ++k) {
    if (px[k].empty()) continue;
    double err = 0.0;
    for (std::size_t i = 0; i < px[k].size(); ++i) err += std::abs(px[k][i] - rx[k][i]);
    s.mae[k] = err / static_cast<double>(px[k].size());
    try {
      s.pearson_r[k] = pearson(px[k], rx[k]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UndefinedCorrelation) throw;
    }
  }
  return s;
}

EvalSummary evaluate(std::span<const RcaPrediction> preds, std::span<const MetricSet> real, Metric metric,
                     double threshold, Entry entry) {
  std::vector<MetricSet> predicted;
  predicted.reserve(preds.size());
  for (const auto& p : preds) predicted.push_back(p.predicted);
  return evaluate(predicted, real, metric, threshold, entry);
}

ScoreMatrix score_matrix(std::span<const TestCase> cases, std::span<const Reference> refs, const RegParams& params,
                         int workers) {
  if (refs.empty()) throw Error(ErrorCode::NoReferences, "no references supplied");
  if (workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
  params.validate();
  for (const auto& tc : cases) tc.validate();

  ScoreMatrix out;
  for (const auto& tc : cases) out.case_ids.push_back(tc.id);
  for (const auto& r : refs) out.reference_ids.push_back(r.id);
  out.scores.assign(cases.size(), std::vector<ReferenceScore>(refs.size()));

  const auto nr = static_cast<std::ptrdiff_t>(refs.size());
  const auto total = static_cast<std::ptrdiff_t>(cases.size()) * nr;
  std::vector<std::exception_ptr> errors(total);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    try {
      out.scores[k / nr][k % nr] = score_reference(cases[k / nr], refs[k % nr], params);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<std::size_t> sample_subset(std::size_t n, std::size_t size, int run, std::uint64_t seed) {
  if (size == 0 || size > n) throw Error(ErrorCode::InvalidArgument, "subset size must lie in [1, N]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(size), static_cast<std::uint32_t>(run)};
  std::mt19937_64 rng(seq);
  // Partial Fisher-Yates with an explicit draw so the subset does not
  // depend on the standard library's shuffle.
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

RefsizeResult refsize_from_scores(const ScoreMatrix& scores, std::span<const MetricSet> real,
                                  std::span<const std::size_t> sizes, int runs, std::uint64_t seed,
                                  double dsc_threshold, Entry entry) {
  if (runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  if (real.size() != scores.scores.size())
    throw Error(ErrorCode::InvalidArgument, "refsize: one real metric set per case required");
  const std::size_t n = scores.reference_ids.size();
  for (std::size_t s : sizes)
    if (s == 0 || s > n) throw Error(ErrorCode::InvalidArgument, "refsize: size must lie in [1, N]");

  RefsizeResult out;
  for (std::size_t size : sizes) {
    RefsizeStat stat{size, 0.0, 1.0, 0.0};
    for (int run = 0; run < runs; ++run) {
      const auto subset = sample_subset(n, size, run, seed);
      std::vector<MetricSet> predicted;
      predicted.reserve(scores.scores.size());
      for (const auto& row : scores.scores) predicted.push_back(reduce_scores(row, subset).predicted);
      const double acc = evaluate(predicted, real, Metric::DSC, dsc_threshold, entry).accuracy;
      out.rows.push_back({size, run, acc});
      stat.mean += acc;
      stat.min = std::min(stat.min, acc);
      stat.max = std::max(stat.max, acc);
    }
    stat.mean /= runs;
    out.summary.push_back(stat);
  }
  return out;
}

RefsizeResult refsize_study(std::span<const TestCase> cases, std::span<const Reference> refs,
                            const RegParams& params, std::span<const std::size_t> sizes, int runs,
                            std::uint64_t seed, double dsc_threshold, int workers) {
  std::vector<MetricSet> real;
  for (const auto& tc : cases) {
    if (!tc.gt) throw Error(ErrorCode::InvalidArgument, "refsize: case " + tc.id + " has no ground truth");
    real.push_back(full_metrics(tc.seg, *tc.gt));
  }
  for (std::size_t s : sizes)
    if (s == 0 || s > refs.size()) throw Error(ErrorCode::InvalidArgument, "refsize: size must lie in [1, N]");
  const ScoreMatrix m = score_matrix(cases, refs, params, workers);
  return refsize_from_scores(m, real, sizes, runs, seed, dsc_threshold);
}

}  // namespace rcaqc
