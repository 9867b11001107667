#include "rcaqc/rca.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

namespace rcaqc {

void TestCase::validate() const {
  require_same_grid(image.grid(), seg.grid(), "test image/segmentation");
  if (gt) require_same_grid(image.grid(), gt->grid(), "test image/ground truth");
}

ReferenceScore score_reference(const TestCase& tc, const Reference& ref, const RegParams& params) {
  try {
    const Translation init = com_align(ref.image, tc.image);
    const DeformationField field = ffd_register(ref.image, tc.image, init, params);
    const LabelMap warped = warp_labels(ref.labels, field, tc.image.grid());
    return ReferenceScore{full_metrics(warped, tc.seg), {}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DivergedRegistration) throw;
    return ReferenceScore{std::nullopt, e.what()};
  }
}

namespace {

bool better(Metric m, double candidate, double incumbent) {
  return higher_is_better(m) ? candidate > incumbent : candidate < incumbent;
}

}  // namespace

RcaPrediction reduce_scores(std::span<const ReferenceScore> scores, std::span<const std::size_t> subset) {
  RcaPrediction pred;
  for (auto& row : pred.winner) row.fill(-1);
  const MetricValues worst = MetricValues::worst();

  for (Entry e : kEntries) {
    const int ei = static_cast<int>(e);
    MetricValues best = worst;
    bool any = false;
    for (Metric m : kMetrics) {
      const int mi = static_cast<int>(m);
      for (std::size_t pos = 0; pos < subset.size(); ++pos) {
        const ReferenceScore& s = scores[subset[pos]];
        double v;
        if (!s.metrics) {
          v = worst.get(m);
        } else if (const auto& entry = (*s.metrics)[e]) {
          v = entry->get(m);
        } else {
          continue;
        }
        int& w = pred.winner[ei][mi];
        if (w < 0 || better(m, v, best.get(m))) {
          w = static_cast<int>(pos);
          best.set(m, v);
          any = true;
        }
      }
    }
    if (any) pred.predicted[e] = best;
  }
  pred.per_reference.reserve(subset.size());
  for (std::size_t i : subset) pred.per_reference.push_back(scores[i]);
  return pred;
}

RcaPrediction reduce_scores(std::span<const ReferenceScore> scores) {
  std::vector<std::size_t> all(scores.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return reduce_scores(scores, all);
}

RcaPrediction predict_quality(const TestCase& tc, std::span<const Reference> refs, const RegParams& params) {
  tc.validate();
  params.validate();
  if (refs.empty()) throw Error(ErrorCode::NoReferences, "no references supplied");

  std::vector<ReferenceScore> scores(refs.size());
  std::vector<std::exception_ptr> errors(refs.size());
  const auto n = static_cast<std::ptrdiff_t>(refs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      scores[i] = score_reference(tc, refs[i], params);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return reduce_scores(scores);
}

std::vector<std::size_t> evenly_spaced_ranks(std::size_t n, std::size_t k) {
  k = std::min(k, n);
  std::vector<std::size_t> out;
  if (k == 0) return out;
  if (k == 1) return {0};
  for (std::size_t i = 0; i < k; ++i)
    out.push_back(static_cast<std::size_t>(std::llround(double(i) * double(n - 1) / double(k - 1))));
  return out;
}

nlohmann::json metric_value_json(double v) {
  if (std::isinf(v)) return "unbounded";
  return v;
}

nlohmann::json to_json(const MetricSet& m) {
  nlohmann::json j = nlohmann::json::object();
  for (Entry e : kEntries) {
    const auto& v = m[e];
    if (!v) {
      j[std::string(name(e))] = nullptr;
      continue;
    }
    nlohmann::json row = nlohmann::json::object();
    for (Metric k : kMetrics) row[std::string(name(k))] = metric_value_json(v->get(k));
    j[std::string(name(e))] = row;
  }
  return j;
}

nlohmann::json rca_report(const RcaPrediction& pred, const TestCase& tc, std::span<const Reference> refs,
                          std::size_t k, const std::optional<MetricSet>& real) {
  if (pred.per_reference.size() != refs.size())
    throw Error(ErrorCode::InvalidArgument, "report needs one score per reference");

  nlohmann::json j;
  j["case_id"] = tc.id;
  j["predicted"] = to_json(pred.predicted);
  j["real"] = real ? to_json(*real) : nlohmann::json(nullptr);

  nlohmann::json winners = nlohmann::json::object();
  for (Entry e : kEntries) {
    nlohmann::json row = nlohmann::json::object();
    for (Metric m : kMetrics) {
      const int w = pred.winner_of(e, m);
      row[std::string(name(m))] =
          w < 0 ? nlohmann::json(nullptr) : nlohmann::json{{"index", w}, {"id", refs[w].id}};
    }
    winners[std::string(name(e))] = row;
  }
  j["winner"] = winners;

  const auto wh_dsc = [&](std::size_t i) {
    const auto& s = pred.per_reference[i];
    if (!s.metrics || !(*s.metrics)[Entry::WholeHeart]) return 0.0;
    return (*s.metrics)[Entry::WholeHeart]->dsc;
  };
  std::vector<std::size_t> order(refs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return wh_dsc(a) > wh_dsc(b); });

  nlohmann::json listed = nlohmann::json::array();
  for (std::size_t rank : evenly_spaced_ranks(order.size(), k)) {
    const std::size_t i = order[rank];
    const auto& s = pred.per_reference[i];
    nlohmann::json r;
    r["rank"] = rank;
    r["index"] = i;
    r["id"] = refs[i].id;
    r["status"] = s.metrics ? "ok" : "diverged";
    r["wh_dsc"] = wh_dsc(i);
    r["metrics"] = s.metrics ? to_json(*s.metrics) : nlohmann::json(nullptr);
    listed.push_back(r);
  }
  j["references"] = listed;
  return j;
}

}  // namespace rcaqc
