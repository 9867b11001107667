#include "rcaqc/qccli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>
#include <set>

#include "rcaqc/phantom.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rcaqc {
namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad_config(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      bad_config("unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_config("'" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

void read_path(const json& j, const char* key, fs::path& out, const fs::path& base) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) bad_config(std::string("'") + key + "' must be a string");
  out = base / j.at(key).get<std::string>();
}

json read_json(const fs::path& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(code, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

bool valid_id(const std::string& id) {
  return !id.empty() && id != "." && id != ".." && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + "\"";
}

json summary_json(const EvalSummary& s) {
  json j;
  j["entry"] = name(s.entry);
  j["metric"] = name(s.metric);
  j["threshold"] = s.threshold;
  j["counts"] = {{"tp", s.counts.tp}, {"fn", s.counts.fn}, {"fp", s.counts.fp}, {"tn", s.counts.tn}};
  j["accuracy"] = s.accuracy;
  j["tpr"] = s.tpr ? json(*s.tpr) : json(nullptr);
  j["fpr"] = s.fpr ? json(*s.fpr) : json(nullptr);
  json mae = json::object(), r = json::object(), excl = json::object();
  for (Metric m : kMetrics) {
    const int k = static_cast<int>(m);
    const std::string n(name(m));
    mae[n] = s.mae[k] ? json(*s.mae[k]) : json(nullptr);
    r[n] = s.pearson_r[k] ? json(*s.pearson_r[k]) : json(nullptr);
    excl[n] = s.excluded_pairs[k];
  }
  j["mae"] = mae;
  j["pearson_r"] = r;
  j["excluded_pairs"] = excl;
  j["skipped"] = s.skipped;
  return j;
}

struct CaseOutcome {
  std::string id;
  std::optional<RcaPrediction> prediction;
  std::optional<MetricSet> real;
  std::string error;
  double seconds = 0.0;
  json report;
};

struct Loaded {
  ReferenceSet refs;
  std::vector<CaseEntry> cases;
};

// Config-level inputs shared by run, eval and refsize. Throws on failure.
Loaded load_inputs(const RunConfig& cfg, bool need_gt) {
  cfg.validate();
  if (cfg.reference_manifest.empty()) bad_config("reference_manifest is required");
  if (cfg.case_manifest.empty()) bad_config("case_manifest is required");
  Loaded in{load_reference_manifest(cfg.reference_manifest), load_case_manifest(cfg.case_manifest)};
  if (need_gt)
    for (const auto& c : in.cases)
      if (!c.ground_truth) bad_config("case " + c.id + " has no ground_truth in the manifest");
  std::sort(in.cases.begin(), in.cases.end(), [](const CaseEntry& a, const CaseEntry& b) { return a.id < b.id; });
  return in;
}

std::vector<CaseOutcome> process_cases(const RunConfig& cfg, const Loaded& in, bool with_real) {
  std::vector<CaseOutcome> out(in.cases.size());
  const auto n = static_cast<std::ptrdiff_t>(in.cases.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.workers)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    CaseOutcome& o = out[i];
    o.id = in.cases[i].id;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const TestCase tc = load_case(in.cases[i]);
      o.prediction = predict_quality(tc, in.refs, cfg.registration);
      if (with_real) o.real = full_metrics(tc.seg, *tc.gt);
      o.report = rca_report(*o.prediction, tc, in.refs.entries(), cfg.report_references, o.real);
    } catch (const std::exception& e) {
      o.prediction.reset();
      o.real.reset();
      o.error = e.what();
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

void append_metric_cells(std::string& line, const std::optional<MetricSet>& m) {
  for (Entry e : kEntries)
    for (Metric k : kMetrics) {
      line += ',';
      if (m && (*m)[e]) line += format_value((*m)[e]->get(k));
    }
}

std::string decision_cell(const std::optional<MetricSet>& m, Metric metric, double threshold) {
  if (!m || !(*m)[Entry::WholeHeart]) return "";
  return std::string(name(classify((*m)[Entry::WholeHeart]->get(metric), metric, threshold).label));
}

std::string predictions_csv(const RunConfig& cfg, const std::vector<CaseOutcome>& rows, bool with_real) {
  std::string s = "case_id,status";
  const auto header = [&](const char* prefix) {
    for (Entry e : kEntries)
      for (Metric k : kMetrics) s += std::string(",") + prefix + std::string(name(e)) + "_" + std::string(name(k));
  };
  header("pred_");
  if (with_real) header("real_");
  s += ",pred_wh_dsc_decision,pred_wh_msd_decision";
  if (with_real) s += ",real_wh_dsc_decision,real_wh_msd_decision";
  s += ",error,wall_time_s\n";

  for (const auto& r : rows) {
    const std::optional<MetricSet> pred = r.prediction ? std::optional(r.prediction->predicted) : std::nullopt;
    std::string line = csv_quote(r.id) + (r.prediction ? ",ok" : ",error");
    append_metric_cells(line, pred);
    if (with_real) append_metric_cells(line, r.real);
    line += "," + decision_cell(pred, Metric::DSC, cfg.thresholds.dsc);
    line += "," + decision_cell(pred, Metric::MSD, cfg.thresholds.msd_mm);
    if (with_real) {
      line += "," + decision_cell(r.real, Metric::DSC, cfg.thresholds.dsc);
      line += "," + decision_cell(r.real, Metric::MSD, cfg.thresholds.msd_mm);
    }
    char t[32];
    std::snprintf(t, sizeof t, "%.3f", r.seconds);
    line += "," + csv_quote(r.error) + "," + t + "\n";
    s += line;
  }
  return s;
}

int run_pipeline(const RunConfig& cfg, std::ostream& log, bool with_real) {
  const Loaded in = load_inputs(cfg, with_real);
  log << "scoring " << in.cases.size() << " cases against " << in.refs.size() << " references with "
      << cfg.workers << " worker(s)\n";

  const auto rows = process_cases(cfg, in, with_real);

  const fs::path reports = cfg.output_dir / "reports";
  fs::create_directories(reports);
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (!r.prediction) {
      ++failed;
      log << "case " << r.id << " failed: " << r.error << "\n";
      continue;
    }
    write_text(reports / (r.id + ".json"), r.report.dump(2) + "\n");
  }
  write_text(cfg.output_dir / "predictions.csv", predictions_csv(cfg, rows, with_real));

  if (with_real) {
    std::vector<MetricSet> pred, real;
    for (const auto& r : rows) {
      if (!r.prediction) continue;
      pred.push_back(r.prediction->predicted);
      real.push_back(*r.real);
    }
    json summary;
    summary["n_cases"] = rows.size();
    summary["n_failed"] = failed;
    summary["thresholds"] = {{"dsc", cfg.thresholds.dsc}, {"msd_mm", cfg.thresholds.msd_mm}};
    json per_entry = json::object();
    for (Entry e : kEntries) {
      per_entry[std::string(name(e))] = {
          {"dsc", summary_json(evaluate(pred, real, Metric::DSC, cfg.thresholds.dsc, e))},
          {"msd", summary_json(evaluate(pred, real, Metric::MSD, cfg.thresholds.msd_mm, e))}};
    }
    summary["summaries"] = per_entry;
    write_text(cfg.output_dir / "summary.json", summary.dump(2) + "\n");

    std::string scatter = "case_id,entry,metric,predicted,real\n";
    for (const auto& r : rows) {
      if (!r.prediction) continue;
      for (Entry e : kEntries) {
        const auto& p = r.prediction->predicted[e];
        const auto& q = (*r.real)[e];
        if (!p || !q) continue;
        for (Metric k : kMetrics)
          scatter += csv_quote(r.id) + "," + std::string(name(e)) + "," + std::string(name(k)) + "," +
                     format_value(p->get(k)) + "," + format_value(q->get(k)) + "\n";
      }
    }
    write_text(cfg.output_dir / "scatter.csv", scatter);
  }
  log << rows.size() - failed << " of " << rows.size() << " cases completed\n";
  return failed ? 2 : 0;
}

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void RunConfig::validate() const {
  if (workers < 1) bad_config("workers must be >= 1");
  if (!(thresholds.dsc >= 0.0 && thresholds.dsc <= 1.0)) bad_config("dsc threshold must lie in [0,1]");
  if (!(thresholds.msd_mm >= 0.0) || !std::isfinite(thresholds.msd_mm))
    bad_config("msd threshold must be finite and >= 0");
  if (output_dir.empty()) bad_config("output_dir is required");
  if (phantom.n_cases < 1 || phantom.n_refs < 1) bad_config("phantom battery needs >= 1 case and reference");
  if (phantom.severities.empty()) bad_config("phantom severities must not be empty");
  for (double s : phantom.severities)
    if (!(s >= 0.0 && s <= 1.0)) bad_config("phantom severities must lie in [0,1]");
  if (refsize.runs < 1) bad_config("refsize runs must be >= 1");
  if (refsize.sizes.empty()) bad_config("refsize sizes must not be empty");
  try {
    registration.validate();
  } catch (const Error& e) {
    bad_config(std::string("registration: ") + e.what());
  }
}

RunConfig config_from_json(const json& j, const fs::path& base) {
  check_keys(j, "config",
             {"reference_manifest", "case_manifest", "output_dir", "workers", "seed", "thresholds", "registration",
              "report_references", "phantom", "refsize"});
  RunConfig c;
  read_path(j, "reference_manifest", c.reference_manifest, base);
  read_path(j, "case_manifest", c.case_manifest, base);
  read_path(j, "output_dir", c.output_dir, base);
  read(j, "workers", c.workers, "config");
  read(j, "seed", c.seed, "config");
  read(j, "report_references", c.report_references, "config");
  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    check_keys(t, "thresholds", {"dsc", "msd_mm"});
    read(t, "dsc", c.thresholds.dsc, "thresholds");
    read(t, "msd_mm", c.thresholds.msd_mm, "thresholds");
  }
  if (j.contains("registration")) {
    const json& r = j["registration"];
    check_keys(r, "registration",
               {"levels", "max_iterations", "control_spacing_mm", "ncc_radius", "ncc_epsilon", "bending_weight",
                "initial_step_voxels", "min_step_voxels", "tolerance"});
    RegParams& p = c.registration;
    read(r, "levels", p.levels, "registration");
    read(r, "max_iterations", p.max_iterations, "registration");
    read(r, "control_spacing_mm", p.control_spacing_mm, "registration");
    read(r, "ncc_radius", p.ncc_radius, "registration");
    read(r, "ncc_epsilon", p.ncc_epsilon, "registration");
    read(r, "bending_weight", p.bending_weight, "registration");
    read(r, "initial_step_voxels", p.initial_step_voxels, "registration");
    read(r, "min_step_voxels", p.min_step_voxels, "registration");
    read(r, "tolerance", p.tolerance, "registration");
  }
  if (j.contains("phantom")) {
    const json& p = j["phantom"];
    check_keys(p, "phantom", {"n_cases", "n_refs", "severities"});
    read(p, "n_cases", c.phantom.n_cases, "phantom");
    read(p, "n_refs", c.phantom.n_refs, "phantom");
    read(p, "severities", c.phantom.severities, "phantom");
  }
  if (j.contains("refsize")) {
    const json& r = j["refsize"];
    check_keys(r, "refsize", {"sizes", "runs"});
    read(r, "sizes", c.refsize.sizes, "refsize");
    read(r, "runs", c.refsize.runs, "refsize");
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  const json j = read_json(path, ErrorCode::InvalidConfig);
  return config_from_json(j, path.parent_path());
}

void apply_overrides(RunConfig& cfg, const ConfigOverrides& o) {
  if (o.workers) cfg.workers = *o.workers;
  if (o.dsc_threshold) cfg.thresholds.dsc = *o.dsc_threshold;
  if (o.msd_threshold) cfg.thresholds.msd_mm = *o.msd_threshold;
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
}

ReferenceSet load_reference_manifest(const fs::path& path) {
  const json j = read_json(path, ErrorCode::InvalidConfig);
  check_keys(j, "reference manifest", {"references"});
  if (!j.contains("references") || !j["references"].is_array()) bad_config("reference manifest needs a list");
  const fs::path base = path.parent_path();
  std::vector<Reference> refs;
  std::set<std::string> seen;
  for (const json& r : j["references"]) {
    check_keys(r, "reference entry", {"id", "image", "labels"});
    std::string id;
    fs::path image, labels;
    read(r, "id", id, "reference entry");
    read_path(r, "image", image, base);
    read_path(r, "labels", labels, base);
    if (!valid_id(id) || !seen.insert(id).second) bad_config("invalid or duplicate reference id '" + id + "'");
    if (image.empty() || labels.empty()) bad_config("reference " + id + " needs image and labels");
    refs.push_back(Reference{id, load_nifti_volume(image), load_nifti_labels(labels)});
  }
  if (refs.empty()) throw Error(ErrorCode::NoReferences, "reference manifest is empty");
  return ReferenceSet(std::move(refs));
}

std::vector<CaseEntry> load_case_manifest(const fs::path& path) {
  const json j = read_json(path, ErrorCode::InvalidConfig);
  check_keys(j, "case manifest", {"cases"});
  if (!j.contains("cases") || !j["cases"].is_array()) bad_config("case manifest needs a list");
  const fs::path base = path.parent_path();
  std::vector<CaseEntry> out;
  std::set<std::string> seen;
  for (const json& c : j["cases"]) {
    check_keys(c, "case entry", {"id", "image", "segmentation", "ground_truth"});
    CaseEntry e;
    read(c, "id", e.id, "case entry");
    read_path(c, "image", e.image, base);
    read_path(c, "segmentation", e.segmentation, base);
    if (c.contains("ground_truth") && !c["ground_truth"].is_null()) {
      fs::path gt;
      read_path(c, "ground_truth", gt, base);
      e.ground_truth = gt;
    }
    if (!valid_id(e.id) || !seen.insert(e.id).second) bad_config("invalid or duplicate case id '" + e.id + "'");
    if (e.image.empty() || e.segmentation.empty()) bad_config("case " + e.id + " needs image and segmentation");
    out.push_back(std::move(e));
  }
  return out;
}

TestCase load_case(const CaseEntry& e) {
  TestCase tc{e.id, load_nifti_volume(e.image), load_nifti_labels(e.segmentation), std::nullopt};
  if (e.ground_truth) tc.gt = load_nifti_labels(*e.ground_truth);
  tc.validate();
  return tc;
}

int cmd_run(const RunConfig& cfg, std::ostream& log) {
  return guarded(log, [&] { return run_pipeline(cfg, log, false); });
}

int cmd_eval(const RunConfig& cfg, std::ostream& log) {
  return guarded(log, [&] { return run_pipeline(cfg, log, true); });
}

int cmd_phantom(const RunConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    cfg.validate();
    const PhantomConfig& p = cfg.phantom;
    log << "generating " << p.n_cases << " cases and " << p.n_refs << " references\n";
    const Battery b = make_battery(p.n_cases, p.n_refs, p.severities, cfg.seed);

    const fs::path root = cfg.output_dir / "battery";
    fs::create_directories(root / "references");
    fs::create_directories(root / "cases");
    json refs = json::array(), cases = json::array(), ref_meta = json::array(), case_meta = json::array();
    for (std::size_t i = 0; i < b.references.size(); ++i) {
      const Reference& r = b.references[i];
      const std::string img = "references/" + r.id + "_image.nii", lab = "references/" + r.id + "_labels.nii";
      save_nifti(r.image, root / img);
      save_nifti(r.labels, root / lab);
      refs.push_back({{"id", r.id}, {"image", img}, {"labels", lab}});
      ref_meta.push_back({{"id", r.id}, {"phantom_seed", b.spec.references[i].seed}});
    }
    for (std::size_t k = 0; k < b.cases.size(); ++k) {
      const TestCase& c = b.cases[k];
      const TestCaseSpec& s = b.spec.cases[k];
      const std::string img = "cases/" + c.id + "_image.nii", seg = "cases/" + c.id + "_seg.nii",
                        gt = "cases/" + c.id + "_gt.nii";
      save_nifti(c.image, root / img);
      save_nifti(c.seg, root / seg);
      save_nifti(*c.gt, root / gt);
      cases.push_back({{"id", c.id}, {"image", img}, {"segmentation", seg}, {"ground_truth", gt}});
      case_meta.push_back({{"id", c.id},
                           {"phantom_seed", s.params.seed},
                           {"severity", s.degrade.severity},
                           {"operators", degrade_ops_to_string(s.degrade.operators)},
                           {"degrade_seed", s.degrade.seed}});
    }
    write_text(root / "references.json", json{{"references", refs}}.dump(2) + "\n");
    write_text(root / "cases.json", json{{"cases", cases}}.dump(2) + "\n");
    const json battery{{"seed", cfg.seed},
                       {"n_cases", p.n_cases},
                       {"n_refs", p.n_refs},
                       {"severities", p.severities},
                       {"reference_manifest", "references.json"},
                       {"case_manifest", "cases.json"},
                       {"references", ref_meta},
                       {"cases", case_meta}};
    write_text(root / "battery.json", battery.dump(2) + "\n");
    log << "battery written to " << root.string() << "\n";
    return 0;
  });
}

int cmd_refsize(const RunConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const Loaded in = load_inputs(cfg, true);
    for (std::size_t s : cfg.refsize.sizes)
      if (s == 0 || s > in.refs.size())
        bad_config("refsize size " + std::to_string(s) + " outside [1, " + std::to_string(in.refs.size()) + "]");
    std::vector<TestCase> cases;
    std::vector<MetricSet> real;
    for (const auto& e : in.cases) {
      try {
        cases.push_back(load_case(e));
      } catch (const Error& err) {
        log << "case " << e.id << " failed: " << err.what() << "\n";
        return 2;
      }
      real.push_back(full_metrics(cases.back().seg, *cases.back().gt));
    }
    log << "scoring " << cases.size() << " cases against " << in.refs.size() << " references\n";
    const ScoreMatrix m = score_matrix(cases, in.refs.entries(), cfg.registration, cfg.workers);
    const RefsizeResult r =
        refsize_from_scores(m, real, cfg.refsize.sizes, cfg.refsize.runs, cfg.seed, cfg.thresholds.dsc);

    fs::create_directories(cfg.output_dir);
    std::string rows = "size,run,accuracy\n", summary = "size,mean,min,max\n";
    for (const auto& row : r.rows)
      rows += std::to_string(row.size) + "," + std::to_string(row.run) + "," + format_value(row.accuracy) + "\n";
    for (const auto& s : r.summary)
      summary += std::to_string(s.size) + "," + format_value(s.mean) + "," + format_value(s.min) + "," +
                 format_value(s.max) + "\n";
    write_text(cfg.output_dir / "refsize.csv", rows);
    write_text(cfg.output_dir / "refsize_summary.csv", summary);
    return 0;
  });
}

}  // namespace rcaqc
