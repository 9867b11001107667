// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "oracle.hpp"
#include "rcaqc/evalqc.hpp"
#include "rcaqc/phantom.hpp"
#include "rcaqc/qccli.hpp"
#include "rcaqc/register.hpp"

#ifndef QC_BINARY
#error "QC_BINARY must point at the qc executable"
#endif

using namespace rcaqc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

bool close_rel(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300}) || a == b;
}

// Random label map built from a few ellipsoids per class plus sparse noise,
// so that surfaces are neither trivial nor pure salt and pepper.
LabelMap random_shapes(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::uint8_t> l(g.size(), 0);
  const int blobs = 1 + static_cast<int>(u(rng) * 4);
  for (int b = 0; b < blobs; ++b) {
    const auto cls = static_cast<std::uint8_t>(1 + rng() % 3);
    Vec3 c, r;
    for (int k = 0; k < 3; ++k) {
      c[k] = u(rng) * g.dims[k];
      r[k] = 1.0 + u(rng) * g.dims[k] * 0.4;
    }
    for (int z = 0; z < g.dims[2]; ++z)
      for (int y = 0; y < g.dims[1]; ++y)
        for (int x = 0; x < g.dims[0]; ++x) {
          const double q = std::pow((x - c[0]) / r[0], 2) + std::pow((y - c[1]) / r[1], 2) +
                           std::pow((z - c[2]) / r[2], 2);
          if (q <= 1.0) l[g.index(x, y, z)] = cls;
        }
  }
  for (auto& v : l)
    if (u(rng) < 0.02) v = static_cast<std::uint8_t>(rng() % 4);
  return LabelMap(g, std::move(l));
}

Grid random_grid(std::mt19937_64& rng, int max_dim) {
  std::uniform_int_distribution<int> d(1, max_dim);
  std::uniform_real_distribution<double> s(0.3, 3.0), o(-50.0, 50.0);
  return Grid{{d(rng), d(rng), d(rng)}, {s(rng), s(rng), s(rng)}, {o(rng), o(rng), o(rng)}};
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  int compared = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Grid g = random_grid(rng, 16);
    const LabelMap a = random_shapes(g, rng), b = random_shapes(g, rng);
    const MetricSet got = full_metrics(a, b);
    const auto want = oracle::metrics(a, b);
    for (int e = 0; e < 5; ++e) {
      const auto& x = got[kEntries[e]];
      const auto& y = want[e];
      if (x.has_value() != y.has_value())
        return {false, "pair " + std::to_string(i) + " entry presence differs"};
      if (!x) continue;
      const double w[4] = {y->dsc, y->msd, y->rms, y->hd};
      for (int m = 0; m < 4; ++m) {
        const double v = x->get(kMetrics[m]);
        ++compared;
        if (!close_rel(v, w[m], 1e-9))
          return {false, "pair " + std::to_string(i) + " " + std::string(name(kEntries[e])) + " " +
                             std::string(name(kMetrics[m])) + " mismatch"};
        if (std::isfinite(v) && w[m] != 0.0) worst = std::max(worst, std::abs(v - w[m]) / std::abs(w[m]));
      }
    }
  }
  const double t = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "200 pairs, %d values, max rel err %.2e, %.1f s (limit 60 s)", compared, worst, t);
  return {t < 60.0, buf};
}

// ---------------------------------------------------------------------------

LabelMap with_grid(const LabelMap& m, const Grid& g) {
  return LabelMap(g, std::vector<std::uint8_t>(m.labels().begin(), m.labels().end()));
}

// Copy `m` into a larger grid at voxel offset `off`, origin moved so the
// content keeps its physical position up to a whole-voxel shift.
LabelMap padded(const LabelMap& m, Index3 off, Index3 extra) {
  const Grid& g = m.grid();
  Grid h = g;
  for (int k = 0; k < 3; ++k) h.dims[k] = g.dims[k] + off[k] + extra[k];
  std::vector<std::uint8_t> l(h.size(), 0);
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) l[h.index(x + off[0], y + off[1], z + off[2])] = m.at(x, y, z);
  return LabelMap(h, std::move(l));
}

Outcome criterion2() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> scale(0.25, 4.0), shift(-100.0, 100.0);
  std::uniform_int_distribution<int> pad(0, 4);
  const int cases = 1200;
  int checks = 0;
  std::string first_failure;
  const auto fail = [&](int i, const std::string& what) {
    if (first_failure.empty()) first_failure = "case " + std::to_string(i) + ": " + what;
  };
  for (int i = 0; i < cases; ++i) {
    const Grid g = random_grid(rng, 12);
    const LabelMap a = random_shapes(g, rng), b = random_shapes(g, rng);
    const MetricSet ab = full_metrics(a, b), ba = full_metrics(b, a);

    // Spacing scale: DSC unchanged, distances scale.
    const double s = scale(rng);
    Grid gs = g;
    for (int k = 0; k < 3; ++k) gs.spacing[k] *= s;
    const MetricSet sc = full_metrics(with_grid(a, gs), with_grid(b, gs));

    // Translation: new origin, and an integer voxel shift inside a padded grid.
    Grid gt = g;
    for (int k = 0; k < 3; ++k) gt.origin[k] += shift(rng);
    const MetricSet tr = full_metrics(with_grid(a, gt), with_grid(b, gt));
    const Index3 off{pad(rng), pad(rng), pad(rng)}, extra{pad(rng), pad(rng), pad(rng)};
    const MetricSet sh = full_metrics(padded(a, off, extra), padded(b, off, extra));

    for (Entry e : kEntries) {
      const auto& v = ab[e];
      if (v.has_value() != ba[e].has_value() || v.has_value() != sc[e].has_value() ||
          v.has_value() != tr[e].has_value() || v.has_value() != sh[e].has_value()) {
        fail(i, "entry presence differs");
        continue;
      }
      if (!v) continue;
      checks += 4;
      for (Metric m : kMetrics) {
        const double x = v->get(m);
        if (!close_rel(x, ba[e]->get(m), 1e-12)) fail(i, "symmetry");
        const double expect_scaled = m == Metric::DSC ? x : x * s;
        if (!close_rel(sc[e]->get(m), expect_scaled, 1e-9)) fail(i, "spacing scale");
        if (!close_rel(tr[e]->get(m), x, 1e-9)) fail(i, "origin translation");
        if (!close_rel(sh[e]->get(m), x, 1e-9)) fail(i, "voxel translation");
      }
      const double tol = 1e-12 * std::max(1.0, v->hd);
      if (std::isfinite(v->hd) && !(v->msd <= v->rms + tol && v->rms <= v->hd + tol)) fail(i, "msd <= rms <= hd");
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d generated cases, %d invariant checks", cases, checks);
  if (!first_failure.empty()) return {false, std::string(buf) + "; " + first_failure};
  return {cases >= 1000, buf};
}

// ---------------------------------------------------------------------------

// Trilinear sample with edge clamping, in voxel index coordinates.
double sample(const Volume& v, double x, double y, double z) {
  const auto& d = v.grid().dims;
  const auto clampi = [](int i, int n) { return std::clamp(i, 0, n - 1); };
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y)),
            z0 = static_cast<int>(std::floor(z));
  const double fx = x - x0, fy = y - y0, fz = z - z0;
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz);
    acc += w * v.at(clampi(x0 + dx, d[0]), clampi(y0 + dy, d[1]), clampi(z0 + dz, d[2]));
  }
  return acc;
}

Outcome criterion3() {
  PhantomParams pp;
  pp.seed = 303;
  const Phantom ph = generate_phantom(pp);
  const Grid& g = ph.image.grid();
  const double amp = 2.0;  // voxels
  const double two_pi = 2.0 * std::acos(-1.0);
  // Smooth synthetic field in voxels: one period across the grid per axis.
  const auto truth = [&](double x, double y, double z) {
    const double n = g.dims[0];
    return Vec3{amp * std::sin(two_pi * y / n + 0.3), amp * std::sin(two_pi * z / n + 1.1),
                amp * std::sin(two_pi * x / n + 2.0)};
  };

  // Fixed image: the phantom pulled through the field, fixed(x) = phantom(x + u(x)).
  std::vector<float> warped(g.size());
  std::vector<std::uint8_t> warped_labels(g.size());
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        const Vec3 u = truth(x, y, z);
        const double sx = x + u[0], sy = y + u[1], sz = z + u[2];
        warped[g.index(x, y, z)] = static_cast<float>(sample(ph.image, sx, sy, sz));
        const int ix = std::clamp(static_cast<int>(std::lround(sx)), 0, g.dims[0] - 1);
        const int iy = std::clamp(static_cast<int>(std::lround(sy)), 0, g.dims[1] - 1);
        const int iz = std::clamp(static_cast<int>(std::lround(sz)), 0, g.dims[2] - 1);
        warped_labels[g.index(x, y, z)] = ph.labels.at(ix, iy, iz);
      }
  const Volume fixed(g, std::move(warped));

  const RegParams params;
  const auto t0 = Clock::now();
  const Translation init = com_align(ph.image, fixed);
  const DeformationField f = ffd_register(ph.image, fixed, init, params);
  const double reg_seconds = seconds_since(t0);
  const std::vector<Vec3> v = f.dense_displacement();

  // Error of the recovered mapping over the fixed-space foreground, and
  // over the whole grid for information.
  double err_fg = 0.0, err_all = 0.0, before_fg = 0.0;
  std::size_t n_fg = 0;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        const std::size_t i = g.index(x, y, z);
        const Vec3 u = truth(x, y, z);
        double e2 = 0.0, b2 = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double rec = (v[i][k] - f.translation.d[k]) / g.spacing[k];
          e2 += (rec - u[k]) * (rec - u[k]);
          b2 += u[k] * u[k];
        }
        err_all += std::sqrt(e2);
        if (warped_labels[i] != 0) {
          err_fg += std::sqrt(e2);
          before_fg += std::sqrt(b2);
          ++n_fg;
        }
      }
  err_fg /= static_cast<double>(n_fg);
  err_all /= static_cast<double>(g.size());
  before_fg /= static_cast<double>(n_fg);

  // Self-registration: phantom onto itself, labels warped back.
  const DeformationField self = ffd_register(ph.image, ph.image, com_align(ph.image, ph.image), params);
  const MetricSet so = full_metrics(warp_labels(ph.labels, self, g), ph.labels);
  const double self_dsc = so[Entry::WholeHeart]->dsc;

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "mean displacement error %.3f voxel over foreground (limit 1.0; %.3f before registration, "
                "%.3f over whole grid), registration %.1f s; self-overlap WH DSC %.4f (limit 0.99)",
                err_fg, before_fg, err_all, reg_seconds, self_dsc);
  return {err_fg <= 1.0 && err_all <= 1.0 && self_dsc >= 0.99, buf};
}

// ---------------------------------------------------------------------------
// Criteria 4 to 7 share one 50 x 20 battery and its score matrix.

struct Study {
  Battery battery;
  ScoreMatrix scores;
  std::vector<MetricSet> real;
  double seconds = 0.0;
  double cpu_seconds = 0.0;
};

Study& study() {
  static Study s = [] {
    Study out{make_battery(50, 20, {0.0, 0.25, 0.5, 0.75, 1.0}, 42), {}, {}};
    for (const auto& c : out.battery.cases) out.real.push_back(full_metrics(c.seg, *c.gt));
    const std::clock_t c0 = std::clock();
    const auto t0 = Clock::now();
    out.scores = score_matrix(out.battery.cases, out.battery.references.entries(), RegParams{}, 1);
    out.seconds = seconds_since(t0);
    out.cpu_seconds = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC;
    return out;
  }();
  return s;
}

std::vector<MetricSet> predictions(const ScoreMatrix& m, std::span<const std::size_t> subset) {
  std::vector<MetricSet> out;
  for (const auto& row : m.scores) out.push_back(reduce_scores(row, subset).predicted);
  return out;
}

std::vector<std::size_t> all_refs(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

Outcome criterion4() {
  Study& s = study();
  const auto pred = predictions(s.scores, all_refs(s.scores.reference_ids.size()));
  const EvalSummary e = evaluate(pred, s.real, Metric::DSC, 0.7);
  const double r = e.pearson_r[0].value_or(std::nan(""));
  const unsigned cores = std::thread::hardware_concurrency();
  char buf[400];
  std::snprintf(buf, sizeof buf,
                "accuracy %.3f (limit 0.90), Pearson r %.3f (limit 0.80), TP %zu FN %zu FP %zu TN %zu; "
                "1000 registrations single-threaded in %.1f min wall, %.1f min CPU (limit 30 min)",
                e.accuracy, r, e.counts.tp, e.counts.fn, e.counts.fp, e.counts.tn, s.seconds / 60.0,
                s.cpu_seconds / 60.0);
  std::string detail = buf;
  if (cores < 4)
    detail += "; 4-worker bound of 10 min not measurable on " + std::to_string(cores) + " core(s)";
  return {e.accuracy >= 0.9 && r >= 0.8 && s.seconds <= 1800.0, detail};
}

Outcome criterion5() {
  Study& s = study();
  const auto pred = predictions(s.scores, all_refs(s.scores.reference_ids.size()));
  const EvalSummary e = evaluate(pred, s.real, Metric::MSD, 2.0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "MSD accuracy %.3f at 2.0 mm (limit 0.85), TP %zu FN %zu FP %zu TN %zu",
                e.accuracy, e.counts.tp, e.counts.fn, e.counts.fp, e.counts.tn);
  return {e.accuracy >= 0.85, buf};
}

Outcome criterion6() {
  Study& s = study();
  const std::vector<std::size_t> prefixes{1, 5, 10, 20};
  int comparisons = 0, violations = 0;
  for (std::size_t c = 0; c < 10; ++c) {
    std::vector<MetricSet> chain;
    for (std::size_t p : prefixes) chain.push_back(reduce_scores(s.scores.scores[c], all_refs(p)).predicted);
    for (std::size_t k = 1; k < chain.size(); ++k)
      for (Entry e : kEntries)
        for (Metric m : kMetrics) {
          const auto& a = chain[k - 1][e];
          const auto& b = chain[k][e];
          if (!a) continue;
          ++comparisons;
          if (!b) {
            ++violations;
            continue;
          }
          const double x = a->get(m), y = b->get(m);
          if (higher_is_better(m) ? y < x : y > x) ++violations;
        }
  }
  // The cached matrix must agree with a fresh end-to-end prediction.
  const auto& refs = s.battery.references.entries();
  const RcaPrediction fresh =
      predict_quality(s.battery.cases[0], refs.subspan(0, 5), RegParams{});
  const MetricSet cached = reduce_scores(s.scores.scores[0], all_refs(5)).predicted;
  bool same = true;
  for (Entry e : kEntries) {
    if (fresh.predicted[e].has_value() != cached[e].has_value()) same = false;
    if (!cached[e]) continue;
    for (Metric m : kMetrics)
      if (!(fresh.predicted[e]->get(m) == cached[e]->get(m))) same = false;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "10 cases x prefixes {1,5,10,20}: %d comparisons, %d violations; fresh prediction %s cached",
                comparisons, violations, same ? "equals" : "DIFFERS FROM");
  return {violations == 0 && same, buf};
}

Outcome criterion7() {
  Study& s = study();
  const std::vector<std::size_t> sizes{2, 5, 10, 15, 20};
  const RefsizeResult r = refsize_from_scores(s.scores, s.real, sizes, 5, 42, 0.7);
  std::vector<double> x, means;
  std::string table;
  for (const auto& st : r.summary) {
    x.push_back(static_cast<double>(st.size));
    means.push_back(st.mean);
    char cell[64];
    std::snprintf(cell, sizeof cell, " %zu:%.3f[%.2f,%.2f]", st.size, st.mean, st.min, st.max);
    table += cell;
  }
  double rho = std::nan("");
  try {
    rho = spearman(x, means);
  } catch (const Error&) {
  }
  const double spread2 = r.summary.front().max - r.summary.front().min;
  const double spread20 = r.summary.back().max - r.summary.back().min;
  char buf[200];
  std::snprintf(buf, sizeof buf, "Spearman %.3f (limit 0.8), spread size 20 %.3f vs size 2 %.3f; mean[min,max]:",
                rho, spread20, spread2);
  return {rho >= 0.8 && spread20 <= spread2, buf + table};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// CSV with the named column removed from every row. Cells never contain
// commas here except quoted error text, which sits before wall_time_s.
std::string drop_column(const std::string& csv, const std::string& column) {
  std::istringstream in(csv);
  std::string line, out;
  int drop = -1;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      if (c == ',' && !quoted) {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(cell);
    if (drop < 0) {
      drop = static_cast<int>(std::find(cells.begin(), cells.end(), column) - cells.begin());
      if (drop == static_cast<int>(cells.size())) return csv;
    }
    if (drop < static_cast<int>(cells.size())) cells.erase(cells.begin() + drop);
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  }
  return out;
}

int run_qc(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + QC_BINARY + "\" " + args + " 2>\"" + log.string() + "\"";
  return std::system(cmd.c_str());
}

Outcome criterion8() {
  const fs::path root = fs::temp_directory_path() / "rcaqc_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto write_config = [&](const std::string& name, const std::string& out) {
    nlohmann::json j = {{"reference_manifest", "battery/battery/references.json"},
                        {"case_manifest", "battery/battery/cases.json"},
                        {"output_dir", out},
                        {"seed", 7},
                        {"phantom", {{"n_cases", 6}, {"n_refs", 4}}}};
    std::ofstream(root / name) << j.dump(2);
    return root / name;
  };
  const fs::path gen = write_config("gen.json", "battery");
  if (run_qc("phantom --config \"" + gen.string() + "\"", root / "phantom.log") != 0)
    return {false, "qc phantom failed"};

  const fs::path a = write_config("a.json", "out_a"), b = write_config("b.json", "out_b"),
                 c = write_config("c.json", "out_c");
  const auto t0 = Clock::now();
  if (run_qc("eval --config \"" + a.string() + "\"", root / "a.log") != 0) return {false, "first qc eval failed"};
  const double serial_time = seconds_since(t0);
  if (run_qc("eval --config \"" + b.string() + "\"", root / "b.log") != 0) return {false, "second qc eval failed"};
  const auto t1 = Clock::now();
  if (run_qc("eval --workers 4 --config \"" + c.string() + "\"", root / "c.log") != 0)
    return {false, "4-worker qc eval failed"};
  const double parallel_time = seconds_since(t1);

  std::vector<std::string> files{"predictions.csv", "summary.json", "scatter.csv"};
  for (const auto& e : fs::directory_iterator(root / "out_a" / "reports"))
    files.push_back("reports/" + e.path().filename().string());
  std::vector<std::string> differing;
  for (const auto& f : files) {
    std::string x = slurp(root / "out_a" / f), y = slurp(root / "out_b" / f), z = slurp(root / "out_c" / f);
    if (f == "predictions.csv") {
      x = drop_column(x, "wall_time_s");
      y = drop_column(y, "wall_time_s");
      z = drop_column(z, "wall_time_s");
    }
    if (x.empty()) differing.push_back(f + " (empty)");
    if (x != y) differing.push_back(f + " (repeat)");
    if (x != z) differing.push_back(f + " (4 workers)");
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu output files compared across 2 serial runs and a 4-worker run (%.1f s vs %.1f s)",
                files.size(), serial_time, parallel_time);
  std::string detail = buf;
  if (!differing.empty()) {
    detail += "; differing:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {differing.empty() && files.size() == 9, detail};
}

// ---------------------------------------------------------------------------

// Dims exact; spacing and origin pass through float32 header fields.
bool same_geometry(const Grid& a, const Grid& b) {
  if (a.dims != b.dims) return false;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(a.spacing[k] - b.spacing[k]) > 1e-6 * a.spacing[k]) return false;
    if (std::abs(a.origin[k] - b.origin[k]) > 1e-5 * std::max(1.0, std::abs(a.origin[k]))) return false;
  }
  return true;
}

Outcome criterion9() {
  std::mt19937_64 rng(909);
  const fs::path dir = fs::temp_directory_path() / "rcaqc_acceptance_nifti";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::normal_distribution<float> n(0.0f, 1000.0f);
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    const Grid g = random_grid(rng, 24);
    const fs::path p = dir / ("v" + std::to_string(i) + ".nii");
    if (i % 2 == 0) {
      std::vector<float> data(g.size());
      for (auto& v : data) v = n(rng);
      const Volume v(g, std::move(data));
      save_nifti(v, p);
      const Volume w = load_nifti_volume(p);
      const bool same = same_geometry(w.grid(), v.grid()) && w.data().size() == v.data().size() &&
                        std::memcmp(w.data().data(), v.data().data(), v.data().size_bytes()) == 0;
      failures += !same;
    } else {
      const LabelMap v = random_shapes(g, rng);
      save_nifti(v, p);
      const LabelMap w = load_nifti_labels(p);
      const bool same = same_geometry(w.grid(), v.grid()) && w.labels().size() == v.labels().size() &&
                        std::memcmp(w.labels().data(), v.labels().data(), v.labels().size_bytes()) == 0;
      failures += !same;
    }
  }
  fs::remove_all(dir);
  return {failures == 0, "100 random volumes (50 float, 50 label), " + std::to_string(failures) + " payload or geometry mismatches"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
