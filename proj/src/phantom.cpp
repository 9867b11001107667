#include "rcaqc/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace rcaqc {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix(splitmix(splitmix(seed) ^ stream) ^ index);
}

constexpr std::uint64_t kReferenceStream = 0x52454653;  // "REFS"
constexpr std::uint64_t kCaseStream = 0x43415345;       // "CASE"
constexpr std::uint64_t kDegradeStream = 0x44454752;    // "DEGR"

double ellipsoid_q(const Vec3& p, const Vec3& c, const Vec3& r) {
  double q = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double t = (p[a] - c[a]) / r[a];
    q += t * t;
  }
  return q;
}

void check_inside(const Grid& g, const Vec3& c, const Vec3& r, const char* what) {
  for (int a = 0; a < 3; ++a) {
    const double lo = g.origin[a], hi = g.origin[a] + g.extent()[a];
    if (!(r[a] > 0.0)) throw Error(ErrorCode::InvalidPhantom, std::string(what) + ": radius must be > 0");
    if (c[a] - r[a] < lo || c[a] + r[a] > hi)
      throw Error(ErrorCode::InvalidPhantom, std::string(what) + " leaves the grid");
  }
}

Vec3 absolute(const PhantomParams& p, const Vec3& rel) {
  return {p.origin[0] + rel[0], p.origin[1] + rel[1], p.origin[2] + rel[2]};
}

constexpr double kDegree = 3.14159265358979323846 / 180.0;

// Half extents of an axis-aligned ellipsoid after rotating it about z.
Vec3 rotated_box(const Vec3& r, double c, double s) {
  return {std::sqrt(r[0] * r[0] * c * c + r[1] * r[1] * s * s), std::sqrt(r[0] * r[0] * s * s + r[1] * r[1] * c * c),
          r[2]};
}

Vec3 lv_outer(const PhantomParams& p) {
  return {p.lv_radii[0] + p.myo_thickness, p.lv_radii[1] + p.myo_thickness, p.lv_radii[2] + p.myo_thickness};
}

// --- degradation operators ---------------------------------------------------

using Labels = std::vector<std::uint8_t>;

constexpr int kNeighbours[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};

Labels translate(const Grid& g, const Labels& in, double severity, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vec3 dir{n01(rng), n01(rng), n01(rng)};
  const double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
  const double mm = 10.0 * severity;
  int shift[3];
  for (int a = 0; a < 3; ++a) shift[a] = static_cast<int>(std::lround(mm * dir[a] / norm / g.spacing[a]));
  Labels out(in.size(), 0);
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        const int sx = x - shift[0], sy = y - shift[1], sz = z - shift[2];
        if (g.contains(sx, sy, sz)) out[g.index(x, y, z)] = in[g.index(sx, sy, sz)];
      }
  return out;
}

// Whole-heart erosion: foreground voxels touching background become background.
Labels erode(const Grid& g, Labels cur, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    Labels next = cur;
    for (int z = 0; z < g.dims[2]; ++z)
      for (int y = 0; y < g.dims[1]; ++y)
        for (int x = 0; x < g.dims[0]; ++x) {
          const std::size_t i = g.index(x, y, z);
          if (!cur[i]) continue;
          for (const auto& d : kNeighbours) {
            const int nx = x + d[0], ny = y + d[1], nz = z + d[2];
            if (g.contains(nx, ny, nz) && cur[g.index(nx, ny, nz)] == 0) {
              next[i] = 0;
              break;
            }
          }
        }
    cur.swap(next);
  }
  return cur;
}

// Whole-heart dilation: background voxels take the first foreground
// neighbour's label.
Labels dilate(const Grid& g, Labels cur, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    Labels next = cur;
    for (int z = 0; z < g.dims[2]; ++z)
      for (int y = 0; y < g.dims[1]; ++y)
        for (int x = 0; x < g.dims[0]; ++x) {
          const std::size_t i = g.index(x, y, z);
          if (cur[i]) continue;
          for (const auto& d : kNeighbours) {
            const int nx = x + d[0], ny = y + d[1], nz = z + d[2];
            if (!g.contains(nx, ny, nz)) continue;
            const std::uint8_t l = cur[g.index(nx, ny, nz)];
            if (l) {
              next[i] = l;
              break;
            }
          }
        }
    cur.swap(next);
  }
  return cur;
}

Labels boundary_jitter(const Grid& g, const Labels& cur, double severity, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 5);
  const double prob = 0.5 * severity;
  Labels next = cur;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        const std::size_t i = g.index(x, y, z);
        bool boundary = false;
        for (const auto& d : kNeighbours) {
          const int nx = x + d[0], ny = y + d[1], nz = z + d[2];
          if (g.contains(nx, ny, nz) && cur[g.index(nx, ny, nz)] != cur[i]) {
            boundary = true;
            break;
          }
        }
        if (!boundary) continue;
        const double r = u01(rng);
        const int k = pick(rng);
        if (r >= prob) continue;
        const int nx = x + kNeighbours[k][0], ny = y + kNeighbours[k][1], nz = z + kNeighbours[k][2];
        if (g.contains(nx, ny, nz)) next[i] = cur[g.index(nx, ny, nz)];
      }
  return next;
}

Labels relabel_noise(Labels cur, double severity, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> other(1, 2);
  const double prob = 0.3 * severity;
  for (auto& l : cur) {
    if (!l) continue;
    const double r = u01(rng);
    const int k = other(rng);
    if (r < prob) l = static_cast<std::uint8_t>((l - 1 + k) % 3 + 1);
  }
  return cur;
}

Labels drop_slices(const Grid& g, Labels cur, double severity, std::mt19937_64& rng) {
  const std::size_t plane = static_cast<std::size_t>(g.dims[0]) * g.dims[1];
  std::vector<int> occupied;
  for (int z = 0; z < g.dims[2]; ++z)
    if (std::any_of(cur.begin() + z * plane, cur.begin() + (z + 1) * plane, [](auto l) { return l != 0; }))
      occupied.push_back(z);
  const auto drop = static_cast<std::size_t>(std::lround(0.6 * severity * occupied.size()));
  std::shuffle(occupied.begin(), occupied.end(), rng);
  for (std::size_t k = 0; k < drop && k < occupied.size(); ++k)
    std::fill(cur.begin() + occupied[k] * plane, cur.begin() + (occupied[k] + 1) * plane, 0);
  return cur;
}

}  // namespace

void PhantomParams::validate() const {
  grid().validate();
  if (!(myo_thickness > 0.0)) throw Error(ErrorCode::InvalidPhantom, "myocardium thickness must be > 0");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidPhantom, "noise sigma must be >= 0");
  for (double r : lv_radii)
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidPhantom, "LV radii must be > 0");
  if (!std::isfinite(rotation_deg)) throw Error(ErrorCode::InvalidPhantom, "rotation must be finite");
  const Grid g = grid();
  const double c = std::cos(rotation_deg * kDegree), s = std::sin(rotation_deg * kDegree);
  check_inside(g, absolute(*this, lv_center), rotated_box(lv_outer(*this), c, s), "LV");
  const Vec3 rv_center{lv_center[0] + c * rv_offset[0] - s * rv_offset[1],
                       lv_center[1] + s * rv_offset[0] + c * rv_offset[1], lv_center[2] + rv_offset[2]};
  check_inside(g, absolute(*this, rv_center), rotated_box(rv_radii, c, s), "RV");
}

Phantom generate_phantom(const PhantomParams& p) {
  p.validate();
  const Grid g = p.grid();
  const Vec3 lv = absolute(p, p.lv_center);
  const Vec3 outer = lv_outer(p);
  const Vec3 rv{lv[0] + p.rv_offset[0], lv[1] + p.rv_offset[1], lv[2] + p.rv_offset[2]};
  const double c = std::cos(p.rotation_deg * kDegree), s = std::sin(p.rotation_deg * kDegree);

  std::vector<std::uint8_t> labels(g.size(), 0);
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        // Sample the unrotated heart: rotate the point back about the LV axis.
        const Vec3 q = g.to_physical(x, y, z);
        const double dx = q[0] - lv[0], dy = q[1] - lv[1];
        const Vec3 pt{lv[0] + c * dx + s * dy, lv[1] - s * dx + c * dy, q[2]};
        std::uint8_t l = kBackground;
        if (ellipsoid_q(pt, lv, p.lv_radii) <= 1.0)
          l = kLVC;
        else if (ellipsoid_q(pt, lv, outer) <= 1.0)
          l = kLVM;
        else if (ellipsoid_q(pt, rv, p.rv_radii) <= 1.0)
          l = kRVC;
        labels[g.index(x, y, z)] = l;
      }

  const double means[4] = {p.background_mean, p.lvc_mean, p.lvm_mean, p.rvc_mean};
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<float> image(g.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double n = p.noise_sigma > 0.0 ? p.noise_sigma * noise(rng) : 0.0;
    image[i] = static_cast<float>(std::max(0.0, means[labels[i]] + n));
  }
  return Phantom{Volume(g, std::move(image)), LabelMap(g, std::move(labels))};
}

std::string degrade_ops_to_string(unsigned ops) {
  static const std::pair<DegradeOp, const char*> names[] = {
      {DegradeOp::Erode, "erode"},
      {DegradeOp::Dilate, "dilate"},
      {DegradeOp::Translate, "translate"},
      {DegradeOp::BoundaryJitter, "boundary_jitter"},
      {DegradeOp::DropSlices, "drop_slices"},
      {DegradeOp::RelabelNoise, "relabel_noise"},
  };
  std::string out;
  for (const auto& [op, n] : names) {
    if (!(ops & static_cast<unsigned>(op))) continue;
    if (!out.empty()) out += '+';
    out += n;
  }
  return out;
}

unsigned parse_degrade_ops(const std::string& s) {
  unsigned ops = 0;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, '+')) {
    if (tok.empty()) continue;
    bool found = false;
    for (unsigned bit = 1; bit <= static_cast<unsigned>(DegradeOp::RelabelNoise); bit <<= 1) {
      if (degrade_ops_to_string(bit) == tok) {
        ops |= bit;
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::InvalidArgument, "unknown degradation operator '" + tok + "'");
  }
  return ops;
}

LabelMap degrade(const LabelMap& gt, const DegradeSpec& spec) {
  if (!(spec.severity >= 0.0 && spec.severity <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "severity must lie in [0,1]");
  if (spec.severity == 0.0) return gt;
  const Grid& g = gt.grid();
  const double s = spec.severity;
  Labels cur(gt.labels().begin(), gt.labels().end());
  const auto has = [&](DegradeOp op) { return (spec.operators & static_cast<unsigned>(op)) != 0; };
  const auto rng_for = [&](DegradeOp op) {
    return std::mt19937_64(derive_seed(spec.seed, kDegradeStream, static_cast<unsigned>(op)));
  };
  const int morph = static_cast<int>(std::lround(4.0 * s));

  if (has(DegradeOp::Translate)) {
    auto rng = rng_for(DegradeOp::Translate);
    cur = translate(g, cur, s, rng);
  }
  if (has(DegradeOp::Erode)) cur = erode(g, std::move(cur), morph);
  if (has(DegradeOp::Dilate)) cur = dilate(g, std::move(cur), morph);
  if (has(DegradeOp::BoundaryJitter)) {
    auto rng = rng_for(DegradeOp::BoundaryJitter);
    cur = boundary_jitter(g, cur, s, rng);
  }
  if (has(DegradeOp::RelabelNoise)) {
    auto rng = rng_for(DegradeOp::RelabelNoise);
    cur = relabel_noise(std::move(cur), s, rng);
  }
  if (has(DegradeOp::DropSlices)) {
    auto rng = rng_for(DegradeOp::DropSlices);
    cur = drop_slices(g, std::move(cur), s, rng);
  }
  return LabelMap(g, std::move(cur));
}

PhantomParams jittered_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PhantomParams p;
  for (int a = 0; a < 3; ++a) p.lv_center[a] += 3.0 * u(rng);
  for (int a = 0; a < 3; ++a) p.lv_radii[a] *= 1.0 + (a == 2 ? 0.10 : 0.12) * u(rng);
  p.myo_thickness = 6.0 + 1.0 * u(rng);
  for (int a = 0; a < 3; ++a) p.rv_offset[a] += 2.5 * u(rng);
  for (int a = 0; a < 3; ++a) p.rv_radii[a] *= 1.0 + 0.12 * u(rng);
  p.rotation_deg = 20.0 * u(rng);
  p.lvc_mean *= 1.0 + 0.1 * u(rng);
  p.lvm_mean *= 1.0 + 0.1 * u(rng);
  p.rvc_mean *= 1.0 + 0.1 * u(rng);
  p.noise_sigma = 6.0 + 2.0 * u(rng);
  p.seed = splitmix(seed ^ 0x4e4f495345ull);
  return p;
}

BatterySpec plan_battery(int n_cases, int n_refs, const std::vector<double>& severities, std::uint64_t seed) {
  if (n_cases < 1 || n_refs < 1) throw Error(ErrorCode::InvalidArgument, "battery needs >= 1 case and reference");
  if (severities.empty()) throw Error(ErrorCode::InvalidArgument, "battery needs at least one severity");
  BatterySpec spec;
  for (int n = 0; n < n_refs; ++n) {
    spec.references.push_back(jittered_params(derive_seed(seed, kReferenceStream, n)));
    char id[32];
    std::snprintf(id, sizeof id, "ref_%03d", n);
    spec.reference_ids.emplace_back(id);
  }
  for (int k = 0; k < n_cases; ++k) {
    const std::uint64_t case_seed = derive_seed(seed, kCaseStream, k);
    TestCaseSpec c;
    char id[32];
    std::snprintf(id, sizeof id, "case_%03d", k);
    c.id = id;
    c.params = jittered_params(case_seed);
    c.degrade.severity = severities[k % severities.size()];
    c.degrade.seed = splitmix(case_seed ^ kDegradeStream);

    // Operator mix: at most one of erode/dilate, each other operator drawn
    // independently; never empty.
    std::mt19937_64 rng(c.degrade.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    unsigned ops = 0;
    const double morph = u01(rng);
    if (morph < 1.0 / 3.0) ops |= static_cast<unsigned>(DegradeOp::Erode);
    else if (morph < 2.0 / 3.0) ops |= static_cast<unsigned>(DegradeOp::Dilate);
    if (u01(rng) < 0.5) ops |= static_cast<unsigned>(DegradeOp::Translate);
    if (u01(rng) < 0.5) ops |= static_cast<unsigned>(DegradeOp::BoundaryJitter);
    if (u01(rng) < 0.4) ops |= static_cast<unsigned>(DegradeOp::DropSlices);
    if (u01(rng) < 0.3) ops |= static_cast<unsigned>(DegradeOp::RelabelNoise);
    if (ops == 0) ops = static_cast<unsigned>(DegradeOp::Translate);
    c.degrade.operators = ops;
    spec.cases.push_back(c);
  }
  return spec;
}

Battery build_battery(const BatterySpec& spec) {
  std::vector<Reference> refs(spec.references.size(), Reference{"", Volume(Grid{}, 0.0f), LabelMap(Grid{})});
  std::vector<TestCase> cases(spec.cases.size(), TestCase{"", Volume(Grid{}, 0.0f), LabelMap(Grid{}), std::nullopt});
  const auto nr = static_cast<std::ptrdiff_t>(refs.size());
  const auto nc = static_cast<std::ptrdiff_t>(cases.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t n = 0; n < nr; ++n) {
    auto ph = generate_phantom(spec.references[n]);
    refs[n] = Reference{spec.reference_ids[n], std::move(ph.image), std::move(ph.labels)};
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < nc; ++k) {
    const auto& c = spec.cases[k];
    auto ph = generate_phantom(c.params);
    LabelMap seg = degrade(ph.labels, c.degrade);
    cases[k] = TestCase{c.id, std::move(ph.image), std::move(seg), std::move(ph.labels)};
  }
  return Battery{spec, ReferenceSet(std::move(refs)), std::move(cases)};
}

Battery make_battery(int n_cases, int n_refs, const std::vector<double>& severities, std::uint64_t seed) {
  return build_battery(plan_battery(n_cases, n_refs, severities, seed));
}

}  // namespace rcaqc
