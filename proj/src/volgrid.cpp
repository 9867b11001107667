#include "rcaqc/volgrid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rcaqc {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyMass: return "EmptyMass";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::UndefinedDistance: return "UndefinedDistance";
    case ErrorCode::DivergedRegistration: return "DivergedRegistration";
    case ErrorCode::NoReferences: return "NoReferences";
    case ErrorCode::InvalidPhantom: return "InvalidPhantom";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UndefinedCorrelation: return "UndefinedCorrelation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void Grid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw Error(ErrorCode::CorruptHeader, "grid dimension < 1");
    if (!std::isfinite(spacing[a]) || spacing[a] <= 0.0)
      throw Error(ErrorCode::CorruptHeader, "grid spacing must be finite and positive");
    if (!std::isfinite(origin[a])) throw Error(ErrorCode::CorruptHeader, "grid origin not finite");
  }
}

Volume::Volume(const Grid& grid, std::vector<float> data) : grid_(grid), data_(std::move(data)) {
  grid_.validate();
  if (data_.size() != grid_.size())
    throw Error(ErrorCode::InvalidData, "volume payload size does not match dims");
  if (!std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); }))
    throw Error(ErrorCode::InvalidData, "volume contains non-finite values");
}

Volume::Volume(const Grid& grid, float fill) : Volume(grid, std::vector<float>(grid.size(), fill)) {}

LabelMap::LabelMap(const Grid& grid, std::vector<std::uint8_t> labels)
    : grid_(grid), labels_(std::move(labels)) {
  grid_.validate();
  if (labels_.size() != grid_.size())
    throw Error(ErrorCode::InvalidData, "label payload size does not match dims");
  if (!std::all_of(labels_.begin(), labels_.end(), [](std::uint8_t v) { return v <= kMaxLabel; }))
    throw Error(ErrorCode::InvalidLabel, "label outside {0,1,2,3}");
}

LabelMap::LabelMap(const Grid& grid) : LabelMap(grid, std::vector<std::uint8_t>(grid.size(), 0)) {}

std::size_t LabelMap::count(std::uint8_t label) const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

ReferenceSet::ReferenceSet(std::vector<Reference> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorCode::NoReferences, "reference set is empty");
  for (const auto& r : entries_) {
    require_same_grid(r.image.grid(), r.labels.grid(), "reference image/labels");
    for (std::uint8_t c = 1; c <= kMaxLabel; ++c) {
      if (r.labels.count(c) == 0) {
        std::ostringstream os;
        os << "reference '" << r.id << "' lacks class " << int(c);
        throw Error(ErrorCode::InvalidLabel, os.str());
      }
    }
  }
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw Error(ErrorCode::GridMismatch, std::string(what) + ": grids differ");
}

namespace {

template <typename WeightFn>
Vec3 weighted_center(const Grid& g, WeightFn&& weight) {
  // Per-slice partial sums keep the result independent of any reordering.
  double mass = 0.0;
  Vec3 acc{0.0, 0.0, 0.0};
  for (int z = 0; z < g.dims[2]; ++z) {
    double mz = 0.0;
    Vec3 az{0.0, 0.0, 0.0};
    for (int y = 0; y < g.dims[1]; ++y) {
      for (int x = 0; x < g.dims[0]; ++x) {
        const double w = weight(g.index(x, y, z));
        if (w == 0.0) continue;
        mz += w;
        az[0] += w * x;
        az[1] += w * y;
        az[2] += w * z;
      }
    }
    mass += mz;
    for (int a = 0; a < 3; ++a) acc[a] += az[a];
  }
  if (mass == 0.0 || !std::isfinite(mass)) throw Error(ErrorCode::EmptyMass, "zero total mass");
  return g.to_physical(acc[0] / mass, acc[1] / mass, acc[2] / mass);
}

}  // namespace

Vec3 center_of_mass(const Volume& v) {
  const auto d = v.data();
  return weighted_center(v.grid(), [&](std::size_t i) { return static_cast<double>(d[i]); });
}

Vec3 center_of_mass(const LabelMap& lm) {
  const auto l = lm.labels();
  return weighted_center(lm.grid(), [&](std::size_t i) { return l[i] != 0 ? 1.0 : 0.0; });
}

}  // namespace rcaqc
