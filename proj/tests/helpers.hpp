#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rcaqc/volgrid.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rcaqc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline rcaqc::LabelMap random_labels(const rcaqc::Grid& g, std::mt19937_64& rng, double fill = 0.4) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(1, 3);
  std::vector<std::uint8_t> l(g.size());
  for (auto& v : l) v = u(rng) < fill ? static_cast<std::uint8_t>(cls(rng)) : 0;
  return rcaqc::LabelMap(g, std::move(l));
}

// Solid box [lo, hi] (inclusive) of one label.
inline rcaqc::LabelMap box_labels(const rcaqc::Grid& g, rcaqc::Index3 lo, rcaqc::Index3 hi, std::uint8_t label) {
  std::vector<std::uint8_t> l(g.size(), 0);
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x) l[g.index(x, y, z)] = label;
  return rcaqc::LabelMap(g, std::move(l));
}

}  // namespace testing
