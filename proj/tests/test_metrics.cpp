#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracle.hpp"
#include "rcaqc/kernels.hpp"
#include "rcaqc/metrics.hpp"

using namespace rcaqc;

TEST_CASE("dice examples") {
  const Grid g{{6, 6, 1}, {1, 1, 1}, {0, 0, 0}};
  const auto a = testing::box_labels(g, {0, 0, 0}, {1, 1, 0}, 1);
  CHECK(dice(a, a, 1) == 1.0);
  const auto shifted = testing::box_labels(g, {1, 0, 0}, {2, 1, 0}, 1);
  CHECK(dice(a, shifted, 1) == doctest::Approx(0.5));
  const auto far = testing::box_labels(g, {4, 4, 0}, {5, 5, 0}, 1);
  CHECK(dice(a, far, 1) == 0.0);
  CHECK(dice(a, far, 2) == 1.0);  // both empty
}

TEST_CASE("surface voxels") {
  const Grid g{{7, 7, 7}, {1, 1, 1}, {0, 0, 0}};
  CHECK(surface_voxels(testing::box_labels(g, {2, 2, 2}, {4, 4, 4}, 1), 1).size() == 26);
  const auto single = testing::box_labels(g, {3, 3, 3}, {3, 3, 3}, 2);
  const auto s = surface_voxels(single, 2);
  REQUIRE(s.size() == 1);
  CHECK(s[0][0] == doctest::Approx(3.5));
  CHECK(surface_voxels(single, 1).empty());
}

TEST_CASE("surface distance lists") {
  SUBCASE("single voxels along anisotropic x") {
    const Grid g{{6, 2, 2}, {2, 1, 1}, {0, 0, 0}};
    const auto a = testing::box_labels(g, {0, 0, 0}, {0, 0, 0}, 1);
    const auto b = testing::box_labels(g, {3, 0, 0}, {3, 0, 0}, 1);
    const auto d = surface_distances(a, b, 1);
    REQUIRE(d.a_to_b.size() == 1);
    REQUIRE(d.b_to_a.size() == 1);
    CHECK(d.a_to_b[0] == doctest::Approx(6.0));
    CHECK(d.b_to_a[0] == doctest::Approx(6.0));
    CHECK(mean_surface_distance(d) == 6.0);
    CHECK(rms_surface_distance(d) == doctest::Approx(6.0));
    CHECK(hausdorff_distance(d) == 6.0);
  }
  SUBCASE("identical shapes") {
    const Grid g{{8, 8, 8}, {1, 1, 1}, {0, 0, 0}};
    const auto a = testing::box_labels(g, {1, 2, 3}, {5, 5, 6}, 3);
    const auto d = surface_distances(a, a, 3);
    for (double v : d.a_to_b) CHECK(v == 0.0);
    CHECK(hausdorff_distance(d) == 0.0);
  }
  SUBCASE("nested shapes give lists of different length") {
    const Grid g{{9, 9, 9}, {1, 1, 1}, {0, 0, 0}};
    const auto small = testing::box_labels(g, {3, 3, 3}, {5, 5, 5}, 1);
    const auto big = testing::box_labels(g, {2, 2, 2}, {6, 6, 6}, 1);
    const auto d = surface_distances(small, big, 1);
    CHECK(d.a_to_b.size() == 26);
    CHECK(d.b_to_a.size() == 98);
    const auto o = oracle::directed(oracle::surface(big, 1), oracle::surface(small, 1));
    REQUIRE(o.size() == d.b_to_a.size());
    for (std::size_t i = 0; i < o.size(); ++i) CHECK(d.b_to_a[i] == doctest::Approx(o[i]));
  }
  SUBCASE("empty surface is undefined") {
    const Grid g{{4, 4, 4}, {1, 1, 1}, {0, 0, 0}};
    const auto a = testing::box_labels(g, {1, 1, 1}, {2, 2, 2}, 1);
    try {
      surface_distances(a, LabelMap(g), 1);
      FAIL("expected UndefinedDistance");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UndefinedDistance);
    }
  }
}

TEST_CASE("distance statistics from lists") {
  const SurfaceDistances d{{0.0, 2.0}, {2.0, 4.0}};
  CHECK(mean_surface_distance(d) == 2.0);
  CHECK(rms_surface_distance(d) == doctest::Approx(std::sqrt(6.0)));
  CHECK(hausdorff_distance(d) == 4.0);
  const SurfaceDistances z{{0.0, 0.0}, {0.0}};
  CHECK(mean_surface_distance(z) == 0.0);
  CHECK(rms_surface_distance(z) == 0.0);
  CHECK(hausdorff_distance(z) == 0.0);
  CHECK_THROWS_AS(mean_surface_distance(SurfaceDistances{{}, {1.0}}), Error);
}

TEST_CASE("whole heart merge") {
  const Grid g{{3, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  const auto wh = whole_heart(LabelMap(g, {1, 2, 3}));
  CHECK(wh.count(1) == 3);
  CHECK(whole_heart(LabelMap(g)).count(0) == 3);
}

TEST_CASE("whole-heart dice exceeds class mean under class confusion") {
  const Grid g{{10, 10, 10}, {1, 1, 1}, {0, 0, 0}};
  std::vector<std::uint8_t> a(g.size(), 0), b;
  for (int z = 2; z < 8; ++z)
    for (int y = 2; y < 8; ++y)
      for (int x = 2; x < 8; ++x) a[g.index(x, y, z)] = x < 4 ? 1 : (x < 6 ? 2 : 3);
  b = a;
  for (int z = 2; z < 8; ++z)
    for (int y = 2; y < 5; ++y) {
      std::swap(b[g.index(3, y, z)], b[g.index(4, y, z)]);  // LVC/LVM confusion
    }
  const MetricSet m = full_metrics(LabelMap(g, a), LabelMap(g, b));
  CHECK(m[Entry::WholeHeart]->dsc == 1.0);
  CHECK(m[Entry::WholeHeart]->dsc >= m[Entry::Average]->dsc);
  const double mean = (m[Entry::LVC]->dsc + m[Entry::LVM]->dsc + m[Entry::RVC]->dsc) / 3.0;
  CHECK(m[Entry::Average]->dsc == doctest::Approx(mean));
}

TEST_CASE("full metrics conventions") {
  const Grid g{{6, 6, 6}, {1, 1, 1}, {0, 0, 0}};
  const auto a = testing::box_labels(g, {1, 1, 1}, {3, 3, 3}, 1);
  const MetricSet self = full_metrics(a, a);
  CHECK(self[Entry::LVC]->dsc == 1.0);
  CHECK(self[Entry::LVC]->hd == 0.0);
  CHECK_FALSE(self[Entry::LVM].has_value());
  CHECK_FALSE(self[Entry::RVC].has_value());
  CHECK(self[Entry::Average]->dsc == 1.0);

  const MetricSet vs_empty = full_metrics(a, LabelMap(g));
  CHECK(vs_empty[Entry::WholeHeart]->dsc == 0.0);
  CHECK(std::isinf(vs_empty[Entry::WholeHeart]->msd));
  CHECK(std::isinf(vs_empty[Entry::WholeHeart]->hd));
}

TEST_CASE("random pairs agree with the brute-force oracle") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Grid g{{8, 8, 8}, {1.0 + 0.25 * (t % 3), 1.0, 0.5 + 0.5 * (t % 2)}, {0, 0, 0}};
    const auto a = testing::random_labels(g, rng, 0.3);
    const auto b = testing::random_labels(g, rng, 0.3);
    const MetricSet m = full_metrics(a, b);
    const auto o = oracle::metrics(a, b);
    for (int e = 0; e < 5; ++e) {
      REQUIRE(m.entries[e].has_value() == o[e].has_value());
      if (!o[e]) continue;
      CHECK(m.entries[e]->dsc == doctest::Approx(o[e]->dsc).epsilon(1e-12));
      CHECK(m.entries[e]->msd == doctest::Approx(o[e]->msd).epsilon(1e-12));
      CHECK(m.entries[e]->rms == doctest::Approx(o[e]->rms).epsilon(1e-12));
      CHECK(m.entries[e]->hd == doctest::Approx(o[e]->hd).epsilon(1e-12));
    }
  }
}

TEST_CASE("metric names round trip") {
  for (Metric m : kMetrics) CHECK(parse_metric(name(m)) == m);
  for (Entry e : kEntries) CHECK(parse_entry(name(e)) == e);
  CHECK_THROWS_AS(parse_metric("jaccard"), Error);
}
