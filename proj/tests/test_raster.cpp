#include <doctest.h>

#include <filesystem>
#include <random>

#include "autoplace/error.hpp"
#include "autoplace/raster.hpp"
#include "oracles.hpp"

using namespace autoplace;

namespace {

RadarScan scan_at(const std::string& id, Pose2D pose, std::vector<std::pair<double, double>> pts,
                  std::int64_t t = 0) {
  RadarScan s;
  s.scan_id = id;
  s.pose = pose;
  s.timestamp_us = t;
  for (auto [x, y] : pts) s.points.push_back({x, y, 0.0, std::atan2(y, x), 1.0});
  return s;
}

RasterConfig full_raster() {
  RasterConfig c;
  c.crop_range = 100.0;
  c.image_size = 200;
  return c;
}

AggregatedScan points_only(const std::vector<std::pair<double, double>>& pts) {
  AggregatedScan agg;
  for (auto [x, y] : pts) {
    agg.points.push_back({x, y, 0.0, 0.0, 1.0});
    agg.rcs_values.push_back(1.0);
  }
  return agg;
}

std::vector<std::pair<long, long>> occupied_cells(const RadarImage& img) {
  std::vector<std::pair<long, long>> cells;
  for (std::size_t r = 0; r < img.size; ++r)
    for (std::size_t c = 0; c < img.size; ++c)
      if (img.at(r, c)) cells.emplace_back(static_cast<long>(r), static_cast<long>(c));
  return cells;
}

}  // namespace

TEST_CASE("aggregate_scans: single scan is the identity") {
  const RadarScan s = scan_at("a", {3, 4, 0.5}, {{1, 2}, {-5, 0.5}, {10, -10}});
  const auto agg = aggregate_scans(std::span(&s, 1), 0);
  REQUIRE(agg.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(agg.points[i].x == s.points[i].x);
    CHECK(agg.points[i].y == s.points[i].y);
  }
  CHECK(agg.center_scan_id == "a");
}

TEST_CASE("aggregate_scans: identical poses duplicate points") {
  const std::vector<RadarScan> w{scan_at("a", {1, 1, 1}, {{2, 3}}), scan_at("b", {1, 1, 1}, {{2, 3}})};
  const auto agg = aggregate_scans(w, 1);
  REQUIRE(agg.points.size() == 2);
  CHECK(agg.points[0].x == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(agg.points[0].y == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("aggregate_scans: matches homogeneous-matrix oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50, 50), yaw(-3.1, 3.1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RadarScan> w;
    for (int k = 0; k < 5; ++k) {
      std::vector<std::pair<double, double>> pts;
      for (int i = 0; i < 10; ++i) pts.emplace_back(u(rng), u(rng));
      w.push_back(scan_at(std::to_string(k), {u(rng), u(rng), yaw(rng)}, pts));
    }
    const std::size_t centre = 2;
    const auto agg = aggregate_scans(w, centre);
    const auto& cp = w[centre].pose;
    const auto to_centre = oracle::rigid_inverse(oracle::pose_matrix(cp.x, cp.y, cp.yaw));
    std::size_t idx = 0;
    for (const auto& s : w) {
      const auto t = oracle::mul(to_centre, oracle::pose_matrix(s.pose.x, s.pose.y, s.pose.yaw));
      for (const auto& p : s.points) {
        const auto [x, y] = oracle::apply(t, p.x, p.y);
        CHECK(std::abs(agg.points[idx].x - x) < 1e-9);
        CHECK(std::abs(agg.points[idx].y - y) < 1e-9);
        ++idx;
      }
    }
  }
}

TEST_CASE("aggregate_scans: masks drop dynamic points") {
  const std::vector<RadarScan> w{scan_at("a", {}, {{1, 0}, {2, 0}}), scan_at("b", {}, {{3, 0}})};
  std::vector<DynamicMask> masks(2);
  masks[0].labels = {1, 0};
  masks[1].labels = {0};
  const auto agg = aggregate_scans(w, 0, masks);
  REQUIRE(agg.points.size() == 1);
  CHECK(agg.points[0].x == 1.0);
  masks[1].labels.clear();
  CHECK_THROWS_AS(aggregate_scans(w, 0, masks), DataError);
}

TEST_CASE("aggregate_around: centred window clamps at segment boundaries") {
  std::vector<RadarScan> scans;
  for (int i = 0; i < 12; ++i) scans.push_back(scan_at(std::to_string(i), {double(i), 0, 0}, {{0, 0}}));
  const std::vector<std::size_t> seg{0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
  RasterConfig cfg;
  auto mid = aggregate_around(scans, seg, 4, cfg);
  CHECK(mid.source_scan_ids == std::vector<std::string>{"1", "2", "3", "4", "5", "6", "7"});
  CHECK(!mid.boundary_clamped);
  auto start = aggregate_around(scans, seg, 0, cfg);
  CHECK(start.source_scan_ids == std::vector<std::string>{"0", "1", "2", "3"});
  CHECK(start.boundary_clamped);
  auto end = aggregate_around(scans, seg, 8, cfg);
  CHECK(end.source_scan_ids == std::vector<std::string>{"5", "6", "7", "8"});
  auto other = aggregate_around(scans, seg, 10, cfg);
  CHECK(other.source_scan_ids == std::vector<std::string>{"9", "10", "11"});
}

TEST_CASE("pixel_of: centre and edges") {
  const RasterConfig cfg = full_raster();
  std::size_t r = 0, c = 0;
  REQUIRE(pixel_of(0.0, 0.0, cfg, r, c));
  CHECK(r == 100);
  CHECK(c == 100);
  REQUIRE(pixel_of(99.999, 99.999, cfg, r, c));
  CHECK(r == 0);
  CHECK(c == 199);
  REQUIRE(pixel_of(-99.999, -99.999, cfg, r, c));
  CHECK(r == 199);
  CHECK(c == 0);
  CHECK(!pixel_of(100.0, 0.0, cfg, r, c));
  CHECK(!pixel_of(0.0, -100.0, cfg, r, c));
  CHECK(!pixel_of(150.0, 3.0, cfg, r, c));
}

TEST_CASE("rasterize: empty aggregate gives an empty image") {
  const auto img = rasterize(AggregatedScan{}, full_raster());
  CHECK(img.grid.size() == 200u * 200u);
  CHECK(img.occupied() == 0);
}

TEST_CASE("rasterize: matches brute-force projection") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-130, 130);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 500; ++i) pts.emplace_back(u(rng), u(rng));
    const auto img = rasterize(points_only(pts), full_raster());
    CHECK(occupied_cells(img) == oracle::project(pts, 100.0, 200));
  }
}

TEST_CASE("rasterize: binary and idempotent") {
  std::vector<std::pair<double, double>> pts{{1.2, 1.3}, {1.7, 1.9}, {1.2, 1.3}, {-40, 20}};
  const auto a = rasterize(points_only(pts), full_raster());
  auto doubled = pts;
  doubled.insert(doubled.end(), pts.begin(), pts.end());
  const auto b = rasterize(points_only(doubled), full_raster());
  CHECK(a.grid == b.grid);
  CHECK(a.occupied() == 2);
  for (auto v : a.grid) CHECK(v <= 1);
}

TEST_CASE("rasterize: translation by one pixel shifts the image") {
  const RasterConfig cfg = full_raster();
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> cell(10, 189);
  std::vector<std::pair<double, double>> pts, shifted;
  for (int i = 0; i < 200; ++i) {
    const double x = -100.0 + cell(rng) + 0.5, y = -100.0 + cell(rng) + 0.5;
    pts.emplace_back(x, y);
    shifted.emplace_back(x + 1.0, y - 1.0);
  }
  const auto a = rasterize(points_only(pts), cfg), b = rasterize(points_only(shifted), cfg);
  auto cells = occupied_cells(a);
  for (auto& [r, c] : cells) {
    ++r;
    ++c;
  }
  CHECK(occupied_cells(b) == cells);
}

TEST_CASE("raster config validation") {
  RasterConfig c;
  c.num_aggregated_scans = 4;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = RasterConfig{};
  c.image_size = 199;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = RasterConfig{};
  c.crop_range = 0.0;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("radar image PGM round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "autoplace_test_raster";
  std::filesystem::create_directories(dir);
  RadarImage img = rasterize(points_only({{3, 4}, {-20, 60}, {0, 0}}), full_raster());
  img.scan_id = "scan_7";
  img.center_pose = {1.5, -2.25, 0.125};
  write_radar_image(dir / "img.pgm", img);
  const auto back = read_radar_image(dir / "img.pgm");
  CHECK(back.grid == img.grid);
  CHECK(back.size == 200);
  CHECK(back.scan_id == "scan_7");
  CHECK(back.center_pose == img.center_pose);
  std::filesystem::remove(dir / "img.json");
  CHECK_THROWS_AS(read_radar_image(dir / "img.pgm"), DataError);
  CHECK_THROWS_AS(read_radar_image(dir / "missing.pgm"), DataError);
  std::filesystem::remove_all(dir);
}
