#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "autoplace/error.hpp"
#include "autoplace/retrieval.hpp"
#include "oracles.hpp"

using namespace autoplace;

namespace {

std::vector<float> unit_vector(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = n(rng);
  v = oracle::normalized(v);
  return {v.begin(), v.end()};
}

RcsHistogram random_histogram(std::mt19937_64& rng, const RcsConfig& cfg) {
  std::gamma_distribution<double> g(2.0, 3.0);
  std::vector<double> vals(60);
  for (double& v : vals) v = g(rng);
  return compute_rcs_histogram(vals, cfg);
}

PlaceIndex random_index(std::uint64_t seed, std::size_t n, std::size_t d, const RcsConfig& cfg) {
  std::mt19937_64 rng(seed);
  PlaceIndex index(d, cfg.bin_count());
  for (std::size_t i = 0; i < n; ++i)
    index.add({"p" + std::to_string(1000 + i), {double(i), 0.0, 0.0}, unit_vector(rng, d), random_histogram(rng, cfg)});
  return index;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("rcs config") {
  RcsConfig c;
  CHECK(c.bin_count() == 25);
  c.bin_width = 0.1;
  CHECK(c.bin_count() == 10);
  c.bin_width = 0.0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = RcsConfig{};
  c.lower_bound = 1.0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = RcsConfig{};
  c.top_m = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("rcs histogram matches brute-force binning") {
  const RcsConfig cfg;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::vector<double> vals(1000);
  for (double& v : vals) v = u(rng);
  const auto h = compute_rcs_histogram(vals, cfg);
  const auto ref = oracle::rcs_histogram(vals, cfg.lower_bound, cfg.bin_width, cfg.smoothing_epsilon);
  REQUIRE(h.bins.size() == ref.size());
  for (std::size_t j = 0; j < ref.size(); ++j) CHECK(std::abs(h.bins[j] - ref[j]) < 1e-12);
  double sum = 0;
  for (double b : h.bins) sum += b;
  CHECK(std::abs(sum - 1.0) < 1e-9);
  CHECK(!h.degenerate);
}

TEST_CASE("rcs histogram edges: lower bound discarded, maximum in the last bin") {
  const RcsConfig cfg;
  // Normalized values: 0, 0.02 (discarded), 0.06 (first bin, closed right edge), 1.
  const std::vector<double> vals{0.0, 0.02, 0.06, 1.0};
  const auto h = compute_rcs_histogram(vals, cfg);
  CHECK(h.bins[0] == doctest::Approx(0.5));
  CHECK(h.bins[24] == doctest::Approx(0.5));
  const auto ref = oracle::rcs_histogram(vals, cfg.lower_bound, cfg.bin_width, cfg.smoothing_epsilon);
  for (std::size_t j = 0; j < ref.size(); ++j) CHECK(std::abs(h.bins[j] - ref[j]) < 1e-12);
}

TEST_CASE("rcs histogram: single-bin mass and affine invariance") {
  const RcsConfig cfg;
  // Everything except the minimum normalizes into the last bin, (0.98, 1].
  const std::vector<double> vals{0.0, 0.985, 0.99, 0.995, 1.0};
  const auto h = compute_rcs_histogram(vals, cfg);
  CHECK(h.bins[24] > 1.0 - 1e-8);
  for (std::size_t j = 0; j < 24; ++j) CHECK(h.bins[j] < 1e-9);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(200), b(200);
  for (std::size_t i = 0; i < 200; ++i) {
    a[i] = std::round(u(rng) * 64.0);  // dyadic grid keeps the affine map exact
    b[i] = 4.0 * a[i] + 16.0;
  }
  CHECK(compute_rcs_histogram(a, cfg).bins == compute_rcs_histogram(b, cfg).bins);
}

TEST_CASE("rcs histogram: degenerate inputs are uniform") {
  const RcsConfig cfg;
  const std::vector<double> same(10, 3.5);
  const auto h = compute_rcs_histogram(same, cfg);
  CHECK(h.degenerate);
  for (double b : h.bins) CHECK(b == doctest::Approx(1.0 / 25));
  CHECK(compute_rcs_histogram(std::vector<double>{}, cfg).degenerate);
}

TEST_CASE("histogram distance identities") {
  const RcsConfig cfg;
  std::mt19937_64 rng(3);
  const auto a = random_histogram(rng, cfg), b = random_histogram(rng, cfg);
  CHECK(histogram_distance(a, a) == 0.0);
  CHECK(histogram_distance(a, b) > 0.0);
  CHECK(histogram_distance(a, b) != histogram_distance(b, a));
  CHECK(histogram_distance(a, b) == doctest::Approx(oracle::kl(a.bins, b.bins)).epsilon(1e-12));

  // Two bins.
  const double eps = 1e-10, z = 1.0 + 2 * eps;
  const RcsHistogram p{{(1 + eps) / z, eps / z}}, q{{eps / z, (1 + eps) / z}};
  const double expect = (1 + eps) / z * std::log((1 + eps) / eps) + eps / z * std::log(eps / (1 + eps));
  CHECK(histogram_distance(p, q) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect > 20.0);

  // Uniform second argument.
  RcsHistogram uni;
  uni.bins.assign(25, 1.0 / 25);
  double entropy = 0;
  for (double x : a.bins) entropy -= x * std::log(x);
  CHECK(histogram_distance(a, uni) == doctest::Approx(std::log(25.0) - entropy).epsilon(1e-10));

  RcsHistogram short_h;
  short_h.bins = {1.0};
  CHECK_THROWS_AS(histogram_distance(a, short_h), UsageError);
}

TEST_CASE("query_index: brute-force fused sort over the shortlist") {
  RcsConfig cfg;
  cfg.top_m = 20;
  const PlaceIndex index = random_index(8, 50, 16, cfg);
  std::mt19937_64 rng(80);
  for (int trial = 0; trial < 10; ++trial) {
    const auto q = unit_vector(rng, 16);
    const auto qh = random_histogram(rng, cfg);
    const auto feat = query_index(index, q, qh, cfg, false);
    const auto fused = query_index(index, q, qh, cfg, true);
    REQUIRE(feat.candidates.size() == 20);
    REQUIRE(fused.candidates.size() == 20);

    // Stage 1 against an exhaustive sort.
    std::vector<std::pair<double, std::string>> all;
    for (const auto& e : index.entries()) {
      double s = 0;
      for (std::size_t i = 0; i < 16; ++i) s += (double(q[i]) - e.descriptor[i]) * (double(q[i]) - e.descriptor[i]);
      all.emplace_back(std::sqrt(s), e.scan_id);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(feat.candidates[i].scan_id == all[i].second);
      CHECK(feat.candidates[i].total_distance == feat.candidates[i].feature_distance);
      CHECK(feat.candidates[i].feature_distance <= 2.0);
    }

    // Stage 2: permutation of stage 1, sorted by the fused distance.
    std::vector<std::tuple<double, std::string>> expect;
    for (const auto& c : feat.candidates) {
      const double dr = oracle::kl(qh.bins, index[c.entry].histogram.bins);
      expect.emplace_back(0.41 * dr + 0.59 * c.feature_distance, c.scan_id);
    }
    std::sort(expect.begin(), expect.end());
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(fused.candidates[i].scan_id == std::get<1>(expect[i]));
      CHECK(std::abs(fused.candidates[i].total_distance - std::get<0>(expect[i])) < 1e-9);
    }
    CHECK(fused.stage == RankStage::fused);
    for (std::size_t i = 1; i < 20; ++i) CHECK(fused.score(i - 1) <= fused.score(i));
  }
}

TEST_CASE("query_index: alpha extremes and fixed histogram distance") {
  RcsConfig cfg;
  cfg.top_m = 30;
  const PlaceIndex index = random_index(9, 40, 8, cfg);
  std::mt19937_64 rng(90);
  const auto q = unit_vector(rng, 8);
  const auto qh = random_histogram(rng, cfg);
  const auto base = query_index(index, q, qh, cfg, false);

  cfg.fusion_alpha = 0.0;
  const auto a0 = query_index(index, q, qh, cfg, true);
  for (std::size_t i = 0; i < 30; ++i) CHECK(a0.candidates[i].scan_id == base.candidates[i].scan_id);

  cfg.fusion_alpha = 1.0;
  const auto a1 = query_index(index, q, qh, cfg, true);
  for (std::size_t i = 1; i < 30; ++i)
    CHECK(a1.candidates[i - 1].histogram_distance <= a1.candidates[i].histogram_distance);

  // Same histogram everywhere: fused order equals the feature order.
  PlaceIndex flat(8, cfg.bin_count());
  for (const auto& e : index.entries()) flat.add({e.scan_id, e.pose, e.descriptor, qh});
  cfg.fusion_alpha = 0.41;
  const auto ff = query_index(flat, q, qh, cfg, true), fb = query_index(flat, q, qh, cfg, false);
  for (std::size_t i = 0; i < 30; ++i) CHECK(ff.candidates[i].scan_id == fb.candidates[i].scan_id);
}

TEST_CASE("place index: errors and degenerate cases") {
  RcsConfig cfg;
  PlaceIndex index(4, cfg.bin_count());
  const std::vector<float> q{1, 0, 0, 0};
  RcsHistogram h;
  h.bins.assign(25, 0.04);
  CHECK_THROWS_AS(query_index(index, q, h, cfg), DataError);
  index.add({"a", {}, q, h});
  CHECK_THROWS_AS(index.add({"a", {}, q, h}), DataError);
  CHECK_THROWS_AS(index.add({"b", {}, {1, 0}, h}), DataError);
  const auto one = query_index(index, q, h, cfg);
  REQUIRE(one.candidates.size() == 1);
  CHECK(one.candidates[0].scan_id == "a");
  CHECK(one.candidates[0].feature_distance == 0.0);

  // Equal distances break by scan id.
  PlaceIndex ties(4, cfg.bin_count());
  ties.add({"c", {}, {0, 1, 0, 0}, h});
  ties.add({"b", {}, {0, 0, 1, 0}, h});
  const auto r = query_index(ties, q, h, cfg);
  CHECK(r.candidates[0].scan_id == "b");
}

TEST_CASE("index file round trip is bit-exact") {
  RcsConfig cfg;
  const auto dir = std::filesystem::temp_directory_path() / "autoplace_test_index";
  std::filesystem::create_directories(dir);
  const PlaceIndex index = random_index(5, 12, 10, cfg);
  save_index(dir / "a.api", index, cfg);
  const PlaceIndex back = load_index(dir / "a.api");
  REQUIRE(back.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(back[i].scan_id == index[i].scan_id);
    CHECK(back[i].pose == index[i].pose);
    CHECK(back[i].descriptor == index[i].descriptor);
    CHECK(back[i].histogram.bins == index[i].histogram.bins);
  }
  save_index(dir / "b.api", random_index(5, 12, 10, cfg), cfg);
  CHECK(slurp(dir / "a.api") == slurp(dir / "b.api"));
  {
    std::ofstream out(dir / "c.api", std::ios::binary);
    out << slurp(dir / "a.api").substr(0, 100);
  }
  CHECK_THROWS_AS(load_index(dir / "c.api"), DataError);
  std::filesystem::remove_all(dir);
}
