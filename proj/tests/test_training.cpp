#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "autoplace/error.hpp"
#include "autoplace/pipeline.hpp"
#include "autoplace/training.hpp"

using namespace autoplace;

namespace {

EncoderConfig tiny_encoder(std::size_t input = 12) {
  EncoderConfig c;
  c.input_size = input;
  c.conv_channels = {2, 3};
  c.pool_specs = {{2, 2}, {3, 3}};
  c.temporal = false;
  return c;
}

/// Places on a line at the given x positions, one random image each.
TrainingData line_world(const std::vector<double>& xs, std::uint64_t seed = 1) {
  TrainingData d;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on(0.2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<float> img(144);
    for (float& v : img) v = on(rng) ? 1.0f : 0.0f;
    d.images.push_back(std::move(img));
    d.poses.push_back({xs[i], 0.0, 0.0});
    d.sequences.push_back({{i}});
  }
  return d;
}

void zero_weights(Encoder<float>& e) {
  for (float& v : e.parameters()) v = 0.0f;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  CHECK(c.learning_rate_at(0) == 0.01);
  CHECK(c.learning_rate_at(4) == 0.01);
  CHECK(c.learning_rate_at(5) == 0.005);
  CHECK(c.learning_rate_at(10) == 0.0025);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("mining: single geometric positive is forced") {
  TrainingData d = line_world({0, 5, 30, 40, 50});
  d.database = {1, 2, 3, 4};
  d.queries = {0};
  Encoder<float> e(tiny_encoder());
  DescriptorCache cache;
  cache.refresh(e, d, std::vector<std::size_t>{0, 1, 2, 3, 4});
  MiningStats stats;
  const auto mined = mine_triplets(d.queries, d.database, d.poses, cache, MiningConfig{9, 18, 10}, stats);
  REQUIRE(mined.size() == 1);
  CHECK(mined[0].positive == 1);
  CHECK(mined[0].negatives.size() == 3);
}

TEST_CASE("mining: ties resolve in database order") {
  std::vector<double> xs{0, 3};
  for (int i = 0; i < 15; ++i) xs.push_back(100.0 + 10.0 * i);
  TrainingData d = line_world(xs);
  for (std::size_t i = 16; i >= 1; --i) d.database.push_back(i);
  d.queries = {0};
  Encoder<float> e(tiny_encoder());
  zero_weights(e);
  DescriptorCache cache;
  std::vector<std::size_t> all(xs.size());
  std::iota(all.begin(), all.end(), 0);
  cache.refresh(e, d, all);
  MiningStats stats;
  const auto mined = mine_triplets(d.queries, d.database, d.poses, cache, MiningConfig{9, 18, 10}, stats);
  REQUIRE(mined.size() == 1);
  CHECK(mined[0].negatives == std::vector<std::size_t>{16, 15, 14, 13, 12, 11, 10, 9, 8, 7});
}

TEST_CASE("mining: skipped queries are counted") {
  TrainingData d = line_world({0, 100, 5, 4});
  d.database = {1};
  d.queries = {0, 2};
  Encoder<float> e(tiny_encoder());
  DescriptorCache cache;
  cache.refresh(e, d, std::vector<std::size_t>{0, 1, 2, 3});
  MiningStats stats;
  CHECK(mine_triplets(d.queries, d.database, d.poses, cache, MiningConfig{}, stats).empty());
  CHECK(stats.no_positive == 2);

  d.database = {3};
  stats = {};
  CHECK(mine_triplets(d.queries, d.database, d.poses, cache, MiningConfig{}, stats).empty());
  CHECK(stats.no_negative == 2);
}

TEST_CASE("mining: negatives respect the geometric filter") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 120);
  TrainingData d;
  {
    std::vector<double> xs(100);
    for (double& x : xs) x = u(rng);
    d = line_world(xs, 4);
    for (auto& p : d.poses) p.y = u(rng) * 0.3;
  }
  for (std::size_t i = 0; i < 100; ++i) (i % 2 ? d.queries : d.database).push_back(i);
  Encoder<float> e(tiny_encoder());
  DescriptorCache cache;
  std::vector<std::size_t> all(100);
  std::iota(all.begin(), all.end(), 0);
  cache.refresh(e, d, all);
  MiningStats stats;
  const MiningConfig mc{9, 18, 10};
  const auto mined = mine_triplets(d.queries, d.database, d.poses, cache, mc, stats);
  CHECK(!mined.empty());
  for (const auto& m : mined) {
    CHECK(planar_distance(d.poses[m.query], d.poses[m.positive]) <= 9.0);
    double best = 1e300;
    for (std::size_t db : d.database)
      if (planar_distance(d.poses[m.query], d.poses[db]) <= 9.0) best = std::min(best, cache.distance(m.query, db));
    CHECK(cache.distance(m.query, m.positive) == best);
    std::size_t far = 0;
    for (std::size_t db : d.database) far += planar_distance(d.poses[m.query], d.poses[db]) > 18.0;
    CHECK(m.negatives.size() == std::min<std::size_t>(10, far));
    for (std::size_t n : m.negatives) CHECK(planar_distance(d.poses[m.query], d.poses[n]) > 18.0);
  }
}

TEST_CASE("momentum step with folded weight decay") {
  SgdMomentum opt(2, 0.9, 0.1);
  std::vector<float> w{1.0f, -2.0f};
  const std::vector<float> g{0.5f, 0.0f};
  opt.step(w, g, 0.1);
  CHECK(w[0] == doctest::Approx(1.0 - 0.1 * 0.6));
  CHECK(w[1] == doctest::Approx(-2.0 + 0.1 * 0.2));
  opt.step(w, g, 0.1);
  const double v0 = 0.9 * 0.6 + 0.5 + 0.1 * (1.0 - 0.06);
  CHECK(w[0] == doctest::Approx(0.94 - 0.1 * v0));
}

namespace {

struct SmallWorld {
  Preprocessed pre;
  TrainingData data;
  PipelineConfig config;
};

SmallWorld small_world() {
  PipelineConfig cfg;
  cfg.synth.route_length = 250.0;
  cfg.synth.training_traversals = 2;
  cfg.synth.query_scans = 20;
  cfg.raster.image_size = 32;
  cfg.encoder = tiny_encoder(32);
  cfg.temporal_enabled = false;
  cfg.synchronize();
  const Benchmark bench = make_benchmark(cfg.synth);
  cfg.split.day_boundary_us = bench.day_boundary_us;
  cfg.split.min_spacing = bench.min_spacing;
  SmallWorld w;
  w.pre = preprocess(bench.sequence.scans, cfg);
  w.data = make_training_data(w.pre, cfg.encoder);
  w.config = cfg;
  return w;
}

double hard_loss(const Encoder<float>& e, const TrainingData& d, const TrainConfig& tc) {
  std::vector<std::size_t> all(d.poses.size());
  std::iota(all.begin(), all.end(), 0);
  DescriptorCache cache;
  cache.refresh(e, d, all);
  MiningStats stats;
  const auto mined = mine_triplets(d.queries, d.database, d.poses, cache,
                                   MiningConfig{tc.positive_radius, tc.negative_radius, tc.num_negatives}, stats);
  return evaluate_loss(e, d, mined, tc.margin);
}

}  // namespace

TEST_CASE("training: zero learning rate leaves weights unchanged") {
  const SmallWorld w = small_world();
  Encoder<float> e(w.config.encoder);
  const std::vector<float> before(e.parameters().begin(), e.parameters().end());
  TrainConfig tc = w.config.train;
  tc.learning_rate = 0.0;
  tc.epochs = 1;
  tc.queries_per_epoch = 24;
  std::size_t callbacks = 0;
  const auto r = train(e, w.data, tc, [&](std::size_t, const Encoder<float>&) { ++callbacks; });
  CHECK(callbacks == 1);
  CHECK(!r.curve.empty());
  CHECK(std::equal(before.begin(), before.end(), e.parameters().begin()));
}

TEST_CASE("training: deterministic and reduces the hard-negative loss") {
  const SmallWorld w = small_world();
  CHECK(w.pre.places.size() == 220);
  CHECK(w.data.queries.size() + w.data.database.size() == 200);

  TrainConfig tc = w.config.train;
  tc.epochs = 30;
  tc.queries_per_epoch = 0;
  tc.lr_decay_every = 10;
  Encoder<float> e(w.config.encoder);
  const double initial = hard_loss(e, w.data, tc);
  const auto r1 = train(e, w.data, tc);
  const double final_loss = hard_loss(e, w.data, tc);
  INFO("initial " << initial << " final " << final_loss);
  CHECK(initial > 0.0);
  CHECK(final_loss <= 0.5 * initial);
  CHECK(r1.epoch_mean_loss.back() <= 0.5 * r1.epoch_mean_loss.front());

  Encoder<float> e2(w.config.encoder);
  tc.epochs = 2;
  Encoder<float> e3(w.config.encoder);
  const auto a = train(e2, w.data, tc), b = train(e3, w.data, tc);
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(a.curve[i].loss == b.curve[i].loss);
  CHECK(std::equal(e2.parameters().begin(), e2.parameters().end(), e3.parameters().begin()));
}

TEST_CASE("training: empty sets are data errors") {
  TrainingData d = line_world({0, 1});
  Encoder<float> e(tiny_encoder());
  CHECK_THROWS_AS(train(e, d, TrainConfig{}), DataError);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "autoplace_test_ckpt";
  std::filesystem::create_directories(dir);
  EncoderConfig cfg = tiny_encoder();
  cfg.temporal = true;
  cfg.sequence_length = 2;
  cfg.weight_init_seed = 77;
  Encoder<float> e(cfg);
  e.parameters()[3] = 1.25f;
  save_checkpoint(dir / "a.apc", e, 7);
  std::size_t epoch = 0;
  const Encoder<float> back = load_checkpoint(dir / "a.apc", &epoch);
  CHECK(epoch == 7);
  CHECK(back.config().temporal);
  CHECK(back.config().conv_channels == cfg.conv_channels);
  CHECK(back.config().pool_specs == cfg.pool_specs);
  CHECK(std::equal(e.parameters().begin(), e.parameters().end(), back.parameters().begin()));

  {
    std::ofstream out(dir / "bad.apc", std::ios::binary);
    out << "JUNK";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.apc"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "none.apc"), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("training: divergence aborts after checkpointing completed epochs") {
  const SmallWorld w = small_world();
  Encoder<float> e(w.config.encoder);
  TrainConfig tc = w.config.train;
  tc.learning_rate = 1e30;
  tc.momentum = 0.99;
  tc.epochs = 3;
  tc.queries_per_epoch = 8;
  std::vector<std::size_t> done;
  CHECK_THROWS_AS(train(e, w.data, tc, [&](std::size_t epoch, const Encoder<float>&) { done.push_back(epoch); }),
                  NumericalError);
  CHECK(done.size() < 3);
}
