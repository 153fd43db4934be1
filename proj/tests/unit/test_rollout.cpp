#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "doctest.h"
#include "fixtures.hpp"
#include "motionlm/harness/stats.hpp"
#include "motionlm/rollout/rollout.hpp"
#include "motionlm/rollout/rollout_io.hpp"
#include "motionlm/tokenizer/tokenizer.hpp"

using namespace motionlm;

namespace {

RolloutConfig small_config(RolloutMode mode, std::size_t n = 4, std::uint64_t seed = 7) {
  RolloutConfig c;
  c.num_rollouts = n;
  c.seed = seed;
  c.mode = mode;
  c.top_p = 0.95;
  return c;
}

}  // namespace

TEST_CASE("nucleus support truncates and renormalizes") {
  const std::vector<double> p = {0.5, 0.3, 0.2};
  const auto s = nucleus_support(p, 0.6);
  REQUIRE(s.ids.size() == 2);
  CHECK(s.ids[0] == 0);
  CHECK(s.ids[1] == 1);
  CHECK(s.probs[0] == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(s.probs[1] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(nucleus_support(p, 1.0).ids.size() == 3);
}

TEST_CASE("nucleus ties resolve by id and tiny top_p is argmax") {
  const std::vector<double> p = {0.25, 0.25, 0.5};
  const auto s = nucleus_support(p, 0.7);
  REQUIRE(s.ids.size() == 2);
  CHECK(s.ids[0] == 2);
  CHECK(s.ids[1] == 0);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) CHECK(sample_nucleus(p, 1e-9, rng) == 2);
}

TEST_CASE("nucleus rejects invalid distributions") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_nucleus(std::vector<double>{0.5, 0.4}, 0.9, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_nucleus(std::vector<double>{}, 0.9, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_nucleus(std::vector<double>{1.5, -0.5}, 0.9, rng), std::invalid_argument);
}

TEST_CASE("full nucleus matches the distribution") {
  const std::vector<double> p = {0.4, 0.3, 0.2, 0.1};
  Rng rng(11);
  std::vector<double> counts(p.size(), 0.0);
  for (int i = 0; i < 20000; ++i) counts[sample_nucleus(p, 1.0, rng)] += 1.0;
  CHECK(chi_square_gof(counts, p).p_value >= 0.01);
}

TEST_CASE("rollouts are deterministic per seed") {
  const MotionLM model(fixtures::tiny_model());
  const auto scene = fixtures::straight_scene();
  const auto a = rollout(model, scene, small_config(RolloutMode::joint));
  const auto b = rollout(model, scene, small_config(RolloutMode::joint));
  const auto c = rollout(model, scene, small_config(RolloutMode::joint, 4, 8));
  REQUIRE(a.size() == 4);
  CHECK(a.num_agents() == 2);
  CHECK(a.steps() == 16);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].tokens == b.samples[i].tokens);
    CHECK(a.samples[i].log_probs == b.samples[i].log_probs);
    differs = differs || a.samples[i].tokens != c.samples[i].tokens;
  }
  CHECK(differs);
}

TEST_CASE("sample log-probabilities match teacher forcing") {
  const MotionLM model(fixtures::tiny_model());
  const auto scene = fixtures::straight_scene();
  const auto cfg = small_config(RolloutMode::joint, 2);
  const auto set = rollout(model, scene, cfg);
  for (const auto& s : set.samples) {
    const auto scored = score_sample(model, scene, s, cfg);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t t = 0; t < 16; ++t)
        CHECK(scored[a][t] == doctest::Approx(s.log_probs[a][t]).epsilon(1e-4));
  }
}

TEST_CASE("marginal agents ignore each other") {
  const MotionLM model(fixtures::tiny_model());
  const auto scene = fixtures::straight_scene();
  const auto cfg = small_config(RolloutMode::marginal, 1);
  const auto set = rollout(model, scene, cfg);
  auto altered = set.samples[0];
  for (auto& t : altered.tokens[1]) t = (t + 37) % 169;
  const auto base = score_sample(model, scene, set.samples[0], cfg);
  const auto moved = score_sample(model, scene, altered, cfg);
  for (std::size_t t = 0; t < 16; ++t) CHECK(base[0][t] == moved[0][t]);
}

TEST_CASE("causal conditioning hides the query's future") {
  const MotionLM model(fixtures::tiny_model());
  const auto scene = fixtures::straight_scene();
  auto cfg = small_config(RolloutMode::conditional_causal, 1);
  cfg.query_agent = 0;
  cfg.query_tokens = tokenize_scenario(model.config().vocab, scene).sequence.tokens[0];
  const auto set = rollout(model, scene, cfg);
  REQUIRE(set.size() == 1);
  CHECK(set.samples[0].tokens[0] == *cfg.query_tokens);
  for (double lp : set.samples[0].log_probs[0]) CHECK(lp == 0.0);

  const auto base = score_sample(model, scene, set.samples[0], cfg);
  for (std::size_t t = 0; t < 16; t += 5) {
    auto altered = set.samples[0];
    for (std::size_t u = t; u < 16; ++u) altered.tokens[0][u] = (altered.tokens[0][u] + 11) % 169;
    const auto moved = score_sample(model, scene, altered, cfg);
    for (std::size_t u = 0; u <= t; ++u) CHECK(base[1][u] == moved[1][u]);
  }
}

TEST_CASE("acausal conditioning sees the query's future") {
  const MotionLM model(fixtures::tiny_model());
  const auto scene = fixtures::straight_scene();
  auto cfg = small_config(RolloutMode::conditional_acausal, 1);
  cfg.query_agent = 0;
  cfg.query_tokens = tokenize_scenario(model.config().vocab, scene).sequence.tokens[0];
  const auto set = rollout(model, scene, cfg);
  const auto base = score_sample(model, scene, set.samples[0], cfg);
  auto altered = set.samples[0];
  altered.tokens[0][14] = (altered.tokens[0][14] + 50) % 169;
  const auto moved = score_sample(model, scene, altered, cfg);
  CHECK(base[1][0] != moved[1][0]);
}

TEST_CASE("conditional rollouts validate their inputs") {
  const MotionLM model(fixtures::tiny_model());
  const auto scene = fixtures::straight_scene();
  auto cfg = small_config(RolloutMode::conditional_causal, 1);
  CHECK_THROWS_AS(rollout(model, scene, cfg), std::invalid_argument);
  cfg.query_agent = 5;
  cfg.query_tokens = TokenRow(16, 84);
  CHECK_THROWS_AS(rollout(model, scene, cfg), std::out_of_range);
  cfg.query_agent = 0;
  cfg.query_tokens = TokenRow(3, 84);
  CHECK_THROWS_AS(rollout(model, scene, cfg), std::invalid_argument);
  cfg.query_tokens = TokenRow(16, 400);
  CHECK_THROWS_AS(rollout(model, scene, cfg), std::out_of_range);
}

TEST_CASE("query tokens reconstruct world waypoints") {
  const MotionLM model(fixtures::tiny_model());
  const auto scene = fixtures::straight_scene("q", 6.0);
  const auto q = query_from_waypoints(model.config().vocab, scene, 1, scene.future[1]);
  CHECK(q.tokens.size() == 16);
  CHECK(q.reconstruction_error <= model.config().vocab.bin_width() / 2 + 1e-9);
  const auto world = decode_tokens(model.config().vocab, scene, {TokenRow(16, 84), q.tokens});
  for (std::size_t t = 0; t < 16; ++t) {
    CHECK(std::abs(world[1][t].x - scene.future[1][t].x) <= q.reconstruction_error + 1e-9);
    CHECK(std::abs(world[1][t].y - scene.future[1][t].y) <= q.reconstruction_error + 1e-9);
  }
}

TEST_CASE("rollout files round trip") {
  const MotionLM model(fixtures::tiny_model());
  const auto scene = fixtures::straight_scene("io");
  RolloutFile file;
  file.config_digest = "abc";
  file.sets.push_back(rollout(model, scene, small_config(RolloutMode::joint, 3)));
  const auto path = std::filesystem::temp_directory_path() / "motionlm_rollouts_test.jsonl";
  save_rollouts(file, path.string());
  const auto back = load_rollouts(path.string());
  std::filesystem::remove(path);
  CHECK(back.config_digest == "abc");
  REQUIRE(back.sets.size() == 1);
  const auto& a = file.sets[0];
  const auto& b = back.sets[0];
  CHECK(b.scenario_id == "io");
  CHECK(b.mode == a.mode);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b.samples[i].tokens == a.samples[i].tokens);
    for (std::size_t g = 0; g < 2; ++g)
      for (std::size_t t = 0; t < 16; ++t) {
        CHECK(b.samples[i].waypoints[g][t].x == a.samples[i].waypoints[g][t].x);
        CHECK(b.samples[i].log_probs[g][t] == a.samples[i].log_probs[g][t]);
      }
  }
}
