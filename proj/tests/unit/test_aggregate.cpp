#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "motionlm/aggregate/aggregate.hpp"
#include "motionlm/core/random.hpp"

using namespace motionlm;

namespace {

// Two agents, four steps, moving along +x with a constant lateral offset.
JointTrajectory line(double dy0, double dy1) {
  JointTrajectory j(2);
  for (int t = 1; t <= 4; ++t) {
    j[0].push_back({double(t), dy0});
    j[1].push_back({double(t), 10.0 + dy1});
  }
  return j;
}

RolloutSet as_set(const std::vector<JointTrajectory>& trajs, std::size_t replica = 0) {
  RolloutSet set;
  set.scenario_id = "agg";
  for (const auto& j : trajs) {
    JointSample s;
    s.waypoints = j;
    s.tokens.assign(2, TokenRow(4, 84));
    s.log_probs.assign(2, std::vector<double>(4, -1.0));
    s.replica = replica;
    set.samples.push_back(s);
  }
  return set;
}

}  // namespace

TEST_CASE("joint distances") {
  const auto a = line(0, 0);
  const auto b = line(3, 0);
  CHECK(joint_distance(a, b) == doctest::Approx(3.0));
  CHECK(joint_distance(a, b, DistanceKind::mean_endpoint) == doctest::Approx(1.5));
  CHECK(joint_distance(a, b, DistanceKind::ade) == doctest::Approx(1.5));
  CHECK(joint_distance(a, a) == 0.0);
}

TEST_CASE("NMS picks the larger cluster first") {
  std::vector<JointTrajectory> r;
  for (int i = 0; i < 3; ++i) r.push_back(line(10 + 0.1 * i, 0));
  for (int i = 0; i < 5; ++i) r.push_back(line(0.1 * i, 0));
  const auto seeds = nms_select(r, 6, 2.0);
  REQUIRE(seeds.size() == 2);
  CHECK(seeds[0] >= 3);
  CHECK(seeds[1] < 3);
}

TEST_CASE("NMS weights replace counts") {
  std::vector<JointTrajectory> r = {line(0, 0), line(0.1, 0), line(10, 0)};
  const std::vector<double> w = {0.1, 0.1, 5.0};
  const auto seeds = nms_select(r, 1, 2.0, DistanceKind::max_endpoint, w);
  REQUIRE(seeds.size() == 1);
  CHECK(seeds[0] == 2);
}

TEST_CASE("a single rollout is one certain mode") {
  const auto modes = aggregate(as_set({line(1, 2)}), AggregateConfig{});
  REQUIRE(modes.modes.size() == 1);
  CHECK(modes.modes[0].probability == 1.0);
  CHECK(modes.modes[0].waypoints[0][3].y == 1.0);
}

TEST_CASE("identical rollouts collapse") {
  const auto modes = aggregate(as_set(std::vector<JointTrajectory>(10, line(0, 0))), AggregateConfig{});
  REQUIRE(modes.modes.size() == 1);
  CHECK(modes.modes[0].probability == doctest::Approx(1.0));
}

TEST_CASE("two clusters recover their weights and centers") {
  Rng rng(4);
  std::vector<JointTrajectory> r;
  for (int i = 0; i < 60; ++i) r.push_back(line(rng.normal(0, 0.05), rng.normal(0, 0.05)));
  for (int i = 0; i < 40; ++i) r.push_back(line(8 + rng.normal(0, 0.05), rng.normal(0, 0.05)));
  const auto modes = aggregate(as_set(r), AggregateConfig{});
  REQUIRE(modes.modes.size() == 2);
  CHECK(modes.modes[0].probability == doctest::Approx(0.6));
  CHECK(modes.modes[1].probability == doctest::Approx(0.4));
  CHECK(std::abs(modes.modes[0].waypoints[0][3].y) < 0.05);
  CHECK(std::abs(modes.modes[1].waypoints[0][3].y - 8) < 0.05);
  double total = 0;
  for (const auto& m : modes.modes) total += m.probability;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("k-means objective never increases") {
  Rng rng(9);
  std::vector<JointTrajectory> r;
  for (int i = 0; i < 80; ++i) r.push_back(line(rng.uniform(-6, 6), rng.uniform(-6, 6)));
  const auto seeds = nms_select(r, 6, 2.0);
  const auto res = kmeans_refine(r, seeds);
  REQUIRE(!res.objective.empty());
  for (std::size_t i = 1; i < res.objective.size(); ++i)
    CHECK(res.objective[i] <= res.objective[i - 1] + 1e-9);
  CHECK(res.assignment.size() == r.size());
  double total = 0;
  for (const auto& m : res.modes.modes) total += m.probability;
  CHECK(total == doctest::Approx(1.0));
  for (std::size_t i = 1; i < res.modes.modes.size(); ++i)
    CHECK(res.modes.modes[i].probability <= res.modes.modes[i - 1].probability);
}

TEST_CASE("ensemble merge is replica-major") {
  const auto merged = ensemble_merge({as_set({line(0, 0), line(1, 0)}, 0), as_set({line(2, 0)}, 1)});
  REQUIRE(merged.size() == 3);
  CHECK(merged.samples[0].replica == 0);
  CHECK(merged.samples[1].waypoints[0][0].y == 1.0);
  CHECK(merged.samples[2].replica == 1);
  CHECK(merged.scenario_id == "agg");
}

TEST_CASE("mode files round trip") {
  ModeFile f;
  f.config_digest = "d1";
  f.sets.push_back(aggregate(as_set({line(0, 0), line(5, 0), line(5.1, 0)}), AggregateConfig{}));
  const auto path = std::filesystem::temp_directory_path() / "motionlm_modes_test.jsonl";
  save_modes(f, path.string());
  const auto back = load_modes(path.string());
  std::filesystem::remove(path);
  CHECK(back.config_digest == "d1");
  REQUIRE(back.sets.size() == 1);
  REQUIRE(back.sets[0].modes.size() == f.sets[0].modes.size());
  for (std::size_t m = 0; m < back.sets[0].modes.size(); ++m) {
    CHECK(back.sets[0].modes[m].probability == f.sets[0].modes[m].probability);
    CHECK(back.sets[0].modes[m].waypoints[1][2].y == f.sets[0].modes[m].waypoints[1][2].y);
  }
}
