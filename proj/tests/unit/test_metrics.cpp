#include <cmath>
#include <numbers>

#include "doctest.h"
#include "motionlm/core/frames.hpp"
#include "motionlm/core/random.hpp"
#include "motionlm/metrics/geometry.hpp"
#include "motionlm/metrics/metrics.hpp"

using namespace motionlm;

namespace {

constexpr std::size_t kSteps = 4;
const HorizonThreshold kThreshold{2.0, 3.0, 6.0};

GroundTruth fixture_truth(int scene) {
  GroundTruth gt;
  gt.scenario_id = "s" + std::to_string(scene);
  gt.types = {AgentType::vehicle, AgentType::vehicle};
  const Waypoint starts[2] = {{0, 0}, {0, 10}};
  for (int a = 0; a < 2; ++a) {
    AgentState st;
    st.position = starts[a];
    gt.current.push_back(st);
    std::vector<Waypoint> path;
    for (std::size_t t = 1; t <= kSteps; ++t)
      path.push_back(scene == 2 && a == 0 ? starts[a]
                                          : Waypoint{starts[a].x + double(t), starts[a].y});
    gt.future.push_back(path);
  }
  return gt;
}

JointMode offset_mode(const GroundTruth& gt, double p, std::vector<Waypoint> offsets) {
  JointMode m;
  m.probability = p;
  for (std::size_t a = 0; a < 2; ++a) {
    std::vector<Waypoint> path;
    for (const auto& w : gt.future[a]) path.push_back({w.x + offsets[a].x, w.y + offsets[a].y});
    m.waypoints.push_back(path);
  }
  return m;
}

struct Fixture {
  std::vector<GroundTruth> truths;
  std::vector<JointModeSet> modes;
};

Fixture fixture() {
  Fixture f;
  const std::vector<std::vector<std::pair<double, std::vector<Waypoint>>>> spec = {
      {{0.5, {{0, 0}, {0, 0}}}, {0.3, {{0, 4}, {0, 0}}}, {0.2, {{1, 0}, {1, 0}}}},
      {{0.85, {{0, 0}, {0, 3.5}}}, {0.15, {{1, 1}, {1, 1}}}},
      {{0.7, {{7, 0}, {0, 0}}}, {0.3, {{2, 0}, {0, 5}}}},
  };
  for (int s = 0; s < 3; ++s) {
    f.truths.push_back(fixture_truth(s));
    JointModeSet set;
    set.scenario_id = f.truths.back().scenario_id;
    for (const auto& [p, off] : spec[s]) set.modes.push_back(offset_mode(f.truths.back(), p, off));
    f.modes.push_back(set);
  }
  return f;
}

Waypoint rigid(const Waypoint& w, double angle, double tx, double ty) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * w.x - s * w.y + tx, s * w.x + c * w.y + ty};
}

}  // namespace

TEST_CASE("fixture metrics match the brute-force oracle") {
  const auto f = fixture();
  const double ade[3] = {0.0, 1.4142135623730951, 3.5};
  const bool miss[3] = {false, false, true};
  for (int s = 0; s < 3; ++s) {
    CHECK(min_ade(f.modes[s], f.truths[s], kSteps) == doctest::Approx(ade[s]).epsilon(1e-12));
    CHECK(min_fde(f.modes[s], f.truths[s], kSteps) == doctest::Approx(ade[s]).epsilon(1e-12));
    CHECK(is_miss(f.modes[s], f.truths[s], kSteps, kThreshold) == miss[s]);
  }
  CHECK(intent_bucket(f.truths[0], 0) == IntentBucket::straight);
  CHECK(intent_bucket(f.truths[2], 0) == IntentBucket::stationary);
  CHECK(map_score(f.modes, f.truths, kSteps, kThreshold, false) ==
        doctest::Approx(0.22727272727272732).epsilon(1e-12));
  CHECK(map_score(f.modes, f.truths, kSteps, kThreshold, true) ==
        doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("displacements") {
  const auto gt = fixture_truth(0);
  JointModeSet one{"s0", {offset_mode(gt, 1.0, {{3, 4}, {0, 0}})}};
  CHECK(min_ade(one, gt, kSteps, 0) == doctest::Approx(5.0));
  CHECK(min_fde(one, gt, kSteps, 0) == doctest::Approx(5.0));
  CHECK(min_ade(one, gt, kSteps, 1) == 0.0);
  JointModeSet two{"s0", {offset_mode(gt, 1.0, {{2, 0}, {0, 4}})}};
  CHECK(min_ade(two, gt, kSteps) == doctest::Approx(3.0));
  const auto [lon, lat] = displacement_components(gt, 0, {gt.future[0][3].x + 1, 2}, kSteps);
  CHECK(lon == doctest::Approx(1.0));
  CHECK(lat == doctest::Approx(2.0));
}

TEST_CASE("miss requires both components within thresholds") {
  const auto gt = fixture_truth(0);
  CHECK(is_miss({"s0", {offset_mode(gt, 1.0, {{0, 3.5}, {0, 0}})}}, gt, kSteps, kThreshold));
  CHECK(is_miss({"s0", {offset_mode(gt, 1.0, {{6.5, 0}, {0, 0}})}}, gt, kSteps, kThreshold));
  CHECK_FALSE(is_miss({"s0", {offset_mode(gt, 1.0, {{5.9, 2.9}, {0, 0}})}}, gt, kSteps, kThreshold));
  // a joint mode misses if any agent misses
  const JointModeSet split{"s0", {offset_mode(gt, 0.5, {{0, 4}, {0, 0}}),
                                  offset_mode(gt, 0.5, {{0, 0}, {0, 4}})}};
  CHECK(is_miss(split, gt, kSteps, kThreshold));
  CHECK_FALSE(is_miss(split, gt, kSteps, kThreshold, false, 0));
  CHECK_FALSE(is_miss(split, gt, kSteps, kThreshold, false, 1));
}

TEST_CASE("miss is monotone in the thresholds") {
  Rng rng(2);
  const auto gt = fixture_truth(1);
  for (int trial = 0; trial < 100; ++trial) {
    const JointModeSet set{"s1", {offset_mode(gt, 1.0, {{rng.uniform(-8, 8), rng.uniform(-5, 5)},
                                                        {rng.uniform(-8, 8), rng.uniform(-5, 5)}})}};
    const HorizonThreshold wide{2.0, 4.0, 8.0};
    if (!is_miss(set, gt, kSteps, kThreshold)) CHECK_FALSE(is_miss(set, gt, kSteps, wide));
  }
}

TEST_CASE("intent buckets") {
  std::vector<Waypoint> left = {{0, 0}};
  for (int i = 1; i <= 10; ++i) {
    const double a = i * std::numbers::pi / 20;
    left.push_back({10 * std::sin(a), 10 - 10 * std::cos(a)});
  }
  CHECK(intent_bucket(left, 0.0) == IntentBucket::left);
  std::vector<Waypoint> right = left;
  for (auto& w : right) w.y = -w.y;
  CHECK(intent_bucket(right, 0.0) == IntentBucket::right);
  std::vector<Waypoint> drift;
  for (int i = 0; i <= 10; ++i) drift.push_back({2.0 * i, 0.2 * i});
  CHECK(intent_bucket(drift, 0.0) == IntentBucket::straight_left);
  std::vector<Waypoint> still(5, Waypoint{1, 1});
  CHECK(intent_bucket(still, 0.3) == IntentBucket::stationary);
}

TEST_CASE("soft mAP is never below mAP") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<GroundTruth> truths;
    std::vector<JointModeSet> modes;
    for (int s = 0; s < 6; ++s) {
      truths.push_back(fixture_truth(s % 3));
      truths.back().scenario_id = "r" + std::to_string(s);
      JointModeSet set{truths.back().scenario_id, {}};
      for (int m = 0; m < 4; ++m)
        set.modes.push_back(offset_mode(truths.back(), rng.uniform(0.01, 1.0),
                                        {{rng.uniform(-8, 8), rng.uniform(-4, 4)},
                                         {rng.uniform(-8, 8), rng.uniform(-4, 4)}}));
      modes.push_back(set);
    }
    const double hard = map_score(modes, truths, kSteps, kThreshold, false);
    const double soft = map_score(modes, truths, kSteps, kThreshold, true);
    CHECK(soft >= hard - 1e-12);
  }
}

TEST_CASE("average precision") {
  CHECK(average_precision({{0.9, 1}, {0.5, 0}}, 1) == doctest::Approx(1.0));
  CHECK(average_precision({{0.9, 0}, {0.5, 1}}, 1) == doctest::Approx(0.5));
  CHECK(average_precision({}, 0) == 0.0);
}

TEST_CASE("metrics are invariant to rigid transforms") {
  const auto f = fixture();
  auto truths = f.truths;
  auto modes = f.modes;
  const double angle = 0.7, tx = 31, ty = -12;
  for (auto& gt : truths) {
    for (auto& st : gt.current) {
      st.position = rigid(st.position, angle, tx, ty);
      st.heading = wrap_angle(st.heading + angle);
    }
    for (auto& path : gt.future)
      for (auto& w : path) w = rigid(w, angle, tx, ty);
  }
  for (auto& set : modes)
    for (auto& m : set.modes)
      for (auto& path : m.waypoints)
        for (auto& w : path) w = rigid(w, angle, tx, ty);
  for (int s = 0; s < 3; ++s) {
    CHECK(min_ade(modes[s], truths[s], kSteps) ==
          doctest::Approx(min_ade(f.modes[s], f.truths[s], kSteps)).epsilon(1e-9));
    CHECK(is_miss(modes[s], truths[s], kSteps, kThreshold) ==
          is_miss(f.modes[s], f.truths[s], kSteps, kThreshold));
  }
  CHECK(map_score(modes, truths, kSteps, kThreshold, false) ==
        doctest::Approx(map_score(f.modes, f.truths, kSteps, kThreshold, false)).epsilon(1e-12));
}

TEST_CASE("oriented box overlap") {
  const OrientedBox a{{0, 0}, 0.0, 4.0, 2.0};
  CHECK(boxes_overlap(a, {{3, 0}, 0.0, 4.0, 2.0}));
  CHECK_FALSE(boxes_overlap(a, {{100, 0}, 0.0, 4.0, 2.0}));
  CHECK(boxes_overlap(a, {{4, 0}, 0.0, 4.0, 2.0}));
  CHECK_FALSE(boxes_overlap(a, {{0, 2.5}, 0.0, 4.0, 2.0}));
  CHECK(boxes_overlap(a, {{0, 2.5}, std::numbers::pi / 2, 4.0, 2.0}));
  CHECK_FALSE(boxes_overlap(a, {{4, 4}, std::numbers::pi / 4, 4.0, 2.0}));
}

TEST_CASE("prediction overlap uses the top mode") {
  auto gt = fixture_truth(0);
  const JointModeSet apart{"s0", {offset_mode(gt, 1.0, {{0, 0}, {0, 0}})}};
  const JointModeSet crash{"s0", {offset_mode(gt, 0.6, {{0, 0}, {0, -10}}),
                                  offset_mode(gt, 0.4, {{0, 0}, {0, 0}})}};
  const std::vector<GroundTruth> truths = {gt};
  CHECK(prediction_overlap(std::vector<JointModeSet>{apart}, truths) == 0.0);
  CHECK(prediction_overlap(std::vector<JointModeSet>{crash}, truths) == 1.0);
}

TEST_CASE("scene type is the least common type") {
  auto gt = fixture_truth(0);
  CHECK(scene_type(gt) == AgentType::vehicle);
  gt.types[1] = AgentType::pedestrian;
  CHECK(scene_type(gt) == AgentType::pedestrian);
  gt.types[0] = AgentType::cyclist;
  CHECK(scene_type(gt) == AgentType::cyclist);
}

TEST_CASE("evaluate reports every horizon") {
  const auto f = fixture();
  EvalConfig cfg;
  cfg.thresholds.horizons = {{1.0, 1.0, 2.0}, {2.0, 3.0, 6.0}};
  const auto r = evaluate(f.modes, f.truths, cfg);
  CHECK(r.num_scenes == 3);
  REQUIRE(r.horizons.size() == 2);
  CHECK(r.horizons[1].step == 4);
  CHECK(r.horizons[1].joint.min_ade == doctest::Approx((0 + 1.4142135623730951 + 3.5) / 3));
  CHECK(r.horizons[1].joint.miss_rate == doctest::Approx(1.0 / 3));
  CHECK(r.horizons[1].joint.map == doctest::Approx(0.22727272727272732));
  CHECK(horizon_step(8.0, 2.0) == 16);
}
