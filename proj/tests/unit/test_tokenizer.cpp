#include <cmath>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "motionlm/core/random.hpp"
#include "motionlm/tokenizer/tokenizer.hpp"
#include "motionlm/tokenizer/vocabulary.hpp"

using namespace motionlm;

namespace {

// Squared one-step error of every token, computed from bin centers directly.
std::vector<double> step_errors(const MotionVocabulary& v, RawIndexPair prev, Waypoint pos,
                                Waypoint target) {
  std::vector<double> err;
  const int h = v.half_window();
  for (int ox = -h; ox <= h; ++ox)
    for (int oy = -h; oy <= h; ++oy) {
      const int ix = std::clamp(prev.ix + ox, 0, v.raw_bins - 1);
      const int iy = std::clamp(prev.iy + oy, 0, v.raw_bins - 1);
      const double cx = v.delta_min + (ix + 0.5) * v.bin_width();
      const double cy = v.delta_min + (iy + 0.5) * v.bin_width();
      const double dx = pos.x + cx - target.x, dy = pos.y + cy - target.y;
      err.push_back(dx * dx + dy * dy);
    }
  return err;
}

}  // namespace

TEST_CASE("vocabulary defaults") {
  const MotionVocabulary v;
  CHECK(v.vocab_size() == 169);
  CHECK(v.bin_width() == 0.28125);
  CHECK(v.zero_token() == 84);
}

TEST_CASE("bin_center") {
  const MotionVocabulary v;
  CHECK(bin_center(v, 0) == -17.859375);
  CHECK(bin_center(v, 64) == 0.140625);
  CHECK(bin_center(v, 127) == 17.859375);
}

TEST_CASE("quantize_delta") {
  const MotionVocabulary v;
  CHECK(quantize_delta(v, 0.0) == 64);
  CHECK(quantize_delta(v, -25.0) == 0);
  CHECK(quantize_delta(v, 25.0) == 127);
  for (int i = 0; i < v.raw_bins; ++i) CHECK(quantize_delta(v, bin_center(v, i)) == i);
}

TEST_CASE("verlet_encode") {
  const MotionVocabulary v;
  CHECK(verlet_encode(v, {64, 64}, {64, 64}) == 84);
  CHECK(verlet_encode(v, {64, 64}, {67, 62}) == 121);
  CHECK_FALSE(verlet_encode(v, {0, 0}, {10, 0}).has_value());
}

TEST_CASE("verlet_decode") {
  const MotionVocabulary v;
  CHECK(verlet_decode(v, {64, 64}, 84) == RawIndexPair{64, 64});
  CHECK(verlet_decode(v, {64, 64}, 121) == RawIndexPair{67, 62});
  CHECK(verlet_decode(v, {0, 64}, token_from_offset(v, {-6, 0})) == RawIndexPair{0, 64});
}

TEST_CASE("stationary trajectory picks an error-minimizing token at every step") {
  const MotionVocabulary v;
  const std::vector<Waypoint> traj(17, Waypoint{0, 0});
  const auto tok = tokenize_trajectory(v, traj, {64, 64});
  RawIndexPair prev{64, 64};
  Waypoint pos{0, 0};
  for (std::size_t t = 0; t < tok.tokens.size(); ++t) {
    const auto err = step_errors(v, prev, pos, traj[t + 1]);
    const double best = *std::min_element(err.begin(), err.end());
    CHECK(err[tok.tokens[t]] == best);
    const bool allowed = tok.raw[t] == RawIndexPair{63, 63} || tok.raw[t] == RawIndexPair{64, 64};
    CHECK(allowed);
    prev = tok.raw[t];
    pos = tok.reconstruction[t];
  }
  // Equal-error candidates resolve to the lowest token id: (63, 63) first.
  CHECK(tok.raw[0] == RawIndexPair{63, 63});
}

TEST_CASE("constant velocity at a bin center is the zero action") {
  const MotionVocabulary v;
  const double d = bin_center(v, 70);
  std::vector<Waypoint> traj;
  for (int t = 0; t <= 16; ++t) traj.push_back({d * t, 0.140625 * t});
  const auto tok = tokenize_trajectory(v, traj, {70, 64});
  for (std::size_t t = 0; t < tok.tokens.size(); ++t) {
    CHECK(tok.tokens[t] == 84);
    CHECK(tok.reconstruction[t] == traj[t + 1]);
  }
}

TEST_CASE("smooth random trajectories reconstruct within half a bin") {
  const MotionVocabulary v;
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Waypoint> traj{{0, 0}};
    double dx = rng.uniform(-5, 5), dy = rng.uniform(-5, 5);
    const RawIndexPair seed{quantize_delta(v, dx), quantize_delta(v, dy)};
    for (int t = 0; t < 16; ++t) {
      dx += rng.uniform(-1.0, 1.0);
      dy += rng.uniform(-1.0, 1.0);
      traj.push_back({traj.back().x + dx, traj.back().y + dy});
    }
    const auto tok = tokenize_trajectory(v, traj, seed);
    for (std::size_t t = 0; t < tok.tokens.size(); ++t) {
      CHECK(std::abs(tok.reconstruction[t].x - traj[t + 1].x) <= v.bin_width() / 2);
      CHECK(std::abs(tok.reconstruction[t].y - traj[t + 1].y) <= v.bin_width() / 2);
    }
  }
}

TEST_CASE("detokenize") {
  const MotionVocabulary v;
  const std::vector<int> zeros(5, 84);
  const auto w = detokenize(v, zeros, {0, 0}, {64, 64});
  for (std::size_t t = 0; t < w.size(); ++t) {
    CHECK(w[t].x == doctest::Approx(0.140625 * (t + 1)).epsilon(1e-15));
    CHECK(w[t].y == doctest::Approx(0.140625 * (t + 1)).epsilon(1e-15));
  }
  const std::vector<int> one{121};
  const auto s = detokenize(v, one, {0, 0}, {64, 64});
  CHECK(s[0].x == 0.984375);
  CHECK(s[0].y == -0.421875);

  Rng rng(9);
  std::vector<Waypoint> traj{{0, 0}};
  for (int t = 0; t < 16; ++t) traj.push_back({traj.back().x + rng.uniform(1, 2), traj.back().y});
  const auto tok = tokenize_trajectory(v, traj, {64, 64});
  CHECK(detokenize(v, tok.tokens, {0, 0}, {64, 64}) == tok.reconstruction);
}

TEST_CASE("seed_from_history") {
  const MotionVocabulary v;
  std::vector<AgentState> still(4);
  CHECK(seed_from_history(v, still, 0.5) == RawIndexPair{64, 64});
  std::vector<AgentState> moving(4);
  for (int i = 0; i < 4; ++i) moving[i].position = {0.984375 * i, 0};
  CHECK(seed_from_history(v, moving, 0.5) == RawIndexPair{67, 64});
  std::vector<AgentState> single(4);
  for (int i = 0; i < 3; ++i) single[i].valid = false;
  single[3].position = {5, 5};
  CHECK(seed_from_history(v, single, 0.5) == RawIndexPair{64, 64});
}

TEST_CASE("flattened sequence is time-major") {
  TokenSequence seq;
  seq.tokens = {{1, 2, 3}, {4, 5, 6}};
  CHECK(seq.flattened() == std::vector<int>{1, 4, 2, 5, 3, 6});
  const Scenario s = fixtures::straight_scene();
  const auto tok = tokenize_scenario(MotionVocabulary{}, s);
  CHECK(tok.sequence.flattened().size() == 32);
}
