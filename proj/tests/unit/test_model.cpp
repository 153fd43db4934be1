#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "motionlm/core/random.hpp"
#include "motionlm/model/checkpoint.hpp"
#include "motionlm/model/inference.hpp"
#include "motionlm/model/mask.hpp"
#include "motionlm/model/motion_lm.hpp"
#include "motionlm/model/trainer.hpp"

using namespace motionlm;

namespace {

TokenSequence random_tokens(const ModelConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  TokenSequence s;
  s.tokens.assign(c.num_agents, TokenRow(c.steps));
  for (auto& row : s.tokens)
    for (auto& t : row) t = static_cast<int>(rng.below(c.vocab.vocab_size()));
  return s;
}

std::vector<float> logits_of(const MotionLM& m, const Scenario& s, const TokenSequence& seq,
                             const DecoderMask& mask) {
  numeric::NoGradGuard guard;
  const auto scenes = m.encode_scenario(s);
  const auto ids = decoder_input_ids(seq, m.config().start_token());
  const auto l = m.teacher_forced_logits(scenes, ids, mask);
  return {l.data().begin(), l.data().end()};
}

ScenarioSet constant_velocity_set(std::size_t n) {
  ScenarioSet set;
  Rng rng(5);
  for (std::size_t i = 0; i < n; ++i)
    set.push_back(fixtures::straight_scene("cv" + std::to_string(i), rng.uniform(2.0, 8.0)));
  return set;
}

}  // namespace

TEST_CASE("staircase mask") {
  const auto m = build_decoder_mask(2, 2, 1);
  // order [a1@1, a2@1, a1@2, a2@2]
  CHECK(m.visible(0, 0));
  CHECK_FALSE(m.visible(0, 1));
  CHECK_FALSE(m.visible(1, 0));
  CHECK(m.visible(2, 0));
  CHECK(m.visible(2, 1));
  CHECK(m.visible(2, 2));
  CHECK_FALSE(m.visible(2, 3));
  CHECK_FALSE(m.visible(3, 2));

  const auto marginal = build_decoder_mask(2, 16, 16);
  for (std::size_t p = 0; p < marginal.size(); ++p)
    for (std::size_t q = 0; q < marginal.size(); ++q)
      if (marginal.agent_of(p) != marginal.agent_of(q)) CHECK_FALSE(marginal.visible(p, q));

  const auto single = build_decoder_mask(1, 5, 1);
  for (std::size_t p = 0; p < 5; ++p)
    for (std::size_t q = 0; q < 5; ++q) CHECK(single.visible(p, q) == (q <= p));

  const auto k4 = build_decoder_mask(2, 16, 4);
  CHECK_FALSE(k4.visible(k4.position(0, 4), k4.position(1, 1)));
  CHECK(k4.visible(k4.position(0, 5), k4.position(1, 4)));
  CHECK_FALSE(k4.visible(k4.position(0, 5), k4.position(1, 5)));
}

TEST_CASE("acausal mask") {
  const auto m = build_acausal_mask(2, 4, 1, 0);
  for (std::size_t t = 1; t <= 4; ++t)
    for (std::size_t u = 1; u <= 4; ++u) {
      CHECK(m.visible(m.position(1, t), m.position(0, u)));
      CHECK_FALSE(m.visible(m.position(0, t), m.position(1, u)));
    }
}

TEST_CASE("scene encoder contracts") {
  const ModelConfig c = fixtures::tiny_model();
  const MotionLM model(c);
  const Scenario s = fixtures::straight_scene();
  numeric::NoGradGuard guard;
  const auto scenes = model.encode_scenario(s);
  REQUIRE(scenes.size() == 2);
  CHECK(scenes[0].shape() == numeric::Shape{4, 16});

  Scenario permuted = s;
  std::swap(permuted.roadgraph[0], permuted.roadgraph[1]);
  const auto p = model.encode_scenario(permuted);

  Scenario moved = s;
  for (auto& track : moved.history)
    for (auto& st : track) st.position = {st.position.x + 123.0, st.position.y - 45.0};
  for (auto& line : moved.roadgraph)
    for (auto& pt : line.points) pt = {pt.x + 123.0, pt.y - 45.0};
  const auto m = model.encode_scenario(moved);
  for (std::size_t e = 0; e < 2; ++e)
    for (std::size_t i = 0; i < scenes[e].size(); ++i) {
      CHECK(std::abs(p[e].data()[i] - scenes[e].data()[i]) < 1e-5);
      CHECK(std::abs(m[e].data()[i] - scenes[e].data()[i]) < 1e-5);
    }
}

TEST_CASE("teacher-forced causality is exact") {
  const ModelConfig c = fixtures::tiny_model();
  const MotionLM model(c);
  const Scenario s = fixtures::straight_scene();
  const auto mask = build_decoder_mask(2, 16, 1);
  const auto base = random_tokens(c, 1);
  const auto ref = logits_of(model, s, base, mask);
  const std::size_t V = c.vocab.vocab_size();
  for (std::size_t agent = 0; agent < 2; ++agent)
    for (std::size_t t = 1; t <= 16; t += 5) {
      auto pert = base;
      pert.tokens[agent][t - 1] = (pert.tokens[agent][t - 1] + 17) % static_cast<int>(V);
      const auto out = logits_of(model, s, pert, mask);
      for (std::size_t p = 0; p < mask.size(); ++p) {
        if (mask.step_of(p) > t) continue;
        for (std::size_t v = 0; v < V; ++v) CHECK(out[p * V + v] == ref[p * V + v]);
      }
    }
}

TEST_CASE("marginal mask hides the other agent entirely") {
  const ModelConfig c = fixtures::tiny_model();
  const MotionLM model(c);
  const Scenario s = fixtures::straight_scene();
  const auto mask = build_decoder_mask(2, 16, 16);
  const auto base = random_tokens(c, 2);
  auto other = base;
  other.tokens[1] = random_tokens(c, 3).tokens[1];
  const auto a = logits_of(model, s, base, mask), b = logits_of(model, s, other, mask);
  const std::size_t V = c.vocab.vocab_size();
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (mask.agent_of(p) != 0) continue;
    for (std::size_t v = 0; v < V; ++v) CHECK(a[p * V + v] == b[p * V + v]);
  }
}

TEST_CASE("fresh model loss is near uniform and probabilities normalize") {
  const ModelConfig c = fixtures::tiny_model();
  const MotionLM model(c);
  const Scenario s = fixtures::straight_scene();
  const auto mask = build_decoder_mask(2, 16, 1);
  numeric::NoGradGuard guard;
  const auto scenes = model.encode_scenario(s);
  const auto seq = random_tokens(c, 4);
  const double loss = model.sequence_loss(scenes, seq, mask).item();
  CHECK(std::abs(loss - std::log(169.0)) < 0.5);
  const auto logits = logits_of(model, s, seq, mask);
  const std::size_t V = 169;
  for (std::size_t p = 0; p < 32; ++p) {
    const auto lp = log_softmax(std::span<const float>(logits.data() + p * V, V));
    double total = 0;
    for (double x : lp) total += std::exp(x);
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("incremental decoding matches teacher forcing") {
  const ModelConfig c = fixtures::tiny_model();
  const MotionLM model(c);
  const Scenario s = fixtures::straight_scene();
  for (std::size_t k : {1, 4, 16}) {
    const auto mask = build_decoder_mask(2, 16, k);
    const auto seq = random_tokens(c, 10 + k);
    const auto ref = logits_of(model, s, seq, mask);
    const auto ids = decoder_input_ids(seq, c.start_token());
    numeric::NoGradGuard guard;
    const auto scenes = model.encode_scenario(s);
    const std::size_t V = 169;
    for (std::size_t e = 0; e < 2; ++e) {
      DecoderSession session(model, scenes[e], e, mask, 1);
      for (std::size_t p = 0; p < mask.size(); ++p) {
        const std::size_t pos[1] = {p};
        const int id[1] = {ids[p]};
        const auto out = session.run(pos, id);
        if (mask.agent_of(p) != e) continue;
        for (std::size_t v = 0; v < V; ++v) CHECK(std::abs(out[v] - ref[p * V + v]) < 1e-5);
      }
    }
  }
}

TEST_CASE("decoder session rejects out-of-order positions") {
  const ModelConfig c = fixtures::tiny_model();
  const MotionLM model(c);
  const auto mask = build_decoder_mask(2, 16, 1);
  numeric::NoGradGuard guard;
  const auto scenes = model.encode_scenario(fixtures::straight_scene());
  DecoderSession session(model, scenes[0], 0, mask, 1);
  const std::size_t pos[1] = {2};
  const int id[1] = {84};
  CHECK_THROWS_AS(session.run(pos, id), std::logic_error);
}

TEST_CASE("model gradients match finite differences") {
  ModelConfig c = fixtures::tiny_model(16, 2);
  c.steps = 4;
  BasicMotionLM<double> model(c);
  Scenario s = fixtures::straight_scene("g", 5.0, 4);
  const auto mask = build_decoder_mask(2, 4, 1);
  const auto seq = random_tokens(c, 21);
  auto loss_of = [&] { return model.sequence_loss(model.encode_scenario(s), seq, mask); };
  auto loss = loss_of();
  numeric::backward(loss);
  Rng rng(2);
  double diff = 0.0, norm_a = 0.0, norm_fd = 0.0;
  for (auto& p : model.parameters()) {
    for (int trial = 0; trial < 3; ++trial) {
      const std::size_t i = rng.below(p.tensor.size());
      const double analytic = p.tensor.has_grad() ? p.tensor.grad()[i] : 0.0;
      auto data = p.tensor.mutable_data();
      const double x = data[i];
      numeric::NoGradGuard guard;
      data[i] = x + 1e-6;
      const double up = loss_of().item();
      data[i] = x - 1e-6;
      const double down = loss_of().item();
      data[i] = x;
      const double fd = (up - down) / 2e-6;
      diff += (fd - analytic) * (fd - analytic);
      norm_a += analytic * analytic;
      norm_fd += fd * fd;
    }
  }
  CHECK(std::sqrt(diff) / std::sqrt(std::max(norm_a, norm_fd)) < 1e-4);
}

TEST_CASE("training drives the constant-velocity loss below 1") {
  ModelConfig c = fixtures::tiny_model(32, 2);
  MotionLM model(c);
  TrainConfig t;
  t.steps = 200;
  t.batch_size = 8;
  t.learning_rate = 3e-3;
  t.weight_decay = 0.01;
  Trainer trainer(model, t, prepare_examples(c, constant_velocity_set(50)));
  const auto log = trainer.run_steps(200);
  CHECK(log.losses.front() > 4.0);
  double tail = 0.0;
  for (std::size_t i = log.losses.size() - 10; i < log.losses.size(); ++i) tail += log.losses[i];
  CHECK(tail / 10.0 < 1.0);
}

TEST_CASE("resume replays the uninterrupted loss curve") {
  ModelConfig c = fixtures::tiny_model(16, 1);
  const auto data = prepare_examples(c, constant_velocity_set(12));
  TrainConfig t;
  t.steps = 12;
  t.batch_size = 4;
  t.weight_decay = 0.01;
  MotionLM full_model(c);
  Trainer full(full_model, t, data);
  const auto all = full.run_steps(12);

  MotionLM first_model(c);
  Trainer first(first_model, t, data);
  first.run_steps(5);
  const auto path = (std::filesystem::temp_directory_path() / "motionlm_resume.json").string();
  save_checkpoint(first.checkpoint(), path);
  const Checkpoint ck = load_checkpoint(path);
  MotionLM resumed_model = restore_model(ck);
  Trainer resumed(resumed_model, t, data);
  resumed.resume(ck);
  CHECK(resumed.completed_steps() == 5);
  const auto rest = resumed.run_steps(7);
  REQUIRE(rest.losses.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(rest.losses[i] == all.losses[5 + i]);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoints detect tampering and missing files") {
  const ModelConfig c = fixtures::tiny_model(8, 1);
  const MotionLM model(c);
  auto doc = checkpoint_to_json(make_checkpoint(model));
  CHECK_NOTHROW(checkpoint_from_json(doc));
  doc["metadata"]["note"] = "edited";
  CHECK_THROWS_AS(checkpoint_from_json(doc), SchemaError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ck.json"), MissingFileError);
}

TEST_CASE("different init seeds give different parameters") {
  ModelConfig a = fixtures::tiny_model(8, 1), b = a;
  b.init_seed = 2;
  const MotionLM ma(a), mb(b);
  const auto& pa = ma.parameters()[0].tensor.data();
  const auto& pb = mb.parameters()[0].tensor.data();
  CHECK_FALSE(std::equal(pa.begin(), pa.end(), pb.begin()));
}
