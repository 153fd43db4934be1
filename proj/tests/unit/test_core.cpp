#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "motionlm/core/frames.hpp"
#include "motionlm/core/random.hpp"
#include "motionlm/core/scenario_io.hpp"

using namespace motionlm;

TEST_CASE("to_agent_frame") {
  const AgentFrame identity{{0, 0}, 0.0};
  const Waypoint p = to_agent_frame({2.5, -1.0}, identity);
  CHECK(p.x == 2.5);
  CHECK(p.y == -1.0);
  const Waypoint t = to_agent_frame({1, 0}, AgentFrame{{1, 0}, 0.0});
  CHECK(t.x == 0.0);
  CHECK(t.y == 0.0);
  const Waypoint r = to_agent_frame({0, 1}, AgentFrame{{0, 0}, std::numbers::pi / 2});
  CHECK(r.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.y) < 1e-12);
}

TEST_CASE("from_agent_frame") {
  const AgentFrame f{{1, 1}, 0.3};
  const Waypoint back = from_agent_frame(to_agent_frame({3.2, -1.7}, f), f);
  CHECK(std::abs(back.x - 3.2) < 1e-9);
  CHECK(std::abs(back.y + 1.7) < 1e-9);
  const Waypoint w = from_agent_frame({1, 0}, AgentFrame{{0, 0}, std::numbers::pi / 2});
  CHECK(std::abs(w.x) < 1e-12);
  CHECK(w.y == doctest::Approx(1.0).epsilon(1e-12));
  const Waypoint id = from_agent_frame({-4, 7}, AgentFrame{});
  CHECK(id == Waypoint{-4, 7});
}

TEST_CASE("infer_headings") {
  const std::vector<Waypoint> straight{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  for (double h : infer_headings(straight, 0.0)) CHECK(h == 0.0);
  const std::vector<Waypoint> still(4, Waypoint{2, 2});
  for (double h : infer_headings(still, 1.0)) CHECK(h == 1.0);
  const std::vector<Waypoint> diag{{0, 0}, {1, 1}};
  CHECK(infer_headings(diag, 0.0)[1] == doctest::Approx(std::numbers::pi / 4));
}

TEST_CASE("wrap_angle stays in (-pi, pi]") {
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("scenario files round-trip") {
  ScenarioSet set;
  for (int i = 0; i < 3; ++i) set.push_back(fixtures::straight_scene("s" + std::to_string(i), 3.0 + i));
  set[1].history[0][0].valid = false;
  set[2].agent_types[1] = AgentType::cyclist;
  set[2].family = "lead_follow";
  set[2].latent_mode = "brake";
  std::stringstream buf;
  write_scenarios(set, buf);
  const ScenarioSet back = read_scenarios(buf);
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(back[i] == set[i]);

  const auto path = std::filesystem::temp_directory_path() / "motionlm_io_test.jsonl";
  save_scenarios(set, path);
  CHECK(load_scenarios(path) == set);
  std::filesystem::remove(path);
}

TEST_CASE("empty scenario stream gives an empty set") {
  std::stringstream empty;
  CHECK(read_scenarios(empty).empty());
}

TEST_CASE("future length must equal the horizon") {
  Scenario s = fixtures::straight_scene("bad-future");
  s.future[1].pop_back();
  std::stringstream buf;
  buf << scenario_to_json_line(s) << "\n";
  try {
    read_scenarios(buf);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("bad-future") != std::string::npos);
  }
}

TEST_CASE("malformed records report line and field") {
  std::stringstream buf;
  buf << scenario_to_json_line(fixtures::straight_scene("ok")) << "\n{\"schema_version\": 1}\n";
  try {
    read_scenarios(buf);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
    CHECK(!e.field().empty());
  }
}

TEST_CASE("missing scenario file") {
  CHECK_THROWS_AS(load_scenarios("/nonexistent/motionlm.jsonl"), MissingFileError);
}

TEST_CASE("Rng is deterministic and derive_seed separates streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  Rng u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK((x >= 0.0 && x < 1.0));
  }
}
