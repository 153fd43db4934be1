#include "motionlm/harness/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "motionlm/core/frames.hpp"
#include "motionlm/core/random.hpp"

namespace motionlm {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

constexpr ScenarioFamily kAllFamilies[] = {ScenarioFamily::lead_follow,
                                           ScenarioFamily::intersection_cross,
                                           ScenarioFamily::lane_change,
                                           ScenarioFamily::pedestrian_cross};

// Constant speed, then constant deceleration from `onset` down to `v_final`.
struct SpeedProfile {
  double v0 = 10.0;
  double onset = kInf;
  double decel = 3.0;
  double v_final = 0.0;

  double distance(double t) const {
    if (t <= onset) return v0 * t;
    const double tau = t - onset;
    const double t_end = (v0 - v_final) / decel;
    const double before = v0 * onset;
    if (tau < t_end) return before + v0 * tau - 0.5 * decel * tau * tau;
    return before + v0 * t_end - 0.5 * decel * t_end * t_end + v_final * (tau - t_end);
  }
  double speed(double t) const {
    if (t <= onset) return v0;
    return std::max(v_final, v0 - decel * (t - onset));
  }
};

// Slow sinusoidal sway orthogonal to the travel direction.
struct Sway {
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  double offset(double t) const { return amplitude * std::sin(omega * t + phase); }
  double rate(double t) const { return amplitude * omega * std::cos(omega * t + phase); }
};

struct AgentScript {
  Waypoint start;        // position at t = 0 before sway
  double direction = 0;  // travel direction
  SpeedProfile speed;
  Sway sway;
  // Extra lateral displacement (left of travel) as a function of time.
  std::function<double(double)> lateral = [](double) { return 0.0; };
  double length = 4.5;
  double width = 2.0;
  AgentType type = AgentType::vehicle;

  Waypoint position(double t) const {
    const double s = speed.distance(t);
    const double lat = sway.offset(t) + lateral(t);
    const double c = std::cos(direction), sn = std::sin(direction);
    return {start.x + s * c - lat * sn, start.y + s * sn + lat * c};
  }
  // Velocity by central difference of the closed-form position.
  Waypoint velocity(double t) const {
    const double h = 1e-3;
    const Waypoint a = position(t - h), b = position(t + h);
    return {(b.x - a.x) / (2 * h), (b.y - a.y) / (2 * h)};
  }
};

Sway make_sway(Rng& rng, double amplitude) {
  return {rng.uniform(0.0, amplitude), 2.0 * kPi * rng.uniform(0.05, 0.15),
          rng.uniform(-kPi, kPi)};
}

Polyline line(RoadType type, Waypoint from, Waypoint to, double spacing) {
  Polyline p;
  p.type = type;
  const double len = std::hypot(to.x - from.x, to.y - from.y);
  const int n = std::max(1, static_cast<int>(std::round(len / spacing)));
  for (int i = 0; i <= n; ++i) {
    const double f = static_cast<double>(i) / n;
    p.points.push_back({from.x + f * (to.x - from.x), from.y + f * (to.y - from.y)});
  }
  return p;
}

double smoothstep_merge(double t, double onset, double duration, double distance) {
  if (t <= onset) return 0.0;
  if (t >= onset + duration) return distance;
  return distance * 0.5 * (1.0 - std::cos(kPi * (t - onset) / duration));
}

struct Layout {
  std::vector<AgentScript> agents;
  std::vector<Polyline> roads;
  ScenarioScript script;
};

double initial_speed(Rng& rng, double mean, double noise, double lo, double hi) {
  return std::clamp(rng.normal(mean, noise), lo, hi);
}

double reaction_lag(const GeneratorConfig& cfg, Rng& rng) {
  return rng.uniform(cfg.reaction_lag, cfg.reaction_lag_max);
}

Layout lead_follow(const GeneratorConfig& cfg, Rng& rng, bool brake) {
  Layout L;
  const double v0 = initial_speed(rng, 10.0, cfg.speed_noise, 6.0, 14.0);
  AgentScript lead, follow;
  lead.start = {rng.uniform(15.0, 25.0), 0.0};
  follow.start = {0.0, 0.0};
  lead.speed.v0 = v0;
  follow.speed.v0 = v0;
  lead.sway = make_sway(rng, cfg.lateral_noise);
  follow.sway = make_sway(rng, cfg.lateral_noise);
  const double lead_onset = rng.uniform(0.0, 2.5);
  const double lead_decel = rng.uniform(2.5, 4.0);
  const bool own = rng.bernoulli(cfg.independent_stop_prob);
  const double own_onset = rng.uniform(0.0, 5.0);
  const double own_decel = rng.uniform(2.5, 4.0);
  const double lag = reaction_lag(cfg, rng);
  if (brake) {
    lead.speed.onset = lead_onset;
    lead.speed.decel = lead_decel;
  }
  double onset = kInf, decel = own_decel;
  if (brake) {
    onset = lead_onset + lag;
    decel = lead_decel + 0.5;
  }
  if (own && own_onset < onset) {
    onset = own_onset;
    decel = own_decel;
  }
  follow.speed.onset = onset;
  follow.speed.decel = decel;
  L.agents = {lead, follow};
  L.roads = {line(RoadType::lane, {-60, 0}, {160, 0}, 20.0),
             line(RoadType::edge, {-60, 1.75}, {160, 1.75}, 20.0),
             line(RoadType::edge, {-60, -1.75}, {160, -1.75}, 20.0)};
  L.script.onset = {lead.speed.onset, follow.speed.onset};
  return L;
}

Layout intersection_cross(const GeneratorConfig& cfg, Rng& rng, bool first_passes) {
  Layout L;
  AgentScript a, b;
  a.speed.v0 = initial_speed(rng, 10.0, cfg.speed_noise, 6.0, 14.0);
  b.speed.v0 = initial_speed(rng, 10.0, cfg.speed_noise, 6.0, 14.0);
  const double ta = rng.uniform(2.0, 3.0);
  const double lag = reaction_lag(cfg, rng);
  const double tb = ta + rng.uniform(0.3, 0.8) + lag;
  a.start = {-a.speed.v0 * ta, 0.0};
  a.direction = 0.0;
  b.start = {0.0, -b.speed.v0 * tb};
  b.direction = kPi / 2;
  a.sway = make_sway(rng, cfg.lateral_noise);
  b.sway = make_sway(rng, cfg.lateral_noise);
  constexpr double kStopLine = 6.0;
  auto stop_before = [&](AgentScript& s, double arrival, double onset) {
    const double d = s.speed.v0 * arrival - kStopLine - s.speed.v0 * onset;
    s.speed.onset = onset;
    s.speed.decel = s.speed.v0 * s.speed.v0 / (2.0 * d);
  };
  if (first_passes) {
    stop_before(b, tb, lag);
  } else {
    stop_before(a, ta, 0.0);
  }
  L.agents = {a, b};
  L.roads = {line(RoadType::lane, {-60, 0}, {60, 0}, 10.0),
             line(RoadType::lane, {0, -60}, {0, 60}, 10.0)};
  L.script.onset = {a.speed.onset, b.speed.onset};
  return L;
}

Layout lane_change(const GeneratorConfig& cfg, Rng& rng, bool change) {
  Layout L;
  AgentScript merger, other;
  constexpr double kLane = 3.5;
  merger.speed.v0 = initial_speed(rng, 10.0, cfg.speed_noise, 6.0, 14.0);
  other.speed.v0 = merger.speed.v0 + rng.uniform(1.5, 2.5);
  merger.start = {0.0, kLane};
  other.start = {-rng.uniform(8.0, 12.0), 0.0};
  merger.sway = make_sway(rng, cfg.lateral_noise);
  other.sway = make_sway(rng, cfg.lateral_noise);
  const double duration = rng.uniform(2.5, 3.5);
  if (change) {
    merger.lateral = [duration](double t) { return smoothstep_merge(t, 0.0, duration, -kLane); };
    other.speed.onset = reaction_lag(cfg, rng);
    other.speed.decel = rng.uniform(2.0, 3.0);
    other.speed.v_final = merger.speed.v0 - 1.0;
  }
  L.agents = {merger, other};
  L.roads = {line(RoadType::lane, {-60, 0}, {160, 0}, 20.0),
             line(RoadType::lane, {-60, kLane}, {160, kLane}, 20.0),
             line(RoadType::edge, {-60, -1.75}, {160, -1.75}, 20.0),
             line(RoadType::edge, {-60, kLane + 1.75}, {160, kLane + 1.75}, 20.0)};
  L.script.onset = {change ? 0.0 : kInf, other.speed.onset};
  return L;
}

Layout pedestrian_cross(const GeneratorConfig& cfg, Rng& rng, bool cross) {
  Layout L;
  AgentScript ped, car;
  ped.type = AgentType::pedestrian;
  ped.length = 0.8;
  ped.width = 0.8;
  ped.speed.v0 = initial_speed(rng, 1.4, 0.2 * cfg.speed_noise, 0.8, 2.0);
  ped.start = {rng.uniform(-1.0, 1.0), -rng.uniform(4.5, 5.5)};
  ped.direction = kPi / 2;
  ped.sway = make_sway(rng, 0.3 * cfg.lateral_noise);
  car.speed.v0 = initial_speed(rng, 10.0, cfg.speed_noise, 6.0, 14.0);
  const double arrival = rng.uniform(3.0, 5.0);
  car.start = {-car.speed.v0 * arrival, -1.75};
  car.sway = make_sway(rng, cfg.lateral_noise);
  if (cross) {
    const double lag = reaction_lag(cfg, rng);
    const double d = car.speed.v0 * arrival - 8.0 - car.speed.v0 * lag;
    car.speed.onset = lag;
    car.speed.decel = car.speed.v0 * car.speed.v0 / (2.0 * d);
  } else {
    ped.speed.onset = 0.0;
    ped.speed.decel = 2.0;
  }
  L.agents = {ped, car};
  L.roads = {line(RoadType::lane, {-80, -1.75}, {40, -1.75}, 10.0),
             line(RoadType::edge, {-80, -3.5}, {40, -3.5}, 10.0),
             line(RoadType::edge, {-80, 3.5}, {40, 3.5}, 10.0)};
  L.script.onset = {ped.speed.onset, car.speed.onset};
  return L;
}

Scenario realize(const GeneratorConfig& cfg, const Layout& L, Rng& rng) {
  double rot = 0.0;
  Waypoint shift{0.0, 0.0};
  if (cfg.random_transform) {
    rot = rng.uniform(-kPi, kPi);
    shift = {rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
  }
  const double c = std::cos(rot), s = std::sin(rot);
  auto place = [&](const Waypoint& p) {
    return Waypoint{c * p.x - s * p.y + shift.x, s * p.x + c * p.y + shift.y};
  };
  auto turn = [&](const Waypoint& v) { return Waypoint{c * v.x - s * v.y, s * v.x + c * v.y}; };

  Scenario sc;
  sc.history_dt = cfg.history_dt;
  sc.horizon = cfg.horizon;
  for (std::size_t a = 0; a < L.agents.size(); ++a) {
    const auto& ag = L.agents[a];
    sc.agent_types.push_back(ag.type);
    std::vector<AgentState> track;
    for (int h = -cfg.history_steps; h <= 0; ++h) {
      const double t = h * cfg.history_dt;
      AgentState st;
      st.position = place(ag.position(t));
      const Waypoint v = turn(ag.velocity(t));
      st.vx = v.x;
      st.vy = v.y;
      st.heading = std::hypot(v.x, v.y) > 0.1 ? std::atan2(v.y, v.x) : wrap_angle(ag.direction + rot);
      st.length = ag.length;
      st.width = ag.width;
      track.push_back(st);
    }
    sc.history.push_back(std::move(track));
    sc.modeled_agents.push_back(static_cast<int>(a));
    std::vector<Waypoint> fut;
    for (int k = 1; k <= cfg.horizon; ++k) fut.push_back(place(ag.position(k * cfg.step_dt)));
    sc.future.push_back(std::move(fut));
  }
  for (const auto& road : L.roads) {
    Polyline p;
    p.type = road.type;
    for (const auto& pt : road.points) p.points.push_back(place(pt));
    sc.roadgraph.push_back(std::move(p));
  }
  return sc;
}

}  // namespace

const char* to_string(ScenarioFamily family) {
  switch (family) {
    case ScenarioFamily::lead_follow: return "lead_follow";
    case ScenarioFamily::intersection_cross: return "intersection_cross";
    case ScenarioFamily::lane_change: return "lane_change";
    case ScenarioFamily::pedestrian_cross: return "pedestrian_cross";
  }
  return "lead_follow";
}

ScenarioFamily scenario_family_from_string(const std::string& name) {
  for (auto f : kAllFamilies)
    if (name == to_string(f)) return f;
  throw std::invalid_argument("unknown scenario family '" + name + "'");
}

std::pair<std::string, std::string> latent_labels(ScenarioFamily family) {
  switch (family) {
    case ScenarioFamily::lead_follow: return {"brake", "cruise"};
    case ScenarioFamily::intersection_cross: return {"pass", "yield"};
    case ScenarioFamily::lane_change: return {"change", "keep"};
    case ScenarioFamily::pedestrian_cross: return {"cross", "wait"};
  }
  return {"brake", "cruise"};
}

void GeneratorConfig::validate() const {
  if (families.empty()) throw std::invalid_argument("generator: families must not be empty");
  if (count < 1) throw std::invalid_argument("generator: count must be >= 1");
  if (mode_weights.size() != 2)
    throw std::invalid_argument("generator: mode_weights needs two entries");
  double total = 0.0;
  for (double w : mode_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("generator: negative mode weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("generator: mode_weights must sum to 1");
  if (history_steps < 0 || horizon < 1 || history_dt <= 0.0 || step_dt <= 0.0)
    throw std::invalid_argument("generator: invalid time grid");
  if (reaction_lag < 0.0 || reaction_lag_max < reaction_lag || independent_stop_prob < 0.0 ||
      independent_stop_prob > 1.0)
    throw std::invalid_argument("generator: invalid interaction parameters");
}

json to_json(const GeneratorConfig& c) {
  json fams = json::array();
  for (auto f : c.families) fams.push_back(to_string(f));
  return {{"families", fams},
          {"count", c.count},
          {"mode_weights", c.mode_weights},
          {"history_steps", c.history_steps},
          {"history_dt", c.history_dt},
          {"horizon", c.horizon},
          {"step_dt", c.step_dt},
          {"reaction_lag", c.reaction_lag},
          {"reaction_lag_max", c.reaction_lag_max},
          {"independent_stop_prob", c.independent_stop_prob},
          {"lateral_noise", c.lateral_noise},
          {"speed_noise", c.speed_noise},
          {"random_transform", c.random_transform},
          {"seed", c.seed}};
}

GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig c;
  if (j.contains("families")) {
    c.families.clear();
    for (const auto& f : j.at("families")) c.families.push_back(scenario_family_from_string(f));
  }
  c.count = j.value("count", c.count);
  c.mode_weights = j.value("mode_weights", c.mode_weights);
  c.history_steps = j.value("history_steps", c.history_steps);
  c.history_dt = j.value("history_dt", c.history_dt);
  c.horizon = j.value("horizon", c.horizon);
  c.step_dt = j.value("step_dt", c.step_dt);
  c.reaction_lag = j.value("reaction_lag", c.reaction_lag);
  c.reaction_lag_max = j.value("reaction_lag_max", c.reaction_lag_max);
  c.independent_stop_prob = j.value("independent_stop_prob", c.independent_stop_prob);
  c.lateral_noise = j.value("lateral_noise", c.lateral_noise);
  c.speed_noise = j.value("speed_noise", c.speed_noise);
  c.random_transform = j.value("random_transform", c.random_transform);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<GeneratedScenario> generate_detailed(const GeneratorConfig& cfg) {
  cfg.validate();
  std::vector<GeneratedScenario> out(cfg.count);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < cfg.count; ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    const ScenarioFamily family = cfg.families[i % cfg.families.size()];
    const bool first = rng.uniform() < cfg.mode_weights[0];
    Layout L;
    switch (family) {
      case ScenarioFamily::lead_follow: L = lead_follow(cfg, rng, first); break;
      case ScenarioFamily::intersection_cross: L = intersection_cross(cfg, rng, first); break;
      case ScenarioFamily::lane_change: L = lane_change(cfg, rng, first); break;
      case ScenarioFamily::pedestrian_cross: L = pedestrian_cross(cfg, rng, first); break;
    }
    L.script.family = family;
    L.script.first_mode = first;
    Scenario sc = realize(cfg, L, rng);
    char id[64];
    std::snprintf(id, sizeof id, "%s-%05zu", to_string(family), i);
    sc.id = id;
    sc.family = to_string(family);
    const auto labels = latent_labels(family);
    sc.latent_mode = first ? labels.first : labels.second;
    out[i] = {std::move(sc), L.script};
  }
  return out;
}

ScenarioSet generate(const GeneratorConfig& config) {
  ScenarioSet out;
  for (auto& g : generate_detailed(config)) out.push_back(std::move(g.scenario));
  return out;
}

}  // namespace motionlm
