#include "motionlm/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "motionlm/core/frames.hpp"
#include "motionlm/metrics/geometry.hpp"

namespace motionlm {

using nlohmann::json;

void MissThresholds::validate() const {
  if (horizons.empty()) throw std::invalid_argument("miss thresholds: no horizons");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const auto& h = horizons[i];
    if (!(h.seconds > 0.0 && h.lateral > 0.0 && h.longitudinal > 0.0))
      throw std::invalid_argument("miss thresholds must be positive");
    if (i > 0 && (h.seconds < horizons[i - 1].seconds || h.lateral < horizons[i - 1].lateral ||
                  h.longitudinal < horizons[i - 1].longitudinal))
      throw std::invalid_argument("miss thresholds must be non-decreasing with horizon");
  }
}

const char* to_string(IntentBucket bucket) {
  switch (bucket) {
    case IntentBucket::straight: return "straight";
    case IntentBucket::straight_left: return "straight-left";
    case IntentBucket::straight_right: return "straight-right";
    case IntentBucket::left: return "left";
    case IntentBucket::right: return "right";
    case IntentBucket::left_u_turn: return "left-u-turn";
    case IntentBucket::right_u_turn: return "right-u-turn";
    case IntentBucket::stationary: return "stationary";
  }
  return "straight";
}

GroundTruth ground_truth(const Scenario& scenario) {
  if (!scenario.has_future())
    throw std::invalid_argument("scenario '" + scenario.id + "' has no ground-truth future");
  GroundTruth gt;
  gt.scenario_id = scenario.id;
  gt.future = scenario.future;
  for (std::size_t a = 0; a < scenario.num_modeled(); ++a) {
    gt.current.push_back(scenario.current_state(a));
    gt.types.push_back(scenario.modeled_type(a));
  }
  return gt;
}

std::size_t horizon_step(double seconds, double step_hz) {
  const long step = std::lround(seconds * step_hz);
  if (step < 1) throw std::invalid_argument("horizon shorter than one step");
  return static_cast<std::size_t>(step);
}

namespace {

double dist(const Waypoint& a, const Waypoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void check_horizon(const GroundTruth& gt, std::size_t horizon) {
  const std::size_t t = gt.future.empty() ? 0 : gt.future[0].size();
  if (horizon < 1 || horizon > t)
    throw std::out_of_range("horizon step " + std::to_string(horizon) + " outside [1, " +
                            std::to_string(t) + "]");
}

void check_modes(const JointModeSet& modes, const GroundTruth& gt) {
  if (modes.modes.empty())
    throw std::invalid_argument("scenario '" + gt.scenario_id + "' has no predicted modes");
  for (const auto& m : modes.modes)
    if (m.waypoints.size() != gt.future.size())
      throw std::invalid_argument("scenario '" + gt.scenario_id + "': mode agent count mismatch");
}

std::vector<std::size_t> agents_of(const GroundTruth& gt, std::optional<std::size_t> agent) {
  if (agent) {
    if (*agent >= gt.future.size()) throw std::out_of_range("agent index out of range");
    return {*agent};
  }
  std::vector<std::size_t> out(gt.future.size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = a;
  return out;
}

template <typename PerAgent>
double min_over_modes(const JointModeSet& modes, const GroundTruth& gt, std::size_t horizon,
                      std::optional<std::size_t> agent, PerAgent per_agent) {
  check_horizon(gt, horizon);
  check_modes(modes, gt);
  const auto agents = agents_of(gt, agent);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : modes.modes) {
    double v = 0.0;
    for (std::size_t a : agents) v += per_agent(m.waypoints[a], gt.future[a]);
    best = std::min(best, v / static_cast<double>(agents.size()));
  }
  return best;
}

double speed_factor(const AgentState& s) {
  const double v = std::hypot(s.vx, s.vy);
  if (v < 1.4) return 0.5;
  if (v > 11.0) return 1.0;
  return 0.5 + 0.5 * (v - 1.4) / (11.0 - 1.4);
}

std::size_t top_mode(const JointModeSet& modes) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < modes.modes.size(); ++i)
    if (modes.modes[i].probability > modes.modes[best].probability) best = i;
  return best;
}

struct Unit {
  std::size_t scene;
  std::optional<std::size_t> agent;
};

double map_units(std::span<const JointModeSet> modes, std::span<const GroundTruth> truths,
                 const std::vector<Unit>& units, std::size_t horizon,
                 const HorizonThreshold& threshold, bool soft, bool speed_scaling,
                 const IntentThresholds& intent) {
  if (units.empty()) throw std::invalid_argument("map_score: empty dataset");
  std::map<IntentBucket, std::vector<std::pair<double, int>>> entries;
  std::map<IntentBucket, std::size_t> positives;
  for (const auto& u : units) {
    const auto& ms = modes[u.scene];
    const auto& gt = truths[u.scene];
    check_modes(ms, gt);
    const IntentBucket bucket = intent_bucket(gt, u.agent.value_or(0), intent);
    ++positives[bucket];
    std::vector<bool> hit(ms.modes.size());
    std::optional<std::size_t> tp;
    for (std::size_t i = 0; i < ms.modes.size(); ++i) {
      hit[i] = mode_hits(ms.modes[i], gt, horizon, threshold, speed_scaling, u.agent);
      if (hit[i] && (!tp || ms.modes[i].probability > ms.modes[*tp].probability)) tp = i;
    }
    auto& list = entries[bucket];
    for (std::size_t i = 0; i < ms.modes.size(); ++i) {
      int outcome = 0;
      if (tp && i == *tp) outcome = 1;
      else if (hit[i] && soft) outcome = -1;
      list.push_back({ms.modes[i].probability, outcome});
    }
  }
  double total = 0.0;
  for (auto& [bucket, list] : entries) total += average_precision(std::move(list), positives[bucket]);
  return total / static_cast<double>(entries.size());
}

}  // namespace

double min_ade(const JointModeSet& modes, const GroundTruth& gt, std::size_t horizon,
               std::optional<std::size_t> agent) {
  return min_over_modes(modes, gt, horizon, agent,
                        [horizon](const std::vector<Waypoint>& p, const std::vector<Waypoint>& g) {
                          double s = 0.0;
                          for (std::size_t t = 0; t < horizon; ++t) s += dist(p[t], g[t]);
                          return s / static_cast<double>(horizon);
                        });
}

double min_fde(const JointModeSet& modes, const GroundTruth& gt, std::size_t horizon,
               std::optional<std::size_t> agent) {
  return min_over_modes(modes, gt, horizon, agent,
                        [horizon](const std::vector<Waypoint>& p, const std::vector<Waypoint>& g) {
                          return dist(p[horizon - 1], g[horizon - 1]);
                        });
}

std::pair<double, double> displacement_components(const GroundTruth& gt, std::size_t agent,
                                                  const Waypoint& predicted, std::size_t horizon) {
  check_horizon(gt, horizon);
  std::vector<Waypoint> path{gt.current.at(agent).position};
  path.insert(path.end(), gt.future[agent].begin(), gt.future[agent].end());
  const double h = infer_headings(path, gt.current[agent].heading)[horizon];
  const Waypoint& g = gt.future[agent][horizon - 1];
  const double dx = predicted.x - g.x, dy = predicted.y - g.y;
  return {dx * std::cos(h) + dy * std::sin(h), -dx * std::sin(h) + dy * std::cos(h)};
}

bool mode_hits(const JointMode& mode, const GroundTruth& gt, std::size_t horizon,
               const HorizonThreshold& threshold, bool speed_scaling,
               std::optional<std::size_t> agent) {
  for (std::size_t a : agents_of(gt, agent)) {
    const double f = speed_scaling ? speed_factor(gt.current[a]) : 1.0;
    const auto [lon, lat] = displacement_components(gt, a, mode.waypoints[a][horizon - 1], horizon);
    if (std::abs(lon) > f * threshold.longitudinal || std::abs(lat) > f * threshold.lateral)
      return false;
  }
  return true;
}

bool is_miss(const JointModeSet& modes, const GroundTruth& gt, std::size_t horizon,
             const HorizonThreshold& threshold, bool speed_scaling,
             std::optional<std::size_t> agent) {
  check_horizon(gt, horizon);
  check_modes(modes, gt);
  for (const auto& m : modes.modes)
    if (mode_hits(m, gt, horizon, threshold, speed_scaling, agent)) return false;
  return true;
}

IntentBucket intent_bucket(std::span<const Waypoint> traj, double initial_heading,
                           const IntentThresholds& th) {
  if (traj.empty()) throw std::invalid_argument("intent_bucket: empty trajectory");
  const double dx = traj.back().x - traj.front().x, dy = traj.back().y - traj.front().y;
  if (std::hypot(dx, dy) < th.stationary_distance) return IntentBucket::stationary;
  const auto headings = infer_headings(traj, initial_heading);
  const double dpsi = wrap_angle(headings.back() - initial_heading) * 180.0 / std::numbers::pi;
  const double lateral = -dx * std::sin(initial_heading) + dy * std::cos(initial_heading);
  if (std::abs(dpsi) < th.straight_angle_deg) {
    if (lateral > th.straight_lateral) return IntentBucket::straight_left;
    if (lateral < -th.straight_lateral) return IntentBucket::straight_right;
    return IntentBucket::straight;
  }
  if (std::abs(dpsi) <= th.u_turn_angle_deg)
    return dpsi > 0 ? IntentBucket::left : IntentBucket::right;
  return dpsi > 0 ? IntentBucket::left_u_turn : IntentBucket::right_u_turn;
}

IntentBucket intent_bucket(const GroundTruth& gt, std::size_t agent, const IntentThresholds& th) {
  std::vector<Waypoint> path{gt.current.at(agent).position};
  path.insert(path.end(), gt.future.at(agent).begin(), gt.future.at(agent).end());
  return intent_bucket(path, gt.current[agent].heading, th);
}

double average_precision(std::vector<std::pair<double, int>> entries, std::size_t positives) {
  if (positives == 0) return 0.0;
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::pair<double, double>> curve;  // (recall, precision)
  std::size_t tp = 0, fp = 0;
  for (const auto& [conf, outcome] : entries) {
    if (outcome < 0) continue;
    (outcome > 0 ? tp : fp) += 1;
    curve.push_back({static_cast<double>(tp) / static_cast<double>(positives),
                     static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  double total = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double r = i / 10.0;
    double best = 0.0;
    for (const auto& [rec, prec] : curve)
      if (rec >= r - 1e-12) best = std::max(best, prec);
    total += best;
  }
  return total / 11.0;
}

double map_score(std::span<const JointModeSet> modes, std::span<const GroundTruth> truths,
                 std::size_t horizon, const HorizonThreshold& threshold, bool soft,
                 bool speed_scaling, std::optional<std::size_t> agent,
                 const IntentThresholds& intent) {
  if (modes.size() != truths.size())
    throw std::invalid_argument("map_score: one mode set per ground truth required");
  std::vector<Unit> units;
  for (std::size_t s = 0; s < truths.size(); ++s) units.push_back({s, agent});
  return map_units(modes, truths, units, horizon, threshold, soft, speed_scaling, intent);
}

bool trajectory_overlaps(const JointTrajectory& trajectory, const GroundTruth& gt) {
  const std::size_t n = trajectory.size();
  std::vector<std::vector<double>> headings;
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<Waypoint> path{gt.current.at(a).position};
    path.insert(path.end(), trajectory[a].begin(), trajectory[a].end());
    headings.push_back(infer_headings(path, gt.current[a].heading));
  }
  const std::size_t steps = n ? trajectory[0].size() : 0;
  for (std::size_t t = 1; t <= steps; ++t)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const OrientedBox ba{trajectory[a][t - 1], headings[a][t], gt.current[a].length,
                             gt.current[a].width};
        const OrientedBox bb{trajectory[b][t - 1], headings[b][t], gt.current[b].length,
                             gt.current[b].width};
        if (boxes_overlap(ba, bb)) return true;
      }
  return false;
}

double prediction_overlap(std::span<const JointModeSet> modes, std::span<const GroundTruth> truths) {
  if (modes.size() != truths.size() || truths.empty())
    throw std::invalid_argument("prediction_overlap: one mode set per ground truth required");
  std::size_t count = 0;
  for (std::size_t s = 0; s < truths.size(); ++s) {
    check_modes(modes[s], truths[s]);
    if (trajectory_overlaps(modes[s].modes[top_mode(modes[s])].waypoints, truths[s])) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(truths.size());
}

AgentType scene_type(const GroundTruth& gt) {
  auto rank = [](AgentType t) {
    switch (t) {
      case AgentType::cyclist: return 0;
      case AgentType::pedestrian: return 1;
      case AgentType::vehicle: return 2;
    }
    return 2;
  };
  AgentType best = AgentType::vehicle;
  for (auto t : gt.types)
    if (rank(t) < rank(best)) best = t;
  return best;
}

json to_json(const EvalConfig& c) {
  json hs = json::array();
  for (const auto& h : c.thresholds.horizons)
    hs.push_back({{"seconds", h.seconds}, {"lateral", h.lateral}, {"longitudinal", h.longitudinal}});
  return {{"horizons", hs},
          {"speed_scaling", c.thresholds.speed_scaling},
          {"step_hz", c.step_hz},
          {"intent",
           {{"stationary_distance", c.intent.stationary_distance},
            {"straight_angle_deg", c.intent.straight_angle_deg},
            {"u_turn_angle_deg", c.intent.u_turn_angle_deg},
            {"straight_lateral", c.intent.straight_lateral}}}};
}

EvalConfig eval_config_from_json(const json& j) {
  EvalConfig c;
  if (j.contains("horizons")) {
    c.thresholds.horizons.clear();
    for (const auto& h : j.at("horizons"))
      c.thresholds.horizons.push_back(
          {h.at("seconds").get<double>(), h.at("lateral").get<double>(),
           h.at("longitudinal").get<double>()});
  }
  c.thresholds.speed_scaling = j.value("speed_scaling", c.thresholds.speed_scaling);
  c.step_hz = j.value("step_hz", c.step_hz);
  if (j.contains("intent")) {
    const auto& i = j.at("intent");
    c.intent.stationary_distance = i.value("stationary_distance", c.intent.stationary_distance);
    c.intent.straight_angle_deg = i.value("straight_angle_deg", c.intent.straight_angle_deg);
    c.intent.u_turn_angle_deg = i.value("u_turn_angle_deg", c.intent.u_turn_angle_deg);
    c.intent.straight_lateral = i.value("straight_lateral", c.intent.straight_lateral);
  }
  c.thresholds.validate();
  return c;
}

namespace {

MetricValues joint_metrics(std::span<const JointModeSet> modes, std::span<const GroundTruth> truths,
                           std::size_t step, const HorizonThreshold& th, const EvalConfig& cfg) {
  MetricValues v;
  const double n = static_cast<double>(truths.size());
  for (std::size_t s = 0; s < truths.size(); ++s) {
    v.min_ade += min_ade(modes[s], truths[s], step) / n;
    v.min_fde += min_fde(modes[s], truths[s], step) / n;
    v.miss_rate += is_miss(modes[s], truths[s], step, th, cfg.thresholds.speed_scaling) ? 1.0 / n : 0.0;
  }
  std::vector<Unit> units;
  for (std::size_t s = 0; s < truths.size(); ++s) units.push_back({s, std::nullopt});
  v.map = map_units(modes, truths, units, step, th, false, cfg.thresholds.speed_scaling, cfg.intent);
  v.soft_map = map_units(modes, truths, units, step, th, true, cfg.thresholds.speed_scaling, cfg.intent);
  return v;
}

MetricValues marginal_metrics(std::span<const JointModeSet> modes,
                              std::span<const GroundTruth> truths, std::size_t step,
                              const HorizonThreshold& th, const EvalConfig& cfg) {
  MetricValues v;
  std::vector<Unit> units;
  for (std::size_t s = 0; s < truths.size(); ++s)
    for (std::size_t a = 0; a < truths[s].future.size(); ++a) units.push_back({s, a});
  const double n = static_cast<double>(units.size());
  for (const auto& u : units) {
    v.min_ade += min_ade(modes[u.scene], truths[u.scene], step, u.agent) / n;
    v.min_fde += min_fde(modes[u.scene], truths[u.scene], step, u.agent) / n;
    v.miss_rate += is_miss(modes[u.scene], truths[u.scene], step, th,
                           cfg.thresholds.speed_scaling, u.agent)
                       ? 1.0 / n
                       : 0.0;
  }
  v.map = map_units(modes, truths, units, step, th, false, cfg.thresholds.speed_scaling, cfg.intent);
  v.soft_map = map_units(modes, truths, units, step, th, true, cfg.thresholds.speed_scaling, cfg.intent);
  return v;
}

void accumulate(MetricValues& acc, const MetricValues& v, double w) {
  acc.min_ade += w * v.min_ade;
  acc.min_fde += w * v.min_fde;
  acc.miss_rate += w * v.miss_rate;
  acc.map += w * v.map;
  acc.soft_map += w * v.soft_map;
}

}  // namespace

EvalReport evaluate(std::span<const JointModeSet> modes, std::span<const GroundTruth> truths,
                    const EvalConfig& config) {
  if (truths.empty()) throw std::invalid_argument("evaluate: empty dataset");
  config.thresholds.validate();
  std::map<std::string, const JointModeSet*> by_id;
  for (const auto& m : modes) by_id[m.scenario_id] = &m;
  std::vector<JointModeSet> ordered;
  for (const auto& gt : truths) {
    auto it = by_id.find(gt.scenario_id);
    if (it == by_id.end())
      throw std::invalid_argument("evaluate: no modes for scenario '" + gt.scenario_id + "'");
    ordered.push_back(*it->second);
  }
  EvalReport rep;
  rep.config = config;
  rep.num_scenes = truths.size();
  const double w = 1.0 / static_cast<double>(config.thresholds.horizons.size());
  for (const auto& th : config.thresholds.horizons) {
    HorizonMetrics hm;
    hm.seconds = th.seconds;
    hm.step = horizon_step(th.seconds, config.step_hz);
    hm.joint = joint_metrics(ordered, truths, hm.step, th, config);
    hm.marginal = marginal_metrics(ordered, truths, hm.step, th, config);
    accumulate(rep.joint_mean, hm.joint, w);
    accumulate(rep.marginal_mean, hm.marginal, w);
    rep.horizons.push_back(hm);
  }
  rep.overlap = prediction_overlap(ordered, truths);
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t s = 0; s < truths.size(); ++s)
    groups[static_cast<int>(scene_type(truths[s]))].push_back(s);
  for (const auto& [type, idx] : groups) {
    std::vector<JointModeSet> gm;
    std::vector<GroundTruth> gt;
    for (std::size_t s : idx) {
      gm.push_back(ordered[s]);
      gt.push_back(truths[s]);
    }
    TypeMetrics tm;
    tm.type = to_string(static_cast<AgentType>(type));
    tm.scenes = idx.size();
    for (const auto& th : config.thresholds.horizons)
      accumulate(tm.joint, joint_metrics(gm, gt, horizon_step(th.seconds, config.step_hz), th, config),
                 w);
    rep.by_type.push_back(tm);
  }
  return rep;
}

}  // namespace motionlm
