#include "motionlm/aggregate/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "motionlm/rollout/rollout_io.hpp"

namespace motionlm {

using nlohmann::json;

const char* to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::max_endpoint: return "max_endpoint";
    case DistanceKind::mean_endpoint: return "mean_endpoint";
    case DistanceKind::ade: return "ade";
  }
  return "max_endpoint";
}

DistanceKind distance_kind_from_string(const std::string& name) {
  for (auto k : {DistanceKind::max_endpoint, DistanceKind::mean_endpoint, DistanceKind::ade})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown distance kind '" + name + "'");
}

namespace {

void check_shapes(const JointTrajectory& a, const JointTrajectory& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("joint_distance: agent counts " + std::to_string(a.size()) +
                                " and " + std::to_string(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].size() != b[i].size() || a[i].empty())
      throw std::invalid_argument("joint_distance: step counts " + std::to_string(a[i].size()) +
                                  " and " + std::to_string(b[i].size()));
}

double dist(const Waypoint& a, const Waypoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<std::size_t> assign(std::span<const JointTrajectory> rollouts,
                                std::span<const JointTrajectory> centroids, DistanceKind kind) {
  std::vector<std::size_t> out(rollouts.size());
  for (std::size_t r = 0; r < rollouts.size(); ++r) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = joint_distance(rollouts[r], centroids[c], kind);
      if (d < best) {
        best = d;
        out[r] = c;
      }
    }
  }
  return out;
}

std::vector<JointTrajectory> centroids_of(std::span<const JointTrajectory> rollouts,
                                          std::span<const std::size_t> assignment,
                                          std::size_t clusters, std::vector<std::size_t>& counts) {
  const auto& shape = rollouts[0];
  std::vector<JointTrajectory> out(clusters);
  for (auto& c : out) {
    c.resize(shape.size());
    for (std::size_t a = 0; a < shape.size(); ++a) c[a].assign(shape[a].size(), {0.0, 0.0});
  }
  counts.assign(clusters, 0);
  for (std::size_t r = 0; r < rollouts.size(); ++r) {
    auto& c = out[assignment[r]];
    ++counts[assignment[r]];
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t t = 0; t < c[a].size(); ++t) {
        c[a][t].x += rollouts[r][a][t].x;
        c[a][t].y += rollouts[r][a][t].y;
      }
  }
  for (std::size_t k = 0; k < clusters; ++k)
    if (counts[k] > 0)
      for (auto& track : out[k])
        for (auto& p : track) {
          p.x /= static_cast<double>(counts[k]);
          p.y /= static_cast<double>(counts[k]);
        }
  return out;
}

}  // namespace

double joint_distance(const JointTrajectory& a, const JointTrajectory& b, DistanceKind kind) {
  check_shapes(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    switch (kind) {
      case DistanceKind::max_endpoint: acc = std::max(acc, dist(a[i].back(), b[i].back())); break;
      case DistanceKind::mean_endpoint: acc += dist(a[i].back(), b[i].back()); break;
      case DistanceKind::ade: {
        double s = 0.0;
        for (std::size_t t = 0; t < a[i].size(); ++t) s += dist(a[i][t], b[i][t]);
        acc += s / static_cast<double>(a[i].size());
        break;
      }
    }
  }
  return kind == DistanceKind::max_endpoint ? acc : acc / static_cast<double>(a.size());
}

json to_json(const AggregateConfig& c) {
  return {{"num_modes", c.num_modes},
          {"nms_threshold", c.nms_threshold},
          {"distance", to_string(c.distance)},
          {"weighted_nms", c.weighted_nms},
          {"max_iterations", c.max_iterations}};
}

AggregateConfig aggregate_config_from_json(const json& j) {
  AggregateConfig c;
  c.num_modes = j.value("num_modes", c.num_modes);
  c.nms_threshold = j.value("nms_threshold", c.nms_threshold);
  if (j.contains("distance")) c.distance = distance_kind_from_string(j.at("distance"));
  c.weighted_nms = j.value("weighted_nms", c.weighted_nms);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  if (c.num_modes < 1 || c.nms_threshold < 0.0 || c.max_iterations < 0)
    throw std::invalid_argument("aggregate config: invalid values");
  return c;
}

std::vector<std::size_t> nms_select(std::span<const JointTrajectory> rollouts, std::size_t k,
                                    double threshold, DistanceKind kind,
                                    std::span<const double> weights) {
  const std::size_t n = rollouts.size();
  if (n == 0) throw std::invalid_argument("nms_select: no rollouts");
  if (!weights.empty() && weights.size() != n)
    throw std::invalid_argument("nms_select: one weight per rollout required");
  std::vector<std::vector<char>> near(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      near[i][j] = near[j][i] = joint_distance(rollouts[i], rollouts[j], kind) <= threshold;
  std::vector<char> alive(n, 1);
  std::vector<std::size_t> seeds;
  while (seeds.size() < k) {
    double best = -1.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      double mass = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (alive[j] && near[i][j]) mass += weights.empty() ? 1.0 : weights[j];
      if (mass > best) {
        best = mass;
        pick = i;
      }
    }
    if (pick == n) break;
    seeds.push_back(pick);
    for (std::size_t j = 0; j < n; ++j)
      if (near[pick][j]) alive[j] = 0;
  }
  return seeds;
}

double kmeans_objective(std::span<const JointTrajectory> rollouts,
                        std::span<const JointTrajectory> centroids,
                        std::span<const std::size_t> assignment) {
  double total = 0.0;
  for (std::size_t r = 0; r < rollouts.size(); ++r) {
    const auto& c = centroids[assignment[r]];
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t t = 0; t < c[a].size(); ++t) {
        const double dx = rollouts[r][a][t].x - c[a][t].x, dy = rollouts[r][a][t].y - c[a][t].y;
        total += dx * dx + dy * dy;
      }
  }
  return total;
}

KMeansResult kmeans_refine(std::span<const JointTrajectory> rollouts,
                           std::span<const std::size_t> seeds, DistanceKind kind,
                           int max_iterations) {
  if (rollouts.empty()) throw std::invalid_argument("kmeans_refine: no rollouts");
  if (seeds.empty()) throw std::invalid_argument("kmeans_refine: no seeds");
  std::vector<JointTrajectory> centroids;
  for (std::size_t s : seeds) centroids.push_back(rollouts[s]);
  KMeansResult res;
  auto assignment = assign(rollouts, centroids, kind);
  std::vector<std::size_t> counts;
  {
    auto updated = centroids_of(rollouts, assignment, centroids.size(), counts);
    for (std::size_t c = 0; c < centroids.size(); ++c)
      if (counts[c] > 0) centroids[c] = std::move(updated[c]);
  }
  res.objective.push_back(kmeans_objective(rollouts, centroids, assignment));
  for (int it = 0; it < max_iterations; ++it) {
    auto next = assign(rollouts, centroids, kind);
    if (next == assignment) break;
    const double before = kmeans_objective(rollouts, centroids, assignment);
    const double after = kmeans_objective(rollouts, centroids, next);
    if (after > before) break;
    assignment = std::move(next);
    auto updated = centroids_of(rollouts, assignment, centroids.size(), counts);
    for (std::size_t c = 0; c < centroids.size(); ++c)
      if (counts[c] > 0) centroids[c] = std::move(updated[c]);
    res.objective.push_back(kmeans_objective(rollouts, centroids, assignment));
    res.iterations = it + 1;
  }
  centroids_of(rollouts, assignment, centroids.size(), counts);
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < centroids.size(); ++c)
    if (counts[c] > 0) order.push_back(c);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::vector<std::size_t> remap(centroids.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    remap[order[i]] = i;
    res.modes.modes.push_back(
        {centroids[order[i]],
         static_cast<double>(counts[order[i]]) / static_cast<double>(rollouts.size())});
  }
  res.assignment.resize(assignment.size());
  for (std::size_t r = 0; r < assignment.size(); ++r) res.assignment[r] = remap[assignment[r]];
  return res;
}

JointModeSet aggregate(const RolloutSet& rollouts, const AggregateConfig& config) {
  std::vector<JointTrajectory> trajs;
  std::vector<double> weights;
  for (const auto& s : rollouts.samples) {
    trajs.push_back(s.waypoints);
    if (config.weighted_nms) {
      double lp = 0.0;
      for (const auto& row : s.log_probs)
        for (double v : row) lp += v;
      weights.push_back(lp);
    }
  }
  if (!weights.empty()) {
    const double top = *std::max_element(weights.begin(), weights.end());
    for (double& w : weights) w = std::exp(w - top);
  }
  const auto seeds =
      nms_select(trajs, config.num_modes, config.nms_threshold, config.distance, weights);
  auto res = kmeans_refine(trajs, seeds, config.distance, config.max_iterations);
  res.modes.scenario_id = rollouts.scenario_id;
  return res.modes;
}

RolloutSet ensemble_merge(const std::vector<RolloutSet>& replicas) {
  if (replicas.empty()) throw std::invalid_argument("ensemble_merge: no replicas");
  RolloutSet out = replicas[0];
  out.samples.clear();
  for (std::size_t e = 0; e < replicas.size(); ++e) {
    const auto& r = replicas[e];
    if (r.scenario_id != out.scenario_id)
      throw std::invalid_argument("ensemble_merge: scenario '" + r.scenario_id +
                                  "' does not match '" + out.scenario_id + "'");
    if (!out.samples.empty() && !r.samples.empty() &&
        (r.num_agents() != out.num_agents() || r.steps() != out.steps()))
      throw std::invalid_argument("ensemble_merge: replica shapes differ");
    for (auto s : r.samples) {
      if (replicas.size() > 1) s.replica = e;
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

void save_modes(const ModeFile& file, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write mode file " + path);
  out << json{{"schema_version", kRolloutSchemaVersion},
              {"kind", "modes"},
              {"config_digest", file.config_digest}}
             .dump()
      << '\n';
  for (const auto& set : file.sets) {
    json modes = json::array();
    for (const auto& m : set.modes)
      modes.push_back({{"probability", m.probability}, {"waypoints", waypoints_to_json(m.waypoints)}});
    out << json{{"scenario_id", set.scenario_id}, {"modes", modes}}.dump() << '\n';
  }
}

ModeFile load_modes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("mode file not found: " + path);
  ModeFile file;
  std::string text;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    std::string field = "<record>";
    try {
      const json rec = json::parse(text);
      if (!header) {
        if (rec.value("kind", std::string()) != "modes")
          throw SchemaError(path + ": missing mode header line");
        if (rec.value("schema_version", 0) != kRolloutSchemaVersion)
          throw SchemaError(path + ": unsupported schema_version");
        file.config_digest = rec.value("config_digest", std::string());
        header = true;
        continue;
      }
      JointModeSet set;
      field = "scenario_id";
      set.scenario_id = rec.at(field).get<std::string>();
      field = "modes";
      for (const auto& m : rec.at(field))
        set.modes.push_back({waypoints_from_json(m.at("waypoints")), m.at("probability").get<double>()});
      file.sets.push_back(std::move(set));
    } catch (const json::exception& e) {
      throw FormatError(line, field, e.what());
    }
  }
  if (!header && line > 0) throw SchemaError(path + ": missing mode header line");
  return file;
}

}  // namespace motionlm
