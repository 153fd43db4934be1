#pragma once

// Reduction of sampled joint rollouts to a few weighted joint modes:
// non-maximum suppression picks seeds, Lloyd iterations refine them.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "motionlm/rollout/rollout.hpp"

namespace motionlm {

using JointTrajectory = std::vector<std::vector<Waypoint>>;  // [agent][T]

enum class DistanceKind {
  max_endpoint,   // max over agents of the final-step displacement
  mean_endpoint,  // mean over agents of the final-step displacement
  ade,            // mean over agents and steps of the displacement
};

const char* to_string(DistanceKind kind);
DistanceKind distance_kind_from_string(const std::string& name);

double joint_distance(const JointTrajectory& a, const JointTrajectory& b,
                      DistanceKind kind = DistanceKind::max_endpoint);

struct AggregateConfig {
  std::size_t num_modes = 6;
  double nms_threshold = 2.0;  // m
  DistanceKind distance = DistanceKind::max_endpoint;
  bool weighted_nms = false;  // neighbor mass weighted by rollout likelihood
  int max_iterations = 50;
};

nlohmann::json to_json(const AggregateConfig& config);
AggregateConfig aggregate_config_from_json(const nlohmann::json& j);

struct JointMode {
  JointTrajectory waypoints;
  double probability = 0.0;
};

struct JointModeSet {
  std::string scenario_id;
  std::vector<JointMode> modes;  // descending probability
};

// Greedy seeds: the rollout with the most neighbors within `threshold`
// (ties: lowest index) is kept and its neighbors suppressed, up to k times.
// `weights`, when given, replaces each neighbor's count of 1.
std::vector<std::size_t> nms_select(std::span<const JointTrajectory> rollouts, std::size_t k,
                                    double threshold,
                                    DistanceKind kind = DistanceKind::max_endpoint,
                                    std::span<const double> weights = {});

struct KMeansResult {
  JointModeSet modes;
  std::vector<std::size_t> assignment;  // rollout -> index into modes.modes
  std::vector<double> objective;        // within-cluster squared error per iteration
  int iterations = 0;
};

// Lloyd iterations from the seeds: assignment by joint_distance to the
// nearest centroid, centroid = per-agent per-step mean. Stops at an
// assignment fixpoint, after max_iterations, or when a reassignment would
// raise the squared-error objective. Empty clusters are dropped; mode
// probability is the assigned fraction.
KMeansResult kmeans_refine(std::span<const JointTrajectory> rollouts,
                           std::span<const std::size_t> seeds,
                           DistanceKind kind = DistanceKind::max_endpoint,
                           int max_iterations = 50);

// Sum over rollouts of squared waypoint distances to their centroid.
double kmeans_objective(std::span<const JointTrajectory> rollouts,
                        std::span<const JointTrajectory> centroids,
                        std::span<const std::size_t> assignment);

JointModeSet aggregate(const RolloutSet& rollouts, const AggregateConfig& config);

// Concatenates replica rollout sets (replica-major); samples keep their
// replica index.
RolloutSet ensemble_merge(const std::vector<RolloutSet>& replicas);

// Mode files: a header line {"schema_version", "kind": "modes",
// "config_digest"} then one JSON record per scenario.
struct ModeFile {
  std::string config_digest;
  std::vector<JointModeSet> sets;
};
void save_modes(const ModeFile& file, const std::string& path);
ModeFile load_modes(const std::string& path);

}  // namespace motionlm
