#pragma once

// Displacement, miss, mAP and overlap metrics over weighted joint modes.
//
// Marginal variants score every modeled agent on its own (per-agent
// trajectories of the joint modes, with the mode probabilities); joint
// variants score whole scenes.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "motionlm/aggregate/aggregate.hpp"
#include "motionlm/core/types.hpp"

namespace motionlm {

struct HorizonThreshold {
  double seconds = 8.0;
  double lateral = 3.0;       // m
  double longitudinal = 6.0;  // m
};

struct MissThresholds {
  std::vector<HorizonThreshold> horizons = {{3.0, 1.0, 2.0}, {5.0, 1.8, 3.6}, {8.0, 3.0, 6.0}};
  // Scale thresholds by 0.5 below 1.4 m/s up to 1.0 above 11 m/s (initial speed).
  bool speed_scaling = false;

  void validate() const;
};

struct IntentThresholds {
  double stationary_distance = 2.0;  // m
  double straight_angle_deg = 15.0;
  double u_turn_angle_deg = 135.0;
  double straight_lateral = 1.0;  // m
};

enum class IntentBucket {
  straight,
  straight_left,
  straight_right,
  left,
  right,
  left_u_turn,
  right_u_turn,
  stationary,
};

const char* to_string(IntentBucket bucket);

// Ground truth of one scenario as needed by the metrics.
struct GroundTruth {
  std::string scenario_id;
  JointTrajectory future;            // [agent][T]
  std::vector<AgentState> current;   // t=0 state per modeled agent
  std::vector<AgentType> types;
};

GroundTruth ground_truth(const Scenario& scenario);

// Step index (1-based) of a horizon in seconds at the given step rate.
std::size_t horizon_step(double seconds, double step_hz);

// `agent` selects the marginal variant for one agent; otherwise joint.
double min_ade(const JointModeSet& modes, const GroundTruth& gt, std::size_t horizon,
               std::optional<std::size_t> agent = std::nullopt);
double min_fde(const JointModeSet& modes, const GroundTruth& gt, std::size_t horizon,
               std::optional<std::size_t> agent = std::nullopt);

// Longitudinal / lateral error of a prediction at `horizon`, in the ground
// truth heading frame at that step.
std::pair<double, double> displacement_components(const GroundTruth& gt, std::size_t agent,
                                                  const Waypoint& predicted, std::size_t horizon);

bool mode_hits(const JointMode& mode, const GroundTruth& gt, std::size_t horizon,
               const HorizonThreshold& threshold, bool speed_scaling,
               std::optional<std::size_t> agent = std::nullopt);
bool is_miss(const JointModeSet& modes, const GroundTruth& gt, std::size_t horizon,
             const HorizonThreshold& threshold, bool speed_scaling = false,
             std::optional<std::size_t> agent = std::nullopt);

// `trajectory` starts with the t=0 position.
IntentBucket intent_bucket(std::span<const Waypoint> trajectory, double initial_heading,
                           const IntentThresholds& thresholds = {});
IntentBucket intent_bucket(const GroundTruth& gt, std::size_t agent,
                           const IntentThresholds& thresholds = {});

// 11-point interpolated average precision of confidence-ranked detections.
// `entries` are (confidence, outcome) with outcome +1 true positive, 0 false
// positive, -1 ignored; ties keep the given order.
double average_precision(std::vector<std::pair<double, int>> entries, std::size_t positives);

// Mean over intent buckets present in the dataset. Marginal variant when
// `agent` is set; the joint variant buckets scenes by the first modeled agent.
double map_score(std::span<const JointModeSet> modes, std::span<const GroundTruth> truths,
                 std::size_t horizon, const HorizonThreshold& threshold, bool soft,
                 bool speed_scaling = false, std::optional<std::size_t> agent = std::nullopt,
                 const IntentThresholds& intent = {});

// Any pair of modeled agents' boxes intersecting at any step of `trajectory`.
bool trajectory_overlaps(const JointTrajectory& trajectory, const GroundTruth& gt);
// Fraction of scenes whose most likely mode overlaps.
double prediction_overlap(std::span<const JointModeSet> modes, std::span<const GroundTruth> truths);

// Least common modeled agent type of a scene (cyclist, then pedestrian, then vehicle).
AgentType scene_type(const GroundTruth& gt);

struct MetricValues {
  double min_ade = 0.0;
  double min_fde = 0.0;
  double miss_rate = 0.0;
  double map = 0.0;
  double soft_map = 0.0;
};

struct HorizonMetrics {
  double seconds = 0.0;
  std::size_t step = 0;
  MetricValues marginal;
  MetricValues joint;
};

struct TypeMetrics {
  std::string type;
  std::size_t scenes = 0;
  MetricValues joint;  // averaged over horizons
};

struct EvalConfig {
  MissThresholds thresholds;
  IntentThresholds intent;
  double step_hz = 2.0;
};

nlohmann::json to_json(const EvalConfig& config);
EvalConfig eval_config_from_json(const nlohmann::json& j);

struct EvalReport {
  std::size_t num_scenes = 0;
  std::vector<HorizonMetrics> horizons;
  MetricValues marginal_mean;
  MetricValues joint_mean;
  double overlap = 0.0;
  std::vector<TypeMetrics> by_type;
  EvalConfig config;
  std::string ap_interpolation = "11-point interpolated precision";
};

// Modes are matched to ground truth by scenario id; every truth needs modes.
EvalReport evaluate(std::span<const JointModeSet> modes, std::span<const GroundTruth> truths,
                    const EvalConfig& config = {});

nlohmann::json to_json(const MetricValues& values);
nlohmann::json to_json(const EvalReport& report);
std::string format_report(const EvalReport& report);

// Ablation CSV: parameter name and value followed by the averaged metrics.
std::string csv_header();
std::string csv_row(const std::string& parameter, double value, const EvalReport& report);

}  // namespace motionlm
