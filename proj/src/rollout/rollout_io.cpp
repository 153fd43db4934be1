#include "motionlm/rollout/rollout_io.hpp"

#include <filesystem>
#include <fstream>

#include "motionlm/core/types.hpp"

namespace motionlm {

using nlohmann::json;

json waypoints_to_json(const std::vector<std::vector<Waypoint>>& per_agent) {
  json out = json::array();
  for (const auto& track : per_agent) {
    json row = json::array();
    for (const auto& p : track) row.push_back(json::array({p.x, p.y}));
    out.push_back(row);
  }
  return out;
}

std::vector<std::vector<Waypoint>> waypoints_from_json(const json& j) {
  std::vector<std::vector<Waypoint>> out;
  for (const auto& row : j) {
    std::vector<Waypoint> track;
    for (const auto& p : row) track.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    out.push_back(std::move(track));
  }
  return out;
}

json sample_to_json(const RolloutSet& set, std::size_t index) {
  const auto& s = set.samples.at(index);
  json rec = {{"scenario_id", set.scenario_id},
              {"mode", to_string(set.mode)},
              {"seed", set.seed},
              {"attention_interval", set.attention_interval},
              {"top_p", set.top_p},
              {"rollout", index},
              {"replica", s.replica},
              {"tokens", s.tokens},
              {"waypoints", waypoints_to_json(s.waypoints)},
              {"log_probs", s.log_probs}};
  rec["query_agent"] = set.query_agent ? json(*set.query_agent) : json(nullptr);
  return rec;
}

void save_rollouts(const RolloutFile& file, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write rollout file " + path);
  out << json{{"schema_version", kRolloutSchemaVersion},
              {"kind", "rollouts"},
              {"config_digest", file.config_digest}}
             .dump()
      << '\n';
  for (const auto& set : file.sets)
    for (std::size_t i = 0; i < set.samples.size(); ++i) out << sample_to_json(set, i).dump() << '\n';
}

RolloutFile load_rollouts(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("rollout file not found: " + path);
  RolloutFile file;
  std::string text;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::exception& e) {
      throw FormatError(line, "<record>", e.what());
    }
    if (!header) {
      if (rec.value("kind", std::string()) != "rollouts")
        throw SchemaError(path + ": missing rollout header line");
      if (rec.value("schema_version", 0) != kRolloutSchemaVersion)
        throw SchemaError(path + ": unsupported schema_version");
      file.config_digest = rec.value("config_digest", std::string());
      header = true;
      continue;
    }
    std::string field;
    try {
      field = "scenario_id";
      const auto id = rec.at(field).get<std::string>();
      if (file.sets.empty() || file.sets.back().scenario_id != id) {
        RolloutSet set;
        set.scenario_id = id;
        field = "mode";
        set.mode = rollout_mode_from_string(rec.at(field).get<std::string>());
        field = "seed";
        set.seed = rec.at(field).get<std::uint64_t>();
        field = "attention_interval";
        set.attention_interval = rec.at(field).get<int>();
        field = "top_p";
        set.top_p = rec.at(field).get<double>();
        field = "query_agent";
        if (!rec.at(field).is_null()) set.query_agent = rec.at(field).get<std::size_t>();
        file.sets.push_back(std::move(set));
      }
      JointSample s;
      field = "tokens";
      s.tokens = rec.at(field).get<std::vector<TokenRow>>();
      field = "waypoints";
      s.waypoints = waypoints_from_json(rec.at(field));
      field = "log_probs";
      s.log_probs = rec.at(field).get<std::vector<std::vector<double>>>();
      field = "replica";
      s.replica = rec.at(field).get<std::size_t>();
      file.sets.back().samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw FormatError(line, field, e.what());
    } catch (const std::invalid_argument& e) {
      throw FormatError(line, field, e.what());
    }
  }
  if (!header && line > 0) throw SchemaError(path + ": missing rollout header line");
  return file;
}

}  // namespace motionlm
