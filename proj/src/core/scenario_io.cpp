#include "motionlm/core/scenario_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace motionlm {

using nlohmann::json;

const char* to_string(AgentType type) {
  switch (type) {
    case AgentType::vehicle: return "vehicle";
    case AgentType::pedestrian: return "pedestrian";
    case AgentType::cyclist: return "cyclist";
  }
  return "vehicle";
}

const char* to_string(RoadType type) { return type == RoadType::lane ? "lane" : "edge"; }

AgentType agent_type_from_string(const std::string& name) {
  if (name == "vehicle") return AgentType::vehicle;
  if (name == "pedestrian") return AgentType::pedestrian;
  if (name == "cyclist") return AgentType::cyclist;
  throw std::invalid_argument("unknown agent type '" + name + "'");
}

RoadType road_type_from_string(const std::string& name) {
  if (name == "lane") return RoadType::lane;
  if (name == "edge") return RoadType::edge;
  throw std::invalid_argument("unknown road type '" + name + "'");
}

void validate(const Scenario& s) {
  const std::string who = "scenario '" + s.id + "': ";
  if (s.modeled_agents.empty()) throw SchemaError(who + "modeled_agents is empty");
  if (s.agent_types.size() != s.history.size())
    throw SchemaError(who + "agent_types and history disagree on the agent count");
  if (s.horizon < 1) throw SchemaError(who + "horizon must be >= 1");
  for (int a : s.modeled_agents) {
    if (a < 0 || static_cast<std::size_t>(a) >= s.history.size())
      throw SchemaError(who + "modeled agent " + std::to_string(a) + " does not exist");
    if (s.history[a].empty() || !s.history[a].back().valid)
      throw SchemaError(who + "modeled agent " + std::to_string(a) + " is not valid at t=0");
  }
  for (const auto& track : s.history)
    for (const auto& st : track)
      if (st.valid && !(st.length > 0.0 && st.width > 0.0))
        throw SchemaError(who + "valid agent state with non-positive extent");
  if (s.has_future()) {
    if (s.future.size() != s.modeled_agents.size())
      throw SchemaError(who + "future has " + std::to_string(s.future.size()) +
                        " tracks for " + std::to_string(s.modeled_agents.size()) +
                        " modeled agents");
    for (const auto& f : s.future)
      if (static_cast<int>(f.size()) != s.horizon)
        throw SchemaError(who + "future length " + std::to_string(f.size()) +
                          " differs from horizon T=" + std::to_string(s.horizon));
  }
}

namespace {

json point_json(const Waypoint& p) { return json::array({p.x, p.y}); }

json state_json(const AgentState& s) {
  return {{"x", s.position.x}, {"y", s.position.y}, {"heading", s.heading}, {"vx", s.vx},
          {"vy", s.vy},        {"length", s.length}, {"width", s.width},    {"valid", s.valid}};
}

// Field access that reports the failing path and line.
class Reader {
 public:
  explicit Reader(std::size_t line) : line_(line) {}

  const json& field(const json& obj, const char* name, const std::string& path) const {
    if (!obj.is_object() || !obj.contains(name))
      throw FormatError(line_, path + name, "missing required field");
    return obj.at(name);
  }
  template <typename T>
  T get(const json& obj, const char* name, const std::string& path = "") const {
    const json& v = field(obj, name, path);
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw FormatError(line_, path + name, e.what());
    }
  }
  Waypoint point(const json& v, const std::string& path) const {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw FormatError(line_, path, "expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
  }
  const json& array(const json& obj, const char* name, const std::string& path = "") const {
    const json& v = field(obj, name, path);
    if (!v.is_array()) throw FormatError(line_, path + name, "expected an array");
    return v;
  }
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace

std::string scenario_to_json_line(const Scenario& s) {
  json history = json::array();
  for (const auto& track : s.history) {
    json t = json::array();
    for (const auto& st : track) t.push_back(state_json(st));
    history.push_back(std::move(t));
  }
  json types = json::array();
  for (auto t : s.agent_types) types.push_back(to_string(t));
  json road = json::array();
  for (const auto& pl : s.roadgraph) {
    json pts = json::array();
    for (const auto& p : pl.points) pts.push_back(point_json(p));
    road.push_back({{"type", to_string(pl.type)}, {"points", std::move(pts)}});
  }
  json future = json::array();
  for (const auto& f : s.future) {
    json pts = json::array();
    for (const auto& p : f) pts.push_back(point_json(p));
    future.push_back(std::move(pts));
  }
  json j = {{"schema_version", kScenarioSchemaVersion},
            {"id", s.id},
            {"history_dt", s.history_dt},
            {"horizon", s.horizon},
            {"agent_types", std::move(types)},
            {"history", std::move(history)},
            {"roadgraph", std::move(road)},
            {"modeled_agents", s.modeled_agents},
            {"future", std::move(future)},
            {"family", s.family},
            {"latent_mode", s.latent_mode}};
  return j.dump();
}

Scenario scenario_from_json_line(const std::string& line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(line_number, "<record>", e.what());
  }
  Reader r(line_number);
  const int version = r.get<int>(j, "schema_version");
  if (version != kScenarioSchemaVersion)
    throw SchemaError("line " + std::to_string(line_number) + ": unsupported schema_version " +
                      std::to_string(version));
  Scenario s;
  s.id = r.get<std::string>(j, "id");
  s.history_dt = r.get<double>(j, "history_dt");
  s.horizon = r.get<int>(j, "horizon");
  const json& types = r.array(j, "agent_types");
  for (std::size_t i = 0; i < types.size(); ++i) {
    try {
      s.agent_types.push_back(agent_type_from_string(types[i].get<std::string>()));
    } catch (const std::exception& e) {
      throw FormatError(line_number, "agent_types[" + std::to_string(i) + "]", e.what());
    }
  }
  const json& history = r.array(j, "history");
  for (std::size_t a = 0; a < history.size(); ++a) {
    std::vector<AgentState> track;
    if (!history[a].is_array())
      throw FormatError(line_number, "history[" + std::to_string(a) + "]", "expected an array");
    for (std::size_t h = 0; h < history[a].size(); ++h) {
      const std::string path = "history[" + std::to_string(a) + "][" + std::to_string(h) + "].";
      const json& st = history[a][h];
      AgentState state;
      state.position = {r.get<double>(st, "x", path), r.get<double>(st, "y", path)};
      state.heading = r.get<double>(st, "heading", path);
      state.vx = r.get<double>(st, "vx", path);
      state.vy = r.get<double>(st, "vy", path);
      state.length = r.get<double>(st, "length", path);
      state.width = r.get<double>(st, "width", path);
      state.valid = r.get<bool>(st, "valid", path);
      track.push_back(state);
    }
    s.history.push_back(std::move(track));
  }
  const json& road = r.array(j, "roadgraph");
  for (std::size_t i = 0; i < road.size(); ++i) {
    const std::string path = "roadgraph[" + std::to_string(i) + "].";
    Polyline pl;
    try {
      pl.type = road_type_from_string(r.get<std::string>(road[i], "type", path));
    } catch (const std::invalid_argument& e) {
      throw FormatError(line_number, path + "type", e.what());
    }
    const json& pts = r.array(road[i], "points", path);
    for (std::size_t p = 0; p < pts.size(); ++p)
      pl.points.push_back(r.point(pts[p], path + "points[" + std::to_string(p) + "]"));
    s.roadgraph.push_back(std::move(pl));
  }
  s.modeled_agents = r.get<std::vector<int>>(j, "modeled_agents");
  const json& future = r.array(j, "future");
  for (std::size_t a = 0; a < future.size(); ++a) {
    std::vector<Waypoint> track;
    if (!future[a].is_array())
      throw FormatError(line_number, "future[" + std::to_string(a) + "]", "expected an array");
    for (std::size_t t = 0; t < future[a].size(); ++t)
      track.push_back(
          r.point(future[a][t], "future[" + std::to_string(a) + "][" + std::to_string(t) + "]"));
    s.future.push_back(std::move(track));
  }
  if (j.contains("family")) s.family = r.get<std::string>(j, "family");
  if (j.contains("latent_mode")) s.latent_mode = r.get<std::string>(j, "latent_mode");
  validate(s);
  return s;
}

void write_scenarios(const ScenarioSet& set, std::ostream& out) {
  for (const auto& s : set) out << scenario_to_json_line(s) << '\n';
}

void save_scenarios(const ScenarioSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_scenarios(set, out);
}

ScenarioSet read_scenarios(std::istream& in) {
  ScenarioSet set;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    set.push_back(scenario_from_json_line(line, number));
  }
  return set;
}

ScenarioSet load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("scenario file not found: " + path.string());
  return read_scenarios(in);
}

}  // namespace motionlm
