#pragma once

#include <filesystem>
#include <iosfwd>

#include "motionlm/core/types.hpp"

namespace motionlm {

// Scenario files hold one JSON object per line. Each record carries
// "schema_version"; the current version is kScenarioSchemaVersion.
inline constexpr int kScenarioSchemaVersion = 1;

std::string scenario_to_json_line(const Scenario& scenario);
// `line_number` is only used in error messages.
Scenario scenario_from_json_line(const std::string& line, std::size_t line_number);

void save_scenarios(const ScenarioSet& set, const std::filesystem::path& path);
void write_scenarios(const ScenarioSet& set, std::ostream& out);
ScenarioSet load_scenarios(const std::filesystem::path& path);
ScenarioSet read_scenarios(std::istream& in);

}  // namespace motionlm
