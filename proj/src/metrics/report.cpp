#include <cstdio>
#include <sstream>

#include "motionlm/metrics/metrics.hpp"

namespace motionlm {

using nlohmann::json;

json to_json(const MetricValues& v) {
  return {{"min_ade", v.min_ade},
          {"min_fde", v.min_fde},
          {"miss_rate", v.miss_rate},
          {"map", v.map},
          {"soft_map", v.soft_map}};
}

json to_json(const EvalReport& r) {
  json horizons = json::array();
  for (const auto& h : r.horizons)
    horizons.push_back({{"seconds", h.seconds},
                        {"step", h.step},
                        {"marginal", to_json(h.marginal)},
                        {"joint", to_json(h.joint)}});
  json types = json::array();
  for (const auto& t : r.by_type)
    types.push_back({{"type", t.type}, {"scenes", t.scenes}, {"joint", to_json(t.joint)}});
  return {{"num_scenes", r.num_scenes},
          {"horizons", horizons},
          {"marginal_mean", to_json(r.marginal_mean)},
          {"joint_mean", to_json(r.joint_mean)},
          {"overlap", r.overlap},
          {"by_type", types},
          {"config", to_json(r.config)},
          {"ap_interpolation", r.ap_interpolation}};
}

namespace {

std::string row(const char* label, const MetricValues& v) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %8.4f %8.4f %8.4f %8.4f %8.4f\n", label, v.min_ade,
                v.min_fde, v.miss_rate, v.map, v.soft_map);
  return buf;
}

}  // namespace

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "scenes: " << r.num_scenes << "  (AP: " << r.ap_interpolation << ")\n";
  out << "             minADE   minFDE     miss      mAP  softmAP\n";
  for (const auto& h : r.horizons) {
    char label[32];
    std::snprintf(label, sizeof label, "%.0fs joint", h.seconds);
    out << row(label, h.joint);
    std::snprintf(label, sizeof label, "%.0fs marg", h.seconds);
    out << row(label, h.marginal);
  }
  out << row("avg joint", r.joint_mean) << row("avg marg", r.marginal_mean);
  char buf[64];
  std::snprintf(buf, sizeof buf, "overlap: %.4f\n", r.overlap);
  out << buf;
  for (const auto& t : r.by_type) {
    std::snprintf(buf, sizeof buf, "type %s (%zu scenes)\n", t.type.c_str(), t.scenes);
    out << buf << row("  joint", t.joint);
  }
  return out.str();
}

std::string csv_header() {
  return "parameter,value,min_ade,min_fde,miss_rate,map,soft_map,marginal_min_ade,"
         "marginal_min_fde,marginal_miss_rate,marginal_map,marginal_soft_map,overlap";
}

std::string csv_row(const std::string& parameter, double value, const EvalReport& r) {
  char buf[512];
  const auto& j = r.joint_mean;
  const auto& m = r.marginal_mean;
  std::snprintf(buf, sizeof buf, "%s,%g,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f",
                parameter.c_str(), value, j.min_ade, j.min_fde, j.miss_rate, j.map, j.soft_map,
                m.min_ade, m.min_fde, m.miss_rate, m.map, m.soft_map, r.overlap);
  return buf;
}

}  // namespace motionlm
