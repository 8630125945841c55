#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "addsep/classify.hpp"
#include "addsep/io_util.hpp"

namespace addsep {

/// Six significant digits, the precision used in the CSV outputs. The JSON
/// sidecar keeps full precision.
inline std::string format_g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string scores_to_csv(const EvaluationReport& report) {
  std::map<int, double> thresholds;
  for (const MethodSummary& s : report.summaries) thresholds[s.method] = s.threshold;
  std::string csv = "function_id,method,score,wall_time_s,label,prediction\n";
  for (const ScoreRecord& r : report.records) {
    const Label prediction = classify(r.score, thresholds.at(r.method));
    csv += r.function_id + "," + std::to_string(r.method) + "," + format_g6(r.score) + "," +
           format_g6(r.wall_time_s) + "," + label_name(r.label) + "," + label_name(prediction) +
           "\n";
  }
  return csv;
}

inline std::string summary_to_csv(const EvaluationReport& report) {
  std::string csv = "method,threshold,accuracy,mean_time_s\n";
  for (const MethodSummary& s : report.summaries) {
    csv += std::to_string(s.method) + "," + format_g6(s.threshold) + "," +
           format_g6(s.accuracy) + "," + format_g6(s.mean_time_s) + "\n";
  }
  return csv;
}

/// Full-precision sidecar for the two CSVs, including the signed score
/// means that the CSVs omit.
inline nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json doc;
  doc["oracle_mode"] = report.oracle_mode;
  doc["note"] =
      "thresholds are selected on this same evaluation set (no held-out split); "
      "scores are means of |mixed partial|, signed means reported alongside";
  doc["summaries"] = nlohmann::json::array();
  for (const MethodSummary& s : report.summaries) {
    doc["summaries"].push_back({{"method", s.method},
                                {"threshold", s.threshold},
                                {"accuracy", s.accuracy},
                                {"mean_time_s", s.mean_time_s},
                                {"scored", s.scored},
                                {"failed", s.failed}});
  }
  doc["records"] = nlohmann::json::array();
  for (const ScoreRecord& r : report.records) {
    doc["records"].push_back({{"function_id", r.function_id},
                              {"method", r.method},
                              {"score", r.score},
                              {"signed_score", r.signed_score},
                              {"wall_time_s", r.wall_time_s},
                              {"label", label_name(r.label)}});
  }
  doc["failures"] = report.failures;
  return doc;
}

inline void save_report(const EvaluationReport& report, const std::filesystem::path& dir) {
  atomic_write_file(dir / "scores.csv", scores_to_csv(report));
  atomic_write_file(dir / "summary.csv", summary_to_csv(report));
  atomic_write_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
}

}  // namespace addsep
