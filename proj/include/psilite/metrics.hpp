#pragma once

#include <string>
#include <vector>

#include "psilite/model.hpp"
#include "psilite/report.hpp"

namespace psilite {

struct MetricsRecord {
  std::string class_fqn;
  std::string path;
  std::size_t fields = 0;
  std::size_t methods = 0;  // constructors excluded
  std::size_t loc = 0;      // physical lines from `class` to the closing brace

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

inline MetricsRecord class_metrics(const ClassInfo& cls) {
  MetricsRecord r{cls.fqn, cls.path, cls.fields.size(), 0, 0};
  for (const auto& m : cls.methods)
    if (!m.is_constructor) ++r.methods;
  const SyntaxTree& tree = *cls.tree;
  const std::size_t start = cls.keyword_token != npos ? tree.tokens[cls.keyword_token].span.begin
                                                      : cls.decl_span.begin;
  const std::size_t end = cls.decl_span.end > cls.decl_span.begin ? cls.decl_span.end - 1 : start;
  r.loc = tree.line_of(end) - tree.line_of(start) + 1;
  return r;
}

inline std::vector<MetricsRecord> project_metrics(const ProjectModel& model) {
  std::vector<MetricsRecord> out;
  for (const auto& [_, cls] : model.classes) out.push_back(class_metrics(cls));
  return out;  // model.classes is ordered by FQN
}

inline std::string metrics_report(std::vector<MetricsRecord> records, ReportFormat format) {
  std::sort(records.begin(), records.end(),
            [](const MetricsRecord& a, const MetricsRecord& b) { return a.class_fqn < b.class_fqn; });
  if (format == ReportFormat::Table) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : records)
      rows.push_back({r.class_fqn, std::to_string(r.fields), std::to_string(r.methods),
                      std::to_string(r.loc)});
    return report::table({"CLASS", "FIELDS", "METHODS", "LOC"}, rows, {false, true, true, true});
  }
  if (records.empty()) return "[]\n";
  std::string out = "[";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out += i ? ",\n  " : "\n  ";
    out += "{\"class\": " + report::json_string(r.class_fqn) +
           ", \"path\": " + report::json_string(r.path) + ", \"fields\": " + std::to_string(r.fields) +
           ", \"methods\": " + std::to_string(r.methods) + ", \"loc\": " + std::to_string(r.loc) + "}";
  }
  return out + "\n]\n";
}

}  // namespace psilite
