#pragma once

// Javadoc mining: one record per documented method, written as JSON.

#include <filesystem>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "psilite/io.hpp"
#include "psilite/model.hpp"
#include "psilite/report.hpp"

namespace psilite {

struct DocRecord {
  std::string path;
  std::string class_fqn;
  std::string method;
  std::string signature;
  std::string javadoc;
  std::size_t line = 0;

  friend bool operator==(const DocRecord&, const DocRecord&) = default;
};

/// Strips the comment delimiters and the conventional leading `*` gutter.
/// Each line loses its leading whitespace, one `*`, one space and its
/// trailing whitespace; blank lines at either end are dropped.
inline std::string normalize_javadoc(std::string_view raw) {
  if (raw.starts_with("/**")) raw.remove_prefix(3);
  if (raw.ends_with("*/")) raw.remove_suffix(2);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string_view line = raw.substr(pos, nl - pos);
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\f')) ++i;
    if (i < line.size() && line[i] == '*') ++i;
    if (i < line.size() && line[i] == ' ') ++i;
    line.remove_prefix(i);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r' ||
                             line.back() == '\f'))
      line.remove_suffix(1);
    lines.emplace_back(line);
    pos = nl + 1;
  }
  std::size_t b = 0, e = lines.size();
  while (b < e && lines[b].empty()) ++b;
  while (e > b && lines[e - 1].empty()) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i) {
    if (i > b) out += '\n';
    out += lines[i];
  }
  return out;
}

inline std::string method_signature(const MethodInfo& m) {
  std::string s = m.name + "(";
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (i) s += ',';
    for (char c : m.params[i].declared_type_text)
      if (c != ' ' && c != '\t' && c != '\n' && c != '\r') s += c;
  }
  return s + ")";
}

/// Records for all methods and constructors carrying a non-empty Javadoc,
/// sorted by (path, line).
inline std::vector<DocRecord> extract_docs(const ProjectModel& model) {
  std::vector<DocRecord> out;
  for (const auto& [fqn, cls] : model.classes) {
    for (const auto& m : cls.methods) {
      if (!m.javadoc) continue;
      std::string doc = normalize_javadoc(cls.tree->tokens[*m.javadoc].text);
      if (doc.empty()) continue;
      out.push_back(DocRecord{cls.path, fqn, m.name, method_signature(m), std::move(doc),
                              cls.tree->line_of(m.decl_span.begin)});
    }
  }
  std::sort(out.begin(), out.end(), [](const DocRecord& a, const DocRecord& b) {
    return std::tie(a.path, a.line, a.class_fqn, a.signature) <
           std::tie(b.path, b.line, b.class_fqn, b.signature);
  });
  return out;
}

inline std::string docs_json(const std::vector<DocRecord>& records, std::string_view project_root) {
  using report::json_string;
  std::string out = "{\"project\": " + json_string(project_root) + ", \"records\": [";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DocRecord& r = records[i];
    out += i ? ",\n  " : "\n  ";
    out += "{\"path\": " + json_string(r.path) + ", \"class\": " + json_string(r.class_fqn) +
           ", \"method\": " + json_string(r.method) + ", \"signature\": " + json_string(r.signature) +
           ", \"javadoc\": " + json_string(r.javadoc) + ", \"line\": " + std::to_string(r.line) + "}";
  }
  out += records.empty() ? "]}\n" : "\n]}\n";
  return out;
}

inline void write_docs_json(const std::vector<DocRecord>& records, std::string_view project_root,
                            const std::filesystem::path& out_path) {
  write_file(out_path, docs_json(records, project_root));
}

}  // namespace psilite
