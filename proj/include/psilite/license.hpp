#pragma once

// License recognition by cosine similarity between term-frequency vectors of
// the input and of three canonical texts embedded at build time.

#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "psilite/license_texts.hpp"
#include "psilite/report.hpp"

namespace psilite {

enum class LicenseLabel { Apache2, Bsd3, Mit, Unknown };

constexpr std::string_view to_string(LicenseLabel l) noexcept {
  switch (l) {
    case LicenseLabel::Apache2: return "Apache-2.0";
    case LicenseLabel::Bsd3: return "BSD-3-Clause";
    case LicenseLabel::Mit: return "MIT";
    case LicenseLabel::Unknown: return "Unknown";
  }
  return "?";
}

struct LicenseMatch {
  LicenseLabel label = LicenseLabel::Unknown;
  double score = 0.0;
  struct RunnerUp {
    LicenseLabel label = LicenseLabel::Unknown;
    double score = 0.0;
  } runner_up;
};

inline constexpr double kDefaultLicenseThreshold = 0.90;

namespace detail {

inline bool is_copyright_line(const std::string& lowered) {
  if (lowered.find("copyright") == std::string::npos) return false;
  if (lowered.find("copyright (c)") != std::string::npos) return true;
  static const std::regex year(R"((^|[^0-9])[0-9]{4}([^0-9]|$))");
  return std::regex_search(lowered, year);
}

}  // namespace detail

/// Lowercases, drops copyright lines, turns every non-alphanumeric byte into
/// a separator and splits.
inline std::vector<std::string> normalize_license(std::string_view text) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    for (char& c : line) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (detail::is_copyright_line(line)) continue;
    std::string word;
    for (char c : line) {
      const auto u = static_cast<unsigned char>(c);
      if (u < 0x80 && std::isalnum(u)) {
        word += c;
      } else if (!word.empty()) {
        words.push_back(std::move(word));
        word.clear();
      }
    }
    if (!word.empty()) words.push_back(std::move(word));
  }
  return words;
}

/// Unit-length term-frequency vector.
class TermVector {
 public:
  TermVector() = default;
  explicit TermVector(const std::vector<std::string>& words) {
    for (const auto& w : words) weights_[w] += 1.0;
    double norm = 0.0;
    for (const auto& [_, v] : weights_) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0)
      for (auto& [_, v] : weights_) v /= norm;
  }

  double dot(const TermVector& o) const {
    const auto& small = weights_.size() <= o.weights_.size() ? weights_ : o.weights_;
    const auto& large = &small == &weights_ ? o.weights_ : weights_;
    double s = 0.0;
    for (const auto& [w, v] : small)
      if (auto it = large.find(w); it != large.end()) s += v * it->second;
    return s;
  }

  double norm() const {
    double s = 0.0;
    for (const auto& [_, v] : weights_) s += v * v;
    return std::sqrt(s);
  }

  bool empty() const { return weights_.empty(); }

 private:
  std::map<std::string, double> weights_;
};

struct CanonicalTemplate {
  LicenseLabel label;
  TermVector vector;
};

inline const std::array<CanonicalTemplate, 3>& canonical_templates() {
  static const std::array<CanonicalTemplate, 3> templates = {
      CanonicalTemplate{LicenseLabel::Apache2,
                        TermVector(normalize_license(license_texts::kAPACHE2Text))},
      CanonicalTemplate{LicenseLabel::Bsd3, TermVector(normalize_license(license_texts::kBSD3Text))},
      CanonicalTemplate{LicenseLabel::Mit, TermVector(normalize_license(license_texts::kMITText))},
  };
  return templates;
}

inline std::string_view canonical_text(LicenseLabel l) {
  switch (l) {
    case LicenseLabel::Apache2: return license_texts::kAPACHE2Text;
    case LicenseLabel::Bsd3: return license_texts::kBSD3Text;
    case LicenseLabel::Mit: return license_texts::kMITText;
    case LicenseLabel::Unknown: break;
  }
  return {};
}

inline double cosine_similarity(std::string_view a, std::string_view b) {
  return TermVector(normalize_license(a)).dot(TermVector(normalize_license(b)));
}

inline LicenseMatch classify_license(std::string_view text,
                                     double threshold = kDefaultLicenseThreshold) {
  const TermVector input(normalize_license(text));
  LicenseMatch best;
  best.score = -1.0;
  best.runner_up.score = -1.0;
  LicenseLabel best_label = LicenseLabel::Unknown;
  for (const auto& t : canonical_templates()) {
    const double s = input.dot(t.vector);
    if (s > best.score) {
      best.runner_up = {best_label, best.score};
      best.score = s;
      best_label = t.label;
    } else if (s > best.runner_up.score) {
      best.runner_up = {t.label, s};
    }
  }
  best.label = best.score >= threshold ? best_label : LicenseLabel::Unknown;
  return best;
}

inline std::string license_text_report(const LicenseMatch& m) {
  return std::string(to_string(m.label)) + " (score=" + report::fixed4(m.score) + ")\n";
}

inline std::string license_json_report(const LicenseMatch& m) {
  return "{\"label\": " + report::json_string(to_string(m.label)) +
         ", \"score\": " + report::fixed4(m.score) +
         ", \"runner_up\": {\"label\": " + report::json_string(to_string(m.runner_up.label)) +
         ", \"score\": " + report::fixed4(m.runner_up.score) + "}}\n";
}

}  // namespace psilite
