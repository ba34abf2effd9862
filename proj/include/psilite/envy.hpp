#pragma once

// Feature Envy: a method that touches more fields of another project class
// than of its own.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "psilite/body.hpp"
#include "psilite/model.hpp"
#include "psilite/report.hpp"

namespace psilite {

enum class Counting { Distinct, Occurrences };

struct MethodRef {
  std::string path;
  std::string class_fqn;
  std::string method;
  std::size_t line = 0;

  friend bool operator==(const MethodRef&, const MethodRef&) = default;
};

inline MethodRef method_ref(const ClassInfo& owner, const MethodInfo& m) {
  return MethodRef{owner.path, owner.fqn, m.name, owner.tree->line_of(m.decl_span.begin)};
}

/// Fields reached from one method body. Keys are field names, values count
/// occurrences; the key sets are what distinct counting uses.
struct AccessProfile {
  MethodRef method;
  std::map<std::string, std::size_t> own_fields;
  std::map<std::string, std::map<std::string, std::size_t>> foreign;  // class FQN -> field -> hits

  static std::size_t count(const std::map<std::string, std::size_t>& fields, Counting mode) {
    if (mode == Counting::Distinct) return fields.size();
    std::size_t n = 0;
    for (const auto& [_, hits] : fields) n += hits;
    return n;
  }
  std::size_t own_count(Counting mode = Counting::Distinct) const { return count(own_fields, mode); }
  std::size_t foreign_count(const std::string& fqn, Counting mode = Counting::Distinct) const {
    auto it = foreign.find(fqn);
    return it == foreign.end() ? 0 : count(it->second, mode);
  }
};

struct EnvyFinding {
  MethodRef method;
  std::string target;
  std::size_t own_count = 0;
  std::size_t target_count = 0;
  std::string anchor;  // "parameter d" / "field fd" when unique, else empty
};

/// What a bare name means inside a method: the lookup order is parameter,
/// local, own field, then `this`/`super`.
class NameScope {
 public:
  enum class Kind { Param, Local, OwnField, This, Super, Unknown };
  struct Binding {
    Kind kind = Kind::Unknown;
    std::string type_text;
    std::optional<std::string> type;  // resolved project class
  };

  NameScope(const ProjectModel& model, const ClassInfo& owner, const MethodInfo* method,
            const BodyScan* scan)
      : model_(model), owner_(owner), method_(method), scan_(scan) {}

  Binding lookup(const std::string& name) const {
    if (name == "this") return {Kind::This, owner_.fqn, owner_.fqn};
    if (name == "super") return {Kind::Super, owner_.extends_text, std::nullopt};
    if (method_)
      for (const auto& p : method_->params)
        if (p.name == name) return {Kind::Param, p.declared_type_text, resolve(p.declared_type_text)};
    if (scan_)
      if (const LocalDecl* l = scan_->local(name))
        return {Kind::Local, l->type_text,
                l->type_text.empty() ? std::nullopt : resolve(l->type_text)};
    if (const FieldInfo* f = owner_.field(name))
      return {Kind::OwnField, f->declared_type_text, resolve(f->declared_type_text)};
    return {Kind::Unknown, "", std::nullopt};
  }

  const ClassInfo& owner() const { return owner_; }

 private:
  std::optional<std::string> resolve(const std::string& text) const {
    return model_.resolve_type(text, owner_);
  }

  const ProjectModel& model_;
  const ClassInfo& owner_;
  const MethodInfo* method_;
  const BodyScan* scan_;
};

inline BodyScan scan_method(const ClassInfo& owner, const MethodInfo& m) {
  if (!m.body) return {};
  return scan_body(owner.tree->tokens, TokenRange{m.body->first_token, m.body->last_token});
}

/// Walks each dotted chain in the body, recording every field step whose
/// receiver has a known project-class type. A call or an unknown step ends
/// the walk.
inline AccessProfile access_profile(const MethodInfo& method, const ClassInfo& owner,
                                    const ProjectModel& model) {
  AccessProfile profile;
  profile.method = method_ref(owner, method);
  if (!method.body) return profile;
  const BodyScan scan = scan_method(owner, method);
  const NameScope scope(model, owner, &method, &scan);

  auto record = [&](const std::string& cls, const std::string& field) {
    if (cls == owner.fqn) ++profile.own_fields[field];
    else ++profile.foreign[cls][field];
  };

  for (const NameChain& chain : scan.chains) {
    const ChainLink& head = chain.head();
    if (head.call) continue;
    const auto binding = scope.lookup(head.name);
    std::optional<std::string> cur;
    switch (binding.kind) {
      case NameScope::Kind::This:
      case NameScope::Kind::Param:
      case NameScope::Kind::Local:
        cur = binding.type;
        break;
      case NameScope::Kind::OwnField:
        record(owner.fqn, head.name);
        cur = binding.type;
        break;
      default:
        continue;
    }
    for (std::size_t i = 1; i < chain.links.size() && cur; ++i) {
      const ChainLink& link = chain.links[i];
      if (link.call) break;
      const ClassInfo* cls = model.find(*cur);
      const FieldInfo* f = cls ? cls->field(link.name) : nullptr;
      if (!f) break;
      record(cls->fqn, link.name);
      cur = model.resolve_type(f->declared_type_text, *cls);
    }
  }
  return profile;
}

inline std::string describe_anchor(const MethodInfo& method, const ClassInfo& owner,
                                   const AccessProfile& profile, const std::string& target,
                                   const ProjectModel& model) {
  std::vector<std::string> params;
  for (const auto& p : method.params)
    if (model.resolve_type(p.declared_type_text, owner) == target) params.push_back(p.name);
  if (params.size() == 1) return "parameter " + params.front();
  if (!params.empty()) return "";
  std::vector<std::string> fields;
  for (const auto& [name, _] : profile.own_fields) {
    const FieldInfo* f = owner.field(name);
    if (f && model.resolve_type(f->declared_type_text, owner) == target) fields.push_back(name);
  }
  return fields.size() == 1 ? "field " + fields.front() : "";
}

/// Findings for every instance method with a body whose most-accessed
/// foreign class is a unique maximum strictly above its own-field count.
inline std::optional<EnvyFinding> envy_of(const MethodInfo& m, const ClassInfo& owner,
                                          const ProjectModel& model,
                                          Counting mode = Counting::Distinct) {
  if (m.is_constructor || m.is_static || m.is_abstract || !m.body) return std::nullopt;
  const AccessProfile profile = access_profile(m, owner, model);
  const std::size_t own = profile.own_count(mode);
  std::size_t best = 0;
  std::string best_class;
  bool tie = false;
  for (const auto& [fqn, _] : profile.foreign) {
    const std::size_t n = profile.foreign_count(fqn, mode);
    if (n > best) {
      best = n;
      best_class = fqn;
      tie = false;
    } else if (n == best) {
      tie = true;
    }
  }
  if (best_class.empty() || tie || best <= own) return std::nullopt;
  return EnvyFinding{profile.method, best_class, own, best,
                     describe_anchor(m, owner, profile, best_class, model)};
}

inline std::vector<EnvyFinding> detect_feature_envy(const ProjectModel& model,
                                                    Counting mode = Counting::Distinct) {
  std::vector<EnvyFinding> out;
  for (const auto& [fqn, cls] : model.classes)
    for (const auto& m : cls.methods)
      if (auto f = envy_of(m, cls, model, mode)) out.push_back(std::move(*f));
  std::sort(out.begin(), out.end(), [](const EnvyFinding& a, const EnvyFinding& b) {
    return std::tie(a.method.path, a.method.line, a.method.class_fqn, a.method.method) <
           std::tie(b.method.path, b.method.line, b.method.class_fqn, b.method.method);
  });
  return out;
}

inline std::string envy_report(const std::vector<EnvyFinding>& findings, ReportFormat format) {
  if (format == ReportFormat::Table) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& f : findings)
      rows.push_back({f.method.class_fqn, f.method.method, std::to_string(f.method.line), f.target,
                      std::to_string(f.own_count), std::to_string(f.target_count), f.anchor});
    return report::table({"CLASS", "METHOD", "LINE", "TARGET", "OWN", "FOREIGN", "ANCHOR"}, rows,
                         {false, false, true, false, true, true, false});
  }
  if (findings.empty()) return "[]\n";
  std::string out = "[";
  for (std::size_t i = 0; i < findings.size(); ++i) {
    const auto& f = findings[i];
    out += i ? ",\n  " : "\n  ";
    out += "{\"path\": " + report::json_string(f.method.path) +
           ", \"class\": " + report::json_string(f.method.class_fqn) +
           ", \"method\": " + report::json_string(f.method.method) +
           ", \"line\": " + std::to_string(f.method.line) +
           ", \"target\": " + report::json_string(f.target) +
           ", \"own_count\": " + std::to_string(f.own_count) +
           ", \"target_count\": " + std::to_string(f.target_count) +
           ", \"anchor\": " + report::json_string(f.anchor) + "}";
  }
  return out + "\n]\n";
}

}  // namespace psilite
