#pragma once

// Move Method: relocate an envious instance method into the class it envies,
// rewriting its body and every call site. The supported subset is checked up
// front; anything outside it is refused rather than half-rewritten.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "psilite/body.hpp"
#include "psilite/envy.hpp"
#include "psilite/io.hpp"
#include "psilite/model.hpp"

namespace psilite {

enum class ViolationCode {
  TargetNotInProject,
  NotInstanceMethod,
  NoBody,
  AmbiguousAnchor,
  NoAnchor,
  NameClashInTarget,
  UsesSuper,
  CallsOwnInstanceMethod,
  ReferencesPrivateOwnField,
  AnchorFieldPrivate,
  UnresolvableCallSite,
};

constexpr std::string_view to_string(ViolationCode c) noexcept {
  switch (c) {
    case ViolationCode::TargetNotInProject: return "TargetNotInProject";
    case ViolationCode::NotInstanceMethod: return "NotInstanceMethod";
    case ViolationCode::NoBody: return "NoBody";
    case ViolationCode::AmbiguousAnchor: return "AmbiguousAnchor";
    case ViolationCode::NoAnchor: return "NoAnchor";
    case ViolationCode::NameClashInTarget: return "NameClashInTarget";
    case ViolationCode::UsesSuper: return "UsesSuper";
    case ViolationCode::CallsOwnInstanceMethod: return "CallsOwnInstanceMethod";
    case ViolationCode::ReferencesPrivateOwnField: return "ReferencesPrivateOwnField";
    case ViolationCode::AnchorFieldPrivate: return "AnchorFieldPrivate";
    case ViolationCode::UnresolvableCallSite: return "UnresolvableCallSite";
  }
  return "?";
}

struct PreconditionViolation {
  ViolationCode code;
  std::string message;
  std::string path;
  Span span;
};

struct ParameterAnchor {
  std::string name;
  std::size_t index = 0;
  friend bool operator==(const ParameterAnchor&, const ParameterAnchor&) = default;
};

struct FieldAnchor {
  std::string field;
  friend bool operator==(const FieldAnchor&, const FieldAnchor&) = default;
};

using Anchor = std::variant<std::monostate, ParameterAnchor, FieldAnchor>;

struct RefactoringPlan {
  MethodRef method;
  std::string source_class;
  std::string target_class;
  Anchor anchor;
  bool needs_back_reference = false;
  std::string self_param_name;
  std::map<std::string, std::vector<TextEdit>> edits;  // by project-relative path
  std::size_t call_site_count = 0;
  std::map<std::string, std::uint64_t> source_hashes;  // content the plan was made against
  std::string moved_text;                              // the method as inserted into the target
};

/// The method, or something it touches, falls outside the rewrite subset.
class PlanningFailure : public Error {
 public:
  PlanningFailure(std::string path, Span span, const std::string& what)
      : Error(path + ":" + std::to_string(span.begin) + ": " + what),
        path_(std::move(path)),
        span_(span) {}
  const std::string& path() const noexcept { return path_; }
  Span span() const noexcept { return span_; }

 private:
  std::string path_;
  Span span_;
};

class PreconditionsFailed : public Error {
 public:
  explicit PreconditionsFailed(std::vector<PreconditionViolation> v)
      : Error(std::to_string(v.size()) + " precondition violation(s)"), violations_(std::move(v)) {}
  const std::vector<PreconditionViolation>& violations() const noexcept { return violations_; }

 private:
  std::vector<PreconditionViolation> violations_;
};

class StaleSources : public Error {
 public:
  explicit StaleSources(std::vector<std::string> paths)
      : Error("sources changed since planning: " + join(paths)), paths_(std::move(paths)) {}
  const std::vector<std::string>& paths() const noexcept { return paths_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& p : v) s += (s.empty() ? "" : ", ") + p;
    return s;
  }
  std::vector<std::string> paths_;
};

namespace detail {

inline bool starts_upper(std::string_view s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s.front()));
}

inline std::size_t next_sig(const std::vector<Token>& toks, std::size_t i) {
  while (i < toks.size() && toks[i].is_trivia()) ++i;
  return i;
}

inline std::size_t prev_sig(const std::vector<Token>& toks, std::size_t i) {
  while (i > 0) {
    --i;
    if (!toks[i].is_trivia()) return i;
  }
  return npos;
}

inline bool is_assignment(const Token& t) {
  static constexpr std::string_view ops[] = {"=",  "+=", "-=", "*=", "/=",
                                             "%=", "&=", "|=", "^=", "<<="};
  for (auto op : ops)
    if (t.is(op)) return true;
  return false;
}

inline bool is_whitespace_only(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\f'; });
}

inline std::size_t line_begin(std::string_view text, std::size_t offset) {
  while (offset > 0 && text[offset - 1] != '\n') --offset;
  return offset;
}

/// Offset one past the end of the line holding `offset` (past its newline).
inline std::size_t line_end(std::string_view text, std::size_t offset) {
  std::size_t nl = text.find('\n', offset);
  return nl == std::string_view::npos ? text.size() : nl + 1;
}

inline std::string indent_of_line(std::string_view text, std::size_t offset) {
  std::size_t b = line_begin(text, offset);
  std::size_t e = b;
  while (e < text.size() && (text[e] == ' ' || text[e] == '\t')) ++e;
  return std::string(text.substr(b, e - b));
}

inline std::string newline_of(std::string_view text) {
  return text.find("\r\n") != std::string_view::npos ? "\r\n" : "\n";
}

/// Applies the edits lying inside `range` to that slice of `source`.
inline std::string rewrite_slice(std::string_view source, Span range,
                                 const std::vector<TextEdit>& edits) {
  std::vector<TextEdit> local;
  for (const auto& e : edits)
    if (range.contains(e.span) && !(e.span.empty() && e.span.begin == range.end))
      local.push_back(TextEdit{Span{e.span.begin - range.begin, e.span.end - range.begin},
                               e.replacement});
  return apply_edits(source.substr(range.begin, range.size()), std::move(local));
}

inline bool extends_class(const ProjectModel& model, const ClassInfo& cls, const std::string& base) {
  const ClassInfo* c = &cls;
  for (int guard = 0; c && guard < 64; ++guard) {
    if (c->extends_text.empty()) return false;
    auto sup = model.resolve_type(c->extends_text, *c);
    if (!sup) return false;
    if (*sup == base) return true;
    c = model.find(*sup);
  }
  return false;
}

inline bool nested_in(const ProjectModel& model, const ClassInfo& cls, const std::string& outer) {
  for (const ClassInfo* c = &cls; c; c = model.enclosing_of(*c))
    if (c->fqn == outer) return true;
  return false;
}

struct CallSite {
  std::string path;
  std::size_t name_token = 0;
  std::size_t start_token = 0;  // receiver head, or the name for bare calls
  bool bare = false;
  CallArgs args;
};

struct BodyRewrite {
  std::vector<TextEdit> edits;
  bool back_reference = false;
};

/// Everything the checks and the planner need, computed once.
class MoveAnalysis {
 public:
  MoveAnalysis(const MethodInfo& method, const std::string& target_fqn, const ProjectModel& model)
      : model_(model), method_(method) {
    owner_ = model.find(method.owner);
    if (!owner_) throw Error("method owner " + method.owner + " is not in the model");
    target_ = model.find(target_fqn);
    const SyntaxTree& tree = *owner_->tree;
    here_ = Span{method.decl_span.begin, method.name_token != npos
                                             ? tree.tokens[method.name_token].span.end
                                             : method.decl_span.end};
    if (target_ && target_->fqn == owner_->fqn) target_self_ = true;
    if (method.body) {
      scan_ = scan_method(*owner_, method);
      profile_ = access_profile(method, *owner_, model);
    }
    run_checks(target_fqn);
  }

  const std::vector<PreconditionViolation>& violations() const { return violations_; }
  const Anchor& anchor() const { return anchor_; }
  const ClassInfo& owner() const { return *owner_; }
  const ClassInfo* target() const { return target_; }
  const std::vector<CallSite>& call_sites() const { return call_sites_; }
  const BodyScan& scan() const { return scan_; }

  /// Body rewrite edits (file offsets in the owner's file).
  BodyRewrite body_rewrite(const std::string& self_name, const std::string& owner_ref,
                          bool reject = true) const {
    BodyRewrite out;
    if (!method_.body) return out;
    const auto& toks = owner_->tree->tokens;
    const NameScope scope(model_, *owner_, &method_, &scan_);
    const auto* pa = std::get_if<ParameterAnchor>(&anchor_);
    const auto* fa = std::get_if<FieldAnchor>(&anchor_);
    auto replace = [&](std::size_t first, std::size_t last_incl, std::string text) {
      out.edits.push_back(TextEdit{Span{toks[first].span.begin, toks[last_incl].span.end},
                                   std::move(text)});
    };
    auto assigned_after = [&](const NameChain& chain) {
      std::size_t n = next_sig(toks, chain.end_token);
      if (reject && n < toks.size() && is_assignment(toks[n]))
        throw PlanningFailure(owner_->path, toks[chain.head().token].span,
                              "the anchor is assigned inside the method");
    };
    for (const NameChain& chain : scan_.chains) {
      const ChainLink& head = chain.head();
      const auto b = scope.lookup(head.name);
      if (b.kind == NameScope::Kind::This) {
        if (fa && chain.links.size() >= 2 && chain.links[1].name == fa->field &&
            !chain.links[1].call) {
          if (chain.links.size() == 2) assigned_after(chain);
          replace(head.token, chain.links[1].token, "this");
          continue;
        }
        bool to_class = false;
        if (chain.links.size() >= 2) {
          const ChainLink& l = chain.links[1];
          if (l.call) to_class = static_method(l.name);
          else if (const FieldInfo* f = owner_->field(l.name)) to_class = f->is_static;
        }
        if (to_class) {
          replace(head.token, head.token, owner_ref);
        } else {
          replace(head.token, head.token, self_name);
          out.back_reference = true;
        }
      } else if (b.kind == NameScope::Kind::Param) {
        if (pa && head.name == pa->name) {
          if (chain.links.size() == 1) assigned_after(chain);
          replace(head.token, head.token, "this");
        }
      } else if (b.kind == NameScope::Kind::OwnField) {
        if (fa && head.name == fa->field) {
          if (chain.links.size() == 1) assigned_after(chain);
          replace(head.token, head.token, "this");
        } else if (owner_->field(head.name)->is_static) {
          replace(head.token, head.token, owner_ref + "." + head.name);
        } else {
          replace(head.token, head.token, self_name + "." + head.name);
          out.back_reference = true;
        }
      } else if (b.kind == NameScope::Kind::Unknown && head.call && static_method(head.name)) {
        replace(head.token, head.token, owner_ref + "." + head.name);
      }
    }
    return out;
  }

  /// Constructs inside the body that the rewrite cannot express.
  void reject_unsupported_body() const {
    if (!method_.body) return;
    const auto& toks = owner_->tree->tokens;
    for (std::size_t i = method_.body->first_token; i < method_.body->last_token; ++i) {
      const Token& t = toks[i];
      if (t.is_trivia()) continue;
      const std::size_t p = prev_sig(toks, i);
      const bool after_dot = p != npos && toks[p].is(".");
      if (t.is("class") && !after_dot)
        throw PlanningFailure(owner_->path, t.span, "local class declarations are not supported");
      if (t.is("this") && after_dot)
        throw PlanningFailure(owner_->path, t.span, "qualified `this` is not supported");
      if (t.is("new")) {
        std::size_t q = next_sig(toks, i + 1);
        int angle = 0;
        while (q < method_.body->last_token &&
               (toks[q].is_identifier() || toks[q].is(".") || toks[q].is("<") || toks[q].is(">") ||
                toks[q].is(",") || toks[q].is("?") || angle > 0)) {
          if (toks[q].is("<")) ++angle;
          if (toks[q].is(">")) --angle;
          q = next_sig(toks, q + 1);
        }
        if (q < toks.size() && toks[q].is("(")) {
          auto call = call_args_at(toks, TokenRange{q, method_.body->last_token}, q);
          if (call) {
            std::size_t after = next_sig(toks, call->close + 1);
            if (after < toks.size() && toks[after].is("{"))
              throw PlanningFailure(owner_->path, t.span,
                                    "anonymous classes inside the method are not supported");
          }
        }
      }
    }
  }

  bool static_method(const std::string& name) const {
    auto ms = owner_->methods_named(name);
    if (ms.empty()) return false;
    for (const auto* m : ms)
      if (!m->is_static || m->visibility == Visibility::Private) return false;
    return true;
  }

 private:
  void violate(ViolationCode code, std::string message, std::string path = {}, Span span = {}) {
    if (path.empty()) {
      path = owner_->path;
      span = here_;
    }
    violations_.push_back(PreconditionViolation{code, std::move(message), std::move(path), span});
  }

  void run_checks(const std::string& target_fqn) {
    const std::string label = owner_->fqn + "." + method_.name;
    // P1
    if (!target_ || target_self_)
      violate(ViolationCode::TargetNotInProject,
              target_self_ ? "target " + target_fqn + " is the method's own class"
                           : "target " + target_fqn + " is not a class of the analyzed project");
    // P2
    if (method_.is_static || method_.is_constructor)
      violate(ViolationCode::NotInstanceMethod,
              label + " is " + (method_.is_constructor ? "a constructor" : "static"));
    if (!method_.body) violate(ViolationCode::NoBody, label + " has no body");

    const bool have_target = target_ && !target_self_;
    if (have_target) find_anchor();
    if (method_.body) check_body();
    if (have_target) {
      check_name_clash();
      find_call_sites();
      if (const auto* fa = std::get_if<FieldAnchor>(&anchor_)) {
        const FieldInfo* f = owner_->field(fa->field);
        if (f && f->visibility == Visibility::Private) {
          for (const auto& cs : call_sites_) {
            const ClassInfo* at = model_.class_at(cs.path, model_.files.at(cs.path)->tokens[cs.name_token].span.begin);
            if (!at || !nested_in(model_, *at, owner_->fqn)) {
              violate(ViolationCode::AnchorFieldPrivate,
                      "anchor field " + fa->field + " is private but " + label +
                          " is called from outside " + owner_->fqn,
                      cs.path, model_.files.at(cs.path)->tokens[cs.name_token].span);
              break;
            }
          }
        }
      }
    }
  }

  void find_anchor() {
    std::vector<std::size_t> params;
    for (std::size_t i = 0; i < method_.params.size(); ++i)
      if (model_.resolve_type(method_.params[i].declared_type_text, *owner_) == target_->fqn)
        params.push_back(i);
    if (params.size() == 1) {
      anchor_ = ParameterAnchor{method_.params[params[0]].name, params[0]};
      return;
    }
    if (params.size() > 1) {
      violate(ViolationCode::AmbiguousAnchor,
              std::to_string(params.size()) + " parameters have type " + target_->fqn);
      return;
    }
    std::vector<std::string> fields;
    for (const auto& [name, _] : profile_.own_fields) {
      const FieldInfo* f = owner_->field(name);
      if (f && !f->is_static && model_.resolve_type(f->declared_type_text, *owner_) == target_->fqn)
        fields.push_back(name);
    }
    if (fields.size() == 1) {
      anchor_ = FieldAnchor{fields[0]};
    } else if (fields.size() > 1) {
      violate(ViolationCode::AmbiguousAnchor,
              std::to_string(fields.size()) + " accessed fields have type " + target_->fqn);
    } else {
      violate(ViolationCode::NoAnchor, "no parameter or accessed field of type " + target_->fqn);
    }
  }

  void check_body() {
    const auto& toks = owner_->tree->tokens;
    const auto* fa = std::get_if<FieldAnchor>(&anchor_);
    bool super_seen = false;
    std::set<std::string> reported_calls;
    const std::string owner_path = owner_->path;
    const FileScope* scope = nullptr;
    if (auto it = model_.scopes.find(owner_path); it != model_.scopes.end()) scope = &it->second;
    auto statically_imported = [&](const std::string& name) {
      if (!scope) return false;
      for (const auto& imp : scope->imports)
        if (imp.is_static && (imp.is_wildcard || imp.name.ends_with("." + name))) return true;
      return false;
    };
    auto own_call = [&](const std::string& name, Span at) {
      if (reported_calls.count(name)) return;
      auto ms = owner_->methods_named(name);
      std::string why;
      if (ms.empty()) {
        if (statically_imported(name)) return;
        why = "calls " + name + "(), which " + owner_->fqn + " does not declare (possibly inherited)";
      } else if (!static_method(name)) {
        bool any_instance = std::any_of(ms.begin(), ms.end(), [](auto* m) { return !m->is_static; });
        why = any_instance ? "calls instance method " + name + "() of " + owner_->fqn
                           : "calls private method " + name + "() of " + owner_->fqn;
      } else {
        return;
      }
      reported_calls.insert(name);
      violate(ViolationCode::CallsOwnInstanceMethod, why, owner_path, at);
    };
    const NameScope names(model_, *owner_, &method_, &scan_);
    for (const NameChain& chain : scan_.chains) {
      const ChainLink& head = chain.head();
      const Span at = toks[head.token].span;
      if (head.name == "super") {
        if (!super_seen) violate(ViolationCode::UsesSuper, "uses super", owner_path, at);
        super_seen = true;
        continue;
      }
      if (head.name == "this") {
        if (chain.links.size() >= 2 && chain.links[1].call)
          own_call(chain.links[1].name, toks[chain.links[1].token].span);
        if (chain.links.size() == 1) {
          std::size_t n = next_sig(toks, chain.end_token);
          if (n < toks.size() && toks[n].is("::")) {
            std::size_t m = next_sig(toks, n + 1);
            own_call(m < toks.size() ? toks[m].text : "?", toks[n].span);
          }
        }
        continue;
      }
      if (head.call && names.lookup(head.name).kind == NameScope::Kind::Unknown)
        own_call(head.name, at);
    }
    for (const auto& [name, _] : profile_.own_fields) {
      if (fa && fa->field == name) continue;
      const FieldInfo* f = owner_->field(name);
      if (f && f->visibility == Visibility::Private)
        violate(ViolationCode::ReferencesPrivateOwnField,
                "references private field " + name + " of " + owner_->fqn, owner_path,
                toks[f->name_token].span);
    }
  }

  void check_name_clash() {
    std::size_t arity = method_.params.size();
    if (std::holds_alternative<ParameterAnchor>(anchor_)) --arity;
    if (method_.body && body_rewrite("self", owner_->simple_name, false).back_reference) ++arity;
    if (target_->has_method(method_.name, arity))
      violate(ViolationCode::NameClashInTarget,
              target_->fqn + " already declares " + method_.name + " with " + std::to_string(arity) +
                  " parameter(s)",
              target_->path, target_->decl_span);
  }

  /// Receiver type of a qualified call: the resolved project class, nullopt
  /// for a non-project type, or an error message when it cannot be typed.
  struct ReceiverType {
    std::optional<std::string> type;
    std::string unresolvable;
  };

  ReceiverType receiver_type(const NameChain& chain, std::size_t upto, const ClassInfo* at,
                             const MethodInfo* in_method, const BodyScan* scan) const {
    for (std::size_t i = 0; i < upto; ++i)
      if (chain.links[i].call) return {std::nullopt, "receiver contains a call"};
    const ChainLink& head = chain.head();
    if (!at) {
      if (starts_upper(head.name)) return {};
      return {std::nullopt, "receiver " + head.name + " cannot be typed outside a class"};
    }
    const NameScope scope(model_, *at, in_method, scan);
    const auto b = scope.lookup(head.name);
    std::optional<std::string> cur;
    switch (b.kind) {
      case NameScope::Kind::This:
        cur = at->fqn;
        break;
      case NameScope::Kind::Super:
        if (extends_class(model_, *at, owner_->fqn))
          return {std::nullopt, "call through super of a subclass"};
        return {};
      case NameScope::Kind::Param:
      case NameScope::Kind::Local:
      case NameScope::Kind::OwnField:
        if (b.type_text.empty()) return {std::nullopt, "receiver " + head.name + " has no declared type"};
        cur = b.type;
        if (!cur) return {};
        break;
      case NameScope::Kind::Unknown:
        if (starts_upper(head.name)) return {};
        return {std::nullopt, "receiver " + head.name + " cannot be resolved"};
    }
    for (std::size_t i = 1; i < upto; ++i) {
      const ClassInfo* cls = model_.find(*cur);
      const FieldInfo* f = cls ? cls->field(chain.links[i].name) : nullptr;
      if (!f) return {std::nullopt, "field " + chain.links[i].name + " of " + *cur + " is unknown"};
      cur = model_.resolve_type(f->declared_type_text, *cls);
      if (!cur) {
        if (f->declared_type_text.empty()) return {std::nullopt, "untyped receiver"};
        return {};
      }
    }
    return {cur, ""};
  }

  void find_call_sites() {
    const std::string& name = method_.name;
    const std::size_t arity = method_.params.size();
    std::set<std::pair<std::string, std::size_t>> declarations;
    for (const auto& [_, cls] : model_.classes)
      for (const auto& m : cls.methods) declarations.insert({cls.path, m.name_token});

    for (const auto& [path, tree] : model_.files) {
      const auto& toks = tree->tokens;
      bool mentions = false;
      for (const auto& t : toks)
        if (t.is_identifier() && t.text == name) mentions = true;
      if (!mentions) continue;

      const BodyScan file_scan = scan_body(toks, TokenRange{0, toks.size()});
      std::set<std::size_t> seen;
      std::map<const MethodInfo*, BodyScan> scans;
      auto unresolvable = [&](std::size_t tok, const std::string& why) {
        violate(ViolationCode::UnresolvableCallSite, "call site of " + name + ": " + why, path,
                toks[tok].span);
      };
      for (const NameChain& chain : file_scan.chains) {
        for (std::size_t i = 0; i < chain.links.size(); ++i) {
          const ChainLink& link = chain.links[i];
          if (link.name != name) continue;
          seen.insert(link.token);
          if (!link.call || link.call->args.size() != arity) continue;
          if (declarations.count({path, link.token})) continue;
          if (i == 0 && chain.prev_token != npos) {
            const Token& prev = toks[chain.prev_token];
            if (prev.is_identifier() || prev.is(">") || prev.is("]") || prev.is("void") ||
                (prev.kind == TokenKind::Keyword && !prev.is("return") && !prev.is("else") &&
                 !prev.is("throw") && !prev.is("case") && !prev.is("assert") && !prev.is("do") &&
                 !prev.is("yield")))
              continue;  // a declaration in a region the parser did not analyze
          }
          const std::size_t offset = toks[link.token].span.begin;
          const ClassInfo* at = model_.class_at(path, offset);
          const MethodInfo* in_method = at ? model_.method_at(*at, offset) : nullptr;
          const BodyScan* scan = nullptr;
          if (in_method && in_method->body) {
            auto it = scans.find(in_method);
            if (it == scans.end()) it = scans.emplace(in_method, scan_method(*at, *in_method)).first;
            scan = &it->second;
          }
          const bool in_moved = path == owner_->path && method_.decl_span.contains(offset);

          bool is_site = false;
          if (i == 0) {
            if (!at) continue;
            if (at->fqn == owner_->fqn) {
              is_site = true;
            } else if (nested_in(model_, *at, owner_->fqn)) {
              if (!at->methods_named(name).empty()) continue;
              unresolvable(link.token, "bare call from nested class " + at->fqn);
              continue;
            } else if (extends_class(model_, *at, owner_->fqn)) {
              if (!at->methods_named(name).empty()) continue;
              unresolvable(link.token, "bare call from subclass " + at->fqn);
              continue;
            } else {
              continue;
            }
          } else {
            ReceiverType r = receiver_type(chain, i, at, in_method, scan);
            if (!r.unresolvable.empty()) {
              unresolvable(link.token, r.unresolvable);
              continue;
            }
            if (!r.type) continue;
            if (*r.type == owner_->fqn) {
              is_site = true;
            } else if (const ClassInfo* rc = model_.find(*r.type);
                       rc && extends_class(model_, *rc, owner_->fqn)) {
              unresolvable(link.token, "receiver type " + *r.type + " extends " + owner_->fqn);
              continue;
            } else {
              continue;
            }
          }
          if (!is_site) continue;
          if (in_moved) {
            unresolvable(link.token, "recursive call inside the moved method");
            continue;
          }
          call_sites_.push_back(CallSite{path, link.token, i == 0 ? link.token : chain.head().token,
                                         i == 0, *link.call});
        }
      }
      // `.name(` after a complex receiver, and method references `::name`.
      for (std::size_t t = 0; t < toks.size(); ++t) {
        if (!toks[t].is_identifier() || toks[t].text != name || seen.count(t)) continue;
        if (declarations.count({path, t})) continue;
        const std::size_t p = prev_sig(toks, t);
        if (p == npos) continue;
        if (toks[p].is("::")) {
          const std::size_t offset = toks[t].span.begin;
          unresolvable(t, "method reference at offset " + std::to_string(offset));
          continue;
        }
        const std::size_t n = next_sig(toks, t + 1);
        if (toks[p].is(".") && n < toks.size() && toks[n].is("(")) {
          auto call = call_args_at(toks, TokenRange{0, toks.size()}, n);
          if (call && call->args.size() == arity) unresolvable(t, "receiver is not a simple name chain");
        }
      }
    }
  }

  const ProjectModel& model_;
  const MethodInfo& method_;
  const ClassInfo* owner_ = nullptr;
  const ClassInfo* target_ = nullptr;
  bool target_self_ = false;
  Span here_;
  BodyScan scan_;
  AccessProfile profile_;
  Anchor anchor_;
  std::vector<PreconditionViolation> violations_;
  std::vector<CallSite> call_sites_;
};

/// Reference to `cls` usable from inside `from`: the simple name when it
/// resolves there, otherwise the fully qualified name.
inline std::string type_reference(const ProjectModel& model, const ClassInfo& cls,
                                  const ClassInfo& from) {
  if (model.resolve_type(cls.simple_name, from) == cls.fqn) return cls.simple_name;
  return cls.fqn;
}

/// True for postfix chains such as `a.b`, `xs[i]` or `make().c`, which can
/// take a `.m(...)` suffix without parentheses.
inline bool simple_expression(const std::vector<Token>& toks, TokenRange r) {
  bool want_name = true;
  for (std::size_t i = r.first; i < r.last; ++i) {
    const Token& t = toks[i];
    if (t.is_trivia()) continue;
    if (want_name) {
      if (!(t.is_identifier() || t.is("this"))) return false;
      want_name = false;
    } else if (t.is(".")) {
      want_name = true;
    } else if (t.is("(") || t.is("[")) {
      const std::string_view close = t.is("(") ? ")" : "]";
      int depth = 0;
      for (; i < r.last; ++i) {
        if (toks[i].is(t.text)) ++depth;
        else if (toks[i].is(close) && --depth == 0) break;
      }
      if (i == r.last) return false;
    } else {
      return false;
    }
  }
  return !want_name;
}

inline std::string text_of(const SyntaxTree& tree, TokenRange r) {
  if (r.empty()) return {};
  return std::string(tree.text(Span{tree.tokens[r.first].span.begin, tree.tokens[r.last - 1].span.end}));
}

}  // namespace detail

/// Evaluates every precondition and returns all violations (empty when the
/// move is allowed).
inline std::vector<PreconditionViolation> check_preconditions(const MethodInfo& method,
                                                              const std::string& target_fqn,
                                                              const ProjectModel& model) {
  return detail::MoveAnalysis(method, target_fqn, model).violations();
}

/// Compiles the move into per-file text edits. Throws PreconditionsFailed if
/// any rule is violated and PlanningFailure for constructs outside the
/// rewrite subset.
inline RefactoringPlan plan_move(const MethodInfo& method, const std::string& target_fqn,
                                 const ProjectModel& model) {
  using namespace detail;
  MoveAnalysis analysis(method, target_fqn, model);
  if (!analysis.violations().empty()) throw PreconditionsFailed(analysis.violations());
  analysis.reject_unsupported_body();

  const ClassInfo& C = analysis.owner();
  const ClassInfo& D = *analysis.target();
  const SyntaxTree& ct = *C.tree;
  const SyntaxTree& dt = *D.tree;
  const std::string_view csrc = ct.source;
  const std::string_view dsrc = dt.source;

  RefactoringPlan plan;
  plan.method = method_ref(C, method);
  plan.source_class = C.fqn;
  plan.target_class = D.fqn;
  plan.anchor = analysis.anchor();

  // Self parameter name that collides with nothing in the method or in D.
  std::set<std::string> taken;
  for (std::size_t i = method.node->first_token; i < method.node->last_token; ++i)
    if (ct.tokens[i].is_identifier()) taken.insert(ct.tokens[i].text);
  for (std::size_t i = D.node->first_token; i < D.node->last_token; ++i)
    if (dt.tokens[i].is_identifier()) taken.insert(dt.tokens[i].text);
  std::string self = "self";
  while (taken.count(self)) self += '_';

  const std::string owner_ref = type_reference(model, C, D);
  BodyRewrite body = analysis.body_rewrite(self, owner_ref);
  plan.needs_back_reference = body.back_reference;
  plan.self_param_name = body.back_reference ? self : "";
  std::vector<TextEdit> method_edits = std::move(body.edits);

  // Type names that resolve differently once the code lives in D.
  {
    const NameScope scope(model, C, &method, &analysis.scan());
    std::set<std::size_t> edited;
    for (const auto& e : method_edits) edited.insert(e.span.begin);
    for (std::size_t i = method.node->first_token; i < method.node->last_token; ++i) {
      const Token& t = ct.tokens[i];
      if (!t.is_identifier() || !starts_upper(t.text) || edited.count(t.span.begin)) continue;
      const std::size_t p = prev_sig(ct.tokens, i);
      const std::size_t n = next_sig(ct.tokens, i + 1);
      if (p != npos && (ct.tokens[p].is(".") || ct.tokens[p].is("@"))) continue;
      if (n < ct.tokens.size() && ct.tokens[n].is("(") && !(p != npos && ct.tokens[p].is("new")))
        continue;
      if (scope.lookup(t.text).kind != NameScope::Kind::Unknown) continue;
      auto from_c = model.resolve_type(t.text, C);
      if (from_c && model.resolve_type(t.text, D) != from_c)
        method_edits.push_back(TextEdit{t.span, *from_c});
    }
  }

  // Signature: drop the parameter anchor, append the back reference.
  const auto* pa = std::get_if<ParameterAnchor>(&plan.anchor);
  if (pa || plan.needs_back_reference) {
    std::size_t open = next_sig(ct.tokens, method.name_token + 1);
    auto call = call_args_at(ct.tokens, TokenRange{method.node->first_token, method.node->last_token}, open);
    if (!call) throw PlanningFailure(C.path, method.decl_span, "cannot locate the parameter list");
    std::vector<std::string> params;
    for (std::size_t i = 0; i < method.params.size(); ++i)
      if (!pa || i != pa->index) params.push_back(rewrite_slice(csrc, method.params[i].span, method_edits));
    if (plan.needs_back_reference) params.push_back(owner_ref + " " + self);
    std::string list;
    for (const auto& p : params) list += (list.empty() ? "" : ", ") + p;
    const Span inner{ct.tokens[call->open].span.end, ct.tokens[call->close].span.begin};
    std::erase_if(method_edits, [&](const TextEdit& e) { return inner.contains(e.span); });
    method_edits.push_back(TextEdit{inner, list});
  }

  // The method text, from its Javadoc to its closing brace.
  const std::size_t start = method.javadoc ? ct.tokens[*method.javadoc].span.begin : method.decl_span.begin;
  const std::size_t end = method.decl_span.end;
  std::string moved = rewrite_slice(csrc, Span{start, end}, method_edits);

  // Re-indent from C's member indentation to D's and adopt D's newlines.
  const std::size_t c_line = line_begin(csrc, start);
  const std::string c_indent =
      is_whitespace_only(csrc.substr(c_line, start - c_line)) ? std::string(csrc.substr(c_line, start - c_line)) : "";
  const std::string d_decl_indent = indent_of_line(dsrc, D.decl_span.begin);
  std::string d_indent;
  {
    const SyntaxNode* dbody = D.body;
    std::optional<std::size_t> first_member;
    for (const auto& c : dbody->children)
      if (const auto* node = std::get_if<std::unique_ptr<SyntaxNode>>(&c)) {
        first_member = (*node)->doc_comment ? dt.tokens[*(*node)->doc_comment].span.begin : (*node)->span.begin;
        break;
      }
    const std::size_t brace = dt.tokens[dbody->first_token].span.begin;
    if (first_member && dt.line_of(*first_member) != dt.line_of(brace) &&
        is_whitespace_only(dsrc.substr(line_begin(dsrc, *first_member),
                                       *first_member - line_begin(dsrc, *first_member)))) {
      d_indent = indent_of_line(dsrc, *first_member);
    } else {
      const std::string c_decl_indent = indent_of_line(csrc, C.decl_span.begin);
      std::string unit = c_indent.size() > c_decl_indent.size() && c_indent.starts_with(c_decl_indent)
                             ? c_indent.substr(c_decl_indent.size())
                             : "    ";
      d_indent = d_decl_indent + unit;
    }
  }
  const std::string nl = newline_of(dsrc);
  {
    std::string lf;
    for (std::size_t i = 0; i < moved.size(); ++i)
      if (!(moved[i] == '\r' && i + 1 < moved.size() && moved[i + 1] == '\n')) lf += moved[i];
    std::string out;
    std::size_t pos = 0;
    bool first = true;
    while (pos <= lf.size()) {
      std::size_t e = lf.find('\n', pos);
      if (e == std::string::npos) e = lf.size();
      std::string_view line = std::string_view(lf).substr(pos, e - pos);
      if (first) {
        out += d_indent;
      } else {
        out += nl;
        if (!c_indent.empty() && line.starts_with(c_indent)) {
          out += d_indent;
          line.remove_prefix(c_indent.size());
        } else if (c_indent.empty() && !line.empty()) {
          out += d_indent;
        }
      }
      out += line;
      first = false;
      pos = e + 1;
    }
    moved = std::move(out);
  }
  plan.moved_text = moved;

  std::map<std::string, std::vector<TextEdit>> edits;

  // (a) delete from C.
  {
    const std::size_t ls = line_begin(csrc, start);
    std::size_t after = end;
    while (after < csrc.size() && (csrc[after] == ' ' || csrc[after] == '\t')) ++after;
    const bool own_lines = is_whitespace_only(csrc.substr(ls, start - ls)) &&
                           (after == csrc.size() || csrc[after] == '\n' || csrc[after] == '\r');
    Span del{start, after};
    if (own_lines) {
      del = Span{ls, line_end(csrc, after)};
      // Drop one blank separator line above when nothing but a blank line
      // or the closing brace follows.
      if (ls > 0) {
        const std::size_t prev_ls = line_begin(csrc, ls - 1);
        std::string_view prev = csrc.substr(prev_ls, ls - prev_ls);
        auto blank = [](std::string_view l) {
          return std::all_of(l.begin(), l.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
        };
        const std::size_t next_end = line_end(csrc, del.end);
        std::string_view next = csrc.substr(del.end, next_end - del.end);
        const std::size_t cbrace = ct.tokens[C.body->last_token - 1].span.begin;
        const bool next_is_close = del.end <= cbrace && cbrace < next_end &&
                                   is_whitespace_only(csrc.substr(del.end, cbrace - del.end));
        if (prev_ls < ls && blank(prev) && (blank(next) || next_is_close) && prev_ls > line_begin(csrc, C.body_span.begin))
          del.begin = prev_ls;
      }
    }
    edits[C.path].push_back(TextEdit{del, ""});
  }

  // (b) insert into D before its closing brace.
  {
    const std::size_t close_tok = D.body->last_token - 1;
    const std::size_t brace = dt.tokens[close_tok].span.begin;
    const std::size_t ls = line_begin(dsrc, brace);
    if (ls > dt.tokens[D.body->first_token].span.begin && is_whitespace_only(dsrc.substr(ls, brace - ls))) {
      edits[D.path].push_back(TextEdit{Span{ls, ls}, nl + moved + nl});
    } else {
      std::size_t last = close_tok;
      while (last > D.body->first_token && dt.tokens[last - 1].kind == TokenKind::Whitespace) --last;
      const std::size_t gap_begin = dt.tokens[last - 1].span.end;
      edits[D.path].push_back(TextEdit{Span{gap_begin, brace}, nl + nl + moved + nl + d_decl_indent});
    }
  }

  // Imports the moved code relies on.
  if (C.path != D.path) {
    const FileScope& cs = model.scopes.at(C.path);
    const FileScope& ds = model.scopes.at(D.path);
    std::set<std::string> used;
    for (std::size_t i = method.node->first_token; i < method.node->last_token; ++i)
      if (ct.tokens[i].is_identifier()) used.insert(ct.tokens[i].text);
    std::set<std::string> top_level;
    for (const auto& [_, k] : model.classes)
      if (k.path == D.path && !k.is_nested) top_level.insert(k.simple_name);
    std::string block;
    for (const auto& imp : cs.imports) {
      bool present = std::any_of(ds.imports.begin(), ds.imports.end(), [&](const ImportInfo& o) {
        return o.name == imp.name && o.is_static == imp.is_static;
      });
      if (present) continue;
      const std::string last = imp.name.substr(imp.name.rfind('.') + 1);
      if (!imp.is_wildcard) {
        if (!used.count(last)) continue;
        if (!imp.is_static && top_level.count(last)) continue;
        for (const auto& o : ds.imports)
          if (!o.is_wildcard && o.is_static == imp.is_static &&
              o.name.substr(o.name.rfind('.') + 1) == last)
            throw PlanningFailure(D.path, D.decl_span,
                                  "import of " + imp.name + " clashes with " + o.name);
      }
      block += nl + "import " + (imp.is_static ? "static " : "") + imp.name + ";";
    }
    if (!block.empty()) {
      const SyntaxNode* last_import = nullptr;
      const SyntaxNode* package = nullptr;
      for (const auto& c : dt.root->children)
        if (const auto* node = std::get_if<std::unique_ptr<SyntaxNode>>(&c)) {
          if ((*node)->kind == NodeKind::ImportDecl) last_import = node->get();
          if ((*node)->kind == NodeKind::PackageDecl) package = node->get();
        }
      if (last_import) {
        edits[D.path].push_back(TextEdit{Span{last_import->span.end, last_import->span.end}, block});
      } else if (package) {
        edits[D.path].push_back(TextEdit{Span{package->span.end, package->span.end}, nl + block});
      } else {
        edits[D.path].push_back(TextEdit{Span{0, 0}, block.substr(nl.size()) + nl + nl});
      }
    }
  }

  // (e) call sites.
  for (const CallSite& site : analysis.call_sites()) {
    const SyntaxTree& st = *model.files.at(site.path);
    const auto& toks = st.tokens;
    const std::string recv =
        site.bare ? "this" : text_of(st, TokenRange{site.start_token, prev_sig(toks, site.name_token)});
    std::vector<std::string> args;
    for (const auto& a : site.args.args) args.push_back(text_of(st, TokenRange{a.first, a.last}));
    std::string call;
    if (pa) {
      const TokenRange anchor_arg = site.args.args[pa->index];
      std::string head = args[pa->index];
      if (!simple_expression(toks, anchor_arg)) head = "(" + head + ")";
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(pa->index));
      if (plan.needs_back_reference) args.push_back(recv);
      call = head + "." + method.name + "(";
    } else {
      const auto& fa = std::get<FieldAnchor>(plan.anchor);
      if (plan.needs_back_reference) args.push_back(recv);
      call = recv + "." + fa.field + "." + method.name + "(";
    }
    for (std::size_t i = 0; i < args.size(); ++i) call += (i ? ", " : "") + args[i];
    call += ")";
    edits[site.path].push_back(
        TextEdit{Span{toks[site.start_token].span.begin, toks[site.args.close].span.end}, call});
    ++plan.call_site_count;
  }

  // Every batch must apply cleanly.
  for (auto& [path, list] : edits) {
    std::stable_sort(list.begin(), list.end(), [](const TextEdit& a, const TextEdit& b) { return a.span < b.span; });
    for (std::size_t i = 1; i < list.size(); ++i)
      if (list[i].span.begin < list[i - 1].span.end ||
          (list[i].span.empty() && list[i - 1].span.empty() && list[i].span.begin == list[i - 1].span.begin))
        throw PlanningFailure(path, list[i].span, "rewrites overlap (nested call sites?)");
    plan.source_hashes[path] = content_hash(model.files.at(path)->source);
  }
  plan.edits = std::move(edits);
  return plan;
}

/// Applies a plan. `current` supplies file contents by path; files missing
/// from it are read from the model's root. Only edited files are returned.
inline std::map<std::string, std::string> execute(
    const RefactoringPlan& plan, const ProjectModel& model,
    const std::map<std::string, std::string>* current = nullptr) {
  std::map<std::string, std::string> sources;
  std::vector<std::string> stale;
  for (const auto& [path, _] : plan.edits) {
    std::string text;
    if (current && current->count(path)) text = current->at(path);
    else text = read_file(model.root / path);
    if (content_hash(text) != plan.source_hashes.at(path)) stale.push_back(path);
    sources.emplace(path, std::move(text));
  }
  if (!stale.empty()) throw StaleSources(std::move(stale));

  std::map<std::string, std::string> out;
  for (const auto& [path, list] : plan.edits) {
    std::string text = apply_edits(sources.at(path), list);
    const SyntaxTree reparsed = parse_file(text, path);
    const std::size_t before = model.files.at(path)->parse_notes.size();
    if (reparsed.parse_notes.size() > before)
      throw PlanningFailure(path, reparsed.parse_notes.front().span,
                            "rewritten file no longer parses cleanly: " +
                                reparsed.parse_notes.front().message);
    out.emplace(path, std::move(text));
  }
  return out;
}

/// Writes executed outputs below `root`. Call from a single thread.
inline void write_outputs(const std::map<std::string, std::string>& outputs,
                          const std::filesystem::path& root) {
  for (const auto& [path, text] : outputs) write_file(root / path, text);
}

/// Unified-diff-style preview with three lines of context per hunk.
inline std::string preview(const RefactoringPlan& plan, const ProjectModel& model) {
  constexpr std::size_t kContext = 3;
  std::string out;
  for (const auto& [path, list] : plan.edits) {
    const SyntaxTree& tree = *model.files.at(path);
    const std::string_view src = tree.source;
    out += "--- a/" + path + "\n+++ b/" + path + "\n";
    // Group edits whose context windows touch.
    std::vector<std::vector<const TextEdit*>> groups;
    std::size_t group_last_line = 0;
    for (const auto& e : list) {
      const std::size_t first = tree.line_of(e.span.begin);
      if (groups.empty() || first > group_last_line + 2 * kContext + 1) groups.emplace_back();
      groups.back().push_back(&e);
      group_last_line = tree.line_of(e.span.end > e.span.begin ? e.span.end - 1 : e.span.begin);
    }
    long delta = 0;
    for (const auto& g : groups) {
      const std::size_t first_line = tree.line_of(g.front()->span.begin);
      const TextEdit& last = *g.back();
      const std::size_t last_line = tree.line_of(last.span.end > last.span.begin ? last.span.end - 1 : last.span.begin);
      std::size_t lines = tree.lines.line_count();
      if (lines > 1 && src.ends_with('\n')) --lines;  // no phantom line after the final newline
      const std::size_t ctx_first = first_line > kContext ? first_line - kContext : 1;
      const std::size_t ctx_last = std::min(lines, last_line + kContext);
      auto line_text = [&](std::size_t l) {
        const std::size_t b = tree.lines.line_start(l);
        const std::size_t e = l < lines ? tree.lines.line_start(l + 1) : src.size();
        return std::string(src.substr(b, e - b));
      };
      const std::size_t region_b = tree.lines.line_start(first_line);
      const std::size_t region_e = last_line < lines ? tree.lines.line_start(last_line + 1) : src.size();
      std::vector<TextEdit> local;
      for (const TextEdit* e : g)
        local.push_back(TextEdit{Span{e->span.begin - region_b, e->span.end - region_b}, e->replacement});
      const std::string old_region(src.substr(region_b, region_e - region_b));
      const std::string new_region = apply_edits(old_region, local);
      auto split = [](const std::string& s) {
        std::vector<std::string> v;
        std::size_t pos = 0;
        while (pos < s.size()) {
          std::size_t e = s.find('\n', pos);
          if (e == std::string::npos) e = s.size() - 1;
          v.push_back(s.substr(pos, e + 1 - pos));
          pos = e + 1;
        }
        return v;
      };
      const auto old_lines = split(old_region);
      const auto new_lines = split(new_region);
      const std::size_t before = first_line - ctx_first;
      const std::size_t after = ctx_last - last_line;
      const std::size_t old_count = before + old_lines.size() + after;
      const std::size_t new_count = before + new_lines.size() + after;
      out += "@@ -" + std::to_string(ctx_first) + "," + std::to_string(old_count) + " +" +
             std::to_string(static_cast<long>(ctx_first) + delta) + "," + std::to_string(new_count) + " @@\n";
      auto emit = [&](char mark, std::string l) {
        if (!l.ends_with('\n')) l += "\n\\ No newline at end of file\n";
        out += mark + l;
      };
      for (std::size_t l = ctx_first; l < first_line; ++l) emit(' ', line_text(l));
      for (const auto& l : old_lines) emit('-', l);
      for (const auto& l : new_lines) emit('+', l);
      for (std::size_t l = last_line + 1; l <= ctx_last; ++l) emit(' ', line_text(l));
      delta += static_cast<long>(new_lines.size()) - static_cast<long>(old_lines.size());
    }
  }
  return out;
}

/// Envy target for `method`, when the detector has a finding for it.
inline std::optional<std::string> envy_target(const MethodInfo& method, const ProjectModel& model,
                                              Counting mode = Counting::Distinct) {
  const ClassInfo* owner = model.find(method.owner);
  if (!owner) return std::nullopt;
  auto f = envy_of(method, *owner, model, mode);
  if (!f) return std::nullopt;
  return f->target;
}

}  // namespace psilite
