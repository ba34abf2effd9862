#pragma once

// Project-wide view of the classes, fields and methods declared in a set of
// parsed files. Name resolution only knows about classes in the set.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psilite/syntax.hpp"

namespace psilite {

enum class Visibility { Public, Protected, Package, Private };

constexpr std::string_view to_string(Visibility v) noexcept {
  switch (v) {
    case Visibility::Public: return "public";
    case Visibility::Protected: return "protected";
    case Visibility::Package: return "package";
    case Visibility::Private: return "private";
  }
  return "?";
}

struct FieldInfo {
  std::string name;
  std::string declared_type_text;
  Visibility visibility = Visibility::Package;
  bool is_static = false;
  Span decl_span;  // the whole declaration, shared by sibling declarators
  std::size_t name_token = npos;
};

struct ParamInfo {
  std::string name;
  std::string declared_type_text;
  Span span;
  std::size_t name_token = npos;
};

struct MethodInfo {
  std::string name;
  std::string owner;  // FQN of the declaring class
  std::vector<ParamInfo> params;
  std::string return_type_text;  // empty for constructors
  Visibility visibility = Visibility::Package;
  bool is_static = false;
  bool is_constructor = false;
  bool is_abstract = false;
  const SyntaxNode* node = nullptr;
  const SyntaxNode* body = nullptr;
  std::optional<std::size_t> javadoc;  // token index of the attached doc comment
  Span decl_span;
  std::size_t name_token = npos;

  bool has_body() const noexcept { return body != nullptr; }
};

struct ImportInfo {
  std::string name;  // dotted; ends in ".*" for on-demand imports
  bool is_static = false;
  bool is_wildcard = false;
};

struct FileScope {
  std::string package_name;
  std::vector<ImportInfo> imports;
};

struct ClassInfo {
  std::string fqn;
  std::string simple_name;
  std::string package_name;
  std::string enclosing;  // FQN of the enclosing class, empty for top level
  std::string path;
  Span decl_span;
  Span body_span;
  std::size_t keyword_token = npos;
  std::vector<FieldInfo> fields;
  std::vector<MethodInfo> methods;
  bool is_nested = false;
  std::string extends_text;
  std::vector<std::string> implements_text;
  const SyntaxTree* tree = nullptr;
  const SyntaxNode* node = nullptr;
  const SyntaxNode* body = nullptr;

  const FieldInfo* field(std::string_view name) const {
    for (const auto& f : fields)
      if (f.name == name) return &f;
    return nullptr;
  }
  std::vector<const MethodInfo*> methods_named(std::string_view name) const {
    std::vector<const MethodInfo*> out;
    for (const auto& m : methods)
      if (m.name == name && !m.is_constructor) out.push_back(&m);
    return out;
  }
  bool has_method(std::string_view name, std::size_t arity) const {
    for (const auto* m : methods_named(name))
      if (m->params.size() == arity) return true;
    return false;
  }
};

class DuplicateFqn : public Error {
 public:
  DuplicateFqn(std::string fqn, std::string first_path, std::string second_path)
      : Error("class " + fqn + " is declared twice: in " + first_path + " and in " + second_path),
        fqn_(std::move(fqn)),
        paths_{std::move(first_path), std::move(second_path)} {}
  const std::string& fqn() const noexcept { return fqn_; }
  const std::pair<std::string, std::string>& paths() const noexcept { return paths_; }

 private:
  std::string fqn_;
  std::pair<std::string, std::string> paths_;
};

namespace detail {

inline std::string strip_generics(std::string_view text) {
  std::string out;
  int depth = 0;
  for (char c : text) {
    if (c == '<') ++depth;
    else if (c == '>') depth = std::max(0, depth - 1);
    else if (depth == 0 && c != ' ' && c != '\t' && c != '\n' && c != '\r') out += c;
  }
  return out;
}

inline std::string strip_annotations(std::string_view text) {
  // Type-use annotations survive in TypeRefText as "@Name" or "@Name(...)".
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '@') {
      ++i;
      while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_' ||
                                 text[i] == '$' || text[i] == '.'))
        ++i;
      if (i < text.size() && text[i] == '(') {
        int depth = 0;
        for (; i < text.size(); ++i) {
          if (text[i] == '(') ++depth;
          if (text[i] == ')' && --depth == 0) {
            ++i;
            break;
          }
        }
      }
      continue;
    }
    out += text[i++];
  }
  return out;
}

inline Visibility visibility_of(const SyntaxTree& tree, const SyntaxNode& node, bool& is_static) {
  Visibility v = Visibility::Package;
  is_static = false;
  for (const auto& c : node.children) {
    const auto* idx = std::get_if<std::size_t>(&c);
    if (!idx) break;  // modifiers precede the first child node
    if (*idx == node.name_token) break;
    const Token& t = tree.tokens[*idx];
    if (t.kind != TokenKind::Keyword) continue;
    if (t.text == "public") v = Visibility::Public;
    else if (t.text == "protected") v = Visibility::Protected;
    else if (t.text == "private") v = Visibility::Private;
    else if (t.text == "static") is_static = true;
  }
  return v;
}

}  // namespace detail

/// Immutable semantic view of a set of parsed files.
class ProjectModel {
 public:
  std::filesystem::path root;
  std::map<std::string, ClassInfo> classes;                          // by FQN
  std::map<std::string, std::shared_ptr<const SyntaxTree>> files;   // by relative path
  std::map<std::string, FileScope> scopes;                           // by relative path

  const ClassInfo* find(std::string_view fqn) const {
    auto it = classes.find(std::string(fqn));
    return it == classes.end() ? nullptr : &it->second;
  }

  const ClassInfo* enclosing_of(const ClassInfo& c) const {
    return c.enclosing.empty() ? nullptr : find(c.enclosing);
  }

  /// Innermost class whose body contains `offset` in file `path`.
  const ClassInfo* class_at(std::string_view path, std::size_t offset) const {
    const ClassInfo* best = nullptr;
    for (const auto& [fqn, c] : classes) {
      if (c.path != path || !c.body_span.contains(offset)) continue;
      if (!best || best->body_span.contains(c.body_span)) best = &c;
    }
    return best;
  }

  /// Method whose declaration contains `offset`, searched within `owner`.
  const MethodInfo* method_at(const ClassInfo& owner, std::size_t offset) const {
    for (const auto& m : owner.methods)
      if (m.decl_span.contains(offset)) return &m;
    return nullptr;
  }

  /// Resolves a declared type to a project class FQN. Generic arguments are
  /// ignored; arrays and unknown (e.g. JDK) types yield nullopt.
  std::optional<std::string> resolve_type(std::string_view type_text, const ClassInfo& context) const {
    std::string t = detail::strip_generics(detail::strip_annotations(type_text));
    if (t.empty() || t.find('[') != std::string::npos || t.find("...") != std::string::npos)
      return std::nullopt;
    if (classes.count(t)) return t;

    const std::string head = t.substr(0, t.find('.'));
    const std::string rest = t.substr(head.size());
    if (auto it = scopes.find(context.path); it != scopes.end()) {
      for (const auto& imp : it->second.imports) {
        if (imp.is_static) continue;
        if (imp.is_wildcard) {
          std::string cand = imp.name.substr(0, imp.name.size() - 1) + t;  // keep the '.'
          if (classes.count(cand)) return cand;
          continue;
        }
        const auto dot = imp.name.rfind('.');
        const std::string last = dot == std::string::npos ? imp.name : imp.name.substr(dot + 1);
        if (last == head && classes.count(imp.name + rest)) return imp.name + rest;
      }
    }
    const std::string same_pkg = context.package_name.empty() ? t : context.package_name + "." + t;
    if (classes.count(same_pkg)) return same_pkg;
    for (const ClassInfo* c = &context; c; c = enclosing_of(*c)) {
      std::string cand = c->fqn + "." + t;
      if (classes.count(cand)) return cand;
    }
    return std::nullopt;
  }
};

namespace detail {

inline void collect_class(const SyntaxTree& tree, const SyntaxNode& node, const FileScope& scope,
                          const std::string& outer_fqn, ProjectModel& model) {
  ClassInfo info;
  info.simple_name = node.name;
  info.package_name = scope.package_name;
  info.enclosing = outer_fqn;
  info.is_nested = !outer_fqn.empty();
  info.fqn = !outer_fqn.empty()              ? outer_fqn + "." + node.name
             : scope.package_name.empty()    ? node.name
                                             : scope.package_name + "." + node.name;
  info.path = tree.path;
  info.decl_span = node.span;
  info.tree = &tree;
  info.node = &node;
  info.body = node.first_child(NodeKind::Body);
  if (info.body) info.body_span = info.body->span;

  // Header: `class Name [<..>] [extends X] [implements Y, Z] {`
  enum { None, Extends, Implements, Other } clause = None;
  int angle = 0;
  for (const auto& c : node.children) {
    const auto* idx = std::get_if<std::size_t>(&c);
    if (!idx) break;
    const Token& t = tree.tokens[*idx];
    if (t.is_trivia()) continue;
    if (t.is("class") && info.keyword_token == npos) info.keyword_token = *idx;
    if (*idx <= node.name_token) continue;
    if (t.is("<")) ++angle;
    if (t.is(">")) --angle;
    if (angle == 0 && t.is("extends")) { clause = Extends; continue; }
    if (angle == 0 && t.is("implements")) { clause = Implements; continue; }
    if (angle == 0 && t.is_identifier() && t.text == "permits") { clause = Other; continue; }
    if (clause == Extends) info.extends_text += t.text;
    if (clause == Implements) {
      if (angle == 0 && t.is(",")) info.implements_text.emplace_back();
      else {
        if (info.implements_text.empty()) info.implements_text.emplace_back();
        info.implements_text.back() += t.text;
      }
    }
  }

  std::vector<const SyntaxNode*> nested;
  if (info.body) {
    for (const auto& c : info.body->children) {
      const auto* p = std::get_if<std::unique_ptr<SyntaxNode>>(&c);
      if (!p) continue;
      const SyntaxNode& member = **p;
      if (member.kind == NodeKind::ClassDecl) {
        nested.push_back(&member);
      } else if (member.kind == NodeKind::FieldDecl) {
        bool is_static = false;
        const Visibility vis = visibility_of(tree, member, is_static);
        const SyntaxNode* type = member.first_child(NodeKind::TypeRefText);
        for (const SyntaxNode* d : member.child_nodes(NodeKind::VarDeclarator)) {
          FieldInfo f;
          f.name = d->name;
          f.declared_type_text = type ? type->name : std::string();
          // `int a[]` style dimensions belong to the declarator.
          for (std::size_t i = d->name_token + 1; i < d->last_token; ++i) {
            const Token& t = tree.tokens[i];
            if (t.is_trivia()) continue;
            if (t.is("[") || t.is("]")) f.declared_type_text += t.text;
            else break;
          }
          f.visibility = vis;
          f.is_static = is_static;
          f.decl_span = member.span;
          f.name_token = d->name_token;
          info.fields.push_back(std::move(f));
        }
      } else if (member.kind == NodeKind::MethodDecl) {
        MethodInfo m;
        m.name = member.name;
        m.owner = info.fqn;
        m.visibility = visibility_of(tree, member, m.is_static);
        const SyntaxNode* ret = member.first_child(NodeKind::TypeRefText);
        m.is_constructor = ret == nullptr;
        if (ret) m.return_type_text = ret->name;
        for (const SyntaxNode* p : member.child_nodes(NodeKind::Param)) {
          ParamInfo pi;
          pi.name = p->name;
          const SyntaxNode* pt = p->first_child(NodeKind::TypeRefText);
          pi.declared_type_text = pt ? pt->name : std::string();
          pi.span = p->span;
          pi.name_token = p->name_token;
          m.params.push_back(std::move(pi));
        }
        m.node = &member;
        m.body = member.first_child(NodeKind::Body);
        m.is_abstract = m.body == nullptr;
        m.javadoc = member.doc_comment;
        m.decl_span = member.span;
        m.name_token = member.name_token;
        info.methods.push_back(std::move(m));
      }
    }
  }

  const std::string fqn = info.fqn;
  if (auto it = model.classes.find(fqn); it != model.classes.end())
    throw DuplicateFqn(fqn, it->second.path, info.path);
  model.classes.emplace(fqn, std::move(info));
  for (const SyntaxNode* n : nested) collect_class(tree, *n, scope, fqn, model);
}

}  // namespace detail

/// Builds the model. Trees are keyed by path, so the result does not depend
/// on the order of `trees`.
inline ProjectModel build_model(std::vector<std::shared_ptr<const SyntaxTree>> trees,
                                std::filesystem::path root = {}) {
  ProjectModel model;
  model.root = std::move(root);
  std::sort(trees.begin(), trees.end(),
            [](const auto& a, const auto& b) { return a->path < b->path; });
  for (auto& t : trees) {
    if (model.files.count(t->path)) throw Error("file " + t->path + " was given twice");
    model.files.emplace(t->path, t);
  }
  for (const auto& [path, tree] : model.files) {
    FileScope scope;
    std::vector<const SyntaxNode*> classes;
    for (const auto& c : tree->root->children) {
      const auto* p = std::get_if<std::unique_ptr<SyntaxNode>>(&c);
      if (!p) continue;
      const SyntaxNode& n = **p;
      if (n.kind == NodeKind::PackageDecl) {
        scope.package_name = n.name;
      } else if (n.kind == NodeKind::ImportDecl) {
        ImportInfo imp;
        imp.name = n.name;
        for (std::size_t i = n.first_token; i < n.last_token; ++i)
          if (tree->tokens[i].is("static")) imp.is_static = true;
        imp.is_wildcard = imp.name.size() > 2 && imp.name.ends_with(".*");
        scope.imports.push_back(std::move(imp));
      } else if (n.kind == NodeKind::ClassDecl) {
        classes.push_back(&n);
      }
    }
    for (const SyntaxNode* n : classes) detail::collect_class(*tree, *n, scope, "", model);
    model.scopes.emplace(path, std::move(scope));
  }
  return model;
}

/// Convenience: resolve `type_text` as seen from `context`.
inline std::optional<std::string> resolve_type(std::string_view type_text, const ClassInfo& context,
                                               const ProjectModel& model) {
  return model.resolve_type(type_text, context);
}

}  // namespace psilite
