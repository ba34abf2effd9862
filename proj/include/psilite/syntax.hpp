#pragma once

// Lossless lexing and tolerant parsing of a Java subset into a concrete
// syntax tree. Every byte of the input belongs to exactly one token and every
// token hangs off exactly one node, so rendering the tree reproduces the input.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace psilite {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Half-open byte range [begin, end) into a source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  constexpr std::size_t size() const noexcept { return end - begin; }
  constexpr bool empty() const noexcept { return begin == end; }
  constexpr bool contains(const Span& o) const noexcept {
    return begin <= o.begin && o.end <= end;
  }
  constexpr bool contains(std::size_t offset) const noexcept {
    return begin <= offset && offset < end;
  }
  friend constexpr bool operator==(const Span&, const Span&) = default;
  friend constexpr auto operator<=>(const Span&, const Span&) = default;
};

enum class TokenKind {
  Keyword,
  Identifier,
  Number,
  String,
  Char,
  Punct,
  Whitespace,
  LineComment,
  BlockComment,
  DocComment,
  Unknown,
};

constexpr std::string_view to_string(TokenKind k) noexcept {
  switch (k) {
    case TokenKind::Keyword: return "Keyword";
    case TokenKind::Identifier: return "Identifier";
    case TokenKind::Number: return "Number";
    case TokenKind::String: return "String";
    case TokenKind::Char: return "Char";
    case TokenKind::Punct: return "Punct";
    case TokenKind::Whitespace: return "Whitespace";
    case TokenKind::LineComment: return "LineComment";
    case TokenKind::BlockComment: return "BlockComment";
    case TokenKind::DocComment: return "DocComment";
    case TokenKind::Unknown: return "Unknown";
  }
  return "?";
}

struct Token {
  TokenKind kind = TokenKind::Unknown;
  std::string text;
  Span span;

  bool is_trivia() const noexcept {
    return kind == TokenKind::Whitespace || kind == TokenKind::LineComment ||
           kind == TokenKind::BlockComment || kind == TokenKind::DocComment;
  }
  bool is(std::string_view t) const noexcept {
    return (kind == TokenKind::Punct || kind == TokenKind::Keyword) && text == t;
  }
  bool is_identifier() const noexcept { return kind == TokenKind::Identifier; }
};

namespace detail {

inline constexpr std::array<std::string_view, 53> kKeywords = {
    "abstract", "assert",     "boolean",   "break",      "byte",     "case",
    "catch",    "char",       "class",     "const",      "continue", "default",
    "do",       "double",     "else",      "enum",       "extends",  "final",
    "finally",  "float",      "for",       "goto",       "if",       "implements",
    "import",   "instanceof", "int",       "interface",  "long",     "native",
    "new",      "package",    "private",   "protected",  "public",   "return",
    "short",    "static",     "strictfp",  "super",      "switch",   "synchronized",
    "this",     "throw",      "throws",    "transient",  "try",      "void",
    "volatile", "while",      "true",      "false",      "null",
};

// Longest match first. '>' is deliberately never merged so that nested
// generic closers (`List<List<A>>`) stay one token per bracket; shift and
// comparison operators built from '>' appear as consecutive tokens.
inline constexpr std::array<std::string_view, 20> kMultiPunct = {
    "...", "<<=", "->", "::", "++", "--", "&&", "||", "==", "!=",
    "<=",  "<<",  "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
};

inline constexpr std::string_view kSinglePunct = "(){}[];,.@=<>!~?:+-*/&|^%";

inline bool is_ident_start(unsigned char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' ||
         c >= 0x80;
}
inline bool is_ident_part(unsigned char c) noexcept {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}
inline bool is_digit(unsigned char c) noexcept { return c >= '0' && c <= '9'; }
inline bool is_space(unsigned char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

inline bool is_keyword(std::string_view s) noexcept {
  return std::find(kKeywords.begin(), kKeywords.end(), s) != kKeywords.end();
}

// Scans a quoted literal starting at `pos` (which holds `quote`). Returns the
// end offset and whether the literal was properly closed on the same line.
inline std::pair<std::size_t, bool> scan_quoted(std::string_view s, std::size_t pos,
                                                char quote) {
  std::size_t i = pos + 1;
  while (i < s.size()) {
    char c = s[i];
    if (c == '\\') {
      if (i + 1 < s.size() && s[i + 1] != '\n' && s[i + 1] != '\r') {
        i += 2;
        continue;
      }
      ++i;
      continue;
    }
    if (c == '\n' || c == '\r') return {i, false};
    if (c == quote) return {i + 1, true};
    ++i;
  }
  return {i, false};
}

inline std::pair<std::size_t, bool> scan_text_block(std::string_view s, std::size_t pos) {
  std::size_t i = pos + 3;
  while (i < s.size()) {
    if (s[i] == '\\') {
      i += 2;
      continue;
    }
    if (s.compare(i, 3, "\"\"\"") == 0) return {i + 3, true};
    ++i;
  }
  return {s.size(), false};
}

inline std::size_t scan_number(std::string_view s, std::size_t pos) {
  const bool hex = s.size() > pos + 1 && s[pos] == '0' && (s[pos + 1] == 'x' || s[pos + 1] == 'X');
  std::size_t i = pos;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (is_ident_part(c) && c < 0x80) {
      const bool exponent = hex ? (c == 'p' || c == 'P') : (c == 'e' || c == 'E');
      ++i;
      if (exponent && i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
      continue;
    }
    if (c == '.' && !(i + 1 < s.size() && s[i + 1] == '.')) {
      ++i;
      continue;
    }
    break;
  }
  return i;
}

}  // namespace detail

/// Splits `source` into tokens covering every byte. Never fails: bytes that
/// fit no lexical rule (and unterminated literals or comments) become
/// Unknown tokens.
inline std::vector<Token> tokenize(std::string_view source) {
  using namespace detail;
  std::vector<Token> out;
  out.reserve(source.size() / 3 + 1);
  std::size_t i = 0;
  const std::size_t n = source.size();
  auto emit = [&](TokenKind kind, std::size_t end) {
    out.push_back(Token{kind, std::string(source.substr(i, end - i)), Span{i, end}});
    i = end;
  };
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(source[i]);
    if (is_space(c)) {
      std::size_t j = i + 1;
      while (j < n && is_space(static_cast<unsigned char>(source[j]))) ++j;
      emit(TokenKind::Whitespace, j);
      continue;
    }
    if (c == '/' && i + 1 < n && source[i + 1] == '/') {
      std::size_t j = i + 2;
      while (j < n && source[j] != '\n' && source[j] != '\r') ++j;
      emit(TokenKind::LineComment, j);
      continue;
    }
    if (c == '/' && i + 1 < n && source[i + 1] == '*') {
      const std::size_t close = source.find("*/", i + 2);
      if (close == std::string_view::npos) {
        emit(TokenKind::Unknown, n);
        continue;
      }
      const std::size_t end = close + 2;
      const bool doc = end - i >= 5 && source[i + 2] == '*';
      emit(doc ? TokenKind::DocComment : TokenKind::BlockComment, end);
      continue;
    }
    if (c == '"') {
      auto [end, closed] = source.compare(i, 3, "\"\"\"") == 0 ? scan_text_block(source, i)
                                                               : scan_quoted(source, i, '"');
      emit(closed ? TokenKind::String : TokenKind::Unknown, end);
      continue;
    }
    if (c == '\'') {
      auto [end, closed] = scan_quoted(source, i, '\'');
      emit(closed ? TokenKind::Char : TokenKind::Unknown, end);
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(static_cast<unsigned char>(source[i + 1])))) {
      emit(TokenKind::Number, scan_number(source, i));
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && is_ident_part(static_cast<unsigned char>(source[j]))) ++j;
      emit(is_keyword(source.substr(i, j - i)) ? TokenKind::Keyword : TokenKind::Identifier, j);
      continue;
    }
    bool matched = false;
    for (std::string_view p : kMultiPunct) {
      if (source.compare(i, p.size(), p) == 0) {
        emit(TokenKind::Punct, i + p.size());
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (kSinglePunct.find(static_cast<char>(c)) != std::string_view::npos) {
      emit(TokenKind::Punct, i + 1);
      continue;
    }
    std::size_t j = i + 1;
    while (j < n) {
      const unsigned char d = static_cast<unsigned char>(source[j]);
      if (is_space(d) || is_ident_start(d) || is_digit(d) || d == '"' || d == '\'' || d == '/' ||
          kSinglePunct.find(static_cast<char>(d)) != std::string_view::npos)
        break;
      ++j;
    }
    emit(TokenKind::Unknown, j);
  }
  return out;
}

enum class NodeKind {
  File,
  PackageDecl,
  ImportDecl,
  ClassDecl,
  FieldDecl,
  VarDeclarator,
  MethodDecl,
  Param,
  TypeRefText,
  Body,
  TokenRun,
};

constexpr std::string_view to_string(NodeKind k) noexcept {
  switch (k) {
    case NodeKind::File: return "File";
    case NodeKind::PackageDecl: return "PackageDecl";
    case NodeKind::ImportDecl: return "ImportDecl";
    case NodeKind::ClassDecl: return "ClassDecl";
    case NodeKind::FieldDecl: return "FieldDecl";
    case NodeKind::VarDeclarator: return "VarDeclarator";
    case NodeKind::MethodDecl: return "MethodDecl";
    case NodeKind::Param: return "Param";
    case NodeKind::TypeRefText: return "TypeRefText";
    case NodeKind::Body: return "Body";
    case NodeKind::TokenRun: return "TokenRun";
  }
  return "?";
}

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

struct SyntaxNode;

/// A child is either a token (index into SyntaxTree::tokens) or a subtree.
using SyntaxElement = std::variant<std::size_t, std::unique_ptr<SyntaxNode>>;

struct SyntaxNode {
  NodeKind kind = NodeKind::TokenRun;
  Span span;
  /// Declared name for ClassDecl/MethodDecl/FieldDecl/VarDeclarator/Param,
  /// dotted name for PackageDecl/ImportDecl, whitespace-free text for
  /// TypeRefText.
  std::string name;
  std::size_t name_token = npos;
  /// Javadoc bound to this declaration, if any (token index).
  std::optional<std::size_t> doc_comment;
  std::size_t first_token = 0;
  std::size_t last_token = 0;  // one past the end
  std::vector<SyntaxElement> children;

  const SyntaxNode* first_child(NodeKind k) const {
    for (const auto& c : children)
      if (auto* p = std::get_if<std::unique_ptr<SyntaxNode>>(&c); p && (*p)->kind == k)
        return p->get();
    return nullptr;
  }

  std::vector<const SyntaxNode*> child_nodes(NodeKind k) const {
    std::vector<const SyntaxNode*> out;
    for (const auto& c : children)
      if (auto* p = std::get_if<std::unique_ptr<SyntaxNode>>(&c); p && (*p)->kind == k)
        out.push_back(p->get());
    return out;
  }

  template <typename F>
  void visit(F&& f) const {
    f(*this);
    for (const auto& c : children)
      if (auto* p = std::get_if<std::unique_ptr<SyntaxNode>>(&c)) (*p)->visit(f);
  }
};

struct ParseNote {
  Span span;
  std::string message;
};

/// Maps byte offsets to 1-based line numbers.
class LineIndex {
 public:
  LineIndex() = default;
  explicit LineIndex(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i)
      if (text[i] == '\n') starts_.push_back(i + 1);
  }
  std::size_t line_of(std::size_t offset) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
    return static_cast<std::size_t>(it - starts_.begin());
  }
  std::size_t line_start(std::size_t line) const { return starts_.at(line - 1); }
  std::size_t line_count() const { return starts_.size(); }

 private:
  std::vector<std::size_t> starts_{0};
};

struct SyntaxTree {
  std::string path;
  std::string source;
  std::vector<Token> tokens;
  std::unique_ptr<SyntaxNode> root;
  std::vector<ParseNote> parse_notes;
  LineIndex lines;

  std::string_view text(Span s) const { return std::string_view(source).substr(s.begin, s.size()); }
  std::size_t line_of(std::size_t offset) const { return lines.line_of(offset); }
};

namespace detail {

class Parser {
 public:
  Parser(const std::vector<Token>& toks, std::vector<ParseNote>& notes)
      : toks_(toks), notes_(notes) {
    for (std::size_t i = 0; i < toks.size(); ++i)
      if (!toks[i].is_trivia()) sig_.push_back(i);
  }

  std::unique_ptr<SyntaxNode> parse_file() {
    Draft file{NodeKind::File, 0, toks_.size()};
    std::size_t p = 0;
    while (p < sig_.size()) {
      const std::size_t start = p;
      if (is(p, ";")) {
        ++p;
        continue;
      }
      std::size_t core = skip_modifiers(p);
      if (is(core, "package") || is(core, "import")) {
        const bool pkg = is(core, "package");
        std::size_t q = core + 1;
        std::string name;
        while (q < sig_.size() && !is(q, ";") && !is(q, "{") && !is(q, "}")) {
          if (!is(q, "static")) name += tok(q).text;
          ++q;
        }
        if (is(q, ";")) {
          Draft d{pkg ? NodeKind::PackageDecl : NodeKind::ImportDecl, first(start), last(q)};
          d.name = std::move(name);
          file.kids.push_back(std::move(d));
          p = q + 1;
          continue;
        }
        p = recover(start, false, "malformed " + std::string(pkg ? "package" : "import") +
                                      " declaration",
                    file);
        continue;
      }
      if (is(core, "class")) {
        if (auto d = parse_class(start, core, p)) {
          file.kids.push_back(std::move(*d));
          continue;
        }
        p = recover(start, false, "malformed class declaration", file);
        continue;
      }
      if (unsupported_type(core)) {
        p = skip_unsupported(start, core, file);
        continue;
      }
      p = recover(start, false, "unrecognized top-level tokens", file);
    }
    return materialize(file);
  }

 private:
  struct Draft {
    NodeKind kind;
    std::size_t first = 0;
    std::size_t last = 0;
    std::string name{};
    std::size_t name_token = npos;
    std::optional<std::size_t> doc{};
    std::vector<Draft> kids{};
  };

  const std::vector<Token>& toks_;
  std::vector<ParseNote>& notes_;
  std::vector<std::size_t> sig_;
  inline static const Token kEnd{TokenKind::Unknown, "", Span{}};

  const Token& tok(std::size_t p) const { return p < sig_.size() ? toks_[sig_[p]] : kEnd; }
  bool is(std::size_t p, std::string_view t) const { return p < sig_.size() && tok(p).is(t); }
  bool ident(std::size_t p) const { return p < sig_.size() && tok(p).is_identifier(); }
  std::size_t first(std::size_t p) const { return sig_[p]; }
  std::size_t last(std::size_t p) const { return sig_[p] + 1; }  // inclusive sig pos -> end index

  static bool is_modifier_keyword(const Token& t) {
    static constexpr std::array<std::string_view, 12> mods = {
        "public", "protected", "private",  "static",       "final",    "abstract",
        "native", "transient", "volatile", "synchronized", "strictfp", "default"};
    return t.kind == TokenKind::Keyword &&
           std::find(mods.begin(), mods.end(), t.text) != mods.end();
  }

  static bool is_primitive(const Token& t) {
    static constexpr std::array<std::string_view, 9> prims = {
        "boolean", "byte", "char", "short", "int", "long", "float", "double", "void"};
    return t.kind == TokenKind::Keyword &&
           std::find(prims.begin(), prims.end(), t.text) != prims.end();
  }

  // Position after the balanced group opened at p; nullopt when it never closes.
  std::optional<std::size_t> match(std::size_t p) const {
    int depth = 0;
    for (std::size_t q = p; q < sig_.size(); ++q) {
      const Token& t = tok(q);
      if (t.kind != TokenKind::Punct) continue;
      if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
      if (t.text == ")" || t.text == "]" || t.text == "}") {
        if (--depth == 0) return q + 1;
      }
    }
    return std::nullopt;
  }

  std::size_t skip_balanced(std::size_t p) const { return match(p).value_or(sig_.size()); }

  std::optional<std::size_t> skip_annotation(std::size_t p) const {
    if (!is(p, "@") || !ident(p + 1)) return std::nullopt;
    std::size_t q = p + 2;
    while (is(q, ".") && ident(q + 1)) q += 2;
    if (is(q, "(")) {
      auto e = match(q);
      if (!e) return std::nullopt;
      q = *e;
    }
    return q;
  }

  std::size_t skip_modifiers(std::size_t p) const {
    for (;;) {
      if (auto a = skip_annotation(p)) {
        p = *a;
        continue;
      }
      if (is_modifier_keyword(tok(p)) && p < sig_.size()) {
        ++p;
        continue;
      }
      if (ident(p) && tok(p).text == "sealed" && (is(p + 1, "class") || is_modifier_keyword(tok(p + 1)) ||
                                                  is(p + 1, "interface"))) {
        ++p;
        continue;
      }
      if (ident(p) && tok(p).text == "non" && is(p + 1, "-") && ident(p + 2) &&
          tok(p + 2).text == "sealed") {
        p += 3;
        continue;
      }
      return p;
    }
  }

  // Generic argument list starting at '<'. Only type-shaped tokens may appear.
  std::optional<std::size_t> skip_type_args(std::size_t p) const {
    int depth = 0;
    for (std::size_t q = p; q < sig_.size(); ++q) {
      const Token& t = tok(q);
      if (t.is("<")) {
        ++depth;
        continue;
      }
      if (t.is(">")) {
        if (--depth == 0) return q + 1;
        continue;
      }
      if (t.is_identifier() || is_primitive(t) || t.is(".") || t.is(",") || t.is("?") ||
          t.is("[") || t.is("]") || t.is("&") || t.is("extends") || t.is("super") || t.is("@"))
        continue;
      return std::nullopt;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> parse_type(std::size_t p) const {
    while (auto a = skip_annotation(p)) p = *a;
    if (!(ident(p) || is_primitive(tok(p)))) return std::nullopt;
    std::size_t q = p + 1;
    for (;;) {
      if (is(q, "<")) {
        auto e = skip_type_args(q);
        if (!e) return std::nullopt;
        q = *e;
      }
      if (is(q, ".") && ident(q + 1)) {
        q += 2;
        continue;
      }
      break;
    }
    while (is(q, "[") && is(q + 1, "]")) q += 2;
    if (is(q, "...")) ++q;
    return q;
  }

  Draft type_draft(std::size_t p, std::size_t end) const {
    Draft d{NodeKind::TypeRefText, first(p), last(end - 1)};
    for (std::size_t q = p; q < end; ++q) d.name += tok(q).text;
    return d;
  }

  std::optional<std::size_t> doc_before(std::size_t start, std::size_t core) const {
    std::optional<std::size_t> doc;
    std::size_t i = first(start);
    while (i > 0) {
      --i;
      const Token& t = toks_[i];
      if (t.kind == TokenKind::Whitespace) continue;
      if (t.kind == TokenKind::DocComment) doc = i;
      break;
    }
    const std::size_t stop = core < sig_.size() ? first(core) : toks_.size();
    for (std::size_t j = first(start); j < stop; ++j)
      if (toks_[j].kind == TokenKind::DocComment) doc = j;
    return doc;
  }

  bool unsupported_type(std::size_t core) const {
    return is(core, "interface") || is(core, "enum") || (is(core, "@") && is(core + 1, "interface")) ||
           (ident(core) && tok(core).text == "record" && ident(core + 1));
  }

  std::size_t skip_unsupported(std::size_t start, std::size_t core, Draft& parent) {
    std::string what = tok(core).text == "@" ? "annotation type" : tok(core).text;
    std::size_t q = core;
    while (q < sig_.size() && !is(q, "{") && !is(q, ";") && !is(q, "}")) {
      if (is(q, "(")) {
        q = skip_balanced(q);
        continue;
      }
      ++q;
    }
    if (is(q, "{")) q = skip_balanced(q);
    else if (is(q, ";")) ++q;
    q = std::max(q, start + 1);
    add_run(parent, start, q, what + " declaration is not analyzed");
    return q;
  }

  void add_run(Draft& parent, std::size_t from, std::size_t to, std::string message) {
    Draft d{NodeKind::TokenRun, first(from), last(std::min(to, sig_.size()) - 1)};
    if (!message.empty())
      notes_.push_back(ParseNote{Span{toks_[d.first].span.begin, toks_[d.last - 1].span.end},
                                 std::move(message)});
    parent.kids.push_back(std::move(d));
  }

  // Consumes an unrecognized region: up to and including ';' or a balanced
  // brace block, or up to (not including) the enclosing '}'.
  std::size_t recover(std::size_t start, bool in_body, std::string message, Draft& parent) {
    std::size_t q = start;
    while (q < sig_.size()) {
      if (is(q, ";")) {
        ++q;
        break;
      }
      if (is(q, "{")) {
        q = skip_balanced(q);
        break;
      }
      if (is(q, "(") || is(q, "[")) {
        q = skip_balanced(q);
        continue;
      }
      if (is(q, "}")) {
        if (in_body) break;
        ++q;
        break;
      }
      ++q;
    }
    if (q == start) q = start + 1;
    add_run(parent, start, q, std::move(message));
    return q;
  }

  std::optional<Draft> parse_class(std::size_t start, std::size_t core, std::size_t& p) {
    if (!ident(core + 1)) return std::nullopt;
    const std::string name = tok(core + 1).text;
    std::size_t q = core + 2;
    while (q < sig_.size() && !is(q, "{")) {
      if (is(q, ";") || is(q, "}") || is(q, "(") || is(q, "=")) return std::nullopt;
      ++q;
    }
    if (q >= sig_.size()) return std::nullopt;
    Draft cls{NodeKind::ClassDecl, first(start), 0, name, sig_[core + 1]};
    cls.doc = doc_before(start, core);
    std::size_t end = 0;
    cls.kids.push_back(parse_body(q, name, end));
    cls.last = last(end - 1);
    p = end;
    return cls;
  }

  Draft parse_body(std::size_t open, const std::string& class_name, std::size_t& end) {
    Draft body{NodeKind::Body, first(open), 0};
    std::size_t p = open + 1;
    while (p < sig_.size() && !is(p, "}")) {
      if (is(p, ";")) {
        ++p;
        continue;
      }
      if (is(p, "{") || (is(p, "static") && is(p + 1, "{"))) {
        const std::size_t e = skip_balanced(is(p, "{") ? p : p + 1);
        add_run(body, p, e, "");
        p = e;
        continue;
      }
      p = parse_member(p, class_name, body);
    }
    if (p >= sig_.size()) {
      notes_.push_back(ParseNote{Span{toks_[first(open)].span.begin, toks_.back().span.end},
                                 "class body of " + class_name + " is not closed"});
      end = sig_.size();
    } else {
      end = p + 1;
    }
    body.last = last(end - 1);
    return body;
  }

  std::size_t parse_member(std::size_t start, const std::string& class_name, Draft& body) {
    std::size_t core = skip_modifiers(start);
    if (is(core, "class")) {
      std::size_t next = core;
      if (auto d = parse_class(start, core, next)) {
        body.kids.push_back(std::move(*d));
        return next;
      }
      return recover(start, true, "malformed nested class declaration", body);
    }
    if (unsupported_type(core)) return skip_unsupported(start, core, body);
    std::size_t q = core;
    if (is(q, "<")) {
      auto e = skip_type_args(q);
      if (!e) return recover(start, true, "unrecognized class member", body);
      q = *e;
    }
    Draft member{NodeKind::MethodDecl, first(start), 0};
    member.doc = doc_before(start, core);
    std::size_t name_pos = 0;
    if (ident(q) && is(q + 1, "(")) {
      if (tok(q).text != class_name)
        return recover(start, true, "method declaration without a return type", body);
      name_pos = q;
    } else {
      auto type_end = parse_type(q);
      if (!type_end || !ident(*type_end))
        return recover(start, true, "unrecognized class member", body);
      member.kids.push_back(type_draft(q, *type_end));
      name_pos = *type_end;
      if (!is(name_pos + 1, "(")) return parse_field(start, std::move(member), name_pos, body);
    }
    member.name = tok(name_pos).text;
    member.name_token = sig_[name_pos];
    std::size_t after = 0;
    if (!parse_params(name_pos + 1, member, after))
      return recover(start, true, "malformed parameter list", body);
    q = after;
    while (is(q, "[") && is(q + 1, "]")) q += 2;
    if (is(q, "throws")) {
      ++q;
      while (q < sig_.size() && !is(q, "{") && !is(q, ";")) {
        const Token& t = tok(q);
        if (!(t.is_identifier() || t.is(".") || t.is(",") || t.is("<") || t.is(">") || t.is("?") ||
              t.is("@")))
          return recover(start, true, "malformed throws clause", body);
        ++q;
      }
    }
    if (is(q, ";")) {
      member.last = last(q);
      body.kids.push_back(std::move(member));
      return q + 1;
    }
    if (!is(q, "{")) return recover(start, true, "malformed method declaration", body);
    const auto closed = match(q);
    const std::size_t e = closed.value_or(sig_.size());
    Draft mbody{NodeKind::Body, first(q), last(e - 1)};
    if (!closed)
      notes_.push_back(ParseNote{Span{toks_[first(q)].span.begin, toks_.back().span.end},
                                 "body of method " + member.name + " is not closed"});
    member.kids.push_back(std::move(mbody));
    member.last = last(e - 1);
    body.kids.push_back(std::move(member));
    return e;
  }

  bool parse_params(std::size_t open, Draft& method, std::size_t& after) {
    std::size_t q = open + 1;
    if (is(q, ")")) {
      after = q + 1;
      return true;
    }
    for (;;) {
      const std::size_t pstart = q;
      std::size_t core = pstart;
      for (;;) {
        if (auto a = skip_annotation(core)) {
          core = *a;
          continue;
        }
        if (is(core, "final")) {
          ++core;
          continue;
        }
        break;
      }
      auto type_end = parse_type(core);
      if (!type_end) return false;
      const std::size_t n = *type_end;
      if (!(ident(n) || is(n, "this"))) return false;
      Draft param{NodeKind::Param, first(pstart), 0, tok(n).text, sig_[n]};
      param.kids.push_back(type_draft(core, n));
      std::size_t e = n + 1;
      while (is(e, "[") && is(e + 1, "]")) e += 2;
      param.last = last(e - 1);
      method.kids.push_back(std::move(param));
      if (is(e, ",")) {
        q = e + 1;
        continue;
      }
      if (is(e, ")")) {
        after = e + 1;
        return true;
      }
      return false;
    }
  }

  bool declarator_follows(std::size_t p) const {
    return ident(p) && (is(p + 1, "=") || is(p + 1, ",") || is(p + 1, ";") || is(p + 1, "["));
  }

  // Skips a field initializer; stops at the separating ',' or the final ';'.
  std::optional<std::size_t> skip_initializer(std::size_t p) const {
    std::size_t q = p;
    while (q < sig_.size()) {
      if (is(q, "(") || is(q, "[") || is(q, "{")) {
        q = skip_balanced(q);
        continue;
      }
      if (is(q, ";")) return q;
      if (is(q, ",")) {
        if (declarator_follows(q + 1)) return q;
        ++q;
        continue;
      }
      if (is(q, ")") || is(q, "]") || is(q, "}")) return std::nullopt;
      if (is(q, "<") && q > p && ident(q - 1)) {
        if (auto e = skip_type_args(q)) {
          q = *e;
          continue;
        }
      }
      ++q;
    }
    return std::nullopt;
  }

  std::size_t parse_field(std::size_t start, Draft member, std::size_t name_pos, Draft& body) {
    member.kind = NodeKind::FieldDecl;
    member.name = tok(name_pos).text;
    member.name_token = sig_[name_pos];
    std::size_t q = name_pos;
    for (;;) {
      if (!ident(q)) return recover(start, true, "malformed field declaration", body);
      Draft decl{NodeKind::VarDeclarator, first(q), 0, tok(q).text, sig_[q]};
      std::size_t e = q + 1;
      while (is(e, "[") && is(e + 1, "]")) e += 2;
      if (is(e, "=")) {
        auto init_end = skip_initializer(e + 1);
        if (!init_end) return recover(start, true, "malformed field initializer", body);
        e = *init_end;
      }
      decl.last = last(e - 1);
      member.kids.push_back(std::move(decl));
      if (is(e, ",")) {
        q = e + 1;
        continue;
      }
      if (is(e, ";")) {
        member.last = last(e);
        body.kids.push_back(std::move(member));
        return e + 1;
      }
      return recover(start, true, "malformed field declaration", body);
    }
  }

  std::unique_ptr<SyntaxNode> materialize(Draft& d) const {
    auto node = std::make_unique<SyntaxNode>();
    node->kind = d.kind;
    node->name = std::move(d.name);
    node->name_token = d.name_token;
    node->doc_comment = d.doc;
    node->first_token = d.first;
    node->last_token = d.last;
    if (d.first < d.last)
      node->span = Span{toks_[d.first].span.begin, toks_[d.last - 1].span.end};
    else
      node->span = d.first < toks_.size() ? Span{toks_[d.first].span.begin, toks_[d.first].span.begin}
                                          : Span{toks_.empty() ? 0 : toks_.back().span.end,
                                                 toks_.empty() ? 0 : toks_.back().span.end};
    std::sort(d.kids.begin(), d.kids.end(),
              [](const Draft& a, const Draft& b) { return a.first < b.first; });
    std::size_t i = d.first;
    for (auto& kid : d.kids) {
      for (; i < kid.first; ++i) node->children.emplace_back(i);
      node->children.emplace_back(materialize(kid));
      i = kid.last;
    }
    for (; i < d.last; ++i) node->children.emplace_back(i);
    return node;
  }
};

}  // namespace detail

/// Parses `source` in tolerant mode. Regions outside the supported subset
/// become TokenRun nodes, each reported once in parse_notes.
inline SyntaxTree parse_file(std::string source, std::string path = {}) {
  SyntaxTree tree;
  tree.path = std::move(path);
  tree.source = std::move(source);
  tree.tokens = tokenize(tree.source);
  tree.lines = LineIndex(tree.source);
  detail::Parser parser(tree.tokens, tree.parse_notes);
  tree.root = parser.parse_file();
  return tree;
}

inline void render_node(const SyntaxTree& tree, const SyntaxNode& node, std::string& out) {
  for (const auto& c : node.children) {
    if (const auto* idx = std::get_if<std::size_t>(&c))
      out += tree.tokens[*idx].text;
    else
      render_node(tree, *std::get<std::unique_ptr<SyntaxNode>>(c), out);
  }
}

/// Concatenates the leaves of the tree in order.
inline std::string render(const SyntaxTree& tree) {
  std::string out;
  out.reserve(tree.source.size());
  if (tree.root) render_node(tree, *tree.root, out);
  return out;
}

struct TextEdit {
  Span span;
  std::string replacement;

  friend bool operator==(const TextEdit&, const TextEdit&) = default;
};

class EditError : public Error {
 public:
  enum class Kind { OverlappingEdits, OutOfBounds };
  EditError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Applies all edits as if simultaneously; spans refer to the original text.
/// Two insertions at the same offset count as overlapping.
inline std::string apply_edits(std::string_view source, std::vector<TextEdit> edits) {
  for (const auto& e : edits)
    if (e.span.begin > e.span.end || e.span.end > source.size())
      throw EditError(EditError::Kind::OutOfBounds,
                      "edit span [" + std::to_string(e.span.begin) + ", " +
                          std::to_string(e.span.end) + ") exceeds text of " +
                          std::to_string(source.size()) + " bytes");
  std::stable_sort(edits.begin(), edits.end(),
                   [](const TextEdit& a, const TextEdit& b) { return a.span < b.span; });
  for (std::size_t i = 1; i < edits.size(); ++i) {
    const Span& a = edits[i - 1].span;
    const Span& b = edits[i].span;
    if (b.begin < a.end || (a.empty() && b.empty() && a.begin == b.begin))
      throw EditError(EditError::Kind::OverlappingEdits,
                      "edits [" + std::to_string(a.begin) + ", " + std::to_string(a.end) +
                          ") and [" + std::to_string(b.begin) + ", " + std::to_string(b.end) +
                          ") overlap");
  }
  std::string out;
  out.reserve(source.size());
  std::size_t pos = 0;
  for (const auto& e : edits) {
    out.append(source.substr(pos, e.span.begin - pos));
    out += e.replacement;
    pos = e.span.end;
  }
  out.append(source.substr(pos));
  return out;
}

}  // namespace psilite
