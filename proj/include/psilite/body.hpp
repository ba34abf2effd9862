#pragma once

// Shallow parse of method bodies: dotted-name chains with optional call
// arguments, and local variable declarations. No statement grammar.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psilite/syntax.hpp"

namespace psilite {

/// Half-open range of token indices.
struct TokenRange {
  std::size_t first = 0;
  std::size_t last = 0;
  bool empty() const noexcept { return first >= last; }
};

struct CallArgs {
  std::size_t open = 0;   // token index of '('
  std::size_t close = 0;  // token index of ')'
  std::vector<TokenRange> args;  // significant-token ranges, trivia trimmed
};

struct ChainLink {
  std::string name;
  std::size_t token = 0;
  std::optional<CallArgs> call;
};

/// `head(.name)*` where any link may be invoked. links[0] is the head, which
/// is an identifier, `this` or `super`.
struct NameChain {
  std::vector<ChainLink> links;
  std::size_t prev_token = npos;  // significant token before the head
  std::size_t end_token = 0;      // one past the chain's last token

  const ChainLink& head() const { return links.front(); }
};

struct LocalDecl {
  std::string type_text;  // empty for untyped lambda parameters
  std::string name;
  std::size_t name_token = 0;
};

struct BodyScan {
  std::vector<NameChain> chains;
  std::vector<LocalDecl> locals;

  const LocalDecl* local(std::string_view name) const {
    for (const auto& l : locals)
      if (l.name == name) return &l;
    return nullptr;
  }
};

namespace detail {

class BodyScanner {
 public:
  BodyScanner(const std::vector<Token>& toks, TokenRange range) : toks_(toks) {
    for (std::size_t i = range.first; i < range.last && i < toks.size(); ++i)
      if (!toks[i].is_trivia()) sig_.push_back(i);
  }

  BodyScan run() {
    BodyScan out;
    for (std::size_t p = 0; p < sig_.size(); ++p) {
      scan_local(p, out);
      if (is(p, "->")) scan_lambda_params(p, out);
      if (starts_chain(p)) out.chains.push_back(chain_at(p));
    }
    return out;
  }

  std::optional<CallArgs> call_args(std::size_t p) const {
    if (!is(p, "(")) return std::nullopt;
    CallArgs call;
    call.open = sig_[p];
    int depth = 0;
    std::size_t arg_start = p + 1;
    for (std::size_t q = p; q < sig_.size(); ++q) {
      const Token& t = tok(q);
      if (t.is("<") && q > 0 && tok(q - 1).is_identifier()) {
        if (auto e = skip_type_args(q)) {
          q = *e - 1;
          continue;
        }
      }
      if (t.is("(") || t.is("[") || t.is("{")) ++depth;
      else if (t.is(")") || t.is("]") || t.is("}")) {
        if (--depth == 0) {
          if (q > arg_start || !call.args.empty())
            call.args.push_back(TokenRange{sig_[arg_start], q > arg_start ? sig_[q - 1] + 1 : sig_[arg_start]});
          call.close = sig_[q];
          return call;
        }
      } else if (t.is(",") && depth == 1) {
        call.args.push_back(TokenRange{sig_[arg_start], sig_[q - 1] + 1});
        arg_start = q + 1;
      }
    }
    return std::nullopt;
  }

  std::size_t pos_of(std::size_t token) const {
    auto it = std::lower_bound(sig_.begin(), sig_.end(), token);
    return static_cast<std::size_t>(it - sig_.begin());
  }

 private:
  const std::vector<Token>& toks_;
  std::vector<std::size_t> sig_;
  inline static const Token kEnd{TokenKind::Unknown, "", Span{}};

  const Token& tok(std::size_t p) const { return p < sig_.size() ? toks_[sig_[p]] : kEnd; }
  bool is(std::size_t p, std::string_view t) const { return p < sig_.size() && tok(p).is(t); }
  bool ident(std::size_t p) const { return p < sig_.size() && tok(p).is_identifier(); }

  static bool primitive(const Token& t) {
    return t.kind == TokenKind::Keyword &&
           (t.text == "boolean" || t.text == "byte" || t.text == "char" || t.text == "short" ||
            t.text == "int" || t.text == "long" || t.text == "float" || t.text == "double");
  }

  std::optional<std::size_t> skip_type_args(std::size_t p) const {
    int depth = 0;
    for (std::size_t q = p; q < sig_.size(); ++q) {
      const Token& t = tok(q);
      if (t.is("<")) { ++depth; continue; }
      if (t.is(">")) {
        if (--depth == 0) return q + 1;
        continue;
      }
      if (t.is_identifier() || primitive(t) || t.is(".") || t.is(",") || t.is("?") || t.is("[") ||
          t.is("]") || t.is("&") || t.is("extends") || t.is("super"))
        continue;
      return std::nullopt;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> parse_type(std::size_t p) const {
    if (!(ident(p) || primitive(tok(p)))) return std::nullopt;
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

  static bool ends_declarator(const Token& t) {
    return t.is("=") || t.is(";") || t.is(",") || t.is(":") || t.is(")") || t.is("&&") ||
           t.is("||");
  }

  void scan_local(std::size_t p, BodyScan& out) const {
    if (p > 0) {
      const Token& prev = tok(p - 1);
      if (prev.is(".") || prev.is_identifier() || prev.is("new") || primitive(prev) ||
          prev.is(">") || prev.is("]") || prev.is("@"))
        return;
    }
    auto type_end = parse_type(p);
    if (!type_end || !ident(*type_end) || !ends_declarator(tok(*type_end + 1))) return;
    std::string type;
    for (std::size_t q = p; q < *type_end; ++q) type += tok(q).text;
    std::size_t name = *type_end;
    out.locals.push_back(LocalDecl{type, tok(name).text, sig_[name]});
    // Further declarators: `T a = x, b = y;`
    int depth = 0;
    for (std::size_t q = name + 1; q < sig_.size(); ++q) {
      const Token& t = tok(q);
      if (t.is("(") || t.is("[") || t.is("{")) ++depth;
      else if (t.is(")") || t.is("]") || t.is("}")) {
        if (--depth < 0) return;
      } else if (depth == 0 && t.is(";")) {
        return;
      } else if (depth == 0 && t.is(",") && ident(q + 1) &&
                 (is(q + 2, "=") || is(q + 2, ",") || is(q + 2, ";"))) {
        out.locals.push_back(LocalDecl{type, tok(q + 1).text, sig_[q + 1]});
      }
    }
  }

  void scan_lambda_params(std::size_t arrow, BodyScan& out) const {
    if (arrow == 0) return;
    if (ident(arrow - 1)) {
      out.locals.push_back(LocalDecl{"", tok(arrow - 1).text, sig_[arrow - 1]});
      return;
    }
    if (!is(arrow - 1, ")")) return;
    std::size_t q = arrow - 1;
    int depth = 0;
    while (true) {
      if (is(q, ")")) ++depth;
      if (is(q, "(") && --depth == 0) break;
      if (q == 0) return;
      --q;
    }
    for (std::size_t r = q + 1; r + 1 < arrow; ++r)
      if (ident(r) && (is(r + 1, ",") || is(r + 1, ")")) && (is(r - 1, "(") || is(r - 1, ",")))
        out.locals.push_back(LocalDecl{"", tok(r).text, sig_[r]});
  }

  bool starts_chain(std::size_t p) const {
    const Token& t = tok(p);
    if (!(t.is_identifier() || t.is("this") || t.is("super"))) return false;
    if (p > 0) {
      const Token& prev = tok(p - 1);
      if (prev.is(".") || prev.is("@") || prev.is("::") || prev.is("new") || prev.is("class") ||
          prev.is("interface") || prev.is("enum"))
        return false;
    }
    return !is(p + 1, "->");
  }

  NameChain chain_at(std::size_t p) const {
    NameChain chain;
    chain.prev_token = p > 0 ? sig_[p - 1] : npos;
    ChainLink head{tok(p).text, sig_[p], std::nullopt};
    std::size_t q = p + 1;
    if (auto call = call_args(q)) {
      head.call = std::move(call);
      q = pos_of(head.call->close) + 1;
    }
    chain.links.push_back(std::move(head));
    while (is(q, ".") && ident(q + 1)) {
      ChainLink link{tok(q + 1).text, sig_[q + 1], std::nullopt};
      q += 2;
      if (auto call = call_args(q)) {
        link.call = std::move(call);
        q = pos_of(link.call->close) + 1;
      }
      chain.links.push_back(std::move(link));
    }
    chain.end_token = sig_[q - 1] + 1;
    return chain;
  }
};

}  // namespace detail

/// Scans the tokens in `range` (usually a method Body node).
inline BodyScan scan_body(const std::vector<Token>& tokens, TokenRange range) {
  return detail::BodyScanner(tokens, range).run();
}

/// Argument list of the call whose '(' is at token index `open`.
inline std::optional<CallArgs> call_args_at(const std::vector<Token>& tokens, TokenRange range,
                                            std::size_t open) {
  detail::BodyScanner scanner(tokens, range);
  return scanner.call_args(scanner.pos_of(open));
}

}  // namespace psilite
