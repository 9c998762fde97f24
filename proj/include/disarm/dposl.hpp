#pragma once

// Reader and writer for the `.dpl` rule-file format: a slotted, ASCII
// rendition of defeasible d-POSL.
//
//   program     := statement*
//   statement   := fact "." | rule "." | superiority "." | conflict "."
//   rule        := ruleid ":" literal (":-" | ":=" | ":~") element ("," element)*
//   element     := literal | "not" "(" literal ("," guard)* ")" | guard
//   literal     := ["~"] pred [ "(" arg ("," arg)* ")" ]
//   arg         := key "->" term | term
//   superiority := ruleid ">" ruleid
//   conflict    := "conflict" literal "with" literal ("," literal)* ["where" guard ("," guard)*]
//   guard       := "?var" "is" expr | expr ("<"|"<="|">"|">="|"="|"!=") expr
//
// `%` starts a comment that runs to the end of the line.

#include <cctype>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "disarm/ast.hpp"
#include "disarm/errors.hpp"

namespace disarm {

struct ParseOptions {
  /// Reject superiority statements that name rules absent from this text.
  /// Disable when a program is assembled from several files and validate the
  /// merged result with `validate_program`.
  bool check_references = true;
};

namespace detail {

struct Token {
  enum class Kind { ident, variable, number, punct, end };
  Kind kind = Kind::end;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token tok;
      tok.line = line_;
      tok.column = column_;
      if (pos_ >= text_.size()) {
        out.push_back(tok);
        return out;
      }
      const char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        tok.kind = Token::Kind::ident;
        tok.text = take_word();
      } else if (c == '?') {
        advance();
        if (pos_ >= text_.size() || !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
          throw ParseError(tok.line, tok.column, "malformed variable", {"variable name after '?'"});
        tok.kind = Token::Kind::variable;
        tok.text = take_word();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        tok.kind = Token::Kind::number;
        tok.text = take_number();
      } else {
        tok.kind = Token::Kind::punct;
        tok.text = take_punct(tok);
      }
      out.push_back(std::move(tok));
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string take_word() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) advance();
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string take_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
    // A '.' is a decimal point only when a digit follows; otherwise it ends the statement.
    if (pos_ + 1 < text_.size() && text_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
      advance();
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string take_punct(const Token& tok) {
    static const char* const two_char[] = {":-", ":=", ":~", "->", "<=", ">=", "!="};
    for (const char* p : two_char) {
      if (text_.substr(pos_, 2) == p) {
        advance();
        advance();
        return p;
      }
    }
    const char c = text_[pos_];
    static const std::string_view single = "(),.:<>=~+-*/";
    if (single.find(c) == std::string_view::npos)
      throw ParseError(tok.line, tok.column, std::string("unexpected character '") + c + "'");
    advance();
    return std::string(1, c);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(Lexer(text).run()) {}

  SourceProgram program() {
    SourceProgram out;
    while (!at_end()) statement(out);
    return out;
  }

  Literal single_fact() {
    const Token start = peek();
    Literal lit = literal();
    expect(".");
    if (!at_end()) fail(peek(), "unexpected input after fact", {"end of input"});
    require_ground(lit, start);
    return lit;
  }

  Literal pattern() {
    Literal lit = literal();
    if (is_punct(".")) next();
    if (!at_end()) fail(peek(), "unexpected input after pattern", {"end of input"});
    return lit;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  const Token& next() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Token::Kind::end; }
  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::punct && peek(ahead).text == p;
  }
  bool is_ident(std::string_view word, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::ident && peek(ahead).text == word;
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Token::Kind::end: return "end of input";
      case Token::Kind::variable: return "'?" + t.text + "'";
      default: return "'" + t.text + "'";
    }
  }

  [[noreturn]] static void fail(const Token& t, const std::string& what, std::vector<std::string> expected = {}) {
    throw ParseError(t.line, t.column, what + ", got " + describe(t), std::move(expected));
  }

  void expect(std::string_view p) {
    if (!is_punct(p)) fail(peek(), "unexpected token", {"'" + std::string(p) + "'"});
    next();
  }

  std::string identifier(const char* what) {
    if (peek().kind != Token::Kind::ident) fail(peek(), "unexpected token", {what});
    return next().text;
  }

  static void require_ground(const Literal& lit, const Token& at) {
    for (const auto& [key, term] : lit.args) {
      if (is_variable(term))
        throw ParseError(at.line, at.column,
                         "variable ?" + std::get<Variable>(term).name + " in fact " + lit.predicate);
    }
  }

  void statement(SourceProgram& out) {
    const Token start = peek();
    if (is_ident("conflict") && (peek(1).kind == Token::Kind::ident || is_punct("~", 1))) {
      next();
      out.conflicts.push_back(conflict_decl());
    } else if (peek().kind == Token::Kind::ident && is_punct(":", 1)) {
      out.rules.push_back(rule());
    } else if (peek().kind == Token::Kind::ident && is_punct(">", 1)) {
      Superiority s;
      s.superior = next().text;
      next();
      s.inferior = identifier("rule id");
      if (is_punct(">")) fail(peek(), "chained superiority is not supported; write one pair per statement", {"'.'"});
      out.superiorities.push_back(std::move(s));
    } else if (peek().kind == Token::Kind::ident || is_punct("~")) {
      Literal lit = literal();
      if (is_punct(":-") || is_punct(":=") || is_punct(":~"))
        fail(peek(), "rule is missing its id", {"'.'"});
      require_ground(lit, start);
      out.facts.push_back(std::move(lit));
    } else {
      fail(peek(), "unexpected token", {"fact", "rule", "superiority", "conflict declaration"});
    }
    expect(".");
  }

  Rule rule() {
    Rule r;
    r.id = next().text;
    expect(":");
    r.head = literal();
    if (is_punct(":-")) {
      r.kind = RuleKind::strict;
    } else if (is_punct(":=")) {
      r.kind = RuleKind::defeasible;
    } else if (is_punct(":~")) {
      r.kind = RuleKind::defeater;
    } else {
      fail(peek(), "unexpected token", {"':-'", "':='", "':~'"});
    }
    next();
    r.body.push_back(element());
    while (is_punct(",")) {
      next();
      r.body.push_back(element());
    }
    return r;
  }

  ConflictSetDecl conflict_decl() {
    ConflictSetDecl d;
    d.scope = literal();
    if (!is_ident("with")) fail(peek(), "unexpected token", {"'with'"});
    next();
    d.conflicts_with.push_back(literal());
    while (is_punct(",")) {
      next();
      d.conflicts_with.push_back(literal());
    }
    if (is_ident("where")) {
      next();
      d.guards.push_back(guard());
      while (is_punct(",")) {
        next();
        d.guards.push_back(guard());
      }
    }
    return d;
  }

  static bool is_compare(const Token& t) {
    if (t.kind != Token::Kind::punct) return false;
    return t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=" || t.text == "=" || t.text == "!=";
  }

  BodyElement element() {
    if (is_ident("not") && is_punct("(", 1)) {
      next();
      next();
      NafBlock block;
      block.literal = literal();
      while (is_punct(",")) {
        next();
        block.guards.push_back(guard());
      }
      expect(")");
      return block;
    }
    if (is_punct("~")) return literal();
    if (peek().kind == Token::Kind::ident) {
      const bool clock = is_ident("now") && is_punct("(", 1) && is_punct(")", 2);
      if (clock || is_compare(peek(1)) || is_punct("+", 1) || is_punct("*", 1) || is_punct("/", 1) ||
          is_punct("-", 1))
        return guard();
      return literal();
    }
    return guard();
  }

  Literal literal() {
    Literal lit;
    if (is_punct("~")) {
      next();
      lit.polarity = Polarity::negated;
    }
    lit.predicate = identifier("predicate name");
    if (!is_punct("(")) return lit;
    next();
    if (is_punct(")")) {
      next();
      return lit;
    }
    std::size_t positional = 0;
    for (;;) {
      const Token at = peek();
      std::string key;
      Term value;
      if (peek().kind == Token::Kind::ident && is_punct("->", 1)) {
        key = next().text;
        next();
        value = term();
      } else {
        key = std::to_string(positional++);
        value = term();
      }
      if (!lit.args.emplace(key, std::move(value)).second)
        throw ParseError(at.line, at.column, "duplicate argument '" + key + "' in " + lit.predicate);
      if (is_punct(",")) {
        next();
        continue;
      }
      expect(")");
      return lit;
    }
  }

  Term term() {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::variable: return Variable{next().text};
      case Token::Kind::ident: return Symbol{next().text};
      case Token::Kind::number: return Number::parse(next().text);
      default: break;
    }
    if (is_punct("-") && peek(1).kind == Token::Kind::number) {
      next();
      return -Number::parse(next().text);
    }
    fail(t, "unexpected token", {"constant", "number", "variable"});
  }

  Guard guard() {
    Guard g;
    if (peek().kind == Token::Kind::variable && is_ident("is", 1)) {
      g.assigns = true;
      g.target = next().text;
      next();
      g.rhs = expr();
      return g;
    }
    g.lhs = expr();
    const Token& t = peek();
    if (!is_compare(t)) fail(t, "unexpected token", {"'<'", "'<='", "'>'", "'>='", "'='", "'!='"});
    static const std::pair<const char*, CompareOp> ops[] = {{"<", CompareOp::lt}, {"<=", CompareOp::le},
                                                           {">", CompareOp::gt}, {">=", CompareOp::ge},
                                                           {"=", CompareOp::eq}, {"!=", CompareOp::ne}};
    for (const auto& [text, op] : ops)
      if (t.text == text) g.op = op;
    next();
    g.rhs = expr();
    return g;
  }

  Expr expr() {
    Expr lhs = product();
    while (is_punct("+") || is_punct("-")) {
      const auto kind = next().text == "+" ? Expr::Kind::add : Expr::Kind::sub;
      lhs = Expr::binary(kind, std::move(lhs), product());
    }
    return lhs;
  }

  Expr product() {
    Expr lhs = unary();
    while (is_punct("*") || is_punct("/")) {
      const auto kind = next().text == "*" ? Expr::Kind::mul : Expr::Kind::div;
      lhs = Expr::binary(kind, std::move(lhs), unary());
    }
    return lhs;
  }

  Expr unary() {
    if (is_punct("-")) {
      if (peek(1).kind == Token::Kind::number) {
        next();
        return Expr::of(-Number::parse(next().text));
      }
      next();
      return Expr::negate(unary());
    }
    return primary();
  }

  Expr primary() {
    if (is_punct("(")) {
      next();
      Expr inner = expr();
      expect(")");
      return inner;
    }
    if (is_ident("now") && is_punct("(", 1)) {
      next();
      next();
      expect(")");
      return Expr::clock();
    }
    return Expr::of(term());
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

inline void write_term(std::ostream& os, const Term& t) {
  if (const auto* s = std::get_if<Symbol>(&t)) {
    os << s->name;
  } else if (const auto* n = std::get_if<Number>(&t)) {
    os << n->to_string();
  } else {
    os << '?' << std::get<Variable>(t).name;
  }
}

inline int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::add:
    case Expr::Kind::sub: return 1;
    case Expr::Kind::mul:
    case Expr::Kind::div: return 2;
    case Expr::Kind::neg: return 3;
    default: return 4;
  }
}

inline void write_expr(std::ostream& os, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::term: write_term(os, e.leaf); return;
    case Expr::Kind::now: os << "now()"; return;
    case Expr::Kind::neg: {
      // "-(1)" must not print as "-1", which reads back as a negative constant.
      const auto& inner = e.operands[0];
      const bool wrap = precedence(inner) < 3 ||
                        (inner.kind == Expr::Kind::term && std::holds_alternative<Number>(inner.leaf));
      os << '-';
      if (wrap) os << '(';
      write_expr(os, e.operands[0]);
      if (wrap) os << ')';
      return;
    }
    default: break;
  }
  const int p = precedence(e);
  const char* op = e.kind == Expr::Kind::add ? " + " : e.kind == Expr::Kind::sub ? " - " : e.kind == Expr::Kind::mul ? " * " : " / ";
  const bool wrap_left = precedence(e.operands[0]) < p;
  const bool wrap_right = precedence(e.operands[1]) <= p;
  if (wrap_left) os << '(';
  write_expr(os, e.operands[0]);
  if (wrap_left) os << ')';
  os << op;
  if (wrap_right) os << '(';
  write_expr(os, e.operands[1]);
  if (wrap_right) os << ')';
}

}  // namespace detail

inline std::string to_string(const Term& t) {
  std::ostringstream os;
  detail::write_term(os, t);
  return os.str();
}

inline std::string to_string(const Literal& lit) {
  std::ostringstream os;
  if (lit.negated()) os << '~';
  os << lit.predicate;
  if (lit.args.empty()) return os.str();
  os << '(';
  bool first = true;
  for (const auto& [key, value] : lit.args) {
    if (!first) os << ", ";
    first = false;
    if (!ArgKeyLess::positional(key)) os << key << "->";
    detail::write_term(os, value);
  }
  os << ')';
  return os.str();
}

inline std::string to_string(const Expr& e) {
  std::ostringstream os;
  detail::write_expr(os, e);
  return os.str();
}

inline std::string to_string(const Guard& g) {
  if (g.assigns) return "?" + g.target + " is " + to_string(g.rhs);
  static const char* const ops[] = {" < ", " <= ", " > ", " >= ", " = ", " != "};
  return to_string(g.lhs) + ops[static_cast<int>(g.op)] + to_string(g.rhs);
}

inline std::string to_string(const BodyElement& e) {
  if (const auto* lit = std::get_if<Literal>(&e)) return to_string(*lit);
  if (const auto* g = std::get_if<Guard>(&e)) return to_string(*g);
  const auto& naf = std::get<NafBlock>(e);
  std::string out = "not(" + to_string(naf.literal);
  for (const auto& g : naf.guards) out += ", " + to_string(g);
  return out + ")";
}

inline std::string to_string(const Rule& r) {
  static const char* const arrows[] = {" :- ", " := ", " :~ "};
  std::string out = r.id + ": " + to_string(r.head) + arrows[static_cast<int>(r.kind)];
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    if (i > 0) out += ", ";
    out += to_string(r.body[i]);
  }
  return out;
}

inline std::string to_string(const ConflictSetDecl& d) {
  std::string out = "conflict " + to_string(d.scope) + " with ";
  for (std::size_t i = 0; i < d.conflicts_with.size(); ++i) {
    if (i > 0) out += ", ";
    out += to_string(d.conflicts_with[i]);
  }
  for (std::size_t i = 0; i < d.guards.size(); ++i) out += (i == 0 ? " where " : ", ") + to_string(d.guards[i]);
  return out;
}

/// Checks rule-id uniqueness and that superiority pairs name known rules.
inline void validate_program(const SourceProgram& program) {
  std::unordered_set<std::string> ids;
  for (const auto& r : program.rules)
    if (!ids.insert(r.id).second) throw ProgramError("duplicate rule id '" + r.id + "'");
  for (const auto& s : program.superiorities) {
    for (const auto* id : {&s.superior, &s.inferior})
      if (!ids.count(*id))
        throw ProgramError("superiority " + s.superior + " > " + s.inferior + " names unknown rule '" + *id + "'");
  }
}

inline SourceProgram parse_program(std::string_view text, ParseOptions options = {}) {
  SourceProgram program = detail::Parser(text).program();
  if (options.check_references) {
    validate_program(program);
  } else {
    std::unordered_set<std::string> ids;
    for (const auto& r : program.rules)
      if (!ids.insert(r.id).second) throw ProgramError("duplicate rule id '" + r.id + "'");
  }
  return program;
}

/// Parses one ground atom terminated by `.`.
inline Literal parse_fact(std::string_view text) { return detail::Parser(text).single_fact(); }

/// Parses a literal that may contain variables; the trailing `.` is optional.
inline Literal parse_pattern(std::string_view text) { return detail::Parser(text).pattern(); }

/// Canonical text: facts, rules, superiority pairs, conflict declarations,
/// one statement per line.
inline std::string serialize_program(const SourceProgram& program) {
  std::string out;
  for (const auto& f : program.facts) out += to_string(f) + ".\n";
  for (const auto& r : program.rules) out += to_string(r) + ".\n";
  for (const auto& s : program.superiorities) out += s.superior + " > " + s.inferior + ".\n";
  for (const auto& c : program.conflicts) out += to_string(c) + ".\n";
  return out;
}

}  // namespace disarm
