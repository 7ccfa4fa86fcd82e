#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridtune/errors.hpp"
#include "gridtune/parameter.hpp"

namespace gridtune {

// Restrictions are boolean expressions over the declared parameter names:
//   literals, identifiers, + - * / %, == != < <= > >=, and/or/not, parentheses.
// Parameters are statically typed (numeric / categorical / boolean), so every
// type error is caught at parse time and evaluation is total: division is IEEE
// double division and `%` is fmod (x % 0 yields NaN, and comparisons against
// NaN are false).

namespace expr {

enum class Type { number, string, boolean };

inline const char* to_string(Type t) {
  switch (t) {
    case Type::number: return "number";
    case Type::string: return "string";
    case Type::boolean: return "boolean";
  }
  return "?";
}

enum class Op {
  literal, param,
  neg, logical_not,
  add, sub, mul, div, mod,
  eq, ne, lt, le, gt, ge,
  logical_and, logical_or,
};

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
  Op op;
  Type type;
  Value literal;            // op == literal
  std::size_t param_index = 0;  // op == param
  NodePtr lhs, rhs;
};

}  // namespace expr

namespace detail {

struct Token {
  enum class Kind {
    number, string, boolean, identifier,
    plus, minus, star, slash, percent,
    eq, ne, lt, le, gt, ge,
    kw_and, kw_or, kw_not,
    lparen, rparen,
    end,
  };
  Kind kind;
  std::size_t pos;
  double number = 0.0;
  bool boolean = false;
  std::string text;
};

class RestrictionLexer {
 public:
  explicit RestrictionLexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      Token t = next();
      bool end = t.kind == Token::Kind::end;
      out.push_back(std::move(t));
      if (end) break;
    }
    return out;
  }

 private:
  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    std::size_t start = pos_;
    if (pos_ >= src_.size()) return {Token::Kind::end, start};

    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      return number(start);
    }
    if (c == '\'' || c == '"') return string_literal(start, c);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return word(start);

    ++pos_;
    switch (c) {
      case '+': return {Token::Kind::plus, start};
      case '-': return {Token::Kind::minus, start};
      case '*': return {Token::Kind::star, start};
      case '/': return {Token::Kind::slash, start};
      case '%': return {Token::Kind::percent, start};
      case '(': return {Token::Kind::lparen, start};
      case ')': return {Token::Kind::rparen, start};
      case '=':
        if (pos_ < src_.size() && src_[pos_] == '=') { ++pos_; return {Token::Kind::eq, start}; }
        throw ParseError(start, "syntax error: expected '==' ");
      case '!':
        if (pos_ < src_.size() && src_[pos_] == '=') { ++pos_; return {Token::Kind::ne, start}; }
        throw ParseError(start, "syntax error: expected '!='");
      case '<':
        if (pos_ < src_.size() && src_[pos_] == '=') { ++pos_; return {Token::Kind::le, start}; }
        return {Token::Kind::lt, start};
      case '>':
        if (pos_ < src_.size() && src_[pos_] == '=') { ++pos_; return {Token::Kind::ge, start}; }
        return {Token::Kind::gt, start};
      default:
        throw ParseError(start, std::string("syntax error: unexpected character '") + c + "'");
    }
  }

  Token number(std::size_t start) {
    std::size_t end = pos_;
    while (end < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.' ||
            src_[end] == 'e' || src_[end] == 'E' ||
            ((src_[end] == '+' || src_[end] == '-') && end > pos_ &&
             (src_[end - 1] == 'e' || src_[end - 1] == 'E')))) {
      ++end;
    }
    const std::string text = src_.substr(pos_, end - pos_);
    std::size_t consumed = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &consumed);
    } catch (const std::exception&) {
      throw ParseError(start, "syntax error: bad numeric literal '" + text + "'");
    }
    if (consumed != text.size()) {
      throw ParseError(start, "syntax error: bad numeric literal '" + text + "'");
    }
    pos_ = end;
    Token t{Token::Kind::number, start};
    t.number = v;
    return t;
  }

  Token string_literal(std::size_t start, char quote) {
    ++pos_;
    std::string text;
    while (pos_ < src_.size() && src_[pos_] != quote) text += src_[pos_++];
    if (pos_ >= src_.size()) throw ParseError(start, "syntax error: unterminated string literal");
    ++pos_;
    Token t{Token::Kind::string, start};
    t.text = std::move(text);
    return t;
  }

  Token word(std::size_t start) {
    std::size_t end = pos_;
    while (end < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) {
      ++end;
    }
    std::string text = src_.substr(pos_, end - pos_);
    pos_ = end;
    if (text == "and") return {Token::Kind::kw_and, start};
    if (text == "or") return {Token::Kind::kw_or, start};
    if (text == "not") return {Token::Kind::kw_not, start};
    if (text == "true" || text == "True") {
      Token t{Token::Kind::boolean, start};
      t.boolean = true;
      return t;
    }
    if (text == "false" || text == "False") {
      Token t{Token::Kind::boolean, start};
      t.boolean = false;
      return t;
    }
    Token t{Token::Kind::identifier, start};
    t.text = std::move(text);
    return t;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

// Grammar (lowest precedence first):
//   or_expr    := and_expr ("or" and_expr)*
//   and_expr   := not_expr ("and" not_expr)*
//   not_expr   := "not" not_expr | comparison
//   comparison := additive (cmp_op additive)?
//   additive   := term (("+"|"-") term)*
//   term       := unary (("*"|"/"|"%") unary)*
//   unary      := "-" unary | primary
//   primary    := literal | identifier | "(" or_expr ")"
class RestrictionParser {
 public:
  RestrictionParser(std::vector<Token> tokens, std::span<const ParameterDef> params)
      : tokens_(std::move(tokens)), params_(params) {}

  expr::NodePtr run() {
    expr::NodePtr root = or_expr();
    expect(Token::Kind::end, "expected end of expression");
    if (root->type != expr::Type::boolean) {
      throw ParseError(0, "type mismatch: restriction must be a boolean expression, got " +
                              std::string(expr::to_string(root->type)));
    }
    return root;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }
  bool match(Token::Kind k) {
    if (peek().kind == k) { ++pos_; return true; }
    return false;
  }
  void expect(Token::Kind k, const std::string& what) {
    if (!match(k)) throw ParseError(peek().pos, "syntax error: " + what);
  }

  static expr::NodePtr make_binary(expr::Op op, expr::Type type, expr::NodePtr l, expr::NodePtr r) {
    auto n = std::make_unique<expr::Node>();
    n->op = op;
    n->type = type;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  void require(const expr::Node& n, expr::Type t, std::size_t pos, const char* where) {
    if (n.type != t) {
      throw ParseError(pos, std::string("type mismatch: ") + where + " requires " +
                                expr::to_string(t) + " operands, got " +
                                expr::to_string(n.type));
    }
  }

  expr::NodePtr or_expr() {
    expr::NodePtr lhs = and_expr();
    while (peek().kind == Token::Kind::kw_or) {
      std::size_t p = advance().pos;
      expr::NodePtr rhs = and_expr();
      require(*lhs, expr::Type::boolean, p, "'or'");
      require(*rhs, expr::Type::boolean, p, "'or'");
      lhs = make_binary(expr::Op::logical_or, expr::Type::boolean, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  expr::NodePtr and_expr() {
    expr::NodePtr lhs = not_expr();
    while (peek().kind == Token::Kind::kw_and) {
      std::size_t p = advance().pos;
      expr::NodePtr rhs = not_expr();
      require(*lhs, expr::Type::boolean, p, "'and'");
      require(*rhs, expr::Type::boolean, p, "'and'");
      lhs = make_binary(expr::Op::logical_and, expr::Type::boolean, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  expr::NodePtr not_expr() {
    if (peek().kind == Token::Kind::kw_not) {
      std::size_t p = advance().pos;
      expr::NodePtr operand = not_expr();
      require(*operand, expr::Type::boolean, p, "'not'");
      auto n = std::make_unique<expr::Node>();
      n->op = expr::Op::logical_not;
      n->type = expr::Type::boolean;
      n->lhs = std::move(operand);
      return n;
    }
    return comparison();
  }

  expr::NodePtr comparison() {
    expr::NodePtr lhs = additive();
    expr::Op op;
    switch (peek().kind) {
      case Token::Kind::eq: op = expr::Op::eq; break;
      case Token::Kind::ne: op = expr::Op::ne; break;
      case Token::Kind::lt: op = expr::Op::lt; break;
      case Token::Kind::le: op = expr::Op::le; break;
      case Token::Kind::gt: op = expr::Op::gt; break;
      case Token::Kind::ge: op = expr::Op::ge; break;
      default: return lhs;
    }
    std::size_t p = advance().pos;
    expr::NodePtr rhs = additive();
    if (lhs->type != rhs->type) {
      throw ParseError(p, std::string("type mismatch: cannot compare ") +
                              expr::to_string(lhs->type) + " with " +
                              expr::to_string(rhs->type));
    }
    if (op != expr::Op::eq && op != expr::Op::ne && lhs->type == expr::Type::boolean) {
      throw ParseError(p, "type mismatch: booleans only support == and !=");
    }
    return make_binary(op, expr::Type::boolean, std::move(lhs), std::move(rhs));
  }

  expr::NodePtr additive() {
    expr::NodePtr lhs = term();
    while (peek().kind == Token::Kind::plus || peek().kind == Token::Kind::minus) {
      expr::Op op = peek().kind == Token::Kind::plus ? expr::Op::add : expr::Op::sub;
      std::size_t p = advance().pos;
      expr::NodePtr rhs = term();
      require(*lhs, expr::Type::number, p, "arithmetic");
      require(*rhs, expr::Type::number, p, "arithmetic");
      lhs = make_binary(op, expr::Type::number, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  expr::NodePtr term() {
    expr::NodePtr lhs = unary();
    while (peek().kind == Token::Kind::star || peek().kind == Token::Kind::slash ||
           peek().kind == Token::Kind::percent) {
      expr::Op op = peek().kind == Token::Kind::star    ? expr::Op::mul
                    : peek().kind == Token::Kind::slash ? expr::Op::div
                                                        : expr::Op::mod;
      std::size_t p = advance().pos;
      expr::NodePtr rhs = unary();
      require(*lhs, expr::Type::number, p, "arithmetic");
      require(*rhs, expr::Type::number, p, "arithmetic");
      lhs = make_binary(op, expr::Type::number, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  expr::NodePtr unary() {
    if (peek().kind == Token::Kind::minus) {
      std::size_t p = advance().pos;
      expr::NodePtr operand = unary();
      require(*operand, expr::Type::number, p, "unary minus");
      auto n = std::make_unique<expr::Node>();
      n->op = expr::Op::neg;
      n->type = expr::Type::number;
      n->lhs = std::move(operand);
      return n;
    }
    return primary();
  }

  expr::NodePtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::number: {
        advance();
        auto n = std::make_unique<expr::Node>();
        n->op = expr::Op::literal;
        n->type = expr::Type::number;
        n->literal = Value{t.number};
        return n;
      }
      case Token::Kind::string: {
        advance();
        auto n = std::make_unique<expr::Node>();
        n->op = expr::Op::literal;
        n->type = expr::Type::string;
        n->literal = Value{t.text};
        return n;
      }
      case Token::Kind::boolean: {
        advance();
        auto n = std::make_unique<expr::Node>();
        n->op = expr::Op::literal;
        n->type = expr::Type::boolean;
        n->literal = Value{t.boolean};
        return n;
      }
      case Token::Kind::identifier: {
        advance();
        for (std::size_t i = 0; i < params_.size(); ++i) {
          if (params_[i].name == t.text) {
            auto n = std::make_unique<expr::Node>();
            n->op = expr::Op::param;
            n->param_index = i;
            switch (params_[i].kind) {
              case ParamKind::numeric: n->type = expr::Type::number; break;
              case ParamKind::categorical: n->type = expr::Type::string; break;
              case ParamKind::boolean: n->type = expr::Type::boolean; break;
            }
            return n;
          }
        }
        throw ParseError(t.pos, "unknown identifier '" + t.text + "'");
      }
      case Token::Kind::lparen: {
        advance();
        expr::NodePtr inner = or_expr();
        expect(Token::Kind::rparen, "expected ')'");
        return inner;
      }
      default:
        throw ParseError(t.pos, "syntax error: expected a value, identifier, or '('");
    }
  }

  std::vector<Token> tokens_;
  std::span<const ParameterDef> params_;
  std::size_t pos_ = 0;
};

inline bool eval_bool(const expr::Node& n, std::span<const Value> config);

inline double eval_number(const expr::Node& n, std::span<const Value> config) {
  using expr::Op;
  switch (n.op) {
    case Op::literal: return std::get<double>(n.literal);
    case Op::param: return std::get<double>(config[n.param_index]);
    case Op::neg: return -eval_number(*n.lhs, config);
    case Op::add: return eval_number(*n.lhs, config) + eval_number(*n.rhs, config);
    case Op::sub: return eval_number(*n.lhs, config) - eval_number(*n.rhs, config);
    case Op::mul: return eval_number(*n.lhs, config) * eval_number(*n.rhs, config);
    case Op::div: return eval_number(*n.lhs, config) / eval_number(*n.rhs, config);
    case Op::mod: return std::fmod(eval_number(*n.lhs, config), eval_number(*n.rhs, config));
    default: break;
  }
  throw Error("internal: non-numeric node in numeric context");
}

inline const std::string& eval_string(const expr::Node& n, std::span<const Value> config) {
  if (n.op == expr::Op::literal) return std::get<std::string>(n.literal);
  return std::get<std::string>(config[n.param_index]);
}

inline bool eval_compare(const expr::Node& n, std::span<const Value> config) {
  using expr::Op;
  if (n.lhs->type == expr::Type::number) {
    double a = eval_number(*n.lhs, config);
    double b = eval_number(*n.rhs, config);
    switch (n.op) {
      case Op::eq: return a == b;
      case Op::ne: return a != b;
      case Op::lt: return a < b;
      case Op::le: return a <= b;
      case Op::gt: return a > b;
      case Op::ge: return a >= b;
      default: break;
    }
  } else if (n.lhs->type == expr::Type::string) {
    const std::string& a = eval_string(*n.lhs, config);
    const std::string& b = eval_string(*n.rhs, config);
    switch (n.op) {
      case Op::eq: return a == b;
      case Op::ne: return a != b;
      case Op::lt: return a < b;
      case Op::le: return a <= b;
      case Op::gt: return a > b;
      case Op::ge: return a >= b;
      default: break;
    }
  } else {
    bool a = eval_bool(*n.lhs, config);
    bool b = eval_bool(*n.rhs, config);
    return n.op == Op::eq ? a == b : a != b;
  }
  throw Error("internal: bad comparison node");
}

inline bool eval_bool(const expr::Node& n, std::span<const Value> config) {
  using expr::Op;
  switch (n.op) {
    case Op::literal: return std::get<bool>(n.literal);
    case Op::param: return std::get<bool>(config[n.param_index]);
    case Op::logical_not: return !eval_bool(*n.lhs, config);
    case Op::logical_and: return eval_bool(*n.lhs, config) && eval_bool(*n.rhs, config);
    case Op::logical_or: return eval_bool(*n.lhs, config) || eval_bool(*n.rhs, config);
    case Op::eq: case Op::ne: case Op::lt: case Op::le: case Op::gt: case Op::ge:
      return eval_compare(n, config);
    default: break;
  }
  throw Error("internal: non-boolean node in boolean context");
}

}  // namespace detail

/// A parsed, statically type-checked boolean restriction over a parameter set.
class Restriction {
 public:
  static Restriction parse(const std::string& text, std::span<const ParameterDef> params) {
    if (text.empty()) throw ParseError(0, "syntax error: empty restriction");
    detail::RestrictionLexer lexer(text);
    detail::RestrictionParser parser(lexer.run(), params);
    return Restriction(text, parser.run());
  }

  /// Evaluates against a full configuration (one value per parameter, in
  /// declaration order). Total: never throws for type-checked expressions.
  bool evaluate(std::span<const Value> config) const {
    return detail::eval_bool(*ast_, config);
  }

  const std::string& source() const { return source_; }

 private:
  Restriction(std::string source, expr::NodePtr ast)
      : source_(std::move(source)), ast_(std::move(ast)) {}

  std::string source_;
  std::shared_ptr<const expr::Node> ast_;
};

inline Restriction parse_restriction(const std::string& text,
                                     std::span<const ParameterDef> params) {
  return Restriction::parse(text, params);
}

}  // namespace gridtune
