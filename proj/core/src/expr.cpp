#include "finslab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>

namespace finslab {

namespace {

enum class Tok { kEnd, kNumber, kIdent, kPlus, kMinus, kStar, kSlash, kCaret, kLParen, kRParen, kComma };

struct Token {
  Tok kind = Tok::kEnd;
  double number = 0.0;
  std::string ident;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    Token t;
    t.offset = pos_;
    if (pos_ >= s_.size()) return t;
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      t.number = std::strtod(begin, &end);
      if (end == begin) throw ParseError("malformed number", pos_);
      pos_ += static_cast<std::size_t>(end - begin);
      t.kind = Tok::kNumber;
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      t.kind = Tok::kIdent;
      t.ident = s_.substr(start, pos_ - start);
      return t;
    }
    ++pos_;
    switch (c) {
      case '+': t.kind = Tok::kPlus; return t;
      case '-': t.kind = Tok::kMinus; return t;
      case '*': t.kind = Tok::kStar; return t;
      case '/': t.kind = Tok::kSlash; return t;
      case '^': t.kind = Tok::kCaret; return t;
      case '(': t.kind = Tok::kLParen; return t;
      case ')': t.kind = Tok::kRParen; return t;
      case ',': t.kind = Tok::kComma; return t;
      default: throw ParseError(std::string("unexpected character '") + c + "'", t.offset);
    }
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

const std::map<std::string, Expr::Op, std::less<>> kFunctions = {
    {"sqrt", Expr::Op::kSqrt}, {"exp", Expr::Op::kExp}, {"log", Expr::Op::kLog},
    {"sin", Expr::Op::kSin},   {"cos", Expr::Op::kCos}, {"tan", Expr::Op::kTan},
    {"atan", Expr::Op::kAtan},
};

}  // namespace

class ExprParser {
 public:
  ExprParser(const std::string& text, int dim) : lex_(text), dim_(dim) { advance(); }

  Expr run(const std::string& text) {
    int root = parse_sum();
    if (cur_.kind != Tok::kEnd) throw ParseError("trailing input", cur_.offset);
    out_.root_ = root;
    out_.dim_ = dim_;
    out_.source_ = text;
    return std::move(out_);
  }

 private:
  void advance() { cur_ = lex_.next(); }

  int add(Expr::Node nd) {
    out_.nodes_.push_back(nd);
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  bool is_const(int id, double* v) const {
    const auto& nd = out_.nodes_[static_cast<std::size_t>(id)];
    if (nd.op != Expr::Op::kConst) return false;
    *v = nd.c;
    return true;
  }

  int parse_sum() {
    int lhs = parse_term();
    while (cur_.kind == Tok::kPlus || cur_.kind == Tok::kMinus) {
      bool plus = cur_.kind == Tok::kPlus;
      advance();
      int rhs = parse_term();
      lhs = add({plus ? Expr::Op::kAdd : Expr::Op::kSub, lhs, rhs});
    }
    return lhs;
  }

  int parse_term() {
    int lhs = parse_power();
    while (cur_.kind == Tok::kStar || cur_.kind == Tok::kSlash) {
      bool mul = cur_.kind == Tok::kStar;
      advance();
      int rhs = parse_power();
      lhs = add({mul ? Expr::Op::kMul : Expr::Op::kDiv, lhs, rhs});
    }
    return lhs;
  }

  int parse_power() {
    int base = parse_atom();
    if (cur_.kind != Tok::kCaret) return base;
    advance();
    int expo;
    if (cur_.kind == Tok::kMinus) {  // allow a^-2
      advance();
      int operand = parse_power();
      double v0;
      if (is_const(operand, &v0)) {
        out_.nodes_[static_cast<std::size_t>(operand)].c = -v0;
        expo = operand;
      } else {
        expo = add({Expr::Op::kNeg, operand});
      }
    } else {
      expo = parse_power();  // right-associative
    }
    double c;
    if (is_const(expo, &c)) {
      double r = std::round(c);
      if (std::abs(c - r) < 1e-12 && std::abs(r) <= 64.0) {
        Expr::Node nd{Expr::Op::kPowInt, base};
        nd.k = static_cast<int>(r);
        return add(nd);
      }
      Expr::Node nd{Expr::Op::kPow, base};
      nd.b = -1;
      nd.c = c;
      return add(nd);
    }
    return add({Expr::Op::kPow, base, expo});
  }

  int parse_atom() {
    switch (cur_.kind) {
      case Tok::kNumber: {
        double v = cur_.number;
        advance();
        check_no_juxtaposition();
        return add({Expr::Op::kConst, -1, -1, v});
      }
      case Tok::kLParen: {
        advance();
        int e = parse_sum();
        if (cur_.kind != Tok::kRParen) throw ParseError("expected ')'", cur_.offset);
        advance();
        check_no_juxtaposition();
        return e;
      }
      case Tok::kMinus: {
        advance();
        int operand = parse_power();
        return add({Expr::Op::kNeg, operand});
      }
      case Tok::kIdent: {
        std::string name = cur_.ident;
        std::size_t off = cur_.offset;
        advance();
        if (cur_.kind == Tok::kLParen) {
          auto it = kFunctions.find(name);
          if (it == kFunctions.end()) throw ParseError("unknown function '" + name + "'", off);
          advance();
          int arg = parse_sum();
          if (cur_.kind != Tok::kRParen) throw ParseError("expected ')'", cur_.offset);
          advance();
          check_no_juxtaposition();
          return add({it->second, arg});
        }
        if (name == "pi") {
          check_no_juxtaposition();
          return add({Expr::Op::kConst, -1, -1, 3.14159265358979323846});
        }
        int vi = variable_index(name, off);
        check_no_juxtaposition();
        Expr::Node nd{vi < dim_ ? Expr::Op::kVarX : Expr::Op::kVarY};
        nd.k = vi < dim_ ? vi : vi - dim_;
        if (vi < dim_) out_.uses_x_ = true; else out_.uses_y_ = true;
        return add(nd);
      }
      default:
        throw ParseError("expected operand", cur_.offset);
    }
  }

  // x1..xn map to [0,n), y1..yn map to [n,2n)
  int variable_index(const std::string& name, std::size_t off) const {
    if (name.size() < 2 || (name[0] != 'x' && name[0] != 'y'))
      throw ParseError("unknown identifier '" + name + "'", off);
    for (std::size_t i = 1; i < name.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(name[i])))
        throw ParseError("unknown identifier '" + name + "'", off);
    int idx = std::atoi(name.c_str() + 1);
    if (idx < 1 || idx > dim_)
      throw ParseError("variable '" + name + "' out of range for dimension " +
                           std::to_string(dim_), off);
    return (name[0] == 'x' ? 0 : dim_) + idx - 1;
  }

  void check_no_juxtaposition() const {
    if (cur_.kind == Tok::kNumber || cur_.kind == Tok::kIdent || cur_.kind == Tok::kLParen)
      throw ParseError("implicit multiplication is not allowed", cur_.offset);
  }

  Lexer lex_;
  Token cur_;
  int dim_;
  Expr out_;
};

Expr Expr::parse(const std::string& text, int dim) {
  if (dim < 1 || dim > kMaxDim) throw ParseError("dimension out of range", 0);
  ExprParser p(text, dim);
  return p.run(text);
}

Expr Expr::constant(double v) {
  Expr e;
  e.nodes_.push_back({Op::kConst, -1, -1, v});
  e.root_ = 0;
  e.dim_ = 0;
  e.source_ = std::to_string(v);
  return e;
}

}  // namespace finslab
