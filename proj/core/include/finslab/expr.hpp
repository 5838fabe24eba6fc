#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "finslab/errors.hpp"
#include "finslab/jet.hpp"

namespace finslab {

// Parsed scalar expression in the variables x1..xn, y1..yn.
// Grammar: conventional precedence, ^ right-associative, implicit
// multiplication rejected; functions sqrt, exp, log, sin, cos, tan, atan.
class Expr {
 public:
  enum class Op : std::uint8_t {
    kConst, kVarX, kVarY,
    kNeg, kAdd, kSub, kMul, kDiv, kPow, kPowInt,
    kSqrt, kExp, kLog, kSin, kCos, kTan, kAtan,
  };

  struct Node {
    Op op;
    int a = -1;      // left child / operand
    int b = -1;      // right child
    double c = 0.0;  // constant payload (kConst) or real exponent (kPow with const rhs)
    int k = 0;       // variable index or integer exponent
  };

  static Expr parse(const std::string& text, int dim);
  static Expr constant(double v);

  template <class T>
  T eval(std::span<const T> x, std::span<const T> y) const {
    return eval_node<T>(root_, x, y);
  }

  bool uses_x() const { return uses_x_; }
  bool uses_y() const { return uses_y_; }
  int dim() const { return dim_; }
  const std::string& source() const { return source_; }
  bool empty() const { return nodes_.empty(); }

 private:
  template <class T>
  T eval_node(int id, std::span<const T> x, std::span<const T> y) const {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    switch (nd.op) {
      case Op::kConst: return T(nd.c);
      case Op::kVarX: return x[static_cast<std::size_t>(nd.k)];
      case Op::kVarY: return y[static_cast<std::size_t>(nd.k)];
      case Op::kNeg: return -eval_node<T>(nd.a, x, y);
      case Op::kAdd: return eval_node<T>(nd.a, x, y) + eval_node<T>(nd.b, x, y);
      case Op::kSub: return eval_node<T>(nd.a, x, y) - eval_node<T>(nd.b, x, y);
      case Op::kMul: return eval_node<T>(nd.a, x, y) * eval_node<T>(nd.b, x, y);
      case Op::kDiv: return eval_node<T>(nd.a, x, y) / eval_node<T>(nd.b, x, y);
      case Op::kPow: {
        T base = eval_node<T>(nd.a, x, y);
        if (nd.b < 0) return pow(base, nd.c);
        return pow(base, eval_node<T>(nd.b, x, y));
      }
      case Op::kPowInt: return powi(eval_node<T>(nd.a, x, y), nd.k);
      case Op::kSqrt: return sqrt(eval_node<T>(nd.a, x, y));
      case Op::kExp: return exp(eval_node<T>(nd.a, x, y));
      case Op::kLog: return log(eval_node<T>(nd.a, x, y));
      case Op::kSin: return sin(eval_node<T>(nd.a, x, y));
      case Op::kCos: return cos(eval_node<T>(nd.a, x, y));
      case Op::kTan: return tan(eval_node<T>(nd.a, x, y));
      case Op::kAtan: return atan(eval_node<T>(nd.a, x, y));
    }
    return T(0.0);
  }

  friend class ExprParser;
  std::vector<Node> nodes_;
  int root_ = -1;
  int dim_ = 0;
  bool uses_x_ = false;
  bool uses_y_ = false;
  std::string source_;
};

}  // namespace finslab
