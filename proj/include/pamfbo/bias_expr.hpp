#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pamfbo/acquisition.hpp"

namespace pamfbo {

// Arithmetic over named coordinates for user-defined biases. Grammar:
// + - * / (also the multiplication and division signs), parentheses, decimal
// constants, unary sign, and coordinate names x1..xd. Expressions are parsed
// into a small postfix program; nothing is handed to a host-language eval.
class BiasExpression {
 public:
  static BiasExpression parse(const std::string& text, int dimension);
  double evaluate(const Eigen::VectorXd& x) const;
  const std::string& text() const { return text_; }

 private:
  enum class OpCode : std::uint8_t { PushConstant, PushCoordinate, Add, Subtract, Multiply, Divide, Negate };
  struct Op {
    OpCode code;
    double constant = 0.0;
    int coordinate = 0;
  };

  std::vector<Op> program_;
  std::string text_;
};

// User-defined physics bias: 1 below the top fidelity, the expression's value
// at the top. Values must come out finite and positive.
class ExpressionBias final : public PhysicsBias {
 public:
  ExpressionBias(BiasExpression expression) : expression_(std::move(expression)) {}
  double alpha4(const Eigen::VectorXd& x, int level, int num_levels) const override;
  std::string name() const override { return "custom"; }
  const BiasExpression& expression() const { return expression_; }

 private:
  BiasExpression expression_;
};

}  // namespace pamfbo
