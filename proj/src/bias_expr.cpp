#include "pamfbo/bias_expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <stdexcept>

namespace pamfbo {

namespace {

struct Token {
  enum class Kind { Number, Name, Plus, Minus, Star, Slash, LeftParen, RightParen, End };
  Kind kind;
  double number = 0.0;
  std::string name;
  std::size_t position = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& current() const { return token_; }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    token_.position = pos_;
    if (pos_ >= text_.size()) {
      token_.kind = Token::Kind::End;
      return;
    }
    const char c = text_[pos_];
    // UTF-8 multiplication and division signs
    if (text_.compare(pos_, 2, "\xc3\x97") == 0) {
      token_.kind = Token::Kind::Star;
      pos_ += 2;
      return;
    }
    if (text_.compare(pos_, 2, "\xc3\xb7") == 0) {
      token_.kind = Token::Kind::Slash;
      pos_ += 2;
      return;
    }
    switch (c) {
      case '+': token_.kind = Token::Kind::Plus; ++pos_; return;
      case '-': token_.kind = Token::Kind::Minus; ++pos_; return;
      case '*': token_.kind = Token::Kind::Star; ++pos_; return;
      case '/': token_.kind = Token::Kind::Slash; ++pos_; return;
      case '(': token_.kind = Token::Kind::LeftParen; ++pos_; return;
      case ')': token_.kind = Token::Kind::RightParen; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* end = nullptr;
      token_.number = std::strtod(text_.c_str() + pos_, &end);
      if (end == text_.c_str() + pos_) fail("malformed number");
      token_.kind = Token::Kind::Number;
      pos_ = static_cast<std::size_t>(end - text_.c_str());
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
        ++end;
      }
      token_.kind = Token::Kind::Name;
      token_.name = text_.substr(pos_, end - pos_);
      pos_ = end;
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw std::invalid_argument("bias expression: " + message + " at position " +
                                std::to_string(token_.position));
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
  Token token_;
};

}  // namespace

BiasExpression BiasExpression::parse(const std::string& text, int dimension) {
  BiasExpression expr;
  expr.text_ = text;
  Lexer lexer(text);

  // recursive descent; emits postfix as it goes
  auto emit = [&expr](Op op) { expr.program_.push_back(op); };

  std::function<void()> parse_expr;
  std::function<void()> parse_term;
  std::function<void()> parse_factor;

  parse_factor = [&]() {
    const Token tok = lexer.current();
    switch (tok.kind) {
      case Token::Kind::Number:
        lexer.advance();
        emit({OpCode::PushConstant, tok.number, 0});
        return;
      case Token::Kind::Name: {
        lexer.advance();
        if (tok.name.size() < 2 || tok.name[0] != 'x') {
          lexer.fail("unknown name '" + tok.name + "' (coordinates are x1..x" +
                     std::to_string(dimension) + ")");
        }
        int index = 0;
        for (std::size_t i = 1; i < tok.name.size(); ++i) {
          if (!std::isdigit(static_cast<unsigned char>(tok.name[i]))) {
            lexer.fail("unknown name '" + tok.name + "'");
          }
          index = index * 10 + (tok.name[i] - '0');
        }
        if (index < 1 || index > dimension) {
          lexer.fail("coordinate " + tok.name + " outside x1..x" + std::to_string(dimension));
        }
        emit({OpCode::PushCoordinate, 0.0, index - 1});
        return;
      }
      case Token::Kind::LeftParen:
        lexer.advance();
        parse_expr();
        if (lexer.current().kind != Token::Kind::RightParen) lexer.fail("expected ')'");
        lexer.advance();
        return;
      case Token::Kind::Minus:
        lexer.advance();
        parse_factor();
        emit({OpCode::Negate, 0.0, 0});
        return;
      case Token::Kind::Plus:
        lexer.advance();
        parse_factor();
        return;
      default:
        lexer.fail("expected a number, coordinate, or '('");
    }
  };

  parse_term = [&]() {
    parse_factor();
    while (lexer.current().kind == Token::Kind::Star ||
           lexer.current().kind == Token::Kind::Slash) {
      const bool multiply = lexer.current().kind == Token::Kind::Star;
      lexer.advance();
      parse_factor();
      emit({multiply ? OpCode::Multiply : OpCode::Divide, 0.0, 0});
    }
  };

  parse_expr = [&]() {
    parse_term();
    while (lexer.current().kind == Token::Kind::Plus ||
           lexer.current().kind == Token::Kind::Minus) {
      const bool add = lexer.current().kind == Token::Kind::Plus;
      lexer.advance();
      parse_term();
      emit({add ? OpCode::Add : OpCode::Subtract, 0.0, 0});
    }
  };

  parse_expr();
  if (lexer.current().kind != Token::Kind::End) lexer.fail("trailing input");
  return expr;
}

double BiasExpression::evaluate(const Eigen::VectorXd& x) const {
  std::vector<double> stack;
  stack.reserve(program_.size());
  for (const Op& op : program_) {
    switch (op.code) {
      case OpCode::PushConstant:
        stack.push_back(op.constant);
        break;
      case OpCode::PushCoordinate:
        if (op.coordinate >= x.size()) {
          throw std::invalid_argument("bias expression: coordinate out of range");
        }
        stack.push_back(x[op.coordinate]);
        break;
      case OpCode::Negate:
        stack.back() = -stack.back();
        break;
      default: {
        const double rhs = stack.back();
        stack.pop_back();
        double& lhs = stack.back();
        switch (op.code) {
          case OpCode::Add: lhs += rhs; break;
          case OpCode::Subtract: lhs -= rhs; break;
          case OpCode::Multiply: lhs *= rhs; break;
          case OpCode::Divide: lhs /= rhs; break;
          default: break;
        }
      }
    }
  }
  return stack.back();
}

double ExpressionBias::alpha4(const Eigen::VectorXd& x, int level, int num_levels) const {
  if (level < 1 || level > num_levels) {
    throw std::invalid_argument("custom bias: level out of range");
  }
  if (level < num_levels) return 1.0;
  const double value = expression_.evaluate(x);
  if (!std::isfinite(value) || !(value > 0.0)) {
    throw std::domain_error("custom bias: expression must evaluate to a positive finite value");
  }
  return value;
}

}  // namespace pamfbo
