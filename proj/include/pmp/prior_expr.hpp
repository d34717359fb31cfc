#pragma once

#include <memory>
#include <string>

#include "pmp/family.hpp"

namespace pmp {

/// A log-prior written as an arithmetic expression over θ components.
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?
///   primary := number | 'theta1' | 'theta2' | 'theta3' | 'pi' | 'e'
///            | func '(' expr (',' expr)? ')' | '(' expr ')'
///   func    := 'log' | 'exp' | 'sqrt' | 'pow' | 'abs'
///
/// '^' is right-associative and binds tighter than unary minus, so -x^2 is
/// -(x^2). Parse errors are ConfigError with a 1-based column.
class PriorExpression {
 public:
  struct Node;

  /// Rejects references to θ components beyond param_dim.
  static PriorExpression parse(const std::string& text, int param_dim);

  [[nodiscard]] double operator()(const ParamVec& theta) const;
  [[nodiscard]] const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

/// PriorField with log_prior = the expression and a central-difference
/// gradient.
PriorField expression_prior(const std::string& name, const std::string& text, int param_dim,
                            const NumericsConfig& cfg = {});

}  // namespace pmp
