#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ibart/units.hpp"

namespace ibart {

enum class OpKind {
  kIdentity,
  kAdd,
  kSubtract,
  kMultiply,
  kDivide,
  kAbsDiff,
  kInverse,
  kSquare,
  kSqrt,
  kLog,
  kExp,
  kAbs,
  kSinPi,
  kCosPi,
};

int arity(OpKind op);
bool is_commutative(OpKind op);
// Stable short name used in configs: "add", "sub", "mul", "div", "absdiff",
// "inv", "square", "sqrt", "log", "exp", "abs", "sin", "cos", "identity".
std::string_view op_name(OpKind op);
OpKind op_from_name(std::string_view name);

// {exp, log, abs, sqrt, inv, square, sin, cos} (identity implied).
std::vector<OpKind> all_unary_ops();
// {add, sub, mul, div, absdiff} (identity implied).
std::vector<OpKind> all_binary_ops();

// Scalar semantics of each operator. Returns NaN/inf for out-of-domain
// arguments rather than throwing.
double apply_scalar(OpKind op, double a, double b = 0.0);

// Unit propagation. nullopt when the operator is not dimensionally legal for
// the given argument units.
std::optional<Unit> apply_unit_rule(OpKind op, const Unit& a,
                                    const Unit* b = nullptr);

// Immutable expression tree over primary-feature leaves. Cheap to copy;
// nodes are shared. Construction canonicalizes: identity is elided,
// commutative arguments are ordered and x*x becomes x^2.
class Descriptor {
 public:
  // index is zero-based; it prints as x<index+1>.
  static Descriptor leaf(std::size_t index, Unit unit = Unit::dimensionless());
  static Descriptor unary(OpKind op, const Descriptor& arg);
  static Descriptor binary(OpKind op, const Descriptor& lhs,
                           const Descriptor& rhs);

  bool is_leaf() const;
  std::size_t leaf_index() const;
  OpKind op() const;
  std::size_t child_count() const;
  const Descriptor& child(std::size_t i) const;

  // Number of non-identity operator applications on the deepest chain.
  int complexity() const;
  // Unit of the value, or nullopt if some node violates a unit rule.
  const std::optional<Unit>& unit() const;
  const std::string& str() const;

  // Zero-based indices of all leaves, sorted and unique.
  std::vector<std::size_t> leaves() const;

  friend bool operator==(const Descriptor& a, const Descriptor& b) {
    return a.str() == b.str();
  }

 private:
  struct Node;
  explicit Descriptor(std::shared_ptr<const Node> node)
      : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

// Orders strings so that embedded digit runs compare numerically
// ("x2" < "x10").
bool natural_less(std::string_view a, std::string_view b);

// Parses the infix grammar produced by Descriptor::str(). leaf_units, when
// non-empty, supplies the unit of each primary feature.
Descriptor parse_descriptor(std::string_view text,
                            std::span<const Unit> leaf_units = {});

struct EvalOptions {
  double magnitude_cap = 1e8;
};

struct EvalFailure {
  std::string op;
  std::size_t row = 0;
  double value = 0.0;
};

// Entry-wise evaluation over the rows of a primary-feature matrix. Throws
// DomainError on the first non-finite or over-cap entry, ValidationError on a
// leaf index outside the data.
Eigen::VectorXd evaluate(const Descriptor& d, const Eigen::MatrixXd& data,
                         const EvalOptions& options = {});

// Same as evaluate, reporting a domain failure through the out-parameter
// instead of throwing.
std::optional<Eigen::VectorXd> try_evaluate(const Descriptor& d,
                                            const Eigen::MatrixXd& data,
                                            const EvalOptions& options = {},
                                            EvalFailure* failure = nullptr);

// Applies one operator to already-evaluated argument columns.
std::optional<Eigen::VectorXd> apply_columns(OpKind op,
                                             const Eigen::VectorXd& a,
                                             const Eigen::VectorXd* b,
                                             const EvalOptions& options,
                                             EvalFailure* failure = nullptr);

}  // namespace ibart
