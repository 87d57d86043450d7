#include "ibart/descriptor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "ibart/error.hpp"

namespace ibart {

struct Descriptor::Node {
  OpKind op = OpKind::kIdentity;
  std::size_t leaf = 0;
  std::vector<Descriptor> children;
  int complexity = 0;
  std::optional<Unit> unit;
  std::string text;
};

namespace {

struct OpInfo {
  OpKind op;
  std::string_view name;
  int arity;
};

constexpr OpInfo kOps[] = {
    {OpKind::kIdentity, "identity", 1}, {OpKind::kAdd, "add", 2},
    {OpKind::kSubtract, "sub", 2},      {OpKind::kMultiply, "mul", 2},
    {OpKind::kDivide, "div", 2},        {OpKind::kAbsDiff, "absdiff", 2},
    {OpKind::kInverse, "inv", 1},       {OpKind::kSquare, "square", 1},
    {OpKind::kSqrt, "sqrt", 1},         {OpKind::kLog, "log", 1},
    {OpKind::kExp, "exp", 1},           {OpKind::kAbs, "abs", 1},
    {OpKind::kSinPi, "sin", 1},         {OpKind::kCosPi, "cos", 1},
};

const OpInfo& info(OpKind op) {
  for (const auto& i : kOps)
    if (i.op == op) return i;
  throw ValidationError("unknown operator");
}

std::string render(OpKind op, const std::string& a, const std::string& b) {
  switch (op) {
    case OpKind::kAdd: return "(" + a + "+" + b + ")";
    case OpKind::kSubtract: return "(" + a + "-" + b + ")";
    case OpKind::kMultiply: return "(" + a + "*" + b + ")";
    case OpKind::kDivide: return "(" + a + "/" + b + ")";
    case OpKind::kAbsDiff: return "|" + a + "-" + b + "|";
    case OpKind::kInverse: return "(" + a + "^-1)";
    case OpKind::kSquare: return "(" + a + "^2)";
    case OpKind::kSqrt: return "sqrt(" + a + ")";
    case OpKind::kLog: return "log(" + a + ")";
    case OpKind::kExp: return "exp(" + a + ")";
    case OpKind::kAbs: return "abs(" + a + ")";
    case OpKind::kSinPi: return "sin(pi*" + a + ")";
    case OpKind::kCosPi: return "cos(pi*" + a + ")";
    case OpKind::kIdentity: return a;
  }
  return a;
}

}  // namespace

int arity(OpKind op) { return info(op).arity; }

bool is_commutative(OpKind op) {
  return op == OpKind::kAdd || op == OpKind::kMultiply ||
         op == OpKind::kAbsDiff;
}

std::string_view op_name(OpKind op) { return info(op).name; }

OpKind op_from_name(std::string_view name) {
  for (const auto& i : kOps)
    if (i.name == name) return i.op;
  // Symbolic aliases accepted in configs.
  if (name == "+") return OpKind::kAdd;
  if (name == "-") return OpKind::kSubtract;
  if (name == "*") return OpKind::kMultiply;
  if (name == "/") return OpKind::kDivide;
  if (name == "|-|") return OpKind::kAbsDiff;
  if (name == "^-1") return OpKind::kInverse;
  if (name == "^2") return OpKind::kSquare;
  if (name == "I") return OpKind::kIdentity;
  throw ValidationError("unknown operator name '" + std::string(name) + "'");
}

std::vector<OpKind> all_unary_ops() {
  return {OpKind::kExp,     OpKind::kLog,    OpKind::kAbs,   OpKind::kSqrt,
          OpKind::kInverse, OpKind::kSquare, OpKind::kSinPi, OpKind::kCosPi};
}

std::vector<OpKind> all_binary_ops() {
  return {OpKind::kAdd, OpKind::kSubtract, OpKind::kMultiply, OpKind::kDivide,
          OpKind::kAbsDiff};
}

double apply_scalar(OpKind op, double a, double b) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  switch (op) {
    case OpKind::kIdentity: return a;
    case OpKind::kAdd: return a + b;
    case OpKind::kSubtract: return a - b;
    case OpKind::kMultiply: return a * b;
    case OpKind::kDivide: return b == 0.0 ? nan : a / b;
    case OpKind::kAbsDiff: return std::abs(a - b);
    case OpKind::kInverse: return a == 0.0 ? nan : 1.0 / a;
    case OpKind::kSquare: return a * a;
    case OpKind::kSqrt: return a < 0.0 ? nan : std::sqrt(a);
    case OpKind::kLog: return a <= 0.0 ? nan : std::log(a);
    case OpKind::kExp: return std::exp(a);
    case OpKind::kAbs: return std::abs(a);
    case OpKind::kSinPi: return std::sin(std::numbers::pi * a);
    case OpKind::kCosPi: return std::cos(std::numbers::pi * a);
  }
  return nan;
}

std::optional<Unit> apply_unit_rule(OpKind op, const Unit& a, const Unit* b) {
  switch (op) {
    case OpKind::kIdentity:
    case OpKind::kAbs:
      return a;
    case OpKind::kAdd:
    case OpKind::kSubtract:
    case OpKind::kAbsDiff:
      if (b == nullptr || !(a == *b)) return std::nullopt;
      return a;
    case OpKind::kMultiply:
      if (b == nullptr) return std::nullopt;
      return a * *b;
    case OpKind::kDivide:
      if (b == nullptr) return std::nullopt;
      return a / *b;
    case OpKind::kInverse: return a.pow(Rational(-1));
    case OpKind::kSquare: return a.pow(Rational(2));
    case OpKind::kSqrt: return a.pow(Rational(1, 2));
    case OpKind::kLog:
    case OpKind::kExp:
    case OpKind::kSinPi:
    case OpKind::kCosPi:
      if (!a.is_dimensionless()) return std::nullopt;
      return Unit::dimensionless();
  }
  return std::nullopt;
}

Descriptor Descriptor::leaf(std::size_t index, Unit unit) {
  auto n = std::make_shared<Node>();
  n->leaf = index;
  n->unit = unit;
  n->text = "x" + std::to_string(index + 1);
  return Descriptor(std::move(n));
}

Descriptor Descriptor::unary(OpKind op, const Descriptor& arg) {
  if (op == OpKind::kIdentity) return arg;
  if (arity(op) != 1)
    throw ValidationError("operator '" + std::string(op_name(op)) +
                          "' is not unary");
  // Squaring discards sign: |a|^2 = a^2 and |a-b|^2 = (b-a)^2 = (a-b)^2.
  if (op == OpKind::kSquare && !arg.is_leaf()) {
    if (arg.op() == OpKind::kAbs) return unary(op, arg.child(0));
    if (arg.op() == OpKind::kAbsDiff)
      return unary(op, binary(OpKind::kSubtract, arg.child(0), arg.child(1)));
    if (arg.op() == OpKind::kSubtract &&
        natural_less(arg.child(1).str(), arg.child(0).str()))
      return unary(op, binary(OpKind::kSubtract, arg.child(1), arg.child(0)));
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->children = {arg};
  n->complexity = arg.complexity() + 1;
  if (arg.unit()) n->unit = apply_unit_rule(op, *arg.unit());
  n->text = render(op, arg.str(), {});
  return Descriptor(std::move(n));
}

Descriptor Descriptor::binary(OpKind op, const Descriptor& lhs,
                              const Descriptor& rhs) {
  if (arity(op) != 2)
    throw ValidationError("operator '" + std::string(op_name(op)) +
                          "' is not binary");
  if (op == OpKind::kMultiply && lhs == rhs)
    return unary(OpKind::kSquare, lhs);
  const bool swap = is_commutative(op) && natural_less(rhs.str(), lhs.str());
  const Descriptor& a = swap ? rhs : lhs;
  const Descriptor& b = swap ? lhs : rhs;
  auto n = std::make_shared<Node>();
  n->op = op;
  n->children = {a, b};
  n->complexity = std::max(a.complexity(), b.complexity()) + 1;
  if (a.unit() && b.unit()) {
    const Unit ub = *b.unit();
    n->unit = apply_unit_rule(op, *a.unit(), &ub);
  }
  n->text = render(op, a.str(), b.str());
  return Descriptor(std::move(n));
}

bool Descriptor::is_leaf() const { return node_->children.empty(); }
std::size_t Descriptor::leaf_index() const { return node_->leaf; }
OpKind Descriptor::op() const { return node_->op; }
std::size_t Descriptor::child_count() const { return node_->children.size(); }
const Descriptor& Descriptor::child(std::size_t i) const {
  return node_->children.at(i);
}
int Descriptor::complexity() const { return node_->complexity; }
const std::optional<Unit>& Descriptor::unit() const { return node_->unit; }
const std::string& Descriptor::str() const { return node_->text; }

std::vector<std::size_t> Descriptor::leaves() const {
  std::vector<std::size_t> out;
  std::vector<const Descriptor*> stack{this};
  while (!stack.empty()) {
    const Descriptor* d = stack.back();
    stack.pop_back();
    if (d->is_leaf()) {
      out.push_back(d->leaf_index());
    } else {
      for (const auto& c : d->node_->children) stack.push_back(&c);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)); };
  while (i < a.size() && j < b.size()) {
    if (digit(a[i]) && digit(b[j])) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && digit(a[ie])) ++ie;
      while (je < b.size() && digit(b[je])) ++je;
      std::string_view ra = a.substr(i, ie - i), rb = b.substr(j, je - j);
      while (ra.size() > 1 && ra.front() == '0') ra.remove_prefix(1);
      while (rb.size() > 1 && rb.front() == '0') rb.remove_prefix(1);
      if (ra.size() != rb.size()) return ra.size() < rb.size();
      if (ra != rb) return ra < rb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::span<const Unit> units)
      : text_(text), units_(units) {}

  Descriptor parse() {
    Descriptor d = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return d;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  // Matches a keyword followed by '(' with optional whitespace between.
  bool keyword(std::string_view word) {
    skip_ws();
    if (text_.substr(pos_, word.size()) != word) return false;
    std::size_t p = pos_ + word.size();
    while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p])))
      ++p;
    if (p >= text_.size() || text_[p] != '(') return false;
    pos_ = p + 1;
    return true;
  }

  void expect_pi_times() {
    skip_ws();
    if (text_.substr(pos_, 2) != "pi") fail("expected 'pi*'");
    pos_ += 2;
    expect('*');
  }

  Descriptor leaf() {
    ++pos_;  // 'x'
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (start == pos_) fail("expected feature index after 'x'");
    const std::size_t k = std::stoul(std::string(text_.substr(start, pos_ - start)));
    if (k == 0) {
      pos_ = start;
      fail("feature indices are 1-based");
    }
    if (!units_.empty()) {
      if (k > units_.size()) {
        pos_ = start;
        fail("feature index x" + std::to_string(k) + " out of range");
      }
      return Descriptor::leaf(k - 1, units_[k - 1]);
    }
    return Descriptor::leaf(k - 1);
  }

  Descriptor expr() {
    const char c = peek();
    if (c == 'x') return leaf();
    if (c == '|') {
      ++pos_;
      Descriptor a = expr();
      expect('-');
      Descriptor b = expr();
      expect('|');
      return Descriptor::binary(OpKind::kAbsDiff, a, b);
    }
    if (c == '(') {
      ++pos_;
      Descriptor a = expr();
      const char o = peek();
      switch (o) {
        case ')':
          ++pos_;
          return a;
        case '+':
        case '-':
        case '*':
        case '/': {
          ++pos_;
          Descriptor b = expr();
          expect(')');
          const OpKind op = o == '+'   ? OpKind::kAdd
                            : o == '-' ? OpKind::kSubtract
                            : o == '*' ? OpKind::kMultiply
                                       : OpKind::kDivide;
          return Descriptor::binary(op, a, b);
        }
        case '^': {
          ++pos_;
          skip_ws();
          if (text_.substr(pos_, 2) == "-1") {
            pos_ += 2;
            expect(')');
            return Descriptor::unary(OpKind::kInverse, a);
          }
          if (text_.substr(pos_, 1) == "2") {
            pos_ += 1;
            expect(')');
            return Descriptor::unary(OpKind::kSquare, a);
          }
          fail("only ^2 and ^-1 are supported");
        }
        default:
          fail("expected operator or ')'");
      }
    }
    if (keyword("abs")) {
      Descriptor a = expr();
      if (peek() == '-') {
        ++pos_;
        Descriptor b = expr();
        expect(')');
        return Descriptor::binary(OpKind::kAbsDiff, a, b);
      }
      expect(')');
      return Descriptor::unary(OpKind::kAbs, a);
    }
    for (auto [word, op] : {std::pair{std::string_view("sin"), OpKind::kSinPi},
                            std::pair{std::string_view("cos"), OpKind::kCosPi}}) {
      if (keyword(word)) {
        expect_pi_times();
        Descriptor a = expr();
        expect(')');
        return Descriptor::unary(op, a);
      }
    }
    for (auto [word, op] : {std::pair{std::string_view("exp"), OpKind::kExp},
                            std::pair{std::string_view("log"), OpKind::kLog},
                            std::pair{std::string_view("sqrt"), OpKind::kSqrt},
                            std::pair{std::string_view("inv"), OpKind::kInverse}}) {
      if (keyword(word)) {
        Descriptor a = expr();
        expect(')');
        return Descriptor::unary(op, a);
      }
    }
    fail("unexpected input");
  }

  std::string_view text_;
  std::span<const Unit> units_;
  std::size_t pos_ = 0;
};

}  // namespace

Descriptor parse_descriptor(std::string_view text,
                            std::span<const Unit> leaf_units) {
  return Parser(text, leaf_units).parse();
}

// ---------------------------------------------------------------------------
// Evaluation

std::optional<Eigen::VectorXd> apply_columns(OpKind op,
                                             const Eigen::VectorXd& a,
                                             const Eigen::VectorXd* b,
                                             const EvalOptions& options,
                                             EvalFailure* failure) {
  const Eigen::Index n = a.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = apply_scalar(op, a[i], b ? (*b)[i] : 0.0);
    if (!std::isfinite(v) || std::abs(v) > options.magnitude_cap) {
      if (failure) *failure = {std::string(op_name(op)),
                               static_cast<std::size_t>(i), v};
      return std::nullopt;
    }
    out[i] = v;
  }
  return out;
}

std::optional<Eigen::VectorXd> try_evaluate(const Descriptor& d,
                                            const Eigen::MatrixXd& data,
                                            const EvalOptions& options,
                                            EvalFailure* failure) {
  if (d.is_leaf()) {
    if (d.leaf_index() >= static_cast<std::size_t>(data.cols()))
      throw ValidationError("descriptor references x" +
                            std::to_string(d.leaf_index() + 1) +
                            " but data has " + std::to_string(data.cols()) +
                            " columns");
    Eigen::VectorXd col = data.col(static_cast<Eigen::Index>(d.leaf_index()));
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (!std::isfinite(col[i])) {
        if (failure) *failure = {d.str(), static_cast<std::size_t>(i), col[i]};
        return std::nullopt;
      }
    }
    return col;
  }
  auto a = try_evaluate(d.child(0), data, options, failure);
  if (!a) return std::nullopt;
  if (d.child_count() == 1) return apply_columns(d.op(), *a, nullptr, options, failure);
  auto b = try_evaluate(d.child(1), data, options, failure);
  if (!b) return std::nullopt;
  return apply_columns(d.op(), *a, &*b, options, failure);
}

Eigen::VectorXd evaluate(const Descriptor& d, const Eigen::MatrixXd& data,
                         const EvalOptions& options) {
  EvalFailure failure;
  auto col = try_evaluate(d, data, options, &failure);
  if (!col) throw DomainError(failure.op, failure.row, failure.value);
  return *std::move(col);
}

}  // namespace ibart
