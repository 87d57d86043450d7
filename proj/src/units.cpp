#include "ibart/units.hpp"

#include <cctype>
#include <charconv>
#include <numeric>

#include "ibart/error.hpp"

namespace ibart {

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw ValidationError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g == 0 ? 0 : num / g;
  den_ = g == 0 ? 1 : den / g;
}

Rational operator+(Rational a, Rational b) {
  return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
}

Rational operator-(Rational a, Rational b) { return a + (-b); }

Rational operator*(Rational a, Rational b) {
  return {a.num_ * b.num_, a.den_ * b.den_};
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return "(" + std::to_string(num_) + "/" + std::to_string(den_) + ")";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ValidationError("bad unit exponent in '" + std::string(whole) + "'");
  return v;
}

Rational parse_exponent(std::string_view s, std::string_view whole) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')')
    s = s.substr(1, s.size() - 2);
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return Rational(parse_int(s, whole));
  return Rational(parse_int(s.substr(0, slash), whole),
                  parse_int(s.substr(slash + 1), whole));
}

}  // namespace

Unit Unit::parse(std::string_view text) {
  Unit u;
  const std::string_view whole = text;
  text = trim(text);
  if (text.empty() || text == "1" || text == "-") return u;
  while (!text.empty()) {
    const auto star = text.find('*');
    std::string_view factor = trim(text.substr(0, star));
    text = star == std::string_view::npos ? std::string_view{}
                                          : text.substr(star + 1);
    if (factor.empty())
      throw ValidationError("empty factor in unit '" + std::string(whole) +
                            "'");
    const auto caret = factor.find('^');
    const std::string_view symbol = trim(factor.substr(0, caret));
    const Rational power = caret == std::string_view::npos
                               ? Rational(1)
                               : parse_exponent(factor.substr(caret + 1), whole);
    std::size_t base = kBaseCount;
    for (std::size_t i = 0; i < kBaseCount; ++i)
      if (kSymbols[i] == symbol) base = i;
    if (base == kBaseCount)
      throw ValidationError("unknown base unit '" + std::string(symbol) +
                            "' in '" + std::string(whole) + "'");
    u.exps_[base] = u.exps_[base] + power;
  }
  return u;
}

bool Unit::is_dimensionless() const {
  for (const auto& e : exps_)
    if (!e.is_zero()) return false;
  return true;
}

Unit Unit::operator*(const Unit& other) const {
  Unit r;
  for (std::size_t i = 0; i < kBaseCount; ++i)
    r.exps_[i] = exps_[i] + other.exps_[i];
  return r;
}

Unit Unit::operator/(const Unit& other) const {
  Unit r;
  for (std::size_t i = 0; i < kBaseCount; ++i)
    r.exps_[i] = exps_[i] - other.exps_[i];
  return r;
}

Unit Unit::pow(Rational power) const {
  Unit r;
  for (std::size_t i = 0; i < kBaseCount; ++i) r.exps_[i] = exps_[i] * power;
  return r;
}

std::string Unit::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < kBaseCount; ++i) {
    if (exps_[i].is_zero()) continue;
    if (!out.empty()) out += '*';
    out += std::string(kSymbols[i]) + "^" + exps_[i].to_string();
  }
  return out.empty() ? "1" : out;
}

}  // namespace ibart
