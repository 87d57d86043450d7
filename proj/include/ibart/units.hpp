#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace ibart {

// Exact rational number with a positive denominator in lowest terms.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }

  friend Rational operator+(Rational a, Rational b);
  friend Rational operator-(Rational a, Rational b);
  friend Rational operator-(Rational a) { return {-a.num_, a.den_}; }
  friend Rational operator*(Rational a, Rational b);
  friend bool operator==(const Rational&, const Rational&) = default;

  std::string to_string() const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Physical dimension as exponents over the SI base dimensions
// kg, m, s, A, K, mol, cd.
class Unit {
 public:
  static constexpr std::size_t kBaseCount = 7;
  static constexpr std::array<std::string_view, kBaseCount> kSymbols = {
      "kg", "m", "s", "A", "K", "mol", "cd"};

  Unit() = default;

  static Unit dimensionless() { return Unit{}; }
  // Accepts "kg^1*m^2*s^-2", "m^(1/2)", "1", "-" or an empty string.
  static Unit parse(std::string_view text);

  bool is_dimensionless() const;
  const Rational& exponent(std::size_t base) const { return exps_[base]; }

  Unit operator*(const Unit& other) const;
  Unit operator/(const Unit& other) const;
  Unit pow(Rational power) const;

  friend bool operator==(const Unit&, const Unit&) = default;

  std::string to_string() const;

 private:
  std::array<Rational, kBaseCount> exps_{};
};

}  // namespace ibart
