#include <doctest.h>

#include "ibart/error.hpp"
#include "ibart/units.hpp"

using ibart::Rational;
using ibart::Unit;

TEST_CASE("rational arithmetic stays in lowest terms") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, -3) == Rational(-1, 3));
  CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
  CHECK(Rational(3, 4) * Rational(2, 3) == Rational(1, 2));
  CHECK((Rational(1, 2) - Rational(1, 2)).is_zero());
  CHECK_THROWS_AS(Rational(1, 0), ibart::ValidationError);
}

TEST_CASE("unit strings parse to exponent vectors") {
  const Unit joule = Unit::parse("kg^1*m^2*s^-2");
  CHECK(joule.exponent(0) == Rational(1));
  CHECK(joule.exponent(1) == Rational(2));
  CHECK(joule.exponent(2) == Rational(-2));
  CHECK(joule.to_string() == "kg^1*m^2*s^-2");

  CHECK(Unit::parse("").is_dimensionless());
  CHECK(Unit::parse("1").is_dimensionless());
  CHECK(Unit::parse(" - ").is_dimensionless());
  CHECK(Unit::parse("m").exponent(1) == Rational(1));
  CHECK(Unit::parse("m^(1/2)").exponent(1) == Rational(1, 2));
  CHECK(Unit::parse("m*m").exponent(1) == Rational(2));

  CHECK_THROWS_AS(Unit::parse("furlong"), ibart::ValidationError);
  CHECK_THROWS_AS(Unit::parse("m^x"), ibart::ValidationError);
  CHECK_THROWS_AS(Unit::parse("m**s"), ibart::ValidationError);
}

TEST_CASE("unit algebra") {
  const Unit m = Unit::parse("m");
  const Unit s = Unit::parse("s");
  CHECK((m / s).to_string() == "m^1*s^-1");
  CHECK((m * m) == m.pow(Rational(2)));
  CHECK(m.pow(Rational(1, 2)).pow(Rational(2)) == m);
  CHECK((m / m).is_dimensionless());
}
