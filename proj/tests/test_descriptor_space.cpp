#include <doctest.h>

#include <random>

#include "ibart/descriptor_space.hpp"
#include "ibart/error.hpp"

using namespace ibart;

namespace {

Eigen::MatrixXd lognormal_data(std::size_t n, std::size_t p, double mu,
                               double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> dist(mu, sd);
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Eigen::MatrixXd normal_data(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("unary generation counts") {
  // Moderate positive values keep every operator inside its domain.
  const auto data = lognormal_data(200, 5, 0.0, 0.5, 1);
  const auto base = DescriptorSpace::from_primaries(data);
  const auto ops = all_unary_ops();

  GenerationReport rep;
  const auto out = generate_unary(base, ops, {}, &rep);
  CHECK(rep.candidates == 45);
  CHECK(rep.domain_dropped == 0);
  CHECK(rep.pre_dedup == 45);
  // abs(x) == x on positive data.
  CHECK(rep.dedup_dropped >= 5);
  CHECK(out.size() == rep.retained);
  CHECK(out.find("abs(x1)") == out.size());

  GenerationOptions no_dedup;
  no_dedup.dedup = false;
  CHECK(generate_unary(base, ops, no_dedup).size() == 45);

  const auto two = DescriptorSpace::from_primaries(data.leftCols(2));
  CHECK(generate_unary(two, ops, no_dedup).size() == 18);

  const std::vector<OpKind> none;
  const auto same = generate_unary(base, none);
  REQUIRE(same.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(same.descriptor(i).str() == base.descriptor(i).str());

  CHECK_THROWS_AS(generate_unary(DescriptorSpace(10), ops), ValidationError);
}

TEST_CASE("unary generation drops out-of-domain transforms") {
  const auto data = normal_data(200, 3, 2);
  GenerationReport rep;
  const auto out = generate_unary(DescriptorSpace::from_primaries(data),
                                  all_unary_ops(), {}, &rep);
  // log and sqrt of normal draws fail on every feature.
  CHECK(rep.domain_dropped >= 6);
  CHECK(out.find("log(x1)") == out.size());
  CHECK(out.find("exp(x1)") < out.size());
  CHECK(rep.candidates == rep.domain_dropped + rep.unit_dropped + rep.pre_dedup);
  CHECK(rep.pre_dedup ==
        rep.retained + rep.dedup_dropped + rep.constant_dropped);
}

TEST_CASE("binary generation counts") {
  const auto data = normal_data(200, 5, 3);
  const auto base = DescriptorSpace::from_primaries(data);
  const auto ops = all_binary_ops();

  GenerationReport rep;
  const auto out = generate_binary(base, ops, {}, &rep);
  CHECK(rep.candidates == 55);
  CHECK(out.size() == 55);
  CHECK(out.find("(x1-x2)") < out.size());
  CHECK(out.find("(x2-x1)") == out.size());
  CHECK(out.find("(x1/x2)") < out.size());
  CHECK(out.find("|x1-x2|") < out.size());

  const auto two = DescriptorSpace::from_primaries(data.leftCols(2));
  CHECK(generate_binary(two, ops).size() == 7);

  const std::vector<OpKind> identity_only{OpKind::kIdentity};
  CHECK(generate_binary(base, identity_only).size() == 5);

  const auto one = DescriptorSpace::from_primaries(data.leftCols(1));
  CHECK_THROWS_AS(generate_binary(one, ops), ValidationError);
}

TEST_CASE("count law for p features") {
  GenerationOptions raw;
  raw.dedup = false;
  for (std::size_t p = 2; p <= 6; ++p) {
    const auto base =
        DescriptorSpace::from_primaries(lognormal_data(50, p, 0.0, 0.4, p));
    CHECK(generate_unary(base, all_unary_ops(), raw).size() == 9 * p);
    CHECK(generate_binary(base, all_binary_ops(), raw).size() ==
          5 * p * (p - 1) / 2 + p);
  }
}

TEST_CASE("binary orientation follows natural order of the operands") {
  const auto data = lognormal_data(40, 2, 0.0, 0.4, 9);
  DescriptorSpace space(40);
  // Insert x2 before x1 to check the orientation does not depend on order.
  space.append(Descriptor::leaf(1), data.col(1));
  space.append(Descriptor::leaf(0), data.col(0));
  const std::vector<OpKind> ops{OpKind::kSubtract, OpKind::kDivide};
  const auto out = generate_binary(space, ops);
  CHECK(out.find("(x1-x2)") < out.size());
  CHECK(out.find("(x1/x2)") < out.size());
}

TEST_CASE("complexity law") {
  const auto base = DescriptorSpace::from_primaries(lognormal_data(60, 3, 0, 0.4, 4));
  GenerationOptions raw;
  raw.dedup = false;
  const auto u = generate_unary(base, all_unary_ops(), raw);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& d = u.descriptor(i);
    CHECK(d.complexity() == (d.is_leaf() ? 0 : 1));
  }
  const auto b = generate_binary(u, all_binary_ops(), raw);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& d = b.descriptor(i);
    if (u.find(d.str()) < u.size()) continue;  // identity copy
    CHECK(d.complexity() ==
          1 + std::max(d.child(0).complexity(), d.child(1).complexity()));
  }
}

TEST_CASE("dedup examples") {
  const auto data = normal_data(100, 2, 5);
  const Eigen::VectorXd x = data.col(0);
  DescriptorSpace s(100);
  const auto x1 = Descriptor::leaf(0);
  s.append(x1, x);
  s.append(Descriptor::unary(OpKind::kSquare, x1), x.array().square());
  s.append(Descriptor::binary(OpKind::kSubtract, Descriptor::leaf(1), x1),
           data.col(1) - x);
  // x*x entered through its raw column under a different name.
  s.append(parse_descriptor("abs((x1^2))"), x.array().square());
  s.append(Descriptor::unary(OpKind::kAbs, Descriptor::unary(OpKind::kSquare,
                                                             Descriptor::leaf(1))),
           Eigen::VectorXd::Constant(100, 3.0));
  DedupStats st;
  const auto out = dedup(s, kDefaultDedupThreshold, &st);
  CHECK(out.size() == 3);
  CHECK(st.constant_dropped == 1);
  CHECK(st.correlated_dropped == 1);
  CHECK(out.find("(x1^2)") < out.size());
  CHECK(out.find("abs((x1^2))") == out.size());

  DescriptorSpace neg(100);
  neg.append(x1, x);
  neg.append(Descriptor::unary(OpKind::kSquare, x1), -x);
  CHECK(dedup(neg).size() == 1);

  DescriptorSpace dup(100);
  dup.append(x1, x);
  dup.append(x1, x);
  CHECK(dedup(dup).size() == 1);

  CHECK_THROWS_AS(dedup(s, 0.0), ValidationError);
  CHECK_THROWS_AS(dedup(s, 1.5), ValidationError);
}

TEST_CASE("dedup keeps the lower-complexity member and is idempotent") {
  const auto data = normal_data(80, 1, 6);
  DescriptorSpace s(80);
  const auto x1 = Descriptor::leaf(0);
  s.append(Descriptor::unary(OpKind::kExp, Descriptor::unary(OpKind::kLog,
                                                             Descriptor::unary(OpKind::kAbs, x1))),
           data.col(0).array().abs());
  s.append(Descriptor::unary(OpKind::kAbs, x1), data.col(0).array().abs());
  const auto out = dedup(s);
  REQUIRE(out.size() == 1);
  CHECK(out.descriptor(0).str() == "abs(x1)");

  const auto base = DescriptorSpace::from_primaries(normal_data(150, 4, 8));
  GenerationOptions raw;
  raw.dedup = false;
  const auto space =
      generate_binary(generate_unary(base, all_unary_ops(), raw), all_binary_ops(), raw);
  const auto once = dedup(space, 0.99);
  const auto twice = dedup(once, 0.99);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i)
    CHECK(once.descriptor(i).str() == twice.descriptor(i).str());
  for (std::size_t i = 0; i < once.size(); ++i)
    for (std::size_t j = i + 1; j < once.size(); ++j)
      CHECK(abs_correlation(once.column(i), once.column(j)) < 0.99);
}

TEST_CASE("unit filter") {
  const Unit size = Unit::parse("m");
  const Unit energy = Unit::parse("kg^1*m^2*s^-2");
  const Unit units[] = {size, energy, energy};
  const auto data = lognormal_data(50, 3, 0, 0.3, 10);
  const auto base = DescriptorSpace::from_primaries(data, units);

  GenerationOptions keep_all;
  keep_all.unit_filter = false;
  const auto sq = generate_unary(base, std::vector{OpKind::kSquare}, keep_all);
  const auto pairs = generate_binary(sq, all_binary_ops(), keep_all);
  CHECK(pairs.find("((x1^2)+x1)") < pairs.size());

  std::size_t removed = 0;
  const auto filtered = unit_filter(pairs, &removed);
  CHECK(removed > 0);
  CHECK(filtered.find("((x1^2)+x1)") == filtered.size());
  CHECK(filtered.find("(x2-x3)") < filtered.size());
  for (std::size_t i = 0; i < filtered.size(); ++i)
    CHECK(filtered.descriptor(i).unit().has_value());

  GenerationReport rep;
  const auto ex = generate_unary(base, all_unary_ops(), {}, &rep);
  CHECK(ex.find("exp(x1)") == ex.size());
  CHECK(rep.unit_dropped == 12);  // exp, log, sin, cos on three dimensioned features

  // Without a units row everything is dimensionless and nothing is removed.
  const auto plain = DescriptorSpace::from_primaries(data);
  std::size_t none = 1;
  unit_filter(generate_binary(generate_unary(plain, std::vector{OpKind::kSquare}),
                              all_binary_ops()),
              &none);
  CHECK(none == 0);
}

TEST_CASE("space invariants") {
  DescriptorSpace s(3);
  Eigen::VectorXd bad(3);
  bad << 1, std::nan(""), 2;
  CHECK_THROWS_AS(s.append(Descriptor::leaf(0), bad), ValidationError);
  CHECK_THROWS_AS(s.append(Descriptor::leaf(0), Eigen::VectorXd::Ones(4)),
                  ValidationError);
}
