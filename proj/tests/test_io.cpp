#include <doctest.h>

#include <filesystem>

#include "ibart/error.hpp"
#include "ibart/io.hpp"
#include "ibart/json.hpp"

using namespace ibart;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ibart_test_io_" + name);
}

}  // namespace

TEST_CASE("csv parsing") {
  const Table t = parse_csv("a, b,\"c,d\"\n1,2.5,-3e2\n\n+4,5,6\n");
  REQUIRE(t.names == std::vector<std::string>{"a", "b", "c,d"});
  CHECK(t.units.empty());
  REQUIRE(t.data.rows() == 2);
  CHECK(t.data(0, 1) == 2.5);
  CHECK(t.data(0, 2) == -300.0);
  CHECK(t.data(1, 0) == 4.0);
  CHECK(t.column("c,d") == 2);
  CHECK_THROWS_AS(t.column("z"), ValidationError);
}

TEST_CASE("csv units row") {
  const Table t = parse_csv("x,y\n#units: m,kg^1*m^2*s^-2\n1,2\n");
  REQUIRE(t.units.size() == 2);
  CHECK(t.units[0] == Unit::parse("m"));
  CHECK(t.units[1] == Unit::parse("kg^1*m^2*s^-2"));
  CHECK_THROWS_AS(parse_csv("x,y\n1,2\n#units: m,m\n"), ValidationError);
}

TEST_CASE("csv errors") {
  CHECK_THROWS_AS(parse_csv(""), ValidationError);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ValidationError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,x\n"), ValidationError);
  CHECK_THROWS_AS(parse_csv("a,a\n1,2\n"), ValidationError);
  CHECK_THROWS_AS(parse_csv("a,\"b\n"), ValidationError);
  CHECK_THROWS_AS(read_csv(temp_path("missing.csv")), IoError);
}

TEST_CASE("csv round trip keeps every bit") {
  Eigen::MatrixXd m(2, 2);
  m << 0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789;
  const auto path = temp_path("round.csv");
  write_csv(path, {"p", "q"}, m);
  const Table t = read_csv(path);
  CHECK(t.data == m);
  std::filesystem::remove(path);
}

TEST_CASE("response split and join") {
  const Table t = parse_csv("x1,y,x2\n#units: m,s,kg\n1,2,3\n4,5,6\n");
  const Dataset d = split_response(t, "y");
  CHECK(d.features.names == std::vector<std::string>{"x1", "x2"});
  CHECK(d.features.units[1] == Unit::parse("kg"));
  CHECK(d.y(1) == 5.0);
  CHECK(d.features.data(1, 1) == 6.0);
  CHECK_THROWS_AS(split_response(parse_csv("y\n1\n"), "y"), ValidationError);

  const Dataset j = join_response(parse_csv("a\n1\n2\n"), parse_csv("r\n7\n8\n"));
  CHECK(j.response == "r");
  CHECK(j.y(0) == 7.0);
  CHECK_THROWS_AS(join_response(parse_csv("a\n1\n"), parse_csv("r\n7\n8\n")), ValidationError);
}

TEST_CASE("sha256 digests") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("leaf renaming") {
  CHECK(rename_leaves("(exp(x1)-x12)", {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"}) ==
        "(exp(a)-l)");
  CHECK(rename_leaves("(x1*x3)", {"p", "q"}) == "(p*x3)");
  CHECK(rename_leaves("exp(x1)", {}) == "exp(x1)");
}

TEST_CASE("configuration documents") {
  PanConfig c;
  c.max_iterations = 3;
  c.bart.trees = 7;
  c.unary_ops = {OpKind::kExp, OpKind::kSquare};
  c.seed = 99;
  const Json j = json_of(c);
  const PanConfig back = pan_config_from_json(Json::parse(j.dump()));
  CHECK(json_of(back) == j);
  CHECK(back.bart.trees == 7);
  CHECK(back.unary_ops.size() == 2);

  const PanConfig partial = pan_config_from_json(Json::parse(R"({"rho_max": 0.9})"));
  CHECK(partial.rho_max == 0.9);
  CHECK(partial.max_iterations == PanConfig{}.max_iterations);

  CHECK_THROWS_AS(pan_config_from_json(Json::parse(R"({"rhomax": 0.9})")), ValidationError);
  CHECK_THROWS_AS(pan_config_from_json(Json::parse(R"({"rho_max": "high"})")), ValidationError);
  CHECK_THROWS_AS(pan_config_from_json(Json::parse(R"({"bart": {"trees": 0}})")), ValidationError);
  CHECK_THROWS_AS(pan_config_from_json(Json::parse("[1]")), ValidationError);
}
