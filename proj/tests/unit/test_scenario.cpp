#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gds/scenario.hpp"

using namespace gds;

namespace {

const char* kBallFill = R"({
  "name": "fill",
  "d": 2,
  "R": 1.5,
  "xi": 0.25,
  "source": [{"type": "atom", "at": [0, 0], "mass": 0.5}],
  "lambda": [{"type": "density", "shape": "ball", "radius": 1.0, "value": 1.0}],
  "reference": {"kind": "ball_fill", "mass": 0.5, "r0": 1.0}
})";

}  // namespace

TEST_CASE("minimal scenario parses") {
  const Scenario s = parse_scenario(kBallFill);
  CHECK(s.name == "fill");
  CHECK(s.d == 2);
  CHECK(s.R == 1.5);
  REQUIRE(s.xi_sequence.size() == 1);
  CHECK(s.xi_sequence[0] == 0.25);
  CHECK(s.reference.kind == ReferenceKind::kBallFill);
  CHECK(s.source.atoms.size() == 1);
  CHECK(s.lambda.densities.size() == 1);
  CHECK(s.schedule == Schedule::kSweep);

  const MassConfig sigma = discretize_scenario(s, 0.25, 1.5);
  // atom plus the ball of volume pi, quadrature accurate to a few percent
  CHECK(total_mass(sigma) == doctest::Approx(0.5 - std::numbers::pi).epsilon(0.05));
  const MassConfig lam = discretize_lambda(s, 0.25, 1.5);
  CHECK(total_mass(lam) == doctest::Approx(std::numbers::pi).epsilon(0.05));
}

TEST_CASE("inadmissible sources are rejected") {
  const std::string text = R"({"d": 2, "R": 2, "xi": 0.5,
    "source": [{"type": "atom", "at": [0, 0], "mass": 5}],
    "lambda": [{"type": "density", "shape": "ball", "radius": 1, "value": 1}]})";
  CHECK_THROWS_WITH_AS(parse_scenario(text), doctest::Contains("inadmissible"), InvalidArgument);
  // allowed when explicitly requested
  const std::string relaxed = text.substr(0, text.size() - 1) + R"(, "require_admissible": false})";
  CHECK_NOTHROW(parse_scenario(relaxed));
}

TEST_CASE("support must stay inside the ball") {
  const std::string text = R"({"d": 2, "R": 1, "xi": 0.5,
    "source": [{"type": "atom", "at": [2, 0], "mass": 0.1}]})";
  CHECK_THROWS_WITH_AS(parse_scenario(text), doctest::Contains("atom lies outside B(0,R)"), InvalidArgument);
}

TEST_CASE("errors carry line context") {
  const std::string text = "{\n  \"d\": 2,\n  \"R\": 1,\n  \"xi\": 0.5,\n  \"source\": [\n"
                           "    {\"type\": \"blob\"}\n  ]\n}";
  try {
    parse_scenario(text, "case.json");
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("case.json:6:") == 0);
    CHECK(msg.find("unknown item type") != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(parse_scenario("{\n\"d\": 2,\n", "bad.json"), doctest::Contains("bad.json:"), InvalidArgument);
  CHECK_THROWS_WITH_AS(parse_scenario(R"({"d": 2, "R": 1, "xi": 1, "source": [], "colour": 1})"),
                       doctest::Contains("colour"), InvalidArgument);
  CHECK_THROWS_AS(parse_scenario(R"({"d": 4, "R": 1, "xi": 1, "source": []})"), InvalidArgument);
  CHECK_THROWS_AS(parse_scenario(R"({"d": 2, "R": 1, "xi_sequence": [0.5, 1], "source": []})"), InvalidArgument);
  CHECK_THROWS_AS(load_scenario("/nonexistent/path.json"), InvalidArgument);
}

TEST_CASE("presets") {
  const Scenario five = five_site_scenario();
  CHECK(five.d == 2);
  CHECK(five.R == 2.5);
  const MassConfig s = discretize_scenario(five, 1.0, 2.5);
  CHECK(s[Site{}] == 1.0);
  CHECK(s[Site{1, 0, 0}] == -1.0);
  CHECK(s[Site{0, -1, 0}] == -1.0);
  CHECK(total_mass(s) == -3.0);

  const Scenario bf = ball_fill_scenario(3, 0.5, 1.0, 1.5, {0.5, 0.25});
  CHECK(bf.reference.kind == ReferenceKind::kBallFill);
  CHECK(bf.xi_sequence.size() == 2);

  const Scenario as = annulus_sphere_scenario(3, 0.05, 0.5, {2.0, 4.0}, 0.5);
  CHECK(as.reference.kind == ReferenceKind::kAnnulusSphere);
  CHECK_FALSE(as.require_admissible);
  CHECK(as.R_list.size() == 2);

  // the JSON echo roundtrips through the parser
  const Scenario again = scenario_from_json(bf.document);
  CHECK(again.d == 3);
  CHECK(again.reference.r0 == 1.0);
}
