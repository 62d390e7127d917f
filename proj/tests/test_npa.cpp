#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "diqkd/bell.hpp"
#include "diqkd/npa.hpp"

using namespace diqkd;

namespace {
const double kQmax = 2.0 * std::sqrt(2.0);
double analytic(double g) {
  return 0.5 + 0.5 * std::sqrt(std::max(0.0, 2.0 - g * g / 4.0));
}
}  // namespace

TEST_CASE("level parsing roundtrip") {
  CHECK(parse_level("1") == NpaLevel::One);
  CHECK(parse_level("1ab") == NpaLevel::OnePlusAB);
  CHECK(parse_level("1+AB") == NpaLevel::OnePlusAB);
  CHECK(parse_level("2") == NpaLevel::Two);
  CHECK_THROWS_AS(parse_level("3"), std::invalid_argument);
  CHECK(level_name(NpaLevel::OnePlusAB) == "1+AB");
}

TEST_CASE("basis sizes for the chsh scenario") {
  Scenario s{2, 2, 2, 2};
  CHECK(build_basis(s, NpaLevel::One).words.size() == 5);       // 1 + 2 + 2
  CHECK(build_basis(s, NpaLevel::OnePlusAB).words.size() == 9); // + 4 AB
  CHECK(build_basis(s, NpaLevel::Two).words.size() == 13);      // + 2 AA + 2 BB
}

TEST_CASE("chsh quantum maximum at level 1") {
  auto chsh = build_chsh();
  CHECK(quantum_max(chsh, NpaLevel::One) ==
        doctest::Approx(kQmax).epsilon(1e-7));
}

TEST_CASE("chained-3 quantum maximum") {
  auto ch3 = build_chained(3);
  CHECK(quantum_max(ch3, NpaLevel::One) ==
        doctest::Approx(3.0 * std::sqrt(3.0)).epsilon(1e-5));
}

TEST_CASE("cglmp3 quantum maximum at level 1+AB") {
  auto cglmp = build_cglmp3();
  // 1 + sqrt(11/3)
  CHECK(quantum_max(cglmp, NpaLevel::OnePlusAB) ==
        doctest::Approx(1.0 + std::sqrt(11.0 / 3.0)).epsilon(1e-5));
}

TEST_CASE("level-2 guessing bound brackets the analytic chsh curve") {
  auto chsh = build_chsh();
  auto prob = build(chsh, 0, 0, NpaLevel::Two);
  for (double g : {2.0, 2.2, 2.45, 2.7, 2.8}) {
    auto pr = solve_point(prob, g);
    CHECK(pr.value >= analytic(g) - 1e-7);
    CHECK(pr.value <= analytic(g) + 1e-3);
    // certificate supports the point and dominates elsewhere
    CHECK(pr.certificate.eval(g) == doctest::Approx(pr.value).epsilon(1e-6));
    for (double g2 : {2.0, 2.3, 2.6, 2.82}) {
      CHECK(pr.certificate.eval(g2) >= analytic(g2) - 1e-6);
    }
  }
}

TEST_CASE("unconstrained point returns certainty") {
  auto chsh = build_chsh();
  auto prob = build(chsh, 0, 0, NpaLevel::Two);
  auto pr = solve_point(prob, 2.0);  // local bound: no quantum constraint bites
  CHECK(pr.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("infeasible violation throws InfeasiblePoint") {
  auto chsh = build_chsh();
  auto prob = build(chsh, 0, 0, NpaLevel::Two);
  CHECK_THROWS_AS(solve_point(prob, 2.9), InfeasiblePoint);
}

TEST_CASE("hierarchy is monotone: level 2 at least as tight as level 1") {
  auto chsh = build_chsh();
  auto p1 = build(chsh, 0, 0, NpaLevel::One);
  auto p2 = build(chsh, 0, 0, NpaLevel::Two);
  for (double g : {2.3, 2.6}) {
    CHECK(solve_point(p2, g).value <= solve_point(p1, g).value + 1e-6);
  }
}

TEST_CASE("objective symmetry across a_target for unbiased marginals") {
  auto chsh = build_chsh();
  auto pa = build(chsh, 0, 0, NpaLevel::Two);
  auto pb = build(chsh, 1, 0, NpaLevel::Two);
  double va = solve_point(pa, 2.5).value;
  double vb = solve_point(pb, 2.5).value;
  CHECK(va == doctest::Approx(vb).epsilon(1e-6));
}

TEST_CASE("argument validation") {
  auto chsh = build_chsh();
  CHECK_THROWS_AS(build(chsh, 0, 5, NpaLevel::Two), std::invalid_argument);
  CHECK_THROWS_AS(build(chsh, 3, 0, NpaLevel::Two), std::invalid_argument);
}

TEST_CASE("to_sdp structure: normalization first, bell last") {
  auto chsh = build_chsh();
  auto prob = build(chsh, 0, 0, NpaLevel::One);
  auto sdp = to_sdp(prob, 2.5);
  CHECK(sdp.matrix_order == 5);
  CHECK(sdp.constraints.front().second == 1.0);  // X_00 = 1
  CHECK(sdp.constraints.back().second == 2.5);   // bell expectation
}
