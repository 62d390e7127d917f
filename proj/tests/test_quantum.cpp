#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "diqkd/bell.hpp"
#include "diqkd/quantum.hpp"

using namespace diqkd;

namespace {
const double kQmax = 2.0 * std::sqrt(2.0);
}

TEST_CASE("density matrix validation") {
  Eigen::MatrixXcd ok = Eigen::MatrixXcd::Identity(2, 2) / 2.0;
  CHECK_NOTHROW(DensityMatrix{ok});
  Eigen::MatrixXcd bad_trace = Eigen::MatrixXcd::Identity(2, 2);
  CHECK_THROWS_AS(DensityMatrix{bad_trace}, std::invalid_argument);
  Eigen::MatrixXcd neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(DensityMatrix{neg}, std::invalid_argument);
}

TEST_CASE("visibility mixes toward the maximally mixed state") {
  auto p = make_preset("chsh-optimal", 1.0);
  auto half = p.rho.with_visibility(0.0);  // applied on top of v=1
  CHECK((half.m - Eigen::MatrixXcd::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff()
        < 1e-14);
}

TEST_CASE("chsh preset reaches the Tsirelson value") {
  auto p = make_preset("chsh-optimal", 1.0);
  auto t = correlations(p.rho, p.alice, p.bob);
  CHECK(bell_value(p.ineq, t) == doctest::Approx(kQmax).epsilon(1e-12));
  // raw-key correlation is perfect at v=1
  auto es = raw_key_statistics(t, p.x_raw, p.y_raw);
  CHECK(es.qber == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(es.cond_entropy == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("chsh preset scales linearly with visibility") {
  for (double v : {0.7, 0.85, 0.95}) {
    auto p = make_preset("chsh-optimal", v);
    auto t = correlations(p.rho, p.alice, p.bob);
    CHECK(bell_value(p.ineq, t) == doctest::Approx(v * kQmax).epsilon(1e-10));
    auto es = raw_key_statistics(t, p.x_raw, p.y_raw);
    CHECK(es.qber == doctest::Approx((1.0 - v) / 2.0).epsilon(1e-10));
    CHECK(es.cond_entropy ==
          doctest::Approx(binary_entropy((1.0 - v) / 2.0)).epsilon(1e-9));
  }
}

TEST_CASE("chained3 preset reaches 3*sqrt(3)") {
  auto p = make_preset("chained3-optimal", 1.0);
  auto t = correlations(p.rho, p.alice, p.bob);
  CHECK(bell_value(p.ineq, t) ==
        doctest::Approx(3.0 * std::sqrt(3.0)).epsilon(1e-12));
  auto es = raw_key_statistics(t, p.x_raw, p.y_raw);
  CHECK(es.qber == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cglmp3 preset reaches the max-entangled-qutrit value") {
  auto p = make_preset("cglmp3-optimal", 1.0);
  auto t = correlations(p.rho, p.alice, p.bob);
  CHECK(bell_value(p.ineq, t) ==
        doctest::Approx(2.8729340511723374).epsilon(1e-12));
}

TEST_CASE("tightness family hits the requested violation") {
  for (int i = 0; i <= 10; ++i) {
    double g = 2.0 + (kQmax - 2.0) * i / 10.0;
    auto m = tightness_family(g);
    auto chsh = build_chsh();
    auto t = correlations(m.rho, m.alice, m.bob);
    CHECK(bell_value(chsh, t) == doctest::Approx(g).epsilon(1e-12));
    // and saturates the guessing bound at x=0
    double p0 = t.value(0, 0, 0, 0) + t.value(0, 1, 0, 0);
    double f = 0.5 + 0.5 * std::sqrt(std::max(0.0, 2.0 - g * g / 4.0));
    CHECK(p0 == doctest::Approx(f).epsilon(1e-10));
  }
}

TEST_CASE("binary entropy endpoints and symmetry") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(binary_entropy(0.1) == doctest::Approx(binary_entropy(0.9)));
  CHECK_THROWS_AS(binary_entropy(-0.1), std::invalid_argument);
}

TEST_CASE("error statistics: H(a|b) = h(qber) for binary symmetric data") {
  auto p = make_preset("chsh-optimal", 0.9);
  auto t = correlations(p.rho, p.alice, p.bob);
  auto es = raw_key_statistics(t, p.x_raw, p.y_raw);
  double sum = 0.0;
  for (double v : es.joint) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(es.cond_entropy == doctest::Approx(binary_entropy(es.qber)).epsilon(1e-9));
}
