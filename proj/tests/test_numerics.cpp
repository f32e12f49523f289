#include <catch_amalgamated.hpp>

#include <cmath>

#include <pulsefield/numerics.hpp>

#include "oracles.hpp"

using namespace pulsefield::numerics;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("linspace hits both ends", "[numerics]") {
  const auto v = linspace(-1.0, 3.0, 5);
  REQUIRE(v.size() == 5);
  CHECK(v.front() == -1.0);
  CHECK(v.back() == 3.0);
  CHECK_THAT(v[2], WithinAbs(1.0, 1e-15));
}

TEST_CASE("adaptive Simpson on smooth and steep integrands", "[numerics]") {
  CHECK_THAT(adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0), WithinAbs(std::exp(1.0) - 1.0, 1e-12));
  // ∫_0^1 dx/(2.1 − 2x) = ln(21)/2
  CHECK_THAT(adaptive_simpson([](double x) { return 1.0 / (2.1 - 2.0 * x); }, 0.0, 1.0),
             WithinRel(0.5 * std::log(21.0), 1e-12));
}

TEST_CASE("Gauss-Legendre 8 is exact for degree 15", "[numerics]") {
  auto p = [](double x) { return std::pow(x, 15) - 3 * std::pow(x, 7) + 1; };
  const double exact = (std::pow(2.0, 16) - 1) / 16 - 3 * (std::pow(2.0, 8) - 1) / 8 + 1;
  CHECK_THAT(gauss_legendre8(p, 1.0, 2.0), WithinRel(exact, 1e-13));
}

TEST_CASE("peaked integral resolves a near-singular peak", "[numerics]") {
  // ∫_0^{2π} dθ/(a + cos θ) = 2π/√(a² − 1)
  for (double a : {1.5, 1.01, 1.0001}) {
    const double exact = two_pi / std::sqrt(a * a - 1.0);
    CHECK_THAT(peaked_integral([a](double t) { return 1.0 / (a + std::cos(t)); }, 0.0, two_pi), WithinRel(exact, 1e-9));
  }
  // Endpoint peak: ∫_0^1 dx/(x + ε) = ln((1 + ε)/ε)
  const double eps = 1e-9;
  CHECK_THAT(peaked_integral([eps](double x) { return 1.0 / (x + eps); }, 0.0, 1.0),
             WithinRel(std::log((1 + eps) / eps), 1e-9));
}

TEST_CASE("root finders agree", "[numerics]") {
  auto f = [](double x) { return x * x * x - 2.0; };
  const double r = std::cbrt(2.0);
  CHECK_THAT(bisect(f, 0.0, 2.0), WithinAbs(r, 1e-15));
  CHECK_THAT(illinois(f, 0.0, 2.0, 1e-14), WithinAbs(r, 1e-13));
  CHECK_THROWS(bisect(f, 2.0, 3.0));
}

TEST_CASE("monotone cubic interpolation", "[numerics]") {
  const auto x = linspace(0.0, 2.0, 41);
  std::vector<double> y;
  for (double v : x) y.push_back(std::exp(v));
  Pchip p(x, y);
  CHECK_THAT(p(0.73), WithinRel(std::exp(0.73), 1e-5));
  CHECK_THAT(p.derivative(0.73), WithinRel(std::exp(0.73), 1e-3));
  CHECK(p(0.0) == y.front());
  CHECK(p(2.0) == y.back());
  // Monotone data stays monotone between knots.
  double prev = p(0.0);
  for (double t : linspace(0.0, 2.0, 1001)) {
    CHECK(p(t) >= prev);
    prev = p(t);
  }
}

TEST_CASE("limit extrapolation", "[numerics]") {
  std::vector<double> conv, div;
  for (int k = 1; k <= 10; ++k) {
    conv.push_back(3.0 + std::pow(0.1, k));
    div.push_back(std::log(std::pow(10.0, k)));
  }
  const auto c = extrapolate_limit(conv);
  CHECK_FALSE(c.diverges);
  CHECK_THAT(c.value, WithinAbs(3.0, 1e-9));
  CHECK(extrapolate_limit(div).diverges);
}

TEST_CASE("oracle Simpson sanity", "[numerics][oracle]") {
  CHECK_THAT(oracle::simpson([](double x) { return std::sin(x); }, 0.0, oracle::two_pi / 2, 2000), WithinAbs(2.0, 1e-12));
}
