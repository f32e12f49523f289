#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <pulsefield/oscillator.hpp>

#include "oracles.hpp"

using namespace pulsefield;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

OscillatorModel tabulated_lif(std::size_t n = 401) {
  const oracle::Lif o;
  std::vector<double> x, F;
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
    F.push_back(o.F(x.back()));
  }
  return OscillatorModel::tabulated(x, F);
}

}  // namespace

TEST_CASE("LIF frequency and phase map match closed forms", "[oscillator]") {
  const oracle::Lif o;
  const auto m = OscillatorModel::lif(2.1, 2.0);
  CHECK_THAT(m.omega(), WithinRel(o.omega(), 1e-14));
  CHECK_THAT(m.omega(), WithinAbs(4.12753424269582, 1e-12));
  // ω = 2π / ∫dx/F by brute-force quadrature.
  const double period = oracle::simpson([&](double x) { return 1.0 / o.F(x); }, 0.0, 1.0);
  CHECK_THAT(m.omega(), WithinRel(two_pi / period, 1e-10));
  CHECK(m.phase_of_state(0.0) == 0.0);
  CHECK(m.phase_of_state(1.0) == two_pi);
  const double th_half = m.omega() * oracle::simpson([&](double x) { return 1.0 / o.F(x); }, 0.0, 0.5);
  CHECK_THAT(m.phase_of_state(0.5), WithinRel(th_half, 1e-10));
  for (double th : {0.3, 1.7, 4.0, 6.2}) CHECK_THAT(m.phase_of_state(m.state_of_phase(th)), WithinAbs(th, 1e-12));
  CHECK_THROWS_AS(m.phase_of_state(1.5), DomainError);
  CHECK_THROWS_AS(m.state_of_phase(-0.1), DomainError);
}

TEST_CASE("LIF PRC closed form and ZF = omega", "[oscillator]") {
  const oracle::Lif o;
  const auto m = OscillatorModel::lif(2.1, 2.0);
  CHECK_THAT(m.prc(0.0), WithinAbs(1.965492497, 1e-8));
  CHECK_THAT(m.prc(two_pi), WithinAbs(41.27534243, 1e-7));
  for (double th = 0.0; th <= two_pi; th += 0.37) {
    CHECK_THAT(m.prc(th), WithinRel(o.Z(th), 1e-13));
    CHECK_THAT(m.prc(th) * m.F(m.state_of_phase(th)), WithinRel(m.omega(), 1e-12));
    CHECK_THAT(m.prc_derivative(th), WithinRel(o.dZ(th), 1e-12));
    CHECK_THAT(m.prc_second_derivative(th), WithinRel(o.d2Z(th), 1e-12));
  }
  const auto& c = m.classification();
  CHECK(c.monotonicity == Monotonicity::Increasing);
  CHECK(c.curvature.non_negative);
  CHECK_FALSE(c.curvature.mixed());
}

TEST_CASE("tabulated field reproduces the LIF", "[oscillator]") {
  const auto m = tabulated_lif();
  const auto ref = OscillatorModel::lif(2.1, 2.0);
  CHECK(m.kind() == ModelKind::TabulatedField);
  CHECK_THAT(m.omega(), WithinRel(ref.omega(), 1e-8));
  for (double th : {0.1, 2.0, 5.0, 6.0}) {
    CHECK_THAT(m.prc(th), WithinRel(ref.prc(th), 1e-6));
    CHECK_THAT(m.prc_derivative(th), WithinRel(ref.prc_derivative(th), 1e-4));
  }
  CHECK(m.classification().monotonicity == Monotonicity::Increasing);
}

TEST_CASE("field table from CSV", "[oscillator]") {
  const auto path = std::filesystem::temp_directory_path() / "pulsefield_field_table.csv";
  {
    std::ofstream out(path);
    out << "x,F\n";
    for (int i = 0; i <= 100; ++i) out << i / 100.0 << "," << 2.1 - 2.0 * i / 100.0 << "\n";
  }
  const auto m = OscillatorModel::from_csv(path.string());
  CHECK_THAT(m.omega(), WithinRel(OscillatorModel::lif(2.1, 2.0).omega(), 1e-6));
  {
    std::ofstream out(path);
    out << "x,G\n0,1\n1,1\n";
  }
  CHECK_THROWS_AS(OscillatorModel::from_csv(path.string()), ModelError);
  std::filesystem::remove(path);
}

TEST_CASE("invalid fields are rejected", "[oscillator]") {
  CHECK_THROWS_AS(OscillatorModel::lif(1.9, 2.0), ModelError);  // F(1) < 0
  CHECK_THROWS_AS(OscillatorModel::tabulated({0, 0.5, 0.7, 1}, {1, 1, -0.1, 1}), ModelError);
  CHECK_THROWS_AS(OscillatorModel::homoclinic(-1.0, 1.0, 1.0), ModelError);
  CHECK_THROWS_AS(OscillatorModel::homoclinic(1.0, 0.0, 1.0), ModelError);
}

TEST_CASE("homoclinic PRC", "[oscillator]") {
  const oracle::Homoclinic o{1.0, 1.0, two_pi};
  const auto m = OscillatorModel::homoclinic(1.0, 1.0, two_pi);
  CHECK_FALSE(m.has_field());
  CHECK_THAT(m.prc(0.0), WithinRel(two_pi * std::exp(1.0), 1e-14));
  CHECK_THAT(m.prc(two_pi) / m.prc(0.0), WithinRel(std::exp(-1.0), 1e-14));
  CHECK_THAT(m.prc(pi), WithinRel(o.Z(pi), 1e-14));
  // Second difference of the closed form is positive.
  const double h = 1e-3;
  CHECK((o.Z(pi + h) - 2 * o.Z(pi) + o.Z(pi - h)) / (h * h) > 0.0);
  CHECK(m.classification().monotonicity == Monotonicity::Decreasing);
  CHECK(m.classification().curvature.non_negative);
  CHECK_THROWS_AS(m.phase_of_state(0.5), UnsupportedError);
}

TEST_CASE("numeric field derivatives against finite differences", "[oscillator]") {
  // F = 1 + √x: decreasing PRC whose curvature has a definite sign.
  const auto m = OscillatorModel::analytic([](double x) { return 1.0 + std::sqrt(x); },
                                           [](double x) { return 0.5 / std::sqrt(std::max(x, 1e-300)); }, 0.0, 1.0,
                                           [](double x) { return -0.25 / std::pow(std::max(x, 1e-300), 1.5); });
  CHECK_THAT(m.omega(), WithinRel(two_pi / (2.0 - 2.0 * std::log(2.0)), 1e-10));
  const double h = 1e-4;
  for (double th : {1.0, 3.0, 5.0}) {
    const double fd = (m.prc(th + h) - m.prc(th - h)) / (2 * h);
    CHECK_THAT(m.prc_derivative(th), WithinRel(fd, 1e-5));
    const double fd2 = (m.prc_derivative(th + h) - m.prc_derivative(th - h)) / (2 * h);
    CHECK_THAT(m.prc_second_derivative(th), WithinRel(fd2, 1e-4));
  }
  CHECK(m.classification().monotonicity == Monotonicity::Decreasing);
}

TEST_CASE("coupling range scales with K", "[oscillator]") {
  const auto m = OscillatorModel::lif(2.1, 2.0);
  const auto neg = coupling_range(m, -0.1);
  CHECK_THAT(neg.kz_min, WithinRel(-0.1 * m.prc(two_pi), 1e-12));
  CHECK_THAT(neg.kdz_max, WithinRel(-0.1 * m.prc_derivative(0.0), 1e-12));
  const auto pos = coupling_range(m, 0.1);
  CHECK(pos.kdz_min > 0.0);
  CHECK_THROWS(CouplingSpec{std::numeric_limits<double>::infinity()});
}
