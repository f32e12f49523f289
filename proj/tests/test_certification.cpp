#include <catch_amalgamated.hpp>

#include <cmath>

#include <pulsefield/certification.hpp>

using namespace pulsefield;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<LogRow> exponential_rows(double V0, double rate, double J0, int n, double dt) {
  std::vector<LogRow> rows;
  for (int k = 0; k <= n; ++k) {
    LogRow r;
    r.t = k * dt;
    r.J0 = J0;
    r.mass = 1.0;
    r.rho_min = 0.1;
    r.rho_max = 0.2;
    r.V = V0 * std::exp(-rate * r.t);
    r.q_min = 5.0;
    r.event = "log";
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("exact exponential decay inside the band passes", "[certification]") {
  // Band J0·[−0.2, −0.05]·V with J0 = 1; decay at 0.1 sits inside.
  const auto rows = exponential_rows(0.5, 0.1, 1.0, 200, 0.1);
  const auto rep = certify_theorem_bounds(rows, -0.2, -0.05, true, 6.0);
  CHECK(rep.passed);
  CHECK(rep.violations == 0);
  CHECK(rep.checked == 200);
  CHECK(rep.pass_fraction == 1.0);
  CHECK(rep.worst_lemma_slack > 0.0);
}

TEST_CASE("decay outside the band is flagged", "[certification]") {
  const auto rows = exponential_rows(0.5, 1.0, 1.0, 100, 0.01);
  CertificationOptions opt;
  opt.tol_abs = 0.0;
  opt.tol_rel = 0.0;
  const auto rep = certify_theorem_bounds(rows, -0.2, -0.05, true, 6.0, opt);
  CHECK_FALSE(rep.passed);
  CHECK(rep.violations == rep.checked);
  CHECK(rep.worst_margin < 0.0);
}

TEST_CASE("mixed curvature skips the band check", "[certification]") {
  const auto rows = exponential_rows(0.5, 1.0, 1.0, 10, 0.1);
  const auto rep = certify_theorem_bounds(rows, -0.2, -0.05, false, 6.0);
  CHECK(rep.verdict == "hypothesis_not_met");
  CHECK(rep.checked == 0);
}

TEST_CASE("lemma slack uses the smaller quantile-density floor", "[certification]") {
  auto rows = exponential_rows(0.5, 0.1, 1.0, 3, 0.1);
  rows[2].V = 4 * pi - 2 * 5.0 + 0.01;  // exceeds 4π − 2·min(5, 6)
  const auto rep = certify_theorem_bounds(rows, -10, 10, true, 6.0);
  CHECK(rep.worst_lemma_slack < 0.0);
  CHECK_FALSE(rep.passed);
}

TEST_CASE("decay rate fit", "[certification]") {
  const auto rows = exponential_rows(0.5, 0.3, 1.0, 400, 0.05);
  const auto fit = fit_decay_rate(rows, 0.9, 1.1, -0.4, -0.2);
  CHECK_THAT(fit.rate, WithinRel(-0.3, 1e-10));
  CHECK_THAT(fit.bracket_lo, WithinRel(0.9 * 0.9 * 0.2, 1e-12));
  CHECK_THAT(fit.bracket_hi, WithinRel(1.1 * 1.1 * 0.4, 1e-12));
  CHECK(fit.in_bracket);
  const auto slow = fit_decay_rate(exponential_rows(0.5, 0.01, 1.0, 400, 0.05), 0.9, 1.1, -0.4, -0.2);
  CHECK_FALSE(slow.in_bracket);
  // Samples below the floor truncate the fit.
  const auto fast = fit_decay_rate(exponential_rows(1.0, 5.0, 1.0, 400, 0.05), 1, 1, -10, -1);
  CHECK(fast.truncated);
}

TEST_CASE("negative controls on a coarse grid", "[certification]") {
  const auto m = OscillatorModel::lif(2.1, 2.0);
  const auto rep = negative_controls(m, -0.1, 512, 99, 8);
  CHECK(rep.trials == 8);
  CHECK(rep.hits <= rep.trials);
  CHECK(rep.inconclusive == (rep.hits == 0));
  CHECK(rep.v_delta < 0.0);
  CHECK(std::abs(rep.vbis_delta) < std::abs(rep.v_delta));
}
