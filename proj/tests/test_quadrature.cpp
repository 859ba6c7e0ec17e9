#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "uclab/fields.hpp"
#include "uclab/quadrature.hpp"

using namespace uclab;

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Composite Simpson rule for int_S |Y|^2 on S^2, independent of the module's
// Gauss rules.
double sphere_integral_sq_simpson(const SolutionField& y) {
  const int np = 2000;
  const int nt = 64;
  double total = 0.0;
  for (int i = 0; i <= np; ++i) {
    const double phi = kPi * i / np;
    const double w = (i == 0 || i == np) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    double ring = 0.0;
    for (int k = 0; k < nt; ++k) {
      const double v = y.value(from_polar(3, 1.0, 2.0 * kPi * k / nt, std::max(phi, 1e-300)));
      ring += v * v;
    }
    total += w * std::sin(phi) * ring * (2.0 * kPi / nt);
  }
  return total * (kPi / np) / 3.0;
}

}  // namespace

TEST_CASE("log-space accumulation") {
  LogSumAccumulator acc;
  acc.add_log(1000.0);
  acc.add_log(1000.0);
  CHECK(acc.result().log_abs == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(acc.result().sign == 1);
  LogSumAccumulator cancel;
  cancel.add(LogValue::from_linear(3.0));
  cancel.add(LogValue::from_linear(-3.0));
  CHECK(cancel.result().is_zero());
  const std::vector<double> logs{-800.0, -800.0, -801.0};
  CHECK(log_sum_exp(logs) == doctest::Approx(-800.0 + std::log(2.0 + std::exp(-1.0))));
  CHECK(LogValue::from_linear(-2.5).linear() == doctest::Approx(-2.5));
}

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
  for (int order : {1, 4, 16, 32}) {
    const auto rule = gauss_legendre(order);
    for (int deg = 0; deg <= 2 * order - 1; ++deg) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      CHECK(std::abs(s - exact) <= 1e-14);
    }
  }
}

TEST_CASE("sphere measure and annulus volume") {
  for (int n : {2, 3}) {
    const QuadratureGrid g(n, 0.5, 1.0);
    double s = 0.0;
    for (const auto& a : g.angular()) s += a.weight;
    CHECK(rel(s, sphere_area(n)) <= 1e-12);
    CHECK(rel(g.sphere_measure(), sphere_area(n)) <= 1e-12);
  }
  CHECK(rel(sphere_area(2), 2.0 * kPi) <= 1e-15);
  CHECK(rel(sphere_area(3), 4.0 * kPi) <= 1e-15);

  const auto one = power_radial(2, 0.0);
  const auto vol2 = annulus_weighted_integral(one, 0.5, 1.0, WeightSpec::plain_power(0.0), 0);
  CHECK(rel(vol2.linear(), 3.0 * kPi / 4.0) <= 1e-12);
  const auto one3 = power_radial(3, 0.0);
  const auto vol3 = annulus_weighted_integral(one3, 0.1, 2.0, WeightSpec::plain_power(0.0), 0);
  CHECK(rel(vol3.linear(), 4.0 * kPi / 3.0 * (8.0 - 1e-3)) <= 1e-12);
}

TEST_CASE("ball norm examples") {
  const auto one = power_radial(2, 0.0);
  CHECK(rel(ball_norm_sq(one, 0.5).value(), kPi / 4.0) <= 1e-9);
  const auto x1 = harmonic_polynomial(2, 1, 0);
  CHECK(rel(ball_norm_sq(x1, 1.0).value(), kPi / 4.0) <= 1e-9);
  CHECK(ball_norm_sq(x1, 1.0).tail_extrapolated);
  CHECK(ball_norm_sq(x1, 1.0).truncation_radius == doctest::Approx(1e-8));
}

TEST_CASE("ball norms of indicial fields match closed forms") {
  for (double sigma : {1.5, 2.5}) {
    for (int l = 0; l <= 4; ++l) {
      for (double R : {0.3, 1.0}) {
        const auto u = indicial_field(2, sigma, l);
        const double angular = l == 0 ? 2.0 * kPi : kPi;
        const double exact = std::pow(R, 2 * sigma + 2) / (2 * sigma + 2) * angular;
        CHECK(rel(ball_norm_sq(u, R).value(), exact) <= 1e-9);
      }
    }
  }
  for (double sigma : {1.5, 2.5}) {
    for (int l = 0; l <= 4; ++l) {
      for (int m : {-l, 0, l}) {
        const auto u = indicial_field(3, sigma, l, m);
        const double angular = sphere_integral_sq_simpson(harmonic_polynomial(3, l, m));
        const double exact = 1.0 / (2 * sigma + 3) * angular;
        INFO("l=", l, " m=", m);
        CHECK(rel(ball_norm_sq(u, 1.0).value(), exact) <= 1e-9);
      }
    }
  }
}

TEST_CASE("doubling ratios of indicial fields are 2^(2 sigma + n)") {
  for (int n : {2, 3}) {
    for (double sigma : {0.5, 1.5, 2.5, 3.5}) {
      for (int l = 0; l <= 4; ++l) {
        const auto u = indicial_field(n, sigma, l);
        for (double r : {0.01, 0.1, 0.4}) {
          const double lr = ball_norm_sq(u, 2 * r).log_value - ball_norm_sq(u, r).log_value;
          CHECK(std::abs(std::exp(lr) / std::pow(2.0, 2 * sigma + n) - 1.0) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("weight evaluators") {
  const double r = std::exp(-1.0);
  CHECK(std::exp(log_carleman_phi(2.0, r)) == doctest::Approx(std::numbers::e).epsilon(1e-14));
  CHECK(WeightSpec::log_carleman(2.0).log_weight(r, 2) == doctest::Approx(2.0));
  CHECK(WeightSpec::power_carleman(1.5, 0).log_weight(0.5, 2) == doctest::Approx(-5.0 * std::log(0.5)));
  CHECK(WeightSpec::power_carleman(1.5, 2).log_weight(0.5, 2) == doctest::Approx(-1.0 * std::log(0.5)));
  CHECK(WeightSpec::plain_power(3.0).log_weight(0.5, 3) == doctest::Approx(3.0 * std::log(0.5)));
}

TEST_CASE("power Carleman weight on the unit field") {
  const auto one = power_radial(2, 0.0);
  const auto v = annulus_weighted_integral(one, 0.5, 1.0, WeightSpec::power_carleman(1.5, 0), 0);
  CHECK(rel(v.linear(), 2.0 * kPi * 7.0 / 3.0) <= 1e-12);
  CHECK(v.linear() == doctest::Approx(14.6607657).epsilon(1e-8));
}

TEST_CASE("log weights far beyond double range stay finite in log space") {
  const auto one = power_radial(2, 0.0);
  GridParams p;
  p.panels_per_decade = 64;
  const auto v = annulus_weighted_integral(one, std::exp(-8.0), std::exp(-4.0),
                                           WeightSpec::log_carleman(256.0), 0, p);
  CHECK(std::isfinite(v.log_abs));
  CHECK(v.log_abs > 700.0);
  // Dominated by the inner edge: log w(r_in) = 256 * 64, the integrand is concentrated in a
  // layer of width ~1/(256*8) in log r.
  const double leading = 256.0 * 64.0 + 2.0 * (-8.0) + std::log(2.0 * kPi) - std::log(256.0 * 2.0 * 8.0);
  CHECK(std::abs(v.log_abs - leading) < 0.05);
}

TEST_CASE("derivative norms count each multi-index once") {
  const auto u = harmonic_polynomial(2, 2, 1);  // 2xy up to normalization
  const Point x = from_polar(2, 0.5, 0.3);
  const Jet j = u.jet(x);
  const double h12 = j.hessian(0, 1);
  const double expect = j.hessian(0, 0) * j.hessian(0, 0) + h12 * h12 + j.hessian(1, 1) * j.hessian(1, 1);
  CHECK(derivative_norm_sq(2, j, 2) == doctest::Approx(expect));
  CHECK(derivative_norm_sq(2, j, 1) == doctest::Approx(j.gradient.squaredNorm()));
  CHECK(derivative_norm_sq(2, j, 0) == doctest::Approx(j.value * j.value));
}

TEST_CASE("refinement changes results by at most 1e-9") {
  GridParams coarse;
  GridParams fine;
  fine.panels_per_decade *= 2;
  fine.n_theta *= 2;
  fine.n_phi *= 2;
  for (int n : {2, 3}) {
    for (int l = 1; l <= 8; ++l) {
      const auto u = harmonic_polynomial(n, l, n == 2 ? 0 : l / 2);
      for (int alpha : {0, 1, 2}) {
        const auto a = annulus_weighted_integral(u, 0.1, 0.9, WeightSpec::plain_power(-1.0), alpha, coarse);
        const auto b = annulus_weighted_integral(u, 0.1, 0.9, WeightSpec::plain_power(-1.0), alpha, fine);
        if (b.is_zero()) continue;
        INFO("n=", n, " l=", l, " alpha=", alpha);
        CHECK(std::abs(std::expm1(a.log_abs - b.log_abs)) <= 1e-9);
      }
      const auto a = ball_norm_sq(u, 0.7, coarse);
      const auto b = ball_norm_sq(u, 0.7, fine);
      CHECK(std::abs(std::expm1(a.log_value - b.log_value)) <= 1e-9);
    }
  }
}

TEST_CASE("ball norms are nondecreasing in R") {
  const auto u = linear_combination({1.0, -0.5, 0.25},
                                    {harmonic_polynomial(2, 1), harmonic_polynomial(2, 3, 1),
                                     power_radial(2, 0.0)},
                                    "mix");
  double prev = -std::numeric_limits<double>::infinity();
  for (double R = 0.01; R <= 2.0; R *= 1.3) {
    const double v = ball_norm_sq(u, R).log_value;
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("non-integrable fields are rejected") {
  try {
    ball_norm_sq(power_radial(2, -1.5), 1.0);
    FAIL("expected NonIntegrable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonIntegrable);
  }
  CHECK_THROWS_AS(ball_norm_sq(power_radial(3, -1.5), 1.0), Error);
  CHECK_NOTHROW(ball_norm_sq(power_radial(3, -1.4), 1.0));
}

TEST_CASE("plain power weights integrate radial monomials exactly") {
  // int_{a<|x|<b} r^p dx = 2 pi (b^(p+2) - a^(p+2)) / (p + 2) in the plane.
  const auto one = power_radial(2, 0.0);
  for (double p : {-1.0, 0.5, 3.0, 7.0}) {
    const auto v = annulus_weighted_integral(one, 0.2, 0.9, WeightSpec::plain_power(p), 0);
    const double exact = 2.0 * kPi * (std::pow(0.9, p + 2) - std::pow(0.2, p + 2)) / (p + 2);
    CHECK(rel(v.linear(), exact) <= 1e-13);
  }
}
