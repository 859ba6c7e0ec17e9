#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "uclab/fields.hpp"
#include "uclab/quadrature.hpp"
#include "uclab/random.hpp"

using namespace uclab;

namespace {

Point polar(double r, double theta) { return from_polar(2, r, theta); }

// Central-difference oracles built only from value().
Vector fd_gradient(const SolutionField& u, const Point& x, double h) {
  Vector g = Vector::Zero();
  for (int k = 0; k < u.dimension(); ++k) {
    Point e = Point::Zero();
    e(k) = h;
    g(k) = (u.value(x + e) - u.value(x - e)) / (2.0 * h);
  }
  return g;
}

Matrix fd_hessian(const SolutionField& u, const Point& x, double h) {
  Matrix m = Matrix::Zero();
  const int n = u.dimension();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      Point ea = Point::Zero(), eb = Point::Zero();
      ea(a) = h;
      eb(b) = h;
      m(a, b) = (u.value(x + ea + eb) - u.value(x + ea - eb) - u.value(x - ea + eb) +
                 u.value(x - ea - eb)) /
                (4.0 * h * h);
    }
  }
  return m;
}

std::vector<SolutionField> analytic_family(int n) {
  std::vector<SolutionField> out;
  out.push_back(power_radial(n, 3.0));
  out.push_back(power_radial(n, 0.0));
  if (n == 2) {
    for (int l = 1; l <= 8; ++l) {
      out.push_back(harmonic_polynomial(2, l, 0));
      out.push_back(harmonic_polynomial(2, l, 1));
    }
    out.push_back(indicial_field(2, 2.5, 1));
    out.push_back(indicial_field(2, 1.5, 3, 1));
  } else {
    for (int l = 1; l <= 8; ++l)
      for (int m = -l; m <= l; m += std::max(1, l / 2)) out.push_back(harmonic_polynomial(3, l, m));
    out.push_back(indicial_field(3, 2.0, 1));
    out.push_back(indicial_field(3, 3.5, 2, -1));
  }
  return out;
}

Point random_point(Rng& rng, int n, double r) {
  if (n == 2) return from_polar(2, r, rng.uniform(0.0, 2.0 * std::numbers::pi));
  return from_polar(3, r, rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.05, 3.09));
}

}  // namespace

TEST_CASE("apply_operator on radial and harmonic fields") {
  const auto lap = EllipticOperator::laplacian(2);
  // Delta r^3 = (1/r)(r u')' = 9 r in the plane.
  CHECK(apply_operator(lap, power_radial(2, 3.0), polar(0.5, 0.7)).real() ==
        doctest::Approx(4.5).epsilon(1e-12));
  CHECK(std::abs(apply_operator(lap, harmonic_polynomial(2, 1), polar(0.8, 1.1))) < 1e-13);

  const Point x = polar(0.3, 0.4);
  const auto u = indicial_field(2, 2.5, 1);
  const double expected = 5.25 / (0.3 * 0.3) * u.value(x);
  CHECK(std::abs(apply_operator(lap, u, x).real() - expected) <= 1e-10 * std::abs(expected));
}

TEST_CASE("evaluation at the origin is rejected") {
  const auto lap = EllipticOperator::laplacian(2);
  const auto u = harmonic_polynomial(2, 1);
  CHECK_THROWS_AS(apply_operator(lap, u, Point::Zero()), Error);
  try {
    inequality_residual(lap, u, Point::Zero());
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EvaluationAtOrigin);
  }
}

TEST_CASE("inequality_residual examples") {
  const Point x = polar(0.5, 2.0);
  CHECK(std::abs(inequality_residual(EllipticOperator::laplacian(2), harmonic_polynomial(2, 3), x)) <
        1e-12);
  CHECK(std::abs(inequality_residual(EllipticOperator::laplacian(2, 5.25, 0.0),
                                     indicial_field(2, 2.5, 1), polar(0.37, 0.2))) < 1e-10);
  CHECK(inequality_residual(EllipticOperator::laplacian(2), power_radial(2, 3.0), x) ==
        doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("make_indicial returns the indicial coefficient") {
  CHECK(make_indicial(2, 3.0, 0).c == doctest::Approx(9.0));
  for (int l = 0; l <= 6; ++l) CHECK(make_indicial(2, l == 0 ? 1e-3 : l, l).c == doctest::Approx(l == 0 ? 1e-6 : 0.0));
  CHECK(make_indicial(3, 2.0, 1).c == doctest::Approx(4.0));
  CHECK_THROWS_AS(make_indicial(2, 0.0, 1), Error);
  try {
    make_indicial(2, -1.0, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidOrder);
  }
}

TEST_CASE("indicial fields satisfy Delta u = c |x|^-2 u pointwise") {
  Rng rng(7);
  for (int n : {2, 3}) {
    const auto lap = EllipticOperator::laplacian(n);
    for (double sigma : {0.5, 1.5, 2.5, 3.5}) {
      for (int l = 0; l <= 4; ++l) {
        const auto ind = make_indicial(n, sigma, l);
        for (int s = 0; s < 20; ++s) {
          const double r = std::exp(rng.uniform(std::log(0.01), 0.0));
          const Point x = random_point(rng, n, r);
          const double u = ind.field.value(x);
          const double lhs = apply_operator(lap, ind.field, x).real();
          const double rhs = ind.c / (r * r) * u;
          const double scale = std::max(std::abs(rhs), std::abs(ind.field.hessian(x).norm()));
          CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
        }
      }
    }
  }
}

TEST_CASE("analytic derivatives agree with finite differences") {
  Rng rng(11);
  for (int n : {2, 3}) {
    for (const auto& u : analytic_family(n)) {
      for (int s = 0; s < 12; ++s) {
        const double r = std::exp(rng.uniform(std::log(0.01), 0.0));
        const Point x = random_point(rng, n, r);
        const Jet j = u.jet(x);
        const Vector g = fd_gradient(u, x, 1e-5 * r);
        // Richardson-extrapolated second differences.
        const Matrix h = (4.0 * fd_hessian(u, x, 5e-4 * r) - fd_hessian(u, x, 1e-3 * r)) / 3.0;
        const double gscale = std::max(j.gradient.norm(), std::abs(j.value) / r) + 1e-300;
        const double hscale = std::max(j.hessian.norm(), std::abs(j.value) / (r * r)) + 1e-300;
        INFO(u.id(), " r=", r);
        CHECK((j.gradient - g).norm() <= 1e-6 * gscale);
        CHECK((j.hessian - h).norm() <= 1e-6 * hscale);
      }
    }
  }
}

TEST_CASE("spherical harmonics are harmonic and normalized to max modulus 1") {
  Rng rng(3);
  for (int l = 0; l <= 8; ++l) {
    for (int m = -l; m <= l; ++m) {
      const auto u = harmonic_polynomial(3, l, m);
      double peak = 0.0;
      for (int i = 0; i <= 200; ++i)
        for (int k = 0; k < 64; ++k) {
          const double phi = std::numbers::pi * i / 200.0;
          const double th = 2.0 * std::numbers::pi * k / 64.0;
          peak = std::max(peak, std::abs(u.value(from_polar(3, 1.0, th, phi))));
        }
      INFO("l=", l, " m=", m);
      CHECK(peak <= 1.0 + 1e-12);
      CHECK(peak >= 0.97);
      const Point x = random_point(rng, 3, 0.6);
      CHECK(std::abs(u.hessian(x).trace()) <= 1e-10 * (1.0 + u.hessian(x).norm()));
    }
  }
  // Y_1^0 = cos(phi).
  CHECK(spherical_harmonic(3, 1, 0, from_polar(3, 1.0, 0.3, 0.9)) == doctest::Approx(std::cos(0.9)));
  CHECK(spherical_harmonic(2, 3, 1, polar(1.0, 0.4)) == doctest::Approx(std::sin(1.2)));
  CHECK_THROWS_AS(harmonic_polynomial(3, 9, 0), Error);
  CHECK_THROWS_AS(harmonic_polynomial(2, 0, 1), Error);
}

TEST_CASE("operator application is linear") {
  const auto op = EllipticOperator::perturbed(2, 0.1);
  const auto u = indicial_field(2, 2.5, 2);
  for (double alpha : {-3.0, 0.25, 7.0}) {
    const Point x = polar(0.42, 1.3);
    const auto a = apply_operator(op, u.scaled(alpha), x);
    const auto b = alpha * apply_operator(op, u, x);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
  }
}

TEST_CASE("Laplacian is rotation covariant") {
  Rng rng(5);
  for (int n : {2, 3}) {
    const auto lap = EllipticOperator::laplacian(n);
    for (int trial = 0; trial < 5; ++trial) {
      Matrix q = Matrix::Identity();
      if (n == 2) {
        const double a = rng.uniform(0.0, 6.28);
        q(0, 0) = std::cos(a);
        q(0, 1) = -std::sin(a);
        q(1, 0) = std::sin(a);
        q(1, 1) = std::cos(a);
      } else {
        Eigen::Matrix3d m;
        for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.uniform(-1.0, 1.0);
        q = Eigen::HouseholderQR<Eigen::Matrix3d>(m).householderQ();
      }
      const auto u = n == 2 ? indicial_field(2, 1.5, 3) : harmonic_polynomial(3, 4, 2).scaled(1.0);
      const auto v = n == 2 ? power_radial(2, 2.2) : indicial_field(3, 2.5, 1);
      for (const auto& f : {u, v}) {
        const Point x = random_point(rng, n, 0.7);
        const double lhs = apply_operator(lap, f.rotated(q), x).real();
        const double rhs = apply_operator(lap, f, q * x).real();
        CHECK(std::abs(lhs - rhs) <= 1e-8 * (1.0 + std::abs(rhs)));
      }
    }
  }
}

TEST_CASE("indicial ball norms scale like R^(2 sigma + n)") {
  for (int n : {2, 3}) {
    for (double sigma : {1.5, 2.5}) {
      const auto u = indicial_field(n, sigma, 1);
      std::vector<double> lr, ln;
      for (double R : {0.05, 0.1, 0.2, 0.4, 0.8}) {
        lr.push_back(std::log(R));
        ln.push_back(ball_norm_sq(u, R).log_value);
      }
      for (std::size_t i = 1; i < lr.size(); ++i) {
        const double slope = (ln[i] - ln[i - 1]) / (lr[i] - lr[i - 1]);
        CHECK(std::abs(slope - (2.0 * sigma + n)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("residual sign is invariant under scaling") {
  const auto op = EllipticOperator::laplacian(2, 4.0, 0.05);
  Rng rng(9);
  for (const auto& u : analytic_family(2)) {
    const Point x = random_point(rng, 2, 0.3);
    const double base = inequality_residual(op, u, x);
    for (double lambda : {1e-3, 2.0, -5.0}) {
      const double scaled = inequality_residual(op, u.scaled(lambda), x);
      if (std::abs(base) > 1e-12) CHECK((base > 0) == (scaled > 0));
    }
  }
}

TEST_CASE("operator invariants are spot-checked") {
  for (int n : {2, 3}) {
    for (double eps : {-0.1, 0.0, 0.05, 0.1}) {
      const auto op = EllipticOperator::perturbed(n, eps);
      const auto check = check_operator(op, 42, 400, 2.0);
      CHECK(check.symmetric_at_origin);
      CHECK(check.elliptic);
      CHECK(check.lipschitz);
    }
    CHECK(check_operator(EllipticOperator::laplacian(n)).elliptic);
  }
  CHECK_THROWS_AS(EllipticOperator::perturbed(2, 0.2), Error);
  auto skew = [](const Point&) {
    CoefficientMatrix a = CoefficientMatrix::Identity();
    a(0, 1) = 0.5;
    return a;
  };
  CHECK_THROWS_AS(EllipticOperator(2, skew, 0.0, 0.0, 0.5, 0.0, "skew"), Error);
  auto complex_off_origin = [](const Point& x) {
    CoefficientMatrix a = CoefficientMatrix::Identity();
    a(0, 0) += std::complex<double>(0.0, 0.05 * x.norm());
    return a;
  };
  const EllipticOperator cop(2, complex_off_origin, 0.0, 0.0, 1.0, 0.05, "complex");
  CHECK(std::abs(apply_operator(cop, harmonic_polynomial(2, 2), polar(0.5, 0.3)).imag()) > 0.0);
}

TEST_CASE("grid fields interpolate with second-order derivatives") {
  const auto exact = harmonic_polynomial(2, 2);
  auto sample = [&](int nr, int nt) {
    GridData d;
    d.dimension = 2;
    for (int i = 0; i <= nr; ++i) d.radii.push_back(0.25 * std::pow(4.0, double(i) / nr));
    for (int j = 0; j < nt; ++j) d.thetas.push_back(2.0 * std::numbers::pi * j / nt);
    for (double r : d.radii)
      for (double t : d.thetas) d.values.push_back(exact.value(polar(r, t)));
    return grid_field(std::move(d), "grid");
  };
  auto error = [&](const SolutionField& g) {
    double e = 0.0;
    for (double r : {0.3, 0.47, 0.81}) {
      for (double t : {0.1, 1.9, 4.4}) {
        const Point x = polar(r, t);
        e = std::max(e, (g.hessian(x) - exact.hessian(x)).norm());
        e = std::max(e, (g.gradient(x) - exact.gradient(x)).norm());
        e = std::max(e, std::abs(g.value(x) - exact.value(x)));
      }
    }
    return e;
  };
  const double e1 = error(sample(32, 32));
  const double e2 = error(sample(64, 64));
  CHECK(e1 < 0.1);
  CHECK(e1 / e2 > 3.0);
  const auto g = sample(16, 16);
  CHECK_THROWS_AS(g.value(polar(0.1, 0.0)), Error);
}

TEST_CASE("grid CSV round trip preserves nodes and values") {
  Rng rng(1);
  for (int n : {2, 3}) {
    GridData d;
    d.dimension = n;
    for (int i = 0; i < 5; ++i) d.radii.push_back(0.1 + 0.2 * i + 0.01 * rng.uniform());
    for (int j = 0; j < 8; ++j) d.thetas.push_back(2.0 * std::numbers::pi * j / 8);
    if (n == 3)
      for (int k = 0; k < 4; ++k) d.phis.push_back(0.3 + 0.8 * k);
    d.values.resize(d.radii.size() * d.thetas.size() * (n == 3 ? d.phis.size() : 1));
    for (auto& v : d.values) v = rng.uniform(-1.0, 1.0);
    std::stringstream ss;
    write_grid_csv(ss, d);
    const GridData back = read_grid_csv(ss);
    CHECK(back.dimension == n);
    CHECK(back.radii == d.radii);
    CHECK(back.thetas == d.thetas);
    CHECK(back.values == d.values);
  }
  std::stringstream bad("x,y,value\n1,2,3\n");
  CHECK_THROWS_AS(read_grid_csv(bad), Error);
  std::stringstream descending("r,theta,value\n0.5,0,1\n0.2,0,1\n");
  CHECK_THROWS_AS(read_grid_csv(descending), Error);
}

TEST_CASE("n = 3 grid fields have no derivatives") {
  GridData d;
  d.dimension = 3;
  d.radii = {0.5, 1.0};
  for (int j = 0; j < 4; ++j) d.thetas.push_back(std::numbers::pi * j / 2);
  d.phis = {0.5, 1.5, 2.5};
  d.values.assign(2 * 4 * 3, 1.0);
  const auto g = grid_field(d, "g3");
  CHECK(g.value(from_polar(3, 0.7, 0.2, 1.0)) == doctest::Approx(1.0));
  try {
    g.hessian(from_polar(3, 0.7, 0.2, 1.0));
    FAIL("expected MissingHessian");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingHessian);
  }
}
