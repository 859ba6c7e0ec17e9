#include "uclab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

namespace uclab {

LogValue LogValue::from_linear(double v) {
  if (v == 0.0) return {};
  return {std::log(std::abs(v)), v > 0.0 ? 1 : -1};
}

double LogValue::linear() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }

void LogSumAccumulator::add_log(double log_abs, int sign) {
  if (sign == 0 || log_abs == -std::numeric_limits<double>::infinity()) return;
  if (log_abs > max_log_) {
    scaled_sum_ = scaled_sum_ * std::exp(max_log_ - log_abs) + sign;
    max_log_ = log_abs;
  } else {
    scaled_sum_ += sign * std::exp(log_abs - max_log_);
  }
}

LogValue LogSumAccumulator::result() const {
  if (scaled_sum_ == 0.0) return {};
  return {max_log_ + std::log(std::abs(scaled_sum_)), scaled_sum_ > 0.0 ? 1 : -1};
}

double log_sum_exp(std::span<const double> logs) {
  LogSumAccumulator acc;
  for (double l : logs) acc.add_log(l);
  return acc.result().log_abs;
}

GaussLegendreRule gauss_legendre(int order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre order must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = order * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= order; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = order * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -z;
    rule.nodes[static_cast<std::size_t>(order - 1 - i)] = z;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(order - 1 - i)] = w;
  }
  if (order % 2 == 1) rule.nodes[static_cast<std::size_t>(order / 2)] = 0.0;
  return rule;
}

double sphere_area(int n) { return n == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; }

QuadratureGrid::QuadratureGrid(int dimension, double r_min, double r_max, const GridParams& p)
    : dimension_(dimension), r_min_(r_min), r_max_(r_max) {
  if (dimension != 2 && dimension != 3)
    throw Error(ErrorCode::InvalidArgument, "quadrature dimension must be 2 or 3");
  if (!(r_min > 0.0) || !(r_max > r_min))
    throw Error(ErrorCode::InvalidArgument, "quadrature needs 0 < r_min < r_max");
  if (p.panels_per_decade < 1 || p.radial_order < 1 || p.n_theta < 1 || p.n_phi < 1)
    throw Error(ErrorCode::InvalidArgument, "quadrature resolution parameters must be >= 1");

  const double t0 = std::log(r_min), t1 = std::log(r_max);
  const double decades = (t1 - t0) / std::numbers::ln10;
  const int panels = std::max(1, static_cast<int>(std::ceil(decades * p.panels_per_decade - 1e-9)));
  const GaussLegendreRule gl = gauss_legendre(p.radial_order);
  const double width = (t1 - t0) / panels;
  radial_.reserve(static_cast<std::size_t>(panels) * gl.nodes.size());
  for (int k = 0; k < panels; ++k) {
    const double mid = t0 + (k + 0.5) * width;
    const double half = 0.5 * width;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = mid + half * gl.nodes[i];
      radial_.push_back({std::exp(t), std::log(half * gl.weights[i]) + dimension * t});
    }
  }

  const double dtheta = 2.0 * std::numbers::pi / p.n_theta;
  if (dimension == 2) {
    for (int k = 0; k < p.n_theta; ++k) {
      const double th = k * dtheta;
      angular_.push_back({Point(std::cos(th), std::sin(th), 0.0), dtheta});
    }
  } else {
    const GaussLegendreRule cphi = gauss_legendre(p.n_phi);
    for (std::size_t i = 0; i < cphi.nodes.size(); ++i) {
      const double c = cphi.nodes[i];
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (int k = 0; k < p.n_theta; ++k) {
        const double th = k * dtheta;
        angular_.push_back({Point(s * std::cos(th), s * std::sin(th), c), cphi.weights[i] * dtheta});
      }
    }
  }
}

double QuadratureGrid::sphere_measure() const {
  double s = 0.0;
  for (const auto& a : angular_) s += a.weight;
  return s;
}

WeightSpec WeightSpec::log_carleman(double beta, double power) {
  WeightSpec w;
  w.kind_ = Kind::LogCarleman;
  w.beta_ = beta;
  w.power_ = power;
  return w;
}

WeightSpec WeightSpec::power_carleman(double m, int alpha) {
  WeightSpec w;
  w.kind_ = Kind::PowerCarleman;
  w.m_ = m;
  w.alpha_ = alpha;
  return w;
}

WeightSpec WeightSpec::plain_power(double p) {
  WeightSpec w;
  w.kind_ = Kind::PlainPower;
  w.power_ = p;
  return w;
}

double log_carleman_phi(double beta, double r) {
  const double t = std::log(r);
  return 0.5 * beta * t * t;
}

double WeightSpec::log_weight(double r, int n) const {
  const double t = std::log(r);
  switch (kind_) {
    case Kind::LogCarleman: return 2.0 * log_carleman_phi(beta_, r) + power_ * t;
    case Kind::PowerCarleman: return (-2.0 * m_ + 2.0 * alpha_ - n) * t;
    case Kind::PlainPower: return power_ * t;
  }
  return 0.0;
}

double derivative_norm_sq(int n, const Jet& jet, int order) {
  switch (order) {
    case 0: return jet.value * jet.value;
    case 1: return jet.gradient.head(n).squaredNorm();
    case 2: {
      double s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) s += jet.hessian(a, b) * jet.hessian(a, b);
      return s;
    }
    default: throw Error(ErrorCode::InvalidOrder, "derivative order must be 0, 1 or 2");
  }
}

namespace {

// Runs body(i) for i in [0, count) across hardware threads. Results must be
// written to per-index slots so the caller can reduce in a fixed order.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, std::max<std::size_t>(1, count / 64));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_radii(double r_in, double r_out) {
  if (!(r_in > 0.0) || !(r_out > r_in))
    throw Error(ErrorCode::InvalidArgument, "annulus needs 0 < r_in < r_out");
}

void check_domain(const SolutionField& u, double r_in, double r_out) {
  if (!u.domain()) return;
  const Annulus d = *u.domain();
  const double tol = 1e-12 * d.outer;
  if (r_in < d.inner - tol || r_out > d.outer + tol)
    throw Error(ErrorCode::UnsupportedField,
                "integration annulus leaves the domain of field '" + u.id() + "'");
}

// Clips [r_in, r_out] to the field's support; returns false when empty.
bool clip_to_support(const SolutionField& u, double& r_in, double& r_out) {
  if (!u.support()) return true;
  r_in = std::max(r_in, u.support()->inner);
  r_out = std::min(r_out, u.support()->outer);
  return r_out > r_in;
}

LogValue checked(LogValue v) {
  if (std::isnan(v.log_abs) || v.log_abs == std::numeric_limits<double>::infinity())
    throw Error(ErrorCode::WeightOverflow, "weighted integral exceeds the log-space range");
  return v;
}

}  // namespace

LogValue integrate_annulus(int n, double r_in, double r_out,
                           const std::function<double(double)>& log_weight,
                           const std::function<double(const Point&)>& integrand,
                           const GridParams& params) {
  check_radii(r_in, r_out);
  const QuadratureGrid grid(n, r_in, r_out, params);
  const auto& radial = grid.radial();
  const auto& angular = grid.angular();
  std::vector<double> shell(radial.size(), 0.0);
  parallel_for(radial.size(), [&](std::size_t i) {
    double s = 0.0;
    const double r = radial[i].r;
    for (const auto& a : angular) s += a.weight * integrand(r * a.direction);
    shell[i] = s;
  });
  LogSumAccumulator acc;
  for (std::size_t i = 0; i < radial.size(); ++i) {
    if (shell[i] == 0.0) continue;
    acc.add_log(log_weight(radial[i].r) + radial[i].log_weight + std::log(std::abs(shell[i])),
                shell[i] > 0.0 ? 1 : -1);
  }
  return checked(acc.result());
}

LogValue annulus_weighted_integral(const SolutionField& u, double r_in, double r_out,
                                   const WeightSpec& weight, int alpha, const GridParams& params) {
  check_radii(r_in, r_out);
  if (alpha < 0 || alpha > 2) throw Error(ErrorCode::InvalidOrder, "|alpha| must be 0, 1 or 2");
  check_domain(u, r_in, r_out);
  if (!clip_to_support(u, r_in, r_out)) return {};
  const int n = u.dimension();
  return integrate_annulus(
      n, r_in, r_out, [&](double r) { return weight.log_weight(r, n); },
      [&](const Point& x) { return derivative_norm_sq(n, u.jet(x, alpha), alpha); }, params);
}

LogValue annulus_operator_integral(const SolutionField& u, const EllipticOperator& op,
                                   double r_in, double r_out, const WeightSpec& weight,
                                   const GridParams& params) {
  check_radii(r_in, r_out);
  check_domain(u, r_in, r_out);
  if (op.dimension() != u.dimension())
    throw Error(ErrorCode::InvalidArgument, "operator and field dimensions differ");
  if (!clip_to_support(u, r_in, r_out)) return {};
  const int n = u.dimension();
  return integrate_annulus(
      n, r_in, r_out, [&](double r) { return weight.log_weight(r, n); },
      [&](const Point& x) { return std::norm(apply_operator(op, x, u.jet(x, 2))); }, params);
}

double BallNorm::value() const { return std::exp(log_value); }

BallNorm annulus_norm_sq(const SolutionField& u, double r_in, double r_out,
                         const GridParams& params) {
  check_radii(r_in, r_out);
  check_domain(u, r_in, r_out);
  BallNorm out;
  out.truncation_radius = r_in;
  if (!clip_to_support(u, r_in, r_out)) return out;
  out.log_value = annulus_weighted_integral(u, r_in, r_out, WeightSpec::plain_power(0.0), 0, params)
                      .log_abs;
  return out;
}

BallNorm ball_norm_sq(const SolutionField& u, double radius, const GridParams& params) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be > 0");
  const int n = u.dimension();
  if (u.radial_exponent() && 2.0 * *u.radial_exponent() + n <= 0.0)
    throw Error(ErrorCode::NonIntegrable,
                "|u|^2 of field '" + u.id() + "' is not integrable at the origin");
  if (u.domain() && u.domain()->inner > 0.0)
    throw Error(ErrorCode::UnsupportedField,
                "field '" + u.id() + "' is undefined near the origin; use annulus_norm_sq");
  BallNorm out;
  const double r_min = radius * 1e-8;
  out.truncation_radius = r_min;
  double lo = r_min, hi = radius;
  const bool supported_away = u.support() && u.support()->inner >= r_min;
  LogSumAccumulator acc;
  if (clip_to_support(u, lo, hi))
    acc.add(annulus_weighted_integral(u, lo, hi, WeightSpec::plain_power(0.0), 0, params));
  if (supported_away) {
    out.truncation_radius = 0.0;
  } else if (u.radial_exponent()) {
    // |u|^2 r^(n-1) ~ r^(2 sigma + n - 1) below r_min.
    const QuadratureGrid grid(n, r_min, radius, params);
    double shell = 0.0;
    for (const auto& a : grid.angular()) {
      const double v = u.value(r_min * a.direction);
      shell += a.weight * v * v;
    }
    if (shell > 0.0) {
      acc.add_log(n * std::log(r_min) + std::log(shell) -
                  std::log(2.0 * *u.radial_exponent() + n));
    }
    out.tail_extrapolated = true;
  }
  out.log_value = acc.result().log_abs;
  return out;
}

}  // namespace uclab
