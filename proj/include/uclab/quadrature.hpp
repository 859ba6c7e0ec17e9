#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "uclab/fields.hpp"

namespace uclab {

// A real number stored as (log|v|, sign). Zero has log = -inf, sign = 0.
struct LogValue {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;

  static LogValue from_linear(double v);
  static LogValue from_log(double log_abs, int sign = 1) { return {log_abs, sign}; }
  double linear() const;
  bool is_zero() const { return sign == 0; }
};

// Streaming log-sum-exp over signed terms.
class LogSumAccumulator {
 public:
  void add_log(double log_abs, int sign = 1);
  void add(const LogValue& v) { add_log(v.log_abs, v.sign); }
  LogValue result() const;

 private:
  double max_log_ = -std::numeric_limits<double>::infinity();
  double scaled_sum_ = 0.0;  // sum of sign_i exp(log_i - max_log_)
};

double log_sum_exp(std::span<const double> logs);

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};
GaussLegendreRule gauss_legendre(int order);

struct GridParams {
  int panels_per_decade = 8;
  int radial_order = 16;
  int n_theta = 32;
  int n_phi = 16;
};

// Gauss-Legendre panels in t = log r, trapezoid in theta, Gauss-Legendre in
// cos(phi) for n = 3. Radial weights include the Jacobian r^(n-1) dr = r^n dt
// and are stored as logarithms.
class QuadratureGrid {
 public:
  struct RadialNode {
    double r;
    double log_weight;
  };
  struct AngularNode {
    Point direction;
    double weight;
  };

  QuadratureGrid(int dimension, double r_min, double r_max, const GridParams& params = {});

  int dimension() const { return dimension_; }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  const std::vector<RadialNode>& radial() const { return radial_; }
  const std::vector<AngularNode>& angular() const { return angular_; }
  double sphere_measure() const;

 private:
  int dimension_;
  double r_min_;
  double r_max_;
  std::vector<RadialNode> radial_;
  std::vector<AngularNode> angular_;
};

// Surface measure of S^(n-1).
double sphere_area(int n);

class WeightSpec {
 public:
  enum class Kind { LogCarleman, PowerCarleman, PlainPower };

  // phi_beta(r)^2 r^power with phi_beta(r) = exp(beta/2 (log r)^2).
  static WeightSpec log_carleman(double beta, double power = 0.0);
  // r^(-2m + 2 alpha - n).
  static WeightSpec power_carleman(double m, int alpha);
  // r^p.
  static WeightSpec plain_power(double p);

  Kind kind() const { return kind_; }
  double log_weight(double r, int n) const;

 private:
  Kind kind_ = Kind::PlainPower;
  double beta_ = 0.0;
  double m_ = 0.0;
  int alpha_ = 0;
  double power_ = 0.0;
};

// log phi_beta(r) = beta/2 (log r)^2.
double log_carleman_phi(double beta, double r);

// Pointwise |D^k u|^2 summed over multi-indices of length k (each multi-index
// once, so the mixed D_12 u enters a single time).
double derivative_norm_sq(int n, const Jet& jet, int order);

// Integral of exp(log_weight(|x|)) * integrand(x) over r_in < |x| < r_out.
LogValue integrate_annulus(int n, double r_in, double r_out,
                           const std::function<double(double)>& log_weight,
                           const std::function<double(const Point&)>& integrand,
                           const GridParams& params = {});

// int_{r_in<|x|<r_out} w(|x|) |D^alpha u|^2 dx. Accumulated in log space.
LogValue annulus_weighted_integral(const SolutionField& u, double r_in, double r_out,
                                   const WeightSpec& weight, int alpha,
                                   const GridParams& params = {});

// int_{r_in<|x|<r_out} w(|x|) |P(x,D)u|^2 dx.
LogValue annulus_operator_integral(const SolutionField& u, const EllipticOperator& op,
                                   double r_in, double r_out, const WeightSpec& weight,
                                   const GridParams& params = {});

struct BallNorm {
  double log_value = -std::numeric_limits<double>::infinity();
  double truncation_radius = 0.0;  // integration starts here
  bool tail_extrapolated = false;  // analytic [0, truncation_radius) tail added

  double value() const;
};

// int_{|x|<R} |u|^2 dx with inner cutoff R * 1e-8 and analytic tail for
// fields with a known radial exponent.
BallNorm ball_norm_sq(const SolutionField& u, double radius, const GridParams& params = {});

// int_{r_in<|x|<r_out} |u|^2 dx.
BallNorm annulus_norm_sq(const SolutionField& u, double r_in, double r_out,
                         const GridParams& params = {});

}  // namespace uclab
