#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uclab {

// Three-sphere constants for radii r1 < r2 < r3 with rho_i = r_i / r3.
struct ThreeSphereConstants {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double A = 0.0;
  double B = 0.0;
  double tau = 0.0;
  double log_C = 0.0;  // C itself can exceed the double range for small rho1
  double C() const;
};

// Throws InvalidRatios unless 0 < rho1 < rho2 <= 1/4.
ThreeSphereConstants three_sphere_constants(double rho1, double rho2, int n, double C0,
                                            double beta0);

struct PipelineAC {
  double a = 0.0;
  double log_C = 0.0;
  double beta1 = 0.0;
  bool a_bounds_ok = false;  // 2 < a <= -4 log R0
  bool C_bounds_ok = false;  // 1 < C <= C0 R0^-beta1
  bool bounds_ok = false;
};

// a and C for the nested radii (R0^(2k+2), R0^(2k), R0^(2k-2)). Requires 0 < R0 <= 1/16.
PipelineAC pipeline_a_and_C(double R0, int n, double C0, double beta0);

// Largest R0 for which a <= -4 log R0, namely exp(-(3 + sqrt 10) / 2).
double max_pipeline_R0();

struct GrowthCheck {
  std::vector<bool> holds;  // holds[t - 1] for t = 1..t_max
  std::vector<double> margin;  // lhs - rhs per t
  bool all_t = false;          // holds at t = 1 and the lhs slope beats the rhs slope
};

// 2 t mu > (t - 1) log(4 mu) + log(log C0^3 + 3 beta1 mu) - log(c / 4), mu = -log R0.
// Throws PreconditionFailed if mu <= 1.
GrowthCheck growth_condition_holds(double R0, double c, double C0, double beta1, int t_max);

struct PipelineConfig {
  int n = 2;
  double R0 = 1.0 / 32.0;
  double gamma = 2.0;
  std::int64_t j0 = 2;
  double C0 = 2.0;
  double beta0 = 1.0;
  double Ctilde_prime = 1.0;
  double Cpp = 1.0;
  double Cprime = 1.0;
  double C1 = 0.0;
  double C2 = 0.0;

  double c() const { return 1.0 / gamma; }
  double beta1() const;
  double mu() const;
  // Radius R_j = 1 / (gamma (j + 1/2)).
  double R_j(double j) const;
  // Throws ConfigError on out-of-range values.
  void validate() const;
};

struct Admissibility {
  double m = 0.0;
  bool lower_order = false;    // m^2 / 2 > C' C1^2
  bool gradient = false;       // 1 - C' C2^2 > 1/2
  bool radius = false;         // 1 / (sqrt(C') m) <= R0
  bool carleman_floor = false; // m^2 >= C''
  bool ok() const { return lower_order && gradient && radius && carleman_floor; }
};
Admissibility check_admissibility(const PipelineConfig& cfg, double m);

struct PipelineResult {
  double a = 0.0;
  double log_C = 0.0;
  double tau = 0.0;
  double log_rho = 0.0;
  double t0 = 0.0;      // after the clamp when rho <= e
  double t0_raw = 0.0;  // unclamped formula value
  std::int64_t s1 = 0;
  std::int64_t s = 0;
  bool s_advanced = false;  // s > s1 because R0^(2 s1) > R_j0
  std::int64_t j1 = 0;
  double m1 = 0.0;
  double m = 0.0;
  double log2_C3 = 0.0;
  double R2 = 0.0;
  double R3 = 0.0;
  double log_R3 = 0.0;
  bool t0_clamped = false;  // 1 < rho <= e
  bool growth_ok = false;   // growth condition holds for every t >= 1
  bool nesting_ok = false;  // R_{j1+1} < R0^(2s) <= R_{j1}
  bool bounds_ok = false;
  Admissibility admissibility;
};

// log_rho is the natural log of int_{|x|<R0^2}|u|^2 / int_{|x|<R0^4}|u|^2.
// Throws RatioNotAboveOne, BoundsViolated, GrowthConditionFailed,
// AdmissibilityFailed, or InvalidArgument when j1 leaves the exactly
// representable integers.
PipelineResult vanishing_order_pipeline(const PipelineConfig& cfg, double log_rho);
// Same from the two log ball norms; throws ZeroSolution if either is -inf.
PipelineResult vanishing_order_pipeline(const PipelineConfig& cfg, double log_norm_outer,
                                        double log_norm_inner);

// m1 + log2((8 C~' + 2 (m1 - n)^2) / (m1 - n)^2). Throws InvalidOrder if m1 <= n.
double doubling_constant(double m1, int n, double Ctilde_prime);

PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::string& path);
std::string config_to_json(const PipelineConfig& cfg);
std::string result_to_json(const PipelineResult& r);

}  // namespace uclab
