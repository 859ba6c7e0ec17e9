#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "uclab/constants.hpp"
#include "uclab/fields.hpp"
#include "uclab/quadrature.hpp"

namespace uclab {

struct SphereTriple {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;

  // Throws InvalidRatios unless 0 < r1 < r2 < r3 and r2 / r3 <= 1/4.
  void validate() const;
  static SphereTriple from_ratios(double rho1, double rho2, double r3);
};

struct VerificationRecord {
  std::string check;
  std::string field;
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double lhs_log = 0.0;
  double rhs_log = 0.0;
  double margin = 0.0;  // rhs_log - lhs_log
  std::vector<std::pair<std::string, std::string>> metadata;

  bool holds() const { return margin >= 0.0; }
};

// margin = log[C (int_{B_r1}|u|^2)^tau (int_{B_r3}|u|^2)^(1-tau)] - log int_{B_r2}|u|^2.
// consts must have been computed for the ratios of t.
VerificationRecord check_three_sphere(const SolutionField& u, const SphereTriple& t,
                                      const ThreeSphereConstants& consts,
                                      const GridParams& params = {});
// Same with norms over r_inner < |x| < r_i, for fields defined on an annulus.
VerificationRecord check_three_sphere_annulus(const SolutionField& u, const SphereTriple& t,
                                              const ThreeSphereConstants& consts, double r_inner,
                                              const GridParams& params = {});

struct VanishingOrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  std::vector<double> radii;
  std::vector<double> log_norms;
};

// Least-squares slope of log int_{B_R}|u|^2 against log R. Needs at least eight
// radii spanning two decades (InsufficientData otherwise).
VanishingOrderFit estimate_vanishing_order(const SolutionField& u, const std::vector<double>& radii,
                                           const GridParams& params = {});

// `count` log-spaced radii from R0^2 down to R0^4.
std::vector<double> default_vanishing_radii(double R0, int count = 16);

// margin = log2 C3 - log2(int_{B_2r}|u|^2 / int_{B_r}|u|^2). Throws RadiusTooLarge if r > R3.
VerificationRecord check_doubling(const SolutionField& u, double r, double log2_C3, double R3,
                                  const GridParams& params = {});

struct ConsistencyReport {
  double log_rho = 0.0;
  PipelineResult pipeline;
  VanishingOrderFit fit;
  bool consistent = false;  // slope <= m1
  VerificationRecord record;
};

// Measures the norm ratio at R0^2 / R0^4, runs the pipeline and compares m1
// against the fitted vanishing order.
ConsistencyReport vanishing_order_consistency(const SolutionField& u, const PipelineConfig& cfg,
                                      const GridParams& params = {});

void write_verification_csv(std::ostream& out, const std::vector<VerificationRecord>& records,
                            bool header = true);

}  // namespace uclab
