#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uclab/fields.hpp"
#include "uclab/quadrature.hpp"

namespace uclab {

// Smooth radial cutoff. Xi(r1, r2) rises on [r1/e, r1/2] and falls on
// [e r2, 3 r2]; Chi(delta, r4R) rises on [delta/3, delta/2] and falls on
// [r4R, 2 r4R]. Both transitions use S(s) = f(s) / (f(s) + f(1 - s)) with
// f(s) = exp(-1/s).
class CutoffSpec {
 public:
  enum class Type { Xi, Chi };

  static CutoffSpec xi(double r1, double r2);
  static CutoffSpec chi(double delta, double r4R);

  Type type() const { return type_; }
  // Radii where the cutoff leaves 0, reaches 1, leaves 1, reaches 0.
  const std::array<double, 4>& knots() const { return knots_; }
  Annulus support() const { return {knots_[0], knots_[3]}; }
  Annulus plateau() const { return {knots_[1], knots_[2]}; }
  // Reference lengths of the two bands (r1 and r2 for Xi, delta and r4R for Chi).
  double inner_scale() const { return scales_[0]; }
  double outer_scale() const { return scales_[1]; }

  // Radial profile and its first two r-derivatives.
  std::array<double, 3> profile(double r) const;
  Jet jet(const Point& x, int n) const;

  // K_alpha = max over each band of |D^alpha cutoff| * scale^|alpha|, measured
  // on a dense radial sample at construction. Index [band][alpha], band 0 inner.
  const std::array<std::array<double, 3>, 2>& derivative_bounds() const { return bounds_; }

 private:
  CutoffSpec(Type type, std::array<double, 4> knots, std::array<double, 2> scales);
  void measure_bounds();

  Type type_;
  std::array<double, 4> knots_;
  std::array<double, 2> scales_;
  std::array<std::array<double, 3>, 2> bounds_{};
};

// Transition profile S on [0, 1] with derivatives.
std::array<double, 3> smooth_step(double s);

// cutoff * u, with support metadata.
SolutionField cutoff_product(const CutoffSpec& cutoff, const SolutionField& u);

struct CarlemanReport {
  std::string estimate;  // "log" or "power"
  std::string member;
  double param = 0.0;    // beta or m
  double lhs_log = 0.0;
  double rhs_log = 0.0;
  double ratio = 0.0;
  std::vector<double> term_logs;  // log of each weighted lhs term, prefactor included
};

// Per-shell angular sums of |u|^2, |grad u|^2, |D^2 u|^2, |Pu|^2 and |Delta u|^2
// on the quadrature grid over the support of u. Radial weights are applied
// afterwards, so one pass serves every beta or m of a sweep.
struct ShellMoments {
  int dimension = 2;
  std::string member;
  std::vector<double> r;
  std::vector<double> log_measure;  // log of the radial quadrature weight incl. r^n
  std::array<std::vector<double>, 3> derivative;  // by |alpha|
  std::vector<double> op_sq;
  std::vector<double> laplace_sq;
};
ShellMoments shell_moments(const SolutionField& u, const EllipticOperator& op,
                           const GridParams& params);

// lhs = beta^3 int phi^2 |x|^-n |u|^2 + beta int phi^2 |x|^(2-n) |grad u|^2,
// rhs = int phi^2 |x|^(4-n) |Pu|^2.
CarlemanReport log_weight_estimate(const SolutionField& u, const EllipticOperator& op, double beta,
                                   const GridParams& params);
CarlemanReport log_weight_estimate(const ShellMoments& moments, double beta);

// lhs = sum_k m^(2-2k) int |x|^(-2m+2k-n) |D^k u|^2, rhs = int |x|^(-2m+4-n) |Delta u|^2.
CarlemanReport power_weight_estimate(const SolutionField& u, double m, const GridParams& params);
CarlemanReport power_weight_estimate(const ShellMoments& moments, double m);

// log of m^(2-2 alpha) int_{r_in<|x|<r_out} |x|^(-2m+2 alpha-n) |D^alpha u|^2.
double power_weight_term_log(const SolutionField& u, double m, int alpha, double r_in,
                             double r_out, const GridParams& params);

struct CaccioppoliResult {
  std::array<double, 3> ratio{};  // per |alpha|
  std::array<double, 3> lhs_log{};
  double rhs_log = 0.0;
  double constant = 0.0;  // max over |alpha| <= 2
};

// int_{a1 r<|x|<a2 r} ||x|^k D^k u|^2 / int_{a3 r<|x|<a4 r} |u|^2 for k = 0, 1, 2.
CaccioppoliResult caccioppoli_check(const SolutionField& u, double r, const std::array<double, 4>& a,
                                    const GridParams& params = {});

struct CorpusSpec {
  int dimension = 2;
  double r1 = 0.1;
  double r2 = 0.2;
  std::uint64_t seed = 42;
};

// Xi cutoff applied to 1, harmonic polynomials l = 1..4, indicial fields
// sigma in {1.5, 2.5, 3.5} with l = 1, and four seeded random harmonic
// trigonometric polynomials of degree <= 4. Twelve members.
std::vector<SolutionField> build_corpus(const CorpusSpec& spec);

// Radial grid resolution needed to resolve the narrow cutoff layers that
// the Carleman weights select (200 panels per decade for the log weight,
// 100 for the power weight).
GridParams carleman_grid_params();
GridParams power_grid_params();

std::vector<double> default_beta_sweep(double beta_max = 256.0);
std::vector<double> default_m_sweep(double m_max = 20.5);

std::vector<CarlemanReport> log_weight_sweep(const std::vector<SolutionField>& corpus,
                                             const EllipticOperator& op,
                                             const std::vector<double>& betas,
                                             const GridParams& params);
std::vector<CarlemanReport> power_weight_sweep(const std::vector<SolutionField>& corpus,
                                               const std::vector<double>& ms,
                                               const GridParams& params);

struct MemberSummary {
  std::string member;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  bool bounded = false;  // max <= 10 * median
  // Smallest swept parameter from which max/min of the remaining ratios is <= 10.
  double stabilizes_at = 0.0;
};
struct SweepSummary {
  std::string estimate;
  std::vector<MemberSummary> members;
  double sup_ratio = 0.0;  // empirical constant
  bool all_bounded = false;
};
SweepSummary summarize_sweep(const std::vector<CarlemanReport>& reports);

void write_carleman_csv(std::ostream& out, const std::vector<CarlemanReport>& reports,
                        bool header = true);

}  // namespace uclab
