#include "uclab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

namespace uclab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string grid_meta(const GridParams& p) {
  return std::to_string(p.panels_per_decade) + "/" + std::to_string(p.radial_order) + "/" +
         std::to_string(p.n_theta) + "/" + std::to_string(p.n_phi);
}

void check_consts(const SphereTriple& t, const ThreeSphereConstants& k) {
  const double rho1 = t.r1 / t.r3, rho2 = t.r2 / t.r3;
  if (std::abs(rho1 - k.rho1) > 1e-12 * rho1 || std::abs(rho2 - k.rho2) > 1e-12 * rho2)
    throw Error(ErrorCode::InvalidArgument, "three-sphere constants were computed for other ratios");
}

VerificationRecord three_sphere_record(const std::string& field, const SphereTriple& t,
                                       const ThreeSphereConstants& k, double l1, double l2,
                                       double l3) {
  if (l1 == kNegInf) {
    throw Error(ErrorCode::ZeroNorm,
                l2 == kNegInf ? "field '" + field + "' vanishes on B_r2"
                              : "field '" + field + "' vanishes on B_r1 but not on B_r2");
  }
  VerificationRecord rec;
  rec.field = field;
  rec.r1 = t.r1;
  rec.r2 = t.r2;
  rec.r3 = t.r3;
  rec.lhs_log = l2;
  rec.rhs_log = k.log_C + k.tau * l1 + (1.0 - k.tau) * l3;
  rec.margin = rec.rhs_log - rec.lhs_log;
  rec.metadata = {{"tau", num(k.tau)}, {"log_C", num(k.log_C)}};
  return rec;
}

}  // namespace

void SphereTriple::validate() const {
  if (!(r1 > 0.0) || !(r1 < r2) || !(r2 < r3))
    throw Error(ErrorCode::InvalidRatios, "sphere triple needs 0 < r1 < r2 < r3");
  if (!(r2 / r3 <= 0.25)) throw Error(ErrorCode::InvalidRatios, "sphere triple needs r2/r3 <= 1/4");
}

SphereTriple SphereTriple::from_ratios(double rho1, double rho2, double r3) {
  SphereTriple t{rho1 * r3, rho2 * r3, r3};
  t.validate();
  return t;
}

VerificationRecord check_three_sphere(const SolutionField& u, const SphereTriple& t,
                                      const ThreeSphereConstants& k, const GridParams& params) {
  t.validate();
  check_consts(t, k);
  const double l1 = ball_norm_sq(u, t.r1, params).log_value;
  const double l2 = ball_norm_sq(u, t.r2, params).log_value;
  const BallNorm n3 = ball_norm_sq(u, t.r3, params);
  auto rec = three_sphere_record(u.id(), t, k, l1, l2, n3.log_value);
  rec.check = "three_sphere";
  rec.metadata.emplace_back("grid", grid_meta(params));
  rec.metadata.emplace_back("tail", n3.tail_extrapolated ? "analytic" : "truncated");
  return rec;
}

VerificationRecord check_three_sphere_annulus(const SolutionField& u, const SphereTriple& t,
                                              const ThreeSphereConstants& k, double r_inner,
                                              const GridParams& params) {
  t.validate();
  check_consts(t, k);
  if (!(r_inner > 0.0) || !(r_inner < t.r1))
    throw Error(ErrorCode::InvalidRatios, "annulus three-sphere check needs 0 < r_inner < r1");
  const double l1 = annulus_norm_sq(u, r_inner, t.r1, params).log_value;
  const double l2 = annulus_norm_sq(u, r_inner, t.r2, params).log_value;
  const double l3 = annulus_norm_sq(u, r_inner, t.r3, params).log_value;
  auto rec = three_sphere_record(u.id(), t, k, l1, l2, l3);
  rec.check = "three_sphere_annulus";
  rec.metadata.emplace_back("r_inner", num(r_inner));
  rec.metadata.emplace_back("grid", grid_meta(params));
  return rec;
}

VanishingOrderFit estimate_vanishing_order(const SolutionField& u, const std::vector<double>& radii,
                                           const GridParams& params) {
  if (radii.size() < 8) throw Error(ErrorCode::InsufficientData, "need at least 8 radii");
  const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
  if (!(*lo > 0.0) || !(*hi / *lo >= 100.0 * (1.0 - 1e-12)))
    throw Error(ErrorCode::InsufficientData, "radii must be positive and span two decades");
  VanishingOrderFit fit;
  fit.radii = radii;
  fit.log_norms.resize(radii.size());
  // Ball norm at the smallest radius, then annuli between consecutive radii.
  std::vector<std::size_t> order(radii.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return radii[a] < radii[b]; });
  double acc = ball_norm_sq(u, radii[order[0]], params).log_value;
  fit.log_norms[order[0]] = acc;
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double a = radii[order[k - 1]], b = radii[order[k]];
    if (b > a) {
      const double parts[2] = {acc, annulus_norm_sq(u, a, b, params).log_value};
      acc = log_sum_exp(parts);
    }
    fit.log_norms[order[k]] = acc;
  }
  for (double v : fit.log_norms)
    if (!std::isfinite(v))
      throw Error(ErrorCode::InsufficientData, "ball norm of '" + u.id() + "' is not representable");
  const double k = static_cast<double>(radii.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    mx += std::log(radii[i]);
    my += fit.log_norms[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double dx = std::log(radii[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (fit.log_norms[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double e = fit.log_norms[i] - (fit.intercept + fit.slope * std::log(radii[i]));
    ss += e * e;
  }
  fit.rms_residual = std::sqrt(ss / k);
  return fit;
}

std::vector<double> default_vanishing_radii(double R0, int count) {
  if (!(R0 > 0.0) || !(R0 < 1.0) || count < 2)
    throw Error(ErrorCode::InvalidArgument, "default radii need 0 < R0 < 1 and count >= 2");
  std::vector<double> out;
  const double hi = 2.0 * std::log(R0), lo = 4.0 * std::log(R0);
  for (int i = 0; i < count; ++i) out.push_back(std::exp(hi + (lo - hi) * i / (count - 1)));
  return out;
}

VerificationRecord check_doubling(const SolutionField& u, double r, double log2_C3, double R3,
                                  const GridParams& params) {
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "doubling radius must be positive");
  if (r > R3 * (1.0 + 1e-12))
    throw Error(ErrorCode::RadiusTooLarge, "doubling radius " + num(r) + " exceeds R3 = " + num(R3));
  const double inner = ball_norm_sq(u, r, params).log_value;
  const double outer = ball_norm_sq(u, 2.0 * r, params).log_value;
  if (inner == kNegInf) throw Error(ErrorCode::ZeroNorm, "field '" + u.id() + "' vanishes on B_r");
  VerificationRecord rec;
  rec.check = "doubling";
  rec.field = u.id();
  rec.r1 = r;
  rec.r2 = 2.0 * r;
  rec.r3 = R3;
  rec.lhs_log = outer / std::numbers::ln2;
  rec.rhs_log = log2_C3 + inner / std::numbers::ln2;
  rec.margin = rec.rhs_log - rec.lhs_log;
  rec.metadata = {{"log_base", "2"}, {"log2_C3", num(log2_C3)}, {"grid", grid_meta(params)}};
  return rec;
}

ConsistencyReport vanishing_order_consistency(const SolutionField& u, const PipelineConfig& cfg,
                                      const GridParams& params) {
  if (u.dimension() != cfg.n)
    throw Error(ErrorCode::InvalidArgument, "field and pipeline dimensions differ");
  ConsistencyReport rep;
  const double outer = ball_norm_sq(u, cfg.R0 * cfg.R0, params).log_value;
  const double inner = ball_norm_sq(u, std::pow(cfg.R0, 4), params).log_value;
  rep.pipeline = vanishing_order_pipeline(cfg, outer, inner);
  rep.log_rho = rep.pipeline.log_rho;
  rep.fit = estimate_vanishing_order(u, default_vanishing_radii(cfg.R0), params);
  rep.consistent = rep.fit.slope <= rep.pipeline.m1;
  auto& rec = rep.record;
  rec.check = "vanishing_order";
  rec.field = u.id();
  rec.r1 = std::pow(cfg.R0, 4);
  rec.r2 = cfg.R0 * cfg.R0;
  rec.r3 = rep.pipeline.R2;
  rec.lhs_log = rep.fit.slope;
  rec.rhs_log = rep.pipeline.m1;
  rec.margin = rec.rhs_log - rec.lhs_log;
  rec.metadata = {{"log_rho", num(rep.log_rho)},
                  {"j1", std::to_string(rep.pipeline.j1)},
                  {"rms_residual", num(rep.fit.rms_residual)}};
  return rep;
}

void write_verification_csv(std::ostream& out, const std::vector<VerificationRecord>& records,
                            bool header) {
  if (header) out << "check,field,r1,r2,r3,lhs_log,rhs_log,margin\n";
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.r1, r.r2, r.r3,
                  r.lhs_log, r.rhs_log, r.margin);
    out << csv_escape(r.check) << ',' << csv_escape(r.field) << buf;
  }
}

}  // namespace uclab
