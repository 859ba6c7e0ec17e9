#include "uclab/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "uclab/random.hpp"

namespace uclab {

namespace {

constexpr double kE = std::numbers::e;
const double kLogTiny = std::log(1e-300);

std::string fmt_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

void require_support(const SolutionField& u) {
  if (!u.support() || !(u.support()->inner > 0.0))
    throw Error(ErrorCode::UnsupportedField,
                "field '" + u.id() + "' must vanish near 0 and outside a bounded set");
}

}  // namespace

std::array<double, 3> smooth_step(double s) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  auto f = [](double t) -> std::array<double, 3> {
    const double e = std::exp(-1.0 / t);
    const double t2 = t * t;
    return {e, e / t2, e * (1.0 / (t2 * t2) - 2.0 / (t2 * t))};
  };
  const auto a = f(s);
  auto b = f(1.0 - s);
  b[1] = -b[1];
  const double d = a[0] + b[0];
  const double num = a[1] * b[0] - a[0] * b[1];
  const double num_d = a[2] * b[0] - a[0] * b[2];
  return {a[0] / d, num / (d * d), num_d / (d * d) - 2.0 * num * (a[1] + b[1]) / (d * d * d)};
}

CutoffSpec::CutoffSpec(Type type, std::array<double, 4> knots, std::array<double, 2> scales)
    : type_(type), knots_(knots), scales_(scales) {
  if (!(knots_[0] > 0.0) || !(knots_[0] < knots_[1]) || !(knots_[1] <= knots_[2]) ||
      !(knots_[2] < knots_[3]))
    throw Error(ErrorCode::InvalidArgument, "cutoff transition bands overlap or are empty");
  measure_bounds();
}

CutoffSpec CutoffSpec::xi(double r1, double r2) {
  if (!(r1 > 0.0) || !(r2 > 0.0))
    throw Error(ErrorCode::InvalidArgument, "Xi cutoff needs r1, r2 > 0");
  return CutoffSpec(Type::Xi, {r1 / kE, r1 / 2.0, kE * r2, 3.0 * r2}, {r1, r2});
}

CutoffSpec CutoffSpec::chi(double delta, double r4R) {
  if (!(delta > 0.0) || !(r4R > 0.0))
    throw Error(ErrorCode::InvalidArgument, "Chi cutoff needs delta, r4R > 0");
  return CutoffSpec(Type::Chi, {delta / 3.0, delta / 2.0, r4R, 2.0 * r4R}, {delta, r4R});
}

std::array<double, 3> CutoffSpec::profile(double r) const {
  if (r <= knots_[0] || r >= knots_[3]) return {0.0, 0.0, 0.0};
  if (r < knots_[1]) {
    const double w = knots_[1] - knots_[0];
    const auto s = smooth_step((r - knots_[0]) / w);
    return {s[0], s[1] / w, s[2] / (w * w)};
  }
  if (r <= knots_[2]) return {1.0, 0.0, 0.0};
  const double w = knots_[3] - knots_[2];
  const auto s = smooth_step((r - knots_[2]) / w);
  return {1.0 - s[0], -s[1] / w, -s[2] / (w * w)};
}

Jet CutoffSpec::jet(const Point& x, int n) const {
  const double r = x.norm();
  const auto p = profile(r);
  Jet j;
  j.value = p[0];
  if (p[1] == 0.0 && p[2] == 0.0) return j;
  const Vector e = x / r;
  j.gradient = p[1] * e;
  Matrix proj = Matrix::Zero();
  for (int k = 0; k < n; ++k) proj(k, k) = 1.0;
  j.hessian = p[2] * e * e.transpose() + (p[1] / r) * (proj - e * e.transpose());
  return j;
}

void CutoffSpec::measure_bounds() {
  constexpr int kSamples = 4000;
  for (int band = 0; band < 2; ++band) {
    const double lo = knots_[2 * band], hi = knots_[2 * band + 1];
    const double scale = scales_[band];
    auto& k = bounds_[band];
    k = {0.0, 0.0, 0.0};
    for (int i = 0; i <= kSamples; ++i) {
      const double r = lo + (hi - lo) * i / kSamples;
      const auto p = profile(r);
      k[0] = std::max(k[0], std::abs(p[0]));
      k[1] = std::max(k[1], std::abs(p[1]) * scale);
      // Frobenius norm of the Hessian of a radial function in three dimensions.
      k[2] = std::max(k[2], std::sqrt(p[2] * p[2] + 2.0 * (p[1] / r) * (p[1] / r)) * scale * scale);
    }
  }
}

SolutionField cutoff_product(const CutoffSpec& cutoff, const SolutionField& u) {
  FieldInfo info;
  info.dimension = u.dimension();
  info.kind = FieldKind::Derived;
  info.id = u.id();
  Annulus s = cutoff.support();
  if (u.support()) s = {std::max(s.inner, u.support()->inner), std::min(s.outer, u.support()->outer)};
  info.support = s;
  if (u.domain()) info.domain = u.domain();
  const int n = u.dimension();
  auto fn = [cutoff, u, n](const Point& x, int order) {
    const Jet c = cutoff.jet(x, n);
    Jet out;
    if (c.value == 0.0 && c.gradient.isZero() && c.hessian.isZero()) return out;
    const Jet v = u.jet(x, order);
    out.value = c.value * v.value;
    if (order >= 1) out.gradient = c.value * v.gradient + v.value * c.gradient;
    if (order >= 2)
      out.hessian = c.value * v.hessian + c.gradient * v.gradient.transpose() +
                    v.gradient * c.gradient.transpose() + v.value * c.hessian;
    return out;
  };
  return jet_field(std::move(info), fn, u.derivative_order());
}

ShellMoments shell_moments(const SolutionField& u, const EllipticOperator& op,
                           const GridParams& params) {
  require_support(u);
  const int n = u.dimension();
  if (op.dimension() != n) throw Error(ErrorCode::InvalidArgument, "operator and field dimensions differ");
  if (u.derivative_order() < 2)
    throw Error(ErrorCode::MissingHessian, "field '" + u.id() + "' has no Hessian");
  if (u.domain()) {
    const Annulus d = *u.domain();
    if (u.support()->inner < d.inner || u.support()->outer > d.outer)
      throw Error(ErrorCode::UnsupportedField, "support of '" + u.id() + "' leaves its domain");
  }
  const QuadratureGrid grid(n, u.support()->inner, u.support()->outer, params);
  ShellMoments m;
  m.dimension = n;
  m.member = u.id();
  const std::size_t count = grid.radial().size();
  m.r.resize(count);
  m.log_measure.resize(count);
  for (auto& d : m.derivative) d.assign(count, 0.0);
  m.op_sq.assign(count, 0.0);
  m.laplace_sq.assign(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& node = grid.radial()[i];
    m.r[i] = node.r;
    m.log_measure[i] = node.log_weight;
    for (const auto& a : grid.angular()) {
      const Point x = node.r * a.direction;
      const Jet j = u.jet(x, 2);
      for (int k = 0; k <= 2; ++k) m.derivative[k][i] += a.weight * derivative_norm_sq(n, j, k);
      const double lap = j.hessian.trace();
      m.op_sq[i] += a.weight * (op.is_laplacian() ? lap * lap : std::norm(apply_operator(op, x, j)));
      m.laplace_sq[i] += a.weight * lap * lap;
    }
  }
  return m;
}

namespace {

// log int w(|x|) S(|x|) dx from per-shell sums S.
double radial_log_integral(const ShellMoments& m, const std::vector<double>& shell,
                           const WeightSpec& w) {
  LogSumAccumulator acc;
  for (std::size_t i = 0; i < shell.size(); ++i) {
    if (shell[i] <= 0.0) continue;
    acc.add_log(w.log_weight(m.r[i], m.dimension) + m.log_measure[i] + std::log(shell[i]));
  }
  const LogValue v = acc.result();
  if (std::isnan(v.log_abs) || v.log_abs == std::numeric_limits<double>::infinity())
    throw Error(ErrorCode::WeightOverflow, "weighted integral exceeds the log-space range");
  return v.log_abs;
}

void finish(CarlemanReport& rep, double rhs_log, const std::string& what) {
  LogSumAccumulator acc;
  for (double t : rep.term_logs) acc.add_log(t);
  rep.lhs_log = acc.result().log_abs;
  rep.rhs_log = rhs_log;
  if (!(rep.rhs_log >= kLogTiny))
    throw Error(ErrorCode::ZeroRHS, "weighted " + what + " vanishes for field '" + rep.member + "'");
  rep.ratio = std::exp(rep.lhs_log - rep.rhs_log);
}

void require_half_integer(double m) {
  const double j = m - 0.5;
  if (!(j >= 0.0) || j != std::floor(j))
    throw Error(ErrorCode::NotHalfInteger, "m must be j + 1/2 with j a natural number, got " +
                                               fmt_param(m));
}

}  // namespace

CarlemanReport log_weight_estimate(const ShellMoments& mo, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  const int n = mo.dimension;
  CarlemanReport rep;
  rep.estimate = "log";
  rep.member = mo.member;
  rep.param = beta;
  rep.term_logs = {
      3.0 * std::log(beta) + radial_log_integral(mo, mo.derivative[0], WeightSpec::log_carleman(beta, -n)),
      std::log(beta) + radial_log_integral(mo, mo.derivative[1], WeightSpec::log_carleman(beta, 2.0 - n))};
  finish(rep, radial_log_integral(mo, mo.op_sq, WeightSpec::log_carleman(beta, 4.0 - n)), "|Pu|^2");
  return rep;
}

CarlemanReport log_weight_estimate(const SolutionField& u, const EllipticOperator& op, double beta,
                                   const GridParams& params) {
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  return log_weight_estimate(shell_moments(u, op, params), beta);
}

CarlemanReport power_weight_estimate(const ShellMoments& mo, double m) {
  require_half_integer(m);
  CarlemanReport rep;
  rep.estimate = "power";
  rep.member = mo.member;
  rep.param = m;
  for (int alpha = 0; alpha <= 2; ++alpha)
    rep.term_logs.push_back((2.0 - 2.0 * alpha) * std::log(m) +
                            radial_log_integral(mo, mo.derivative[alpha], WeightSpec::power_carleman(m, alpha)));
  finish(rep, radial_log_integral(mo, mo.laplace_sq, WeightSpec::power_carleman(m, 2)), "|Delta u|^2");
  return rep;
}

CarlemanReport power_weight_estimate(const SolutionField& u, double m, const GridParams& params) {
  require_half_integer(m);
  return power_weight_estimate(shell_moments(u, EllipticOperator::laplacian(u.dimension()), params), m);
}

double power_weight_term_log(const SolutionField& u, double m, int alpha, double r_in,
                             double r_out, const GridParams& params) {
  require_half_integer(m);
  const LogValue v =
      annulus_weighted_integral(u, r_in, r_out, WeightSpec::power_carleman(m, alpha), alpha, params);
  return (2.0 - 2.0 * alpha) * std::log(m) + v.log_abs;
}

CaccioppoliResult caccioppoli_check(const SolutionField& u, double r, const std::array<double, 4>& a,
                                    const GridParams& params) {
  if (!(r > 0.0) || !(0.0 < a[2] && a[2] < a[0] && a[0] < a[1] && a[1] < a[3]))
    throw Error(ErrorCode::DegenerateAnnulus, "need r > 0 and 0 < a3 < a1 < a2 < a4");
  const BallNorm rhs = annulus_norm_sq(u, a[2] * r, a[3] * r, params);
  if (!std::isfinite(rhs.log_value))
    throw Error(ErrorCode::ZeroNorm, "outer annulus norm of field '" + u.id() + "' vanishes");
  CaccioppoliResult out;
  out.rhs_log = rhs.log_value;
  for (int k = 0; k <= 2; ++k) {
    const LogValue lhs = annulus_weighted_integral(u, a[0] * r, a[1] * r,
                                                   WeightSpec::plain_power(2.0 * k), k, params);
    out.lhs_log[k] = lhs.is_zero() ? -std::numeric_limits<double>::infinity() : lhs.log_abs;
    out.ratio[k] = lhs.is_zero() ? 0.0 : std::exp(lhs.log_abs - rhs.log_value);
    out.constant = std::max(out.constant, out.ratio[k]);
  }
  return out;
}

std::vector<SolutionField> build_corpus(const CorpusSpec& spec) {
  const int n = spec.dimension;
  if (n != 2 && n != 3) throw Error(ErrorCode::InvalidArgument, "corpus dimension must be 2 or 3");
  const CutoffSpec xi = CutoffSpec::xi(spec.r1, spec.r2);
  std::vector<SolutionField> base;
  base.push_back(power_radial(n, 0.0).with_id("one"));
  for (int l = 1; l <= 4; ++l) base.push_back(harmonic_polynomial(n, l, 0).with_id("harmonic_l" + std::to_string(l)));
  for (double sigma : {1.5, 2.5, 3.5})
    base.push_back(indicial_field(n, sigma, 1).with_id("indicial_s" + fmt_param(sigma) + "_l1"));
  Rng rng(spec.seed);
  for (int k = 0; k < 4; ++k) {
    std::vector<double> coeffs;
    std::vector<SolutionField> terms;
    for (int l = 0; l <= 4; ++l) {
      if (n == 2) {
        for (int idx = 0; idx <= (l == 0 ? 0 : 1); ++idx) {
          coeffs.push_back(rng.uniform(-1.0, 1.0));
          terms.push_back(harmonic_polynomial(2, l, idx));
        }
      } else {
        for (int m = -l; m <= l; ++m) {
          coeffs.push_back(rng.uniform(-1.0, 1.0));
          terms.push_back(harmonic_polynomial(3, l, m));
        }
      }
    }
    base.push_back(linear_combination(coeffs, terms, "random_" + std::to_string(k)));
  }
  std::vector<SolutionField> corpus;
  corpus.reserve(base.size());
  for (const auto& f : base) corpus.push_back(cutoff_product(xi, f));
  return corpus;
}

GridParams carleman_grid_params() {
  GridParams p;
  p.panels_per_decade = 200;
  p.radial_order = 16;
  return p;
}

GridParams power_grid_params() {
  GridParams p = carleman_grid_params();
  p.panels_per_decade = 100;
  return p;
}

std::vector<double> default_beta_sweep(double beta_max) {
  std::vector<double> out;
  for (double b = 4.0; b <= beta_max * (1 + 1e-12); b *= 2.0) out.push_back(b);
  return out;
}

std::vector<double> default_m_sweep(double m_max) {
  std::vector<double> out;
  for (double m = 1.5; m <= m_max + 1e-12; m += 1.0) out.push_back(m);
  return out;
}

std::vector<CarlemanReport> log_weight_sweep(const std::vector<SolutionField>& corpus,
                                             const EllipticOperator& op,
                                             const std::vector<double>& betas,
                                             const GridParams& params) {
  std::vector<CarlemanReport> out;
  for (const auto& u : corpus) {
    const ShellMoments mo = shell_moments(u, op, params);
    for (double b : betas) out.push_back(log_weight_estimate(mo, b));
  }
  return out;
}

std::vector<CarlemanReport> power_weight_sweep(const std::vector<SolutionField>& corpus,
                                               const std::vector<double>& ms,
                                               const GridParams& params) {
  std::vector<CarlemanReport> out;
  for (const auto& u : corpus) {
    const ShellMoments mo = shell_moments(u, EllipticOperator::laplacian(u.dimension()), params);
    for (double m : ms) out.push_back(power_weight_estimate(mo, m));
  }
  return out;
}

SweepSummary summarize_sweep(const std::vector<CarlemanReport>& reports) {
  SweepSummary s;
  if (reports.empty()) return s;
  s.estimate = reports.front().estimate;
  s.all_bounded = true;
  std::size_t i = 0;
  while (i < reports.size()) {
    std::size_t j = i;
    while (j < reports.size() && reports[j].member == reports[i].member) ++j;
    MemberSummary m;
    m.member = reports[i].member;
    std::vector<double> ratios;
    for (std::size_t k = i; k < j; ++k) ratios.push_back(reports[k].ratio);
    m.max_ratio = *std::max_element(ratios.begin(), ratios.end());
    m.median_ratio = median(ratios);
    m.bounded = m.max_ratio <= 10.0 * m.median_ratio;
    m.stabilizes_at = reports[j - 1].param;
    for (std::size_t k = i; k < j; ++k) {
      const auto [lo, hi] = std::minmax_element(ratios.begin() + static_cast<std::ptrdiff_t>(k - i), ratios.end());
      if (*hi <= 10.0 * *lo) {
        m.stabilizes_at = reports[k].param;
        break;
      }
    }
    s.sup_ratio = std::max(s.sup_ratio, m.max_ratio);
    s.all_bounded = s.all_bounded && m.bounded;
    s.members.push_back(m);
    i = j;
  }
  return s;
}

void write_carleman_csv(std::ostream& out, const std::vector<CarlemanReport>& reports, bool header) {
  if (header) out << "estimate,member,param,lhs_log,rhs_log,ratio\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g\n", r.param, r.lhs_log, r.rhs_log,
                  r.ratio);
    out << csv_escape(r.estimate) << ',' << csv_escape(r.member) << buf;
  }
}

}  // namespace uclab
