#include "uclab/constants.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "uclab/errors.hpp"

namespace uclab {

namespace {

constexpr double kMaxExactInteger = 9007199254740992.0;  // 2^53

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double ThreeSphereConstants::C() const { return std::exp(log_C); }

ThreeSphereConstants three_sphere_constants(double rho1, double rho2, int n, double C0,
                                            double beta0) {
  if (!(rho1 > 0.0) || !(rho1 < rho2) || !(rho2 <= 0.25))
    throw Error(ErrorCode::InvalidRatios,
                "need 0 < rho1 < rho2 <= 1/4, got rho1=" + fmt(rho1) + " rho2=" + fmt(rho2));
  if (n != 2 && n != 3) throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (!(C0 > 0.0) || !(beta0 > 0.0))
    throw Error(ErrorCode::InvalidArgument, "C0 and beta0 must be positive");
  ThreeSphereConstants k;
  k.rho1 = rho1;
  k.rho2 = rho2;
  const double l1 = std::log(rho1), l2 = std::log(rho2);
  k.A = (l1 - 1.0) * (l1 - 1.0) - l2 * l2;
  k.B = -1.0 - 2.0 * l2;
  k.tau = k.B / (k.A + k.B);
  k.log_C = std::max(std::log(C0) + n * (l2 - l1), k.B * beta0);
  return k;
}

double max_pipeline_R0() { return std::exp(-(3.0 + std::sqrt(10.0)) / 2.0); }

PipelineAC pipeline_a_and_C(double R0, int n, double C0, double beta0) {
  if (!(R0 > 0.0) || !(R0 <= 1.0 / 16.0))
    throw Error(ErrorCode::InvalidArgument, "pipeline needs 0 < R0 <= 1/16, got " + fmt(R0));
  const double L = std::log(R0);
  PipelineAC out;
  out.a = ((4.0 * L - 1.0) * (4.0 * L - 1.0) - (2.0 * L) * (2.0 * L)) / (-1.0 - 4.0 * L);
  out.log_C = std::max(std::log(C0) - 2.0 * n * L, beta0 * (-1.0 - 4.0 * L));
  out.beta1 = std::max(2.0 * n, 4.0 * beta0);
  out.a_bounds_ok = out.a > 2.0 && out.a <= -4.0 * L;
  out.C_bounds_ok = out.log_C > 0.0 && out.log_C <= std::log(C0) - out.beta1 * L;
  out.bounds_ok = out.a_bounds_ok && out.C_bounds_ok;
  return out;
}

GrowthCheck growth_condition_holds(double R0, double c, double C0, double beta1, int t_max) {
  const double mu = -std::log(R0);
  if (!(mu > 1.0)) throw Error(ErrorCode::PreconditionFailed, "growth condition needs -log R0 > 1");
  if (!(c > 0.0) || !(C0 > 0.0))
    throw Error(ErrorCode::PreconditionFailed, "growth condition needs c > 0 and C0 > 0");
  const double inner = 3.0 * std::log(C0) + 3.0 * beta1 * mu;
  if (!(inner > 0.0))
    throw Error(ErrorCode::PreconditionFailed, "log C0^3 + 3 beta1 mu must be positive");
  const double base = std::log(inner) - std::log(c / 4.0);
  const double slope_rhs = std::log(4.0 * mu);
  GrowthCheck g;
  for (int t = 1; t <= t_max; ++t) {
    const double m = 2.0 * t * mu - ((t - 1) * slope_rhs + base);
    g.margin.push_back(m);
    g.holds.push_back(m > 0.0);
  }
  g.all_t = (2.0 * mu - base > 0.0) && (2.0 * mu > slope_rhs);
  return g;
}

double PipelineConfig::beta1() const { return std::max(2.0 * n, 4.0 * beta0); }
double PipelineConfig::mu() const { return -std::log(R0); }
double PipelineConfig::R_j(double j) const { return 1.0 / (gamma * (j + 0.5)); }

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (n != 2 && n != 3) bad("n must be 2 or 3");
  if (!(R0 > 0.0) || !(R0 <= 1.0 / 16.0)) bad("R0 must lie in (0, 1/16]");
  if (!(gamma > 0.0)) bad("gamma must be positive");
  if (j0 < 0) bad("j0 must be a natural number");
  if (!(C0 > 1.0)) bad("C0 must exceed 1");
  if (!(beta0 >= 1.0)) bad("beta0 must be >= 1");
  if (!(Ctilde_prime > 0.0)) bad("Ctilde_prime must be positive");
  if (!(Cpp > 0.0)) bad("Cpp must be positive");
  if (!(Cprime > 0.0)) bad("Cprime must be positive");
  if (!(C1 >= 0.0) || !(C2 >= 0.0)) bad("C1 and C2 must be nonnegative");
}

Admissibility check_admissibility(const PipelineConfig& cfg, double m) {
  Admissibility a;
  a.m = m;
  a.lower_order = m * m / 2.0 > cfg.Cprime * cfg.C1 * cfg.C1;
  a.gradient = 1.0 - cfg.Cprime * cfg.C2 * cfg.C2 > 0.5;
  a.radius = 1.0 / (std::sqrt(cfg.Cprime) * m) <= cfg.R0;
  a.carleman_floor = m * m >= cfg.Cpp;
  return a;
}

double doubling_constant(double m1, int n, double Ctilde_prime) {
  if (!(m1 > n)) throw Error(ErrorCode::InvalidOrder, "doubling constant needs m1 > n");
  if (!(Ctilde_prime > 0.0)) throw Error(ErrorCode::InvalidArgument, "C~' must be positive");
  const double d2 = (m1 - n) * (m1 - n);
  return m1 + std::log2((8.0 * Ctilde_prime + 2.0 * d2) / d2);
}

PipelineResult vanishing_order_pipeline(const PipelineConfig& cfg, double log_rho) {
  cfg.validate();
  if (!(log_rho > 0.0))
    throw Error(ErrorCode::RatioNotAboveOne, "norm ratio must exceed 1, log ratio " + fmt(log_rho));
  PipelineResult r;
  r.log_rho = log_rho;
  const PipelineAC ac = pipeline_a_and_C(cfg.R0, cfg.n, cfg.C0, cfg.beta0);
  r.a = ac.a;
  r.log_C = ac.log_C;
  r.tau = 1.0 / (ac.a + 1.0);
  r.bounds_ok = ac.bounds_ok;
  if (!ac.bounds_ok)
    throw Error(ErrorCode::BoundsViolated,
                "a = " + fmt(ac.a) + " or C violates its bounds at R0 = " + fmt(cfg.R0) +
                    "; R0 must not exceed " + fmt(max_pipeline_R0()));

  const double mu = cfg.mu();
  const double c = cfg.c();
  r.t0_raw = (std::log(2.0) - std::log(ac.a * c) + std::log(log_rho)) / (2.0 * mu - std::log(ac.a));
  r.t0 = r.t0_raw;
  if (log_rho <= 1.0) {
    r.t0_clamped = true;
    r.t0 = std::max(r.t0_raw, 0.0);
  }
  if (r.t0 > 1e6) throw Error(ErrorCode::InvalidArgument, "t0 too large: " + fmt(r.t0));
  r.s1 = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(r.t0)));

  const double R_j0 = cfg.R_j(static_cast<double>(cfg.j0));
  auto radius_at = [&](std::int64_t s) { return std::pow(cfg.R0, 2.0 * static_cast<double>(s)); };
  r.s = r.s1;
  if (radius_at(r.s1) > R_j0) {
    r.s_advanced = true;
    r.s = r.s1 + 1;
    while (radius_at(r.s) > R_j0) ++r.s;
  }

  const GrowthCheck g = growth_condition_holds(cfg.R0, c, cfg.C0, ac.beta1,
                                               static_cast<int>(std::max<std::int64_t>(r.s, 8)));
  r.growth_ok = g.all_t && std::all_of(g.holds.begin(), g.holds.end(), [](bool b) { return b; });
  if (!r.growth_ok)
    throw Error(ErrorCode::GrowthConditionFailed,
                "growth condition fails for R0 = " + fmt(cfg.R0) + "; choose a smaller R0");

  const double x = radius_at(r.s);
  const double jf = std::floor(1.0 / (cfg.gamma * x) - 0.5);
  if (!(jf < kMaxExactInteger))
    throw Error(ErrorCode::InvalidArgument, "j1 exceeds 2^53 at s = " + std::to_string(r.s));
  auto j1 = static_cast<std::int64_t>(jf);
  while (cfg.R_j(static_cast<double>(j1 + 1)) >= x) ++j1;
  while (j1 > cfg.j0 && cfg.R_j(static_cast<double>(j1)) < x) --j1;
  r.j1 = j1;
  r.nesting_ok = cfg.R_j(static_cast<double>(j1 + 1)) < x && x <= cfg.R_j(static_cast<double>(j1)) &&
                 j1 >= cfg.j0;

  r.m = static_cast<double>(j1) + 0.5;
  r.m1 = cfg.n + 2.0 * r.m;
  r.log2_C3 = doubling_constant(r.m1, cfg.n, cfg.Ctilde_prime);
  r.R2 = cfg.R0;
  r.log_R3 = (2.0 * static_cast<double>(r.s) + 2.0) * std::log(cfg.R0) - std::log(8.0);
  r.R3 = std::pow(cfg.R0, 2.0 * static_cast<double>(r.s) + 2.0) / 8.0;

  r.admissibility = check_admissibility(cfg, r.m);
  if (!r.admissibility.ok())
    throw Error(ErrorCode::AdmissibilityFailed,
                "m = " + fmt(r.m) + " is not admissible for the configured C', C'', C1, C2");
  return r;
}

PipelineResult vanishing_order_pipeline(const PipelineConfig& cfg, double log_norm_outer,
                                        double log_norm_inner) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (log_norm_outer == kNegInf || log_norm_inner == kNegInf)
    throw Error(ErrorCode::ZeroSolution, "ball norm vanishes; u is identically zero");
  return vanishing_order_pipeline(cfg, log_norm_outer - log_norm_inner);
}

// ---------------------------------------------------------------------------
// JSON.

namespace {

using nlohmann::json;

std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) throw Error(ErrorCode::ConfigError, "config key '" + key + "' must be a number");
  return j.get<double>();
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError,
                "config parse error at " + line_context(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                    e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  PipelineConfig cfg;
  static const std::set<std::string> known{"n",  "R0",   "gamma",        "j0",  "C0", "beta0",
                                           "Ctilde_prime", "Cpp", "Cprime", "C1", "C2"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    if (key == "n" || key == "j0") {
      if (!value.is_number_integer())
        throw Error(ErrorCode::ConfigError, "config key '" + key + "' must be an integer");
      if (key == "n") cfg.n = value.get<int>();
      else cfg.j0 = value.get<std::int64_t>();
      continue;
    }
    const double v = number(value, key);
    if (key == "R0") cfg.R0 = v;
    else if (key == "gamma") cfg.gamma = v;
    else if (key == "C0") cfg.C0 = v;
    else if (key == "beta0") cfg.beta0 = v;
    else if (key == "Ctilde_prime") cfg.Ctilde_prime = v;
    else if (key == "Cpp") cfg.Cpp = v;
    else if (key == "Cprime") cfg.Cprime = v;
    else if (key == "C1") cfg.C1 = v;
    else if (key == "C2") cfg.C2 = v;
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_pipeline_config(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + std::string(e.what()).substr(to_string(e.code()).size() + 2));
  }
}

std::string config_to_json(const PipelineConfig& c) {
  json j{{"n", c.n},     {"R0", c.R0},       {"gamma", c.gamma},         {"j0", c.j0},
         {"C0", c.C0},   {"beta0", c.beta0}, {"Ctilde_prime", c.Ctilde_prime},
         {"Cpp", c.Cpp}, {"Cprime", c.Cprime}, {"C1", c.C1},             {"C2", c.C2}};
  return j.dump(2);
}

std::string result_to_json(const PipelineResult& r) {
  json j;
  j["a"] = r.a;
  j["log_C"] = r.log_C;
  j["tau"] = r.tau;
  j["log_rho"] = r.log_rho;
  j["t0"] = r.t0;
  j["t0_raw"] = r.t0_raw;
  j["s1"] = r.s1;
  j["s"] = r.s;
  j["s_advanced"] = r.s_advanced;
  j["j1"] = r.j1;
  j["m1"] = r.m1;
  j["m"] = r.m;
  j["log2_C3"] = r.log2_C3;
  j["R2"] = r.R2;
  j["R3"] = r.R3;
  j["log_R3"] = r.log_R3;
  j["flags"] = {{"t0_clamped", r.t0_clamped},
                {"growth_ok", r.growth_ok},
                {"nesting_ok", r.nesting_ok},
                {"bounds_ok", r.bounds_ok}};
  j["admissibility"] = {{"m", r.admissibility.m},
                        {"lower_order", r.admissibility.lower_order},
                        {"gradient", r.admissibility.gradient},
                        {"radius", r.admissibility.radius},
                        {"carleman_floor", r.admissibility.carleman_floor}};
  return j.dump(2);
}

}  // namespace uclab
