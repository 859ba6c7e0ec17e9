#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "uclab/constants.hpp"
#include "uclab/errors.hpp"
#include "uclab/random.hpp"

using namespace uclab;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("three-sphere constants closed forms") {
  const auto k = three_sphere_constants(std::exp(-4.0), std::exp(-2.0), 2, 2.0, 1.0);
  CHECK(std::abs(k.A - 21.0) <= 1e-12);
  CHECK(std::abs(k.B - 3.0) <= 1e-12);
  CHECK(std::abs(k.tau - 0.125) <= 1e-12);
  // C = max{2 e^4, e^3}.
  CHECK(k.log_C == doctest::Approx(std::log(2.0) + 4.0));

  const auto q = three_sphere_constants(1.0 / 16.0, 0.25, 2, 2.0, 1.0);
  CHECK(q.A == doctest::Approx(12.3107).epsilon(1e-5));
  CHECK(q.B == doctest::Approx(1.7726).epsilon(1e-4));
  CHECK(q.tau == doctest::Approx(0.12587).epsilon(1e-4));
}

TEST_CASE("B and tau vanish as rho2 approaches e^-1/2") {
  // rho2 <= 1/4 < e^-1/2, so the limit is probed through the formulas directly: B is
  // affine in log rho2 with root at -1/2, which is approached by rescaling both ratios.
  double prev_tau = 1.0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const double l2 = -0.5 - eps;
    const double B = -1.0 - 2.0 * l2;
    CHECK(B == doctest::Approx(2.0 * eps));
    const double A = (std::log(1e-3) - 1.0) * (std::log(1e-3) - 1.0) - l2 * l2;
    const double tau = B / (A + B);
    CHECK(tau < prev_tau);
    prev_tau = tau;
  }
  CHECK(prev_tau < 1e-4);
}

TEST_CASE("three-sphere input validation") {
  CHECK(code_of([] { three_sphere_constants(0.2, 0.1, 2, 2.0, 1.0); }) == ErrorCode::InvalidRatios);
  CHECK(code_of([] { three_sphere_constants(0.1, 0.3, 2, 2.0, 1.0); }) == ErrorCode::InvalidRatios);
  CHECK(code_of([] { three_sphere_constants(0.0, 0.1, 2, 2.0, 1.0); }) == ErrorCode::InvalidRatios);
}

TEST_CASE("three-sphere constants depend only on ratios") {
  for (double r3 : {0.9, 0.5, 0.1}) {
    const double r1 = 1e-3 * r3, r2 = 0.05 * r3;
    const auto k = three_sphere_constants(r1 / r3, r2 / r3, 3, 4.0, 1.5);
    const auto ref = three_sphere_constants(1e-3, 0.05, 3, 4.0, 1.5);
    CHECK(k.A == doctest::Approx(ref.A).epsilon(1e-14));
    CHECK(k.B == doctest::Approx(ref.B).epsilon(1e-14));
    CHECK(k.log_C == doctest::Approx(ref.log_C).epsilon(1e-14));
  }
}

TEST_CASE("pipeline a and C") {
  const double x = std::log(32.0);
  const auto ac = pipeline_a_and_C(1.0 / 32.0, 2, 2.0, 1.0);
  CHECK(std::abs(ac.a - (12 * x * x + 8 * x + 1) / (4 * x - 1)) <= 1e-9);
  CHECK(ac.a == doctest::Approx(13.438).epsilon(1e-4));
  CHECK(ac.bounds_ok);
  const auto ac16 = pipeline_a_and_C(1.0 / 16.0, 2, 2.0, 1.0);
  CHECK(ac16.a == doctest::Approx(11.440).epsilon(1e-4));
  CHECK_FALSE(ac16.bounds_ok);
  CHECK_FALSE(ac16.a_bounds_ok);
  CHECK(ac16.C_bounds_ok);
  CHECK(max_pipeline_R0() == doctest::Approx(0.0459).epsilon(1e-3));
  CHECK(pipeline_a_and_C(max_pipeline_R0() * (1 - 1e-12), 2, 2.0, 1.0).bounds_ok);
  CHECK_FALSE(pipeline_a_and_C(max_pipeline_R0() * (1 + 1e-9), 2, 2.0, 1.0).bounds_ok);
}

TEST_CASE("a exceeds 2 for every R0 <= 1/16") {
  // Brute-force scan of (12x^2 + 8x + 1)/(4x - 1) - 2 over x >= log 16.
  double worst = 1e300;
  for (int i = 0; i <= 20000; ++i) {
    const double x = std::log(16.0) + i * 0.01;
    const auto ac = pipeline_a_and_C(std::exp(-x), 2, 2.0, 1.0);
    worst = std::min(worst, ac.a - 2.0);
  }
  CHECK(worst > 0.0);
}

TEST_CASE("tau = 1/(a+1) at the pipeline radii") {
  for (double R0 : {1.0 / 16, 1.0 / 32, 1.0 / 64, 1e-3}) {
    const auto k = three_sphere_constants(std::pow(R0, 4), R0 * R0, 2, 2.0, 1.0);
    const auto ac = pipeline_a_and_C(R0, 2, 2.0, 1.0);
    CHECK(std::abs(ac.a - k.A / k.B) <= 1e-12 * ac.a);
    CHECK(std::abs(ac.a - (1.0 - k.tau) / k.tau) <= 1e-12 * ac.a);
    CHECK(std::abs(ac.log_C - k.log_C) <= 1e-12 * ac.log_C);
  }
}

TEST_CASE("growth condition") {
  const auto g = growth_condition_holds(1.0 / 32.0, 0.5, 2.0, 4.0, 10);
  REQUIRE(g.holds.size() == 10);
  const double mu = std::log(32.0);
  const double rhs1 = std::log(std::log(8.0) + 12.0 * mu) - std::log(0.125);
  CHECK(rhs1 == doctest::Approx(5.856).epsilon(1e-3));
  CHECK(g.margin[0] == doctest::Approx(2.0 * mu - rhs1));
  CHECK(g.holds[0]);
  // Affine in t: holding at t = 1 with 2 mu > log(4 mu) implies every t.
  CHECK(2.0 * mu > std::log(4.0 * mu));
  CHECK(g.all_t);
  for (bool b : g.holds) CHECK(b);
  CHECK(code_of([] { growth_condition_holds(0.5, 0.5, 2.0, 4.0, 3); }) ==
        ErrorCode::PreconditionFailed);
  // Large C0 fails at t = 1.
  CHECK_FALSE(growth_condition_holds(1.0 / 32.0, 0.5, 1e30, 4.0, 3).holds[0]);
}

TEST_CASE("doubling constant") {
  CHECK(doubling_constant(1025.0, 2, 1.0) == doctest::Approx(1025.0 + std::log2(2.0 + 8.0 / (1023.0 * 1023.0))));
  CHECK(doubling_constant(1025.0, 2, 1.0) == doctest::Approx(1026.0000055142).epsilon(1e-12));
  CHECK(doubling_constant(3.0, 2, 1.0) == doctest::Approx(3.0 + std::log2(10.0)));
  CHECK(doubling_constant(50.0, 2, 1e-12) == doctest::Approx(51.0).epsilon(1e-12));
  CHECK(code_of([] { doubling_constant(2.0, 2, 1.0); }) == ErrorCode::InvalidOrder);
}

TEST_CASE("worked pipeline configuration") {
  const PipelineConfig cfg;
  const auto r = vanishing_order_pipeline(cfg, 40.0 * std::log(2.0));
  CHECK(r.a == doctest::Approx(13.438742843229058).epsilon(1e-12));
  CHECK(r.t0 == doctest::Approx(0.48704324293101364).epsilon(1e-12));
  CHECK(r.s1 == 1);
  CHECK(r.s == 1);
  CHECK_FALSE(r.s_advanced);
  CHECK(r.j1 == 511);
  CHECK(r.m1 == 1025.0);
  CHECK(r.R2 == cfg.R0);
  CHECK(r.R3 == std::ldexp(1.0, -23));
  CHECK(r.log2_C3 >= 1026.0);
  CHECK(r.log2_C3 <= 1027.0);
  CHECK(r.growth_ok);
  CHECK(r.nesting_ok);
  CHECK(r.admissibility.ok());
  CHECK_FALSE(r.t0_clamped);
}

TEST_CASE("pipeline error paths") {
  const PipelineConfig cfg;
  CHECK(code_of([&] { vanishing_order_pipeline(cfg, 0.0); }) == ErrorCode::RatioNotAboveOne);
  CHECK(code_of([&] { vanishing_order_pipeline(cfg, -1.0); }) == ErrorCode::RatioNotAboveOne);
  CHECK(code_of([&] { vanishing_order_pipeline(cfg, -INFINITY, 1.0); }) == ErrorCode::ZeroSolution);
  PipelineConfig sixteenth = cfg;
  sixteenth.R0 = 1.0 / 16.0;
  CHECK(code_of([&] { vanishing_order_pipeline(sixteenth, 10.0); }) == ErrorCode::BoundsViolated);
  PipelineConfig strong = cfg;
  strong.C1 = 1e4;
  CHECK(code_of([&] { vanishing_order_pipeline(strong, 10.0); }) == ErrorCode::AdmissibilityFailed);
  PipelineConfig grad = cfg;
  grad.C2 = 0.8;
  CHECK(code_of([&] { vanishing_order_pipeline(grad, 10.0); }) == ErrorCode::AdmissibilityFailed);
  PipelineConfig huge_c0 = cfg;
  huge_c0.C0 = 1e30;
  CHECK(code_of([&] { vanishing_order_pipeline(huge_c0, 10.0); }) ==
        ErrorCode::GrowthConditionFailed);
}

TEST_CASE("ratios close to one use the clamp") {
  const PipelineConfig cfg;
  const auto r = vanishing_order_pipeline(cfg, 1e-6);
  CHECK(r.t0_clamped);
  CHECK(r.t0 >= 0.0);
  CHECK(r.t0_raw < 0.0);
  CHECK(r.s1 == 1);
  CHECK(r.s == 1);
}

TEST_CASE("s advances when R0^(2 s1) exceeds R_j0") {
  PipelineConfig cfg;
  cfg.j0 = 600;  // R_j0 = 1/1201 < R0^2
  const auto r = vanishing_order_pipeline(cfg, 40.0 * std::log(2.0));
  CHECK(r.s_advanced);
  CHECK(r.s == 2);
  CHECK(r.j1 >= cfg.j0);
  CHECK(r.nesting_ok);
}

TEST_CASE("m1 is nondecreasing in rho") {
  const PipelineConfig cfg;
  double prev = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double log_rho = std::exp(std::log(1e-3) + i * (std::log(1e4) - std::log(1e-3)) / 19.0);
    const auto r = vanishing_order_pipeline(cfg, log_rho);
    CHECK(r.m1 >= prev);
    prev = r.m1;
  }
}

TEST_CASE("pipeline invariants on randomized configurations") {
  Rng rng(2024);
  int accepted = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    PipelineConfig cfg;
    cfg.n = rng.uniform() < 0.5 ? 2 : 3;
    cfg.R0 = std::exp(rng.uniform(std::log(1e-3), std::log(max_pipeline_R0())));
    cfg.gamma = std::exp(rng.uniform(std::log(0.25), std::log(8.0)));
    cfg.j0 = static_cast<std::int64_t>(rng.uniform(0.0, 50.0));
    cfg.C0 = std::exp(rng.uniform(std::log(1.01), std::log(100.0)));
    cfg.beta0 = rng.uniform(1.0, 3.0);
    cfg.Ctilde_prime = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
    const double log_rho = std::exp(rng.uniform(std::log(1e-2), std::log(1e3)));
    PipelineResult r;
    try {
      r = vanishing_order_pipeline(cfg, log_rho);
    } catch (const Error& e) {
      // Only the documented rejections are acceptable for in-range configurations.
      const bool documented = e.code() == ErrorCode::GrowthConditionFailed ||
                              e.code() == ErrorCode::AdmissibilityFailed ||
                              e.code() == ErrorCode::InvalidArgument;
      CHECK(documented);
      continue;
    }
    ++accepted;
    const double x = std::pow(cfg.R0, 2.0 * static_cast<double>(r.s));
    CHECK(cfg.R_j(static_cast<double>(r.j1 + 1)) < x);
    CHECK(x <= cfg.R_j(static_cast<double>(r.j1)));
    CHECK(r.j1 >= cfg.j0);
    CHECK(r.s >= 1);
    CHECK(r.m1 > cfg.n);
    CHECK(r.log2_C3 >= r.m1);
    CHECK(r.log2_C3 >= r.m1 + 1.0);
    const auto again = vanishing_order_pipeline(cfg, log_rho);
    CHECK(result_to_json(again) == result_to_json(r));
  }
  CHECK(accepted > 500);
}

TEST_CASE("config parsing") {
  const auto cfg = parse_pipeline_config(R"({"n": 3, "R0": 0.01, "C1": 0.5})");
  CHECK(cfg.n == 3);
  CHECK(cfg.R0 == 0.01);
  CHECK(cfg.C1 == 0.5);
  CHECK(cfg.gamma == 2.0);
  CHECK(code_of([] { parse_pipeline_config(R"({"R0": 0.01, "bogus": 1})"); }) ==
        ErrorCode::ConfigError);
  CHECK(code_of([] { parse_pipeline_config(R"({"R0": 0.5})"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_pipeline_config(R"({"n": 2.5})"); }) == ErrorCode::ConfigError);
  try {
    parse_pipeline_config("{\n  \"R0\": 0.01,\n  \"n\": ,\n}");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  const auto round = parse_pipeline_config(config_to_json(cfg));
  CHECK(config_to_json(round) == config_to_json(cfg));
}

TEST_CASE("result JSON carries every field") {
  const auto r = vanishing_order_pipeline(PipelineConfig{}, 40.0 * std::log(2.0));
  const auto j = nlohmann::json::parse(result_to_json(r));
  for (const char* key : {"a", "log_C", "t0", "s", "j1", "m1", "log2_C3", "R2", "R3", "flags"})
    CHECK(j.contains(key));
  CHECK(j["j1"].get<std::int64_t>() == 511);
}
