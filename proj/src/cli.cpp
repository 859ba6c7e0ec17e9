#include "uclab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "uclab/carleman.hpp"
#include "uclab/constants.hpp"
#include "uclab/errors.hpp"
#include "uclab/pdesolver.hpp"
#include "uclab/verify.hpp"

namespace uclab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Settings {
  std::uint64_t seed = 42;
  GridParams grid;
  PipelineConfig pipeline;
  double rho = 0x1p40;  // linear norm ratio for the pipeline subcommand
  CorpusSpec corpus;
  double beta_max = 256.0;
  double m_max = 20.5;
  std::vector<double> cacc_radii{0.1, 0.2, 0.4};
  std::array<double, 4> cacc_a{0.5, 1.0, 0.25, 2.0};
  int vo_count = 16;
  AnnulusProblem problem;
};

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> nr, ntheta;
  std::optional<double> rho, r0, beta_max, m_max;
};

Error config_error(const std::string& msg) { return Error(ErrorCode::ConfigError, msg); }

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw config_error("config key '" + key + "' must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw config_error("config key '" + key + "' must be an integer");
  return v.get<int>();
}

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& known) {
  if (!obj.is_object()) throw config_error("config key '" + section + "' must be an object");
  for (const auto& [k, v] : obj.items())
    if (!known.count(k)) throw config_error("unknown config key '" + section + "." + k + "'");
}

void apply_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(path + ": parse error at " + line_column(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object()) throw config_error(path + ": config must be a JSON object");
  static const std::set<std::string> top{"seed",          "grid",        "pipeline",
                                         "rho",           "carleman",    "caccioppoli",
                                         "vanishing_order", "solve"};
  try {
    for (const auto& [k, v] : doc.items())
      if (!top.count(k)) throw config_error("unknown config key '" + k + "'");
    if (doc.contains("seed")) {
      if (!doc["seed"].is_number_unsigned()) throw config_error("config key 'seed' must be a non-negative integer");
      s.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("grid")) {
      const json& g = doc["grid"];
      check_keys(g, "grid", {"panels_per_decade", "radial_order", "n_theta", "n_phi"});
      if (g.contains("panels_per_decade")) s.grid.panels_per_decade = integer(g["panels_per_decade"], "grid.panels_per_decade");
      if (g.contains("radial_order")) s.grid.radial_order = integer(g["radial_order"], "grid.radial_order");
      if (g.contains("n_theta")) s.grid.n_theta = integer(g["n_theta"], "grid.n_theta");
      if (g.contains("n_phi")) s.grid.n_phi = integer(g["n_phi"], "grid.n_phi");
    }
    if (doc.contains("pipeline")) {
      try {
        s.pipeline = parse_pipeline_config(doc["pipeline"].dump());
      } catch (const Error& e) {
        throw config_error("pipeline: " + std::string(e.what()).substr(to_string(e.code()).size() + 2));
      }
    }
    if (doc.contains("rho")) s.rho = number(doc["rho"], "rho");
    if (doc.contains("carleman")) {
      const json& c = doc["carleman"];
      check_keys(c, "carleman", {"dimension", "r1", "r2", "beta_max", "m_max"});
      if (c.contains("dimension")) s.corpus.dimension = integer(c["dimension"], "carleman.dimension");
      if (c.contains("r1")) s.corpus.r1 = number(c["r1"], "carleman.r1");
      if (c.contains("r2")) s.corpus.r2 = number(c["r2"], "carleman.r2");
      if (c.contains("beta_max")) s.beta_max = number(c["beta_max"], "carleman.beta_max");
      if (c.contains("m_max")) s.m_max = number(c["m_max"], "carleman.m_max");
    }
    if (doc.contains("caccioppoli")) {
      const json& c = doc["caccioppoli"];
      check_keys(c, "caccioppoli", {"radii", "a"});
      if (c.contains("radii")) {
        if (!c["radii"].is_array() || c["radii"].empty())
          throw config_error("config key 'caccioppoli.radii' must be a non-empty array");
        s.cacc_radii.clear();
        for (const auto& r : c["radii"]) s.cacc_radii.push_back(number(r, "caccioppoli.radii"));
      }
      if (c.contains("a")) {
        if (!c["a"].is_array() || c["a"].size() != 4)
          throw config_error("config key 'caccioppoli.a' must be an array of four ratios");
        for (int i = 0; i < 4; ++i) s.cacc_a[i] = number(c["a"][i], "caccioppoli.a");
      }
    }
    if (doc.contains("vanishing_order")) {
      const json& v = doc["vanishing_order"];
      check_keys(v, "vanishing_order", {"count"});
      if (v.contains("count")) s.vo_count = integer(v["count"], "vanishing_order.count");
    }
    if (doc.contains("solve")) {
      try {
        s.problem = parse_annulus_problem(doc["solve"]);
      } catch (const Error& e) {
        throw config_error("solve: " + std::string(e.what()).substr(to_string(e.code()).size() + 2));
      }
    }
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + std::string(e.what()).substr(to_string(e.code()).size() + 2));
  }
}

void apply_flags(Settings& s, const Flags& f) {
  if (f.seed) s.seed = *f.seed;
  if (f.nr) s.problem.Nr = *f.nr;
  if (f.ntheta) s.problem.Ntheta = *f.ntheta;
  if (f.rho) s.rho = *f.rho;
  if (f.r0) s.pipeline.R0 = *f.r0;
  if (f.beta_max) s.beta_max = *f.beta_max;
  if (f.m_max) s.m_max = *f.m_max;
}

void validate(Settings& s) {
  s.corpus.seed = s.seed;
  try {
    s.pipeline.validate();
    s.problem.validate();
  } catch (const Error& e) {
    throw config_error(std::string(e.what()).substr(to_string(e.code()).size() + 2));
  }
  if (!(s.rho > 1.0) || !std::isfinite(s.rho)) throw config_error("rho must be a finite ratio > 1");
  if (!(s.beta_max >= 4.0)) throw config_error("beta-max must be >= 4");
  if (!(s.m_max >= 1.5)) throw config_error("m-max must be >= 1.5");
  if (s.vo_count < 8) throw config_error("vanishing_order.count must be >= 8");
  if (s.grid.panels_per_decade < 1 || s.grid.radial_order < 1 || s.grid.n_theta < 3 ||
      s.grid.n_phi < 2)
    throw config_error("grid resolution too small");
}

json settings_json(const Settings& s) {
  return {{"seed", s.seed},
          {"grid",
           {{"panels_per_decade", s.grid.panels_per_decade},
            {"radial_order", s.grid.radial_order},
            {"n_theta", s.grid.n_theta},
            {"n_phi", s.grid.n_phi}}},
          {"pipeline", json::parse(config_to_json(s.pipeline))},
          {"rho", s.rho},
          {"carleman",
           {{"dimension", s.corpus.dimension},
            {"r1", s.corpus.r1},
            {"r2", s.corpus.r2},
            {"beta_max", s.beta_max},
            {"m_max", s.m_max}}},
          {"caccioppoli", {{"radii", s.cacc_radii}, {"a", s.cacc_a}}},
          {"vanishing_order", {{"count", s.vo_count}}},
          {"solve", problem_to_json(s.problem)}};
}

// Homogeneous fields used by the vanishing-order and doubling subcommands.
std::vector<SolutionField> homogeneous_family(int n) {
  std::vector<SolutionField> out;
  out.push_back(power_radial(n, 0.0).with_id("one"));
  for (int l = 1; l <= 5; ++l)
    out.push_back(harmonic_polynomial(n, l, 0).with_id("harmonic_l" + std::to_string(l)));
  out.push_back(indicial_field(n, 2.5, 1, 0).with_id("indicial_s2.5_l1"));
  return out;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return f;
}

struct Context {
  const Settings& s;
  fs::path out;
  std::vector<std::string> outputs;
};

int cmd_three_sphere(Context& c) {
  const auto& s = c.s;
  const int n = s.pipeline.n;
  const double R0 = s.pipeline.R0;
  const auto t = SphereTriple::from_ratios(std::pow(R0, 4), R0 * R0, 1.0);
  const auto k = three_sphere_constants(t.r1, t.r2, n, s.pipeline.C0, s.pipeline.beta0);
  std::vector<VerificationRecord> recs;
  int code = kOk;
  for (int l = 1; l <= 8; ++l) {
    const auto u = harmonic_polynomial(n, l, 0).with_id("harmonic_l" + std::to_string(l));
    try {
      recs.push_back(check_three_sphere(u, t, k, s.grid));
      if (!recs.back().holds()) code = kFalsified;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroNorm) throw;
      std::cerr << "three-sphere: " << e.what() << "\n";
      code = kFalsified;
    }
  }
  auto f = open_csv(c.out / "three-sphere.csv");
  write_verification_csv(f, recs);
  c.outputs.push_back("three-sphere.csv");
  double min_margin = INFINITY;
  for (const auto& r : recs) min_margin = std::min(min_margin, r.margin);
  std::cout << "three-sphere: " << recs.size() << " rows, tau = " << k.tau
            << ", log C = " << k.log_C << ", min margin = " << min_margin << "\n";
  return code;
}

int report_sweep(Context& c, const std::string& name, const std::vector<CarlemanReport>& reports) {
  auto f = open_csv(c.out / (name + ".csv"));
  write_carleman_csv(f, reports);
  c.outputs.push_back(name + ".csv");
  const auto sum = summarize_sweep(reports);
  std::cout << name << ": " << reports.size() << " rows, sup ratio = " << sum.sup_ratio << "\n";
  for (const auto& m : sum.members)
    std::cout << "  " << m.member << ": max/median = " << m.max_ratio / m.median_ratio
              << (m.bounded ? "" : "  (exceeds 10)") << "\n";
  return sum.all_bounded ? kOk : kFalsified;
}

int cmd_carleman_log(Context& c) {
  const auto corpus = build_corpus(c.s.corpus);
  const auto op = EllipticOperator::laplacian(c.s.corpus.dimension);
  return report_sweep(c, "carleman-log",
                      log_weight_sweep(corpus, op, default_beta_sweep(c.s.beta_max),
                                       carleman_grid_params()));
}

int cmd_carleman_power(Context& c) {
  const auto corpus = build_corpus(c.s.corpus);
  return report_sweep(c, "carleman-power",
                      power_weight_sweep(corpus, default_m_sweep(c.s.m_max), power_grid_params()));
}

int cmd_caccioppoli(Context& c) {
  const auto& s = c.s;
  const int n = s.pipeline.n;
  const std::vector<SolutionField> fields = {
      power_radial(n, 0.0).with_id("one"), harmonic_polynomial(n, 1, 0).with_id("harmonic_l1"),
      indicial_field(n, 2.5, 1, 0).with_id("indicial_s2.5_l1")};
  std::vector<CarlemanReport> rows;
  int code = kOk;
  for (const auto& u : fields) {
    std::array<double, 3> lo{INFINITY, INFINITY, INFINITY}, hi{0.0, 0.0, 0.0};
    for (double r : s.cacc_radii) {
      const auto res = caccioppoli_check(u, r, s.cacc_a, s.grid);
      for (int k = 0; k <= 2; ++k) {
        rows.push_back({"caccioppoli_k" + std::to_string(k), u.id(), r, res.lhs_log[k], res.rhs_log,
                        res.ratio[k], {}});
        if (res.ratio[k] > 0.0) {
          lo[k] = std::min(lo[k], res.ratio[k]);
          hi[k] = std::max(hi[k], res.ratio[k]);
        }
      }
    }
    for (int k = 0; k <= 2; ++k)
      if (hi[k] > 0.0 && hi[k] > 1.01 * lo[k]) {
        std::cerr << "caccioppoli: ratio of " << u.id() << " varies with r beyond 1% at |alpha| = "
                  << k << "\n";
        code = kFalsified;
      }
  }
  auto f = open_csv(c.out / "caccioppoli.csv");
  write_carleman_csv(f, rows);
  c.outputs.push_back("caccioppoli.csv");
  double cmax = 0.0;
  for (const auto& r : rows) cmax = std::max(cmax, r.ratio);
  std::cout << "caccioppoli: " << rows.size() << " rows, C' = " << cmax << "\n";
  return code;
}

int cmd_pipeline(Context& c) {
  const auto res = vanishing_order_pipeline(c.s.pipeline, std::log(c.s.rho));
  const json j = json::parse(result_to_json(res));
  {
    std::ofstream f(c.out / "pipeline.json", std::ios::binary);
    f << j.dump(2) << "\n";
  }
  auto f = open_csv(c.out / "pipeline.csv");
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%lld,%lld,%lld,%.17g,%.17g,%.17g\n",
                res.log_rho, res.a, res.log_C, res.t0, static_cast<long long>(res.s),
                static_cast<long long>(res.j1), static_cast<long long>(res.m1), res.log2_C3, res.R2,
                res.R3);
  f << "log_rho,a,log_C,t0,s,j1,m1,log2_C3,R2,R3\n" << buf;
  c.outputs.push_back("pipeline.csv");
  c.outputs.push_back("pipeline.json");
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_vanishing_order(Context& c) {
  const auto& s = c.s;
  std::vector<VerificationRecord> recs;
  int code = kOk;
  for (const auto& u : homogeneous_family(s.pipeline.n)) {
    const auto rep = vanishing_order_consistency(u, s.pipeline, s.grid);
    const auto fit = s.vo_count == 16
                         ? rep.fit
                         : estimate_vanishing_order(u, default_vanishing_radii(s.pipeline.R0, s.vo_count), s.grid);
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
      VerificationRecord r;
      r.check = "ball_norm";
      r.field = u.id();
      r.r1 = fit.radii[i];
      r.lhs_log = fit.log_norms[i];
      r.rhs_log = fit.intercept + fit.slope * std::log(fit.radii[i]);
      r.margin = r.rhs_log - r.lhs_log;
      recs.push_back(r);
    }
    auto summary = rep.record;
    summary.lhs_log = fit.slope;
    summary.margin = summary.rhs_log - summary.lhs_log;
    recs.push_back(summary);
    const double expect = 2.0 * *u.radial_exponent() + s.pipeline.n;
    const bool exact = std::abs(fit.slope - expect) <= 1e-3;
    if (!exact || fit.slope > rep.pipeline.m1) code = kFalsified;
    std::cout << "vanishing-order: " << u.id() << " slope = " << fit.slope << " (expected "
              << expect << "), m1 = " << rep.pipeline.m1 << "\n";
  }
  auto f = open_csv(c.out / "vanishing-order.csv");
  write_verification_csv(f, recs);
  c.outputs.push_back("vanishing-order.csv");
  return code;
}

int cmd_doubling(Context& c) {
  const auto& s = c.s;
  const double R0 = s.pipeline.R0;
  std::vector<VerificationRecord> recs;
  int code = kOk;
  for (const auto& u : homogeneous_family(s.pipeline.n)) {
    const double outer = ball_norm_sq(u, R0 * R0, s.grid).log_value;
    const double inner = ball_norm_sq(u, std::pow(R0, 4), s.grid).log_value;
    const auto res = vanishing_order_pipeline(s.pipeline, outer, inner);
    for (int k = 0; k < 4; ++k) {
      recs.push_back(check_doubling(u, res.R3 / std::pow(2.0, k), res.log2_C3, res.R3, s.grid));
      if (!recs.back().holds()) code = kFalsified;
    }
  }
  auto f = open_csv(c.out / "doubling.csv");
  write_verification_csv(f, recs);
  c.outputs.push_back("doubling.csv");
  double min_margin = INFINITY;
  for (const auto& r : recs) min_margin = std::min(min_margin, r.margin);
  std::cout << "doubling: " << recs.size() << " rows, min margin (log2) = " << min_margin << "\n";
  return code;
}

int cmd_solve(Context& c) {
  const auto res = solve_grid(c.s.problem);
  auto f = open_csv(c.out / "solve.csv");
  write_grid_csv(f, res.grid);
  c.outputs.push_back("solve.csv");
  std::cout << "solve: " << res.unknowns << " unknowns, relative residual = "
            << res.relative_residual << "\n";
  return kOk;
}

using Command = int (*)(Context&);
const std::vector<std::pair<std::string, Command>>& commands() {
  static const std::vector<std::pair<std::string, Command>> table = {
      {"three-sphere", cmd_three_sphere}, {"carleman-log", cmd_carleman_log},
      {"carleman-power", cmd_carleman_power}, {"caccioppoli", cmd_caccioppoli},
      {"pipeline", cmd_pipeline},         {"vanishing-order", cmd_vanishing_order},
      {"doubling", cmd_doubling},         {"solve", cmd_solve}};
  return table;
}

std::string usage(const CLI::App& app) {
  std::string text = app.help();
  text += "\nSubcommands:";
  for (const auto& name : subcommands()) text += " " + name;
  text += " all\nExit codes: 0 ok, 1 usage or config error, 2 an asserted inequality failed.\n";
  return text;
}

int run_command(const std::string& name, Command cmd, Context& ctx) {
  try {
    return cmd(ctx);
  } catch (const Error& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return e.code() == ErrorCode::ZeroNorm ? kFalsified : kUsage;
  }
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, cmd] : commands()) v.push_back(name);
    return v;
  }();
  return names;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"uclab: numerical checks of quantitative strong unique continuation", "uclab"};
  std::string sub;
  Flags f;
  app.add_option("subcommand", sub, "three-sphere, carleman-log, carleman-power, caccioppoli, "
                                    "pipeline, vanishing-order, doubling, solve or all");
  app.add_option("--config", f.config, "JSON config file");
  app.add_option("--out", f.out, "output directory (default $UCLAB_OUT, then .)");
  app.add_option("--seed", f.seed, "corpus seed (default 42)");
  app.add_option("--nr", f.nr, "solver radial grid size");
  app.add_option("--ntheta", f.ntheta, "solver angular grid size");
  app.add_option("--rho", f.rho, "ratio of the integrals of |u|^2 over B_{R0^2} and B_{R0^4}");
  app.add_option("--r0", f.r0, "pipeline radius R0");
  app.add_option("--beta-max", f.beta_max, "largest beta of the log-weight sweep");
  app.add_option("--m-max", f.m_max, "largest m of the power-weight sweep");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    std::cout << usage(app);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << usage(app);
    return kUsage;
  }

  std::vector<std::pair<std::string, Command>> selected;
  if (sub == "all") {
    selected = commands();
  } else {
    for (const auto& entry : commands())
      if (entry.first == sub) selected.push_back(entry);
  }
  if (selected.empty()) {
    std::cerr << (sub.empty() ? "error: missing subcommand\n" : "error: unknown subcommand '" + sub + "'\n")
              << usage(app);
    return kUsage;
  }
  if (f.rho && sub != "pipeline" && sub != "all") {
    std::cerr << "error: --rho applies to the pipeline subcommand only\n" << usage(app);
    return kUsage;
  }

  Settings s;
  try {
    if (f.config) apply_file(s, *f.config);
    apply_flags(s, f);
    validate(s);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  fs::path out = ".";
  if (f.out) {
    out = *f.out;
  } else if (const char* env = std::getenv("UCLAB_OUT"); env && *env) {
    out = env;
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    std::cerr << "error: cannot create output directory " << out.string() << "\n";
    return kUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  Context ctx{s, out, {}};
  int code = kOk;
  json results = json::object();
  for (const auto& [name, cmd] : selected) {
    const int rc = run_command(name, cmd, ctx);
    results[name] = rc;
    if (rc == kUsage || (rc == kFalsified && code == kOk)) code = rc;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json meta{{"subcommand", sub},
            {"config_file", f.config ? json(*f.config) : json(nullptr)},
            {"config", settings_json(s)},
            {"versions",
             {{"uclab", "0.1.0"},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                            "." + std::to_string(EIGEN_MINOR_VERSION)},
              {"compiler", __VERSION__}}},
            {"exit_codes", results},
            {"exit_code", code},
            {"outputs", ctx.outputs},
            {"wall_time_s", wall}};
  std::ofstream mf(out / "run_meta.json", std::ios::binary);
  mf << meta.dump(2) << "\n";
  return code;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args);
}

}  // namespace uclab::cli
