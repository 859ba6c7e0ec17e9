#include "uclab/pdesolver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <numbers>
#include <regex>

#include "uclab/errors.hpp"

namespace uclab {

using nlohmann::json;

double TrigPolynomial::operator()(double theta) const {
  double v = a0;
  for (std::size_t k = 0; k < cos.size(); ++k) v += cos[k] * std::cos((k + 1.0) * theta);
  for (std::size_t k = 0; k < sin.size(); ++k) v += sin[k] * std::sin((k + 1.0) * theta);
  return v;
}

TrigPolynomial TrigPolynomial::mode(int l, double amplitude, bool sine) {
  if (l < 0) throw Error(ErrorCode::InvalidArgument, "trigonometric mode must be >= 0");
  if (l == 0) return constant(sine ? 0.0 : amplitude);
  TrigPolynomial g;
  auto& c = sine ? g.sin : g.cos;
  c.assign(l, 0.0);
  c[l - 1] = amplitude;
  return g;
}

void AnnulusProblem::validate() const {
  if (op.dimension() != 2) throw Error(ErrorCode::InvalidArgument, "annulus solver is planar (n = 2)");
  if (!(r_in > 0.0) || !(r_in < r_out) || !std::isfinite(r_out))
    throw Error(ErrorCode::InvalidArgument, "annulus needs 0 < r_in < r_out");
  if (Nr < 16 || Ntheta < 16) throw Error(ErrorCode::InvalidArgument, "grid sizes must be >= 16");
  if (!std::isfinite(c1) || !std::isfinite(c2))
    throw Error(ErrorCode::InvalidArgument, "lower-order coefficients must be finite");
  if (std::abs(c1) > op.c1() * (1.0 + 1e-15) || std::abs(c2) > op.c2() * (1.0 + 1e-15))
    throw Error(ErrorCode::InvalidArgument, "|c1| <= C1 and |c2| <= C2 required by the operator");
}

SolveResult solve_grid(const AnnulusProblem& p) {
  p.validate();
  const int Nr = p.Nr, Nt = p.Ntheta;
  const double s_in = std::log(p.r_in), s_out = std::log(p.r_out);
  const double hs = (s_out - s_in) / (Nr - 1);
  const double ht = 2.0 * std::numbers::pi / Nt;

  SolveResult out;
  GridData& g = out.grid;
  g.dimension = 2;
  g.radii.resize(Nr);
  for (int i = 0; i < Nr; ++i) g.radii[i] = std::exp(s_in + i * hs);
  g.radii.front() = p.r_in;
  g.radii.back() = p.r_out;
  g.thetas.resize(Nt);
  for (int j = 0; j < Nt; ++j) g.thetas[j] = j * ht;
  g.values.assign(static_cast<std::size_t>(Nr) * Nt, 0.0);
  for (int j = 0; j < Nt; ++j) {
    g.values[g.index(0, j)] = p.g_in(g.thetas[j]);
    g.values[g.index(Nr - 1, j)] = p.g_out(g.thetas[j]);
  }

  // Multiplied by r^2 and written in s = log r, the equation reads
  //   arr (u_ss - u_s) + 2 art (u_st - u_t) + att (u_tt + u_s) - c1 u - c2 u_s = 0
  // with a in the frame (e_r, e_theta).
  const int rows = Nr - 2;
  const std::size_t N = static_cast<std::size_t>(rows) * Nt;
  out.unknowns = N;
  auto unknown = [&](int i, int j) { return static_cast<Eigen::Index>((i - 1) * Nt + j); };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(N * 9);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));

  const double lambda = p.op.ellipticity();
  for (int i = 0; i < Nr; ++i) {
    for (int j = 0; j < Nt; ++j) {
      const double th = g.thetas[j];
      const CoefficientMatrix ac = p.op.coefficients(from_polar(2, g.radii[i], th));
      Eigen::Matrix2d a;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
          if (std::abs(ac(r, c).imag()) > 1e-14)
            throw Error(ErrorCode::InvalidArgument, "annulus solver needs real coefficients");
          a(r, c) = ac(r, c).real();
        }
      const Eigen::Matrix2d sym = 0.5 * (a + a.transpose());
      const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(sym).eigenvalues()(0);
      if (!(min_eig > 0.0) || min_eig < lambda * (1.0 - 1e-9))
        throw Error(ErrorCode::NonElliptic, "coefficients lose ellipticity at r = " +
                                                std::to_string(g.radii[i]) +
                                                ", theta = " + std::to_string(th));
      if (i == 0 || i == Nr - 1) continue;

      const Eigen::Vector2d er(std::cos(th), std::sin(th)), et(-std::sin(th), std::cos(th));
      const double arr = er.dot(sym * er), att = et.dot(sym * et), art = er.dot(sym * et);
      const double c_ss = arr, c_tt = att, c_st = 2.0 * art;
      const double c_s = att - arr - p.c2, c_t = -2.0 * art, c_0 = -p.c1;

      const Eigen::Index row = unknown(i, j);
      const int jm = (j + Nt - 1) % Nt, jp = (j + 1) % Nt;
      auto add = [&](int ii, int jj, double w) {
        if (w == 0.0) return;
        if (ii == 0 || ii == Nr - 1)
          rhs(row) -= w * g.values[g.index(ii, jj)];
        else
          trip.emplace_back(row, unknown(ii, jj), w);
      };
      add(i, j, -2.0 * c_ss / (hs * hs) - 2.0 * c_tt / (ht * ht) + c_0);
      add(i + 1, j, c_ss / (hs * hs) + c_s / (2.0 * hs));
      add(i - 1, j, c_ss / (hs * hs) - c_s / (2.0 * hs));
      add(i, jp, c_tt / (ht * ht) + c_t / (2.0 * ht));
      add(i, jm, c_tt / (ht * ht) - c_t / (2.0 * ht));
      const double x = c_st / (4.0 * hs * ht);
      add(i + 1, jp, x);
      add(i + 1, jm, -x);
      add(i - 1, jp, -x);
      add(i - 1, jm, x);
    }
  }

  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "sparse factorization failed: " + lu.lastErrorMessage());
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw Error(ErrorCode::SingularSystem, "sparse solve failed");
  const double bn = rhs.norm();
  const double res = (A * x - rhs).norm();
  out.relative_residual = bn > 0.0 ? res / bn : res;
  if (!(out.relative_residual <= 1e-10))
    throw Error(ErrorCode::SingularSystem,
                "discrete residual " + std::to_string(out.relative_residual) + " above 1e-10");
  for (int i = 1; i < Nr - 1; ++i)
    for (int j = 0; j < Nt; ++j) g.values[g.index(i, j)] = x(unknown(i, j));
  return out;
}

SolutionField solve(const AnnulusProblem& problem) { return solve_grid(problem).field(); }

std::vector<ManufacturedCase> manufactured_cases() {
  auto make = [](std::string name, SolutionField ref, double r_in, double r_out, double c1,
                 double c2, int l, double sigma) {
    ManufacturedCase c{std::move(name), {}, std::move(ref)};
    c.problem.op = EllipticOperator::laplacian(2, std::abs(c1), std::abs(c2));
    c.problem.r_in = r_in;
    c.problem.r_out = r_out;
    c.problem.c1 = c1;
    c.problem.c2 = c2;
    c.problem.g_in = TrigPolynomial::mode(l, std::pow(r_in, sigma));
    c.problem.g_out = TrigPolynomial::mode(l, std::pow(r_out, sigma));
    return c;
  };
  std::vector<ManufacturedCase> out;
  out.push_back(make("harmonic", harmonic_polynomial(2, 1, 0), 0.5, 1.0, 0.0, 0.0, 1, 1.0));
  out.push_back(make("indicial", indicial_field(2, 2.5, 1, 0), 0.25, 1.0, 5.25, 0.0, 1, 2.5));
  out.push_back(make("indicial_c9", power_radial(2, 3.0), 0.25, 1.0, 9.0, 0.0, 0, 3.0));
  out.push_back(make("drift", indicial_field(2, 2.0, 1, 0), 0.25, 1.0, 0.0, 1.5, 1, 2.0));
  return out;
}

ConvergenceTable manufactured_convergence(const ManufacturedCase& c, const std::vector<int>& levels,
                                          const std::string& direction) {
  if (direction != "both" && direction != "radial")
    throw Error(ErrorCode::InvalidArgument, "direction must be 'both' or 'radial'");
  if (levels.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two levels");
  ConvergenceTable t{c.name, direction, {}, true};
  const int finest = *std::max_element(levels.begin(), levels.end());
  for (int level : levels) {
    AnnulusProblem p = c.problem;
    p.Nr = level;
    p.Ntheta = direction == "both" ? level : finest;
    const GridData g = solve_grid(p).grid;
    double err = 0.0;
    for (std::size_t i = 0; i < g.radii.size(); ++i)
      for (std::size_t j = 0; j < g.thetas.size(); ++j)
        err = std::max(err, std::abs(g.values[g.index(i, j)] -
                                     c.reference.value(from_polar(2, g.radii[i], g.thetas[j]))));
    ConvergenceRow row{p.Nr, p.Ntheta, err, 0.0};
    if (!t.rows.empty()) {
      row.order = std::log2(t.rows.back().max_error / err);
      if (!(row.order >= 1.7 && row.order <= 2.3)) t.order_ok = false;
    }
    t.rows.push_back(row);
  }
  return t;
}

namespace {

TrigPolynomial parse_trig(const json& j, const char* key) {
  if (j.is_number()) return TrigPolynomial::constant(j.get<double>());
  if (!j.is_object())
    throw Error(ErrorCode::ConfigError, std::string(key) + " must be a number or an object");
  TrigPolynomial g;
  for (const auto& [k, v] : j.items()) {
    if (k == "a0")
      g.a0 = v.get<double>();
    else if (k == "cos")
      g.cos = v.get<std::vector<double>>();
    else if (k == "sin")
      g.sin = v.get<std::vector<double>>();
    else
      throw Error(ErrorCode::ConfigError, std::string("unknown key '") + k + "' in " + key);
  }
  return g;
}

json trig_to_json(const TrigPolynomial& g) { return {{"a0", g.a0}, {"cos", g.cos}, {"sin", g.sin}}; }

EllipticOperator parse_operator(const json& j, double c1, double c2) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "laplacian") return EllipticOperator::laplacian(2, c1, c2);
    static const std::regex perturbed(R"(perturbed\(eps=([-+0-9.eE]+)\))");
    std::smatch m;
    if (std::regex_match(s, m, perturbed))
      return EllipticOperator::perturbed(2, std::stod(m[1].str()), c1, c2);
    throw Error(ErrorCode::ConfigError, "unknown operator '" + s + "'");
  }
  if (j.is_object() && j.value("type", "") == "perturbed")
    return EllipticOperator::perturbed(2, j.value("eps", 0.0), c1, c2);
  if (j.is_object() && j.value("type", "") == "laplacian") return EllipticOperator::laplacian(2, c1, c2);
  throw Error(ErrorCode::ConfigError, "operator must be \"laplacian\" or {\"type\": \"perturbed\", \"eps\": e}");
}

}  // namespace

AnnulusProblem parse_annulus_problem(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "problem must be a JSON object");
  static const std::vector<std::string> keys = {"operator", "r_in", "r_out", "c1",   "c2",
                                                "g_in",     "g_out", "Nr",    "Ntheta"};
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw Error(ErrorCode::ConfigError, "unknown problem key '" + k + "'");
  AnnulusProblem p;
  try {
    p.r_in = j.value("r_in", p.r_in);
    p.r_out = j.value("r_out", p.r_out);
    p.c1 = j.value("c1", p.c1);
    p.c2 = j.value("c2", p.c2);
    if (j.contains("g_in")) p.g_in = parse_trig(j["g_in"], "g_in");
    if (j.contains("g_out")) p.g_out = parse_trig(j["g_out"], "g_out");
    for (const char* k : {"Nr", "Ntheta"})
      if (j.contains(k) && !j[k].is_number_integer())
        throw Error(ErrorCode::ConfigError, std::string(k) + " must be an integer");
    p.Nr = j.value("Nr", p.Nr);
    p.Ntheta = j.value("Ntheta", p.Ntheta);
    p.op = parse_operator(j.value("operator", json("laplacian")), std::abs(p.c1), std::abs(p.c2));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad problem value: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return p;
}

json problem_to_json(const AnnulusProblem& p) {
  return {{"operator", p.op.name()}, {"r_in", p.r_in},   {"r_out", p.r_out},
          {"c1", p.c1},             {"c2", p.c2},       {"g_in", trig_to_json(p.g_in)},
          {"g_out", trig_to_json(p.g_out)}, {"Nr", p.Nr}, {"Ntheta", p.Ntheta}};
}

}  // namespace uclab
