#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "uclab/fields.hpp"

namespace uclab {

// g(theta) = a0 + sum_k cos_k cos(k theta) + sin_k sin(k theta), k from 1.
struct TrigPolynomial {
  double a0 = 0.0;
  std::vector<double> cos;
  std::vector<double> sin;

  double operator()(double theta) const;
  static TrigPolynomial constant(double a0) { return {a0, {}, {}}; }
  // amplitude * cos(l theta), or sin(l theta) when `sine`.
  static TrigPolynomial mode(int l, double amplitude, bool sine = false);
};

// Dirichlet problem  P u = c1 |x|^-2 u + c2 |x|^-1 (x/|x|) . grad u  on
// r_in < |x| < r_out in the plane, with u = g_in, g_out on the two circles.
struct AnnulusProblem {
  EllipticOperator op = EllipticOperator::laplacian(2);
  double r_in = 0.5;
  double r_out = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
  TrigPolynomial g_in = TrigPolynomial::constant(1.0);
  TrigPolynomial g_out = TrigPolynomial::constant(1.0);
  int Nr = 64;      // rings, both boundaries included
  int Ntheta = 64;  // periodic

  // InvalidArgument on bad radii, grids below 16, |c1| > C1 or |c2| > C2.
  void validate() const;
};

struct SolveResult {
  GridData grid;
  double relative_residual = 0.0;
  std::size_t unknowns = 0;

  SolutionField field(std::string id = "solution") const { return grid_field(grid, std::move(id)); }
};

// Second-order central differences on a polar grid uniform in log r and theta,
// sparse LU solve. Throws NonElliptic, SingularSystem.
SolveResult solve_grid(const AnnulusProblem& problem);
SolutionField solve(const AnnulusProblem& problem);

struct ManufacturedCase {
  std::string name;
  AnnulusProblem problem;  // grid sizes are overridden per level
  SolutionField reference;
};

// r cos(theta) on (0.5, 1); r^2.5 cos(theta) with c1 = 5.25 on (0.25, 1);
// r^3 with c1 = 9 on (0.25, 1); r^2 cos(theta) with c2 = 1.5 on (0.25, 1).
std::vector<ManufacturedCase> manufactured_cases();

struct ConvergenceRow {
  int Nr = 0;
  int Ntheta = 0;
  double max_error = 0.0;
  double order = 0.0;  // log2(previous error / error); 0 on the first row
};

struct ConvergenceTable {
  std::string name;
  std::string direction;  // "both" or "radial"
  std::vector<ConvergenceRow> rows;
  bool order_ok = false;  // every order in [1.7, 2.3]
};

// direction "both" refines Nr = Ntheta = level. "radial" keeps Ntheta at the
// finest level and refines Nr only.
ConvergenceTable manufactured_convergence(const ManufacturedCase& c, const std::vector<int>& levels,
                                          const std::string& direction = "both");

// {operator, r_in, r_out, c1, c2, g_in, g_out, Nr, Ntheta}. operator is
// "laplacian" or {"type": "perturbed", "eps": e}; g_* is a number or
// {"a0": .., "cos": [..], "sin": [..]}.
AnnulusProblem parse_annulus_problem(const nlohmann::json& j);
nlohmann::json problem_to_json(const AnnulusProblem& p);

}  // namespace uclab
