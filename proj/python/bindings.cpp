#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uclab/carleman.hpp"
#include "uclab/cli.hpp"
#include "uclab/constants.hpp"
#include "uclab/errors.hpp"
#include "uclab/fields.hpp"
#include "uclab/pdesolver.hpp"
#include "uclab/quadrature.hpp"
#include "uclab/verify.hpp"

namespace py = pybind11;
using namespace uclab;

namespace {

Point to_point(const std::vector<double>& x) {
  if (x.size() < 2 || x.size() > 3) throw Error(ErrorCode::InvalidArgument, "points have 2 or 3 coordinates");
  Point p = Point::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) p(static_cast<Eigen::Index>(i)) = x[i];
  return p;
}

std::vector<double> from_vector(const Vector& v, int n) { return {v.data(), v.data() + n}; }

std::vector<std::vector<double>> from_matrix(const Matrix& m, int n) {
  std::vector<std::vector<double>> out(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

PYBIND11_MODULE(_uclab, m) {
  m.doc() = "Numerical checks of quantitative strong unique continuation.";

  // Instances carry the error code name as `code`.
  static PyObject* error_type = py::exception<Error>(m, "UclabError").ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type, inst.ptr());
    }
  });

  py::class_<SolutionField>(m, "SolutionField")
      .def_property_readonly("id", &SolutionField::id)
      .def_property_readonly("dimension", &SolutionField::dimension)
      .def_property_readonly("radial_exponent", &SolutionField::radial_exponent)
      .def("value", [](const SolutionField& u, const std::vector<double>& x) { return u.value(to_point(x)); })
      .def("gradient",
           [](const SolutionField& u, const std::vector<double>& x) {
             return from_vector(u.gradient(to_point(x)), u.dimension());
           })
      .def("hessian",
           [](const SolutionField& u, const std::vector<double>& x) {
             return from_matrix(u.hessian(to_point(x)), u.dimension());
           })
      .def("scaled", &SolutionField::scaled)
      .def("rescaled", &SolutionField::rescaled)
      .def("with_id", &SolutionField::with_id);

  m.def("harmonic_polynomial", &harmonic_polynomial, py::arg("n"), py::arg("l"), py::arg("index") = 0);
  m.def("indicial_field", &indicial_field, py::arg("n"), py::arg("sigma"), py::arg("l"),
        py::arg("index") = 0);
  m.def("power_radial", &power_radial, py::arg("n"), py::arg("sigma"));
  m.def("indicial_coefficient", &indicial_coefficient, py::arg("n"), py::arg("sigma"), py::arg("l"));

  py::class_<EllipticOperator>(m, "EllipticOperator")
      .def_static("laplacian", &EllipticOperator::laplacian, py::arg("dimension"), py::arg("c1") = 0.0,
                  py::arg("c2") = 0.0)
      .def_static("perturbed", &EllipticOperator::perturbed, py::arg("dimension"), py::arg("eps"),
                  py::arg("c1") = 0.0, py::arg("c2") = 0.0)
      .def_property_readonly("name", &EllipticOperator::name)
      .def_property_readonly("dimension", &EllipticOperator::dimension);
  m.def("inequality_residual",
        [](const EllipticOperator& op, const SolutionField& u, const std::vector<double>& x) {
          return inequality_residual(op, u, to_point(x));
        });

  py::class_<GridParams>(m, "GridParams")
      .def(py::init<>())
      .def_readwrite("panels_per_decade", &GridParams::panels_per_decade)
      .def_readwrite("radial_order", &GridParams::radial_order)
      .def_readwrite("n_theta", &GridParams::n_theta)
      .def_readwrite("n_phi", &GridParams::n_phi);

  m.def(
      "ball_norm_sq", [](const SolutionField& u, double R, const GridParams& g) { return ball_norm_sq(u, R, g).log_value; },
      py::arg("u"), py::arg("R"), py::arg("grid") = GridParams{},
      "log of the integral of |u|^2 over the ball of radius R");
  m.def(
      "annulus_norm_sq",
      [](const SolutionField& u, double a, double b, const GridParams& g) { return annulus_norm_sq(u, a, b, g).log_value; },
      py::arg("u"), py::arg("r_in"), py::arg("r_out"), py::arg("grid") = GridParams{});

  py::class_<ThreeSphereConstants>(m, "ThreeSphereConstants")
      .def_readonly("rho1", &ThreeSphereConstants::rho1)
      .def_readonly("rho2", &ThreeSphereConstants::rho2)
      .def_readonly("A", &ThreeSphereConstants::A)
      .def_readonly("B", &ThreeSphereConstants::B)
      .def_readonly("tau", &ThreeSphereConstants::tau)
      .def_readonly("log_C", &ThreeSphereConstants::log_C);
  m.def("three_sphere_constants", &three_sphere_constants, py::arg("rho1"), py::arg("rho2"),
        py::arg("n") = 2, py::arg("C0") = 2.0, py::arg("beta0") = 1.0);

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("n", &PipelineConfig::n)
      .def_readwrite("R0", &PipelineConfig::R0)
      .def_readwrite("gamma", &PipelineConfig::gamma)
      .def_readwrite("j0", &PipelineConfig::j0)
      .def_readwrite("C0", &PipelineConfig::C0)
      .def_readwrite("beta0", &PipelineConfig::beta0)
      .def_readwrite("Ctilde_prime", &PipelineConfig::Ctilde_prime)
      .def_readwrite("Cpp", &PipelineConfig::Cpp)
      .def_readwrite("Cprime", &PipelineConfig::Cprime)
      .def_readwrite("C1", &PipelineConfig::C1)
      .def_readwrite("C2", &PipelineConfig::C2)
      .def("validate", &PipelineConfig::validate)
      .def("to_json", [](const PipelineConfig& c) { return config_to_json(c); });
  m.def("parse_pipeline_config", &parse_pipeline_config);

  py::class_<PipelineResult>(m, "PipelineResult")
      .def_readonly("a", &PipelineResult::a)
      .def_readonly("log_C", &PipelineResult::log_C)
      .def_readonly("tau", &PipelineResult::tau)
      .def_readonly("log_rho", &PipelineResult::log_rho)
      .def_readonly("t0", &PipelineResult::t0)
      .def_readonly("s", &PipelineResult::s)
      .def_readonly("j1", &PipelineResult::j1)
      .def_readonly("m1", &PipelineResult::m1)
      .def_readonly("log2_C3", &PipelineResult::log2_C3)
      .def_readonly("R2", &PipelineResult::R2)
      .def_readonly("R3", &PipelineResult::R3)
      .def_readonly("t0_clamped", &PipelineResult::t0_clamped)
      .def("to_json", [](const PipelineResult& r) { return result_to_json(r); });
  m.def("vanishing_order_pipeline",
        py::overload_cast<const PipelineConfig&, double>(&vanishing_order_pipeline), py::arg("cfg"),
        py::arg("log_rho"));

  py::class_<SphereTriple>(m, "SphereTriple")
      .def(py::init([](double r1, double r2, double r3) {
             SphereTriple t{r1, r2, r3};
             t.validate();
             return t;
           }),
           py::arg("r1"), py::arg("r2"), py::arg("r3"))
      .def_readonly("r1", &SphereTriple::r1)
      .def_readonly("r2", &SphereTriple::r2)
      .def_readonly("r3", &SphereTriple::r3);

  py::class_<VerificationRecord>(m, "VerificationRecord")
      .def_readonly("check", &VerificationRecord::check)
      .def_readonly("field", &VerificationRecord::field)
      .def_readonly("r1", &VerificationRecord::r1)
      .def_readonly("r2", &VerificationRecord::r2)
      .def_readonly("r3", &VerificationRecord::r3)
      .def_readonly("lhs_log", &VerificationRecord::lhs_log)
      .def_readonly("rhs_log", &VerificationRecord::rhs_log)
      .def_readonly("margin", &VerificationRecord::margin)
      .def_readonly("metadata", &VerificationRecord::metadata);
  m.def("check_three_sphere", &check_three_sphere, py::arg("u"), py::arg("triple"), py::arg("consts"),
        py::arg("grid") = GridParams{});
  m.def("check_doubling", &check_doubling, py::arg("u"), py::arg("r"), py::arg("log2_C3"), py::arg("R3"),
        py::arg("grid") = GridParams{});
  m.def(
      "estimate_vanishing_order",
      [](const SolutionField& u, const std::vector<double>& radii, const GridParams& g) {
        return estimate_vanishing_order(u, radii, g).slope;
      },
      py::arg("u"), py::arg("radii"), py::arg("grid") = GridParams{});
  m.def("default_vanishing_radii", &default_vanishing_radii, py::arg("R0"), py::arg("count") = 16);
  m.def(
      "vanishing_order_consistency",
      [](const SolutionField& u, const PipelineConfig& cfg) {
        const auto rep = vanishing_order_consistency(u, cfg);
        return py::dict(py::arg("slope") = rep.fit.slope, py::arg("m1") = rep.pipeline.m1,
                        py::arg("log_rho") = rep.log_rho, py::arg("consistent") = rep.consistent);
      },
      py::arg("u"), py::arg("cfg") = PipelineConfig{});

  py::class_<CarlemanReport>(m, "CarlemanReport")
      .def_readonly("estimate", &CarlemanReport::estimate)
      .def_readonly("member", &CarlemanReport::member)
      .def_readonly("param", &CarlemanReport::param)
      .def_readonly("lhs_log", &CarlemanReport::lhs_log)
      .def_readonly("rhs_log", &CarlemanReport::rhs_log)
      .def_readonly("ratio", &CarlemanReport::ratio);
  m.def(
      "build_corpus",
      [](int n, double r1, double r2, std::uint64_t seed) { return build_corpus({n, r1, r2, seed}); },
      py::arg("dimension") = 2, py::arg("r1") = 0.1, py::arg("r2") = 0.2, py::arg("seed") = 42);
  m.def(
      "log_weight_estimate",
      [](const SolutionField& u, double beta) {
        return log_weight_estimate(u, EllipticOperator::laplacian(u.dimension()), beta, carleman_grid_params());
      },
      py::arg("u"), py::arg("beta"));
  m.def(
      "power_weight_estimate",
      [](const SolutionField& u, double m) { return power_weight_estimate(u, m, power_grid_params()); },
      py::arg("u"), py::arg("m"));
  m.def(
      "caccioppoli_constant",
      [](const SolutionField& u, double r, const std::array<double, 4>& a) {
        return caccioppoli_check(u, r, a).constant;
      },
      py::arg("u"), py::arg("r"), py::arg("a") = std::array<double, 4>{0.5, 1.0, 0.25, 2.0});

  py::class_<TrigPolynomial>(m, "TrigPolynomial")
      .def(py::init([](double a0, std::vector<double> c, std::vector<double> s) {
             return TrigPolynomial{a0, std::move(c), std::move(s)};
           }),
           py::arg("a0") = 0.0, py::arg("cos") = std::vector<double>{}, py::arg("sin") = std::vector<double>{})
      .def("__call__", &TrigPolynomial::operator());

  py::class_<AnnulusProblem>(m, "AnnulusProblem")
      .def(py::init<>())
      .def_readwrite("op", &AnnulusProblem::op)
      .def_readwrite("r_in", &AnnulusProblem::r_in)
      .def_readwrite("r_out", &AnnulusProblem::r_out)
      .def_readwrite("c1", &AnnulusProblem::c1)
      .def_readwrite("c2", &AnnulusProblem::c2)
      .def_readwrite("g_in", &AnnulusProblem::g_in)
      .def_readwrite("g_out", &AnnulusProblem::g_out)
      .def_readwrite("Nr", &AnnulusProblem::Nr)
      .def_readwrite("Ntheta", &AnnulusProblem::Ntheta);

  py::class_<SolveResult>(m, "SolveResult")
      .def_property_readonly("radii", [](const SolveResult& r) { return r.grid.radii; })
      .def_property_readonly("thetas", [](const SolveResult& r) { return r.grid.thetas; })
      .def_property_readonly("values", [](const SolveResult& r) { return r.grid.values; })
      .def_readonly("relative_residual", &SolveResult::relative_residual)
      .def("field", &SolveResult::field, py::arg("id") = "solution");
  m.def("solve", &solve_grid, py::arg("problem"));

  m.def(
      "run_cli", [](const std::vector<std::string>& args) {
        std::vector<std::string> argv{"uclab"};
        argv.insert(argv.end(), args.begin(), args.end());
        return cli::run(argv);
      },
      py::arg("args"), "Runs the uclab command line with the given arguments; returns the exit code.");
}
