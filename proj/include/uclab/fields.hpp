#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uclab/errors.hpp"

namespace uclab {

// Points, gradients and Hessians always carry three components. For n = 2
// the third component is identically zero.
using Point = Eigen::Vector3d;
using Vector = Eigen::Vector3d;
using Matrix = Eigen::Matrix3d;
using CoefficientMatrix = Eigen::Matrix3cd;

struct Jet {
  double value = 0.0;
  Vector gradient = Vector::Zero();
  Matrix hessian = Matrix::Zero();
};

// Closed radial interval [inner, outer].
struct Annulus {
  double inner = 0.0;
  double outer = 0.0;
};

// Evaluation backend of a SolutionField. Implementations are immutable and
// may be evaluated concurrently.
class FieldModel {
 public:
  virtual ~FieldModel() = default;
  // Fills value and, up to `order`, gradient and Hessian. Callers never ask
  // for more than derivative_order().
  virtual Jet evaluate(const Point& x, int order) const = 0;
  virtual int derivative_order() const { return 2; }
};

enum class FieldKind { HarmonicPolynomial, Indicial, PowerRadial, Grid, Custom, Derived };

struct FieldInfo {
  int dimension = 2;
  FieldKind kind = FieldKind::Custom;
  std::string id;
  // Exact homogeneity degree sigma when u(tx) = t^sigma u(x) on the domain.
  std::optional<double> radial_exponent;
  // The field vanishes identically outside this annulus.
  std::optional<Annulus> support;
  // The field is only defined on this annulus (grid fields).
  std::optional<Annulus> domain;
};

class SolutionField {
 public:
  SolutionField(std::shared_ptr<const FieldModel> model, FieldInfo info);

  int dimension() const { return info_.dimension; }
  FieldKind kind() const { return info_.kind; }
  const std::string& id() const { return info_.id; }
  const FieldInfo& info() const { return info_; }
  std::optional<double> radial_exponent() const { return info_.radial_exponent; }
  std::optional<Annulus> support() const { return info_.support; }
  std::optional<Annulus> domain() const { return info_.domain; }
  int derivative_order() const { return model_->derivative_order(); }

  double value(const Point& x) const;
  Vector gradient(const Point& x) const;
  Matrix hessian(const Point& x) const;
  Jet jet(const Point& x) const;
  // Jet up to the requested derivative order (0, 1 or 2).
  Jet jet(const Point& x, int order) const;

  SolutionField scaled(double lambda) const;
  // x -> u(s x).
  SolutionField rescaled(double s) const;
  // x -> u(Q x) for an orthogonal Q.
  SolutionField rotated(const Matrix& q) const;
  SolutionField with_id(std::string id) const;

 private:
  void check_point(const Point& x) const;
  void require_order(int order) const;

  std::shared_ptr<const FieldModel> model_;
  FieldInfo info_;
};

// Sum of c_i u_i. All terms must share a dimension.
SolutionField linear_combination(const std::vector<double>& coefficients,
                                 const std::vector<SolutionField>& terms, std::string id);

// Custom(evaluator triple). A missing hessian makes the field first-order only.
struct CustomEvaluators {
  std::function<double(const Point&)> value;
  std::function<Vector(const Point&)> gradient;
  std::function<Matrix(const Point&)> hessian;
};
SolutionField custom_field(int dimension, CustomEvaluators evaluators, std::string id,
                           std::optional<double> radial_exponent = std::nullopt);

// Field backed by a jet evaluator that fills derivatives up to the requested
// order, which never exceeds `order`.
SolutionField jet_field(FieldInfo info, std::function<Jet(const Point&, int)> evaluate, int order);

// Real spherical harmonic of degree l evaluated on the unit sphere, normalized
// to max modulus 1. For n = 2, index 0 selects cos(l theta) and index 1
// sin(l theta). For n = 3, index m in [-l, l] selects the tesseral harmonic
// with cos(m theta) for m >= 0 and sin(|m| theta) for m < 0; l <= 8.
double spherical_harmonic(int n, int l, int index, const Point& unit_point);

// u = r^l Y_l.
SolutionField harmonic_polynomial(int n, int l, int index = 0);
// u = r^sigma Y_l.
SolutionField indicial_field(int n, double sigma, int l, int index = 0);
// u = r^sigma.
SolutionField power_radial(int n, double sigma);

// Coefficient c in  Delta(r^sigma Y_l) = c |x|^-2 r^sigma Y_l.
double indicial_coefficient(int n, double sigma, int l);

struct IndicialSolution {
  SolutionField field;
  double c;
};
IndicialSolution make_indicial(int n, double sigma, int l);

// Tensor-product polar (n = 2) or spherical (n = 3) grid with nodal values.
// Angles theta are uniform and periodic; phi (n = 3) is the polar angle.
struct GridData {
  int dimension = 2;
  std::vector<double> radii;
  std::vector<double> thetas;
  std::vector<double> phis;
  std::vector<double> values;  // index ((i_r * N_theta) + i_theta) * N_phi + i_phi

  std::size_t index(std::size_t ir, std::size_t it, std::size_t ip = 0) const {
    const std::size_t nphi = dimension == 3 ? phis.size() : 1;
    return (ir * thetas.size() + it) * nphi + ip;
  }
  void validate() const;
};

// Grid field with cubic Lagrange interpolation. For n = 2 derivatives come from
// second-order central differences at the nodes (one-sided on the boundary
// rings) interpolated to the evaluation point. n = 3 grids carry values only.
SolutionField grid_field(GridData data, std::string id);

GridData read_grid_csv(std::istream& in);
GridData read_grid_csv_file(const std::string& path);
void write_grid_csv(std::ostream& out, const GridData& data);
void write_grid_csv_file(const std::string& path, const GridData& data);
// Quotes a CSV cell when it holds a comma, quote or newline.
std::string csv_escape(const std::string& cell);

class EllipticOperator {
 public:
  using Coefficients = std::function<CoefficientMatrix(const Point&)>;

  // Throws InvalidArgument unless a(0) is real and symmetric to 1e-14.
  EllipticOperator(int dimension, Coefficients coefficients, double c1, double c2,
                   double ellipticity, double lipschitz, std::string name);

  static EllipticOperator laplacian(int dimension, double c1 = 0.0, double c2 = 0.0);
  // a_jk(x) = delta_jk + eps x_j x_k / (1 + |x|^2), |eps| <= 0.1.
  static EllipticOperator perturbed(int dimension, double eps, double c1 = 0.0, double c2 = 0.0);

  int dimension() const { return dimension_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double ellipticity() const { return ellipticity_; }
  double lipschitz() const { return lipschitz_; }
  const std::string& name() const { return name_; }
  bool is_laplacian() const { return laplacian_; }

  CoefficientMatrix coefficients(const Point& x) const;
  EllipticOperator with_bounds(double c1, double c2) const;

 private:
  int dimension_;
  Coefficients coefficients_;
  double c1_;
  double c2_;
  double ellipticity_;
  double lipschitz_;
  std::string name_;
  bool laplacian_ = false;
};

struct OperatorCheck {
  bool symmetric_at_origin = false;
  bool elliptic = false;
  bool lipschitz = false;
  double min_ellipticity_ratio = 0.0;  // min Re(xi^T a xi) / |xi|^2 over samples
  double max_lipschitz_ratio = 0.0;    // max |a(x) - a(y)| / |x - y| over samples
};

// Spot-checks the operator invariants on seeded random samples in B_radius.
OperatorCheck check_operator(const EllipticOperator& op, std::uint64_t seed = 42,
                             int samples = 256, double radius = 1.0);

// sum_jk a_jk(x) d_j d_k u(x).
std::complex<double> apply_operator(const EllipticOperator& op, const SolutionField& u,
                                    const Point& x);
std::complex<double> apply_operator(const EllipticOperator& op, const Point& x, const Jet& jet);

// |Pu| - C1 |x|^-2 |u| - C2 |x|^-1 |grad u|; <= 0 where the differential
// inequality holds.
double inequality_residual(const EllipticOperator& op, const SolutionField& u, const Point& x);

// Cartesian point from polar (n = 2) or spherical (n = 3) coordinates.
Point from_polar(int n, double r, double theta, double phi = 0.0);

}  // namespace uclab
