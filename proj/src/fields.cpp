#include "uclab/fields.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "uclab/random.hpp"

namespace uclab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Matrix identity_in(int n) {
  Matrix id = Matrix::Zero();
  for (int i = 0; i < n; ++i) id(i, i) = 1.0;
  return id;
}

// ---------------------------------------------------------------------------
// Polynomials in (x, y, z) with exact gradient and Hessian.

struct Monomial {
  std::array<int, 3> exponent;
  double coefficient;
};

constexpr int kMaxDegree = 32;

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Monomial> terms) : terms_(std::move(terms)) { compact(); }

  static Polynomial constant(double c) { return Polynomial({{{0, 0, 0}, c}}); }

  int degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.exponent[0] + t.exponent[1] + t.exponent[2]);
    return d;
  }

  Polynomial operator*(const Polynomial& other) const {
    std::vector<Monomial> out;
    for (const auto& a : terms_)
      for (const auto& b : other.terms_)
        out.push_back({{a.exponent[0] + b.exponent[0], a.exponent[1] + b.exponent[1],
                        a.exponent[2] + b.exponent[2]},
                       a.coefficient * b.coefficient});
    return Polynomial(std::move(out));
  }

  Polynomial operator+(const Polynomial& other) const {
    std::vector<Monomial> out = terms_;
    out.insert(out.end(), other.terms_.begin(), other.terms_.end());
    return Polynomial(std::move(out));
  }

  Polynomial scaled(double c) const {
    std::vector<Monomial> out = terms_;
    for (auto& t : out) t.coefficient *= c;
    return Polynomial(std::move(out));
  }

  Jet evaluate(const Point& x, int order) const {
    const int d = max_degree_;
    std::array<std::array<double, kMaxDegree + 1>, 3> pw{};
    for (int k = 0; k < 3; ++k) {
      pw[k][0] = 1.0;
      for (int e = 1; e <= d; ++e) pw[k][e] = pw[k][e - 1] * x(k);
    }
    auto p = [&](int k, int e) { return e < 0 ? 0.0 : pw[k][static_cast<std::size_t>(e)]; };
    Jet jet;
    for (const auto& t : terms_) {
      const auto& e = t.exponent;
      const double c = t.coefficient;
      jet.value += c * p(0, e[0]) * p(1, e[1]) * p(2, e[2]);
      if (order < 1) continue;
      jet.gradient(0) += c * e[0] * p(0, e[0] - 1) * p(1, e[1]) * p(2, e[2]);
      jet.gradient(1) += c * e[1] * p(0, e[0]) * p(1, e[1] - 1) * p(2, e[2]);
      jet.gradient(2) += c * e[2] * p(0, e[0]) * p(1, e[1]) * p(2, e[2] - 1);
      if (order < 2) continue;
      for (int a = 0; a < 3; ++a) {
        for (int b = a; b < 3; ++b) {
          std::array<int, 3> ee = e;
          double factor = ee[a];
          ee[a] -= 1;
          factor *= ee[b];
          ee[b] -= 1;
          if (factor == 0.0) continue;
          const double h = c * factor * p(0, ee[0]) * p(1, ee[1]) * p(2, ee[2]);
          jet.hessian(a, b) += h;
          if (a != b) jet.hessian(b, a) += h;
        }
      }
    }
    return jet;
  }

 private:
  void compact() {
    std::map<std::array<int, 3>, double> acc;
    for (const auto& t : terms_) acc[t.exponent] += t.coefficient;
    terms_.clear();
    max_degree_ = 0;
    for (const auto& [e, c] : acc) {
      if (c == 0.0) continue;
      terms_.push_back({e, c});
      max_degree_ = std::max({max_degree_, e[0], e[1], e[2]});
    }
  }

  std::vector<Monomial> terms_;
  int max_degree_ = 0;
};

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

// Re or Im of (x + i y)^m.
Polynomial complex_power(int m, bool imaginary) {
  std::vector<Monomial> terms;
  for (int k = 0; k <= m; ++k) {
    // C(m,k) x^{m-k} (i y)^k; i^k real for even k, imaginary for odd k.
    const bool is_imag = (k % 2) == 1;
    if (is_imag != imaginary) continue;
    const int quarter = (k / 2) % 2;
    const double sign = quarter == 0 ? 1.0 : -1.0;
    terms.push_back({{m - k, k, 0}, sign * binomial(m, k)});
  }
  return Polynomial(std::move(terms));
}

// Unnormalized solid harmonic r^l Y_l^index as a homogeneous polynomial.
Polynomial solid_harmonic(int n, int l, int index) {
  if (n == 2) return complex_power(l, index == 1);

  // n = 3: (x + i y)^|m| times the homogenized m-th derivative of P_l.
  const int m = std::abs(index);
  std::vector<double> legendre(static_cast<std::size_t>(l) + 1, 0.0);  // coefficient of t^j
  for (int k = 0; k <= l / 2; ++k) {
    double c = std::tgamma(2.0 * l - 2.0 * k + 1.0) /
               (std::pow(2.0, l) * std::tgamma(k + 1.0) * std::tgamma(l - k + 1.0) *
                std::tgamma(l - 2.0 * k + 1.0));
    if (k % 2 == 1) c = -c;
    legendre[static_cast<std::size_t>(l - 2 * k)] = c;
  }
  for (int d = 0; d < m; ++d) {
    for (std::size_t j = 0; j + 1 < legendre.size(); ++j)
      legendre[j] = legendre[j + 1] * static_cast<double>(j + 1);
    legendre.back() = 0.0;
  }
  const Polynomial r2({{{2, 0, 0}, 1.0}, {{0, 2, 0}, 1.0}, {{0, 0, 2}, 1.0}});
  Polynomial q;
  const int top = l - m;
  for (int j = top; j >= 0; j -= 2) {
    const double c = legendre[static_cast<std::size_t>(j)];
    if (c == 0.0) continue;
    Polynomial term({{{0, 0, j}, c}});
    for (int k = 0; k < (top - j) / 2; ++k) term = term * r2;
    q = q + term;
  }
  return complex_power(m, index < 0) * q;
}

void validate_harmonic_index(int n, int l, int index) {
  if (n != 2 && n != 3) throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (l < 0) throw Error(ErrorCode::InvalidOrder, "harmonic degree must be >= 0");
  if (l > kMaxDegree) throw Error(ErrorCode::InvalidOrder, "harmonic degree above 32");
  if (n == 2) {
    if (index != 0 && index != 1)
      throw Error(ErrorCode::InvalidArgument, "n = 2 angular index must be 0 (cos) or 1 (sin)");
    if (l == 0 && index == 1)
      throw Error(ErrorCode::InvalidArgument, "sin(0 theta) vanishes identically");
  } else {
    if (l > 8) throw Error(ErrorCode::InvalidOrder, "n = 3 harmonics are provided up to l = 8");
    if (std::abs(index) > l)
      throw Error(ErrorCode::InvalidArgument, "n = 3 angular index must satisfy |m| <= l");
  }
}

// Max of |H| on the unit sphere.
double sphere_max_modulus(int n, int index, const Polynomial& h) {
  if (n == 2) return 1.0;
  const int m = std::abs(index);
  const double theta = (index < 0) ? std::numbers::pi / (2.0 * m) : 0.0;
  auto f = [&](double phi) {
    return std::abs(h.evaluate(from_polar(3, 1.0, theta, phi), 0).value);
  };
  constexpr int kSamples = 4000;
  const double step = std::numbers::pi / kSamples;
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double v = f(i * step);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  // Golden-section refinement around the best sample.
  double lo = std::max(0.0, (best - 1) * step);
  double hi = std::min(std::numbers::pi, (best + 1) * step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  for (int it = 0; it < 80; ++it) {
    if (f(c) > f(d)) {
      hi = d;
    } else {
      lo = c;
    }
    c = hi - g * (hi - lo);
    d = lo + g * (hi - lo);
  }
  return std::max(best_val, f(0.5 * (lo + hi)));
}

// u = r^(sigma - l) H(x) with H a normalized solid harmonic of degree l.
class HomogeneousModel final : public FieldModel {
 public:
  HomogeneousModel(int n, double sigma, int l, int index)
      : n_(n), sigma_(sigma), l_(l), identity_(identity_in(n)) {
    const Polynomial raw = solid_harmonic(n, l, index);
    harmonic_ = raw.scaled(1.0 / sphere_max_modulus(n, index, raw));
  }

  Jet evaluate(const Point& x, int order) const override {
    const Jet h = harmonic_.evaluate(x, order);
    const double p = sigma_ - l_;
    if (p == 0.0) return h;
    const double r2 = x.squaredNorm();
    const double f = std::pow(r2, 0.5 * p);
    Jet out;
    out.value = f * h.value;
    if (order < 1) return out;
    const double fp = p * f / r2;  // p r^(p-2)
    const Vector df = fp * x;
    out.gradient = h.value * df + f * h.gradient;
    if (order < 2) return out;
    const Matrix d2f = fp * (identity_ + ((p - 2.0) / r2) * (x * x.transpose()));
    out.hessian = h.value * d2f + df * h.gradient.transpose() + h.gradient * df.transpose() +
                  f * h.hessian;
    return out;
  }

 private:
  int n_;
  double sigma_;
  int l_;
  Matrix identity_;
  Polynomial harmonic_;
};

class FunctionModel final : public FieldModel {
 public:
  using Fn = std::function<Jet(const Point&, int)>;
  FunctionModel(Fn fn, int order) : fn_(std::move(fn)), order_(order) {}
  Jet evaluate(const Point& x, int order) const override { return fn_(x, order); }
  int derivative_order() const override { return order_; }

 private:
  Fn fn_;
  int order_;
};

// ---------------------------------------------------------------------------
// Grid fields.

// Finite-difference weights for derivatives 0..2 at x0 on arbitrary nodes
// (Fornberg's recursion).
std::array<std::vector<double>, 3> fd_weights(double x0, const std::vector<double>& nodes) {
  const std::size_t np = nodes.size();
  constexpr int kMaxOrder = 2;
  std::vector<std::vector<std::vector<double>>> c(
      kMaxOrder + 1, std::vector<std::vector<double>>(np, std::vector<double>(np, 0.0)));
  c[0][0][0] = 1.0;
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  for (std::size_t i = 1; i < np; ++i) {
    const int mn = std::min<int>(static_cast<int>(i), kMaxOrder);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[k][i][i] = c1 * (k * c[k - 1][i - 1][i - 1] - c5 * c[k][i - 1][i - 1]) / c2;
        c[0][i][i] = -c1 * c5 * c[0][i - 1][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[k][i][j] = (c4 * c[k][i - 1][j] - k * c[k - 1][i - 1][j]) / c3;
      c[0][i][j] = c4 * c[0][i - 1][j] / c3;
    }
    c1 = c2;
  }
  std::array<std::vector<double>, 3> out;
  for (int k = 0; k <= kMaxOrder; ++k) {
    out[k].resize(np);
    for (std::size_t j = 0; j < np; ++j) out[k][j] = c[k][np - 1][j];
  }
  return out;
}

// Cubic Lagrange basis on 4 nodes.
std::array<double, 4> lagrange4(double x, const std::array<double, 4>& nodes) {
  std::array<double, 4> w{};
  for (int i = 0; i < 4; ++i) {
    double v = 1.0;
    for (int j = 0; j < 4; ++j)
      if (j != i) v *= (x - nodes[j]) / (nodes[i] - nodes[j]);
    w[i] = v;
  }
  return w;
}

struct Stencil {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};
};

// Clamped stencil on a sorted, possibly nonuniform axis.
Stencil clamped_stencil(const std::vector<double>& axis, double x) {
  const std::size_t n = axis.size();
  Stencil s;
  if (n < 4) {
    // Linear fallback on tiny axes.
    std::size_t i = 0;
    while (i + 2 < n && axis[i + 1] < x) ++i;
    const double t = n > 1 ? (x - axis[i]) / (axis[i + 1] - axis[i]) : 0.0;
    s.index = {i, std::min(i + 1, n - 1), i, i};
    s.weight = {1.0 - t, n > 1 ? t : 0.0, 0.0, 0.0};
    return s;
  }
  const auto it = std::upper_bound(axis.begin(), axis.end(), x);
  std::ptrdiff_t hi = it - axis.begin();
  std::ptrdiff_t start = std::clamp<std::ptrdiff_t>(hi - 2, 0, static_cast<std::ptrdiff_t>(n) - 4);
  std::array<double, 4> nodes{};
  for (int k = 0; k < 4; ++k) {
    s.index[k] = static_cast<std::size_t>(start + k);
    nodes[k] = axis[s.index[k]];
  }
  s.weight = lagrange4(x, nodes);
  return s;
}

// Periodic stencil on a uniform angle axis theta_j = theta_0 + j * 2 pi / N.
Stencil periodic_stencil(const std::vector<double>& axis, double theta) {
  const std::size_t n = axis.size();
  const double h = kTwoPi / static_cast<double>(n);
  double t = (theta - axis[0]) / h;
  t -= std::floor(t / static_cast<double>(n)) * static_cast<double>(n);
  const auto base = static_cast<std::ptrdiff_t>(std::floor(t));
  const double frac = t - static_cast<double>(base);
  Stencil s;
  const std::array<double, 4> nodes{-1.0, 0.0, 1.0, 2.0};
  s.weight = lagrange4(frac, nodes);
  for (int k = 0; k < 4; ++k) {
    std::ptrdiff_t j = (base - 1 + k) % static_cast<std::ptrdiff_t>(n);
    if (j < 0) j += static_cast<std::ptrdiff_t>(n);
    s.index[k] = static_cast<std::size_t>(j);
  }
  return s;
}

class GridModel final : public FieldModel {
 public:
  explicit GridModel(GridData data) : d_(std::move(data)) {
    d_.validate();
    if (d_.dimension == 2) build_derivatives();
  }

  int derivative_order() const override {
    return (d_.dimension == 2 && d_.radii.size() >= 4 && d_.thetas.size() >= 3) ? 2 : 0;
  }

  Jet evaluate(const Point& x, int order) const override {
    const double r = x.norm();
    const double tol = 1e-12 * d_.radii.back();
    if (r < d_.radii.front() - tol || r > d_.radii.back() + tol)
      throw Error(ErrorCode::InvalidArgument, "point outside grid field domain");
    const double theta = std::atan2(x(1), x(0));
    const Stencil sr = clamped_stencil(d_.radii, r);
    const Stencil st = periodic_stencil(d_.thetas, theta);
    if (d_.dimension == 3) {
      const double phi = std::acos(std::clamp(x(2) / r, -1.0, 1.0));
      const Stencil sp = clamped_stencil(d_.phis, phi);
      double v = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          for (int c = 0; c < 4; ++c)
            v += sr.weight[a] * st.weight[b] * sp.weight[c] *
                 d_.values[d_.index(sr.index[a], st.index[b], sp.index[c])];
      Jet out;
      out.value = v;
      return out;
    }
    std::array<double, 6> q{};  // u, u_r, u_t, u_rr, u_rt, u_tt
    const int count = order == 0 ? 1 : 6;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const double w = sr.weight[a] * st.weight[b];
        if (w == 0.0) continue;
        const std::size_t idx = d_.index(sr.index[a], st.index[b]);
        for (int k = 0; k < count; ++k) q[k] += w * nodal_[k][idx];
      }
    }
    Jet out;
    out.value = q[0];
    if (order < 1) return out;
    const double c = std::cos(theta), s = std::sin(theta);
    const double ur = q[1], ut = q[2], urr = q[3], urt = q[4], utt = q[5];
    out.gradient(0) = c * ur - s * ut / r;
    out.gradient(1) = s * ur + c * ut / r;
    if (order < 2) return out;
    const double tang = ur / r + utt / (r * r);
    const double mixed = urt / r - ut / (r * r);
    out.hessian(0, 0) = c * c * urr + s * s * tang - 2.0 * s * c * mixed;
    out.hessian(1, 1) = s * s * urr + c * c * tang + 2.0 * s * c * mixed;
    out.hessian(0, 1) = s * c * (urr - ur / r - utt / (r * r)) + (c * c - s * s) * mixed;
    out.hessian(1, 0) = out.hessian(0, 1);
    return out;
  }

 private:
  void build_derivatives() {
    const std::size_t nr = d_.radii.size(), nt = d_.thetas.size();
    for (auto& arr : nodal_) arr.assign(d_.values.size(), 0.0);
    nodal_[0] = d_.values;
    if (derivative_order() < 2) return;
    // Radial weights per ring.
    std::vector<std::vector<std::size_t>> ridx(nr);
    std::vector<std::array<std::vector<double>, 3>> rw(nr);
    for (std::size_t i = 0; i < nr; ++i) {
      std::vector<std::size_t> idx;
      if (i == 0) {
        idx = {0, 1, 2, 3};
      } else if (i + 1 == nr) {
        idx = {nr - 4, nr - 3, nr - 2, nr - 1};
      } else {
        idx = {i - 1, i, i + 1};
      }
      std::vector<double> nodes;
      for (auto k : idx) nodes.push_back(d_.radii[k]);
      rw[i] = fd_weights(d_.radii[i], nodes);
      ridx[i] = std::move(idx);
    }
    const double h = kTwoPi / static_cast<double>(nt);
    auto radial = [&](int src, int order, int dst) {
      for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < ridx[i].size(); ++k)
            acc += rw[i][order][k] * nodal_[src][d_.index(ridx[i][k], j)];
          nodal_[dst][d_.index(i, j)] = acc;
        }
    };
    for (std::size_t i = 0; i < nr; ++i) {
      for (std::size_t j = 0; j < nt; ++j) {
        const std::size_t jm = (j + nt - 1) % nt, jp = (j + 1) % nt;
        const double um = d_.values[d_.index(i, jm)], u0 = d_.values[d_.index(i, j)],
                     up = d_.values[d_.index(i, jp)];
        nodal_[2][d_.index(i, j)] = (up - um) / (2.0 * h);
        nodal_[5][d_.index(i, j)] = (up - 2.0 * u0 + um) / (h * h);
      }
    }
    radial(0, 1, 1);
    radial(0, 2, 3);
    radial(2, 1, 4);
  }

  GridData d_;
  std::array<std::vector<double>, 6> nodal_;
};

std::vector<double> split_csv_numbers(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(cell, &pos));
    } catch (const std::exception&) {
      throw Error(ErrorCode::IoError,
                  "grid CSV line " + std::to_string(line_no) + ": bad number '" + cell + "'");
    }
  }
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

Point from_polar(int n, double r, double theta, double phi) {
  if (n == 2) return {r * std::cos(theta), r * std::sin(theta), 0.0};
  return {r * std::sin(phi) * std::cos(theta), r * std::sin(phi) * std::sin(theta),
          r * std::cos(phi)};
}

SolutionField::SolutionField(std::shared_ptr<const FieldModel> model, FieldInfo info)
    : model_(std::move(model)), info_(std::move(info)) {
  if (info_.dimension != 2 && info_.dimension != 3)
    throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
}

void SolutionField::check_point(const Point& x) const {
  if (x.squaredNorm() == 0.0)
    throw Error(ErrorCode::EvaluationAtOrigin, "field '" + info_.id + "' evaluated at x = 0");
  if (info_.dimension == 2 && x(2) != 0.0)
    throw Error(ErrorCode::InvalidArgument, "n = 2 point with nonzero third component");
}

void SolutionField::require_order(int order) const {
  if (order > model_->derivative_order())
    throw Error(ErrorCode::MissingHessian,
                "field '" + info_.id + "' provides derivatives up to order " +
                    std::to_string(model_->derivative_order()));
}

double SolutionField::value(const Point& x) const {
  check_point(x);
  return model_->evaluate(x, 0).value;
}

Vector SolutionField::gradient(const Point& x) const { return jet(x, 1).gradient; }

Matrix SolutionField::hessian(const Point& x) const { return jet(x, 2).hessian; }

Jet SolutionField::jet(const Point& x) const { return jet(x, 2); }

Jet SolutionField::jet(const Point& x, int order) const {
  check_point(x);
  require_order(order);
  return model_->evaluate(x, order);
}

SolutionField SolutionField::scaled(double lambda) const {
  auto model = model_;
  FieldInfo info = info_;
  info.kind = FieldKind::Derived;
  info.id = info_.id + "*" + std::to_string(lambda);
  auto fn = [model, lambda](const Point& x, int order) {
    Jet j = model->evaluate(x, order);
    j.value *= lambda;
    j.gradient *= lambda;
    j.hessian *= lambda;
    return j;
  };
  return {std::make_shared<FunctionModel>(fn, model_->derivative_order()), info};
}

SolutionField SolutionField::rescaled(double s) const {
  if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "rescale factor must be positive");
  auto model = model_;
  FieldInfo info = info_;
  info.kind = FieldKind::Derived;
  info.id = info_.id + "(s=" + std::to_string(s) + ")";
  if (info.support) info.support = Annulus{info.support->inner / s, info.support->outer / s};
  if (info.domain) info.domain = Annulus{info.domain->inner / s, info.domain->outer / s};
  auto fn = [model, s](const Point& x, int order) {
    Jet j = model->evaluate(s * x, order);
    j.gradient *= s;
    j.hessian *= s * s;
    return j;
  };
  return {std::make_shared<FunctionModel>(fn, model_->derivative_order()), info};
}

SolutionField SolutionField::rotated(const Matrix& q) const {
  auto model = model_;
  FieldInfo info = info_;
  info.kind = FieldKind::Derived;
  info.id = info_.id + "(rotated)";
  auto fn = [model, q](const Point& x, int order) {
    Jet j = model->evaluate(q * x, order);
    j.gradient = q.transpose() * j.gradient;
    j.hessian = q.transpose() * j.hessian * q;
    return j;
  };
  return {std::make_shared<FunctionModel>(fn, model_->derivative_order()), info};
}

SolutionField SolutionField::with_id(std::string id) const {
  SolutionField copy = *this;
  copy.info_.id = std::move(id);
  return copy;
}

SolutionField linear_combination(const std::vector<double>& coefficients,
                                 const std::vector<SolutionField>& terms, std::string id) {
  if (terms.empty() || coefficients.size() != terms.size())
    throw Error(ErrorCode::InvalidArgument, "linear_combination needs matching nonempty lists");
  FieldInfo info;
  info.dimension = terms.front().dimension();
  info.kind = FieldKind::Derived;
  info.id = std::move(id);
  int order = 2;
  bool same_exponent = true;
  bool all_supported = true;
  for (const auto& t : terms) {
    if (t.dimension() != info.dimension)
      throw Error(ErrorCode::InvalidArgument, "linear_combination mixes dimensions");
    order = std::min(order, t.derivative_order());
    if (!t.radial_exponent() || !terms.front().radial_exponent() ||
        *t.radial_exponent() != *terms.front().radial_exponent())
      same_exponent = false;
    if (!t.support()) all_supported = false;
    if (t.domain()) {
      Annulus d = *t.domain();
      if (info.domain) d = {std::max(d.inner, info.domain->inner), std::min(d.outer, info.domain->outer)};
      info.domain = d;
    }
  }
  if (same_exponent) info.radial_exponent = terms.front().radial_exponent();
  if (all_supported) {
    Annulus s = *terms.front().support();
    for (const auto& t : terms) s = {std::min(s.inner, t.support()->inner), std::max(s.outer, t.support()->outer)};
    info.support = s;
  }
  auto fn = [coefficients, terms](const Point& x, int ord) {
    Jet acc;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const Jet j = terms[i].jet(x, ord);
      acc.value += coefficients[i] * j.value;
      acc.gradient += coefficients[i] * j.gradient;
      acc.hessian += coefficients[i] * j.hessian;
    }
    return acc;
  };
  return {std::make_shared<FunctionModel>(fn, order), info};
}

SolutionField custom_field(int dimension, CustomEvaluators ev, std::string id,
                           std::optional<double> radial_exponent) {
  if (!ev.value) throw Error(ErrorCode::InvalidArgument, "custom field needs a value evaluator");
  const int order = !ev.gradient ? 0 : (!ev.hessian ? 1 : 2);
  FieldInfo info;
  info.dimension = dimension;
  info.kind = FieldKind::Custom;
  info.id = std::move(id);
  info.radial_exponent = radial_exponent;
  auto fn = [ev](const Point& x, int ord) {
    Jet j;
    j.value = ev.value(x);
    if (ord >= 1) j.gradient = ev.gradient(x);
    if (ord >= 2) j.hessian = ev.hessian(x);
    return j;
  };
  return {std::make_shared<FunctionModel>(fn, order), info};
}

SolutionField jet_field(FieldInfo info, std::function<Jet(const Point&, int)> evaluate, int order) {
  if (!evaluate) throw Error(ErrorCode::InvalidArgument, "jet_field needs an evaluator");
  if (order < 0 || order > 2) throw Error(ErrorCode::InvalidOrder, "jet_field order must be 0, 1 or 2");
  return {std::make_shared<FunctionModel>(std::move(evaluate), order), std::move(info)};
}

double spherical_harmonic(int n, int l, int index, const Point& unit_point) {
  validate_harmonic_index(n, l, index);
  const Polynomial raw = solid_harmonic(n, l, index);
  return raw.evaluate(unit_point, 0).value / sphere_max_modulus(n, index, raw);
}

namespace {

SolutionField homogeneous(int n, double sigma, int l, int index, FieldKind kind, std::string id) {
  validate_harmonic_index(n, l, index);
  FieldInfo info;
  info.dimension = n;
  info.kind = kind;
  info.id = std::move(id);
  info.radial_exponent = sigma;
  return {std::make_shared<HomogeneousModel>(n, sigma, l, index), info};
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

SolutionField harmonic_polynomial(int n, int l, int index) {
  return homogeneous(n, l, l, index, FieldKind::HarmonicPolynomial,
                     "harmonic(l=" + std::to_string(l) + ",k=" + std::to_string(index) + ")");
}

SolutionField indicial_field(int n, double sigma, int l, int index) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidOrder, "indicial exponent must be > 0");
  return homogeneous(n, sigma, l, index, FieldKind::Indicial,
                     "indicial(s=" + fmt_num(sigma) + ",l=" + std::to_string(l) +
                         ",k=" + std::to_string(index) + ")");
}

SolutionField power_radial(int n, double sigma) {
  return homogeneous(n, sigma, 0, 0, FieldKind::PowerRadial, "power(s=" + fmt_num(sigma) + ")");
}

double indicial_coefficient(int n, double sigma, int l) {
  return sigma * (sigma + n - 2.0) - l * (l + n - 2.0);
}

IndicialSolution make_indicial(int n, double sigma, int l) {
  return {indicial_field(n, sigma, l, 0), indicial_coefficient(n, sigma, l)};
}

// ---------------------------------------------------------------------------

void GridData::validate() const {
  if (dimension != 2 && dimension != 3)
    throw Error(ErrorCode::InvalidArgument, "grid dimension must be 2 or 3");
  if (radii.size() < 2 || thetas.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 radii and 3 angles");
  if (dimension == 3 && phis.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "n = 3 grid needs at least 2 polar angles");
  if (!(radii.front() > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid radii must be > 0");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "grid radii must be strictly ascending");
  const double h = kTwoPi / static_cast<double>(thetas.size());
  for (std::size_t j = 0; j < thetas.size(); ++j)
    if (std::abs(thetas[j] - thetas[0] - static_cast<double>(j) * h) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "grid angles must be uniform over [0, 2 pi)");
  const std::size_t nphi = dimension == 3 ? phis.size() : 1;
  if (values.size() != radii.size() * thetas.size() * nphi)
    throw Error(ErrorCode::InvalidArgument, "grid value count does not match axes");
}

SolutionField grid_field(GridData data, std::string id) {
  FieldInfo info;
  info.dimension = data.dimension;
  info.kind = FieldKind::Grid;
  info.id = std::move(id);
  data.validate();
  info.domain = Annulus{data.radii.front(), data.radii.back()};
  return {std::make_shared<GridModel>(std::move(data)), info};
}

GridData read_grid_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::IoError, "grid CSV is empty");
  header = trim(header);
  GridData d;
  if (header == "r,theta,value") {
    d.dimension = 2;
  } else if (header == "r,theta,phi,value") {
    d.dimension = 3;
  } else {
    throw Error(ErrorCode::IoError, "grid CSV header must be 'r,theta[,phi],value', got '" + header + "'");
  }
  const std::size_t cols = d.dimension == 2 ? 3 : 4;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto row = split_csv_numbers(line, line_no);
    if (row.size() != cols)
      throw Error(ErrorCode::IoError, "grid CSV line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(cols) + " columns");
    if (!rows.empty() && row[0] < rows.back()[0])
      throw Error(ErrorCode::IoError,
                  "grid CSV line " + std::to_string(line_no) + ": radii must be ascending");
    rows.push_back(std::move(row));
  }
  auto unique_axis = [&](std::size_t col) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r[col]);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  d.radii = unique_axis(0);
  d.thetas = unique_axis(1);
  if (d.dimension == 3) d.phis = unique_axis(2);
  const std::size_t nphi = d.dimension == 3 ? d.phis.size() : 1;
  if (rows.size() != d.radii.size() * d.thetas.size() * nphi)
    throw Error(ErrorCode::IoError, "grid CSV rows do not form a full tensor grid");
  d.values.assign(rows.size(), 0.0);
  std::vector<char> seen(rows.size(), 0);
  auto locate = [](const std::vector<double>& axis, double v) {
    return static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
  };
  for (const auto& r : rows) {
    const std::size_t idx = d.index(locate(d.radii, r[0]), locate(d.thetas, r[1]),
                                    d.dimension == 3 ? locate(d.phis, r[2]) : 0);
    if (seen[idx]) throw Error(ErrorCode::IoError, "grid CSV has duplicate nodes");
    seen[idx] = 1;
    d.values[idx] = r.back();
  }
  d.validate();
  return d;
}

GridData read_grid_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_grid_csv(in);
}

void write_grid_csv(std::ostream& out, const GridData& d) {
  d.validate();
  out << (d.dimension == 2 ? "r,theta,value\n" : "r,theta,phi,value\n");
  char buf[128];
  const std::size_t nphi = d.dimension == 3 ? d.phis.size() : 1;
  for (std::size_t i = 0; i < d.radii.size(); ++i)
    for (std::size_t j = 0; j < d.thetas.size(); ++j)
      for (std::size_t k = 0; k < nphi; ++k) {
        const double v = d.values[d.index(i, j, k)];
        if (d.dimension == 2) {
          std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", d.radii[i], d.thetas[j], v);
        } else {
          std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", d.radii[i], d.thetas[j],
                        d.phis[k], v);
        }
        out << buf;
      }
}

void write_grid_csv_file(const std::string& path, const GridData& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_grid_csv(out, data);
}

// ---------------------------------------------------------------------------

EllipticOperator::EllipticOperator(int dimension, Coefficients coefficients, double c1,
                                   double c2, double ellipticity, double lipschitz,
                                   std::string name)
    : dimension_(dimension),
      coefficients_(std::move(coefficients)),
      c1_(c1),
      c2_(c2),
      ellipticity_(ellipticity),
      lipschitz_(lipschitz),
      name_(std::move(name)) {
  if (dimension_ != 2 && dimension_ != 3)
    throw Error(ErrorCode::InvalidArgument, "operator dimension must be 2 or 3");
  if (c1_ < 0.0 || c2_ < 0.0) throw Error(ErrorCode::InvalidArgument, "C1, C2 must be >= 0");
  if (!(ellipticity_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "ellipticity must be > 0");
  const CoefficientMatrix a0 = coefficients_(Point::Zero());
  for (int j = 0; j < dimension_; ++j)
    for (int k = 0; k < dimension_; ++k)
      if (std::abs(a0(j, k).imag()) > 1e-14 || std::abs(a0(j, k) - a0(k, j)) > 1e-14)
        throw Error(ErrorCode::InvalidArgument, "a_jk(0) must be real and symmetric");
}

EllipticOperator EllipticOperator::laplacian(int dimension, double c1, double c2) {
  const CoefficientMatrix id = identity_in(dimension).cast<std::complex<double>>();
  EllipticOperator op(dimension, [id](const Point&) { return id; }, c1, c2, 1.0, 0.0,
                      "laplacian");
  op.laplacian_ = true;
  return op;
}

EllipticOperator EllipticOperator::perturbed(int dimension, double eps, double c1, double c2) {
  if (std::abs(eps) > 0.1) throw Error(ErrorCode::InvalidArgument, "perturbation |eps| <= 0.1");
  const Matrix id = identity_in(dimension);
  auto a = [id, eps](const Point& x) {
    const Matrix m = id + (eps / (1.0 + x.squaredNorm())) * (x * x.transpose());
    return CoefficientMatrix(m.cast<std::complex<double>>());
  };
  return {dimension, a, c1, c2, std::min(1.0, 1.0 + eps), 2.0 * std::abs(eps),
          "perturbed(eps=" + fmt_num(eps) + ")"};
}

CoefficientMatrix EllipticOperator::coefficients(const Point& x) const { return coefficients_(x); }

EllipticOperator EllipticOperator::with_bounds(double c1, double c2) const {
  EllipticOperator op(dimension_, coefficients_, c1, c2, ellipticity_, lipschitz_, name_);
  op.laplacian_ = laplacian_;
  return op;
}

OperatorCheck check_operator(const EllipticOperator& op, std::uint64_t seed, int samples,
                             double radius) {
  const int n = op.dimension();
  Rng rng(seed);
  auto random_point = [&] {
    Point x = Point::Zero();
    do {
      for (int k = 0; k < n; ++k) x(k) = rng.uniform(-radius, radius);
    } while (x.norm() > radius);
    return x;
  };
  OperatorCheck out;
  const CoefficientMatrix a0 = op.coefficients(Point::Zero());
  out.symmetric_at_origin = true;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (std::abs(a0(j, k).imag()) > 1e-14 || std::abs(a0(j, k) - a0(k, j)) > 1e-14)
        out.symmetric_at_origin = false;
  out.min_ellipticity_ratio = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Point x = random_point();
    Vector xi = Vector::Zero();
    for (int k = 0; k < n; ++k) xi(k) = rng.uniform(-1.0, 1.0);
    if (xi.squaredNorm() == 0.0) continue;
    const std::complex<double> q = xi.cast<std::complex<double>>().dot(
        op.coefficients(x) * xi.cast<std::complex<double>>());
    out.min_ellipticity_ratio = std::min(out.min_ellipticity_ratio, q.real() / xi.squaredNorm());
    const Point y = random_point();
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    const CoefficientMatrix diff = op.coefficients(x) - op.coefficients(y);
    double worst = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(diff(j, k)));
    out.max_lipschitz_ratio = std::max(out.max_lipschitz_ratio, worst / dist);
  }
  out.elliptic = out.min_ellipticity_ratio >= op.ellipticity() * (1.0 - 1e-12);
  out.lipschitz = out.max_lipschitz_ratio <= op.lipschitz() * (1.0 + 1e-12) + 1e-15;
  return out;
}

std::complex<double> apply_operator(const EllipticOperator& op, const Point& x, const Jet& jet) {
  if (x.squaredNorm() == 0.0) throw Error(ErrorCode::EvaluationAtOrigin, "P(x,D)u at x = 0");
  const int n = op.dimension();
  if (op.is_laplacian()) return {jet.hessian.topLeftCorner(n, n).trace(), 0.0};
  const CoefficientMatrix a = op.coefficients(x);
  std::complex<double> acc = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) acc += a(j, k) * jet.hessian(j, k);
  return acc;
}

std::complex<double> apply_operator(const EllipticOperator& op, const SolutionField& u,
                                    const Point& x) {
  if (x.squaredNorm() == 0.0) throw Error(ErrorCode::EvaluationAtOrigin, "P(x,D)u at x = 0");
  if (op.dimension() != u.dimension())
    throw Error(ErrorCode::InvalidArgument, "operator and field dimensions differ");
  return apply_operator(op, x, u.jet(x, 2));
}

double inequality_residual(const EllipticOperator& op, const SolutionField& u, const Point& x) {
  if (x.squaredNorm() == 0.0) throw Error(ErrorCode::EvaluationAtOrigin, "residual at x = 0");
  const Jet j = u.jet(x, 2);
  const double r = x.norm();
  return std::abs(apply_operator(op, x, j)) - op.c1() / (r * r) * std::abs(j.value) -
         op.c2() / r * j.gradient.norm();
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace uclab
