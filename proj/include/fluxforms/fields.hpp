#pragma once

// Smooth fields on chart domains: scalars, vector fields, and differential
// forms given by evaluators with closed-form or finite-difference Jacobians,
// together with metrics (constant base, conformal log-factor, induced sphere
// metric) and the pointwise calculus built from them.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fluxforms/domain.hpp"
#include "fluxforms/exterior.hpp"

namespace fluxforms {

enum class FieldKind { Scalar, Vector, OneForm, Form, MetricFactor };

class SmoothField {
 public:
  using Eval = std::function<Vec(const Vec&)>;
  using Jac = std::function<Mat(const Vec&)>;

  SmoothField() = default;
  SmoothField(FieldKind kind, int dimension, int degree, Eval eval, Jac jac = nullptr);

  static SmoothField scalar(int dimension, std::function<double(const Vec&)> f,
                            std::function<Vec(const Vec&)> grad = nullptr);
  static SmoothField metric_factor(int dimension, std::function<double(const Vec&)> f,
                                   std::function<Vec(const Vec&)> grad = nullptr);
  static SmoothField vector(int dimension, Eval eval, Jac jac = nullptr);
  static SmoothField one_form(int dimension, Eval eval, Jac jac = nullptr);
  static SmoothField form(int dimension, int degree, Eval eval, Jac jac = nullptr);

  FieldKind kind() const { return kind_; }
  int dimension() const { return n_; }
  // 0 for scalars, 1 for one-forms, k for k-form fields; vectors report 1.
  int degree() const { return degree_; }
  int component_count() const;

  Vec value(const Vec& p) const;
  double scalar_value(const Vec& p) const;
  AlternatingForm form_value(const Vec& p) const;

  // Rows index components, columns coordinates.  Falls back to central
  // differences with step fd_step() when no closed form is attached.
  Mat jacobian(const Vec& p) const;
  Vec gradient(const Vec& p) const;  // scalar fields

  bool has_closed_jacobian() const { return static_cast<bool>(jac_); }
  double fd_step() const { return h_fd_; }
  void set_fd_step(double h) { h_fd_ = h; }
  // Richardson-extrapolated finite differences (two-step central stencil).
  void set_richardson(bool on) { richardson_ = on; }

 private:
  FieldKind kind_ = FieldKind::Scalar;
  int n_ = 0;
  int degree_ = 0;
  Eval eval_;
  Jac jac_;
  double h_fd_ = 1e-4;
  bool richardson_ = false;
  Mat fd_jacobian(const Vec& p, double h) const;
};

struct Christoffel {
  // gamma[k](i,j) = Gamma^k_{ij}.
  std::vector<Mat> gamma;
  Vec contract(const Vec& X, const Vec& Y) const;
};

class MetricField {
 public:
  MetricField() = default;

  static MetricField euclidean(int n);
  static MetricField constant(Mat G, double orientation = 1.0);
  // Metric induced on the unit sphere in R^ambient_dim; evaluation returns the
  // ambient Euclidean tensor, derivatives use tangential projection.
  static MetricField sphere_induced(int ambient_dim);
  // (dx^2 + dy^2)/y^2: Euclidean base with log-factor u = -log y.
  static MetricField hyperbolic_half_plane();

  // e^{2u} times this metric; factors compose additively.
  MetricField with_log_factor(const SmoothField& u) const;

  int dimension() const { return n_; }
  bool on_sphere() const { return sphere_; }
  bool has_log_factor() const { return static_cast<bool>(u_); }
  double orientation() const { return orientation_; }
  const Mat& base() const { return base_; }

  MetricAtPoint at(const Vec& p) const;
  double log_factor(const Vec& p) const;
  Vec log_factor_gradient(const Vec& p) const;
  bool factor_has_closed_gradient() const;

  // Tangential projector: identity on charts, I - x x^T on the sphere.
  Mat projector(const Vec& p) const;

 private:
  int n_ = 0;
  Mat base_;
  double orientation_ = 1.0;
  bool sphere_ = false;
  std::optional<SmoothField> u_;
};

// Levi-Civita coefficients; flat-base metrics only (conformal factors enter
// through the standard law).  Throws std::invalid_argument on sphere metrics.
Christoffel christoffel(const MetricField& g, const Vec& p);

// nabla_X Y at p.  On spheres: tangential projection of the ambient
// derivative, plus the conformal terms if a factor is present.
Vec covariant_derivative(const MetricField& g, const SmoothField& X,
                         const SmoothField& Y, const Vec& p);

// d(omega) at p from the component Jacobian (ambient d on sphere charts).
AlternatingForm exterior_derivative(const SmoothField& omega, const Vec& p);

// Flux (n-1)-form beta = iota_B mu as a field with propagated Jacobian.
SmoothField associated_flux_form(const SmoothField& B, const MetricField& g);

// B-flat as a one-form field with propagated Jacobian.
SmoothField flat_field(const SmoothField& B, const MetricField& g);

// g(B,B) as a scalar field with propagated gradient.
SmoothField norm_squared_field(const SmoothField& B, const MetricField& g);

// Normalization eta = B-flat/|B| as a one-form field (the unit form pairing
// positively with the flux form), zero where |B| <= eps_supp.  With
// fd_jacobian the Jacobian differentiates the normalized evaluator itself
// (detects sign flips across the zero set); otherwise the quotient rule is
// used.
SmoothField normalization_field(const SmoothField& B, const MetricField& g,
                                double eps_supp = 1e-10, bool fd_jacobian = false);

// div B; equals star d star B-flat (no extra sign with these conventions).
double divergence(const SmoothField& B, const MetricField& g, const Vec& p);

}  // namespace fluxforms
