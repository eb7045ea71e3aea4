#include "fluxforms/conformal.hpp"

#include <cmath>
#include <stdexcept>

#include "fluxforms/diagnostics.hpp"

namespace fluxforms {

namespace {

int intrinsic_dimension(const MetricField& g) {
  return g.on_sphere() ? g.dimension() - 1 : g.dimension();
}

// u = (1/2) log g(B,B) as a metric factor, guarded against the support edge.
SmoothField half_log_norm_factor(const SmoothField& B, const MetricField& g,
                                 double eps_supp, double scale) {
  const SmoothField s2 = norm_squared_field(B, g);
  const double floor = eps_supp * eps_supp;
  auto value = [s2, floor, scale](const Vec& p) {
    const double v = s2.scalar_value(p);
    if (v <= floor)
      throw std::domain_error("conformal factor requested outside field support");
    return 0.5 * scale * std::log(v);
  };
  std::function<Vec(const Vec&)> grad = nullptr;
  if (s2.has_closed_jacobian()) {
    grad = [s2, floor, scale](const Vec& p) {
      const double v = s2.scalar_value(p);
      if (v <= floor)
        throw std::domain_error("conformal factor requested outside field support");
      return Vec(0.5 * scale * s2.gradient(p) / v);
    };
  }
  return SmoothField::metric_factor(B.dimension(), value, grad);
}

}  // namespace

ConformalPair::ConformalPair(SmoothField B_hat, MetricField g_hat, double eps_supp)
    : B_hat_(std::move(B_hat)), g_hat_(std::move(g_hat)), eps_supp_(eps_supp) {
  if (B_hat_.kind() != FieldKind::Vector)
    throw std::invalid_argument("conformal pair: expects a vector field");
  if (B_hat_.dimension() != g_hat_.dimension())
    throw std::invalid_argument("conformal pair: dimension mismatch");
  n_ = intrinsic_dimension(g_hat_);
  if (n_ < 3)
    throw std::invalid_argument(
        "conformal pair needs dimension >= 3; surfaces use the dedicated "
        "surface operations");
  g_bar_ = g_hat_.with_log_factor(half_log_norm_factor(B_hat_, g_hat_, eps_supp_, 1.0));

  const SmoothField B = B_hat_;
  const SmoothField s2 = norm_squared_field(B_hat_, g_hat_);
  const double floor = eps_supp * eps_supp;
  const int n = n_;
  auto eval = [B, s2, floor, n](const Vec& p) {
    const double v = s2.scalar_value(p);
    if (v <= floor)
      throw std::domain_error("conformal field requested outside support");
    return Vec(std::pow(v, -0.5 * n) * B.value(p));
  };
  SmoothField::Jac jac = nullptr;
  if (B.has_closed_jacobian() && s2.has_closed_jacobian()) {
    jac = [B, s2, floor, n](const Vec& p) {
      const double v = s2.scalar_value(p);
      if (v <= floor)
        throw std::domain_error("conformal field requested outside support");
      const double f = std::pow(v, -0.5 * n);
      const Vec dv = s2.gradient(p);
      return Mat(f * B.jacobian(p) -
                 (0.5 * n * f / v) * B.value(p) * dv.transpose());
    };
  }
  B_bar_ = SmoothField::vector(B_hat_.dimension(), std::move(eval), std::move(jac));
}

ConformalPair make_pair(SmoothField B, MetricField g_hat, double eps_supp) {
  return ConformalPair(std::move(B), std::move(g_hat), eps_supp);
}

double ConformalPair::log_factor(const Vec& p) const {
  const double nb = vector_norm(g_hat_, p, B_hat_.value(p));
  if (nb <= eps_supp_)
    throw std::domain_error("conformal factor requested outside field support");
  return std::log(nb);
}

Vec transform_vector(const ConformalPair& pair, Direction dir, const Vec& p) {
  const double u = pair.log_factor(p);
  const int n = pair.dimension();
  if (dir == Direction::ToBar) return std::exp(-n * u) * pair.field_hat().value(p);
  // |B_bar|_bar = e^{(2-n)u}; raising it to -n/(n-2) multiplies by e^{n u}.
  const Vec b_bar = pair.field_bar().value(p);
  const double norm_bar = vector_norm(pair.bar(), p, b_bar);
  return std::pow(norm_bar, -static_cast<double>(n) / (n - 2)) * b_bar;
}

AlternatingForm transform_volume(const ConformalPair& pair, Direction dir,
                                 const Vec& p) {
  if (pair.hat().on_sphere())
    throw std::invalid_argument("transform_volume: chart metrics only");
  const AlternatingForm mu_hat = volume_form(pair.hat().at(p));
  if (dir == Direction::ToHat) return mu_hat;
  return std::exp(pair.dimension() * pair.log_factor(p)) * mu_hat;
}

std::pair<double, double> transform_norms(const ConformalPair& pair, const Vec& p) {
  const double norm_hat = std::exp(pair.log_factor(p));  // |beta|_hat = |B_hat|_hat
  const double norm_bar = std::pow(norm_hat, -(pair.dimension() - 2));
  return {norm_hat, norm_bar};
}

AlternatingForm transform_hodge_beta(const ConformalPair& pair, Direction dir,
                                     const Vec& p) {
  if (pair.hat().on_sphere())
    throw std::invalid_argument("transform_hodge_beta: chart metrics only");
  const AlternatingForm beta =
      associated_flux_form(pair.field_hat(), pair.hat()).form_value(p);
  const AlternatingForm star_hat = hodge_star(pair.hat().at(p), beta);
  if (dir == Direction::ToHat) return star_hat;
  return std::exp(-(pair.dimension() - 2) * pair.log_factor(p)) * star_hat;
}

EnergyIdentity energy_identity(const ConformalPair& pair, const Quadrature& quad) {
  if (quad.points.empty()) throw std::invalid_argument("energy_identity: empty quadrature");
  if (pair.hat().on_sphere())
    throw std::invalid_argument("energy_identity: chart metrics only");
  const SmoothField s2 = norm_squared_field(pair.field_hat(), pair.hat());
  const SmoothField beta = associated_flux_form(pair.field_hat(), pair.hat());
  EnergyIdentity out;
  for (size_t i = 0; i < quad.points.size(); ++i) {
    const Vec& p = quad.points[i];
    const double w = quad.weights[i];
    const MetricAtPoint hat = pair.hat().at(p);
    out.l2_sq_hat += w * s2.scalar_value(p) * hat.sqrt_det();
    const MetricAtPoint bar = pair.bar().at(p);
    out.l1_bar += w * form_norm(bar, beta.form_value(p)) * bar.sqrt_det();
  }
  return out;
}

MetricField killing_unit_factor(const SmoothField& B, const MetricField& g,
                                double eps_supp) {
  if (B.kind() != FieldKind::Vector)
    throw std::invalid_argument("killing_unit_factor: expects a vector field");
  return g.with_log_factor(half_log_norm_factor(B, g, eps_supp, -1.0));
}

AlternatingForm surface_star_invariance(const MetricField& g, const SmoothField& u,
                                        const SmoothField& a, const Vec& p) {
  if (g.dimension() != 2 || g.on_sphere())
    throw std::invalid_argument("surface_star_invariance: 2D chart metrics only");
  if (a.kind() != FieldKind::OneForm)
    throw std::invalid_argument("surface_star_invariance: expects a one-form");
  const MetricAtPoint base = g.at(p);
  const MetricAtPoint rescaled(std::exp(2.0 * u.scalar_value(p)) * base.g,
                               g.orientation());
  return hodge_star(rescaled, a.form_value(p));
}

bool SurfaceHarmonicReport::all_harmonic() const {
  for (int b : branch)
    if (b < 0) return false;
  return !branch.empty();
}

SurfaceHarmonicReport surface_harmonic_eikonal_test(const SmoothField& B,
                                                    const MetricField& g,
                                                    const std::vector<Vec>& points,
                                                    double eps_supp, double tol,
                                                    double gate_tol) {
  if (g.dimension() != 2 || g.on_sphere())
    throw std::invalid_argument("surface_harmonic_eikonal_test: 2D chart metrics only");
  SurfaceHarmonicReport report;
  // Gate: the classification below is only meaningful for eikonal fields.
  // The finite-difference eta jacobian sees sign flips across the zero set
  // that the closed-form quotient rule is blind to.
  for (const Vec& p : points) {
    const EikonalResult e = eikonal_residual(B, g, p, eps_supp, /*fd_eta=*/true);
    report.eikonal_gate_max =
        std::max(report.eikonal_gate_max, e.d_eta.euclidean_norm());
  }
  if (report.eikonal_gate_max > gate_tol)
    throw std::domain_error("surface_harmonic_eikonal_test: input is not eikonal");

  const SmoothField s2 = norm_squared_field(B, g);
  const SmoothField W = flat_field(B, g);
  const SmoothField eta_field = normalization_field(B, g, eps_supp);
  for (const Vec& p : points) {
    const double s = std::sqrt(std::max(0.0, s2.scalar_value(p)));
    if (s <= eps_supp)
      throw std::domain_error("surface_harmonic_eikonal_test: point off support");
    // d|B| = d(s2)/(2 s); measure in the metric cometric.
    const Vec dnorm = s2.gradient(p) / (2.0 * s);
    const double dnorm_mag = covector_norm(g, p, dnorm);
    const AlternatingForm eta = eta_field.form_value(p);
    const AlternatingForm wedge_defect =
        wedge(AlternatingForm(2, 1, dnorm), eta);
    const double parallel = form_norm(g.at(p), wedge_defect);
    const double closed = exterior_derivative(W, p).euclidean_norm();
    report.dnorm_values.push_back(dnorm_mag);
    report.parallel_defect.push_back(parallel);
    report.closedness_values.push_back(closed);
    if (dnorm_mag < tol)
      report.branch.push_back(0);
    else if (parallel < tol)
      report.branch.push_back(1);
    else
      report.branch.push_back(-1);
  }
  return report;
}

}  // namespace fluxforms
