#include "fluxforms/catalog.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fluxforms {

namespace {

double param(const std::map<std::string, double>& params, const std::string& key,
             double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

SmoothField abc_flow(double A, double B, double C) {
  auto eval = [A, B, C](const Vec& p) {
    Vec v(3);
    v << A * std::sin(p[2]) + C * std::cos(p[1]),
        B * std::sin(p[0]) + A * std::cos(p[2]),
        C * std::sin(p[1]) + B * std::cos(p[0]);
    return v;
  };
  auto jac = [A, B, C](const Vec& p) {
    Mat J(3, 3);
    J << 0.0, -C * std::sin(p[1]), A * std::cos(p[2]),
        B * std::cos(p[0]), 0.0, -A * std::sin(p[2]),
        -B * std::sin(p[0]), C * std::cos(p[1]), 0.0;
    return J;
  };
  return SmoothField::vector(3, eval, jac);
}

SmoothField hopf_field() {
  Mat J(4, 4);
  J << 0, -1, 0, 0,
      1, 0, 0, 0,
      0, 0, 0, -1,
      0, 0, 1, 0;
  auto eval = [J](const Vec& p) { return Vec(J * p); };
  auto jac = [J](const Vec&) { return J; };
  return SmoothField::vector(4, eval, jac);
}

// Stereographic image of the Hopf field: unit length for the conformally flat
// metric 2/(1+|y|^2) * euclidean, all orbits closed circles.
SmoothField hopf_stereo_field() {
  auto eval = [](const Vec& p) {
    Vec v(3);
    v << p[0] * p[2] - p[1],
        p[1] * p[2] + p[0],
        0.5 * (1.0 - p[0] * p[0] - p[1] * p[1] + p[2] * p[2]);
    return v;
  };
  auto jac = [](const Vec& p) {
    Mat J(3, 3);
    J << p[2], -1.0, p[0],
        1.0, p[2], p[1],
        -p[0], -p[1], p[2];
    return J;
  };
  return SmoothField::vector(3, eval, jac);
}

SmoothField annulus_grad_log_r() {
  auto eval = [](const Vec& p) {
    const double r2 = p[0] * p[0] + p[1] * p[1];
    if (r2 == 0.0) throw std::domain_error("annulus field at the origin");
    return Vec(p / r2);
  };
  auto jac = [](const Vec& p) {
    const double x = p[0], y = p[1];
    const double r2 = x * x + y * y, r4 = r2 * r2;
    Mat J(2, 2);
    J << (y * y - x * x) / r4, -2.0 * x * y / r4,
        -2.0 * x * y / r4, (x * x - y * y) / r4;
    return J;
  };
  return SmoothField::vector(2, eval, jac);
}

SmoothField annulus_rotational() {
  auto eval = [](const Vec& p) {
    const double r2 = p[0] * p[0] + p[1] * p[1];
    if (r2 == 0.0) throw std::domain_error("annulus field at the origin");
    Vec v(2);
    v << -p[1] / r2, p[0] / r2;
    return v;
  };
  auto jac = [](const Vec& p) {
    const double x = p[0], y = p[1];
    const double r2 = x * x + y * y, r4 = r2 * r2;
    Mat J(2, 2);
    J << 2.0 * x * y / r4, (y * y - x * x) / r4,
        (y * y - x * x) / r4, -2.0 * x * y / r4;
    return J;
  };
  return SmoothField::vector(2, eval, jac);
}

// alpha = dz + y dx, the standard contact form; Reeb field d/dz.
SmoothField contact_standard_alpha() {
  auto eval = [](const Vec& p) {
    Vec v(3);
    v << p[1], 0.0, 1.0;
    return v;
  };
  auto jac = [](const Vec&) {
    Mat J = Mat::Zero(3, 3);
    J(0, 1) = 1.0;
    return J;
  };
  return SmoothField::one_form(3, eval, jac);
}

SmoothField constant_vector(Vec v) {
  const int n = static_cast<int>(v.size());
  auto eval = [v](const Vec&) { return v; };
  auto jac = [n](const Vec&) { return Mat(Mat::Zero(n, n)); };
  return SmoothField::vector(n, eval, jac);
}

SmoothField rotation_killing() {
  Mat J = Mat::Zero(3, 3);
  J(0, 1) = -1.0;
  J(1, 0) = 1.0;
  auto eval = [J](const Vec& p) { return Vec(J * p); };
  auto jac = [J](const Vec&) { return J; };
  return SmoothField::vector(3, eval, jac);
}

SmoothField shear_field() {
  auto eval = [](const Vec& p) {
    Vec v(3);
    v << p[1], 0.0, 0.0;
    return v;
  };
  auto jac = [](const Vec&) {
    Mat J = Mat::Zero(3, 3);
    J(0, 1) = 1.0;
    return J;
  };
  return SmoothField::vector(3, eval, jac);
}

MetricField hopf_stereo_metric() {
  auto u = SmoothField::metric_factor(
      3,
      [](const Vec& p) { return std::log(2.0 / (1.0 + p.squaredNorm())); },
      [](const Vec& p) { return Vec(-2.0 * p / (1.0 + p.squaredNorm())); });
  return MetricField::euclidean(3).with_log_factor(u);
}

}  // namespace

const std::vector<CatalogEntry>& catalog_entries() {
  static const std::vector<CatalogEntry> entries = {
      {"abc_flow", "Beltrami flow (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x) on the 2pi-periodic 3-torus",
       3, FieldKind::Vector, {"A", "B", "C"}},
      {"hopf", "unit great-circle field (-x2, x1, -x4, x3) tangent to the 3-sphere",
       4, FieldKind::Vector, {}},
      {"hopf_stereo", "stereographic image of the great-circle field; closed orbits, unit length for 2/(1+|y|^2) times the flat metric",
       3, FieldKind::Vector, {}},
      {"annulus_grad_log_r", "(x,y)/r^2 = grad log r on an annulus; harmonic, field lines radial",
       2, FieldKind::Vector, {"r0", "r1"}},
      {"annulus_rotational", "(-y,x)/r^2 on an annulus; circulation generator, field lines circles",
       2, FieldKind::Vector, {"r0", "r1"}},
      {"contact_standard_alpha", "one-form dz + y dx; contact everywhere, Reeb field d/dz",
       3, FieldKind::OneForm, {}},
      {"reeb_standard", "constant field d/dz, the Reeb field of dz + y dx",
       3, FieldKind::Vector, {}},
      {"rotation_killing", "rigid rotation (-y, x, 0); isometry generator of flat space",
       3, FieldKind::Vector, {}},
      {"hyperbolic_killing", "horizontal translation (1, 0); isometry generator of the half-plane metric (dx^2+dy^2)/y^2",
       2, FieldKind::Vector, {}},
      {"shear", "linear shear (y, 0, 0); not force-free, not geodesic",
       3, FieldKind::Vector, {}},
  };
  return entries;
}

SmoothField catalog_field(const std::string& name,
                          const std::map<std::string, double>& params) {
  if (name == "abc_flow")
    return abc_flow(param(params, "A", 1.0), param(params, "B", 1.0),
                    param(params, "C", 1.0));
  if (name == "hopf") return hopf_field();
  if (name == "hopf_stereo") return hopf_stereo_field();
  if (name == "annulus_grad_log_r") return annulus_grad_log_r();
  if (name == "annulus_rotational") return annulus_rotational();
  if (name == "contact_standard_alpha") return contact_standard_alpha();
  if (name == "reeb_standard") return constant_vector(Vec::Unit(3, 2));
  if (name == "rotation_killing") return rotation_killing();
  if (name == "hyperbolic_killing") return constant_vector(Vec::Unit(2, 0));
  if (name == "shear") return shear_field();
  throw std::invalid_argument("unknown catalog field: " + name);
}

MetricField catalog_metric(const std::string& name,
                           const std::map<std::string, double>&) {
  if (name == "hopf") return MetricField::sphere_induced(4);
  if (name == "hopf_stereo") return hopf_stereo_metric();
  if (name == "hyperbolic_killing") return MetricField::hyperbolic_half_plane();
  if (name == "annulus_grad_log_r" || name == "annulus_rotational")
    return MetricField::euclidean(2);
  if (name == "abc_flow" || name == "contact_standard_alpha" ||
      name == "reeb_standard" || name == "rotation_killing" || name == "shear")
    return MetricField::euclidean(3);
  throw std::invalid_argument("unknown catalog field: " + name);
}

ChartDomain catalog_domain(const std::string& name,
                           const std::map<std::string, double>& params) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (name == "abc_flow") return ChartDomain::torus(3, two_pi);
  if (name == "hopf") return ChartDomain::sphere(4);
  if (name == "annulus_grad_log_r" || name == "annulus_rotational")
    return ChartDomain::annulus(param(params, "r0", 0.5), param(params, "r1", 2.0));
  if (name == "hyperbolic_killing") {
    Vec lo(2), hi(2);
    lo << -2.0, 0.25;
    hi << 2.0, 3.0;
    return ChartDomain::box(lo, hi);
  }
  if (name == "hopf_stereo" || name == "contact_standard_alpha" ||
      name == "reeb_standard" || name == "rotation_killing" || name == "shear") {
    Vec lo = Vec::Constant(3, -2.0);
    Vec hi = Vec::Constant(3, 2.0);
    return ChartDomain::box(lo, hi);
  }
  throw std::invalid_argument("unknown catalog field: " + name);
}

}  // namespace fluxforms
