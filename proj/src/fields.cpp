#include "fluxforms/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace fluxforms {

SmoothField::SmoothField(FieldKind kind, int dimension, int degree, Eval eval, Jac jac)
    : kind_(kind), n_(dimension), degree_(degree), eval_(std::move(eval)), jac_(std::move(jac)) {
  if (dimension < 1) throw std::invalid_argument("field dimension must be positive");
  if (kind == FieldKind::Form && (degree < 0 || degree > dimension))
    throw std::invalid_argument("form field degree out of range");
}

SmoothField SmoothField::scalar(int dimension, std::function<double(const Vec&)> f,
                                std::function<Vec(const Vec&)> grad) {
  Eval e = [f](const Vec& p) { return Vec::Constant(1, f(p)); };
  Jac j = nullptr;
  if (grad) j = [grad](const Vec& p) { return Mat(grad(p).transpose()); };
  return SmoothField(FieldKind::Scalar, dimension, 0, std::move(e), std::move(j));
}

SmoothField SmoothField::metric_factor(int dimension, std::function<double(const Vec&)> f,
                                       std::function<Vec(const Vec&)> grad) {
  SmoothField s = scalar(dimension, std::move(f), std::move(grad));
  s.kind_ = FieldKind::MetricFactor;
  return s;
}

SmoothField SmoothField::vector(int dimension, Eval eval, Jac jac) {
  return SmoothField(FieldKind::Vector, dimension, 1, std::move(eval), std::move(jac));
}

SmoothField SmoothField::one_form(int dimension, Eval eval, Jac jac) {
  return SmoothField(FieldKind::OneForm, dimension, 1, std::move(eval), std::move(jac));
}

SmoothField SmoothField::form(int dimension, int degree, Eval eval, Jac jac) {
  return SmoothField(FieldKind::Form, dimension, degree, std::move(eval), std::move(jac));
}

int SmoothField::component_count() const {
  switch (kind_) {
    case FieldKind::Scalar:
    case FieldKind::MetricFactor:
      return 1;
    case FieldKind::Vector:
    case FieldKind::OneForm:
      return n_;
    case FieldKind::Form:
      return static_cast<int>(binomial(n_, degree_));
  }
  return 0;
}

Vec SmoothField::value(const Vec& p) const {
  if (!eval_) throw std::logic_error("field has no evaluator");
  Vec v = eval_(p);
  if (v.size() != component_count())
    throw std::logic_error("field evaluator returned wrong component count");
  return v;
}

double SmoothField::scalar_value(const Vec& p) const {
  if (kind_ != FieldKind::Scalar && kind_ != FieldKind::MetricFactor)
    throw std::invalid_argument("scalar_value: not a scalar field");
  return value(p)[0];
}

AlternatingForm SmoothField::form_value(const Vec& p) const {
  if (kind_ == FieldKind::OneForm) return AlternatingForm(n_, 1, value(p));
  if (kind_ == FieldKind::Form) return AlternatingForm(n_, degree_, value(p));
  throw std::invalid_argument("form_value: not a form field");
}

Mat SmoothField::fd_jacobian(const Vec& p, double h) const {
  const int m = component_count();
  Mat J(m, n_);
  Vec q = p;
  for (int j = 0; j < n_; ++j) {
    q[j] = p[j] + h;
    const Vec up = value(q);
    q[j] = p[j] - h;
    const Vec dn = value(q);
    q[j] = p[j];
    J.col(j) = (up - dn) / (2.0 * h);
  }
  return J;
}

Mat SmoothField::jacobian(const Vec& p) const {
  if (jac_) {
    Mat J = jac_(p);
    if (J.rows() != component_count() || J.cols() != n_)
      throw std::logic_error("field jacobian has wrong shape");
    return J;
  }
  if (!richardson_) return fd_jacobian(p, h_fd_);
  const Mat coarse = fd_jacobian(p, h_fd_);
  const Mat fine = fd_jacobian(p, 0.5 * h_fd_);
  return (4.0 * fine - coarse) / 3.0;
}

Vec SmoothField::gradient(const Vec& p) const {
  if (kind_ != FieldKind::Scalar && kind_ != FieldKind::MetricFactor)
    throw std::invalid_argument("gradient: not a scalar field");
  return jacobian(p).row(0).transpose();
}

Vec Christoffel::contract(const Vec& X, const Vec& Y) const {
  const int n = static_cast<int>(gamma.size());
  Vec out(n);
  for (int k = 0; k < n; ++k) out[k] = X.dot(gamma[k] * Y);
  return out;
}

MetricField MetricField::euclidean(int n) { return constant(Mat::Identity(n, n)); }

MetricField MetricField::constant(Mat G, double orientation) {
  MetricField m;
  m.n_ = static_cast<int>(G.rows());
  m.base_ = std::move(G);
  m.orientation_ = orientation;
  MetricAtPoint check(m.base_, orientation);  // validates symmetry and SPD
  return m;
}

MetricField MetricField::sphere_induced(int ambient_dim) {
  MetricField m = euclidean(ambient_dim);
  m.sphere_ = true;
  return m;
}

MetricField MetricField::hyperbolic_half_plane() {
  auto u = SmoothField::scalar(
      2,
      [](const Vec& p) {
        if (p[1] <= 0.0) throw std::domain_error("half-plane metric needs y > 0");
        return -std::log(p[1]);
      },
      [](const Vec& p) {
        Vec g(2);
        g << 0.0, -1.0 / p[1];
        return g;
      });
  return euclidean(2).with_log_factor(u);
}

MetricField MetricField::with_log_factor(const SmoothField& u) const {
  if (u.dimension() != n_) throw std::invalid_argument("log factor dimension mismatch");
  MetricField m = *this;
  if (!u_) {
    m.u_ = u;
    return m;
  }
  const SmoothField a = *u_;
  const SmoothField b = u;
  const bool closed = a.has_closed_jacobian() && b.has_closed_jacobian();
  m.u_ = SmoothField::metric_factor(
      n_, [a, b](const Vec& p) { return a.scalar_value(p) + b.scalar_value(p); },
      closed ? std::function<Vec(const Vec&)>(
                   [a, b](const Vec& p) { return Vec(a.gradient(p) + b.gradient(p)); })
             : nullptr);
  return m;
}

MetricAtPoint MetricField::at(const Vec& p) const {
  if (p.size() != n_) throw std::invalid_argument("metric evaluation: dimension mismatch");
  if (!u_) return MetricAtPoint(base_, orientation_);
  return MetricAtPoint(std::exp(2.0 * u_->scalar_value(p)) * base_, orientation_);
}

double MetricField::log_factor(const Vec& p) const {
  return u_ ? u_->scalar_value(p) : 0.0;
}

Vec MetricField::log_factor_gradient(const Vec& p) const {
  return u_ ? u_->gradient(p) : Vec(Vec::Zero(n_));
}

bool MetricField::factor_has_closed_gradient() const {
  return !u_ || u_->has_closed_jacobian();
}

Mat MetricField::projector(const Vec& p) const {
  if (!sphere_) return Mat::Identity(n_, n_);
  const double r2 = p.squaredNorm();
  if (r2 == 0.0) throw std::domain_error("sphere projector at the origin");
  return Mat::Identity(n_, n_) - (p * p.transpose()) / r2;
}

Christoffel christoffel(const MetricField& g, const Vec& p) {
  if (g.on_sphere())
    throw std::invalid_argument(
        "christoffel: sphere metrics use tangential projection, not chart coefficients");
  const int n = g.dimension();
  Christoffel c;
  c.gamma.assign(n, Mat::Zero(n, n));
  if (!g.has_log_factor()) return c;  // constant metric
  const Vec du = g.log_factor_gradient(p);
  const Vec raised = g.base().inverse() * du;  // (grad u)^k under the base metric
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        if (k == i) v += du[j];
        if (k == j) v += du[i];
        v -= g.base()(i, j) * raised[k];
        c.gamma[k](i, j) = v;
      }
  return c;
}

Vec covariant_derivative(const MetricField& g, const SmoothField& X,
                         const SmoothField& Y, const Vec& p) {
  const Vec Xp = X.value(p);
  const Vec flatpart = Y.jacobian(p) * Xp;  // directional derivative of Y along X
  if (g.on_sphere()) {
    Vec out = g.projector(p) * flatpart;
    if (g.has_log_factor()) {
      const Vec Yp = Y.value(p);
      const Vec du = g.projector(p) * g.log_factor_gradient(p);
      const double gXY = Xp.dot(Yp);  // ambient Euclidean base
      out += Xp.dot(du) * Yp + Yp.dot(du) * Xp - gXY * du;
    }
    return out;
  }
  return flatpart + christoffel(g, p).contract(Xp, Y.value(p));
}

AlternatingForm exterior_derivative(const SmoothField& omega, const Vec& p) {
  if (omega.kind() != FieldKind::OneForm && omega.kind() != FieldKind::Form &&
      omega.kind() != FieldKind::Scalar)
    throw std::invalid_argument("exterior_derivative: expects a form field");
  const int n = omega.dimension();
  const int k = omega.degree();
  if (k >= n) throw std::invalid_argument("exterior_derivative: degree overflow");
  const Mat J = omega.jacobian(p);
  AlternatingForm out(n, k + 1);
  const auto& idx = multi_indices(n, k);
  std::vector<int> merged(k + 1);
  for (size_t r = 0; r < idx.size(); ++r) {
    for (int j = 0; j < n; ++j) {
      const double dv = J(static_cast<int>(r), j);
      if (dv == 0.0) continue;
      const std::vector<int> lead = {j};
      const int s = merge_sign(lead, idx[r]);
      if (s == 0) continue;
      std::merge(lead.begin(), lead.end(), idx[r].begin(), idx[r].end(), merged.begin());
      out.components()[multi_index_rank(n, merged)] += s * dv;
    }
  }
  return out;
}

namespace {

// Scalar density f = orientation-free sqrt(det g) = e^{n u} sqrt(det base).
double flux_density(const MetricField& g, const Vec& p) {
  return std::exp(g.dimension() * g.log_factor(p)) * std::sqrt(g.base().determinant());
}

}  // namespace

SmoothField associated_flux_form(const SmoothField& B, const MetricField& g) {
  if (B.kind() != FieldKind::Vector)
    throw std::invalid_argument("associated_flux_form: expects a vector field");
  if (B.dimension() != g.dimension())
    throw std::invalid_argument("associated_flux_form: dimension mismatch");
  if (g.on_sphere())
    throw std::invalid_argument("associated_flux_form: chart metrics only");
  const int n = B.dimension();
  const double orient = g.orientation();
  auto eval = [B, g, n, orient](const Vec& p) {
    const Vec Bp = B.value(p);
    const double f = orient * flux_density(g, p);
    Vec c(n);
    for (int i = 0; i < n; ++i) {
      // component on dx^{0..n-1 without i}, stored at rank n-1-i by symmetry
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      c[n - 1 - i] = sign * f * Bp[i];
    }
    return c;
  };
  SmoothField::Jac jac = nullptr;
  if (B.has_closed_jacobian() && g.factor_has_closed_gradient()) {
    jac = [B, g, n, orient](const Vec& p) {
      const Vec Bp = B.value(p);
      const Mat JB = B.jacobian(p);
      const double f = orient * flux_density(g, p);
      const Vec du = g.has_log_factor() ? g.log_factor_gradient(p) : Vec(Vec::Zero(n));
      Mat J(n, n);
      for (int i = 0; i < n; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        for (int j = 0; j < n; ++j)
          J(n - 1 - i, j) = sign * f * (n * du[j] * Bp[i] + JB(i, j));
      }
      return J;
    };
  }
  return SmoothField::form(n, n - 1, std::move(eval), std::move(jac));
}

SmoothField flat_field(const SmoothField& B, const MetricField& g) {
  if (B.kind() != FieldKind::Vector)
    throw std::invalid_argument("flat_field: expects a vector field");
  const int n = B.dimension();
  if (g.on_sphere()) {
    // Ambient extension: same components as B under the induced metric.
    auto eval = [B](const Vec& p) { return B.value(p); };
    SmoothField::Jac jac = nullptr;
    if (B.has_closed_jacobian())
      jac = [B](const Vec& p) { return B.jacobian(p); };
    return SmoothField::one_form(n, std::move(eval), std::move(jac));
  }
  const Mat Gb = g.base();
  auto eval = [B, g, Gb](const Vec& p) {
    return Vec(std::exp(2.0 * g.log_factor(p)) * (Gb * B.value(p)));
  };
  SmoothField::Jac jac = nullptr;
  if (B.has_closed_jacobian() && g.factor_has_closed_gradient()) {
    jac = [B, g, Gb, n](const Vec& p) {
      const double e2u = std::exp(2.0 * g.log_factor(p));
      const Vec du = g.has_log_factor() ? g.log_factor_gradient(p) : Vec(Vec::Zero(n));
      const Vec w = Gb * B.value(p);
      return Mat(e2u * (2.0 * w * du.transpose() + Gb * B.jacobian(p)));
    };
  }
  return SmoothField::one_form(n, std::move(eval), std::move(jac));
}

SmoothField norm_squared_field(const SmoothField& B, const MetricField& g) {
  if (B.kind() != FieldKind::Vector)
    throw std::invalid_argument("norm_squared_field: expects a vector field");
  const int n = B.dimension();
  const Mat Gb = g.base();
  auto f = [B, g, Gb](const Vec& p) {
    const Vec Bp = B.value(p);
    return std::exp(2.0 * g.log_factor(p)) * Bp.dot(Gb * Bp);
  };
  std::function<Vec(const Vec&)> grad = nullptr;
  if (B.has_closed_jacobian() && g.factor_has_closed_gradient()) {
    grad = [B, g, Gb, n](const Vec& p) {
      const Vec Bp = B.value(p);
      const Mat JB = B.jacobian(p);
      const double e2u = std::exp(2.0 * g.log_factor(p));
      const Vec du = g.has_log_factor() ? g.log_factor_gradient(p) : Vec(Vec::Zero(n));
      const double q = Bp.dot(Gb * Bp);
      return Vec(e2u * (2.0 * q * du + 2.0 * JB.transpose() * (Gb * Bp)));
    };
  }
  return SmoothField::scalar(n, std::move(f), std::move(grad));
}

SmoothField normalization_field(const SmoothField& B, const MetricField& g,
                                double eps_supp, bool fd_jacobian) {
  if (B.kind() != FieldKind::Vector)
    throw std::invalid_argument("normalization_field: expects a vector field");
  const int n = B.dimension();
  // eta = B_flat / |B|: the unit one-form with eta wedge (flux of B) = |B| vol,
  // i.e. the pairing-positive subgradient of the mass norm at the flux form.
  const SmoothField W = flat_field(B, g);
  const SmoothField s2 = norm_squared_field(B, g);
  auto eval = [W, s2, eps_supp, n](const Vec& p) {
    const double s = std::sqrt(std::max(0.0, s2.scalar_value(p)));
    if (s <= eps_supp) return Vec(Vec::Zero(n));
    return Vec(W.value(p) / s);
  };
  SmoothField::Jac jac = nullptr;
  if (!fd_jacobian && W.has_closed_jacobian() && s2.has_closed_jacobian()) {
    jac = [W, s2, eps_supp](const Vec& p) {
      const double s = std::sqrt(std::max(0.0, s2.scalar_value(p)));
      if (s <= eps_supp)
        throw std::domain_error("normalization_field: point outside field support");
      const Vec w = W.value(p);
      const Mat Jw = W.jacobian(p);
      const Vec ds = s2.gradient(p) / (2.0 * s);
      return Mat(Jw / s - (w / (s * s)) * ds.transpose());
    };
  }
  return SmoothField::one_form(n, std::move(eval), std::move(jac));
}

double divergence(const SmoothField& B, const MetricField& g, const Vec& p) {
  if (B.kind() != FieldKind::Vector)
    throw std::invalid_argument("divergence: expects a vector field");
  const Mat J = B.jacobian(p);
  if (g.on_sphere()) {
    // Trace of the tangentially projected derivative.
    return (g.projector(p) * J).trace();
  }
  const int n = g.dimension();
  double div = J.trace();
  if (g.has_log_factor()) div += n * g.log_factor_gradient(p).dot(B.value(p));
  return div;
}

}  // namespace fluxforms
