#include "fluxforms/domain.hpp"

#include <cmath>
#include <stdexcept>

namespace fluxforms {

namespace {
constexpr double kPi = 3.14159265358979323846;
const int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
}  // namespace

ChartDomain ChartDomain::box(const Vec& lo, const Vec& hi,
                             const std::vector<bool>& periodic) {
  if (lo.size() != hi.size()) throw std::invalid_argument("box: bound size mismatch");
  ChartDomain d;
  d.kind_ = Kind::Box;
  d.n_ = static_cast<int>(lo.size());
  d.lo_ = lo;
  d.hi_ = hi;
  d.periodic_ = periodic.empty() ? std::vector<bool>(d.n_, false) : periodic;
  if (static_cast<int>(d.periodic_.size()) != d.n_)
    throw std::invalid_argument("box: periodic flag count mismatch");
  for (int i = 0; i < d.n_; ++i)
    if (!(lo[i] < hi[i])) throw std::invalid_argument("box: empty axis range");
  return d;
}

ChartDomain ChartDomain::torus(int n, double length) {
  return box(Vec::Zero(n), Vec::Constant(n, length), std::vector<bool>(n, true));
}

ChartDomain ChartDomain::annulus(double r0, double r1, const Vec& extra_lo,
                                 const Vec& extra_hi) {
  if (!(0.0 < r0 && r0 < r1)) throw std::invalid_argument("annulus: need 0 < r0 < r1");
  if (extra_lo.size() != extra_hi.size())
    throw std::invalid_argument("annulus: extra bound size mismatch");
  ChartDomain d;
  d.kind_ = Kind::Annulus;
  d.n_ = 2 + static_cast<int>(extra_lo.size());
  d.r0_ = r0;
  d.r1_ = r1;
  d.lo_ = Vec(d.n_);
  d.hi_ = Vec(d.n_);
  d.lo_.head(2) = Vec::Constant(2, -r1);
  d.hi_.head(2) = Vec::Constant(2, r1);
  if (extra_lo.size() > 0) {
    d.lo_.tail(extra_lo.size()) = extra_lo;
    d.hi_.tail(extra_hi.size()) = extra_hi;
  }
  d.periodic_ = std::vector<bool>(d.n_, false);
  return d;
}

ChartDomain ChartDomain::sphere(int ambient_dim) {
  if (ambient_dim < 2) throw std::invalid_argument("sphere: ambient dimension too small");
  ChartDomain d;
  d.kind_ = Kind::Sphere;
  d.n_ = ambient_dim;
  d.lo_ = Vec::Constant(ambient_dim, -1.0);
  d.hi_ = Vec::Constant(ambient_dim, 1.0);
  d.periodic_ = std::vector<bool>(ambient_dim, false);
  return d;
}

bool ChartDomain::contains(const Vec& p, double tol) const {
  if (p.size() != n_) return false;
  switch (kind_) {
    case Kind::Box:
      for (int i = 0; i < n_; ++i) {
        if (periodic_[i]) continue;
        if (p[i] < lo_[i] - tol || p[i] > hi_[i] + tol) return false;
      }
      return true;
    case Kind::Annulus: {
      const double r = p.head(2).norm();
      if (r < r0_ - tol || r > r1_ + tol) return false;
      for (int i = 2; i < n_; ++i)
        if (p[i] < lo_[i] - tol || p[i] > hi_[i] + tol) return false;
      return true;
    }
    case Kind::Sphere:
      return std::abs(p.norm() - 1.0) <= tol;
  }
  return false;
}

Vec ChartDomain::wrap(const Vec& p) const {
  Vec q = p;
  for (int i = 0; i < n_; ++i) {
    if (!periodic_[i]) continue;
    const double len = hi_[i] - lo_[i];
    q[i] = lo_[i] + std::fmod(std::fmod(p[i] - lo_[i], len) + len, len);
  }
  return q;
}

Vec ChartDomain::sample_unit(const Vec& u) const {
  if (u.size() != n_) throw std::invalid_argument("sample_unit: size mismatch");
  switch (kind_) {
    case Kind::Box: {
      Vec p(n_);
      for (int i = 0; i < n_; ++i) p[i] = lo_[i] + u[i] * (hi_[i] - lo_[i]);
      return p;
    }
    case Kind::Annulus: {
      Vec p(n_);
      const double r = std::sqrt(r0_ * r0_ + u[0] * (r1_ * r1_ - r0_ * r0_));
      const double th = 2.0 * kPi * u[1];
      p[0] = r * std::cos(th);
      p[1] = r * std::sin(th);
      for (int i = 2; i < n_; ++i) p[i] = lo_[i] + u[i] * (hi_[i] - lo_[i]);
      return p;
    }
    case Kind::Sphere: {
      Vec v = 2.0 * u.array() - 1.0;
      if (v.norm() < 1e-9) v = Vec::Unit(n_, 0);
      return v / v.norm();
    }
  }
  throw std::logic_error("unknown domain kind");
}

double ChartDomain::constraint_level(const Vec& p) const {
  if (!constrained()) throw std::logic_error("constraint_level: unconstrained domain");
  return p.squaredNorm() - 1.0;
}

Vec ChartDomain::project(const Vec& p) const {
  if (!constrained()) return p;
  const double r = p.norm();
  if (r == 0.0) throw std::domain_error("project: cannot project the origin to the sphere");
  return p / r;
}

std::vector<Vec> halton_unit(int dim, int count, unsigned seed) {
  if (dim > static_cast<int>(sizeof(kPrimes) / sizeof(int)))
    throw std::invalid_argument("halton_unit: dimension too large");
  std::vector<Vec> out;
  out.reserve(count);
  for (int c = 0; c < count; ++c) {
    const unsigned long idx = static_cast<unsigned long>(c) + 1 + seed;
    Vec u(dim);
    for (int d = 0; d < dim; ++d) {
      const int base = kPrimes[d];
      double f = 1.0, r = 0.0;
      unsigned long i = idx;
      while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
      }
      u[d] = r;
    }
    out.push_back(u);
  }
  return out;
}

std::vector<Vec> halton_points(const ChartDomain& domain, int count, unsigned seed) {
  auto unit = halton_unit(domain.dimension(), count, seed);
  std::vector<Vec> out;
  out.reserve(unit.size());
  for (const auto& u : unit) out.push_back(domain.sample_unit(u));
  return out;
}

void gauss_legendre_rule(int nodes, std::vector<double>& x, std::vector<double>& w) {
  if (nodes < 1) throw std::invalid_argument("gauss_legendre_rule: nodes < 1");
  x.assign(nodes, 0.0);
  w.assign(nodes, 0.0);
  const int m = (nodes + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (nodes + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < nodes; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = nodes * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[nodes - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[nodes - 1 - i] = w[i];
  }
}

namespace {

// Tensor rule over the chart box of the domain; `chart` maps chart points to
// physical ones with Jacobian determinant `jac`.
Quadrature tensor_rule(const Vec& lo, const Vec& hi, int cells, int nodes,
                       const std::function<Vec(const Vec&)>& chart,
                       const std::function<double(const Vec&)>& jac) {
  const int n = static_cast<int>(lo.size());
  std::vector<double> gx, gw;
  if (nodes > 0) {
    gauss_legendre_rule(nodes, gx, gw);
  } else {
    gx = {0.0};
    gw = {2.0};
  }
  const int per_axis = cells * static_cast<int>(gx.size());
  std::vector<std::vector<double>> ax(n), aw(n);
  for (int d = 0; d < n; ++d) {
    const double h = (hi[d] - lo[d]) / cells;
    ax[d].reserve(per_axis);
    aw[d].reserve(per_axis);
    for (int c = 0; c < cells; ++c) {
      const double a = lo[d] + c * h;
      for (size_t q = 0; q < gx.size(); ++q) {
        ax[d].push_back(a + 0.5 * h * (1.0 + gx[q]));
        aw[d].push_back(0.5 * h * gw[q]);
      }
    }
  }
  Quadrature out;
  std::vector<int> it(n, 0);
  while (true) {
    Vec p(n);
    double w = 1.0;
    for (int d = 0; d < n; ++d) {
      p[d] = ax[d][it[d]];
      w *= aw[d][it[d]];
    }
    out.points.push_back(chart(p));
    out.weights.push_back(w * jac(p));
    int d = n - 1;
    while (d >= 0 && ++it[d] == per_axis) it[d--] = 0;
    if (d < 0) break;
  }
  return out;
}

Quadrature domain_rule(const ChartDomain& domain, int cells, int nodes) {
  const int n = domain.dimension();
  if (domain.kind() == ChartDomain::Kind::Sphere)
    throw std::invalid_argument("quadrature: sphere domains are not supported");
  if (domain.kind() == ChartDomain::Kind::Box) {
    Vec lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo[i] = domain.lo(i);
      hi[i] = domain.hi(i);
    }
    return tensor_rule(lo, hi, cells, nodes, [](const Vec& p) { return p; },
                       [](const Vec&) { return 1.0; });
  }
  // Annulus: integrate over the polar chart (r, theta, extras).
  Vec lo(n), hi(n);
  lo[0] = domain.r0();
  hi[0] = domain.r1();
  lo[1] = 0.0;
  hi[1] = 2.0 * kPi;
  for (int i = 2; i < n; ++i) {
    lo[i] = domain.lo(i);
    hi[i] = domain.hi(i);
  }
  auto chart = [n](const Vec& c) {
    Vec p(n);
    p[0] = c[0] * std::cos(c[1]);
    p[1] = c[0] * std::sin(c[1]);
    for (int i = 2; i < n; ++i) p[i] = c[i];
    return p;
  };
  auto jac = [](const Vec& c) { return c[0]; };
  return tensor_rule(lo, hi, cells, nodes, chart, jac);
}

}  // namespace

Quadrature midpoint_quadrature(const ChartDomain& domain, int cells_per_axis) {
  return domain_rule(domain, cells_per_axis, 0);
}

Quadrature gauss_quadrature(const ChartDomain& domain, int cells_per_axis, int nodes) {
  return domain_rule(domain, cells_per_axis, nodes);
}

}  // namespace fluxforms
