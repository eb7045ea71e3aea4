#pragma once

// Chart domains: boxes with optional periodic axes, annuli (with optional
// product extension by box axes), and unit spheres given by an ambient
// constraint.  Also deterministic low-discrepancy sampling and tensor
// quadrature over these domains.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace fluxforms {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class ChartDomain {
 public:
  enum class Kind { Box, Annulus, Sphere };

  static ChartDomain box(const Vec& lo, const Vec& hi,
                         const std::vector<bool>& periodic = {});
  // Periodic box [0, length]^n.
  static ChartDomain torus(int n, double length);
  // {r0 <= |.| <= r1} in the first two coordinates, crossed with a box in the
  // remaining extra axes (extra_lo/extra_hi may be empty for the plain 2D annulus).
  static ChartDomain annulus(double r0, double r1, const Vec& extra_lo = Vec(),
                             const Vec& extra_hi = Vec());
  // Unit sphere |x| = 1 in R^ambient_dim.
  static ChartDomain sphere(int ambient_dim);

  Kind kind() const { return kind_; }
  int dimension() const { return n_; }
  bool periodic(int axis) const { return periodic_[axis]; }
  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return hi_[axis]; }
  double r0() const { return r0_; }
  double r1() const { return r1_; }

  bool contains(const Vec& p, double tol = 1e-12) const;
  // Wraps periodic coordinates into [lo, hi); identity elsewhere.
  Vec wrap(const Vec& p) const;
  // Maps the unit cube onto the domain (used with Halton samples).
  Vec sample_unit(const Vec& u) const;

  bool constrained() const { return kind_ == Kind::Sphere; }
  double constraint_level(const Vec& p) const;  // |p|^2 - 1 for spheres
  Vec project(const Vec& p) const;              // closest point on the constraint set

 private:
  Kind kind_ = Kind::Box;
  int n_ = 0;
  Vec lo_, hi_;
  std::vector<bool> periodic_;
  double r0_ = 0.0, r1_ = 0.0;
};

// Halton sequence in [0,1]^dim (prime bases, index offset by `seed`).
std::vector<Vec> halton_unit(int dim, int count, unsigned seed = 0);
// Halton samples mapped into the domain.
std::vector<Vec> halton_points(const ChartDomain& domain, int count, unsigned seed = 0);

// Quadrature over the closure of a domain in physical coordinates; weights
// contain the coordinate measure (and chart Jacobian for annuli) but not the
// metric volume density.
struct Quadrature {
  std::vector<Vec> points;
  std::vector<double> weights;
};

// Tensor midpoint rule with cells_per_axis cells on every axis.
Quadrature midpoint_quadrature(const ChartDomain& domain, int cells_per_axis);
// Tensor Gauss-Legendre with `nodes` points per axis per cell.
Quadrature gauss_quadrature(const ChartDomain& domain, int cells_per_axis, int nodes);

// Nodes/weights of the Gauss-Legendre rule on [-1,1].
void gauss_legendre_rule(int nodes, std::vector<double>& x, std::vector<double>& w);

}  // namespace fluxforms
