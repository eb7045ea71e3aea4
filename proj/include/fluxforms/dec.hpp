#pragma once

// Cubical cochain complexes on tensor-product grids (boxes, periodic tori,
// polar annuli, masked Cartesian regions) with integer coboundary matrices,
// diagonal metric Hodge weights, de Rham sampling, and conversions between
// cochains and pointwise fields at cell barycenters.
//
// Conventions, fixed once here and relied on throughout:
//  * A k-cell spans an axis subset S (|S| = k, ascending) at integer lattice
//    position i: edge index along axes in S, vertex index along the rest.
//    It is oriented by dx^{S}.  Cells of each degree are blocked by S in
//    multi_indices order, row-major within a block (last axis fastest).
//  * d is the integer coboundary: the face of a (k+1)-cell omitting axis a
//    (position t in its axis set) enters with sign (-1)^t at the top copy and
//    (-1)^{t+1} at the bottom copy.  d(k+1) о d(k) = 0 exactly.
//  * Dual cells are the axis-aligned blocks around a cell made of the h/2
//    pieces contributed by each ACTIVE incident n-cell; a cell is `interior`
//    when all 2^{n-k} incident n-cells exist and are active.
//  * A dual 1-cochain (eta, star beta) stores one value per (n-1)-face.  The
//    pointwise 1-form behind values v is recovered as
//        eta_a(x_f) = (-1)^a * v_f / ell_a(f),
//    where a is the face's missing axis and ell_a its dual coordinate extent.
//    Under this convention the flux Hodge is v_f = (-1)^{n-1} * hodge * beta_f
//    and the discrete gradient of a cell potential phi is -d(n-1)^T phi.
//  * The mass weight of a face, w_f = metric dual length, bounds certificates:
//    |v_f| <= w_f is exactly pointwise |eta|_g <= 1.

#include <Eigen/Sparse>

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluxforms/fields.hpp"

namespace fluxforms {

using SparseMat = Eigen::SparseMatrix<double>;

struct Cochain {
  int degree = 0;
  Vec values;
};

class Complex {
 public:
  static Complex box_grid(const Vec& lo, const Vec& hi, const std::vector<int>& res,
                          const std::vector<bool>& periodic = {});
  static Complex torus_grid(int n, double length, int res);
  // Chart (r, theta) in [r0,r1] x [0,2pi), theta periodic; physical map
  // (r cos theta, r sin theta); chart metric diag(1, r^2).
  static Complex polar_annulus(double r0, double r1, int radial_cells,
                               int angular_cells);
  static Complex masked_box(const Vec& lo, const Vec& hi, const std::vector<int>& res,
                            std::function<bool(const Vec&)> keep);
  // Cartesian grid on [-r1,r1]^2 keeping cells whose center lies in the
  // annulus; the staircase boundary makes analytic comparisons first-order.
  static Complex annulus_masked(double r0, double r1, int res);

  int dimension() const { return n_; }
  long cell_count(int k) const;
  int euler_characteristic() const;

  // Coboundary from active k-cells to active (k+1)-cells.
  const SparseMat& d(int k) const;

  bool interior(int k, long cell) const;
  // Active (n-1)-cells with exactly one active incident n-cell.
  const std::vector<long>& boundary_faces() const { return boundary_faces_; }

  const std::vector<int>& axes_of(int k, long cell) const;
  int missing_axis(long face) const;  // (n-1)-cells
  // Chart interval of a cell along an axis it spans.
  void cell_interval(int k, long cell, int axis, double& lo, double& len) const;
  Vec chart_center(int k, long cell) const;
  Vec physical_center(int k, long cell) const;
  Vec physical_point(const Vec& chart) const;
  Mat chart_jacobian(const Vec& chart) const;  // identity when no chart map
  bool identity_chart() const { return !chart_map_; }

  // Metric data (diagonal in chart coordinates, evaluated at barycenters).
  Vec metric_diag_at(const Vec& chart_point) const;
  double primal_volume(int k, long cell) const;      // metric k-volume
  double dual_volume(int k, long cell) const;        // metric (n-k)-volume
  double dual_coord_volume(int k, long cell) const;  // no metric factors
  double hodge_weight(int k, long cell) const;       // dual/primal
  double mass_weight(long face) const;               // (n-1): metric dual length

  // Multiply the metric diagonal by e2u(chart point) and rebuild all weights.
  Complex with_metric_scale(std::function<double(const Vec&)> e2u) const;

  // Corner vertex ids (degree-0 active ids) of an n-cell, lattice order
  // (last axis fastest); used by exporters.
  std::vector<long> cell_corners(long cell) const;

  nlohmann::json descriptor() const { return descriptor_; }
  static Complex from_descriptor(const nlohmann::json& j);

  // Verified at construction: d о d = 0 on every degree (throws otherwise).

 private:
  struct Axis {
    Vec vertices;     // distinct vertex coordinates, ascending
    bool periodic = false;
    double period = 0.0;
    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int edge_count() const {
      return periodic ? vertex_count() : vertex_count() - 1;
    }
    double extent(int edge) const;
    double vertex_coord(int v) const { return vertices[v]; }
  };
  struct DegreeData {
    std::vector<std::vector<int>> sets;  // axis subset per block
    std::vector<long> block_offset;      // into the full index space
    long full_count = 0;
    std::vector<long> active_of_full;    // -1 when inactive
    std::vector<long> full_of_active;
    std::vector<char> interior;
    std::vector<double> primal_vol, dual_vol, dual_coord_vol;
    SparseMat d;
  };

  void build();
  long full_index(int k, int block, const std::vector<int>& pos) const;
  void decode_full(int k, long full, int& block, std::vector<int>& pos) const;
  bool cell_active_full(int k, long full) const;
  Vec chart_center_full(int k, long full) const;

  int n_ = 0;
  std::vector<Axis> axes_;
  std::function<Vec(const Vec&)> chart_map_;
  std::function<Mat(const Vec&)> chart_jac_;
  std::function<Vec(const Vec&)> metric_diag_;
  std::function<bool(const Vec&)> keep_;
  std::vector<DegreeData> deg_;
  std::vector<long> boundary_faces_;
  nlohmann::json descriptor_;
};

// De Rham map: integrate a k-form field over every active k-cell with a
// tensor Gauss rule (gauss_nodes points per axis); degree 0 evaluates at
// vertices.  Fields live in physical coordinates; non-identity charts pull
// back through the chart jacobian.
Cochain sample_to_cochain(const SmoothField& field, const Complex& K, int degree,
                          int gauss_nodes = 3);

// Dual-edge samples of a physical 1-form in the dual-1 sign convention
// (midpoint rule at face centers).
Cochain sample_to_dual_one_cochain(const SmoothField& field, const Complex& K);

// star of an (n-1)-cochain as a dual 1-cochain: v_f = (-1)^{n-1} * w_f/A_f * beta_f.
Cochain flux_hodge(const Complex& K, const Cochain& beta);

// sign(beta_f) * w_f on supported faces (|beta| > supp_rel * max), 0 elsewhere:
// the saturated normalization certificate.
Cochain unit_normalization(const Complex& K, const Cochain& beta,
                           double supp_rel = 1e-8);

// Pointwise reconstruction at barycenters of full-stencil n-cells.
struct CellSamples {
  std::vector<long> cells;  // active n-cell ids
  Mat vectors;              // rows: cells; chart components of B
  Vec norms;                // |B|_g at the barycenter
};
CellSamples flux_vectors(const Complex& K, const Cochain& beta);

// iota_B d(v) assembled at barycenters of n-cells whose closure is fully
// interior; B comes from beta, the dual 1-cochain v is differentiated through
// d(n-2)^T and converted to a pointwise 2-form.
struct ContractionResidual {
  std::vector<long> cells;
  Mat components;  // rows: cells; one-form chart components
  Vec norms;       // metric norms
  double max_norm = 0.0;
};
ContractionResidual contract_dual_one_cochain(const Complex& K, const Cochain& beta,
                                              const Cochain& v);

nlohmann::json cochain_to_json(const Cochain& c);
Cochain cochain_from_json(const nlohmann::json& j);

}  // namespace fluxforms
