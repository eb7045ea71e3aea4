#pragma once

// Discrete flux optimization on a cubical complex, in two norms and two
// problem shapes each:
//   * L2, fixed boundary trace: quadratic minimization over closed cochains
//     with the given trace.  Solved exactly through the dual Laplacian.
//   * L2, fixed cohomology class: beta0 + d(alpha) with alpha supported on
//     interior (n-2)-cells.
//   * L1 versions of both: mass-weighted total-variation minimization by an
//     over-relaxed, diagonally preconditioned primal-dual iteration, with
//     feasibility-projected primal iterates and a scaled dual certificate, so
//     the reported cost, dual value, and gap are honest bounds.
//
// Certificates: eta is a dual 1-cochain with |eta_f| <= w_f (w = mass weight),
// equal to sign(beta_f) w_f on the support at optimality.  For the
// fixed-trace problem eta = -d^T phi for the cell potential phi, which makes
// the dual-closedness identity exact in arithmetic.
//
// Nothing here throws on slow convergence; results carry `converged`,
// certified gap, and the iteration log, and callers decide.

#include <vector>

#include <nlohmann/json.hpp>

#include "fluxforms/dec.hpp"

namespace fluxforms {

struct L2ExactResult {
  Cochain beta;  // boundary faces carry the given trace
  Cochain phi;   // cell potential: W beta = d^T phi on interior faces
  double trace_imbalance = 0.0;  // net boundary flux removed by balancing
  bool balanced = false;
  double closedness = 0.0;    // max |d beta| per cell
  double stationarity = 0.0;  // max |W beta - d^T phi| on interior faces
  double energy = 0.0;        // sum_f hodge_f beta_f^2
};
L2ExactResult solve_l2_exact_harmonic(const Complex& K, const Cochain& trace);

struct L2HomologicalResult {
  Cochain beta;   // beta0 + d alpha
  Cochain alpha;  // (n-2)-cochain, zero outside interior cells
  double stationarity = 0.0;  // max |C^T W beta|
  double energy = 0.0;
  int iterations = 0;  // CG iterations when the closed-complex path is taken
};
L2HomologicalResult solve_l2_harmonic(const Complex& K, const Cochain& beta0);

struct L1Params {
  int max_iters = 50000;
  int check_every = 100;
  double tol_gap = 1e-6;   // relative duality gap
  double tol_cs = 1e-6;    // normalized complementary slackness
  double tol_dual = 1e-6;  // kernel-projection tolerance for the dual bound
  double rho = 1.8;        // over-relaxation
  bool warm_start = true;  // start from the L2 minimizer
};

struct L1LogRow {
  int iter = 0;
  double primal = 0.0, dual = 0.0, gap = 0.0;
};

struct L1Result {
  Cochain beta;  // projected (fixed-trace) or exactly in-class (homological)
  Cochain eta;   // dual certificate, |eta| <= w everywhere
  Cochain phi;   // fixed-trace problems only: eta = -d^T phi inside
  double cost = 0.0;        // total mass, boundary faces included
  double dual_value = 0.0;  // certified lower bound
  double gap = 0.0;         // (cost - dual_value)/cost
  double slackness = 0.0;
  double max_eta_ratio = 0.0;  // max |eta_f| / w_f
  double trace_imbalance = 0.0;
  bool balanced = false;
  bool converged = false;
  int iterations = 0;
  std::vector<L1LogRow> log;
};
L1Result solve_l1_exact(const Complex& K, const Cochain& trace,
                        const L1Params& params = {});
L1Result solve_l1_homological(const Complex& K, const Cochain& beta0,
                              const L1Params& params = {});

// Subgradient membership of eta in the mass-norm ball at beta: |eta| <= w
// everywhere and eta = sign(beta) w on the support.
struct NormalizationCheck {
  bool member = false;
  double max_ratio = 0.0;           // max |eta|/w
  double worst_support_defect = 0.0;  // max |eta - sign(beta) w|/w on support
  std::vector<long> violations;
};
NormalizationCheck normalization_lemma_check(const Complex& K, const Cochain& beta,
                                             const Cochain& eta, double tol = 1e-6,
                                             double supp_rel = 1e-8);

// iota_B d(star beta) at cell barycenters (stationarity of the L2 energy
// under volume-preserving reshuffling of the field lines).
ContractionResidual kkt_residual_l2_isotopy(const Complex& K, const Cochain& beta);

// iota_B d(eta) with eta first validated as a normalization certificate:
// |eta| <= (1+tol) w, and |beta|_pt * eta = hodge * beta on the support.
ContractionResidual kkt_residual_l1_isotopy(const Complex& K, const Cochain& beta,
                                            const Cochain& eta, double tol = 1e-3);

// Max pointwise curl of a dual 1-cochain over fully interior (n-2)-cells.
double dual_closedness_residual(const Complex& K, const Cochain& eta);

// All six stationarity measures for a solved pair (beta, eta).
struct HierarchyReport {
  double l2_fixed_trace = 0.0;   // relative defect of W beta = d^T phi
  double l2_class = 0.0;         // |C^T W beta|_inf / |W beta|_inf
  double l2_isotopy = 0.0;       // max |iota_B d star beta|
  double l1_fixed_trace = 0.0;   // relative defect of eta = -d^T phi
  double l1_class = 0.0;         // max pointwise curl of eta
  double l1_isotopy = 0.0;       // max |iota_B d eta|
  nlohmann::json to_json() const;
};
HierarchyReport hierarchy_report(const Complex& K, const Cochain& beta,
                                 const Cochain& eta);

}  // namespace fluxforms
