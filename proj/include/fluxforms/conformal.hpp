#pragma once

#include <utility>
#include <vector>

#include "fluxforms/domain.hpp"
#include "fluxforms/fields.hpp"

namespace fluxforms {

enum class Direction { ToBar, ToHat };

// A base metric g_hat together with the canonical rescaling
// g_bar = |beta|^2_hat * g_hat derived from a vector field B_hat.  The factor
// is kept in log space, u = log|B_hat|_hat, so the integer-exponent laws
// (n, n-2, n/(n-2)) stay stable.  Everything bar-dependent is defined only on
// the support |B_hat| > eps_supp and throws std::domain_error off it.
class ConformalPair {
 public:
  ConformalPair(SmoothField B_hat, MetricField g_hat, double eps_supp = 1e-10);

  const SmoothField& field_hat() const { return B_hat_; }
  const MetricField& hat() const { return g_hat_; }
  const MetricField& bar() const { return g_bar_; }
  // B_bar = e^{-n u} B_hat as a field with propagated jacobian.
  const SmoothField& field_bar() const { return B_bar_; }

  // Intrinsic dimension (spheres lose one against the ambient count).
  int dimension() const { return n_; }
  double support_threshold() const { return eps_supp_; }

  // u(p) = log |B_hat|_hat; throws off the support.
  double log_factor(const Vec& p) const;

 private:
  SmoothField B_hat_;
  MetricField g_hat_;
  MetricField g_bar_;
  SmoothField B_bar_;
  int n_ = 0;
  double eps_supp_ = 1e-10;
};

ConformalPair make_pair(SmoothField B, MetricField g_hat, double eps_supp = 1e-10);

// B_bar(p) (ToBar) or the round trip back to B_hat(p) (ToHat).
Vec transform_vector(const ConformalPair& pair, Direction dir, const Vec& p);

// Volume form of the requested metric: mu_bar = e^{n u} mu_hat.
AlternatingForm transform_volume(const ConformalPair& pair, Direction dir, const Vec& p);

// (|beta|_hat, |beta|_bar); the second equals e^{(2-n)u} by the scaling law.
std::pair<double, double> transform_norms(const ConformalPair& pair, const Vec& p);

// Hodge star of the flux form under the requested metric:
// star_bar beta = e^{-(n-2)u} star_hat beta.
AlternatingForm transform_hodge_beta(const ConformalPair& pair, Direction dir,
                                     const Vec& p);

struct EnergyIdentity {
  double l2_sq_hat = 0.0;  // integral of |beta|^2_hat against mu_hat
  double l1_bar = 0.0;     // integral of |beta|_bar against mu_bar
};
// Both sides computed through independent code paths; they agree analytically.
EnergyIdentity energy_identity(const ConformalPair& pair, const Quadrature& quad);

// h = g / g(B,B): the conformal representative making B unit-length.  If B is
// Killing for g it stays Killing for h and becomes geodesic.
MetricField killing_unit_factor(const SmoothField& B, const MetricField& g,
                                double eps_supp = 1e-10);

// Hodge star of the one-form a(p) under e^{2u}g; on surfaces (n = 2) this is
// independent of u, which is the invariance being exercised.
AlternatingForm surface_star_invariance(const MetricField& g, const SmoothField& u,
                                        const SmoothField& a, const Vec& p);

// Surface (n = 2) harmonicity classification for an eikonal field: a point is
// harmonic when |beta| is locally constant (branch 0) or when d|B| is parallel
// to B, i.e. d|B| ^ eta = 0 (branch 1).  Throws std::domain_error when the
// input fails the eikonal gate (d eta residual above gate_tol at some point,
// measured with the sign-flip-sensitive finite-difference eta).
struct SurfaceHarmonicReport {
  std::vector<int> branch;                // 0, 1, or -1 (not harmonic)
  std::vector<double> dnorm_values;       // |d|B||_g
  std::vector<double> parallel_defect;    // |d|B| ^ eta|
  std::vector<double> closedness_values;  // |d B_flat| cross-check
  double eikonal_gate_max = 0.0;          // max |d eta| seen during the gate
  bool all_harmonic() const;
};
SurfaceHarmonicReport surface_harmonic_eikonal_test(const SmoothField& B,
                                                    const MetricField& g,
                                                    const std::vector<Vec>& points,
                                                    double eps_supp = 1e-10,
                                                    double tol = 1e-6,
                                                    double gate_tol = 1e-6);

}  // namespace fluxforms
