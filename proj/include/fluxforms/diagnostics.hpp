#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fluxforms/fields.hpp"

namespace fluxforms {

struct DiagnosticsOptions {
  double eps_supp = 1e-10;  // support threshold on |B|_g
  double rank_tol = 1e-9;   // wedge-power cutoff for rank decisions
  bool fd_eta = false;      // difference the normalized evaluator itself
};

// Metric norms of tangent vectors / covectors; on embedded spheres both are
// tangentially projected before measuring.
double vector_norm(const MetricField& g, const Vec& p, const Vec& v);
double covector_norm(const MetricField& g, const Vec& p, const Vec& w);

// iota_B d(star beta) as a one-form; zero certifies force-free at p.
// star(iota_B mu) = (-1)^(n-1) B_flat, so this is iota_B d(B_flat) up to the
// dimension sign. On spheres the ambient result is tangentially projected.
AlternatingForm force_free_residual(const SmoothField& B, const MetricField& g,
                                    const Vec& p);

// Odd-dimensional curl: iota_{curl B} mu = (d B_flat)^m, n = 2m+1.
struct CurlResult {
  Vec curl;
  double lambda = 0.0;     // g(curl, B)/g(B, B) on the support
  Vec beltrami_residual;   // curl - lambda B
  bool supported = false;  // |B| > eps_supp (lambda meaningless otherwise)
};
CurlResult curl_odd(const SmoothField& B, const MetricField& g, const Vec& p,
                    double eps_supp = 1e-10);

// Decomposition of nabla_B B into rho*B + perp; perp = 0 iff field lines are
// geodesics up to reparametrization.
struct GeodesicResult {
  Vec perp;
  double rho = 0.0;
  bool supported = false;
};
GeodesicResult geodesic_residual(const SmoothField& B, const MetricField& g,
                                 const Vec& p, double eps_supp = 1e-10);

// iota_X d(X_flat) - (nabla_X X)_flat + (1/2) d|X|^2; an identity, so the
// returned one-form must vanish for every field/metric pair.
AlternatingForm wadsley_residual(const SmoothField& X, const MetricField& g,
                                 const Vec& p);

// Unit one-form B_flat/|B| on the support, zero off it.
AlternatingForm normalization_at(const SmoothField& B, const MetricField& g,
                                 const Vec& p, double eps_supp = 1e-10);

// d(eta) and iota_B d(eta) for eta the normalization; d(eta) = 0 certifies a
// locally exact normalization (eikonal), iota_B d(eta) = 0 the weaker geodesic
// condition. With fd_eta the jacobian of eta is taken by differencing the
// normalized evaluator, which sees support-crossing sign flips that the
// closed-form quotient rule cannot. On spheres d_eta is the ambient exterior
// derivative (restrict to tangent pairs to read it) and transport is projected.
struct EikonalResult {
  AlternatingForm d_eta;
  AlternatingForm transport;
};
EikonalResult eikonal_residual(const SmoothField& B, const MetricField& g,
                               const Vec& p, double eps_supp = 1e-10,
                               bool fd_eta = false);

// Symmetrized covariant derivative S_ij = g(nabla_i B, e_j) + g(e_i, nabla_j B);
// zero iff B generates isometries.
Mat killing_residual(const SmoothField& B, const MetricField& g, const Vec& p);

// Coefficient of alpha ^ (d alpha)^m against dx^1 ^ ... ^ dx^n; nonzero
// certifies a contact form at p. Odd dimension only.
double contact_check(const SmoothField& alpha, const Vec& p);

struct ReebResult {
  double pairing_defect = 0.0;  // alpha(X) - 1
  AlternatingForm transport;    // iota_X d alpha
};
ReebResult reeb_residual(const SmoothField& alpha, const SmoothField& X,
                         const Vec& p);

// Fraction of points where the two-form (d alpha for one-form input, d B_flat
// for vector input) has maximal rank m, n = 2m+1.
double genericity_check(const SmoothField& field, const MetricField& g,
                        const std::vector<Vec>& points, double rank_tol = 1e-9);

struct ResidualReport {
  std::string name;
  std::string mode = "max_below";  // or "min_above" for certificate checks
  std::vector<Vec> points;
  std::vector<double> values;
  std::map<std::string, std::vector<double>> auxiliary;

  double max_value() const;
  double min_value() const;
  double mean_value() const;
  double quantile(double q) const;
  bool passes(double threshold) const;
  std::string to_json() const;
  void write_csv(std::ostream& out) const;
};

// check in {force_free, beltrami, geodesic, wadsley, normalization,
// eikonal_closed, eikonal_transport, killing, divergence, contact}.
ResidualReport evaluate_residuals(const std::string& check, const SmoothField& field,
                                  const MetricField& g, const std::vector<Vec>& points,
                                  const DiagnosticsOptions& opts = {});

}  // namespace fluxforms
