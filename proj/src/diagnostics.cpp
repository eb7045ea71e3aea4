#include "fluxforms/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fluxforms {

double vector_norm(const MetricField& g, const Vec& p, const Vec& v) {
  const Vec t = g.on_sphere() ? Vec(g.projector(p) * v) : v;
  return std::sqrt(std::max(0.0, t.dot(g.at(p).g * t)));
}

double covector_norm(const MetricField& g, const Vec& p, const Vec& w) {
  const Vec t = g.on_sphere() ? Vec(g.projector(p) * w) : w;
  return std::sqrt(std::max(0.0, t.dot(g.at(p).inverse() * t)));
}

namespace {

// Intrinsic dimension: charts are full-dimensional, the sphere loses one.
int intrinsic_dimension(const MetricField& g) {
  return g.on_sphere() ? g.dimension() - 1 : g.dimension();
}

// Frobenius norm of an ambient 2-form restricted to the tangent space of the
// sphere at p (charts: plain component norm).
double tangential_two_form_norm(const MetricField& g, const Vec& p,
                                const AlternatingForm& w) {
  if (!g.on_sphere()) return w.euclidean_norm();
  const int n = g.dimension();
  Eigen::SelfAdjointEigenSolver<Mat> es(g.projector(p));
  // Eigenvalues ascending: the first is ~0 (normal direction).
  const Mat basis = es.eigenvectors().rightCols(n - 1);
  const auto& idx = multi_indices(n, 2);
  double sq = 0.0;
  for (int a = 0; a < n - 1; ++a)
    for (int b = a + 1; b < n - 1; ++b) {
      double val = 0.0;
      for (size_t r = 0; r < idx.size(); ++r) {
        const int i = idx[r][0], j = idx[r][1];
        val += w.components()[r] *
               (basis(i, a) * basis(j, b) - basis(j, a) * basis(i, b));
      }
      sq += val * val;
    }
  return std::sqrt(sq);
}

}  // namespace

AlternatingForm force_free_residual(const SmoothField& B, const MetricField& g,
                                    const Vec& p) {
  const SmoothField W = flat_field(B, g);
  const AlternatingForm dW = exterior_derivative(W, p);
  AlternatingForm res = interior_product(B.value(p), dW);
  const int n = intrinsic_dimension(g);
  if (n % 2 == 0) res *= -1.0;  // star(iota_B mu) = (-1)^(n-1) B_flat
  if (g.on_sphere())
    return AlternatingForm(g.dimension(), 1, g.projector(p) * res.components());
  return res;
}

CurlResult curl_odd(const SmoothField& B, const MetricField& g, const Vec& p,
                    double eps_supp) {
  if (g.on_sphere())
    throw std::invalid_argument("curl_odd: chart metrics only");
  const int n = g.dimension();
  if (n % 2 == 0) throw std::invalid_argument("curl_odd: odd dimension required");
  const int m = (n - 1) / 2;
  const AlternatingForm two_form = exterior_derivative(flat_field(B, g), p);
  const AlternatingForm flux = wedge_power(two_form, m);
  CurlResult out;
  out.curl = vector_from_flux(g.at(p), flux);
  const Vec Bp = B.value(p);
  const double norm_b = vector_norm(g, p, Bp);
  if (norm_b > eps_supp) {
    const Mat G = g.at(p).g;
    out.lambda = out.curl.dot(G * Bp) / Bp.dot(G * Bp);
    out.supported = true;
  }
  out.beltrami_residual = out.curl - out.lambda * Bp;
  return out;
}

GeodesicResult geodesic_residual(const SmoothField& B, const MetricField& g,
                                 const Vec& p, double eps_supp) {
  const Vec Bp = B.value(p);
  const Vec acc = covariant_derivative(g, B, B, p);
  GeodesicResult out;
  const double norm_b = vector_norm(g, p, Bp);
  if (norm_b <= eps_supp) {
    out.perp = acc;
    return out;
  }
  out.supported = true;
  if (g.on_sphere()) {
    const Vec Bt = g.projector(p) * Bp;
    out.rho = acc.dot(g.at(p).g * Bt) / Bt.dot(g.at(p).g * Bt);
    out.perp = acc - out.rho * Bt;
  } else {
    const Mat G = g.at(p).g;
    out.rho = acc.dot(G * Bp) / Bp.dot(G * Bp);
    out.perp = acc - out.rho * Bp;
  }
  return out;
}

AlternatingForm wadsley_residual(const SmoothField& X, const MetricField& g,
                                 const Vec& p) {
  const SmoothField W = flat_field(X, g);
  const AlternatingForm lhs = interior_product(X.value(p), exterior_derivative(W, p));
  const Vec acc = covariant_derivative(g, X, X, p);
  const SmoothField s2 = norm_squared_field(X, g);
  const int n = g.dimension();
  Vec acc_flat(n);
  Vec half_grad(n);
  if (g.on_sphere()) {
    // Ambient covectors; restrict everything to the tangent space at the end.
    acc_flat = acc;  // induced metric, acc already tangent
    half_grad = 0.5 * s2.gradient(p);
    Vec r = lhs.components() - acc_flat + half_grad;
    return AlternatingForm(n, 1, g.projector(p) * r);
  }
  acc_flat = g.at(p).g * acc;
  half_grad = 0.5 * s2.gradient(p);
  return AlternatingForm(n, 1, lhs.components() - acc_flat + half_grad);
}

AlternatingForm normalization_at(const SmoothField& B, const MetricField& g,
                                 const Vec& p, double eps_supp) {
  return normalization_field(B, g, eps_supp).form_value(p);
}

EikonalResult eikonal_residual(const SmoothField& B, const MetricField& g,
                               const Vec& p, double eps_supp, bool fd_eta) {
  const Vec Bp = B.value(p);
  if (vector_norm(g, p, Bp) <= eps_supp)
    throw std::domain_error("eikonal_residual: point outside field support");
  const SmoothField eta = normalization_field(B, g, eps_supp, fd_eta);
  EikonalResult out;
  out.d_eta = exterior_derivative(eta, p);
  AlternatingForm t = interior_product(Bp, out.d_eta);
  if (g.on_sphere())
    t = AlternatingForm(g.dimension(), 1, g.projector(p) * t.components());
  out.transport = t;
  return out;
}

Mat killing_residual(const SmoothField& B, const MetricField& g, const Vec& p) {
  const Mat J = B.jacobian(p);
  const int n = g.dimension();
  if (g.on_sphere()) {
    const Mat P = g.projector(p);
    return P * (J + J.transpose()) * P;
  }
  // D(:,i) = nabla_{e_i} B
  Mat D = J;
  if (g.has_log_factor()) {
    const Christoffel c = christoffel(g, p);
    const Vec Bp = B.value(p);
    for (int k = 0; k < n; ++k) D.row(k) += (c.gamma[k] * Bp).transpose();
  }
  const Mat A = g.at(p).g * D;
  return A + A.transpose();
}

double contact_check(const SmoothField& alpha, const Vec& p) {
  if (alpha.kind() != FieldKind::OneForm)
    throw std::invalid_argument("contact_check: expects a one-form field");
  const int n = alpha.dimension();
  if (n % 2 == 0) throw std::invalid_argument("contact_check: odd dimension required");
  const int m = (n - 1) / 2;
  const AlternatingForm a = alpha.form_value(p);
  const AlternatingForm da = exterior_derivative(alpha, p);
  const AlternatingForm top = wedge(a, wedge_power(da, m));
  return top.components()[0];
}

ReebResult reeb_residual(const SmoothField& alpha, const SmoothField& X,
                         const Vec& p) {
  if (alpha.kind() != FieldKind::OneForm)
    throw std::invalid_argument("reeb_residual: expects a one-form field");
  ReebResult out;
  const Vec Xp = X.value(p);
  out.pairing_defect = alpha.value(p).dot(Xp) - 1.0;
  out.transport = interior_product(Xp, exterior_derivative(alpha, p));
  return out;
}

double genericity_check(const SmoothField& field, const MetricField& g,
                        const std::vector<Vec>& points, double rank_tol) {
  const int n = field.dimension();
  if (n % 2 == 0)
    throw std::invalid_argument("genericity_check: odd dimension required");
  if (points.empty()) throw std::invalid_argument("genericity_check: no points");
  const int m = (n - 1) / 2;
  int hits = 0;
  for (const Vec& p : points) {
    AlternatingForm two_form;
    if (field.kind() == FieldKind::OneForm) {
      two_form = exterior_derivative(field, p);
    } else if (field.kind() == FieldKind::Vector) {
      two_form = exterior_derivative(flat_field(field, g), p);
    } else {
      throw std::invalid_argument("genericity_check: vector or one-form input");
    }
    if (rank_of_two_form(two_form, rank_tol) == m) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(points.size());
}

double ResidualReport::max_value() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double ResidualReport::min_value() const {
  return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

double ResidualReport::mean_value() const {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double ResidualReport::quantile(double q) const {
  if (values.empty()) return 0.0;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

bool ResidualReport::passes(double threshold) const {
  if (mode == "min_above") return min_value() > threshold;
  return max_value() < threshold;
}

std::string ResidualReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["mode"] = mode;
  j["count"] = values.size();
  j["max"] = max_value();
  j["min"] = min_value();
  j["mean"] = mean_value();
  j["q50"] = quantile(0.5);
  j["q90"] = quantile(0.9);
  j["q99"] = quantile(0.99);
  for (const auto& [key, vals] : auxiliary) {
    double mx = 0.0;
    for (double v : vals) mx = std::max(mx, std::abs(v));
    j["aux_max_abs"][key] = mx;
  }
  return j.dump(2);
}

void ResidualReport::write_csv(std::ostream& out) const {
  out << "index";
  if (!points.empty())
    for (int a = 0; a < points.front().size(); ++a) out << ",p" << a;
  out << ",value";
  for (const auto& [key, vals] : auxiliary) {
    (void)vals;
    out << "," << key;
  }
  out << "\n";
  for (size_t i = 0; i < values.size(); ++i) {
    out << i;
    if (i < points.size())
      for (int a = 0; a < points[i].size(); ++a) out << "," << points[i][a];
    out << "," << values[i];
    for (const auto& [key, vals] : auxiliary) {
      (void)key;
      out << "," << (i < vals.size() ? vals[i] : 0.0);
    }
    out << "\n";
  }
}

ResidualReport evaluate_residuals(const std::string& check, const SmoothField& field,
                                  const MetricField& g, const std::vector<Vec>& points,
                                  const DiagnosticsOptions& opts) {
  ResidualReport report;
  report.name = check;
  report.points = points;
  report.values.reserve(points.size());
  for (const Vec& p : points) {
    if (field.kind() == FieldKind::Vector)
      report.auxiliary["norm_B"].push_back(vector_norm(g, p, field.value(p)));
    if (check == "force_free") {
      report.values.push_back(covector_norm(g, p, force_free_residual(field, g, p).components()));
    } else if (check == "beltrami") {
      const CurlResult c = curl_odd(field, g, p, opts.eps_supp);
      report.values.push_back(vector_norm(g, p, c.beltrami_residual));
      report.auxiliary["lambda"].push_back(c.lambda);
    } else if (check == "geodesic") {
      const GeodesicResult r = geodesic_residual(field, g, p, opts.eps_supp);
      report.values.push_back(vector_norm(g, p, r.perp));
      report.auxiliary["rho"].push_back(r.rho);
    } else if (check == "wadsley") {
      report.values.push_back(covector_norm(g, p, wadsley_residual(field, g, p).components()));
    } else if (check == "normalization") {
      const AlternatingForm eta = normalization_at(field, g, p, opts.eps_supp);
      const Vec w = flat_field(field, g).value(p);
      const double nb = vector_norm(g, p, field.value(p));
      const double defect = covector_norm(g, p, nb * eta.components() - w);
      const double unit = nb > opts.eps_supp
                              ? std::abs(covector_norm(g, p, eta.components()) - 1.0)
                              : 0.0;
      report.values.push_back(std::max(defect, unit));
    } else if (check == "eikonal_closed") {
      const EikonalResult r = eikonal_residual(field, g, p, opts.eps_supp, opts.fd_eta);
      report.values.push_back(tangential_two_form_norm(g, p, r.d_eta));
    } else if (check == "eikonal_transport") {
      const EikonalResult r = eikonal_residual(field, g, p, opts.eps_supp, opts.fd_eta);
      report.values.push_back(covector_norm(g, p, r.transport.components()));
    } else if (check == "killing") {
      report.values.push_back(killing_residual(field, g, p).cwiseAbs().maxCoeff());
    } else if (check == "divergence") {
      report.values.push_back(std::abs(divergence(field, g, p)));
    } else if (check == "contact") {
      report.mode = "min_above";
      report.values.push_back(std::abs(contact_check(field, p)));
    } else {
      throw std::invalid_argument("unknown residual check: " + check);
    }
  }
  return report;
}

}  // namespace fluxforms
