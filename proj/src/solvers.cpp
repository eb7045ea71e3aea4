#include "fluxforms/solvers.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fluxforms/exterior.hpp"

namespace fluxforms {

namespace {

// Laplacian-type solve with the constant nullspace grounded at cell 0.
class GroundedSolver {
 public:
  void factor(const SparseMat& L) {
    n_ = L.rows();
    if (n_ < 2) throw std::invalid_argument("grounded solve: need at least two cells");
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < L.outerSize(); ++col)
      for (SparseMat::InnerIterator it(L, col); it; ++it)
        if (it.row() > 0 && it.col() > 0)
          trip.emplace_back(it.row() - 1, it.col() - 1, it.value());
    SparseMat Lr(n_ - 1, n_ - 1);
    Lr.setFromTriplets(trip.begin(), trip.end());
    ldlt_.compute(Lr);
    if (ldlt_.info() != Eigen::Success)
      throw std::runtime_error("grounded solve: factorization failed (disconnected complex?)");
  }
  Vec solve(const Vec& rhs) const {
    Vec x = Vec::Zero(n_);
    x.tail(n_ - 1) = ldlt_.solve(rhs.tail(n_ - 1));
    return x;
  }

 private:
  long n_ = 0;
  Eigen::SimplicialLDLT<SparseMat> ldlt_;
};

// Fixed-trace problem data: interior-face restriction of the top coboundary,
// weights, and the balanced right-hand side  D_i beta_i = b.
struct TraceContext {
  std::vector<long> interior;    // face ids
  std::vector<long> slot;        // face id -> interior slot (-1 otherwise)
  SparseMat Di;                  // cells x interior faces
  Vec w;                         // mass weights, interior
  Vec hodge;                     // L2 weights, interior
  Vec b;
  double imbalance = 0.0;
  bool balanced = false;
};

TraceContext make_trace_context(const Complex& K, const Cochain& trace) {
  int n = K.dimension();
  long nf = K.cell_count(n - 1);
  if (trace.degree != n - 1 || trace.values.size() != nf)
    throw std::invalid_argument("solve: trace must be an (n-1)-cochain on the complex");
  TraceContext ctx;
  ctx.slot.assign(nf, -1);
  for (long f = 0; f < nf; ++f)
    if (K.interior(n - 1, f)) {
      ctx.slot[f] = static_cast<long>(ctx.interior.size());
      ctx.interior.push_back(f);
    }
  long ni = static_cast<long>(ctx.interior.size());
  long nc = K.cell_count(n);
  const SparseMat& D = K.d(n - 1);
  std::vector<Eigen::Triplet<double>> trip;
  ctx.b = Vec::Zero(nc);
  for (long f = 0; f < nf; ++f) {
    for (SparseMat::InnerIterator it(D, f); it; ++it) {
      if (ctx.slot[f] >= 0)
        trip.emplace_back(it.row(), ctx.slot[f], it.value());
      else
        ctx.b[it.row()] -= it.value() * trace.values[f];
    }
  }
  ctx.Di.resize(nc, ni);
  ctx.Di.setFromTriplets(trip.begin(), trip.end());
  ctx.w = Vec::Zero(ni);
  ctx.hodge = Vec::Zero(ni);
  for (long s = 0; s < ni; ++s) {
    ctx.w[s] = K.mass_weight(ctx.interior[s]);
    ctx.hodge[s] = K.hodge_weight(n - 1, ctx.interior[s]);
  }
  double net = ctx.b.sum();
  ctx.imbalance = std::abs(net);
  double scale = std::max(1.0, ctx.b.cwiseAbs().maxCoeff());
  if (ctx.imbalance > 1e-13 * scale) ctx.balanced = true;
  ctx.b.array() -= net / static_cast<double>(nc);
  return ctx;
}

Cochain assemble_full(const Complex& K, const TraceContext& ctx, const Cochain& trace,
                      const Vec& x_interior) {
  Cochain out;
  out.degree = K.dimension() - 1;
  out.values = trace.values;
  for (size_t s = 0; s < ctx.interior.size(); ++s)
    out.values[ctx.interior[s]] = x_interior[static_cast<long>(s)];
  return out;
}

double shrink(double z, double s) {
  if (z > s) return z - s;
  if (z < -s) return z + s;
  return 0.0;
}

// Homological problem data: interior-(n-2)-cell restriction of d(n-2), rows
// kept on interior faces only (boundary rows vanish identically).
struct ClassContext {
  std::vector<long> cols;   // interior (n-2)-cell ids
  std::vector<long> rows;   // interior face ids
  std::vector<long> row_slot;  // face id -> row slot
  SparseMat C;              // interior faces x interior (n-2)-cells
  Vec w, hodge;             // per row
  Vec beta0_rows;
  double boundary_mass = 0.0;  // L1 constant carried by boundary faces
};

ClassContext make_class_context(const Complex& K, const Cochain& beta0) {
  int n = K.dimension();
  long nf = K.cell_count(n - 1);
  if (beta0.degree != n - 1 || beta0.values.size() != nf)
    throw std::invalid_argument("solve: beta0 must be an (n-1)-cochain on the complex");
  ClassContext ctx;
  long nlow = K.cell_count(n - 2);
  std::vector<long> col_slot(nlow, -1);
  for (long e = 0; e < nlow; ++e)
    if (K.interior(n - 2, e)) {
      col_slot[e] = static_cast<long>(ctx.cols.size());
      ctx.cols.push_back(e);
    }
  ctx.row_slot.assign(nf, -1);
  for (long f = 0; f < nf; ++f) {
    if (K.interior(n - 1, f)) {
      ctx.row_slot[f] = static_cast<long>(ctx.rows.size());
      ctx.rows.push_back(f);
    } else {
      ctx.boundary_mass += K.mass_weight(f) * std::abs(beta0.values[f]);
    }
  }
  const SparseMat& D = K.d(n - 2);
  std::vector<Eigen::Triplet<double>> trip;
  for (long e = 0; e < nlow; ++e) {
    if (col_slot[e] < 0) continue;
    for (SparseMat::InnerIterator it(D, e); it; ++it) {
      long rs = ctx.row_slot[it.row()];
      if (rs < 0)
        throw std::logic_error("solve: interior potential touches a boundary face");
      trip.emplace_back(rs, col_slot[e], it.value());
    }
  }
  long nr = static_cast<long>(ctx.rows.size());
  long ncols = static_cast<long>(ctx.cols.size());
  ctx.C.resize(nr, ncols);
  ctx.C.setFromTriplets(trip.begin(), trip.end());
  ctx.w = Vec::Zero(nr);
  ctx.hodge = Vec::Zero(nr);
  ctx.beta0_rows = Vec::Zero(nr);
  for (long r = 0; r < nr; ++r) {
    ctx.w[r] = K.mass_weight(ctx.rows[r]);
    ctx.hodge[r] = K.hodge_weight(n - 1, ctx.rows[r]);
    ctx.beta0_rows[r] = beta0.values[ctx.rows[r]];
  }
  return ctx;
}

}  // namespace

L2ExactResult solve_l2_exact_harmonic(const Complex& K, const Cochain& trace) {
  int n = K.dimension();
  TraceContext ctx = make_trace_context(K, trace);
  L2ExactResult res;
  res.trace_imbalance = ctx.imbalance;
  res.balanced = ctx.balanced;
  long nc = K.cell_count(n);
  Vec lambda = Vec::Zero(nc);
  Vec x = Vec::Zero(ctx.interior.size());
  if (!ctx.interior.empty() && ctx.b.cwiseAbs().maxCoeff() > 0.0) {
    SparseMat Winv(ctx.Di.cols(), ctx.Di.cols());
    std::vector<Eigen::Triplet<double>> trip;
    for (long s = 0; s < ctx.Di.cols(); ++s) trip.emplace_back(s, s, 1.0 / ctx.hodge[s]);
    Winv.setFromTriplets(trip.begin(), trip.end());
    SparseMat L = ctx.Di * Winv * SparseMat(ctx.Di.transpose());
    GroundedSolver solver;
    solver.factor(L);
    lambda = solver.solve(ctx.b);
    x = Winv * Vec(ctx.Di.transpose() * lambda);
  }
  res.beta = assemble_full(K, ctx, trace, x);
  res.phi.degree = n;
  res.phi.values = lambda;
  Vec closers = K.d(n - 1) * res.beta.values;
  res.closedness = closers.size() ? closers.cwiseAbs().maxCoeff() : 0.0;
  Vec stat = ctx.hodge.asDiagonal() * x - Vec(ctx.Di.transpose() * lambda);
  res.stationarity = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
  for (long f = 0; f < K.cell_count(n - 1); ++f)
    res.energy += K.hodge_weight(n - 1, f) * res.beta.values[f] * res.beta.values[f];
  return res;
}

L2HomologicalResult solve_l2_harmonic(const Complex& K, const Cochain& beta0) {
  int n = K.dimension();
  ClassContext ctx = make_class_context(K, beta0);
  long ncols = static_cast<long>(ctx.cols.size());
  L2HomologicalResult res;
  Vec alpha = Vec::Zero(ncols);
  if (ncols > 0) {
    SparseMat W(ctx.C.rows(), ctx.C.rows());
    {
      std::vector<Eigen::Triplet<double>> trip;
      for (long r = 0; r < ctx.C.rows(); ++r) trip.emplace_back(r, r, ctx.hodge[r]);
      W.setFromTriplets(trip.begin(), trip.end());
    }
    SparseMat A = SparseMat(ctx.C.transpose()) * W * ctx.C;
    Vec rhs = -Vec(ctx.C.transpose() * Vec(W * ctx.beta0_rows));
    if (K.boundary_faces().empty()) {
      // Closed complex: A has the closed-cochain kernel; CG with a consistent
      // right-hand side converges to a least-squares representative.
      Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper> cg;
      cg.setTolerance(1e-13);
      cg.setMaxIterations(20 * A.rows());
      cg.compute(A);
      alpha = cg.solve(rhs);
      res.iterations = static_cast<int>(cg.iterations());
    } else {
      Eigen::SimplicialLDLT<SparseMat> ldlt(A);
      if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("class solve: factorization failed");
      alpha = ldlt.solve(rhs);
    }
  }
  res.beta.degree = n - 1;
  res.beta.values = beta0.values;
  Vec corr = ctx.C * alpha;
  for (size_t r = 0; r < ctx.rows.size(); ++r)
    res.beta.values[ctx.rows[r]] += corr[static_cast<long>(r)];
  res.alpha.degree = n - 2;
  res.alpha.values = Vec::Zero(K.cell_count(n - 2));
  for (size_t cidx = 0; cidx < ctx.cols.size(); ++cidx)
    res.alpha.values[ctx.cols[cidx]] = alpha[static_cast<long>(cidx)];
  Vec beta_rows = ctx.beta0_rows + corr;
  Vec stat = ctx.C.transpose() * Vec(ctx.hodge.asDiagonal() * beta_rows);
  res.stationarity = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
  for (long f = 0; f < K.cell_count(n - 1); ++f)
    res.energy += K.hodge_weight(n - 1, f) * res.beta.values[f] * res.beta.values[f];
  return res;
}

L1Result solve_l1_exact(const Complex& K, const Cochain& trace, const L1Params& params) {
  int n = K.dimension();
  TraceContext ctx = make_trace_context(K, trace);
  long ni = static_cast<long>(ctx.interior.size());
  long nc = K.cell_count(n);
  L1Result res;
  res.trace_imbalance = ctx.imbalance;
  res.balanced = ctx.balanced;

  double boundary_mass = 0.0;
  for (long f : K.boundary_faces())
    boundary_mass += K.mass_weight(f) * std::abs(trace.values[f]);

  // Mass-weighted dual Laplacian: used for the warm start and to project
  // iterates onto the constraint set when certifying the gap.
  SparseMat Winv(ni, ni);
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (long s = 0; s < ni; ++s) trip.emplace_back(s, s, 1.0 / ctx.w[s]);
    Winv.setFromTriplets(trip.begin(), trip.end());
  }
  const SparseMat DiT = ctx.Di.transpose();
  GroundedSolver proj;
  bool trivial = ni == 0 || ctx.b.cwiseAbs().maxCoeff() == 0.0;
  Vec x = Vec::Zero(ni), lam = Vec::Zero(nc);
  if (!trivial) {
    SparseMat L = ctx.Di * Winv * DiT;
    proj.factor(L);
    if (params.warm_start) x = Winv * Vec(DiT * proj.solve(ctx.b));
  }

  Vec tau = Vec::Zero(ni), sig = Vec::Zero(nc);
  for (long col = 0; col < ctx.Di.outerSize(); ++col)
    for (SparseMat::InnerIterator it(ctx.Di, col); it; ++it) {
      tau[it.col()] += std::abs(it.value());
      sig[it.row()] += std::abs(it.value());
    }
  for (long s = 0; s < ni; ++s) tau[s] = tau[s] > 0 ? 1.0 / tau[s] : 1.0;
  for (long c = 0; c < nc; ++c) sig[c] = sig[c] > 0 ? 1.0 / sig[c] : 1.0;

  auto certify = [&](int it, Vec& x_proj, double& t_out) {
    Vec resid = ctx.Di * x - ctx.b;
    Vec nu = proj.solve(resid);
    x_proj = x - Winv * Vec(DiT * nu);
    double P = boundary_mass;
    for (long s = 0; s < ni; ++s) P += ctx.w[s] * std::abs(x_proj[s]);
    Vec g = DiT * lam;
    double t = 1.0;
    for (long s = 0; s < ni; ++s)
      if (std::abs(g[s]) > 0.0) t = std::min(t, ctx.w[s] / std::abs(g[s]));
    double D = -t * lam.dot(ctx.b) + boundary_mass;
    double gap = (P - D) / std::max(std::abs(P), 1e-30);
    double xmax = x_proj.size() ? x_proj.cwiseAbs().maxCoeff() : 0.0;
    double slack = 0.0;
    for (long s = 0; s < ni; ++s)
      slack = std::max(slack,
                       std::abs(x_proj[s]) * (ctx.w[s] - std::abs(t * g[s])) / ctx.w[s]);
    slack /= std::max(xmax, 1e-30);
    res.log.push_back({it, P, D, gap});
    res.cost = P;
    res.dual_value = D;
    res.gap = gap;
    res.slackness = slack;
    t_out = t;
    return gap < params.tol_gap && slack < params.tol_cs;
  };

  double t_final = 1.0;
  Vec x_proj = x;
  if (trivial) {
    res.converged = true;
    res.cost = boundary_mass;
    res.dual_value = boundary_mass;
  } else {
    Vec g(ni), xh(ni), mid(ni), lh(nc);
    for (int it = 1; it <= params.max_iters; ++it) {
      g.noalias() = DiT * lam;
      for (long s = 0; s < ni; ++s)
        xh[s] = shrink(x[s] - tau[s] * g[s], tau[s] * ctx.w[s]);
      mid = 2.0 * xh - x;
      lh.noalias() = ctx.Di * mid;
      lh = lam + sig.cwiseProduct(Vec(lh - ctx.b));
      x += params.rho * (xh - x);
      lam += params.rho * (lh - lam);
      // entries the prox keeps at zero otherwise decay geometrically into
      // subnormals, where every later multiply costs a microcode trap
      for (long s = 0; s < ni; ++s)
        if (std::abs(x[s]) < 1e-280) x[s] = 0.0;
      res.iterations = it;
      if (it % params.check_every == 0 || it == params.max_iters) {
        if (certify(it, x_proj, t_final)) {
          res.converged = true;
          break;
        }
      }
    }
    if (res.log.empty()) certify(res.iterations, x_proj, t_final);
  }

  res.beta = assemble_full(K, ctx, trace, x_proj);
  res.phi.degree = n;
  res.phi.values = t_final * lam;
  res.eta.degree = n - 1;
  res.eta.values = Vec::Zero(K.cell_count(n - 1));
  Vec g_fin = DiT * lam;
  for (long s = 0; s < ni; ++s) res.eta.values[ctx.interior[s]] = -t_final * g_fin[s];
  double bmax = res.beta.values.cwiseAbs().maxCoeff();
  for (long f : K.boundary_faces()) {
    double b = res.beta.values[f];
    if (std::abs(b) > 1e-8 * bmax)
      res.eta.values[f] = (b > 0 ? 1.0 : -1.0) * K.mass_weight(f);
  }
  res.max_eta_ratio = 0.0;
  for (long s = 0; s < ni; ++s)
    res.max_eta_ratio =
        std::max(res.max_eta_ratio, std::abs(res.eta.values[ctx.interior[s]]) / ctx.w[s]);
  return res;
}

L1Result solve_l1_homological(const Complex& K, const Cochain& beta0,
                              const L1Params& params) {
  int n = K.dimension();
  ClassContext ctx = make_class_context(K, beta0);
  long nr = ctx.C.rows(), ncols = ctx.C.cols();
  L1Result res;

  const SparseMat CT = ctx.C.transpose();
  SparseMat CtC = CT * ctx.C;
  Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper> kernel_cg;
  kernel_cg.setTolerance(std::min(1e-12, params.tol_dual));
  kernel_cg.setMaxIterations(20 * std::max<long>(CtC.rows(), 1));
  kernel_cg.compute(CtC);

  Vec alpha = Vec::Zero(ncols);
  if (params.warm_start && ncols > 0) {
    L2HomologicalResult l2 = solve_l2_harmonic(K, beta0);
    for (size_t c = 0; c < ctx.cols.size(); ++c)
      alpha[static_cast<long>(c)] = l2.alpha.values[ctx.cols[c]];
  }
  Vec nu = Vec::Zero(nr);

  Vec tau = Vec::Zero(ncols), sig = Vec::Zero(nr);
  for (long col = 0; col < ctx.C.outerSize(); ++col)
    for (SparseMat::InnerIterator it(ctx.C, col); it; ++it) {
      tau[it.col()] += std::abs(it.value());
      sig[it.row()] += std::abs(it.value());
    }
  for (long c = 0; c < ncols; ++c) tau[c] = tau[c] > 0 ? 1.0 / tau[c] : 1.0;
  for (long r = 0; r < nr; ++r) sig[r] = sig[r] > 0 ? 1.0 / sig[r] : 1.0;

  Vec nu_cert = nu;
  double t_final = 1.0;
  auto certify = [&](int it) {
    Vec beta_rows = ctx.beta0_rows + ctx.C * alpha;
    double P = ctx.boundary_mass;
    for (long r = 0; r < nr; ++r) P += ctx.w[r] * std::abs(beta_rows[r]);
    Vec xi = kernel_cg.solve(CT * nu);
    Vec nt = nu - ctx.C * xi;
    double t = 1.0;
    for (long r = 0; r < nr; ++r)
      if (std::abs(nt[r]) > 0.0) t = std::min(t, ctx.w[r] / std::abs(nt[r]));
    nt *= t;
    double D = nt.dot(ctx.beta0_rows) + ctx.boundary_mass;
    double gap = (P - D) / std::max(std::abs(P), 1e-30);
    double bmax = beta_rows.size() ? beta_rows.cwiseAbs().maxCoeff() : 0.0;
    double slack = 0.0;
    for (long r = 0; r < nr; ++r) {
      double sgn = beta_rows[r] >= 0 ? 1.0 : -1.0;
      slack = std::max(slack,
                       std::abs(beta_rows[r]) * (ctx.w[r] - sgn * nt[r]) / ctx.w[r]);
    }
    slack /= std::max(bmax, 1e-30);
    res.log.push_back({it, P, D, gap});
    res.cost = P;
    res.dual_value = D;
    res.gap = gap;
    res.slackness = slack;
    nu_cert = nt;
    t_final = t;
    return gap < params.tol_gap && slack < params.tol_cs;
  };

  if (ncols == 0 || nr == 0) {
    certify(0);
    res.converged = true;
  } else {
    Vec ah(ncols), mid(ncols), s(nr), nh(nr);
    for (int it = 1; it <= params.max_iters; ++it) {
      ah.noalias() = CT * nu;
      ah = alpha - tau.cwiseProduct(ah);
      mid = 2.0 * ah - alpha;
      s.noalias() = ctx.C * mid;
      s = nu + sig.cwiseProduct(Vec(s + ctx.beta0_rows));
      for (long r = 0; r < nr; ++r) nh[r] = std::clamp(s[r], -ctx.w[r], ctx.w[r]);
      alpha += params.rho * (ah - alpha);
      nu += params.rho * (nh - nu);
      for (long c = 0; c < ncols; ++c)
        if (std::abs(alpha[c]) < 1e-280) alpha[c] = 0.0;
      res.iterations = it;
      if (it % params.check_every == 0 || it == params.max_iters) {
        if (certify(it)) {
          res.converged = true;
          break;
        }
      }
    }
  }

  res.beta.degree = n - 1;
  res.beta.values = beta0.values;
  Vec corr = ctx.C * alpha;
  for (size_t r = 0; r < ctx.rows.size(); ++r)
    res.beta.values[ctx.rows[r]] += corr[static_cast<long>(r)];
  res.eta.degree = n - 1;
  res.eta.values = Vec::Zero(K.cell_count(n - 1));
  for (size_t r = 0; r < ctx.rows.size(); ++r)
    res.eta.values[ctx.rows[r]] = nu_cert[static_cast<long>(r)];
  double bmax = res.beta.values.cwiseAbs().maxCoeff();
  for (long f : K.boundary_faces()) {
    double b = res.beta.values[f];
    if (std::abs(b) > 1e-8 * bmax)
      res.eta.values[f] = (b > 0 ? 1.0 : -1.0) * K.mass_weight(f);
  }
  res.max_eta_ratio = 0.0;
  for (long r = 0; r < nr; ++r)
    res.max_eta_ratio =
        std::max(res.max_eta_ratio, std::abs(nu_cert[r]) / ctx.w[r]);
  return res;
}

NormalizationCheck normalization_lemma_check(const Complex& K, const Cochain& beta,
                                             const Cochain& eta, double tol,
                                             double supp_rel) {
  int n = K.dimension();
  long nf = K.cell_count(n - 1);
  if (beta.values.size() != nf || eta.values.size() != nf)
    throw std::invalid_argument("normalization_lemma_check: size mismatch");
  NormalizationCheck out;
  double bmax = beta.values.cwiseAbs().maxCoeff();
  double cutoff = supp_rel * bmax;
  for (long f = 0; f < nf; ++f) {
    double w = K.mass_weight(f);
    double ratio = std::abs(eta.values[f]) / w;
    out.max_ratio = std::max(out.max_ratio, ratio);
    bool bad = ratio > 1.0 + tol;
    if (std::abs(beta.values[f]) > cutoff) {
      double sgn = beta.values[f] > 0 ? 1.0 : -1.0;
      double defect = std::abs(eta.values[f] - sgn * w) / w;
      out.worst_support_defect = std::max(out.worst_support_defect, defect);
      bad = bad || defect > tol;
    }
    if (bad) out.violations.push_back(f);
  }
  out.member = out.violations.empty();
  return out;
}

ContractionResidual kkt_residual_l2_isotopy(const Complex& K, const Cochain& beta) {
  return contract_dual_one_cochain(K, beta, flux_hodge(K, beta));
}

ContractionResidual kkt_residual_l1_isotopy(const Complex& K, const Cochain& beta,
                                            const Cochain& eta, double tol) {
  int n = K.dimension();
  long nf = K.cell_count(n - 1);
  if (beta.values.size() != nf || eta.values.size() != nf)
    throw std::invalid_argument("kkt_residual_l1_isotopy: size mismatch");
  double scale = 0.0;
  for (long f = 0; f < nf; ++f)
    scale = std::max(scale, K.hodge_weight(n - 1, f) * std::abs(beta.values[f]));
  double bmax = beta.values.cwiseAbs().maxCoeff();
  for (long f = 0; f < nf; ++f) {
    double w = K.mass_weight(f);
    if (std::abs(eta.values[f]) > (1.0 + tol) * w)
      throw std::invalid_argument("kkt_residual_l1_isotopy: |eta| exceeds the unit ball");
    if (std::abs(beta.values[f]) > 1e-8 * bmax) {
      // |beta|_pt * eta must reproduce the flux Hodge of beta on the support.
      double bpt = std::abs(beta.values[f]) / K.primal_volume(n - 1, f);
      double defect = std::abs(bpt * eta.values[f] -
                               K.hodge_weight(n - 1, f) * beta.values[f]);
      if (defect > tol * std::max(scale, 1e-30))
        throw std::invalid_argument(
            "kkt_residual_l1_isotopy: eta is not a normalization of the flux");
    }
  }
  return contract_dual_one_cochain(K, beta, eta);
}

double dual_closedness_residual(const Complex& K, const Cochain& eta) {
  int n = K.dimension();
  if (eta.values.size() != K.cell_count(n - 1))
    throw std::invalid_argument("dual_closedness_residual: size mismatch");
  Vec dual2 = K.d(n - 2).transpose() * eta.values;
  double worst = 0.0;
  for (long e = 0; e < K.cell_count(n - 2); ++e) {
    if (!K.interior(n - 2, e)) continue;
    // Require the faces in the stencil to be interior as well: boundary faces
    // carry reporting-convention values that are not part of the certificate.
    bool clean = true;
    for (SparseMat::InnerIterator it(K.d(n - 2), e); it; ++it)
      if (!K.interior(n - 1, it.row())) {
        clean = false;
        break;
      }
    if (!clean) continue;
    worst = std::max(worst, std::abs(dual2[e]) / K.dual_coord_volume(n - 2, e));
  }
  return worst;
}

HierarchyReport hierarchy_report(const Complex& K, const Cochain& beta,
                                 const Cochain& eta) {
  int n = K.dimension();
  long nf = K.cell_count(n - 1);
  HierarchyReport rep;

  std::vector<long> interior;
  std::vector<long> slot(nf, -1);
  for (long f = 0; f < nf; ++f)
    if (K.interior(n - 1, f)) {
      slot[f] = static_cast<long>(interior.size());
      interior.push_back(f);
    }
  long ni = static_cast<long>(interior.size());
  long nc = K.cell_count(n);
  SparseMat Di(nc, ni);
  {
    std::vector<Eigen::Triplet<double>> trip;
    const SparseMat& D = K.d(n - 1);
    for (long f = 0; f < nf; ++f)
      if (slot[f] >= 0)
        for (SparseMat::InnerIterator it(D, f); it; ++it)
          trip.emplace_back(it.row(), slot[f], it.value());
    Di.setFromTriplets(trip.begin(), trip.end());
  }
  Vec w(ni), hodge(ni), beta_i(ni), eta_i(ni);
  for (long s = 0; s < ni; ++s) {
    w[s] = K.mass_weight(interior[s]);
    hodge[s] = K.hodge_weight(n - 1, interior[s]);
    beta_i[s] = beta.values[interior[s]];
    eta_i[s] = eta.values[interior[s]];
  }

  // L2 fixed trace: least-squares potential fit in the W^{-1} norm.
  {
    Vec wb = hodge.asDiagonal() * beta_i;
    SparseMat Winv(ni, ni);
    std::vector<Eigen::Triplet<double>> trip;
    for (long s = 0; s < ni; ++s) trip.emplace_back(s, s, 1.0 / hodge[s]);
    Winv.setFromTriplets(trip.begin(), trip.end());
    SparseMat L = Di * Winv * SparseMat(Di.transpose());
    GroundedSolver solver;
    solver.factor(L);
    Vec phi = solver.solve(Di * beta_i);
    Vec r = wb - Di.transpose() * phi;
    double num = r.dot(Vec(Winv * r));
    double den = std::max(wb.dot(Vec(Winv * wb)), 1e-30);
    rep.l2_fixed_trace = std::sqrt(num / den);
  }
  // L2 class: stationarity against interior potentials.
  {
    ClassContext ctx = make_class_context(K, beta);
    Vec stat = ctx.C.transpose() * Vec(ctx.hodge.asDiagonal() * ctx.beta0_rows);
    double den = std::max(Vec(ctx.hodge.asDiagonal() * ctx.beta0_rows)
                              .cwiseAbs()
                              .maxCoeff(),
                          1e-30);
    rep.l2_class = (stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0) / den;
  }
  rep.l2_isotopy = kkt_residual_l2_isotopy(K, beta).max_norm;
  // L1 fixed trace: fit eta = -d^T phi in the w^{-1} norm.
  {
    SparseMat Winv(ni, ni);
    std::vector<Eigen::Triplet<double>> trip;
    for (long s = 0; s < ni; ++s) trip.emplace_back(s, s, 1.0 / w[s]);
    Winv.setFromTriplets(trip.begin(), trip.end());
    SparseMat L = Di * Winv * SparseMat(Di.transpose());
    GroundedSolver solver;
    solver.factor(L);
    Vec phi = solver.solve(-Vec(Di * Vec(Winv * eta_i)));
    Vec r = eta_i + Di.transpose() * phi;
    double num = r.dot(Vec(Winv * r));
    double den = std::max(eta_i.dot(Vec(Winv * eta_i)), 1e-30);
    rep.l1_fixed_trace = std::sqrt(num / den);
  }
  rep.l1_class = dual_closedness_residual(K, eta);
  rep.l1_isotopy = contract_dual_one_cochain(K, beta, eta).max_norm;
  return rep;
}

nlohmann::json HierarchyReport::to_json() const {
  return nlohmann::json{{"l2_fixed_trace", l2_fixed_trace}, {"l2_class", l2_class},
                        {"l2_isotopy", l2_isotopy},         {"l1_fixed_trace", l1_fixed_trace},
                        {"l1_class", l1_class},             {"l1_isotopy", l1_isotopy}};
}

}  // namespace fluxforms
