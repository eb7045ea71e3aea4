#include "fluxforms/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxforms/catalog.hpp"
#include "fluxforms/conformal.hpp"
#include "fluxforms/dec.hpp"
#include "fluxforms/diagnostics.hpp"
#include "fluxforms/domain.hpp"
#include "fluxforms/expr.hpp"
#include "fluxforms/exterior.hpp"
#include "fluxforms/fields.hpp"
#include "fluxforms/flowlines.hpp"
#include "fluxforms/io.hpp"
#include "fluxforms/solvers.hpp"

namespace fluxforms {
namespace {

using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

// Configuration problems exit with code 2; numeric failures with 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunContext {
  std::string command;
  std::filesystem::path out;
  long seed = 0;
  bool expect_fail = false;
  json config;
  std::vector<std::string> outputs;

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (out / name).string();
  }
};

json load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

// Fill missing keys from defaults (one level of nesting for objects), so the
// manifest records the configuration that actually ran.
void merge_defaults(json& cfg, const json& defaults) {
  if (!cfg.is_object()) throw ConfigError("config root must be a JSON object");
  for (auto it = defaults.begin(); it != defaults.end(); ++it) {
    if (!cfg.contains(it.key())) {
      cfg[it.key()] = it.value();
    } else if (it.value().is_object() && cfg[it.key()].is_object()) {
      for (auto jt = it.value().begin(); jt != it.value().end(); ++jt)
        if (!cfg[it.key()].contains(jt.key())) cfg[it.key()][jt.key()] = jt.value();
    }
  }
}

double require_number(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError("missing numeric config key: " + key);
  return j[key].get<double>();
}

std::string require_string(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_string())
    throw ConfigError("missing string config key: " + key);
  return j[key].get<std::string>();
}

std::map<std::string, double> params_from(const json& cfg) {
  std::map<std::string, double> out;
  if (!cfg.contains("params")) return out;
  if (!cfg["params"].is_object()) throw ConfigError("params must be an object");
  for (auto it = cfg["params"].begin(); it != cfg["params"].end(); ++it) {
    if (!it.value().is_number()) throw ConfigError("params values must be numbers");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

struct FieldSetup {
  SmoothField field;
  MetricField metric;
  ChartDomain domain;
  std::string name;
};

MetricField base_metric(const std::string& spec, const std::string& field_name,
                        const std::map<std::string, double>& params, int dim) {
  if (spec == "catalog") {
    if (field_name.empty())
      throw ConfigError("metric 'catalog' needs a catalog field name");
    return catalog_metric(field_name, params);
  }
  if (spec == "euclidean") return MetricField::euclidean(dim);
  if (spec == "hyperbolic") {
    if (dim != 2) throw ConfigError("the half-plane metric is two-dimensional");
    return MetricField::hyperbolic_half_plane();
  }
  throw ConfigError("metric must be 'catalog', 'euclidean', or 'hyperbolic', got '" +
                    spec + "'");
}

Vec vec_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<long>(i)] = j[i].get<double>();
  return v;
}

ChartDomain domain_from_config(const json& d) {
  const std::string kind = require_string(d, "kind");
  if (kind == "box") {
    Vec lo = vec_from(d.at("lo"), "lo"), hi = vec_from(d.at("hi"), "hi");
    std::vector<bool> per;
    if (d.contains("periodic"))
      for (const auto& b : d["periodic"]) per.push_back(b.get<bool>());
    return ChartDomain::box(lo, hi, per);
  }
  if (kind == "torus")
    return ChartDomain::torus(d.at("n").get<int>(), d.at("length").get<double>());
  if (kind == "annulus") {
    Vec xl, xh;
    if (d.contains("extra_lo")) xl = vec_from(d["extra_lo"], "extra_lo");
    if (d.contains("extra_hi")) xh = vec_from(d["extra_hi"], "extra_hi");
    return ChartDomain::annulus(d.at("r0").get<double>(), d.at("r1").get<double>(),
                                xl, xh);
  }
  if (kind == "sphere") return ChartDomain::sphere(d.at("ambient_dim").get<int>());
  throw ConfigError("domain kind must be box, torus, annulus, or sphere");
}

// Component-wise expression field with dual-number gradients.
SmoothField expression_field(const json& spec) {
  if (!spec.contains("components") || !spec["components"].is_array() ||
      spec["components"].empty())
    throw ConfigError("expression field needs a non-empty 'components' array");
  const int dim = spec.value("dimension", static_cast<int>(spec["components"].size()));
  std::vector<ExprPtr> comps;
  try {
    for (const auto& c : spec["components"]) comps.push_back(parse_expression(c, dim));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("bad expression: ") + e.what());
  }
  const long m = static_cast<long>(comps.size());
  auto eval = [comps, m](const Vec& p) {
    Vec v(m);
    for (long i = 0; i < m; ++i) v[i] = comps[i]->value(p);
    return v;
  };
  auto jac = [comps, m, dim](const Vec& p) {
    Mat J(m, dim);
    double v;
    Vec grad(dim);
    for (long i = 0; i < m; ++i) {
      comps[i]->eval(p, v, grad);
      J.row(i) = grad.transpose();
    }
    return J;
  };
  const std::string kind = spec.value("kind", std::string("vector"));
  if (kind == "vector") {
    if (m != dim) throw ConfigError("vector field needs one component per coordinate");
    return SmoothField::vector(dim, eval, jac);
  }
  if (kind == "one_form") {
    if (m != dim) throw ConfigError("one-form needs one component per coordinate");
    return SmoothField::one_form(dim, eval, jac);
  }
  throw ConfigError("expression field kind must be 'vector' or 'one_form'");
}

FieldSetup resolve_field(const json& cfg) {
  if (!cfg.contains("field")) throw ConfigError("missing 'field'");
  const auto params = params_from(cfg);
  SmoothField field;
  std::string name;
  if (cfg["field"].is_string()) {
    name = cfg["field"].get<std::string>();
    field = catalog_field(name, params);
  } else if (cfg["field"].is_object()) {
    field = expression_field(cfg["field"]);
    if (!cfg.contains("domain"))
      throw ConfigError("expression fields need an explicit 'domain'");
  } else {
    throw ConfigError("'field' must be a catalog name or an expression object");
  }
  if (cfg.contains("h_fd")) field.set_fd_step(require_number(cfg, "h_fd"));
  std::string mspec = cfg.value("metric", std::string("catalog"));
  if (name.empty() && mspec == "catalog") mspec = "euclidean";
  MetricField metric = base_metric(mspec, name, params, field.dimension());
  ChartDomain domain = cfg.contains("domain")
                           ? domain_from_config(cfg["domain"])
                           : catalog_domain(name, params);
  if (domain.dimension() != field.dimension())
    throw ConfigError("domain dimension does not match the field");
  return {std::move(field), std::move(metric), std::move(domain),
          name.empty() ? std::string("expression") : name};
}

// u(p) = log |B|_g, with a closed-form gradient from |B|^2.
SmoothField canonical_log_factor(const SmoothField& B, const MetricField& g,
                                 double eps_supp) {
  const SmoothField s2 = norm_squared_field(B, g);
  const int n = B.dimension();
  const double floor2 = eps_supp * eps_supp;
  auto eval = [s2, floor2](const Vec& p) {
    const double v = s2.scalar_value(p);
    if (v <= floor2) throw std::domain_error("log factor off the field's support");
    return 0.5 * std::log(v);
  };
  auto grad = [s2, floor2](const Vec& p) {
    const double v = s2.scalar_value(p);
    if (v <= floor2) throw std::domain_error("log factor off the field's support");
    return Vec(s2.gradient(p) / (2.0 * v));
  };
  return SmoothField::metric_factor(n, eval, grad);
}

SmoothField affine_log_factor(const json& ucfg, int dim) {
  const double c = ucfg.value("constant", 0.0);
  Vec a = Vec::Zero(dim);
  if (ucfg.contains("linear")) {
    const auto lin = ucfg["linear"].get<std::vector<double>>();
    if (static_cast<int>(lin.size()) != dim)
      throw ConfigError("u.linear must have one entry per dimension");
    for (int i = 0; i < dim; ++i) a[i] = lin[i];
  }
  auto eval = [c, a](const Vec& p) { return c + a.dot(p); };
  auto grad = [a](const Vec&) { return a; };
  return SmoothField::metric_factor(dim, eval, grad);
}

// Conformal mode -> (metric, log factor u with g_mode = e^{2u} g_base).
struct ConformalChoice {
  MetricField metric;
  SmoothField u;  // scalar log factor; zero field for mode "none"
  bool trivial = false;
};

ConformalChoice apply_conformal(const std::string& mode, const SmoothField& B,
                                const MetricField& g, const json& cfg,
                                double eps_supp) {
  const int dim = B.dimension();
  if (mode == "none") {
    auto zero = SmoothField::metric_factor(
        dim, [](const Vec&) { return 0.0; },
        [dim](const Vec&) { return Vec(Vec::Zero(dim)); });
    return {g, zero, true};
  }
  if (mode == "canonical_beta_squared") {
    SmoothField u = canonical_log_factor(B, g, eps_supp);
    return {g.with_log_factor(u), u, false};
  }
  if (mode == "killing_unit") {
    SmoothField up = canonical_log_factor(B, g, eps_supp);
    auto eval = [up](const Vec& p) { return -up.scalar_value(p); };
    auto grad = [up](const Vec& p) { return Vec(-up.gradient(p)); };
    SmoothField u = SmoothField::metric_factor(dim, eval, grad);
    return {killing_unit_factor(B, g, eps_supp), u, false};
  }
  if (mode == "explicit_u") {
    if (!cfg.contains("u") || !cfg["u"].is_object())
      throw ConfigError("mode explicit_u needs a 'u' object (constant / linear)");
    SmoothField u = affine_log_factor(cfg["u"], dim);
    return {g.with_log_factor(u), u, false};
  }
  throw ConfigError(
      "conformal mode must be one of none, canonical_beta_squared, "
      "killing_unit, explicit_u; got '" +
      mode + "'");
}

int finalize(RunContext& ctx, bool passed, const json& summary) {
  json manifest;
  manifest["tool"] = "fluxforms";
  manifest["version"] = kToolVersion;
  manifest["command"] = ctx.command;
  manifest["seed"] = ctx.seed;
  manifest["expect_fail"] = ctx.expect_fail;
  manifest["config"] = ctx.config;
  manifest["status"] = passed ? "pass" : "fail";
  manifest["summary"] = summary;
  ctx.outputs.push_back("manifest.json");
  manifest["outputs"] = ctx.outputs;
  write_json((ctx.out / "manifest.json").string(), manifest);
  int code = passed ? 0 : 1;
  if (ctx.expect_fail) code = (code == 0) ? 1 : 0;
  return code;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// check: pointwise residual thresholds for a catalog field.

int cmd_check(RunContext& ctx) {
  merge_defaults(ctx.config, json{{"metric", "catalog"},
                                  {"conformal", "none"},
                                  {"points", 200},
                                  {"eps_supp", 1e-10},
                                  {"rank_tol", 1e-9},
                                  {"fd_eta", false}});
  FieldSetup setup = resolve_field(ctx.config);
  const ConformalChoice choice =
      apply_conformal(ctx.config["conformal"].get<std::string>(), setup.field,
                      setup.metric, ctx.config, ctx.config["eps_supp"].get<double>());

  if (!ctx.config.contains("checks") || !ctx.config["checks"].is_array() ||
      ctx.config["checks"].empty())
    throw ConfigError("check needs a non-empty 'checks' array");

  const int npts = ctx.config["points"].get<int>();
  if (npts <= 0) throw ConfigError("points must be positive");
  const std::vector<Vec> points =
      halton_points(setup.domain, npts, static_cast<unsigned>(ctx.seed));

  DiagnosticsOptions opts;
  opts.eps_supp = ctx.config["eps_supp"].get<double>();
  opts.rank_tol = ctx.config["rank_tol"].get<double>();
  opts.fd_eta = ctx.config["fd_eta"].get<bool>();

  bool all_pass = true;
  json results = json::array();
  for (auto& ch : ctx.config["checks"]) {
    std::string name;
    double tol = 1e-6;
    if (ch.is_string()) {
      name = ch.get<std::string>();
      ch = json{{"name", name}, {"tolerance", tol}};
    } else if (ch.is_object()) {
      name = require_string(ch, "name");
      tol = ch.value("tolerance", tol);
      ch["tolerance"] = tol;
    } else {
      throw ConfigError("each check must be a name or an object");
    }

    json entry;
    bool ok = false;
    if (name == "genericity") {
      const double frac =
          genericity_check(setup.field, choice.metric, points, opts.rank_tol);
      ok = frac >= 1.0 - tol;
      entry = {{"name", name}, {"fraction_max_rank", frac},
               {"tolerance", tol}, {"passed", ok}};
      std::cout << "check genericity: fraction=" << fmt(frac)
                << " required>=" << fmt(1.0 - tol) << (ok ? " PASS" : " FAIL")
                << "\n";
    } else {
      ResidualReport report;
      try {
        report = evaluate_residuals(name, setup.field, choice.metric, points, opts);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      ok = report.passes(tol);
      std::ofstream csv(ctx.path(name + ".csv"));
      report.write_csv(csv);
      entry = json::parse(report.to_json());
      entry["tolerance"] = tol;
      entry["passed"] = ok;
      const bool upper = report.mode == "max_below";
      const double headline = upper ? report.max_value() : report.min_value();
      std::cout << "check " << name << ": " << (upper ? "max=" : "min=")
                << fmt(headline) << (upper ? " tolerance=" : " floor=") << fmt(tol)
                << (ok ? " PASS" : " FAIL") << "\n";
    }
    results.push_back(entry);
    all_pass = all_pass && ok;
  }

  json report_doc;
  report_doc["field"] = setup.name;
  report_doc["points"] = npts;
  report_doc["checks"] = results;
  write_json(ctx.path("checks.json"), report_doc);

  json summary;
  summary["all_passed"] = all_pass;
  summary["checks_run"] = results.size();
  std::cout << (all_pass ? "all checks passed" : "some checks failed") << "\n";
  return finalize(ctx, all_pass, summary);
}

// ---------------------------------------------------------------------------
// conformal: per-point transformation-law table plus the energy identity.

int cmd_conformal(RunContext& ctx) {
  merge_defaults(ctx.config, json{{"metric", "catalog"},
                                  {"mode", "canonical_beta_squared"},
                                  {"points", 100},
                                  {"eps_supp", 1e-10},
                                  {"tolerance", 1e-8},
                                  {"energy_cells", 8},
                                  {"energy_nodes", 3},
                                  {"energy_tol", 1e-4}});
  FieldSetup setup = resolve_field(ctx.config);
  if (setup.metric.on_sphere())
    throw ConfigError("conformal tables need chart coordinates; for the "
                      "great-circle field use hopf_stereo");
  const int n = setup.field.dimension();
  if (n < 3)
    throw ConfigError(
        "conformal rescaling laws have integer exponents only for dimension "
        ">= 3; in 2D the star on one-forms is conformally invariant (see "
        "surface_star_invariance and surface_harmonic_eikonal_test)");

  const double eps_supp = ctx.config["eps_supp"].get<double>();
  const std::string mode = ctx.config["mode"].get<std::string>();
  const ConformalChoice choice =
      apply_conformal(mode, setup.field, setup.metric, ctx.config, eps_supp);

  const int npts = ctx.config["points"].get<int>();
  if (npts <= 0) throw ConfigError("points must be positive");
  const std::vector<Vec> points =
      halton_points(setup.domain, npts, static_cast<unsigned>(ctx.seed));

  // B_bar = e^{-n u} B keeps the flux form invariant; its flux form under the
  // rescaled metric is recomputed independently and compared against beta.
  const SmoothField& B = setup.field;
  const MetricField& gh = setup.metric;
  const MetricField& gb = choice.metric;
  const SmoothField u = choice.u;
  auto bbar_eval = [B, u, n](const Vec& p) {
    return Vec(std::exp(-double(n) * u.scalar_value(p)) * B.value(p));
  };
  auto bbar_jac = [B, u, n](const Vec& p) {
    const double s = std::exp(-double(n) * u.scalar_value(p));
    const Vec b = B.value(p);
    const Vec du = u.gradient(p);
    return Mat(s * (B.jacobian(p) - double(n) * b * du.transpose()));
  };
  const SmoothField B_bar = SmoothField::vector(n, bbar_eval, bbar_jac);
  const SmoothField beta_hat = associated_flux_form(B, gh);
  const SmoothField beta_bar = associated_flux_form(B_bar, gb);

  const double tol = ctx.config["tolerance"].get<double>();
  Mat rows(npts, static_cast<long>(n) + 7);
  long used = 0;
  double worst = 0.0;
  for (const Vec& p : points) {
    double up;
    try {
      up = u.scalar_value(p);
    } catch (const std::domain_error&) {
      continue;  // off the field's support; no laws to test there
    }
    const AlternatingForm bh = beta_hat.form_value(p);
    const AlternatingForm bb = beta_bar.form_value(p);
    const MetricAtPoint mh = gh.at(p);
    const MetricAtPoint mb = gb.at(p);

    const double norm_hat = form_norm(mh, bh);
    const double norm_bar = form_norm(mb, bh);
    const double scale = std::max(1.0, norm_hat);

    // flux invariance: the flux form of the rescaled field equals beta
    double flux_res = 0.0;
    for (long i = 0; i < bh.components().size(); ++i)
      flux_res = std::max(flux_res, std::abs(bb.components()[i] - bh.components()[i]));
    // norm law: |beta|_bar = e^{-(n-1)u} |beta|_hat
    const double norm_res =
        std::abs(norm_bar - std::exp(-(n - 1.0) * up) * norm_hat);
    // volume law: sqrt(det g_bar) = e^{n u} sqrt(det g_hat)
    const double vol_res =
        std::abs(mb.sqrt_det() - std::exp(double(n) * up) * mh.sqrt_det());
    // star law: star_bar beta = e^{-(n-2)u} star_hat beta
    const AlternatingForm sh = hodge_star(mh, bh);
    const AlternatingForm sb = hodge_star(mb, bh);
    double star_res = 0.0;
    for (long i = 0; i < sh.components().size(); ++i)
      star_res = std::max(star_res,
                          std::abs(sb.components()[i] -
                                   std::exp(-(n - 2.0) * up) * sh.components()[i]));

    const double row_worst =
        std::max(std::max(flux_res / scale, norm_res / scale),
                 std::max(vol_res / std::max(1.0, mh.sqrt_det()), star_res / scale));
    worst = std::max(worst, row_worst);

    for (int i = 0; i < n; ++i) rows(used, i) = p[i];
    rows(used, n + 0) = up;
    rows(used, n + 1) = norm_hat;
    rows(used, n + 2) = norm_bar;
    rows(used, n + 3) = flux_res;
    rows(used, n + 4) = norm_res;
    rows(used, n + 5) = vol_res;
    rows(used, n + 6) = star_res;
    ++used;
  }
  rows.conservativeResize(used, Eigen::NoChange);

  std::vector<std::string> header;
  for (int i = 0; i < n; ++i) header.push_back("p" + std::to_string(i));
  header.insert(header.end(), {"u", "norm_hat", "norm_bar", "flux_residual",
                               "norm_law_residual", "volume_law_residual",
                               "star_law_residual"});
  write_csv(ctx.path("table.csv"), header, rows);

  bool passed = used > 0 && worst <= tol;
  json summary;
  summary["mode"] = mode;
  summary["points_on_support"] = used;
  summary["max_law_residual"] = worst;
  summary["tolerance"] = tol;

  // e^{2u} == 1 everywhere sampled means the rescaled metric is the base one.
  double max_abs_u = 0.0;
  for (long i = 0; i < used; ++i) max_abs_u = std::max(max_abs_u, std::abs(rows(i, n)));
  summary["g_bar_equals_g_hat"] = (max_abs_u < 1e-12);

  if (mode == "canonical_beta_squared") {
    // integral |beta|^2_hat d mu_hat  ==  integral |beta|_bar d mu_bar
    ConformalPair pair = make_pair(setup.field, setup.metric, eps_supp);
    const Quadrature quad = gauss_quadrature(
        setup.domain, ctx.config["energy_cells"].get<int>(),
        ctx.config["energy_nodes"].get<int>());
    const EnergyIdentity e = energy_identity(pair, quad);
    const double mismatch =
        std::abs(e.l2_sq_hat - e.l1_bar) / std::max(1.0, std::abs(e.l2_sq_hat));
    summary["energy"] = {{"l2_sq_hat", e.l2_sq_hat},
                         {"l1_bar", e.l1_bar},
                         {"relative_mismatch", mismatch}};
    passed = passed && mismatch <= ctx.config["energy_tol"].get<double>();
    std::cout << "energy identity: l2_sq_hat=" << fmt(e.l2_sq_hat)
              << " l1_bar=" << fmt(e.l1_bar) << " mismatch=" << fmt(mismatch)
              << "\n";
  }

  write_json(ctx.path("conformal.json"), summary);
  std::cout << "conformal " << mode << ": points=" << used
            << " max_residual=" << fmt(worst) << (passed ? " PASS" : " FAIL")
            << "\n";
  return finalize(ctx, passed, summary);
}

// ---------------------------------------------------------------------------
// solve: discrete mass minimization on a cochain complex.

Cochain sampled_flux(const Complex& K, const json& source) {
  const std::string name = require_string(source, "field");
  std::map<std::string, double> params;
  if (source.contains("params"))
    for (auto it = source["params"].begin(); it != source["params"].end(); ++it)
      params[it.key()] = it.value().get<double>();
  const SmoothField B = catalog_field(name, params);
  const MetricField g = catalog_metric(name, params);
  if (B.dimension() != K.dimension())
    throw ConfigError("source field dimension does not match the complex");
  const SmoothField beta = B.kind() == FieldKind::Vector
                               ? associated_flux_form(B, g)
                               : B;
  Cochain c = sample_to_cochain(beta, K, K.dimension() - 1);
  const double scale = source.value("scale", 1.0);
  c.values *= scale;
  return c;
}

Cochain trace_from_config(const Complex& K, const json& source) {
  const int n = K.dimension();
  const long nf = K.cell_count(n - 1);
  if (source.contains("field")) return sampled_flux(K, source);
  if (source.contains("uniform")) {
    Cochain c{n - 1, Vec::Zero(nf)};
    const double v = source["uniform"].get<double>();
    for (long f : K.boundary_faces()) c.values[f] = v * K.primal_volume(n - 1, f);
    return c;
  }
  if (source.contains("boundary_points")) {
    Cochain c{n - 1, Vec::Zero(nf)};
    for (const auto& bp : source["boundary_points"]) {
      const auto pt = bp.at("point").get<std::vector<double>>();
      if (static_cast<int>(pt.size()) != n)
        throw ConfigError("boundary point has wrong dimension");
      Vec p = Eigen::Map<const Vec>(pt.data(), n);
      const double mass = bp.at("mass").get<double>();
      long best = -1;
      double best_d = 0.0;
      for (long f : K.boundary_faces()) {
        const double d = (K.physical_center(n - 1, f) - p).norm();
        if (best < 0 || d < best_d) {
          best = f;
          best_d = d;
        }
      }
      if (best < 0) throw ConfigError("complex has no boundary faces");
      c.values[best] += mass;
    }
    return c;
  }
  throw ConfigError("source needs 'field', 'uniform', or 'boundary_points'");
}

Cochain class_from_config(const Complex& K, const json& source) {
  const int n = K.dimension();
  if (source.contains("field")) return sampled_flux(K, source);
  if (source.contains("torus_class")) {
    // Unit-period representative: the faces crossing one transverse slab
    // share the total flux equally, so any cut along the axis reads 1.
    const int axis = source["torus_class"].value("axis", 0);
    if (axis < 0 || axis >= n) throw ConfigError("torus_class axis out of range");
    Cochain c{n - 1, Vec::Zero(K.cell_count(n - 1))};
    std::vector<long> slab;
    double lo0 = 0.0, len0 = 0.0;
    for (long f = 0; f < K.cell_count(n - 1); ++f) {
      if (K.missing_axis(f) != axis) continue;
      double lo, len;
      K.cell_interval(n - 1, f, axis, lo, len);
      if (slab.empty()) {
        lo0 = lo;
        len0 = len;
      }
      if (std::abs(lo - lo0) < 1e-12 * std::max(1.0, std::abs(len0)))
        slab.push_back(f);
    }
    if (slab.empty()) throw ConfigError("no faces found for torus_class axis");
    for (long f : slab) c.values[f] = 1.0 / static_cast<double>(slab.size());
    return c;
  }
  throw ConfigError("source needs 'field' or 'torus_class'");
}

int cmd_solve(RunContext& ctx) {
  merge_defaults(ctx.config, json{{"max_iters", 50000},
                                  {"check_every", 100},
                                  {"tol_gap", 1e-6},
                                  {"tol_cs", 1e-6},
                                  {"tol_dual", 1e-6},
                                  {"eps_supp", 1e-8},
                                  {"vtk", true}});
  if (!ctx.config.contains("complex"))
    throw ConfigError("solve needs a 'complex' descriptor");
  Complex K = [&] {
    try {
      return Complex::from_descriptor(ctx.config["complex"]);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bad complex descriptor: ") + e.what());
    }
  }();
  const int n = K.dimension();
  const std::string problem = require_string(ctx.config, "problem");
  if (!ctx.config.contains("source"))
    throw ConfigError("solve needs a 'source' object");
  const json& source = ctx.config["source"];

  L1Params params;
  params.max_iters = ctx.config["max_iters"].get<long>();
  params.check_every = ctx.config["check_every"].get<long>();
  params.tol_gap = ctx.config["tol_gap"].get<double>();
  params.tol_cs = ctx.config["tol_cs"].get<double>();
  params.tol_dual = ctx.config["tol_dual"].get<double>();

  write_json(ctx.path("complex.json"), K.descriptor());

  Cochain beta{n - 1, Vec::Zero(K.cell_count(n - 1))};
  Cochain eta{n - 1, Vec()};
  bool have_eta = false;
  bool converged = true;
  json summary;

  if (problem == "l2_trace") {
    const Cochain trace = trace_from_config(K, source);
    const L2ExactResult r = solve_l2_exact_harmonic(K, trace);
    beta = r.beta;
    write_json(ctx.path("phi.json"), cochain_to_json(r.phi));
    summary["energy"] = r.energy;
    summary["closedness"] = r.closedness;
    summary["stationarity"] = r.stationarity;
    summary["trace_imbalance"] = r.trace_imbalance;
    std::cout << "l2_trace: energy=" << fmt(r.energy)
              << " closedness=" << fmt(r.closedness)
              << " stationarity=" << fmt(r.stationarity) << "\n";
  } else if (problem == "l2_class") {
    const Cochain beta0 = class_from_config(K, source);
    const L2HomologicalResult r = solve_l2_harmonic(K, beta0);
    beta = r.beta;
    write_json(ctx.path("alpha.json"), cochain_to_json(r.alpha));
    summary["energy"] = r.energy;
    summary["stationarity"] = r.stationarity;
    summary["iterations"] = r.iterations;
    std::cout << "l2_class: energy=" << fmt(r.energy)
              << " stationarity=" << fmt(r.stationarity) << "\n";
  } else if (problem == "l1_trace" || problem == "l1_class") {
    const L1Result r = problem == "l1_trace"
                           ? solve_l1_exact(K, trace_from_config(K, source), params)
                           : solve_l1_homological(K, class_from_config(K, source),
                                                  params);
    beta = r.beta;
    eta = r.eta;
    have_eta = true;
    converged = r.converged;
    write_json(ctx.path("eta.json"), cochain_to_json(r.eta));
    if (r.phi.values.size() > 0)
      write_json(ctx.path("phi.json"), cochain_to_json(r.phi));
    summary["cost"] = r.cost;
    summary["dual_value"] = r.dual_value;
    summary["gap"] = r.gap;
    summary["slackness"] = r.slackness;
    summary["max_eta_ratio"] = r.max_eta_ratio;
    summary["iterations"] = r.iterations;
    summary["converged"] = r.converged;

    Mat log_rows(static_cast<long>(r.log.size()), 4);
    for (size_t i = 0; i < r.log.size(); ++i) {
      log_rows(static_cast<long>(i), 0) = static_cast<double>(r.log[i].iter);
      log_rows(static_cast<long>(i), 1) = r.log[i].primal;
      log_rows(static_cast<long>(i), 2) = r.log[i].dual;
      log_rows(static_cast<long>(i), 3) = r.log[i].gap;
    }
    write_csv(ctx.path("convergence.csv"), {"iter", "primal", "dual", "gap"},
              log_rows);
    std::cout << problem << ": cost=" << fmt(r.cost)
              << " dual=" << fmt(r.dual_value) << " gap=" << fmt(r.gap)
              << " iters=" << r.iterations
              << (r.converged ? "" : "  (NOT CONVERGED)") << "\n";
  } else {
    throw ConfigError(
        "problem must be one of l2_trace, l2_class, l1_trace, l1_class");
  }

  write_json(ctx.path("beta.json"), cochain_to_json(beta));
  if (!have_eta)
    eta = unit_normalization(K, beta, ctx.config["eps_supp"].get<double>());
  write_json(ctx.path("eta_certificate.json"), cochain_to_json(eta));

  const HierarchyReport hier = hierarchy_report(K, beta, eta);
  write_json(ctx.path("hierarchy.json"), hier.to_json());
  std::cout << "kkt residuals: l2_trace=" << fmt(hier.l2_fixed_trace)
            << " l2_class=" << fmt(hier.l2_class)
            << " l2_isotopy=" << fmt(hier.l2_isotopy)
            << " l1_trace=" << fmt(hier.l1_fixed_trace)
            << " l1_class=" << fmt(hier.l1_class)
            << " l1_isotopy=" << fmt(hier.l1_isotopy) << "\n";
  summary["hierarchy"] = hier.to_json();

  if ((n == 2 || n == 3) && ctx.config["vtk"].get<bool>()) {
    const CellSamples s = flux_vectors(K, beta);
    Vec norms = Vec::Zero(K.cell_count(n));
    Mat vecs = Mat::Zero(K.cell_count(n), n);
    for (size_t i = 0; i < s.cells.size(); ++i) {
      norms[s.cells[i]] = s.norms[static_cast<long>(i)];
      vecs.row(s.cells[i]) = s.vectors.row(static_cast<long>(i));
    }
    write_vtk_complex(ctx.path("solution.vtk"), K, {{"B_norm", norms}},
                      {{"B", vecs}});
  }

  if (!converged)
    std::cout << "solver did not reach tol_gap=" << fmt(params.tol_gap)
              << "; see convergence.csv\n";
  return finalize(ctx, converged, summary);
}

// ---------------------------------------------------------------------------
// trace: field lines from Halton seeds, with geodesic defects per metric.

int cmd_trace(RunContext& ctx) {
  merge_defaults(ctx.config,
                 json{{"metric", "catalog"},
                      {"seeds", 20},
                      {"h_int", 1e-3},
                      {"length", 10.0},
                      {"arclength", true},
                      {"min_speed", 1e-10},
                      {"max_steps", 4000000},
                      {"eps_supp", 1e-10},
                      {"metrics", json::array({json{{"label", "base"},
                                                    {"conformal", "none"}}})}});
  FieldSetup setup = resolve_field(ctx.config);
  const double eps_supp = ctx.config["eps_supp"].get<double>();

  struct MetricChoice {
    std::string label;
    MetricField metric;
  };
  std::vector<MetricChoice> metrics;
  for (const auto& m : ctx.config["metrics"]) {
    if (!m.is_object() || !m.contains("label"))
      throw ConfigError("each metrics entry needs a 'label'");
    const std::string mode = m.value("conformal", std::string("none"));
    const std::string cat_name = setup.name == "expression" ? "" : setup.name;
    std::string base_spec = m.value("base", ctx.config["metric"].get<std::string>());
    if (cat_name.empty() && base_spec == "catalog") base_spec = "euclidean";
    const MetricField base = base_metric(base_spec, cat_name,
                                         params_from(ctx.config),
                                         setup.field.dimension());
    const ConformalChoice c =
        apply_conformal(mode, setup.field, base, m, eps_supp);
    metrics.push_back({m["label"].get<std::string>(), c.metric});
  }
  if (metrics.empty()) throw ConfigError("metrics must be non-empty");

  TraceOptions opts;
  opts.step = ctx.config["h_int"].get<double>();
  opts.length = ctx.config["length"].get<double>();
  opts.arclength = ctx.config["arclength"].get<bool>();
  opts.min_speed = ctx.config["min_speed"].get<double>();
  opts.max_steps = ctx.config["max_steps"].get<long>();
  if (opts.step <= 0 || opts.length <= 0) throw ConfigError("h_int and length must be positive");

  const int nseeds = ctx.config["seeds"].get<int>();
  if (nseeds <= 0) throw ConfigError("seeds must be positive");
  const std::vector<Vec> seeds =
      halton_points(setup.domain, nseeds, static_cast<unsigned>(ctx.seed));

  std::vector<Polyline> lines;
  int succeeded = 0;
  std::vector<std::string> reasons;
  for (const Vec& s : seeds) {
    Polyline line = trace_flowline(setup.field, metrics.front().metric,
                                   setup.domain, s, opts);
    const bool ok = line.complete || line.stop_reason == "exit";
    if (ok) ++succeeded;
    reasons.push_back(line.stop_reason.empty() ? "full length" : line.stop_reason);
    lines.push_back(std::move(line));
  }

  // One defect row per line and metric; defects need at least three samples.
  std::vector<Eigen::RowVector4d> defect_rows;
  json defect_summary = json::object();
  for (size_t mi = 0; mi < metrics.size(); ++mi) {
    double overall_max = 0.0, overall_mean = 0.0;
    long counted = 0;
    for (size_t li = 0; li < lines.size(); ++li) {
      if (lines[li].count() < 3) continue;
      Vec d;
      try {
        d = geodesic_defect_along(lines[li], metrics[mi].metric);
      } catch (const std::domain_error&) {
        continue;  // line wandered off the metric's support
      }
      if (d.size() == 0) continue;
      const double dmax = d.cwiseAbs().maxCoeff();
      const double dmean = d.cwiseAbs().mean();
      defect_rows.push_back(Eigen::RowVector4d(
          static_cast<double>(li), static_cast<double>(mi), dmax, dmean));
      overall_max = std::max(overall_max, dmax);
      overall_mean += dmean;
      ++counted;
    }
    if (counted > 0) overall_mean /= static_cast<double>(counted);
    defect_summary[metrics[mi].label] = {{"max_defect", overall_max},
                                         {"mean_defect", overall_mean},
                                         {"lines", counted}};
    std::cout << "defect under " << metrics[mi].label
              << ": max=" << fmt(overall_max) << " mean=" << fmt(overall_mean)
              << "\n";
  }
  Mat defect_mat(static_cast<long>(defect_rows.size()), 4);
  for (size_t i = 0; i < defect_rows.size(); ++i)
    defect_mat.row(static_cast<long>(i)) = defect_rows[i];
  write_csv(ctx.path("defects.csv"),
            {"line", "metric_index", "max_defect", "mean_defect"}, defect_mat);

  long total_pts = 0;
  for (const auto& l : lines) total_pts += l.count();
  const int dim = setup.field.dimension();
  Mat line_rows(total_pts, static_cast<long>(dim) + 2);
  long at = 0;
  for (size_t li = 0; li < lines.size(); ++li)
    for (long i = 0; i < lines[li].count(); ++i) {
      line_rows(at, 0) = static_cast<double>(li);
      line_rows(at, 1) = lines[li].parameter[i];
      for (int c = 0; c < dim; ++c) line_rows(at, 2 + c) = lines[li].points(i, c);
      ++at;
    }
  std::vector<std::string> header = {"line", "parameter"};
  for (int c = 0; c < dim; ++c) header.push_back("x" + std::to_string(c));
  write_csv(ctx.path("lines.csv"), header, line_rows);
  if (dim <= 3) write_vtk_polylines(ctx.path("lines.vtk"), lines);

  const double frac = static_cast<double>(succeeded) / nseeds;
  const bool passed = frac >= 0.9;
  json summary;
  summary["seeds"] = nseeds;
  summary["succeeded"] = succeeded;
  summary["success_fraction"] = frac;
  summary["stop_reasons"] = reasons;
  summary["defects"] = defect_summary;
  std::cout << "traced " << nseeds << " seeds, " << succeeded << " succeeded ("
            << fmt(100.0 * frac) << "%)" << (passed ? " PASS" : " FAIL") << "\n";
  return finalize(ctx, passed, summary);
}

// ---------------------------------------------------------------------------
// catalog: list the built-in fields.

int cmd_catalog(RunContext& ctx, bool have_out) {
  json doc = json::array();
  for (const CatalogEntry& e : catalog_entries()) {
    json item;
    item["name"] = e.name;
    item["dimension"] = e.dimension;
    item["kind"] = e.kind == FieldKind::Vector ? "vector" : "one_form";
    item["params"] = e.params;
    item["summary"] = e.summary;
    doc.push_back(item);
    std::cout << e.name << " (dim " << e.dimension << ")";
    if (!e.params.empty()) {
      std::cout << " [";
      for (size_t i = 0; i < e.params.size(); ++i)
        std::cout << (i ? ", " : "") << e.params[i];
      std::cout << "]";
    }
    std::cout << ": " << e.summary << "\n";
  }
  if (!have_out) return 0;
  write_json(ctx.path("catalog.json"), doc);
  return finalize(ctx, true, json{{"entries", doc.size()}});
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"residual checks, conformal tables, discrete mass minimization, "
               "and field-line tracing for flux forms"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  struct Common {
    std::string config;
    std::string out;
    long seed = 0;
    bool expect_fail = false;
  };
  std::map<std::string, Common> opts;
  const std::vector<std::string> names = {"check", "conformal", "solve", "trace",
                                          "catalog"};
  const std::map<std::string, std::string> blurbs = {
      {"check", "evaluate residual diagnostics for a catalog field"},
      {"conformal", "tabulate conformal transformation laws"},
      {"solve", "minimize discrete mass over a cochain complex"},
      {"trace", "integrate field lines and measure geodesic defects"},
      {"catalog", "list the built-in analytic fields"}};
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name, blurbs.at(name));
    Common& c = opts[name];
    auto* cfg = sub->add_option("--config", c.config, "JSON configuration file");
    auto* out = sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "sampling seed");
    sub->add_flag("--expect-fail", c.expect_fail,
                  "invert pass/fail exit codes (0 <-> 1)");
    if (name != "catalog") {
      cfg->required();
      out->required();
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const Common& c = opts[name];

  RunContext ctx;
  ctx.command = name;
  ctx.seed = c.seed;
  ctx.expect_fail = c.expect_fail;
  try {
    ctx.config = c.config.empty() ? json::object() : load_config(c.config);
    if (!c.out.empty()) {
      ctx.out = c.out;
      std::error_code ec;
      std::filesystem::create_directories(ctx.out, ec);
      if (ec) throw ConfigError("cannot create output directory: " + c.out);
    }
    if (name == "catalog") return cmd_catalog(ctx, !c.out.empty());
    if (name == "check") return cmd_check(ctx);
    if (name == "conformal") return cmd_conformal(ctx);
    if (name == "solve") return cmd_solve(ctx);
    if (name == "trace") return cmd_trace(ctx);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fluxforms
