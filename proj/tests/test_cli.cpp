#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluxforms/cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "fluxforms");
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (auto& a : args) argv.push_back(a.data());
  return fluxforms::run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "fluxforms_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const json& cfg,
                         const std::string& name = "config.json") {
  fs::path p = dir / name;
  std::ofstream out(p);
  out << cfg.dump(2);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_CASE("catalog lists fields and exits cleanly") {
  CHECK(run({"catalog"}) == 0);
  auto dir = fresh_dir("catalog");
  CHECK(run({"catalog", "--out", dir.string()}) == 0);
  json doc = read_json(dir / "catalog.json");
  REQUIRE(doc.is_array());
  CHECK(doc.size() >= 10);
  bool has_abc = false;
  for (const auto& e : doc) has_abc = has_abc || e["name"] == "abc_flow";
  CHECK(has_abc);
  json manifest = read_json(dir / "manifest.json");
  CHECK(manifest["status"] == "pass");
  CHECK(manifest["command"] == "catalog");
}

TEST_CASE("version flag is handled by the parser") {
  CHECK(run({"--version"}) == 0);
}

TEST_CASE("passing residual checks exit zero and record everything") {
  auto dir = fresh_dir("check_pass");
  json cfg = {{"field", "abc_flow"},
              {"checks", json::array({"force_free",
                                      json{{"name", "divergence"}, {"tolerance", 1e-8}},
                                      json{{"name", "beltrami"}, {"tolerance", 1e-7}},
                                      json{{"name", "genericity"}, {"tolerance", 1e-6}}})}};
  std::string cpath = write_config(dir, cfg);
  CHECK(run({"check", "--config", cpath, "--out", dir.string()}) == 0);

  json manifest = read_json(dir / "manifest.json");
  CHECK(manifest["status"] == "pass");
  CHECK(manifest["config"]["points"] == 200);  // default made explicit
  CHECK(manifest["config"]["metric"] == "catalog");
  CHECK(manifest["version"].is_string());
  auto outputs = manifest["outputs"].get<std::vector<std::string>>();
  auto has = [&](const std::string& f) {
    return std::find(outputs.begin(), outputs.end(), f) != outputs.end();
  };
  CHECK(has("checks.json"));
  CHECK(has("force_free.csv"));
  CHECK(has("manifest.json"));

  json checks = read_json(dir / "checks.json");
  CHECK(checks["field"] == "abc_flow");
  for (const auto& c : checks["checks"]) CHECK(c["passed"] == true);
  // per-point residuals are tabulated
  std::string csv = slurp(dir / "force_free.csv");
  CHECK(csv.find("value") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') >= 200);
}

TEST_CASE("failing checks exit one and expect-fail inverts that") {
  auto dir = fresh_dir("check_fail");
  // rigid rotation accelerates toward the axis: nowhere geodesic
  json cfg = {{"field", "rotation_killing"},
              {"checks", json::array({json{{"name", "geodesic"}, {"tolerance", 1e-6}}})}};
  std::string cpath = write_config(dir, cfg);
  CHECK(run({"check", "--config", cpath, "--out", dir.string()}) == 1);
  CHECK(read_json(dir / "manifest.json")["status"] == "fail");
  CHECK(run({"check", "--config", cpath, "--out", dir.string(), "--expect-fail"}) == 0);
}

TEST_CASE("usage and configuration errors exit two") {
  auto dir = fresh_dir("errors");
  CHECK(run({}) == 2);                       // no subcommand
  CHECK(run({"frobnicate"}) == 2);           // unknown subcommand
  CHECK(run({"check", "--out", dir.string()}) == 2);  // missing --config

  CHECK(run({"check", "--config", (dir / "absent.json").string(), "--out",
             dir.string()}) == 2);

  fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(run({"check", "--config", bad.string(), "--out", dir.string()}) == 2);

  std::string arr = write_config(dir, json::array({1, 2}), "array.json");
  CHECK(run({"check", "--config", arr, "--out", dir.string()}) == 2);

  std::string unk_field = write_config(
      dir, json{{"field", "no_such_field"}, {"checks", json::array({"divergence"})}},
      "unk_field.json");
  CHECK(run({"check", "--config", unk_field, "--out", dir.string()}) == 2);

  std::string unk_check = write_config(
      dir, json{{"field", "abc_flow"}, {"checks", json::array({"no_such_check"})}},
      "unk_check.json");
  CHECK(run({"check", "--config", unk_check, "--out", dir.string()}) == 2);
}

TEST_CASE("repeated runs are byte-identical") {
  json cfg = {{"field", "rotation_killing"},
              {"points", 64},
              {"checks", json::array({"killing", "divergence"})}};
  auto dir1 = fresh_dir("det1");
  auto dir2 = fresh_dir("det2");
  std::string c1 = write_config(dir1, cfg);
  std::string c2 = write_config(dir2, cfg);
  CHECK(run({"check", "--config", c1, "--out", dir1.string()}) == 0);
  CHECK(run({"check", "--config", c2, "--out", dir2.string()}) == 0);
  CHECK(slurp(dir1 / "checks.json") == slurp(dir2 / "checks.json"));
  CHECK(slurp(dir1 / "killing.csv") == slurp(dir2 / "killing.csv"));
  CHECK(slurp(dir1 / "manifest.json") == slurp(dir2 / "manifest.json"));
}

TEST_CASE("conformal tables pass for the beltrami flow and verify the energy identity") {
  auto dir = fresh_dir("conformal");
  json cfg = {{"field", "abc_flow"}, {"points", 60}, {"energy_cells", 8}};
  std::string cpath = write_config(dir, cfg);
  CHECK(run({"conformal", "--config", cpath, "--out", dir.string()}) == 0);
  json summary = read_json(dir / "conformal.json");
  CHECK(summary["mode"] == "canonical_beta_squared");
  CHECK(summary["points_on_support"] == 60);
  // |B|^2 = 3 + cross terms on the 2pi torus: integral is exactly 3 (2 pi)^3
  const double expected = 3.0 * std::pow(2.0 * 3.14159265358979323846, 3);
  CHECK(summary["energy"]["l2_sq_hat"].get<double>() ==
        doctest::Approx(expected).epsilon(1e-4));
  CHECK(summary["energy"]["l1_bar"].get<double>() ==
        doctest::Approx(expected).epsilon(1e-4));
  std::string table = slurp(dir / "table.csv");
  CHECK(table.find("norm_law_residual") != std::string::npos);
}

TEST_CASE("conformal rescaling on surfaces is rejected with advice") {
  auto dir = fresh_dir("conformal2d");
  std::string cpath = write_config(dir, json{{"field", "annulus_grad_log_r"}});
  CHECK(run({"conformal", "--config", cpath, "--out", dir.string()}) == 2);
}

TEST_CASE("trivial trace data yields the zero minimizer") {
  auto dir = fresh_dir("solve_zero");
  json cfg = {{"problem", "l2_trace"},
              {"complex", {{"kind", "torus"}, {"n", 2}, {"length", 1.0}, {"res", 4}}},
              {"source", {{"uniform", 0.0}}}};
  std::string cpath = write_config(dir, cfg);
  CHECK(run({"solve", "--config", cpath, "--out", dir.string()}) == 0);
  json manifest = read_json(dir / "manifest.json");
  CHECK(manifest["summary"]["energy"].get<double>() == 0.0);
  json beta = read_json(dir / "beta.json");
  for (const auto& v : beta["values"]) CHECK(v.get<double>() == 0.0);
  // descriptor round-trips through the output
  json desc = read_json(dir / "complex.json");
  CHECK(desc["kind"] == "torus");
  CHECK(desc["res"] == 4);
}

TEST_CASE("mass minimization between two boundary masses produces the full artifact set") {
  auto dir = fresh_dir("solve_l1");
  json cfg = {{"problem", "l1_trace"},
              {"complex",
               {{"kind", "box"},
                {"lo", {0.0, 0.0}},
                {"hi", {1.0, 1.0}},
                {"res", {8, 8}}}},
              {"source",
               {{"boundary_points",
                 json::array({json{{"point", {0.1875, 0.0}}, {"mass", 1.0}},
                              json{{"point", {0.8125, 0.0}}, {"mass", -1.0}}})}}}};
  std::string cpath = write_config(dir, cfg);
  CHECK(run({"solve", "--config", cpath, "--out", dir.string()}) == 0);

  json manifest = read_json(dir / "manifest.json");
  CHECK(manifest["summary"]["converged"] == true);
  // 5 dual cells across plus entry and exit: 6/8
  CHECK(manifest["summary"]["cost"].get<double>() == doctest::Approx(0.75).epsilon(1e-4));
  CHECK(manifest["summary"]["max_eta_ratio"].get<double>() <= 1.0 + 1e-9);
  CHECK(manifest["summary"]["hierarchy"]["l1_fixed_trace"].get<double>() < 1e-8);

  for (const char* f : {"beta.json", "eta.json", "eta_certificate.json", "phi.json",
                        "hierarchy.json", "convergence.csv", "complex.json",
                        "solution.vtk"})
    CHECK(fs::exists(dir / f));

  std::string vtk = slurp(dir / "solution.vtk");
  CHECK(vtk.rfind("# vtk DataFile", 0) == 0);
  CHECK(vtk.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(vtk.find("CELL_TYPES") != std::string::npos);
  CHECK(vtk.find("B_norm") != std::string::npos);

  std::string conv = slurp(dir / "convergence.csv");
  CHECK(conv.find("iter,primal,dual,gap") != std::string::npos);
}

TEST_CASE("an exhausted iteration budget exits one unless failure is expected") {
  auto dir = fresh_dir("solve_noconv");
  json cfg = {{"problem", "l1_trace"},
              {"complex",
               {{"kind", "box"},
                {"lo", {0.0, 0.0}},
                {"hi", {1.0, 1.0}},
                {"res", {8, 8}}}},
              {"source",
               {{"boundary_points",
                 json::array({json{{"point", {0.1875, 0.0}}, {"mass", 1.0}},
                              json{{"point", {0.8125, 0.0}}, {"mass", -1.0}}})}}},
              {"max_iters", 3},
              {"check_every", 1}};
  std::string cpath = write_config(dir, cfg);
  CHECK(run({"solve", "--config", cpath, "--out", dir.string()}) == 1);
  CHECK(read_json(dir / "manifest.json")["summary"]["converged"] == false);
  CHECK(run({"solve", "--config", cpath, "--out", dir.string(), "--expect-fail"}) == 0);
}

TEST_CASE("solve rejects malformed problems and descriptors") {
  auto dir = fresh_dir("solve_bad");
  std::string no_complex =
      write_config(dir, json{{"problem", "l2_trace"}, {"source", {{"uniform", 1.0}}}},
                   "no_complex.json");
  CHECK(run({"solve", "--config", no_complex, "--out", dir.string()}) == 2);

  std::string bad_kind = write_config(
      dir,
      json{{"problem", "l2_trace"},
           {"complex", {{"kind", "moebius"}}},
           {"source", {{"uniform", 1.0}}}},
      "bad_kind.json");
  CHECK(run({"solve", "--config", bad_kind, "--out", dir.string()}) == 2);

  std::string bad_problem = write_config(
      dir,
      json{{"problem", "l3_trace"},
           {"complex", {{"kind", "torus"}, {"n", 2}, {"length", 1.0}, {"res", 4}}},
           {"source", {{"uniform", 0.0}}}},
      "bad_problem.json");
  CHECK(run({"solve", "--config", bad_problem, "--out", dir.string()}) == 2);
}

TEST_CASE("tracing an expression field writes lines and per-metric defects") {
  auto dir = fresh_dir("trace");
  json cfg = {{"field",
               {{"components", json::array({json{{"neg", "y"}}, "x"})},
                {"kind", "vector"}}},
              {"domain", {{"kind", "annulus"}, {"r0", 0.5}, {"r1", 2.0}}},
              {"seeds", 5},
              {"h_int", 0.01},
              {"length", 5.0},
              {"metrics",
               json::array({json{{"label", "base"}, {"conformal", "none"}},
                            json{{"label", "speed_scaled"},
                                 {"conformal", "canonical_beta_squared"}}})}};
  std::string cpath = write_config(dir, cfg);
  CHECK(run({"trace", "--config", cpath, "--out", dir.string()}) == 0);

  json manifest = read_json(dir / "manifest.json");
  CHECK(manifest["summary"]["success_fraction"].get<double>() == 1.0);
  CHECK(manifest["summary"]["defects"].contains("base"));
  CHECK(manifest["summary"]["defects"].contains("speed_scaled"));
  // circles of radius r in [0.5, 2] have curvature 1/r
  const double base_max =
      manifest["summary"]["defects"]["base"]["max_defect"].get<double>();
  CHECK(base_max > 0.4);
  CHECK(base_max < 2.2);

  std::string lines = slurp(dir / "lines.csv");
  CHECK(lines.find("line,parameter,x0,x1") != std::string::npos);
  std::string vtk = slurp(dir / "lines.vtk");
  CHECK(vtk.rfind("# vtk DataFile", 0) == 0);
  CHECK(vtk.find("DATASET POLYDATA") != std::string::npos);
  CHECK(fs::exists(dir / "defects.csv"));
}

TEST_CASE("expression fields reject malformed component expressions") {
  auto dir = fresh_dir("trace_bad");
  json cfg = {{"field", {{"components", json::array({"frob(x0)", "x0"})}}},
              {"domain", {{"kind", "annulus"}, {"r0", 0.5}, {"r1", 2.0}}}};
  std::string cpath = write_config(dir, cfg);
  CHECK(run({"trace", "--config", cpath, "--out", dir.string()}) == 2);
  // an expression field without a domain is also a configuration error
  json no_dom = {{"field", {{"components", json::array({"-x1", "x0"})}}}};
  std::string c2 = write_config(dir, no_dom, "no_dom.json");
  CHECK(run({"trace", "--config", c2, "--out", dir.string()}) == 2);
}
