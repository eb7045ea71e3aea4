#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fluxforms/dec.hpp"
#include "fluxforms/solvers.hpp"

using namespace fluxforms;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Vec pt(std::initializer_list<double> xs) {
  Vec p(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

double coboundary_square_norm(const Complex& K, int k) {
  SparseMat dd = K.d(k + 1) * K.d(k);
  double m = 0.0;
  for (int c = 0; c < dd.outerSize(); ++c)
    for (SparseMat::InnerIterator it(dd, c); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

// max |Sample(d omega) - D Sample(omega)| over active (k+1)-cells
double chain_map_defect(const Complex& K, const SmoothField& omega, int k) {
  auto upper = SmoothField::form(
      omega.dimension(), k + 1,
      [omega](const Vec& p) { return exterior_derivative(omega, p).components(); });
  Cochain lhs = sample_to_cochain(upper, K, k + 1);
  Cochain rhs{k + 1, Vec(K.d(k) * sample_to_cochain(omega, K, k).values)};
  return (lhs.values - rhs.values).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("cell counts and Euler characteristics") {
  auto box = Complex::box_grid(pt({0.0, 0.0}), pt({2.0, 3.0}), {2, 3});
  CHECK(box.dimension() == 2);
  CHECK(box.cell_count(0) == 12);
  CHECK(box.cell_count(1) == 17);
  CHECK(box.cell_count(2) == 6);
  CHECK(box.euler_characteristic() == 1);

  auto torus = Complex::torus_grid(2, two_pi, 4);
  CHECK(torus.cell_count(0) == 16);
  CHECK(torus.cell_count(1) == 32);
  CHECK(torus.cell_count(2) == 16);
  CHECK(torus.euler_characteristic() == 0);
  CHECK(torus.boundary_faces().empty());

  auto polar = Complex::polar_annulus(1.0, 2.0, 4, 8);
  CHECK(polar.cell_count(0) == 40);
  CHECK(polar.cell_count(1) == 72);
  CHECK(polar.cell_count(2) == 32);
  CHECK(polar.euler_characteristic() == 0);
  CHECK(polar.boundary_faces().size() == 16);

  auto masked = Complex::annulus_masked(0.5, 2.0, 16);
  CHECK(masked.euler_characteristic() == 0);
  CHECK(!masked.boundary_faces().empty());

  auto solid = Complex::box_grid(pt({0.0, 0.0, 0.0}), pt({1.0, 1.0, 1.0}), {2, 2, 2});
  CHECK(solid.euler_characteristic() == 1);
  CHECK(solid.cell_count(3) == 8);
}

TEST_CASE("coboundaries square to zero") {
  auto solid = Complex::box_grid(pt({0.0, 0.0, 0.0}), pt({1.0, 2.0, 1.5}), {3, 2, 4});
  CHECK(coboundary_square_norm(solid, 0) == 0.0);
  CHECK(coboundary_square_norm(solid, 1) == 0.0);
  auto torus = Complex::torus_grid(3, 1.0, 3);
  CHECK(coboundary_square_norm(torus, 0) == 0.0);
  CHECK(coboundary_square_norm(torus, 1) == 0.0);
  auto polar = Complex::polar_annulus(0.5, 2.0, 5, 12);
  CHECK(coboundary_square_norm(polar, 0) == 0.0);
  auto masked = Complex::annulus_masked(0.5, 2.0, 12);
  CHECK(coboundary_square_norm(masked, 0) == 0.0);
}

TEST_CASE("interior flags and boundary weights on the unit grid") {
  auto box = Complex::box_grid(pt({0.0, 0.0}), pt({2.0, 3.0}), {2, 3});
  long interior_vertices = 0, interior_edges = 0;
  for (long v = 0; v < box.cell_count(0); ++v)
    if (box.interior(0, v)) ++interior_vertices;
  for (long e = 0; e < box.cell_count(1); ++e)
    if (box.interior(1, e)) ++interior_edges;
  CHECK(interior_vertices == 2);
  CHECK(interior_edges == 7);
  for (long c = 0; c < box.cell_count(2); ++c) {
    CHECK(box.interior(2, c));
    CHECK(box.primal_volume(2, c) == doctest::Approx(1.0));
  }
  // interior faces carry dual length 1, boundary faces h/2 = 1/2
  std::set<long> bdry(box.boundary_faces().begin(), box.boundary_faces().end());
  CHECK(bdry.size() == 10);
  for (long e = 0; e < box.cell_count(1); ++e) {
    CHECK(box.primal_volume(1, e) == doctest::Approx(1.0));
    const double expected = bdry.count(e) != 0 ? 0.5 : 1.0;
    CHECK(box.mass_weight(e) == doctest::Approx(expected));
    CHECK(box.hodge_weight(1, e) == doctest::Approx(expected));
    CHECK(!box.interior(1, e) == (bdry.count(e) != 0));
  }
}

TEST_CASE("polar cells measure arcs and annular areas exactly") {
  const double r0 = 1.0, r1 = 2.0;
  const int nr = 4, nt = 8;
  auto polar = Complex::polar_annulus(r0, r1, nr, nt);
  const double dr = (r1 - r0) / nr, dt = two_pi / nt;
  for (long e = 0; e < polar.cell_count(1); ++e) {
    const auto& axes = polar.axes_of(1, e);
    const Vec c = polar.chart_center(1, e);
    if (axes[0] == 0) {
      CHECK(polar.primal_volume(1, e) == doctest::Approx(dr));
    } else {
      CHECK(polar.primal_volume(1, e) == doctest::Approx(c[0] * dt));
    }
  }
  double area = 0.0;
  for (long c = 0; c < polar.cell_count(2); ++c) area += polar.primal_volume(2, c);
  CHECK(area == doctest::Approx(std::numbers::pi * (r1 * r1 - r0 * r0)).epsilon(1e-12));
  // physical centers sit on the chart image
  Vec center = polar.physical_center(2, 0);
  CHECK(center.norm() == doctest::Approx(polar.chart_center(2, 0)[0]));
  CHECK(polar.chart_jacobian(polar.chart_center(2, 0)).determinant() ==
        doctest::Approx(polar.chart_center(2, 0)[0]));
}

TEST_CASE("de Rham sampling is a chain map on boxes") {
  auto box2 = Complex::box_grid(pt({0.0, 0.0}), pt({1.0, 1.0}), {5, 4});
  auto f = SmoothField::scalar(
      2, [](const Vec& p) { return p[0] * p[0] * p[1] + p[1]; },
      [](const Vec& p) { return pt({2.0 * p[0] * p[1], p[0] * p[0] + 1.0}); });
  CHECK(chain_map_defect(box2, f, 0) < 1e-13);

  auto omega = SmoothField::one_form(
      2,
      [](const Vec& p) {
        Vec v(2);
        v << p[0] * p[0] * p[1], -p[0] * p[1];
        return v;
      },
      [](const Vec& p) {
        Mat J(2, 2);
        J << 2.0 * p[0] * p[1], p[0] * p[0], -p[1], -p[0];
        return J;
      });
  CHECK(chain_map_defect(box2, omega, 1) < 1e-13);

  auto box3 = Complex::box_grid(pt({0.0, 0.0, 0.0}), pt({1.0, 1.0, 1.0}), {3, 3, 3});
  auto one3 = SmoothField::one_form(
      3,
      [](const Vec& p) {
        Vec v(3);
        v << p[1] * p[2], p[0] * p[0], p[2];
        return v;
      },
      [](const Vec& p) {
        Mat J(3, 3);
        J << 0.0, p[2], p[1], 2.0 * p[0], 0.0, 0.0, 0.0, 0.0, 1.0;
        return J;
      });
  CHECK(chain_map_defect(box3, one3, 1) < 1e-13);

  auto two3 = SmoothField::form(
      3, 2,
      [](const Vec& p) {  // components on {01},{02},{12}
        Vec v(3);
        v << p[0] * p[2], p[1] * p[1], p[0] + p[1] * p[2];
        return v;
      },
      [](const Vec& p) {
        Mat J(3, 3);
        J << p[2], 0.0, p[0], 0.0, 2.0 * p[1], 0.0, 1.0, p[2], p[1];
        return J;
      });
  CHECK(chain_map_defect(box3, two3, 2) < 1e-13);
}

TEST_CASE("de Rham sampling is a chain map through the polar chart") {
  auto polar = Complex::polar_annulus(1.0, 2.0, 4, 10);
  // f = |x|^2 pulls back to the chart polynomial r^2, so the rule is exact
  auto f = SmoothField::scalar(2, [](const Vec& p) { return p.squaredNorm(); },
                               [](const Vec& p) { return Vec(2.0 * p); });
  CHECK(chain_map_defect(polar, f, 0) < 1e-12);
}

TEST_CASE("degree-0 and top-degree samples take values and volumes") {
  auto box = Complex::box_grid(pt({0.0, 0.0}), pt({1.0, 2.0}), {3, 4});
  auto f = SmoothField::scalar(2, [](const Vec& p) { return p[0] + 10.0 * p[1]; });
  Cochain s0 = sample_to_cochain(f, box, 0);
  REQUIRE(s0.values.size() == box.cell_count(0));
  for (long v = 0; v < box.cell_count(0); ++v) {
    CHECK(s0.values[v] ==
          doctest::Approx(f.scalar_value(box.chart_center(0, v))).epsilon(1e-14));
  }
  // constant physical area form integrates to cell areas, polar chart included
  auto polar = Complex::polar_annulus(1.0, 2.0, 3, 9);
  auto area_form = SmoothField::form(2, 2, [](const Vec&) {
    Vec v(1);
    v << 1.0;
    return v;
  });
  Cochain s2 = sample_to_cochain(area_form, polar, 2);
  for (long c = 0; c < polar.cell_count(2); ++c)
    CHECK(s2.values[c] == doctest::Approx(polar.primal_volume(2, c)).epsilon(1e-13));
}

TEST_CASE("flux vectors invert constant-field sampling exactly") {
  auto box = Complex::box_grid(pt({0.0, 0.0}), pt({1.0, 1.0}), {6, 5});
  auto B = SmoothField::vector(2, [](const Vec&) { return pt({0.7, -0.4}); },
                               [](const Vec&) { return Mat(Mat::Zero(2, 2)); });
  auto beta_field = associated_flux_form(B, MetricField::euclidean(2));
  Cochain beta = sample_to_cochain(beta_field, box, 1);
  auto rec = flux_vectors(box, beta);
  REQUIRE(!rec.cells.empty());
  for (size_t i = 0; i < rec.cells.size(); ++i) {
    CHECK(rec.vectors(static_cast<long>(i), 0) == doctest::Approx(0.7));
    CHECK(rec.vectors(static_cast<long>(i), 1) == doctest::Approx(-0.4));
    CHECK(rec.norms[static_cast<long>(i)] ==
          doctest::Approx(std::hypot(0.7, 0.4)).epsilon(1e-12));
  }
}

TEST_CASE("flux vectors on the polar chart: radial field exact, generic second order") {
  // the radial 1/r field has constant flux along every face, so sampling and
  // reconstruction are both exact for it
  auto B = SmoothField::vector(
      2, [](const Vec& p) { return Vec(p / p.squaredNorm()); },
      [](const Vec& p) {
        const double x = p[0], y = p[1], r2 = p.squaredNorm(), r4 = r2 * r2;
        Mat J(2, 2);
        J << (y * y - x * x) / r4, -2.0 * x * y / r4, -2.0 * x * y / r4,
            (x * x - y * y) / r4;
        return J;
      });
  auto beta_field = associated_flux_form(B, MetricField::euclidean(2));
  {
    auto K = Complex::polar_annulus(1.0, 2.0, 8, 32);
    Cochain beta = sample_to_cochain(beta_field, K, 1);
    auto rec = flux_vectors(K, beta);
    for (size_t i = 0; i < rec.cells.size(); ++i) {
      const Vec c = K.chart_center(2, rec.cells[i]);
      CHECK(std::abs(rec.vectors(static_cast<long>(i), 0) - 1.0 / c[0]) < 1e-12);
      CHECK(std::abs(rec.vectors(static_cast<long>(i), 1)) < 1e-12);
      CHECK(std::abs(rec.norms[static_cast<long>(i)] - 1.0 / c[0]) < 1e-12);
    }
  }

  // a constant Cartesian field has angle-dependent chart components, so the
  // face-average reconstruction carries a genuine O(h^2) error
  auto C = SmoothField::vector(
      2, [](const Vec&) { return Vec(Vec::Unit(2, 0)); },
      [](const Vec&) { return Mat(Mat::Zero(2, 2)); });
  auto const_field = associated_flux_form(C, MetricField::euclidean(2));
  auto defect = [&](int nr, int nt) {
    auto K = Complex::polar_annulus(1.0, 2.0, nr, nt);
    Cochain beta = sample_to_cochain(const_field, K, 1);
    auto rec = flux_vectors(K, beta);
    double m = 0.0;
    for (size_t i = 0; i < rec.cells.size(); ++i) {
      const Vec c = K.chart_center(2, rec.cells[i]);
      m = std::max(m, std::abs(rec.vectors(static_cast<long>(i), 0) - std::cos(c[1])));
      m = std::max(m,
                   std::abs(rec.vectors(static_cast<long>(i), 1) + std::sin(c[1]) / c[0]));
      m = std::max(m, std::abs(rec.norms[static_cast<long>(i)] - 1.0));
    }
    return m;
  };
  const double coarse = defect(8, 32), fine = defect(16, 64);
  CHECK(coarse < 0.01);
  CHECK(coarse / fine > 3.0);
}

TEST_CASE("contraction of a dual one-cochain approximates the pointwise transport") {
  auto B = SmoothField::vector(
      2,
      [](const Vec& p) {
        Vec v(2);
        v << p[0] + 0.3, p[1] * p[1] + 0.2;
        return v;
      },
      [](const Vec& p) {
        Mat J(2, 2);
        J << 1.0, 0.0, 0.0, 2.0 * p[1];
        return J;
      });
  auto omega = SmoothField::one_form(
      2,
      [](const Vec& p) {
        Vec v(2);
        v << p[0] * p[0] * p[1], p[0] * p[1] * p[1] - p[0];
        return v;
      },
      [](const Vec& p) {
        Mat J(2, 2);
        J << 2.0 * p[0] * p[1], p[0] * p[0], p[1] * p[1] - 1.0, 2.0 * p[0] * p[1];
        return J;
      });
  auto g = MetricField::euclidean(2);
  auto beta_field = associated_flux_form(B, g);
  auto defect = [&](int res) {
    auto K = Complex::box_grid(pt({0.0, 0.0}), pt({1.0, 1.0}), {res, res});
    Cochain beta = sample_to_cochain(beta_field, K, 1);
    Cochain v = sample_to_dual_one_cochain(omega, K);
    auto r = contract_dual_one_cochain(K, beta, v);
    double m = 0.0;
    for (size_t i = 0; i < r.cells.size(); ++i) {
      const Vec p = K.chart_center(2, r.cells[i]);
      auto d_omega = exterior_derivative(omega, p);
      auto expected = interior_product(B.value(p), d_omega);
      m = std::max(m, (r.components.row(static_cast<long>(i)).transpose() -
                       expected.components())
                          .cwiseAbs()
                          .maxCoeff());
    }
    return m;
  };
  const double coarse = defect(8), fine = defect(16);
  CHECK(coarse < 0.1);
  CHECK(coarse / fine > 3.0);
}

TEST_CASE("saturated normalization is a subgradient certificate") {
  auto box = Complex::box_grid(pt({0.0, 0.0}), pt({1.0, 1.0}), {5, 5});
  auto B = SmoothField::vector(2, [](const Vec&) { return pt({1.0, 0.5}); },
                               [](const Vec&) { return Mat(Mat::Zero(2, 2)); });
  Cochain beta =
      sample_to_cochain(associated_flux_form(B, MetricField::euclidean(2)), box, 1);
  Cochain eta = unit_normalization(box, beta);
  for (long f = 0; f < box.cell_count(1); ++f) {
    if (beta.values[f] != 0.0) {
      CHECK(eta.values[f] ==
            doctest::Approx(std::copysign(box.mass_weight(f), beta.values[f])));
    }
  }
  auto check = normalization_lemma_check(box, beta, eta);
  CHECK(check.member);
  CHECK(check.max_ratio == doctest::Approx(1.0));
  CHECK(check.worst_support_defect < 1e-12);
  CHECK(check.violations.empty());
  // scaling eta above the mass bound breaks membership
  Cochain bad = eta;
  bad.values *= 1.5;
  CHECK(!normalization_lemma_check(box, beta, bad).member);
}

TEST_CASE("flux Hodge matches the dual-sampled analytic star") {
  // B = grad log r: star beta = (-1)^{n-1} B_flat = -dr/r on the plane
  auto B = SmoothField::vector(2, [](const Vec& p) { return Vec(p / p.squaredNorm()); });
  auto star_beta =
      SmoothField::one_form(2, [](const Vec& p) { return Vec(-p / p.squaredNorm()); });
  auto K = Complex::polar_annulus(1.0, 2.0, 16, 48);
  Cochain beta =
      sample_to_cochain(associated_flux_form(B, MetricField::euclidean(2)), K, 1);
  Cochain v = flux_hodge(K, beta);
  Cochain vs = sample_to_dual_one_cochain(star_beta, K);
  double scale = vs.values.cwiseAbs().maxCoeff();
  CHECK(scale > 0.0);
  CHECK((v.values - vs.values).cwiseAbs().maxCoeff() < 2e-3 * scale);
}

TEST_CASE("descriptors round-trip every grid kind") {
  auto check_roundtrip = [](const Complex& K) {
    auto K2 = Complex::from_descriptor(K.descriptor());
    CHECK(K2.dimension() == K.dimension());
    for (int k = 0; k <= K.dimension(); ++k) CHECK(K2.cell_count(k) == K.cell_count(k));
    CHECK(K2.euler_characteristic() == K.euler_characteristic());
    CHECK(K2.boundary_faces().size() == K.boundary_faces().size());
  };
  check_roundtrip(Complex::box_grid(pt({0.0, -1.0}), pt({2.0, 1.0}), {4, 3},
                                    {true, false}));
  check_roundtrip(Complex::torus_grid(3, 2.0, 3));
  check_roundtrip(Complex::polar_annulus(0.5, 2.0, 4, 12));
  check_roundtrip(Complex::annulus_masked(0.5, 2.0, 12));

  auto masked = Complex::masked_box(pt({0.0, 0.0}), pt({1.0, 1.0}), {4, 4},
                                    [](const Vec& p) { return p[0] < 0.8; });
  CHECK_THROWS_AS(Complex::from_descriptor(masked.descriptor()), std::invalid_argument);
  auto scaled = Complex::torus_grid(2, 1.0, 4).with_metric_scale(
      [](const Vec&) { return 2.0; });
  CHECK_THROWS_AS(Complex::from_descriptor(scaled.descriptor()), std::invalid_argument);
}

TEST_CASE("cochains serialize losslessly") {
  auto K = Complex::torus_grid(2, 1.0, 4);
  Cochain c{1, Vec::Random(K.cell_count(1))};
  auto j = cochain_to_json(c);
  Cochain back = cochain_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.degree == 1);
  REQUIRE(back.values.size() == c.values.size());
  CHECK((back.values - c.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform metric scaling moves every weight by the right power") {
  auto K = Complex::box_grid(pt({0.0, 0.0}), pt({1.0, 1.0}), {4, 4});
  const double c = 4.0;  // e^{2u} = 4, lengths double
  auto Ks = K.with_metric_scale([c](const Vec&) { return c; });
  for (long e = 0; e < K.cell_count(1); ++e) {
    CHECK(Ks.primal_volume(1, e) == doctest::Approx(2.0 * K.primal_volume(1, e)));
    CHECK(Ks.mass_weight(e) == doctest::Approx(2.0 * K.mass_weight(e)));
    // n = 2k: the one-form Hodge is conformally invariant
    CHECK(Ks.hodge_weight(1, e) == doctest::Approx(K.hodge_weight(1, e)));
  }
  for (long q = 0; q < K.cell_count(2); ++q)
    CHECK(Ks.primal_volume(2, q) == doctest::Approx(c * K.primal_volume(2, q)));
  // scales compose multiplicatively
  auto Kss = Ks.with_metric_scale([](const Vec&) { return 0.25; });
  for (long q = 0; q < K.cell_count(2); ++q)
    CHECK(Kss.primal_volume(2, q) == doctest::Approx(K.primal_volume(2, q)));
}

TEST_CASE("cell corners enumerate distinct vertices of the closure") {
  auto K = Complex::box_grid(pt({0.0, 0.0, 0.0}), pt({1.0, 1.0, 1.0}), {2, 2, 2});
  for (long c = 0; c < K.cell_count(3); ++c) {
    auto corners = K.cell_corners(c);
    CHECK(corners.size() == 8);
    CHECK(std::set<long>(corners.begin(), corners.end()).size() == 8);
    Vec center = Vec::Zero(3);
    for (long v : corners) center += K.chart_center(0, v);
    center /= 8.0;
    CHECK((center - K.chart_center(3, c)).cwiseAbs().maxCoeff() < 1e-13);
  }
}
