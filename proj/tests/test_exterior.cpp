#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fluxforms/exterior.hpp"

using namespace fluxforms;

namespace {

std::mt19937 rng(12345);

Vec random_vec(int n) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

AlternatingForm random_form(int n, int k) {
  AlternatingForm a(n, k);
  a.components() = random_vec(static_cast<int>(binomial(n, k)));
  return a;
}

MetricAtPoint random_metric(int n, double orientation = 1.0) {
  Mat A(n, n);
  for (int i = 0; i < n; ++i) A.row(i) = random_vec(n).transpose();
  Mat g = A * A.transpose() + 0.5 * Mat::Identity(n, n);
  return MetricAtPoint(g, orientation);
}

double max_diff(const AlternatingForm& a, const AlternatingForm& b) {
  return (a.components() - b.components()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("multi-indices are lexicographic and complete") {
  const auto& idx = multi_indices(4, 2);
  REQUIRE(idx.size() == 6);
  CHECK(idx[0] == std::vector<int>{0, 1});
  CHECK(idx[1] == std::vector<int>{0, 2});
  CHECK(idx[5] == std::vector<int>{2, 3});
  for (size_t i = 0; i < idx.size(); ++i)
    CHECK(multi_index_rank(4, idx[i]) == static_cast<int>(i));
  CHECK(binomial(5, 2) == 10);
  CHECK(binomial(6, 0) == 1);
}

TEST_CASE("merge sign counts transpositions; overlap gives zero") {
  CHECK(merge_sign({0, 2}, {1}) == -1);
  CHECK(merge_sign({1}, {0}) == -1);
  CHECK(merge_sign({0}, {1}) == 1);
  CHECK(merge_sign({0, 1}, {2, 3}) == 1);
  CHECK(merge_sign({2, 3}, {0, 1}) == 1);
  CHECK(merge_sign({1, 3}, {0, 2}) == -1);
  CHECK(merge_sign({0, 1}, {1, 2}) == 0);
  CHECK(merge_sign({}, {0, 1}) == 1);
}

TEST_CASE("complement sign matches merge with the complement") {
  for (int n = 2; n <= 5; ++n)
    for (int k = 0; k <= n; ++k)
      for (const auto& s : multi_indices(n, k)) {
        CHECK(complement_sign(n, s) == merge_sign(s, complement_of(n, s)));
      }
}

TEST_CASE("wedge on basis forms and hand values") {
  auto dx = AlternatingForm::basis(3, {0});
  auto dy = AlternatingForm::basis(3, {1});
  auto dz = AlternatingForm::basis(3, {2});
  CHECK(max_diff(wedge(dx, dy), AlternatingForm::basis(3, {0, 1})) == 0.0);
  CHECK(max_diff(wedge(dy, dx), AlternatingForm::basis(3, {0, 1}) * -1.0) == 0.0);
  CHECK(wedge(dx, dx).euclidean_norm() == 0.0);
  // (dx+dy)^(dx-dy) = -2 dx^dy
  auto w = wedge(dx + dy, dx - dy);
  CHECK(w.coeff({0, 1}) == doctest::Approx(-2.0));
  // dz + y dx against its derivative-like 2-form: (dz) ^ (dy^dx) = -mu
  auto a = wedge(dz, wedge(dy, dx));
  CHECK(a.coeff({0, 1, 2}) == doctest::Approx(-1.0));
}

TEST_CASE("wedge is bilinear, associative, graded-commutative") {
  for (int n : {3, 4, 5}) {
    auto a = random_form(n, 1), b = random_form(n, 1), c = random_form(n, 2);
    CHECK(max_diff(wedge(a + b, c), wedge(a, c) + wedge(b, c)) < 1e-12);
    auto c1 = n >= 4 ? c : random_form(n, 1);  // keep the triple inside the top degree
    CHECK(max_diff(wedge(wedge(a, b), c1), wedge(a, wedge(b, c1))) < 1e-12);
    CHECK(max_diff(wedge(a, b), wedge(b, a) * -1.0) < 1e-12);
    // deg 1 ^ deg 2 commutes with sign (-1)^{1*2} = +1
    CHECK(max_diff(wedge(a, c), wedge(c, a)) < 1e-12);
  }
  CHECK_THROWS_AS(wedge(random_form(3, 2), random_form(3, 2)), std::invalid_argument);
  CHECK_THROWS_AS(wedge(random_form(3, 1), random_form(4, 1)), std::invalid_argument);
}

TEST_CASE("euclidean Hodge star on basis forms") {
  auto m = MetricAtPoint::euclidean(3);
  CHECK(max_diff(hodge_star(m, AlternatingForm::basis(3, {0})),
                 AlternatingForm::basis(3, {1, 2})) == 0.0);
  CHECK(max_diff(hodge_star(m, AlternatingForm::basis(3, {1})),
                 AlternatingForm::basis(3, {0, 2}) * -1.0) == 0.0);
  CHECK(max_diff(hodge_star(m, AlternatingForm::basis(3, {0, 1})),
                 AlternatingForm::basis(3, {2})) == 0.0);
  // scalar to volume and back
  AlternatingForm one(3, 0, Vec::Ones(1));
  CHECK(max_diff(hodge_star(m, one), AlternatingForm::basis(3, {0, 1, 2})) == 0.0);
}

TEST_CASE("Hodge star with anisotropic metric") {
  Mat g = Mat::Zero(2, 2);
  g(0, 0) = 4.0;
  g(1, 1) = 9.0;
  MetricAtPoint m(g);
  // star dx = sqrt(det g) g^{xx} dy = 6/4 dy
  auto s = hodge_star(m, AlternatingForm::basis(2, {0}));
  CHECK(s.coeff({1}) == doctest::Approx(1.5));
  // orientation reversal flips the star
  MetricAtPoint mrev(g, -1.0);
  auto srev = hodge_star(mrev, AlternatingForm::basis(2, {0}));
  CHECK(srev.coeff({1}) == doctest::Approx(-1.5));
}

TEST_CASE("double star is (-1)^{k(n-k)} on Riemannian metrics") {
  for (int n = 2; n <= 5; ++n)
    for (int k = 0; k <= n; ++k) {
      auto m = random_metric(n);
      auto a = random_form(n, k);
      auto ss = hodge_star(m, hodge_star(m, a));
      double sign = ((k * (n - k)) % 2 == 0) ? 1.0 : -1.0;
      CHECK(max_diff(ss, a * sign) < 1e-10 * (1.0 + a.euclidean_norm()));
    }
}

TEST_CASE("interior product satisfies the graded Leibniz rule") {
  for (int n : {3, 4}) {
    Vec v = random_vec(n);
    auto a = random_form(n, 1), b = random_form(n, 2);
    auto lhs = interior_product(v, wedge(a, b));
    auto rhs = wedge(interior_product(v, a), b) +
               wedge(a, interior_product(v, b)) * -1.0;
    CHECK(max_diff(lhs, rhs) < 1e-12);
  }
  // iota_{e1}(dx0 ^ dx1) = -dx0
  Vec e1 = Vec::Unit(3, 1);
  auto c = interior_product(e1, AlternatingForm::basis(3, {0, 1}));
  CHECK(c.coeff({0}) == doctest::Approx(-1.0));
}

TEST_CASE("flat and sharp invert each other and compute the metric pairing") {
  for (int n : {2, 3, 4}) {
    auto m = random_metric(n);
    Vec v = random_vec(n), w = random_vec(n);
    CHECK((sharp(m, flat(m, v)) - v).cwiseAbs().maxCoeff() < 1e-10);
    double pair = flat(m, v).components().dot(w);
    CHECK(pair == doctest::Approx(v.dot(m.g * w)).epsilon(1e-10));
  }
}

TEST_CASE("volume form and inner product are metric-consistent") {
  for (int n : {2, 3, 4}) {
    auto m = random_metric(n);
    auto mu = volume_form(m);
    CHECK(mu.coeff(multi_indices(n, n)[0]) == doctest::Approx(m.sqrt_det()));
    auto a = random_form(n, 2 > n ? 1 : 2);
    CHECK(inner_product(m, a, a) == doctest::Approx(form_norm(m, a) * form_norm(m, a))
                                        .epsilon(1e-10));
    auto b = random_form(n, a.degree());
    CHECK(inner_product(m, a, b) == doctest::Approx(inner_product(m, b, a)));
    // a ^ star a = |a|^2 mu
    auto top = wedge(a, hodge_star(m, a));
    CHECK(top.components()[0] ==
          doctest::Approx(inner_product(m, a, a) * m.sqrt_det()).epsilon(1e-10));
  }
  // orthonormal frame: form norm equals the plain coefficient norm
  auto e = MetricAtPoint::euclidean(4);
  auto a = random_form(4, 2);
  CHECK(form_norm(e, a) == doctest::Approx(a.euclidean_norm()));
}

TEST_CASE("flux round trip recovers the vector for every metric and dimension") {
  for (int n = 2; n <= 5; ++n)
    for (double orient : {1.0, -1.0}) {
      auto m = random_metric(n, orient);
      Vec B = random_vec(n);
      auto beta = interior_product(B, volume_form(m));
      Vec back = vector_from_flux(m, beta);
      CHECK((back - B).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("star of the contraction of the volume form is the flat up to dimension sign") {
  // star(iota_B mu) = (-1)^{n-1} B_flat, uniformly in the metric
  for (int n = 2; n <= 5; ++n) {
    auto m = random_metric(n);
    Vec B = random_vec(n);
    auto lhs = hodge_star(m, interior_product(B, volume_form(m)));
    double sign = (n % 2 == 1) ? 1.0 : -1.0;
    CHECK(max_diff(lhs, flat(m, B) * sign) < 1e-10);
  }
}

TEST_CASE("wedge powers and two-form rank") {
  AlternatingForm w(4, 2);
  w.set_coeff({0, 1}, 1.0);
  w.set_coeff({2, 3}, 1.0);
  CHECK(rank_of_two_form(w) == 2);
  auto w2 = wedge_power(w, 2);
  CHECK(w2.coeff({0, 1, 2, 3}) == doctest::Approx(2.0));
  AlternatingForm single(4, 2);
  single.set_coeff({0, 1}, 3.0);
  CHECK(rank_of_two_form(single) == 1);
  CHECK(rank_of_two_form(AlternatingForm(4, 2)) == 0);
  AlternatingForm nearly(4, 2);
  nearly.set_coeff({0, 1}, 1.0);
  nearly.set_coeff({2, 3}, 1e-12);
  CHECK(rank_of_two_form(nearly) == 1);
  CHECK(rank_of_two_form(nearly, 1e-14) == 2);
  CHECK(max_diff(wedge_power(w, 0), AlternatingForm(4, 0, Vec::Ones(1))) == 0.0);
}

TEST_CASE("pullback: functorial, determinant on top forms, transpose on one-forms") {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {2, 3, 4}) {
    Mat J(n, n), K(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        J(i, j) = u(rng);
        K(i, j) = u(rng);
      }
    auto a = random_form(n, 1);
    CHECK((pullback(J, a).components() - J.transpose() * a.components())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    auto top = random_form(n, n);
    CHECK(pullback(J, top).components()[0] ==
          doctest::Approx(J.determinant() * top.components()[0]).epsilon(1e-10));
    // (F o G)^* = G^* o F^*
    auto two = random_form(n, n > 2 ? 2 : 1);
    CHECK(max_diff(pullback(J * K, two), pullback(K, pullback(J, two))) < 1e-10);
  }
  // rectangular: restrict a 2-form in R^3 to a surface chart
  Mat J(3, 2);
  J << 1, 0, 0, 1, 2, -1;  // z = 2x - y
  AlternatingForm dxdz = AlternatingForm::basis(3, {0, 2});
  auto pb = pullback(J, dxdz);
  // dx ^ dz pulled back: dx ^ (2dx - dy) = -dx^dy
  CHECK(pb.coeff({0, 1}) == doctest::Approx(-1.0));
}

TEST_CASE("wedge against the pullback respects naturality") {
  // J^*(a ^ b) = J^*a ^ J^*b
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat J(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) J(i, j) = u(rng);
  auto a = random_form(4, 1), b = random_form(4, 2);
  CHECK(max_diff(pullback(J, wedge(a, b)), wedge(pullback(J, a), pullback(J, b))) <
        1e-10);
}

TEST_CASE("form accessors validate their index tuples") {
  AlternatingForm a(3, 2);
  a.set_coeff({0, 2}, 2.5);
  CHECK(a.coeff({0, 2}) == 2.5);
  CHECK_THROWS_AS(a.coeff({2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(a.coeff({0, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(AlternatingForm::basis(3, {1, 1}), std::invalid_argument);
}
