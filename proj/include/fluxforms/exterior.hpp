#pragma once

// Pointwise exterior algebra over a chart: alternating k-forms stored as
// dense coefficient vectors on lexicographically ordered strictly increasing
// multi-indices, plus the metric-dependent operators (Hodge star, musical
// isomorphisms, interior product) built on top of them.

#include <Eigen/Dense>

#include <initializer_list>
#include <vector>

namespace fluxforms {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

long binomial(int n, int k);

// All strictly increasing k-tuples from {0,..,n-1} in lexicographic order.
const std::vector<std::vector<int>>& multi_indices(int n, int k);

// Lexicographic rank of a strictly increasing tuple.
int multi_index_rank(int n, const std::vector<int>& idx);

// Sign of the permutation sorting the concatenation of two disjoint strictly
// increasing tuples; 0 if they share an element.
int merge_sign(const std::vector<int>& a, const std::vector<int>& b);

// Sign of the permutation (a, complement-of-a) relative to (0,..,n-1).
int complement_sign(int n, const std::vector<int>& idx);

std::vector<int> complement_of(int n, const std::vector<int>& idx);

// Metric tensor evaluated at one point of a chart. `orientation` is +1/-1 and
// fixes the sign of the volume form relative to dx^0 ^ ... ^ dx^{n-1}.
struct MetricAtPoint {
  Mat g;
  double orientation = 1.0;

  MetricAtPoint() = default;
  MetricAtPoint(Mat m, double orient = 1.0);

  int dimension() const { return static_cast<int>(g.rows()); }
  const Mat& inverse() const;
  double det() const;
  double sqrt_det() const;

  static MetricAtPoint euclidean(int n);

 private:
  mutable Mat inv_;
  mutable double det_ = 0.0;
  mutable bool cached_ = false;
  void ensure_cache() const;
};

class AlternatingForm {
 public:
  AlternatingForm() = default;
  AlternatingForm(int dimension, int degree);
  AlternatingForm(int dimension, int degree, Vec components);

  // dx^{idx[0]} ^ ... ^ dx^{idx[k-1]} for a strictly increasing index tuple.
  static AlternatingForm basis(int dimension, std::initializer_list<int> idx);
  static AlternatingForm basis(int dimension, const std::vector<int>& idx);

  int dimension() const { return n_; }
  int degree() const { return k_; }
  const Vec& components() const { return c_; }
  Vec& components() { return c_; }

  double coeff(const std::vector<int>& idx) const;
  void set_coeff(const std::vector<int>& idx, double v);

  // Plain 2-norm of the coefficient vector (metric-free).
  double euclidean_norm() const { return c_.norm(); }

  AlternatingForm operator+(const AlternatingForm& o) const;
  AlternatingForm operator-(const AlternatingForm& o) const;
  AlternatingForm operator*(double s) const;
  AlternatingForm& operator+=(const AlternatingForm& o);
  AlternatingForm& operator*=(double s);

 private:
  int n_ = 0;
  int k_ = 0;
  Vec c_;
};

AlternatingForm operator*(double s, const AlternatingForm& a);

// a ^ b.  Throws std::invalid_argument on dimension mismatch or if
// deg(a)+deg(b) > n.
AlternatingForm wedge(const AlternatingForm& a, const AlternatingForm& b);

// Hodge star with respect to the metric: a k-form to an (n-k)-form.
AlternatingForm hodge_star(const MetricAtPoint& m, const AlternatingForm& a);

// iota_v a: contraction with a tangent vector in the first slot.
AlternatingForm interior_product(const Vec& v, const AlternatingForm& a);

// Musical isomorphisms.
AlternatingForm flat(const MetricAtPoint& m, const Vec& v);
Vec sharp(const MetricAtPoint& m, const AlternatingForm& a);

// Metric volume form: orientation * sqrt(det g) dx^0 ^ .. ^ dx^{n-1}.
AlternatingForm volume_form(const MetricAtPoint& m);

// <a,b> computed as star(a ^ star b); symmetric positive pairing.
double inner_product(const MetricAtPoint& m, const AlternatingForm& a,
                     const AlternatingForm& b);

// |a| = sqrt(star(a ^ star a)), clamped at zero against roundoff.
double form_norm(const MetricAtPoint& m, const AlternatingForm& a);

// Solves iota_B mu = beta for B given an (n-1)-form beta.
Vec vector_from_flux(const MetricAtPoint& m, const AlternatingForm& beta);

// a^p for a 2-form (p >= 0; p = 0 gives the constant 1 as a 0-form).
AlternatingForm wedge_power(const AlternatingForm& a, int p);

// Largest r with |a^r| significant: smallest p such that
// |a^{p+1}| < tol * |a^p| * |a| reported as the rank; metric-free.
int rank_of_two_form(const AlternatingForm& a, double tol = 1e-9);

// Pullback under a linear map with matrix J (target components from chart
// ones): (pullback(J, w))_I = sum_J w_J det(J[J rows, I cols]).  J has
// dimension(target) rows and dimension(result) columns.
AlternatingForm pullback(const Mat& J, const AlternatingForm& w);

}  // namespace fluxforms
