#include "fluxforms/exterior.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fluxforms {

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

const std::vector<std::vector<int>>& multi_indices(int n, int k) {
  static std::map<std::pair<int, int>, std::vector<std::vector<int>>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, k);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  std::vector<std::vector<int>> out;
  if (k == 0) {
    out.push_back({});
  } else if (k <= n) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      out.push_back(idx);
      int t = k - 1;
      while (t >= 0 && idx[t] == n - k + t) --t;
      if (t < 0) break;
      ++idx[t];
      for (int j = t + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return cache.emplace(key, std::move(out)).first->second;
}

int multi_index_rank(int n, const std::vector<int>& idx) {
  const int k = static_cast<int>(idx.size());
  long rank = 0;
  int prev = -1;
  for (int t = 0; t < k; ++t) {
    for (int v = prev + 1; v < idx[t]; ++v)
      rank += binomial(n - 1 - v, k - 1 - t);
    prev = idx[t];
  }
  return static_cast<int>(rank);
}

int merge_sign(const std::vector<int>& a, const std::vector<int>& b) {
  int inversions = 0;
  for (int x : a) {
    for (int y : b) {
      if (x == y) return 0;
      if (x > y) ++inversions;
    }
  }
  return (inversions % 2 == 0) ? 1 : -1;
}

std::vector<int> complement_of(int n, const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(n - idx.size());
  size_t t = 0;
  for (int v = 0; v < n; ++v) {
    if (t < idx.size() && idx[t] == v) {
      ++t;
    } else {
      out.push_back(v);
    }
  }
  return out;
}

int complement_sign(int n, const std::vector<int>& idx) {
  return merge_sign(idx, complement_of(n, idx));
}

MetricAtPoint::MetricAtPoint(Mat m, double orient) : g(std::move(m)), orientation(orient) {
  if (g.rows() != g.cols()) throw std::invalid_argument("metric matrix must be square");
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + g.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("metric matrix must be symmetric");
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("metric matrix must be positive definite");
}

void MetricAtPoint::ensure_cache() const {
  if (cached_) return;
  inv_ = g.inverse();
  det_ = g.determinant();
  cached_ = true;
}

const Mat& MetricAtPoint::inverse() const {
  ensure_cache();
  return inv_;
}

double MetricAtPoint::det() const {
  ensure_cache();
  return det_;
}

double MetricAtPoint::sqrt_det() const { return std::sqrt(det()); }

MetricAtPoint MetricAtPoint::euclidean(int n) {
  return MetricAtPoint(Mat::Identity(n, n));
}

AlternatingForm::AlternatingForm(int dimension, int degree)
    : n_(dimension), k_(degree), c_(Vec::Zero(binomial(dimension, degree))) {
  if (degree < 0 || degree > dimension)
    throw std::invalid_argument("form degree out of range");
}

AlternatingForm::AlternatingForm(int dimension, int degree, Vec components)
    : n_(dimension), k_(degree), c_(std::move(components)) {
  if (degree < 0 || degree > dimension)
    throw std::invalid_argument("form degree out of range");
  if (c_.size() != binomial(dimension, degree))
    throw std::invalid_argument("component count does not match C(n,k)");
}

AlternatingForm AlternatingForm::basis(int dimension, std::initializer_list<int> idx) {
  return basis(dimension, std::vector<int>(idx));
}

AlternatingForm AlternatingForm::basis(int dimension, const std::vector<int>& idx) {
  AlternatingForm f(dimension, static_cast<int>(idx.size()));
  f.set_coeff(idx, 1.0);
  return f;
}

double AlternatingForm::coeff(const std::vector<int>& idx) const {
  for (size_t i = 1; i < idx.size(); ++i)
    if (idx[i - 1] >= idx[i]) throw std::invalid_argument("index tuple must be strictly increasing");
  if (static_cast<int>(idx.size()) != k_) throw std::invalid_argument("index tuple has wrong length");
  return c_[multi_index_rank(n_, idx)];
}

void AlternatingForm::set_coeff(const std::vector<int>& idx, double v) {
  for (size_t i = 1; i < idx.size(); ++i)
    if (idx[i - 1] >= idx[i]) throw std::invalid_argument("index tuple must be strictly increasing");
  if (static_cast<int>(idx.size()) != k_) throw std::invalid_argument("index tuple has wrong length");
  c_[multi_index_rank(n_, idx)] = v;
}

AlternatingForm AlternatingForm::operator+(const AlternatingForm& o) const {
  if (n_ != o.n_ || k_ != o.k_) throw std::invalid_argument("form shape mismatch");
  return AlternatingForm(n_, k_, c_ + o.c_);
}

AlternatingForm AlternatingForm::operator-(const AlternatingForm& o) const {
  if (n_ != o.n_ || k_ != o.k_) throw std::invalid_argument("form shape mismatch");
  return AlternatingForm(n_, k_, c_ - o.c_);
}

AlternatingForm AlternatingForm::operator*(double s) const {
  return AlternatingForm(n_, k_, c_ * s);
}

AlternatingForm& AlternatingForm::operator+=(const AlternatingForm& o) {
  if (n_ != o.n_ || k_ != o.k_) throw std::invalid_argument("form shape mismatch");
  c_ += o.c_;
  return *this;
}

AlternatingForm& AlternatingForm::operator*=(double s) {
  c_ *= s;
  return *this;
}

AlternatingForm operator*(double s, const AlternatingForm& a) { return a * s; }

AlternatingForm wedge(const AlternatingForm& a, const AlternatingForm& b) {
  const int n = a.dimension();
  if (n != b.dimension()) throw std::invalid_argument("wedge: dimension mismatch");
  const int ka = a.degree(), kb = b.degree();
  if (ka + kb > n) throw std::invalid_argument("wedge: degree overflow");
  AlternatingForm out(n, ka + kb);
  const auto& ia = multi_indices(n, ka);
  const auto& ib = multi_indices(n, kb);
  std::vector<int> merged(ka + kb);
  for (size_t p = 0; p < ia.size(); ++p) {
    const double ca = a.components()[p];
    if (ca == 0.0) continue;
    for (size_t q = 0; q < ib.size(); ++q) {
      const double cb = b.components()[q];
      if (cb == 0.0) continue;
      const int s = merge_sign(ia[p], ib[q]);
      if (s == 0) continue;
      std::merge(ia[p].begin(), ia[p].end(), ib[q].begin(), ib[q].end(), merged.begin());
      out.components()[multi_index_rank(n, merged)] += s * ca * cb;
    }
  }
  return out;
}

namespace {

// Gram matrix of the inverse metric on k-forms:
// G[I][J] = det( g^{-1}[I_a, J_b] )_{a,b}.
Mat k_form_gram(const MetricAtPoint& m, int k) {
  const int n = m.dimension();
  const auto& idx = multi_indices(n, k);
  const Mat& gi = m.inverse();
  const int sz = static_cast<int>(idx.size());
  Mat G(sz, sz);
  Mat sub(k, k);
  for (int p = 0; p < sz; ++p) {
    for (int q = 0; q < sz; ++q) {
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) sub(a, b) = gi(idx[p][a], idx[q][b]);
      G(p, q) = (k == 0) ? 1.0 : sub.determinant();
    }
  }
  return G;
}

}  // namespace

AlternatingForm hodge_star(const MetricAtPoint& m, const AlternatingForm& a) {
  const int n = m.dimension();
  if (a.dimension() != n) throw std::invalid_argument("hodge_star: dimension mismatch");
  const int k = a.degree();
  AlternatingForm out(n, n - k);
  const Vec raised = k_form_gram(m, k) * a.components();
  const auto& idx = multi_indices(n, k);
  const double scale = m.orientation * m.sqrt_det();
  for (size_t p = 0; p < idx.size(); ++p) {
    if (raised[p] == 0.0) continue;
    const auto comp = complement_of(n, idx[p]);
    out.components()[multi_index_rank(n, comp)] +=
        scale * merge_sign(idx[p], comp) * raised[p];
  }
  return out;
}

AlternatingForm interior_product(const Vec& v, const AlternatingForm& a) {
  const int n = a.dimension();
  if (v.size() != n) throw std::invalid_argument("interior_product: dimension mismatch");
  const int k = a.degree();
  if (k == 0) throw std::invalid_argument("interior_product: cannot contract a 0-form");
  AlternatingForm out(n, k - 1);
  const auto& idx = multi_indices(n, k);
  std::vector<int> rest(k - 1);
  for (size_t p = 0; p < idx.size(); ++p) {
    const double c = a.components()[p];
    if (c == 0.0) continue;
    for (int t = 0; t < k; ++t) {
      const double vi = v[idx[p][t]];
      if (vi == 0.0) continue;
      int r = 0;
      for (int s = 0; s < k; ++s)
        if (s != t) rest[r++] = idx[p][s];
      const double sign = (t % 2 == 0) ? 1.0 : -1.0;
      out.components()[multi_index_rank(n, rest)] += sign * vi * c;
    }
  }
  return out;
}

AlternatingForm flat(const MetricAtPoint& m, const Vec& v) {
  if (v.size() != m.dimension()) throw std::invalid_argument("flat: dimension mismatch");
  return AlternatingForm(m.dimension(), 1, m.g * v);
}

Vec sharp(const MetricAtPoint& m, const AlternatingForm& a) {
  if (a.degree() != 1) throw std::invalid_argument("sharp: expects a 1-form");
  if (a.dimension() != m.dimension()) throw std::invalid_argument("sharp: dimension mismatch");
  return m.inverse() * a.components();
}

AlternatingForm volume_form(const MetricAtPoint& m) {
  const int n = m.dimension();
  AlternatingForm mu(n, n);
  mu.components()[0] = m.orientation * m.sqrt_det();
  return mu;
}

double inner_product(const MetricAtPoint& m, const AlternatingForm& a,
                     const AlternatingForm& b) {
  if (a.degree() != b.degree()) throw std::invalid_argument("inner_product: degree mismatch");
  const AlternatingForm top = wedge(a, hodge_star(m, b));
  return hodge_star(m, top).components()[0];
}

double form_norm(const MetricAtPoint& m, const AlternatingForm& a) {
  return std::sqrt(std::max(0.0, inner_product(m, a, a)));
}

Vec vector_from_flux(const MetricAtPoint& m, const AlternatingForm& beta) {
  const int n = m.dimension();
  if (beta.degree() != n - 1)
    throw std::invalid_argument("vector_from_flux: expects an (n-1)-form");
  // iota_B mu has component sigma*sqrt(det g)*(-1)^{i-1} B^i on dx^{complement of i}.
  Vec B(n);
  const double scale = m.orientation * m.sqrt_det();
  for (int i = 0; i < n; ++i) {
    std::vector<int> omit;
    omit.reserve(n - 1);
    for (int v = 0; v < n; ++v)
      if (v != i) omit.push_back(v);
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    B[i] = sign * beta.components()[multi_index_rank(n, omit)] / scale;
  }
  return B;
}

AlternatingForm wedge_power(const AlternatingForm& a, int p) {
  if (a.degree() != 2) throw std::invalid_argument("wedge_power: expects a 2-form");
  if (p < 0) throw std::invalid_argument("wedge_power: negative power");
  AlternatingForm acc(a.dimension(), 0);
  acc.components()[0] = 1.0;
  for (int i = 0; i < p; ++i) acc = wedge(acc, a);
  return acc;
}

int rank_of_two_form(const AlternatingForm& a, double tol) {
  if (a.degree() != 2) throw std::invalid_argument("rank_of_two_form: expects a 2-form");
  const int n = a.dimension();
  const double na = a.euclidean_norm();
  if (na == 0.0) return 0;
  int rank = 0;
  AlternatingForm power = a;  // a^{rank+1}
  double norm_prev = 1.0;     // |a^rank|
  while (true) {
    const double norm_cur = power.euclidean_norm();
    if (norm_cur < tol * norm_prev * na) break;
    ++rank;
    if (2 * (rank + 1) > n) break;  // a^{rank+1} would exceed top degree
    power = wedge(power, a);
    norm_prev = norm_cur;
  }
  return rank;
}

AlternatingForm pullback(const Mat& J, const AlternatingForm& w) {
  const int n_target = static_cast<int>(J.rows());
  const int n_chart = static_cast<int>(J.cols());
  if (w.dimension() != n_target) throw std::invalid_argument("pullback: dimension mismatch");
  const int k = w.degree();
  if (k > n_chart) throw std::invalid_argument("pullback: degree exceeds chart dimension");
  AlternatingForm out(n_chart, k);
  const auto& target_idx = multi_indices(n_target, k);
  const auto& chart_idx = multi_indices(n_chart, k);
  Mat minor(k, k);
  for (size_t q = 0; q < chart_idx.size(); ++q) {
    double acc = 0.0;
    for (size_t p = 0; p < target_idx.size(); ++p) {
      const double c = w.components()[p];
      if (c == 0.0) continue;
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) minor(a, b) = J(target_idx[p][a], chart_idx[q][b]);
      acc += c * ((k == 0) ? 1.0 : minor.determinant());
    }
    out.components()[q] = acc;
  }
  return out;
}

}  // namespace fluxforms
