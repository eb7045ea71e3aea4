#include "fluxforms/dec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fluxforms/domain.hpp"
#include "fluxforms/exterior.hpp"

namespace fluxforms {

namespace {

int find_axis_position(const std::vector<int>& set, int axis) {
  auto it = std::find(set.begin(), set.end(), axis);
  return it == set.end() ? -1 : static_cast<int>(it - set.begin());
}

std::vector<int> erase_axis(const std::vector<int>& set, int axis) {
  std::vector<int> out;
  out.reserve(set.size() - 1);
  for (int a : set)
    if (a != axis) out.push_back(a);
  return out;
}

}  // namespace

double Complex::Axis::extent(int edge) const {
  int nv = vertex_count();
  if (periodic && edge == nv - 1) return period + vertices[0] - vertices[nv - 1];
  return vertices[edge + 1] - vertices[edge];
}

Complex Complex::box_grid(const Vec& lo, const Vec& hi, const std::vector<int>& res,
                          const std::vector<bool>& periodic) {
  int n = static_cast<int>(res.size());
  if (lo.size() != n || hi.size() != n)
    throw std::invalid_argument("box_grid: lo/hi/res dimensions disagree");
  if (!periodic.empty() && static_cast<int>(periodic.size()) != n)
    throw std::invalid_argument("box_grid: periodic flag count mismatch");
  Complex K;
  K.n_ = n;
  for (int a = 0; a < n; ++a) {
    if (res[a] < 1 || hi[a] <= lo[a]) throw std::invalid_argument("box_grid: bad axis");
    bool per = periodic.empty() ? false : periodic[a];
    Axis ax;
    ax.periodic = per;
    ax.period = per ? hi[a] - lo[a] : 0.0;
    int nv = per ? res[a] : res[a] + 1;
    ax.vertices.resize(nv);
    double h = (hi[a] - lo[a]) / res[a];
    for (int i = 0; i < nv; ++i) ax.vertices[i] = lo[a] + i * h;
    K.axes_.push_back(std::move(ax));
  }
  K.descriptor_ = {{"kind", "box"},
                   {"lo", std::vector<double>(lo.data(), lo.data() + n)},
                   {"hi", std::vector<double>(hi.data(), hi.data() + n)},
                   {"res", res}};
  if (!periodic.empty()) {
    std::vector<int> per(periodic.begin(), periodic.end());
    K.descriptor_["periodic"] = per;
  }
  K.build();
  return K;
}

Complex Complex::torus_grid(int n, double length, int res) {
  Vec lo = Vec::Zero(n), hi = Vec::Constant(n, length);
  std::vector<int> r(n, res);
  std::vector<bool> per(n, true);
  Complex K = box_grid(lo, hi, r, per);
  K.descriptor_ = {{"kind", "torus"}, {"n", n}, {"length", length}, {"res", res}};
  return K;
}

Complex Complex::polar_annulus(double r0, double r1, int radial_cells,
                               int angular_cells) {
  if (!(r0 > 0.0 && r1 > r0) || radial_cells < 1 || angular_cells < 3)
    throw std::invalid_argument("polar_annulus: bad parameters");
  Vec lo(2), hi(2);
  lo << r0, 0.0;
  hi << r1, 2.0 * M_PI;
  Complex K = box_grid(lo, hi, {radial_cells, angular_cells}, {false, true});
  K.chart_map_ = [](const Vec& p) {
    Vec out(2);
    out << p[0] * std::cos(p[1]), p[0] * std::sin(p[1]);
    return out;
  };
  K.chart_jac_ = [](const Vec& p) {
    Mat J(2, 2);
    J << std::cos(p[1]), -p[0] * std::sin(p[1]), std::sin(p[1]), p[0] * std::cos(p[1]);
    return J;
  };
  K.metric_diag_ = [](const Vec& p) {
    Vec d(2);
    d << 1.0, p[0] * p[0];
    return d;
  };
  K.descriptor_ = {{"kind", "polar_annulus"},
                   {"r0", r0},
                   {"r1", r1},
                   {"radial_cells", radial_cells},
                   {"angular_cells", angular_cells}};
  K.build();
  return K;
}

Complex Complex::masked_box(const Vec& lo, const Vec& hi, const std::vector<int>& res,
                            std::function<bool(const Vec&)> keep) {
  Complex K = box_grid(lo, hi, res);
  K.keep_ = std::move(keep);
  K.descriptor_["kind"] = "masked_box";
  K.build();
  return K;
}

Complex Complex::annulus_masked(double r0, double r1, int res) {
  if (!(r0 > 0.0 && r1 > r0)) throw std::invalid_argument("annulus_masked: bad radii");
  Vec lo = Vec::Constant(2, -r1), hi = Vec::Constant(2, r1);
  Complex K = masked_box(lo, hi, {res, res}, [r0, r1](const Vec& c) {
    double r = c.norm();
    return r >= r0 && r <= r1;
  });
  K.descriptor_ = {{"kind", "annulus_masked"}, {"r0", r0}, {"r1", r1}, {"res", res}};
  return K;
}

long Complex::cell_count(int k) const {
  if (k < 0 || k > n_) return 0;
  return static_cast<long>(deg_[k].full_of_active.size());
}

int Complex::euler_characteristic() const {
  long chi = 0;
  for (int k = 0; k <= n_; ++k) chi += (k % 2 == 0 ? 1 : -1) * cell_count(k);
  return static_cast<int>(chi);
}

const SparseMat& Complex::d(int k) const {
  if (k < 0 || k >= n_) throw std::invalid_argument("d: degree out of range");
  return deg_[k].d;
}

bool Complex::interior(int k, long cell) const { return deg_[k].interior[cell] != 0; }

const std::vector<int>& Complex::axes_of(int k, long cell) const {
  long full = deg_[k].full_of_active[cell];
  int block;
  std::vector<int> pos;
  decode_full(k, full, block, pos);
  return deg_[k].sets[block];
}

int Complex::missing_axis(long face) const {
  const std::vector<int>& set = axes_of(n_ - 1, face);
  int expect = 0;
  for (int a : set) {
    if (a != expect) return expect;
    ++expect;
  }
  return expect;
}

void Complex::cell_interval(int k, long cell, int axis, double& lo, double& len) const {
  long full = deg_[k].full_of_active[cell];
  int block;
  std::vector<int> pos;
  decode_full(k, full, block, pos);
  if (find_axis_position(deg_[k].sets[block], axis) < 0)
    throw std::invalid_argument("cell_interval: cell does not span axis");
  lo = axes_[axis].vertex_coord(pos[axis]);
  len = axes_[axis].extent(pos[axis]);
}

long Complex::full_index(int k, int block, const std::vector<int>& pos) const {
  const std::vector<int>& set = deg_[k].sets[block];
  long idx = 0;
  for (int a = 0; a < n_; ++a) {
    bool on_edge = find_axis_position(set, a) >= 0;
    int dim = on_edge ? axes_[a].edge_count() : axes_[a].vertex_count();
    idx = idx * dim + pos[a];
  }
  return deg_[k].block_offset[block] + idx;
}

void Complex::decode_full(int k, long full, int& block, std::vector<int>& pos) const {
  const DegreeData& D = deg_[k];
  block = static_cast<int>(std::upper_bound(D.block_offset.begin(), D.block_offset.end(),
                                            full) -
                           D.block_offset.begin()) -
          1;
  long rem = full - D.block_offset[block];
  const std::vector<int>& set = D.sets[block];
  pos.assign(n_, 0);
  for (int a = n_ - 1; a >= 0; --a) {
    bool on_edge = find_axis_position(set, a) >= 0;
    int dim = on_edge ? axes_[a].edge_count() : axes_[a].vertex_count();
    pos[a] = static_cast<int>(rem % dim);
    rem /= dim;
  }
}

bool Complex::cell_active_full(int k, long full) const {
  return deg_[k].active_of_full[full] >= 0;
}

Vec Complex::chart_center_full(int k, long full) const {
  int block;
  std::vector<int> pos;
  decode_full(k, full, block, pos);
  const std::vector<int>& set = deg_[k].sets[block];
  Vec c(n_);
  for (int a = 0; a < n_; ++a) {
    if (find_axis_position(set, a) >= 0)
      c[a] = axes_[a].vertex_coord(pos[a]) + 0.5 * axes_[a].extent(pos[a]);
    else
      c[a] = axes_[a].vertex_coord(pos[a]);
  }
  return c;
}

Vec Complex::chart_center(int k, long cell) const {
  return chart_center_full(k, deg_[k].full_of_active[cell]);
}

Vec Complex::physical_center(int k, long cell) const {
  return physical_point(chart_center(k, cell));
}

Vec Complex::physical_point(const Vec& chart) const {
  return chart_map_ ? chart_map_(chart) : chart;
}

Mat Complex::chart_jacobian(const Vec& chart) const {
  return chart_jac_ ? chart_jac_(chart) : Mat(Mat::Identity(n_, n_));
}

Vec Complex::metric_diag_at(const Vec& chart_point) const {
  return metric_diag_ ? metric_diag_(chart_point) : Vec::Ones(n_);
}

double Complex::primal_volume(int k, long cell) const { return deg_[k].primal_vol[cell]; }
double Complex::dual_volume(int k, long cell) const { return deg_[k].dual_vol[cell]; }
double Complex::dual_coord_volume(int k, long cell) const {
  return deg_[k].dual_coord_vol[cell];
}
double Complex::hodge_weight(int k, long cell) const {
  return deg_[k].dual_vol[cell] / deg_[k].primal_vol[cell];
}
double Complex::mass_weight(long face) const { return deg_[n_ - 1].dual_vol[face]; }

Complex Complex::with_metric_scale(std::function<double(const Vec&)> e2u) const {
  Complex K = *this;
  std::function<Vec(const Vec&)> base = metric_diag_;
  int n = n_;
  K.metric_diag_ = [base, e2u, n](const Vec& p) {
    Vec d = base ? base(p) : Vec::Ones(n);
    return Vec(d * e2u(p));
  };
  K.descriptor_["metric_scaled"] = true;
  K.build();
  return K;
}

std::vector<long> Complex::cell_corners(long cell) const {
  long full = deg_[n_].full_of_active[cell];
  int block;
  std::vector<int> pos;
  decode_full(n_, full, block, pos);
  std::vector<long> out;
  out.reserve(1 << n_);
  std::vector<int> vpos(n_);
  for (int corner = 0; corner < (1 << n_); ++corner) {
    for (int a = 0; a < n_; ++a) {
      int s = (corner >> (n_ - 1 - a)) & 1;
      int v = pos[a] + s;
      if (axes_[a].periodic) v %= axes_[a].vertex_count();
      vpos[a] = v;
    }
    long vfull = full_index(0, 0, vpos);
    out.push_back(deg_[0].active_of_full[vfull]);
  }
  return out;
}

Complex Complex::from_descriptor(const nlohmann::json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (j.value("metric_scaled", false))
    throw std::invalid_argument("from_descriptor: rescaled complexes do not round-trip");
  if (kind == "box") {
    std::vector<double> lo = j.at("lo"), hi = j.at("hi");
    std::vector<int> res = j.at("res");
    std::vector<bool> per;
    if (j.contains("periodic"))
      for (int v : j.at("periodic").get<std::vector<int>>()) per.push_back(v != 0);
    Vec l = Eigen::Map<const Vec>(lo.data(), lo.size());
    Vec h = Eigen::Map<const Vec>(hi.data(), hi.size());
    return box_grid(l, h, res, per);
  }
  if (kind == "torus")
    return torus_grid(j.at("n").get<int>(), j.at("length").get<double>(),
                      j.at("res").get<int>());
  if (kind == "polar_annulus")
    return polar_annulus(j.at("r0").get<double>(), j.at("r1").get<double>(),
                         j.at("radial_cells").get<int>(),
                         j.at("angular_cells").get<int>());
  if (kind == "annulus_masked")
    return annulus_masked(j.at("r0").get<double>(), j.at("r1").get<double>(),
                          j.at("res").get<int>());
  throw std::invalid_argument("from_descriptor: unknown kind " + kind);
}

void Complex::build() {
  deg_.assign(n_ + 1, DegreeData{});
  boundary_faces_.clear();
  for (int k = 0; k <= n_; ++k) {
    DegreeData& D = deg_[k];
    D.sets = multi_indices(n_, k);
    D.block_offset.clear();
    long off = 0;
    for (const std::vector<int>& set : D.sets) {
      D.block_offset.push_back(off);
      long count = 1;
      for (int a = 0; a < n_; ++a)
        count *= find_axis_position(set, a) >= 0 ? axes_[a].edge_count()
                                                 : axes_[a].vertex_count();
      off += count;
    }
    D.full_count = off;
    D.active_of_full.assign(off, -1);
  }

  // Active n-cells, then the closure of each.
  DegreeData& top = deg_[n_];
  for (long full = 0; full < top.full_count; ++full) {
    if (keep_ && !keep_(chart_center_full(n_, full))) continue;
    top.active_of_full[full] = 1;
  }
  std::vector<int> pos, fpos(n_);
  for (long full = 0; full < top.full_count; ++full) {
    if (top.active_of_full[full] < 0) continue;
    int block;
    decode_full(n_, full, block, pos);
    for (int k = 0; k < n_; ++k) {
      DegreeData& D = deg_[k];
      for (int b = 0; b < static_cast<int>(D.sets.size()); ++b) {
        const std::vector<int>& set = D.sets[b];
        for (int corner = 0; corner < (1 << (n_ - k)); ++corner) {
          int bit = 0;
          for (int a = 0; a < n_; ++a) {
            if (find_axis_position(set, a) >= 0) {
              fpos[a] = pos[a];
            } else {
              int s = (corner >> bit) & 1;
              ++bit;
              int v = pos[a] + s;
              if (axes_[a].periodic) v %= axes_[a].vertex_count();
              fpos[a] = v;
            }
          }
          D.active_of_full[full_index(k, b, fpos)] = 1;
        }
      }
    }
  }
  for (int k = 0; k <= n_; ++k) {
    DegreeData& D = deg_[k];
    D.full_of_active.clear();
    for (long full = 0; full < D.full_count; ++full) {
      if (D.active_of_full[full] >= 0) {
        D.active_of_full[full] = static_cast<long>(D.full_of_active.size());
        D.full_of_active.push_back(full);
      }
    }
  }

  // Volumes, dual extents, interior flags via incident-quadrant counting.
  for (int k = 0; k <= n_; ++k) {
    DegreeData& D = deg_[k];
    long na = static_cast<long>(D.full_of_active.size());
    D.interior.assign(na, 0);
    D.primal_vol.assign(na, 0.0);
    D.dual_vol.assign(na, 0.0);
    D.dual_coord_vol.assign(na, 0.0);
    int co = n_ - k;
    for (long c = 0; c < na; ++c) {
      long full = D.full_of_active[c];
      int block;
      decode_full(k, full, block, pos);
      const std::vector<int>& set = D.sets[block];
      Vec center = chart_center_full(k, full);
      Vec md = metric_diag_at(center);
      double pvol = 1.0;
      for (int a : set) pvol *= axes_[a].extent(pos[a]) * std::sqrt(md[a]);
      D.primal_vol[c] = pvol;
      std::vector<int> off_axes;
      for (int a = 0; a < n_; ++a)
        if (find_axis_position(set, a) < 0) off_axes.push_back(a);
      double dualc = 0.0;
      int active_quadrants = 0;
      std::vector<int> cpos(n_);
      for (int q = 0; q < (1 << co); ++q) {
        bool valid = true;
        double piece = 1.0;
        for (int a = 0; a < n_; ++a) cpos[a] = pos[a];
        for (int t = 0; t < co; ++t) {
          int a = off_axes[t];
          int side = (q >> t) & 1;  // 0: cell below the vertex, 1: above
          int j = pos[a] - 1 + side;
          if (axes_[a].periodic) {
            j = (j + axes_[a].edge_count()) % axes_[a].edge_count();
          } else if (j < 0 || j >= axes_[a].edge_count()) {
            valid = false;
            break;
          }
          cpos[a] = j;
          piece *= 0.5 * axes_[a].extent(j);
        }
        if (!valid) continue;
        if (!cell_active_full(n_, full_index(n_, 0, cpos))) continue;
        ++active_quadrants;
        dualc += piece;
      }
      D.dual_coord_vol[c] = dualc;
      double dv = dualc;
      for (int a : off_axes) dv *= std::sqrt(md[a]);
      D.dual_vol[c] = dv;
      D.interior[c] = active_quadrants == (1 << co) ? 1 : 0;
    }
  }

  // Coboundaries.
  for (int k = 0; k < n_; ++k) {
    DegreeData& D = deg_[k];
    DegreeData& up = deg_[k + 1];
    std::vector<Eigen::Triplet<double>> trip;
    long nup = static_cast<long>(up.full_of_active.size());
    for (long c = 0; c < nup; ++c) {
      long full = up.full_of_active[c];
      int block;
      decode_full(k + 1, full, block, pos);
      const std::vector<int>& set = up.sets[block];
      for (int t = 0; t < static_cast<int>(set.size()); ++t) {
        int a = set[t];
        std::vector<int> sub = erase_axis(set, a);
        int fb = 0;
        for (; fb < static_cast<int>(D.sets.size()); ++fb)
          if (D.sets[fb] == sub) break;
        double top_sign = (t % 2 == 0) ? 1.0 : -1.0;
        for (int side = 0; side < 2; ++side) {
          fpos = pos;
          int v = pos[a] + side;
          if (axes_[a].periodic) v %= axes_[a].vertex_count();
          fpos[a] = v;
          long ffull = full_index(k, fb, fpos);
          long fid = D.active_of_full[ffull];
          if (fid < 0) throw std::logic_error("complex: face of active cell inactive");
          trip.emplace_back(c, fid, side == 1 ? top_sign : -top_sign);
        }
      }
    }
    D.d.resize(nup, static_cast<long>(D.full_of_active.size()));
    D.d.setFromTriplets(trip.begin(), trip.end());
    D.d.makeCompressed();
  }
  for (int k = 0; k + 1 < n_; ++k) {
    SparseMat dd = deg_[k + 1].d * deg_[k].d;
    double worst = 0.0;
    for (int i = 0; i < dd.outerSize(); ++i)
      for (SparseMat::InnerIterator it(dd, i); it; ++it)
        worst = std::max(worst, std::abs(it.value()));
    if (worst > 0.0) throw std::logic_error("complex: d o d != 0");
  }

  for (long f = 0; f < cell_count(n_ - 1); ++f)
    if (!deg_[n_ - 1].interior[f]) boundary_faces_.push_back(f);
}

// ---------------------------------------------------------------------------

Cochain sample_to_cochain(const SmoothField& field, const Complex& K, int degree,
                          int gauss_nodes) {
  int n = K.dimension();
  if (degree < 0 || degree > n)
    throw std::invalid_argument("sample_to_cochain: bad degree");
  if (gauss_nodes < 1) throw std::invalid_argument("sample_to_cochain: bad rule");
  Cochain out;
  out.degree = degree;
  out.values = Vec::Zero(K.cell_count(degree));
  if (degree == 0) {
    for (long v = 0; v < K.cell_count(0); ++v)
      out.values[v] = field.scalar_value(K.physical_center(0, v));
    return out;
  }
  if (field.kind() != FieldKind::OneForm && field.kind() != FieldKind::Form)
    throw std::invalid_argument("sample_to_cochain: field is not a differential form");
  if (field.degree() != degree)
    throw std::invalid_argument("sample_to_cochain: form degree mismatch");
  std::vector<double> gx, gw;
  gauss_legendre_rule(gauss_nodes, gx, gw);
  bool identity = K.identity_chart();
  std::vector<int> node(degree, 0);
  std::vector<double> lo(degree), len(degree);
  for (long c = 0; c < K.cell_count(degree); ++c) {
    const std::vector<int>& set = K.axes_of(degree, c);
    Vec q = K.chart_center(degree, c);
    for (int t = 0; t < degree; ++t) K.cell_interval(degree, c, set[t], lo[t], len[t]);
    std::fill(node.begin(), node.end(), 0);
    double acc = 0.0;
    while (true) {
      double wt = 1.0;
      for (int t = 0; t < degree; ++t) {
        q[set[t]] = lo[t] + 0.5 * len[t] * (1.0 + gx[node[t]]);
        wt *= 0.5 * len[t] * gw[node[t]];
      }
      AlternatingForm w = field.form_value(K.physical_point(q));
      if (!identity) w = pullback(K.chart_jacobian(q), w);
      acc += wt * w.coeff(set);
      int t = degree - 1;
      for (; t >= 0; --t) {
        if (++node[t] < gauss_nodes) break;
        node[t] = 0;
      }
      if (t < 0) break;
    }
    out.values[c] = acc;
  }
  return out;
}

Cochain sample_to_dual_one_cochain(const SmoothField& field, const Complex& K) {
  int n = K.dimension();
  if (field.kind() != FieldKind::OneForm)
    throw std::invalid_argument("sample_to_dual_one_cochain: need a one-form");
  Cochain out;
  out.degree = n - 1;
  out.values = Vec::Zero(K.cell_count(n - 1));
  bool identity = K.identity_chart();
  for (long f = 0; f < K.cell_count(n - 1); ++f) {
    int a = K.missing_axis(f);
    Vec q = K.chart_center(n - 1, f);
    AlternatingForm w = field.form_value(K.physical_point(q));
    if (!identity) w = pullback(K.chart_jacobian(q), w);
    double sgn = (a % 2 == 0) ? 1.0 : -1.0;
    out.values[f] = sgn * w.components()[a] * K.dual_coord_volume(n - 1, f);
  }
  return out;
}

Cochain flux_hodge(const Complex& K, const Cochain& beta) {
  int n = K.dimension();
  if (beta.degree != n - 1 || beta.values.size() != K.cell_count(n - 1))
    throw std::invalid_argument("flux_hodge: degree mismatch");
  double sgn = (n % 2 == 1) ? 1.0 : -1.0;
  Cochain out = beta;
  for (long f = 0; f < K.cell_count(n - 1); ++f)
    out.values[f] = sgn * K.hodge_weight(n - 1, f) * beta.values[f];
  return out;
}

Cochain unit_normalization(const Complex& K, const Cochain& beta, double supp_rel) {
  int n = K.dimension();
  if (beta.degree != n - 1 || beta.values.size() != K.cell_count(n - 1))
    throw std::invalid_argument("unit_normalization: degree mismatch");
  double cutoff = supp_rel * beta.values.cwiseAbs().maxCoeff();
  Cochain out;
  out.degree = n - 1;
  out.values = Vec::Zero(beta.values.size());
  for (long f = 0; f < K.cell_count(n - 1); ++f) {
    double b = beta.values[f];
    if (std::abs(b) > cutoff) out.values[f] = (b > 0 ? 1.0 : -1.0) * K.mass_weight(f);
  }
  return out;
}

CellSamples flux_vectors(const Complex& K, const Cochain& beta) {
  int n = K.dimension();
  if (beta.degree != n - 1 || beta.values.size() != K.cell_count(n - 1))
    throw std::invalid_argument("flux_vectors: degree mismatch");
  // Gather face values per cell through the coboundary structure: build, once,
  // the list of (cell, face) incidences from the column-major d(n-1).
  long ncells = K.cell_count(n);
  std::vector<std::vector<long>> faces_of(ncells);
  const SparseMat& D = K.d(n - 1);
  for (int col = 0; col < D.outerSize(); ++col)
    for (SparseMat::InnerIterator it(D, col); it; ++it)
      faces_of[it.row()].push_back(col);
  CellSamples out;
  out.vectors = Mat::Zero(ncells, n);
  out.norms = Vec::Zero(ncells);
  const std::vector<std::vector<int>>& sets = multi_indices(n, n - 1);
  for (long c = 0; c < ncells; ++c) {
    Vec comp_sum = Vec::Zero(n);  // indexed by missing axis
    Vec comp_cnt = Vec::Zero(n);
    for (long f : faces_of[c]) {
      int a = K.missing_axis(f);
      Vec md = K.metric_diag_at(K.chart_center(n - 1, f));
      double metric_fac = 1.0;
      for (int b = 0; b < n; ++b)
        if (b != a) metric_fac *= std::sqrt(md[b]);
      double coord_area = K.primal_volume(n - 1, f) / metric_fac;
      comp_sum[a] += beta.values[f] / coord_area;
      comp_cnt[a] += 1.0;
    }
    AlternatingForm w(n, n - 1);
    for (int a = 0; a < n; ++a) {
      if (comp_cnt[a] == 0.0) continue;
      // multi-index omitting a sits at rank (n-1-a) in reverse-lexicographic
      // complement order; look it up directly.
      const std::vector<int>* which = nullptr;
      for (const std::vector<int>& s : sets)
        if (find_axis_position(s, a) < 0) {
          which = &s;
          break;
        }
      w.set_coeff(*which, comp_sum[a] / comp_cnt[a]);
    }
    Vec center = K.chart_center(n, c);
    Vec md = K.metric_diag_at(center);
    MetricAtPoint m(Mat(md.asDiagonal()), 1.0);
    Vec B = vector_from_flux(m, w);
    out.cells.push_back(c);
    out.vectors.row(c) = B.transpose();
    out.norms[c] = std::sqrt(B.dot(Vec(md.asDiagonal() * B)));
  }
  return out;
}

ContractionResidual contract_dual_one_cochain(const Complex& K, const Cochain& beta,
                                              const Cochain& v) {
  int n = K.dimension();
  if (v.degree != n - 1 || v.values.size() != K.cell_count(n - 1))
    throw std::invalid_argument("contract_dual_one_cochain: degree mismatch");
  Vec dual2 = K.d(n - 2).transpose() * v.values;

  // Pointwise 2-form coefficients at interior (n-2)-cells.
  long nlow = K.cell_count(n - 2);
  Vec omega = Vec::Zero(nlow);
  std::vector<char> omega_ok(nlow, 0);
  for (long e = 0; e < nlow; ++e) {
    if (!K.interior(n - 2, e)) continue;
    const std::vector<int>& set = K.axes_of(n - 2, e);
    std::vector<int> missing;
    for (int a = 0; a < n; ++a)
      if (find_axis_position(set, a) < 0) missing.push_back(a);
    double s = merge_sign(set, missing);
    omega[e] = s * dual2[e] / K.dual_coord_volume(n - 2, e);
    omega_ok[e] = 1;
  }

  // (n-2)-cells in the closure of each n-cell, via two coboundary hops.
  long ncells = K.cell_count(n);
  std::vector<std::vector<long>> faces_of(ncells);
  {
    const SparseMat& D = K.d(n - 1);
    for (int col = 0; col < D.outerSize(); ++col)
      for (SparseMat::InnerIterator it(D, col); it; ++it)
        faces_of[it.row()].push_back(col);
  }
  std::vector<std::vector<long>> lows_of_face(K.cell_count(n - 1));
  {
    const SparseMat& D = K.d(n - 2);
    for (int col = 0; col < D.outerSize(); ++col)
      for (SparseMat::InnerIterator it(D, col); it; ++it)
        lows_of_face[it.row()].push_back(col);
  }

  CellSamples B = flux_vectors(K, beta);
  const std::vector<std::vector<int>>& pair_sets = multi_indices(n, 2);

  ContractionResidual out;
  std::vector<Vec> rows;
  std::vector<double> norms;
  std::vector<long> lows;
  for (long c = 0; c < ncells; ++c) {
    lows.clear();
    for (long f : faces_of[c])
      for (long e : lows_of_face[f]) lows.push_back(e);
    std::sort(lows.begin(), lows.end());
    lows.erase(std::unique(lows.begin(), lows.end()), lows.end());
    bool full = true;
    for (long e : lows)
      if (!omega_ok[e]) {
        full = false;
        break;
      }
    if (!full) continue;
    AlternatingForm w(n, 2);
    for (const std::vector<int>& ab : pair_sets) {
      double sum = 0.0;
      int cnt = 0;
      for (long e : lows) {
        const std::vector<int>& set = K.axes_of(n - 2, e);
        if (find_axis_position(set, ab[0]) >= 0 || find_axis_position(set, ab[1]) >= 0)
          continue;
        sum += omega[e];
        ++cnt;
      }
      if (cnt > 0) w.set_coeff(ab, sum / cnt);
    }
    Vec Bc = B.vectors.row(c).transpose();
    AlternatingForm res = interior_product(Bc, w);
    Vec center = K.chart_center(n, c);
    Vec md = K.metric_diag_at(center);
    double norm2 = 0.0;
    for (int a = 0; a < n; ++a)
      norm2 += res.components()[a] * res.components()[a] / md[a];
    out.cells.push_back(c);
    rows.push_back(res.components());
    norms.push_back(std::sqrt(norm2));
    out.max_norm = std::max(out.max_norm, norms.back());
  }
  out.components = Mat::Zero(static_cast<long>(rows.size()), n);
  out.norms = Vec::Zero(static_cast<long>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    out.components.row(static_cast<long>(i)) = rows[i].transpose();
    out.norms[static_cast<long>(i)] = norms[i];
  }
  return out;
}

nlohmann::json cochain_to_json(const Cochain& c) {
  std::vector<double> vals(c.values.data(), c.values.data() + c.values.size());
  return nlohmann::json{{"degree", c.degree}, {"values", vals}};
}

Cochain cochain_from_json(const nlohmann::json& j) {
  Cochain c;
  c.degree = j.at("degree").get<int>();
  std::vector<double> vals = j.at("values").get<std::vector<double>>();
  c.values = Eigen::Map<const Vec>(vals.data(), vals.size());
  return c;
}

}  // namespace fluxforms
