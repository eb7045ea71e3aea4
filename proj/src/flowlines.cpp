#include "fluxforms/flowlines.hpp"

#include <cmath>
#include <stdexcept>

namespace fluxforms {

namespace {

struct Stagnation {};

double metric_speed(const MetricField& g, const Vec& p, const Vec& v) {
  if (g.on_sphere()) return v.norm();
  Mat G = g.at(p).g;
  return std::sqrt(v.dot(Vec(G * v)));
}

}  // namespace

Polyline trace_flowline(const SmoothField& B, const MetricField& g,
                        const ChartDomain& domain, const Vec& seed,
                        const TraceOptions& opts) {
  if (opts.step <= 0.0 || opts.length <= 0.0)
    throw std::invalid_argument("trace_flowline: step and length must be positive");
  Vec p = seed;
  if (domain.constrained()) p = domain.project(p);
  if (!domain.contains(domain.wrap(p)))
    throw std::invalid_argument("trace_flowline: seed outside the domain");

  auto velocity = [&](const Vec& q) {
    Vec qe = domain.wrap(q);
    Vec v = B.value(qe);
    if (g.on_sphere()) v = g.projector(qe) * v;
    if (opts.arclength) {
      double speed = metric_speed(g, qe, v);
      if (speed < opts.min_speed) throw Stagnation{};
      v /= speed;
    }
    return v;
  };

  std::vector<Vec> pts{p};
  std::vector<double> par{0.0};
  Polyline out;
  double s = 0.0;
  for (long step = 0; step < opts.max_steps && s < opts.length - 1e-15; ++step) {
    double h = std::min(opts.step, opts.length - s);
    Vec pn;
    try {
      Vec k1 = velocity(p);
      Vec k2 = velocity(p + 0.5 * h * k1);
      Vec k3 = velocity(p + 0.5 * h * k2);
      Vec k4 = velocity(p + h * k3);
      pn = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!opts.arclength) {
        double speed = metric_speed(g, domain.wrap(p), k1);
        if (speed < opts.min_speed) throw Stagnation{};
      }
    } catch (const Stagnation&) {
      out.complete = false;
      out.stop_reason = "stagnation";
      break;
    } catch (const std::exception&) {
      out.complete = false;
      out.stop_reason = "evaluation";
      break;
    }
    if (domain.constrained()) pn = domain.project(pn);
    if (!domain.contains(domain.wrap(pn))) {
      out.complete = false;
      out.stop_reason = "exit";
      break;
    }
    p = pn;
    s += h;
    pts.push_back(p);
    par.push_back(s);
  }
  if (out.complete && s < opts.length - 1e-15) {
    out.complete = false;
    out.stop_reason = "step limit";
  }
  out.points = Mat::Zero(static_cast<long>(pts.size()), seed.size());
  out.parameter = Vec::Zero(static_cast<long>(par.size()));
  for (size_t i = 0; i < pts.size(); ++i) {
    out.points.row(static_cast<long>(i)) = pts[i].transpose();
    out.parameter[static_cast<long>(i)] = par[i];
  }
  return out;
}

Vec geodesic_defect_along(const Polyline& line, const MetricField& g) {
  long m = line.count();
  if (m < 3) return Vec();
  Vec out = Vec::Zero(m - 2);
  for (long i = 1; i + 1 < m; ++i) {
    double h1 = line.parameter[i] - line.parameter[i - 1];
    double h2 = line.parameter[i + 1] - line.parameter[i];
    Vec pm = line.points.row(i - 1), p0 = line.points.row(i), pp = line.points.row(i + 1);
    double denom = h1 * h2 * (h1 + h2);
    Vec vel = (h1 * h1 * pp + (h2 * h2 - h1 * h1) * p0 - h2 * h2 * pm) / denom;
    Vec acc = 2.0 * (h1 * pp - (h1 + h2) * p0 + h2 * pm) / denom;
    Vec d;
    Mat G;
    if (g.on_sphere()) {
      d = g.projector(p0) * acc;
      G = Mat::Identity(p0.size(), p0.size());
    } else {
      Christoffel gamma = christoffel(g, p0);
      d = acc + gamma.contract(vel, vel);
      G = g.at(p0).g;
    }
    double speed2 = vel.dot(Vec(G * vel));
    if (speed2 <= 0.0) continue;
    Vec Gv = G * vel;
    d -= (d.dot(Gv) / speed2) * vel;
    out[i - 1] = std::sqrt(d.dot(Vec(G * d))) / speed2;
  }
  return out;
}

std::vector<SectionHit> poincare_section(const Polyline& line, int axis, double level,
                                         const ChartDomain& domain) {
  std::vector<SectionHit> hits;
  if (axis < 0 || axis >= domain.dimension())
    throw std::invalid_argument("poincare_section: axis out of range");
  bool per = domain.kind() != ChartDomain::Kind::Sphere && domain.periodic(axis);
  double L = per ? domain.hi(axis) - domain.lo(axis) : 0.0;
  for (long i = 0; i + 1 < line.count(); ++i) {
    double x0 = line.points(i, axis), x1 = line.points(i + 1, axis);
    auto emit = [&](double t) {
      SectionHit hit;
      hit.parameter = line.parameter[i] + t * (line.parameter[i + 1] - line.parameter[i]);
      hit.point = (1.0 - t) * line.points.row(i).transpose() +
                  t * line.points.row(i + 1).transpose();
      hits.push_back(std::move(hit));
    };
    if (!per) {
      if (x0 < level && x1 >= level) emit((level - x0) / (x1 - x0));
    } else if (x1 > x0) {
      // Upward crossings of the lifted planes level + k L.
      long k0 = static_cast<long>(std::floor((x0 - level) / L));
      long k1 = static_cast<long>(std::floor((x1 - level) / L));
      for (long k = k0 + 1; k <= k1; ++k) {
        double plane = level + static_cast<double>(k) * L;
        emit((plane - x0) / (x1 - x0));
      }
    }
  }
  return hits;
}

}  // namespace fluxforms
