#pragma once

// Field-line tracing and along-the-line diagnostics.
//
// Lines are integrated with classical RK4 at a fixed step, either in the
// field's own parameter or reparametrized to unit metric speed.  Points are
// stored unwrapped (periodic axes accumulate), and wrapped only for
// evaluation, so winding and closure are measurable.  On constrained domains
// (spheres) every stage output is projected back to the constraint set.
// Integration stops early, with the reason recorded, when the line leaves a
// non-periodic domain, the speed drops below the stagnation cutoff, or the
// field throws.

#include <string>
#include <vector>

#include "fluxforms/domain.hpp"
#include "fluxforms/fields.hpp"

namespace fluxforms {

struct TraceOptions {
  double step = 1e-3;       // parameter (or arclength) increment per RK4 step
  double length = 10.0;     // total parameter span to integrate
  bool arclength = false;   // advance by B/|B|_g instead of B
  double min_speed = 1e-10;
  long max_steps = 4000000;
};

struct Polyline {
  Mat points;     // rows: samples, unwrapped coordinates
  Vec parameter;  // cumulative parameter per sample
  bool complete = true;
  std::string stop_reason;  // "exit", "stagnation", "evaluation" when early
  long count() const { return points.rows(); }
};

Polyline trace_flowline(const SmoothField& B, const MetricField& g,
                        const ChartDomain& domain, const Vec& seed,
                        const TraceOptions& opts = {});

// Per-interior-sample geodesic defect: the metric norm of the component of
// the covariant acceleration orthogonal to the velocity, divided by the
// squared speed (so the measure is reparametrization-invariant).  Second
// differences assume the uniform spacing produced by trace_flowline.
Vec geodesic_defect_along(const Polyline& line, const MetricField& g);

struct SectionHit {
  double parameter = 0.0;
  Vec point;  // unwrapped
};

// Crossings of the plane {x_axis = level} in the increasing direction,
// located exactly on each bracketing segment.  Periodic axes are compared
// through the half-open fundamental interval of the domain.
std::vector<SectionHit> poincare_section(const Polyline& line, int axis, double level,
                                         const ChartDomain& domain);

}  // namespace fluxforms
