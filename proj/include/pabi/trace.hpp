#pragma once

#include <vector>

#include "pabi/system.hpp"

namespace pabi {

struct TraceOptions {
  double step_init = 0.01;
  double step_min = 1e-7;
  double step_max = 0.02;
  double corrector_tol = 1e-12;
  int max_points = 60000;
};

// Closed loop on a leaf {log H = leaf_log_t}.  Points are stored in traversal
// order; the loop closes with the implicit edge from the last point back to
// the first, whose length is closure_residual.
struct Cycle {
  std::vector<CPoint> points;
  Complex leaf_log_t{0, 0};
  int orientation = +1; // sign of the shoelace area of the real projection
  double closure_residual = 0;
  double drift_residual = 0;
};

// Path in the t-plane, parameterized through log t so branches never enter.
// Legs: Radial adds to Re log t, Arc adds to Im log t (swept angle).
struct TPath {
  struct Leg {
    enum class Kind { Radial, Arc } kind;
    double delta;
  };
  Complex start_log_t{0, 0};
  std::vector<Leg> legs;

  static TPath constant(double t) { return TPath{Complex(std::log(t), 0), {}}; }
  static TPath radial(double t_from, double t_to) {
    return TPath{Complex(std::log(t_from), 0),
                 {{Leg::Kind::Radial, std::log(t_to) - std::log(t_from)}}};
  }
  static TPath arc(double t_from, double dtheta) {
    return TPath{Complex(std::log(t_from), 0), {{Leg::Kind::Arc, dtheta}}};
  }
  TPath& then_radial(double factor_log) {
    legs.push_back({Leg::Kind::Radial, factor_log});
    return *this;
  }
  TPath& then_arc(double dtheta) {
    legs.push_back({Leg::Kind::Arc, dtheta});
    return *this;
  }
  Complex end_log_t() const {
    Complex c = start_log_t;
    for (const auto& l : legs)
      c += l.kind == Leg::Kind::Radial ? Complex(l.delta, 0) : Complex(0, l.delta);
    return c;
  }
};

// Trace the real oval of {H_eps = t} inside the nest.  Counterclockwise for
// the dual field orientation; closure via the Poincare section through the
// seed ray from the center.
Cycle trace_oval(const DarbouxSystem& sys, double t, const TraceOptions& opts = {});

struct LeafPointState {
  CPoint point;
  Windings windings;
};

enum class TransverseMode { Gradient, FixX };

// Continue a single leaf point along a t-path.  Branch windings are updated
// by continuity; steps halve until each factor turns less than a quarter turn
// and the first Newton contraction ratio certifies convergence.
LeafPointState continue_leaf_point(const DarbouxSystem& sys, LeafPointState start,
                                   const TPath& path,
                                   TransverseMode mode = TransverseMode::Gradient,
                                   double tol = 1e-12);

// Lift every vertex of a cycle along the path (shared adaptive step).
Cycle lift_cycle(const DarbouxSystem& sys, const Cycle& cycle, const TPath& path,
                 double tol = 1e-12);

// Max deviation of continuously tracked log H from leaf_log_t over the cycle.
double leaf_drift(const DarbouxSystem& sys, const std::vector<CPoint>& points,
                  Complex leaf_log_t);

// Signed shoelace area of the real projection.
double area_shoelace(const Cycle& cycle);

std::string cycle_to_json_string(const Cycle& cycle);
Cycle cycle_from_json_string(const std::string& text);

} // namespace pabi
