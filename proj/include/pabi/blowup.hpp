#pragma once

#include <array>
#include <vector>

#include "pabi/system.hpp"

namespace pabi {

// Weighted blow-up of the family space (x, y, eps) at the origin.  The
// default weights give the parabola-preserving blow-up of the quadratic
// turning point; unit weights serve the planar contact example.
struct Weights {
  int wx = 1;
  int wy = 2;
  int we = 2;
};

// Affine charts of the weighted projective plane.  Chart coordinate order
// (c1, c2, c3):
//   U1 = (Y1, E1, t1)   x = t^wx,      y = Y1 t^wy,  eps = E1 t^we
//   U2 = (X2, E2, t2)   x = X2 t^wx,   y = t^wy,     eps = E2 t^we
//   U3 = (X3, Y3, t3)   x = X3 t^wx,   y = Y3 t^wy,  eps = t^we
// The exceptional divisor is {t = 0} in every chart.
enum class Chart { U1, U2, U3 };

struct ChartPoint {
  Chart chart = Chart::U3;
  std::array<double, 3> c{0, 0, 0};
};

// 2-form in chart coordinates: coefficients on dc1^dc2, dc1^dc3, dc2^dc3.
struct TwoForm3 {
  TriPoly c12, c13, c23;
};

struct Pullback {
  TwoForm3 form;         // pull-back of sigma divided by t^divisor_order
  int divisor_order = 0; // common power of t extracted from all coefficients
};

struct Transition {
  ChartPoint point;
  // Even weights make the charts a double cover of a neighborhood of the
  // exceptional divisor; the principal-root convention then lands on one of
  // the two sheets and deck_sign records which (blow-downs agree either way).
  int deck_sign = 1;
};

// The chart substitution (x, y, eps) at a chart point.
std::array<double, 3> blow_down(const ChartPoint& p, const Weights& w = {});

// Re-coordinatizes a point into the target chart through the weighted action,
// principal roots on the positive axis.  Throws std::domain_error when the
// pivot coordinate vanishes, or is negative where a genuine root is required.
Transition chart_transition(const ChartPoint& p, Chart target, const Weights& w = {});

// Jacobian d(target coords)/d(source coords) of the same re-coordinatization,
// for transporting forms between charts.
std::array<std::array<double, 3>, 3> transition_jacobian(const ChartPoint& p, Chart target,
                                                         const Weights& w = {});

// Pull-back of sigma = omega_eps ^ d(eps) to a chart, exact arithmetic, with
// the highest common power of t removed from the three coefficients.
Pullback pullback_sigma(const DarbouxSystem& sys, Chart chart, const Weights& w = {});

// Common zeros of the three coefficients inside the box
// [box[0],box[1]] x [box[2],box[3]] x [box[4],box[5]], found by an n^3 grid
// scan polished with a Gauss-Newton iteration.  Nearby zeros merge; clusters
// that extend along a direction (curve samples) carry curve = true.
struct ZeroCluster {
  std::array<double, 3> rep; // sample nearest the cluster centroid
  std::vector<std::array<double, 3>> samples;
  bool curve = false;
};
std::vector<ZeroCluster> singular_locus(const TwoForm3& form, const std::array<double, 6>& box,
                                        int n);

// First integral s = (1 - t^2 Y)^(1/t^2) (Y - X^2) of the lifted foliation in
// chart U3, evaluated through the removable limit e^{-Y} (Y - X^2) at t = 0.
// Throws std::domain_error off the real branch (1 - t^2 Y <= 0).
double eval_s_integral(const ChartPoint& p);

} // namespace pabi
