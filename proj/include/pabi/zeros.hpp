#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "pabi/integrate.hpp"
#include "pabi/system.hpp"

namespace pabi {

// Annular sector in the t-plane bounded by arcs at t_inner and t_outer and
// the two cut edges arg t = +/- pi*epsilon.  Zeros of I inside it are counted
// by the argument principle over its positively oriented boundary.
struct Contour {
  double t_outer = 0;
  double t_inner = 0;
  double epsilon = 0;
};

// Radius translation between the slow timescale s and t: t = (epsilon*s)^epsilon.
double t_of_s(double epsilon, double s);

struct ZeroBracket {
  double t = 0;     // bracket midpoint
  double width = 0; // final bracket width
};

enum class ZeroMethod { Scan, Winding };

struct ZeroReport {
  std::vector<ZeroBracket> zeros;
  int count = 0;
  ZeroMethod method = ZeroMethod::Scan;
  bool identically_zero = false;
  int skipped = 0; // grid points whose evaluation failed
};

// Pluggable evaluator of t -> I(t); lets callers route evaluations through a
// cache.  When empty, pseudo_abelian_I on the given system is used.
using IntegralEval = std::function<IntegralResult(double)>;

struct ScanSample {
  double t = 0;
  Complex value{0, 0};
  double err = 0;
};

// Sign scan of t -> I(t) on [t_lo, t_hi] with grid_n points; sign changes are
// bisected to width <= 1e-8 * t_center.  Values below 10x the quadrature error
// estimate count as indeterminate sign: brackets touching them widen, and a
// grid that is indeterminate everywhere reports identically_zero.  The grid
// evaluations (not bisection probes) are appended to *samples when given.
ZeroReport scan_zeros(const DarbouxSystem& sys, double t_lo, double t_hi, int grid_n,
                      const TraceOptions& topts = {}, const IntegralEval& eval = {},
                      std::vector<ScanSample>* samples = nullptr);

// Zeros of I inside the contour, as the winding of I over the boundary.
// Every step's argument increment is kept below pi/2 by adaptive subdivision
// and the final sum must round to an integer with slack < pi/4; violations
// and samples indistinguishable from zero throw.
int winding_number(const DarbouxSystem& sys, const Contour& contour, int samples_per_side,
                   const TraceOptions& topts = {});

// Zeros of Im I(t e^{i pi eps}) on [t_lo, t_hi] by sign scan, cross-checked
// against the figure-eight period through Im I = Im J / 2.
int im_zero_count_on_segment(const DarbouxSystem& sys, double t_lo, double t_hi, int grid_n,
                             const TraceOptions& topts = {});

struct ExponentFit {
  double beta = 0;    // slope of log|I| against log t
  double quality = 0; // rms residual of the fit; a log factor degrades it
};

// Least-squares estimate of the leading growth exponent from samples of
// (t, I(t)) with t -> 0; at least 4 samples, all nonzero.
ExponentFit estimate_leading_exponent(const std::vector<std::pair<double, Complex>>& samples);

} // namespace pabi
