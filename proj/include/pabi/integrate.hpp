#pragma once

#include "pabi/system.hpp"
#include "pabi/trace.hpp"

namespace pabi {

struct IntegralResult {
  Complex value{0, 0};
  double error_estimate = 0; // quadrature truncation + seam bound
  long nodes = 0;            // integrand evaluations at accepted nodes
};

// d of a polynomial potential: dF = F_x dx + F_y dy.
OneForm exact_differential(const BivarPoly& F);

// eta = P0*M*dF, the form whose normalized integrand eta/(P0*M) is exactly dF.
// Closed-cycle integrals of it vanish, which makes these exactness probes for
// the whole quadrature pipeline.
OneForm exactness_probe(const DarbouxSystem& sys, const BivarPoly& F);

// Line integral of a polynomial 1-form over a closed cycle lying on a leaf.
// Every edge is re-projected onto the leaf before quadrature: the chord is
// corrected along a fixed transversal so the nodes satisfy log H = leaf value
// to ~1e-13, and the correction's derivative enters the pulled-back integrand.
// Edges split recursively until the embedded Gauss rule pair agrees.
IntegralResult integrate_form(const DarbouxSystem& sys, const Cycle& cycle, const OneForm& form);

// integrate_form plus the real-axis reality averaging described below: when
// the imaginary part sits inside the error bar it is dropped as roundoff.
// Lets callers integrate cached or externally built real ovals the same way
// pseudo_abelian_I does.
IntegralResult integrate_real_oval(const DarbouxSystem& sys, const Cycle& oval,
                                   const OneForm& form);

// I(t): the system's perturbation form integrated over the oval through leaf t.
// For real t the value is real; it is averaged with its mirror image (the
// conjugate) whenever the imaginary part sits inside the error bar, so
// downstream sign scans see no phantom drift.
IntegralResult pseudo_abelian_I(const DarbouxSystem& sys, double t,
                                const TraceOptions& topts = {});

// I along an explicit t-path: traces the oval at the path's base point (which
// must be a positive real t inside the period annulus), transports it leafwise
// along the path, and integrates at the endpoint leaf.
IntegralResult pseudo_abelian_I_path(const DarbouxSystem& sys, const TPath& path,
                                     const TraceOptions& topts = {});

// Shorthand for the arc path t -> t e^{i phase}.
IntegralResult pseudo_abelian_I_phase(const DarbouxSystem& sys, double t, double phase,
                                      const TraceOptions& topts = {});

struct FigureEight {
  Cycle cycle; // closed eight-shaped cycle on the leaf of t
  double rho;  // radius of the two P0-plane circles actually used
};

// Builds the figure-eight cycle supported near the oval of t: one full
// counterclockwise P0-circle based at the oval's right crossing of P0 = rho,
// the top arc continued on the once-wound branch, one clockwise circle based
// at the left crossing, and the plain top arc back.  The two circles fail to
// close individually (the leaf is branched over P0 = 0 for noninteger
// exponent) and close jointly because the net P0-winding is zero; that joint
// closure is certified numerically and reported as closure_residual.
// rho = 0 picks the radius automatically and retries along a ladder.
FigureEight figure_eight_cycle(const DarbouxSystem& sys, double t, double rho = 0,
                               const TraceOptions& topts = {});

// J(t): the perturbation form integrated over the figure-eight cycle.
IntegralResult figure_eight_J(const DarbouxSystem& sys, double t,
                              const TraceOptions& topts = {});

struct VariationCheck {
  Complex i_plus{0, 0};  // I(t e^{+i pi eps})
  Complex i_minus{0, 0}; // I(t e^{-i pi eps})
  Complex j{0, 0};       // figure-eight period J(t)
  double residual_abs = 0;
  double residual_rel = 0; // residual_abs / max(|j|, 1e-9)
  double error_estimate = 0;
};

// Checks the variation identity I(te^{i pi eps}) - I(te^{-i pi eps}) = J(t):
// the jump of I across the positive-t branch cut equals the figure-eight
// period of the same form.
VariationCheck variation_check(const DarbouxSystem& sys, double t,
                               const TraceOptions& topts = {});

} // namespace pabi
