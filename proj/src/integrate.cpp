#include "pabi/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace pabi {


namespace {

const double kPi = 3.14159265358979323846;

struct FormD {
  BivarPolyD dx, dy;
};

FormD to_double_form(const OneForm& f) { return {to_double(f.dx), to_double(f.dy)}; }

Complex plain_dot(const CPoint& a, const CPoint& b) { return a.x() * b.x() + a.y() * b.y(); }

// Branch-continuous evaluation state: factor values and continuous arguments
// at the last committed point (factors first, P0 last).
struct WalkState {
  std::vector<Complex> vals;
  std::vector<double> args;
};

struct BranchEval {
  std::vector<Complex> vals;
  std::vector<double> args;
};

BranchEval branch_eval(const DarbouxSystem& sys, const WalkState& st, const CPoint& p) {
  BranchEval r;
  r.vals = factor_values(sys, p);
  r.args.resize(r.vals.size());
  for (std::size_t i = 0; i < r.vals.size(); ++i) {
    if (r.vals[i] == Complex(0)) throw LeafBoundaryError("factor vanishes on integration path");
    r.args[i] = st.args[i] + std::arg(r.vals[i] / st.vals[i]);
  }
  return r;
}

Complex branch_log_H(const DarbouxSystem& sys, const BranchEval& be) {
  Complex acc = 0;
  const auto& fs = sys.num().factors;
  for (std::size_t i = 0; i < fs.size(); ++i)
    acc += fs[i].a * Complex(std::log(std::abs(be.vals[i])), be.args[i]);
  acc += sys.epsilon() * Complex(std::log(std::abs(be.vals.back())), be.args.back());
  return acc;
}

WalkState walk_init(const DarbouxSystem& sys, const CPoint& p, Complex leaf) {
  WalkState st;
  st.vals = factor_values(sys, p);
  st.args.resize(st.vals.size());
  for (std::size_t i = 0; i < st.vals.size(); ++i) {
    if (st.vals[i] == Complex(0)) throw LeafBoundaryError("factor vanishes at cycle vertex");
    st.args[i] = std::arg(st.vals[i]);
  }
  // Integer winding fit so the branch matches the leaf at the first vertex.
  const std::size_t n = st.vals.size();
  auto weight = [&](std::size_t i) {
    return i + 1 < n ? sys.num().factors[i].a : sys.epsilon();
  };
  BranchEval be{st.vals, st.args};
  double im0 = (branch_log_H(sys, be) - leaf).imag();
  const int box = 3;
  std::vector<int> w(n, 0), best_w(n, 0);
  double best = std::abs(im0);
  std::function<void(std::size_t)> rec = [&](std::size_t idx) {
    if (idx == n) {
      double im = im0;
      for (std::size_t i = 0; i < n; ++i) im += 2 * kPi * weight(i) * w[i];
      if (std::abs(im) < best) {
        best = std::abs(im);
        best_w = w;
      }
      return;
    }
    for (int v = -box; v <= box; ++v) {
      w[idx] = v;
      rec(idx + 1);
    }
  };
  rec(0);
  for (std::size_t i = 0; i < n; ++i) st.args[i] += 2 * kPi * best_w[i];
  return st;
}

// Embedded Gauss-Legendre pair: nodes of the 8- and 16-point rules on [-1,1],
// merged and sorted so one sweep evaluates both rules.
struct QNode {
  double x, w8, w16;
};

const std::vector<QNode>& gauss_pair() {
  static const std::vector<QNode> nodes = [] {
    const double x8[] = {0.18343464249564980494, 0.52553240991632898582,
                         0.79666647741362673959, 0.96028985649753623168};
    const double w8[] = {0.36268378337836198297, 0.31370664587788728734,
                         0.22238103445337447054, 0.10122853629037625915};
    const double x16[] = {0.09501250983763744019, 0.28160355077925891323,
                          0.45801677765722738634, 0.61787624440264374845,
                          0.75540440835500303390, 0.86563120238783174388,
                          0.94457502307323257608, 0.98940093499164993260};
    const double w16[] = {0.18945061045506849629, 0.18260341504492358887,
                          0.16915651939500253819, 0.14959598881657673208,
                          0.12462897125553387205, 0.09515851168249278481,
                          0.06225352393864789286, 0.02715245941175409485};
    std::vector<QNode> v;
    for (int i = 0; i < 4; ++i) {
      v.push_back({-x8[i], w8[i], 0});
      v.push_back({+x8[i], w8[i], 0});
    }
    for (int i = 0; i < 8; ++i) {
      v.push_back({-x16[i], 0, w16[i]});
      v.push_back({+x16[i], 0, w16[i]});
    }
    std::sort(v.begin(), v.end(), [](const QNode& a, const QNode& b) { return a.x < b.x; });
    return v;
  }();
  return nodes;
}

struct EdgeOut {
  Complex val{0, 0};
  double err = 0;
  long nodes = 0;
};

struct EdgeContext {
  const DarbouxSystem& sys;
  const FormD& form;
  Complex leaf;
  double tol; // residual tolerance for on-leaf node solves
  // Absolute-coefficient copies of the tracked factors (same order as the
  // branch values: P_1..P_k then P_0), for estimating the cancellation floor.
  const std::vector<BivarPolyD>& mags;
};

BivarPolyD abs_coeffs(const BivarPolyD& p) {
  BivarPolyD r;
  for (const auto& [e, c] : p.terms()) r.add_term(e, std::abs(c));
  return r;
}

// Attainable relative precision of 1/(P0*M) at a node: each factor value
// carries absolute noise ~eps * P_hat(|x|,|y|) where P_hat has the absolute
// coefficients, so the relative noise of the product is the sum of the
// per-factor ratios.  Where an oval hugs the singular locus this floor
// dwarfs any fixed tolerance, and refinement past it is pure waste.
double noise_floor(const EdgeContext& cx, const CPoint& p, const std::vector<Complex>& vals) {
  std::array<double, 2> at{std::abs(p.x()), std::abs(p.y())};
  double s = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    double v = std::abs(vals[i]);
    if (v < 1e-300) return 1;
    s += cx.mags[i].eval(at) / v;
  }
  return std::numeric_limits<double>::epsilon() * s;
}

// Projects p onto the leaf along the minimal-norm direction, branch tracked
// against st.  On success commits the walk state at the projected point.
bool project_to_leaf(const EdgeContext& cx, WalkState& st, CPoint& p) {
  CPoint q = p;
  for (int it = 0; it < 12; ++it) {
    BranchEval be = branch_eval(cx.sys, st, q);
    Complex g1 = branch_log_H(cx.sys, be) - cx.leaf;
    CPoint g = grad_log_H(cx.sys, q);
    double g2 = std::norm(g.x()) + std::norm(g.y());
    if (g2 < 1e-300) return false;
    CPoint dq(-g1 * std::conj(g.x()) / g2, -g1 * std::conj(g.y()) / g2);
    // Residual-converged, or increment at the cancellation floor (see
    // edge_integral) -- both are as on-leaf as the arithmetic allows.
    if (std::abs(g1) <= cx.tol ||
        dq.norm() <= 8 * std::numeric_limits<double>::epsilon() * (1 + q.norm())) {
      for (std::size_t i = 0; i < be.args.size(); ++i)
        if (std::abs(be.args[i] - st.args[i]) > kPi / 2) return false;
      st.vals = std::move(be.vals);
      st.args = std::move(be.args);
      p = q;
      return true;
    }
    q += dq;
  }
  return false;
}

EdgeOut edge_integral(const EdgeContext& cx, const CPoint& b0, const CPoint& b1,
                      const WalkState& st0, int depth) {
  if (depth > 12)
    throw ConvergenceError("integrate_form: edge refinement exhausted (pole too close?)");
  const CPoint chord = b1 - b0;

  auto split = [&]() -> EdgeOut {
    CPoint mid = b0 + Complex(0.5) * chord;
    WalkState stm = st0;
    CPoint pm = mid;
    if (!project_to_leaf(cx, stm, pm)) {
      // keep the raw chord midpoint; the sub-edges project at a finer scale
      stm = st0;
      pm = mid;
      BranchEval be = branch_eval(cx.sys, stm, pm);
      stm.vals = std::move(be.vals);
      stm.args = std::move(be.args);
    }
    EdgeOut a = edge_integral(cx, b0, pm, st0, depth + 1);
    EdgeOut b = edge_integral(cx, pm, b1, stm, depth + 1);
    return {a.val + b.val, a.err + b.err, a.nodes + b.nodes};
  };

  // Transversal: conjugate gradient direction at the chord midpoint, which
  // maximizes |dG/dlambda| among unit directions.
  CPoint gm;
  try {
    gm = grad_log_H(cx.sys, b0 + Complex(0.5) * chord);
  } catch (const LeafBoundaryError&) {
    return split();
  }
  double gn = std::sqrt(std::norm(gm.x()) + std::norm(gm.y()));
  if (gn < 1e-150) return split();
  const CPoint u(std::conj(gm.x()) / gn, std::conj(gm.y()) / gn);

  WalkState wst = st0;
  Complex i8 = 0, i16 = 0;
  Complex lambda = 0;
  long used = 0;
  for (const QNode& nd : gauss_pair()) {
    const double s = (nd.x + 1) / 2; // map [-1,1] -> [0,1]
    const CPoint b(b0.x() + s * chord.x(), b0.y() + s * chord.y());
    CPoint p(b.x() + lambda * u.x(), b.y() + lambda * u.y());
    Complex g1;
    CPoint g;
    bool converged = false;
    Complex denom = 0;
    for (int it = 0; it < 10; ++it) {
      BranchEval be;
      try {
        be = branch_eval(cx.sys, wst, p);
      } catch (const LeafBoundaryError&) {
        return split();
      }
      g1 = branch_log_H(cx.sys, be) - cx.leaf;
      try {
        g = grad_log_H(cx.sys, p);
      } catch (const LeafBoundaryError&) {
        return split();
      }
      denom = plain_dot(g, u);
      double gsz = std::sqrt(std::norm(g.x()) + std::norm(g.y()));
      if (std::abs(denom) < 1e-12 * std::max(1.0, gsz)) return split();
      Complex d = -g1 / denom;
      // Accept on residual, or on a vanishing correction: close to the
      // singular locus cancellation floors the residual below any fixed tol.
      if (std::abs(g1) <= cx.tol ||
          std::abs(d) <= 8 * std::numeric_limits<double>::epsilon() * (1 + p.norm())) {
        // Branch sanity between consecutive nodes: no factor may turn a
        // quarter turn or swing half an e-fold in modulus, else the projection
        // hopped sheets and the edge must be refined.
        for (std::size_t i = 0; i < be.args.size(); ++i) {
          if (std::abs(be.args[i] - wst.args[i]) > kPi / 2) return split();
          if (std::abs(std::log(std::abs(be.vals[i] / wst.vals[i]))) > 0.5) return split();
        }
        wst.vals = std::move(be.vals);
        wst.args = std::move(be.args);
        converged = true;
        break;
      }
      lambda += d;
      p = CPoint(b.x() + lambda * u.x(), b.y() + lambda * u.y());
    }
    if (!converged) return split();

    std::array<Complex, 2> at{p.x(), p.y()};
    Complex lamp = -plain_dot(g, chord) / denom;
    CPoint dzeta(chord.x() + lamp * u.x(), chord.y() + lamp * u.y());
    // The integrand is eta normalized by P0*M; the node's branch values hold
    // every factor already (factors first, P0 last).
    Complex p0m = wst.vals.back();
    for (std::size_t i = 0; i + 1 < wst.vals.size(); ++i) p0m *= wst.vals[i];
    Complex f = (cx.form.dx.eval(at) * dzeta.x() + cx.form.dy.eval(at) * dzeta.y()) / p0m;
    i8 += nd.w8 / 2 * f; // /2: weights map from [-1,1] to [0,1]
    i16 += nd.w16 / 2 * f;
    ++used;
  }
  double err = std::abs(i16 - i8);
  // Accept at the rule's target accuracy, or at the cancellation floor of the
  // integrand over this edge -- whichever is looser.  The floor is sampled at
  // the edge ends; it varies slowly (the branch guard above caps the swing).
  double floor_rel = std::max(noise_floor(cx, b0, st0.vals), noise_floor(cx, b1, wst.vals));
  double tol_edge = std::max(1e-13 * (1 + std::abs(i16)), 8 * floor_rel * std::abs(i16));
  if (err > tol_edge && depth < 12) return split();
  return {i16, err, used};
}

} // namespace

OneForm exact_differential(const BivarPoly& F) {
  return OneForm{derivative(F, 0), derivative(F, 1)};
}

OneForm exactness_probe(const DarbouxSystem& sys, const BivarPoly& F) {
  BivarPoly p0m = sys.p0();
  for (const auto& f : sys.factors()) p0m = p0m * f.poly;
  return OneForm{p0m * derivative(F, 0), p0m * derivative(F, 1)};
}

IntegralResult integrate_form(const DarbouxSystem& sys, const Cycle& cycle, const OneForm& form) {
  if (cycle.points.size() < 3)
    throw std::invalid_argument("integrate_form: cycle has fewer than 3 points");
  const FormD fd = to_double_form(form);
  const Complex leaf = cycle.leaf_log_t;
  const double node_tol = 1e-13 * (1 + std::abs(leaf));
  std::vector<BivarPolyD> mags;
  for (const auto& f : sys.num().factors) mags.push_back(abs_coeffs(f.p));
  mags.push_back(abs_coeffs(sys.num().p0));
  EdgeContext cx{sys, fd, leaf, node_tol, mags};

  // Polish every vertex onto the leaf along one continuous branch walk and
  // snapshot the walk state per vertex; edges then integrate independently
  // from coherent snapshots.
  std::vector<CPoint> v = cycle.points;
  std::vector<WalkState> snap(v.size());
  WalkState st = walk_init(sys, v[0], leaf);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CPoint p = v[i];
    if (!project_to_leaf(cx, st, p)) {
      BranchEval be = branch_eval(sys, st, p); // keep the raw vertex, stay continuous
      st.vals = std::move(be.vals);
      st.args = std::move(be.args);
    } else {
      v[i] = p;
    }
    snap[i] = st;
  }

  IntegralResult out;
  double fscale = 0;
  {
    std::array<Complex, 2> at{v[0].x(), v[0].y()};
    fscale = std::abs(fd.dx.eval(at)) + std::abs(fd.dy.eval(at));
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const CPoint& a = v[i];
    const CPoint& b = v[(i + 1) % v.size()];
    EdgeOut e = edge_integral(cx, a, b, snap[i], 0);
    out.value += e.val;
    out.error_estimate += e.err;
    out.nodes += e.nodes;
  }
  out.error_estimate += static_cast<double>(v.size()) * 1e-14 * fscale; // vertex seam slack
  return out;
}

IntegralResult integrate_real_oval(const DarbouxSystem& sys, const Cycle& oval,
                                   const OneForm& form) {
  IntegralResult r = integrate_form(sys, oval, form);
  if (std::abs(r.value.imag()) < r.error_estimate) r.value = Complex(r.value.real(), 0);
  return r;
}

IntegralResult pseudo_abelian_I(const DarbouxSystem& sys, double t, const TraceOptions& topts) {
  return integrate_real_oval(sys, trace_oval(sys, t, topts), sys.eta());
}

IntegralResult pseudo_abelian_I_path(const DarbouxSystem& sys, const TPath& path,
                                     const TraceOptions& topts) {
  if (path.start_log_t.imag() != 0)
    throw std::invalid_argument("pseudo_abelian_I_path: base point must be a positive real t");
  Cycle oval = trace_oval(sys, std::exp(path.start_log_t.real()), topts);
  if (path.legs.empty()) return integrate_form(sys, oval, sys.eta());
  Cycle lifted = lift_cycle(sys, oval, path, topts.corrector_tol);
  return integrate_form(sys, lifted, sys.eta());
}

IntegralResult pseudo_abelian_I_phase(const DarbouxSystem& sys, double t, double phase,
                                      const TraceOptions& topts) {
  return pseudo_abelian_I_path(sys, TPath::arc(t, phase), topts);
}

namespace {

// Solves the two-target system {log P0 = L_P, log H0 = log t - eps * L_P}
// by a damped 2x2 complex Newton with branch tracking; commits on success.
bool eight_solve(const DarbouxSystem& sys, WalkState& st, CPoint& p, Complex L_P, double log_t,
                 double tol) {
  const double eps = sys.epsilon();
  const std::size_t k = sys.factor_count();
  CPoint q = p;
  double r_prev = -1;
  bool contraction_checked = false;
  for (int it = 0; it < 16; ++it) {
    BranchEval be;
    try {
      be = branch_eval(sys, st, q);
    } catch (const LeafBoundaryError&) {
      return false;
    }
    Complex lp(std::log(std::abs(be.vals.back())), be.args.back());
    Complex lh0 = 0;
    for (std::size_t i = 0; i < k; ++i)
      lh0 += sys.num().factors[i].a * Complex(std::log(std::abs(be.vals[i])), be.args[i]);
    Complex G1 = lp - L_P;
    Complex G2 = lh0 - (Complex(log_t, 0) - eps * L_P);
    double rn = std::sqrt(std::norm(G1) + std::norm(G2));
    if (rn <= tol) {
      for (std::size_t i = 0; i < be.args.size(); ++i)
        if (std::abs(be.args[i] - st.args[i]) > kPi / 2) return false;
      st.vals = std::move(be.vals);
      st.args = std::move(be.args);
      p = q;
      return true;
    }
    if (!contraction_checked && r_prev > 0) {
      contraction_checked = true;
      if (rn > 0.7 * r_prev) return false;
    }
    r_prev = rn;
    std::array<Complex, 2> at{q.x(), q.y()};
    const auto& num = sys.num();
    Complex g1x = num.p0x.eval(at) / be.vals.back();
    Complex g1y = num.p0y.eval(at) / be.vals.back();
    Complex g2x = 0, g2y = 0;
    for (std::size_t i = 0; i < k; ++i) {
      g2x += num.factors[i].a * num.factors[i].px.eval(at) / be.vals[i];
      g2y += num.factors[i].a * num.factors[i].py.eval(at) / be.vals[i];
    }
    Complex det = g1x * g2y - g1y * g2x;
    if (std::abs(det) < 1e-300) return false;
    Complex dx = (-G1 * g2y + G2 * g1y) / det;
    Complex dy = (-G2 * g1x + G1 * g2x) / det;
    q.x() += dx;
    q.y() += dy;
  }
  return false;
}

// Continuation of the two-target solution along a straight segment in the
// continuous log P0 plane, collecting accepted points.
void continue_leg(const DarbouxSystem& sys, WalkState& st, CPoint& p, Complex L0, Complex L1,
                  double log_t, double tol, std::vector<CPoint>& collect) {
  const Complex total = L1 - L0;
  const double tn = std::abs(total);
  if (tn == 0) return;
  const double max_move = 0.08;
  const double max_dL = 0.25;
  double done = 0;
  double step = std::min(tn / 4, max_dL);
  const double min_step = tn * 1e-7 + 1e-15;
  while (tn - done > tn * 1e-15) {
    step = std::min(step, tn - done);
    Complex target = L0 + ((done + step) / tn) * total;
    WalkState st_try = st;
    CPoint q = p;
    bool ok = eight_solve(sys, st_try, q, target, log_t, tol);
    if (ok && (q - p).norm() <= max_move) {
      st = std::move(st_try);
      p = q;
      done += step;
      collect.push_back(p);
      step = std::min(step * 1.5, max_dL);
    } else {
      step /= 2;
      if (step < min_step)
        throw ConvergenceError("figure_eight_cycle: branch continuation stalled");
    }
  }
}

// Tangency function of the P0-fibration restricted to the leaf: W = 0 where
// grad P0 is parallel to grad log H, i.e. where P0 is critical along the leaf.
Complex eval_W(const DarbouxSystem& sys, const CPoint& q) {
  CPoint g = grad_log_H(sys, q);
  std::array<Complex, 2> at{q.x(), q.y()};
  return sys.num().p0x.eval(at) * g.y() - sys.num().p0y.eval(at) * g.x();
}

CPoint grad_W_fd(const DarbouxSystem& sys, const CPoint& q) {
  double h = 1e-6 * (1 + q.norm());
  Complex wx = (eval_W(sys, CPoint(q.x() + h, q.y())) - eval_W(sys, CPoint(q.x() - h, q.y()))) /
               (2 * h);
  Complex wy = (eval_W(sys, CPoint(q.x(), q.y() + h)) - eval_W(sys, CPoint(q.x(), q.y() - h))) /
               (2 * h);
  return CPoint(wx, wy);
}

// One Newton solve of {log H = L_H, W = 0} with branch tracking.
bool tangency_solve(const DarbouxSystem& sys, WalkState& st, CPoint& p, Complex L_H) {
  CPoint q = p;
  for (int it = 0; it < 20; ++it) {
    BranchEval be;
    try {
      be = branch_eval(sys, st, q);
    } catch (const LeafBoundaryError&) {
      return false;
    }
    Complex G1 = branch_log_H(sys, be) - L_H;
    Complex G2 = eval_W(sys, q);
    CPoint g = grad_log_H(sys, q);
    CPoint gw = grad_W_fd(sys, q);
    double wpscale = 1 + std::sqrt(std::norm(g.x()) + std::norm(g.y())) * q.norm();
    if (std::abs(G1) <= 1e-11 && std::abs(G2) <= 1e-8 * wpscale) {
      for (std::size_t i = 0; i < be.args.size(); ++i)
        if (std::abs(be.args[i] - st.args[i]) > kPi / 2) return false;
      st.vals = std::move(be.vals);
      st.args = std::move(be.args);
      p = q;
      return true;
    }
    Complex det = g.x() * gw.y() - g.y() * gw.x();
    if (std::abs(det) < 1e-300) return false;
    q.x() += (-G1 * gw.y() + G2 * g.y()) / det;
    q.y() += (-G2 * g.x() + G1 * gw.x()) / det;
  }
  return false;
}

// Continues the top tangency point of the oval onto the once-wound branch of
// P0: the target log H moves from log t to log t - 2 pi i eps while W = 0 is
// maintained.  Returns the continued point; its P0 value is the wound-branch
// fold of the P0-covering, the point the connector loop must encircle.
CPoint continue_tangency_wound(const DarbouxSystem& sys, const RealPoint& top, double log_t) {
  const double eps = sys.epsilon();
  CPoint p(Complex(top.x()), Complex(top.y()));
  WalkState st;
  st.vals = factor_values(sys, p);
  st.args.resize(st.vals.size());
  for (std::size_t i = 0; i < st.vals.size(); ++i) st.args[i] = std::arg(st.vals[i]);
  if (!tangency_solve(sys, st, p, Complex(log_t, 0)))
    throw ConvergenceError("figure_eight_cycle: top tangency polish failed");
  double done = 0;
  double step = 0.25;
  const double total = 2 * kPi;
  while (total - done > total * 1e-12) {
    step = std::min(step, total - done);
    Complex target(log_t, -eps * (done + step));
    WalkState st_try = st;
    CPoint q = p;
    if (tangency_solve(sys, st_try, q, target) && (q - p).norm() <= 0.2) {
      st = std::move(st_try);
      p = q;
      done += step;
      step = std::min(step * 1.5, 0.5);
    } else {
      step /= 2;
      if (step < 1e-8)
        throw ConvergenceError("figure_eight_cycle: tangency continuation stalled");
    }
  }
  return p;
}

RealPoint refine_crossing(const DarbouxSystem& sys, RealPoint a, RealPoint b, double rho,
                          double log_t) {
  std::array<double, 2> aa{a.x(), a.y()}, bb{b.x(), b.y()};
  double qa = sys.num().p0.eval(aa), qb = sys.num().p0.eval(bb);
  double lam = qb == qa ? 0.5 : (rho - qa) / (qb - qa);
  lam = std::min(1.0, std::max(0.0, lam));
  RealPoint p = a + lam * (b - a);
  for (int it = 0; it < 30; ++it) {
    std::array<double, 2> at{p.x(), p.y()};
    double f1 = eval_log_H(sys, p).real() - log_t;
    double f2 = sys.num().p0.eval(at) - rho;
    if (std::abs(f1) < 1e-13 && std::abs(f2) < 1e-13 * std::max(1.0, rho)) return p;
    CPoint gc = grad_log_H(sys, CPoint(Complex(p.x()), Complex(p.y())));
    Eigen::Matrix2d J;
    J << gc.x().real(), gc.y().real(), sys.num().p0x.eval(at), sys.num().p0y.eval(at);
    Eigen::Vector2d rhs(-f1, -f2);
    Eigen::Vector2d d = J.partialPivLu().solve(rhs);
    if (!d.allFinite()) break;
    p += d;
  }
  throw ConvergenceError("figure_eight_cycle: crossing refinement failed");
}

Cycle build_eight(const DarbouxSystem& sys, const Cycle& oval, double rho, double log_t) {
  const double tol = 1e-12;
  const std::size_t n = oval.points.size();
  std::vector<RealPoint> v(n);
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = RealPoint(oval.points[i].x().real(), oval.points[i].y().real());
    std::array<double, 2> at{v[i].x(), v[i].y()};
    q[i] = sys.num().p0.eval(at);
  }
  if (!(q[0] > rho))
    throw ConvergenceError("figure_eight_cycle: circle radius at or above the seed value");

  std::size_t k = 0;
  while (k + 1 < n && q[k + 1] > rho) ++k;
  if (k + 1 >= n) throw ConvergenceError("figure_eight_cycle: no crossing forward of the seed");
  ++k; // first index with q[k] <= rho
  std::size_t j = n - 1;
  while (j > k && q[j] > rho) --j;
  if (j <= k) throw ConvergenceError("figure_eight_cycle: crossings not separated");

  RealPoint c_b = refine_crossing(sys, v[j], v[(j + 1) % n], rho, log_t);
  RealPoint c_f = refine_crossing(sys, v[k - 1], v[k], rho, log_t);

  std::vector<RealPoint> arc;
  arc.push_back(c_b);
  for (std::size_t idx = (j + 1) % n; idx != k; idx = (idx + 1) % n) arc.push_back(v[idx]);
  arc.push_back(c_f);
  const double lr = std::log(rho);

  std::vector<CPoint> poly;
  CPoint p(Complex(c_b.x()), Complex(c_b.y()));
  poly.push_back(p);
  WalkState st = walk_init(sys, p, Complex(log_t, 0));
  const double arg0_p0 = st.args.back();

  const Complex turn(0, 2 * kPi);
  // right circle, one full counterclockwise turn in the P0 plane
  continue_leg(sys, st, p, Complex(lr, 0), Complex(lr, 0) + turn, log_t, tol, poly);
  if (std::abs((st.args.back() - arg0_p0) - 2 * kPi) > 0.05)
    throw ConvergenceError("figure_eight_cycle: circle did not wind once around P0 = 0");
  // Connector on the once-wound branch: out from the circle, once around the
  // wound fold of the P0-covering -- which exchanges the two sheets, carrying
  // the path from over the right crossing to over the left one -- and back.
  {
    std::size_t top_idx = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (q[i] > q[top_idx]) top_idx = i;
    CPoint fold_pt = continue_tangency_wound(sys, v[top_idx], log_t);
    Complex w_fold = factor_values(sys, fold_pt).back();
    double R = std::min({0.5 * std::abs(w_fold - rho), 0.5 * std::abs(w_fold),
                         0.9 * w_fold.real(), 0.4});
    if (!(R > 1e-4))
      throw ConvergenceError("figure_eight_cycle: wound fold too close to the circle");
    Complex u0 = (Complex(rho, 0) - w_fold) / std::abs(Complex(rho, 0) - w_fold);
    Complex e0 = w_fold + R * u0;
    const double alpha0 = std::arg(u0);
    std::vector<Complex> wp;
    wp.push_back(Complex(lr, 0));
    wp.push_back(std::log(e0));
    const int m = 24;
    for (int s = 1; s <= m; ++s)
      wp.push_back(std::log(w_fold + R * std::polar(1.0, alpha0 + 2 * kPi * s / m)));
    wp.push_back(Complex(lr, 0));
    for (std::size_t s = 0; s + 1 < wp.size(); ++s)
      continue_leg(sys, st, p, wp[s] + turn, wp[s + 1] + turn, log_t, tol, poly);
  }
  // left circle, one full clockwise turn
  continue_leg(sys, st, p, Complex(lr, 0) + turn, Complex(lr, 0), log_t, tol, poly);

  RealPoint end_real(p.x().real(), p.y().real());
  double mismatch = std::hypot((end_real - c_f).x(), (end_real - c_f).y()) +
                    std::abs(p.x().imag()) + std::abs(p.y().imag());
  if (mismatch > 1e-7)
    throw ConvergenceError("figure_eight_cycle: joint closure failed (monodromy mismatch)");

  // plain top arc back, left to right; the wrap edge to poly[0] closes it
  for (std::size_t i = arc.size() - 1; i >= 1; --i)
    poly.emplace_back(Complex(arc[i - 1].x()), Complex(arc[i - 1].y()));
  poly.pop_back(); // last pushed is c_b = poly[0]; the wrap edge covers it

  // Orientation convention: traverse so that the loop over the x<0 sheet is the
  // counterclockwise one.  With this choice the transported eight reproduces
  // the analytic-continuation difference of I with a plus sign.
  std::reverse(poly.begin(), poly.end());

  Cycle out;
  out.points = std::move(poly);
  out.leaf_log_t = Complex(log_t, 0);
  out.orientation = +1;
  out.closure_residual = mismatch;
  out.drift_residual = leaf_drift(sys, out.points, out.leaf_log_t);
  return out;
}

} // namespace

FigureEight figure_eight_cycle(const DarbouxSystem& sys, double t, double rho,
                               const TraceOptions& topts) {
  if (!(sys.epsilon() > 0))
    throw std::invalid_argument("figure_eight_cycle: requires a positive exponent on P0");
  Cycle oval = trace_oval(sys, t, topts);
  const double log_t = std::log(t);

  double pmin = 1e300, pmax = -1e300;
  for (const auto& cp : oval.points) {
    std::array<double, 2> at{cp.x().real(), cp.y().real()};
    double pv = sys.num().p0.eval(at);
    pmin = std::min(pmin, pv);
    pmax = std::max(pmax, pv);
  }
  if (!(pmin > 0) || !(pmax > pmin))
    throw ConvergenceError("figure_eight_cycle: P0 range on the oval is degenerate");

  std::vector<double> candidates;
  if (rho > 0) {
    candidates.push_back(rho);
  } else {
    const double la = std::log(pmin), lb = std::log(pmax);
    CriticalPoint center = find_center(sys);
    std::array<double, 2> cat{center.location.x(), center.location.y()};
    double rc = sys.num().p0.eval(cat);
    double fc = (std::log(rc) - la) / (lb - la);
    if (fc > 0.25 && fc < 0.75) candidates.push_back(rc);
    for (double f : {0.5, 0.35, 0.65, 0.25, 0.75})
      candidates.push_back(std::exp(la + f * (lb - la)));
  }

  std::string last_error = "figure_eight_cycle: no radius candidate";
  for (double r : candidates) {
    try {
      FigureEight fe;
      fe.cycle = build_eight(sys, oval, r, log_t);
      fe.rho = r;
      return fe;
    } catch (const ConvergenceError& e) {
      last_error = e.what();
    } catch (const LeafBoundaryError& e) {
      last_error = e.what();
    }
  }
  throw ConvergenceError(last_error);
}

IntegralResult figure_eight_J(const DarbouxSystem& sys, double t, const TraceOptions& topts) {
  FigureEight fe = figure_eight_cycle(sys, t, 0, topts);
  // The eight is built against the real-t leaf, whose geometry is concrete; the
  // value belongs on the upper edge of the cut, so transport it there first.
  Cycle lifted = lift_cycle(sys, fe.cycle, TPath::arc(t, kPi * sys.epsilon()),
                            topts.corrector_tol);
  return integrate_form(sys, lifted, sys.eta());
}

VariationCheck variation_check(const DarbouxSystem& sys, double t, const TraceOptions& topts) {
  const double eps = sys.epsilon();
  IntegralResult ip = pseudo_abelian_I_phase(sys, t, kPi * eps, topts);
  IntegralResult im = pseudo_abelian_I_phase(sys, t, -kPi * eps, topts);
  IntegralResult j = figure_eight_J(sys, t, topts);
  VariationCheck out;
  out.i_plus = ip.value;
  out.i_minus = im.value;
  out.j = j.value;
  out.residual_abs = std::abs(ip.value - im.value - j.value);
  out.residual_rel = out.residual_abs / std::max(std::abs(j.value), 1e-9);
  out.error_estimate = ip.error_estimate + im.error_estimate + j.error_estimate;
  return out;
}

} // namespace pabi
