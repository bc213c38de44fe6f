#include "pabi/trace.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "json.hpp"

namespace pabi {

namespace {

const double kPi = 3.14159265358979323846;

double principal_arg_ratio(Complex now, Complex before) {
  return std::arg(now / before);
}

// Continuously tracked log H along a discrete point sequence.  Assumes each
// consecutive pair turns every factor by less than half a turn.
struct BranchWalker {
  const DarbouxSystem& sys;
  std::vector<Complex> values;   // factor values at the current point
  std::vector<double> args;      // continuous arguments
  explicit BranchWalker(const DarbouxSystem& s, const CPoint& p) : sys(s) {
    values = factor_values(sys, p);
    for (auto v : values) {
      if (v == Complex(0)) throw LeafBoundaryError("factor vanishes on cycle");
      args.push_back(std::arg(v));
    }
  }
  void advance(const CPoint& p) {
    auto nv = factor_values(sys, p);
    for (std::size_t i = 0; i < nv.size(); ++i) {
      if (nv[i] == Complex(0)) throw LeafBoundaryError("factor vanishes on cycle");
      args[i] += principal_arg_ratio(nv[i], values[i]);
      values[i] = nv[i];
    }
  }
  Complex log_H() const {
    Complex acc = 0;
    const auto& fs = sys.num().factors;
    for (std::size_t i = 0; i < fs.size(); ++i)
      acc += fs[i].a * Complex(std::log(std::abs(values[i])), args[i]);
    acc += sys.epsilon() * Complex(std::log(std::abs(values.back())), args.back());
    return acc;
  }
  double weight(std::size_t i) const {
    return i + 1 < values.size() ? sys.num().factors[i].a : sys.epsilon();
  }
  // Shifts the windings by integers so Im log_H comes closest to the leaf.
  void align(Complex leaf) {
    const double im0 = (log_H() - leaf).imag();
    const std::size_t n = values.size();
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
    for (std::size_t i = 0; i < n; ++i) args[i] += 2 * kPi * best_w[i];
  }
};

} // namespace

double leaf_drift(const DarbouxSystem& sys, const std::vector<CPoint>& points,
                  Complex leaf_log_t) {
  if (points.empty()) return 0;
  BranchWalker walk(sys, points.front());
  walk.align(leaf_log_t);
  double drift = std::abs(walk.log_H() - leaf_log_t);
  for (std::size_t i = 1; i < points.size(); ++i) {
    walk.advance(points[i]);
    drift = std::max(drift, std::abs(walk.log_H() - leaf_log_t));
  }
  return drift;
}

double area_shoelace(const Cycle& cycle) {
  double a = 0;
  const auto& pts = cycle.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const auto& q = pts[(i + 1) % pts.size()];
    a += p.x().real() * q.y().real() - q.x().real() * p.y().real();
  }
  return a / 2;
}

namespace {

// Residual of the real leaf equation, rejecting points outside the open basin
// {P0 > 0, all factors > 0} so iterates cannot slide onto a mirror leaf.
std::optional<double> leaf_residual(const DarbouxSystem& sys, const RealPoint& p,
                                    double log_t) {
  std::array<double, 2> at{p.x(), p.y()};
  if (!(sys.num().p0.eval(at) > 0)) return std::nullopt;
  for (const auto& f : sys.num().factors)
    if (!(f.p.eval(at) > 0)) return std::nullopt;
  return eval_log_H(sys, p).real() - log_t;
}

// Scalar Newton along the log-H gradient, real arithmetic (nest interior),
// with backtracking damping.  Where the cycle hugs the singular locus the
// attainable residual is limited by cancellation in the factors (the gradient
// is enormous there), so a vanishing Newton increment counts as converged.
bool correct_to_leaf(const DarbouxSystem& sys, RealPoint& p, double log_t, double tol,
                     int max_iter = 20) {
  auto h0 = leaf_residual(sys, p, log_t);
  if (!h0) return false;
  double h = *h0;
  for (int i = 0; i < max_iter; ++i) {
    if (std::abs(h) <= tol) return true;
    CPoint gc = grad_log_H(sys, CPoint(Complex(p.x()), Complex(p.y())));
    RealPoint g(gc.x().real(), gc.y().real());
    double g2 = g.squaredNorm();
    if (g2 < 1e-300) return false;
    RealPoint dp = (h / g2) * g;
    if (dp.norm() <= 8 * std::numeric_limits<double>::epsilon() * (1 + p.norm()))
      return true;
    double damp = 1;
    bool moved = false;
    for (int bt = 0; bt < 24; ++bt, damp /= 2) {
      auto ht = leaf_residual(sys, p - damp * dp, log_t);
      if (ht && std::abs(*ht) < std::abs(h)) {
        p -= damp * dp;
        h = *ht;
        moved = true;
        break;
      }
    }
    if (!moved) return std::abs(h) <= tol;
  }
  return std::abs(h) <= tol;
}

} // namespace

Cycle trace_oval(const DarbouxSystem& sys, double t, const TraceOptions& opts) {
  if (!(t > 0)) throw std::invalid_argument("trace_oval: t must be positive");
  CriticalPoint center = find_center(sys);
  if (std::isnan(center.value_t) || center.kind != CriticalPoint::Kind::Center)
    throw ConvergenceError("trace_oval: no center found inside the nest");
  if (t >= center.value_t * (1 - 1e-12))
    throw std::invalid_argument("trace_oval: t is not below the center value");
  const double log_t = std::log(t);
  const RealPoint c = center.location;

  // Seed on the vertical ray from the center: bracket then bisect.
  auto ray_h = [&](double s) -> std::optional<double> {
    RealPoint p = c + RealPoint(0, s);
    if (!sys.domain().contains(p)) return std::nullopt;
    std::array<double, 2> at{p.x(), p.y()};
    if (sys.num().p0.eval(at) <= 0) return std::nullopt;
    for (const auto& f : sys.num().factors)
      if (f.p.eval(at) <= 0) return std::nullopt;
    return eval_log_H(sys, p).real() - log_t;
  };
  double lo = 0, hi = 0;
  {
    double span = sys.domain().height();
    double prev = 0;
    bool bracketed = false;
    for (double s = span / 256; s <= span; s *= 1.5) {
      auto h = ray_h(s);
      if (!h || *h < 0) {
        lo = prev;
        hi = s;
        bracketed = true;
        break;
      }
      prev = s;
    }
    if (!bracketed) throw ConvergenceError("trace_oval: seed bisection failed (t out of range)");
    if (lo == 0) {
      double a = hi / 2;
      while (a > 1e-14 * span) {
        auto h = ray_h(a);
        if (h && *h > 0) {
          lo = a;
          break;
        }
        hi = a;
        a /= 2;
      }
      if (lo == 0) throw ConvergenceError("trace_oval: seed bisection failed (t out of range)");
    }
    for (int i = 0; i < 200 && (hi - lo) > 1e-16 * std::max(1.0, hi); ++i) {
      double mid = (lo + hi) / 2;
      auto h = ray_h(mid);
      if (h && *h > 0)
        lo = mid;
      else
        hi = mid;
    }
  }
  RealPoint p0 = c + RealPoint(0, (lo + hi) / 2);
  if (!correct_to_leaf(sys, p0, log_t, opts.corrector_tol))
    throw ConvergenceError("trace_oval: seed correction failed");

  const double seed_radius = (p0 - c).norm();
  double step = std::min(opts.step_init, seed_radius / 4);
  const double step_floor = std::min(opts.step_min, step / 4096);

  auto tangent = [&](const RealPoint& p) -> std::optional<RealPoint> {
    RealPoint ab = omega_coefficients(sys, p);
    RealPoint v(ab.y(), -ab.x()); // dual field (B, -A)
    double n = v.norm();
    if (n < 1e-300) return std::nullopt;
    return RealPoint(v / n);
  };

  std::vector<CPoint> pts;
  pts.emplace_back(Complex(p0.x()), Complex(p0.y()));
  RealPoint prev = p0;
  auto t0 = tangent(p0);
  if (!t0) throw ConvergenceError("trace_oval: dual field vanishes at seed");
  RealPoint dir = *t0;
  bool armed = false;
  double arclen = 0;
  double closure = -1;

  while ((int)pts.size() < opts.max_points) {
    RealPoint cand = prev + step * dir;
    bool ok = correct_to_leaf(sys, cand, log_t, opts.corrector_tol) &&
              sys.domain().contains(cand);
    std::optional<RealPoint> tc = ok ? tangent(cand) : std::nullopt;
    if (!ok || !tc || dir.dot(*tc) < std::cos(0.45)) {
      step /= 2;
      if (step < step_floor) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "trace_oval: step underflow at (%.6g, %.6g) pts=%zu arclen=%.4g ok=%d "
                      "dot=%.4g",
                      prev.x(), prev.y(), pts.size(), arclen, (int)ok,
                      tc ? dir.dot(*tc) : -2.0);
        throw ConvergenceError(buf);
      }
      continue;
    }
    arclen += (cand - prev).norm();
    if (!armed && arclen > 4 * std::min(opts.step_init, seed_radius / 4)) armed = true;
    if (armed && cand.y() > c.y() && prev.y() > c.y() &&
        (prev.x() - p0.x()) * (cand.x() - p0.x()) <= 0) {
      // Crossing of the seed ray: land on the section with x frozen.
      double lam = (p0.x() - prev.x()) / (cand.x() - prev.x());
      RealPoint q = prev + lam * (cand - prev);
      q.x() = p0.x();
      for (int it = 0; it < 30; ++it) {
        double h = eval_log_H(sys, q).real() - log_t;
        if (std::abs(h) <= opts.corrector_tol) break;
        CPoint gc = grad_log_H(sys, CPoint(Complex(q.x()), Complex(q.y())));
        double gy = gc.y().real();
        if (std::abs(gy) < 1e-300) break;
        q.y() -= h / gy;
      }
      closure = (q - p0).norm();
      pts.emplace_back(Complex(q.x()), Complex(q.y()));
      break;
    }
    pts.emplace_back(Complex(cand.x()), Complex(cand.y()));
    if (dir.dot(*tc) > std::cos(0.12)) step = std::min({step * 1.3, opts.step_max, seed_radius});
    prev = cand;
    dir = *tc;
  }
  if (closure < 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "trace_oval: failed to close at (%.6g, %.6g) pts=%zu arclen=%.4g step=%.4g",
                  prev.x(), prev.y(), pts.size(), arclen, step);
    throw ConvergenceError(buf);
  }
  if (pts.size() < 16) throw ConvergenceError("trace_oval: degenerate cycle (fewer than 16 points)");

  Cycle cyc;
  cyc.points = std::move(pts);
  cyc.leaf_log_t = Complex(log_t, 0);
  cyc.closure_residual = closure;
  cyc.orientation = area_shoelace(cyc) >= 0 ? +1 : -1;
  cyc.drift_residual = leaf_drift(sys, cyc.points, cyc.leaf_log_t);
  return cyc;
}

namespace {

struct NewtonLeafResult {
  bool ok = false;
  bool branch_safe = true;
};

// One target solve of log H(p) = c.  The branch is tracked continuously
// through the Newton iterates (fixed integer windings would be discontinuous
// for points whose factor values sit near the principal-argument cut), and on
// success the windings are refreshed from the continuous arguments.  Branch
// safety: the accepted point must not turn any factor a quarter turn or more
// from the start.
NewtonLeafResult newton_leaf(const DarbouxSystem& sys, LeafPointState& st, Complex target,
                             TransverseMode mode, double tol) {
  const std::size_t k = sys.factor_count();
  CPoint q = st.point;
  std::vector<Complex> vals;
  try {
    vals = factor_values(sys, q);
  } catch (...) {
    return {};
  }
  std::vector<double> args0(vals.size()), args(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    int w = i < k ? st.windings.factors[i] : st.windings.p0;
    args0[i] = std::arg(vals[i]) + 2 * kPi * w;
    args[i] = args0[i];
  }
  auto weight = [&](std::size_t i) { return i < k ? sys.num().factors[i].a : sys.epsilon(); };
  auto log_h = [&]() {
    Complex acc = 0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      acc += weight(i) * Complex(std::log(std::abs(vals[i])), args[i]);
    return acc;
  };
  auto accept = [&]() {
    NewtonLeafResult res;
    res.ok = true;
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (std::abs(args[i] - args0[i]) > kPi / 2) res.branch_safe = false;
    if (res.branch_safe) {
      st.point = q;
      for (std::size_t i = 0; i < vals.size(); ++i) {
        int w = (int)std::lround((args[i] - std::arg(vals[i])) / (2 * kPi));
        if (i < k)
          st.windings.factors[i] = w;
        else
          st.windings.p0 = w;
      }
    }
    return res;
  };
  double r_prev = -1;
  bool contraction_checked = false;
  for (int it = 0; it < 16; ++it) {
    Complex r = log_h() - target;
    double rn = std::abs(r);
    if (rn <= tol) return accept();
    if (!contraction_checked && r_prev > 0) {
      contraction_checked = true;
      if (rn > 0.7 * r_prev) return {}; // poor contraction: caller halves the step
    }
    r_prev = rn;
    CPoint g;
    try {
      g = grad_log_H(sys, q);
    } catch (const LeafBoundaryError&) {
      return {};
    }
    CPoint dq;
    if (mode == TransverseMode::FixX) {
      if (std::abs(g.y()) < 1e-300) return {};
      dq = CPoint(0, -r / g.y());
    } else {
      double g2 = std::norm(g.x()) + std::norm(g.y());
      if (g2 < 1e-300) return {};
      dq = CPoint(-r * std::conj(g.x()) / g2, -r * std::conj(g.y()) / g2);
    }
    // Where the leaf hugs the singular locus, cancellation in the factors
    // floors the attainable residual while the gradient is enormous; a
    // vanishing increment is then as converged as the arithmetic allows.
    if (dq.norm() <= 8 * std::numeric_limits<double>::epsilon() * (1 + q.norm()))
      return accept();
    q += dq;
    std::vector<Complex> nv;
    try {
      nv = factor_values(sys, q);
    } catch (...) {
      return {};
    }
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (nv[i] == Complex(0)) return {};
      args[i] += principal_arg_ratio(nv[i], vals[i]);
      vals[i] = nv[i];
    }
  }
  return {};
}

Complex leg_offset(const TPath::Leg& leg, double amount) {
  return leg.kind == TPath::Leg::Kind::Radial ? Complex(amount, 0) : Complex(0, amount);
}

} // namespace

LeafPointState continue_leaf_point(const DarbouxSystem& sys, LeafPointState start,
                                   const TPath& path, TransverseMode mode, double tol) {
  if (start.windings.factors.size() != sys.factor_count())
    start.windings.factors.assign(sys.factor_count(), 0);
  Complex log_t = path.start_log_t;
  LeafPointState st = start;
  {
    auto r0 = newton_leaf(sys, st, log_t, mode, tol);
    if (!r0.ok || !r0.branch_safe)
      throw ConvergenceError("continue_leaf_point: start is not on the leaf");
  }
  for (const auto& leg : path.legs) {
    const double total = leg.delta;
    if (total == 0) continue;
    double done = 0;
    double step = total / 8;
    const double min_step = std::abs(total) * 1e-7 + 1e-14;
    while (std::abs(total - done) > std::abs(total) * 1e-15) {
      double remaining = total - done;
      if (std::abs(step) > std::abs(remaining) || step * remaining <= 0) step = remaining;
      Complex target = log_t + leg_offset(leg, done + step);
      LeafPointState trial = st;
      auto res = newton_leaf(sys, trial, target, mode, tol);
      if (!res.ok || !res.branch_safe) {
        step /= 2;
        if (std::abs(step) < min_step)
          throw ConvergenceError("continue_leaf_point: continuation stalled");
        continue;
      }
      st = trial;
      done += step;
      step *= 1.5;
    }
    log_t += leg_offset(leg, total);
  }
  return st;
}

Cycle lift_cycle(const DarbouxSystem& sys, const Cycle& cycle, const TPath& path, double tol) {
  // Per-vertex branch windings from one continuous walk around the polygon,
  // so vertices on wound branches (figure-eight connectors) lift correctly.
  std::vector<LeafPointState> states;
  states.reserve(cycle.points.size());
  {
    BranchWalker walk(sys, cycle.points.front());
    walk.align(cycle.leaf_log_t);
    const std::size_t k = sys.factor_count();
    for (std::size_t i = 0; i < cycle.points.size(); ++i) {
      if (i > 0) walk.advance(cycle.points[i]);
      Windings w{std::vector<int>(k, 0), 0};
      for (std::size_t f = 0; f <= k; ++f) {
        int wrap = (int)std::lround((walk.args[f] - std::arg(walk.values[f])) / (2 * kPi));
        if (f < k)
          w.factors[f] = wrap;
        else
          w.p0 = wrap;
      }
      states.push_back({cycle.points[i], w});
    }
  }

  Complex log_t = path.start_log_t;
  for (const auto& leg : path.legs) {
    const double total = leg.delta;
    if (total == 0) continue;
    double done = 0;
    double step = total / 8;
    const double min_step = std::abs(total) * 1e-7 + 1e-14;
    while (std::abs(total - done) > std::abs(total) * 1e-15) {
      double remaining = total - done;
      if (std::abs(step) > std::abs(remaining) || step * remaining <= 0) step = remaining;
      Complex target = log_t + leg_offset(leg, done + step);
      bool all_ok = true;
      std::size_t bad = 0;
      std::vector<LeafPointState> trial = states;
      for (std::size_t vi = 0; vi < trial.size(); ++vi) {
        auto res = newton_leaf(sys, trial[vi], target, TransverseMode::Gradient, tol);
        if (!res.ok || !res.branch_safe) {
          all_ok = false;
          bad = vi;
          break;
        }
      }
      if (!all_ok) {
        step /= 2;
        if (std::abs(step) < min_step) {
          char buf[256];
          std::snprintf(buf, sizeof buf,
                        "lift_cycle: continuation stalled at vertex %zu of %zu, near "
                        "(%.6g%+.2gi, %.6g%+.2gi)",
                        bad, trial.size(), states[bad].point.x().real(),
                        states[bad].point.x().imag(), states[bad].point.y().real(),
                        states[bad].point.y().imag());
          throw ConvergenceError(buf);
        }
        continue;
      }
      states = std::move(trial);
      done += step;
      step *= 1.5;
    }
    log_t += leg_offset(leg, total);
  }

  Cycle out;
  out.points.reserve(states.size());
  for (const auto& st : states) out.points.push_back(st.point);
  out.leaf_log_t = log_t;
  out.orientation = cycle.orientation;
  out.closure_residual = (out.points.back() - out.points.front()).norm();
  out.drift_residual = leaf_drift(sys, out.points, out.leaf_log_t);
  return out;
}

std::string cycle_to_json_string(const Cycle& cycle) {
  nlohmann::json j;
  j["leaf_log_t"] = {cycle.leaf_log_t.real(), cycle.leaf_log_t.imag()};
  j["orientation"] = cycle.orientation;
  j["closure_residual"] = cycle.closure_residual;
  j["drift_residual"] = cycle.drift_residual;
  auto& pts = j["points"] = nlohmann::json::array();
  for (const auto& p : cycle.points)
    pts.push_back({p.x().real(), p.x().imag(), p.y().real(), p.y().imag()});
  return j.dump();
}

Cycle cycle_from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Cycle c;
  c.leaf_log_t =
      Complex(j.at("leaf_log_t").at(0).get<double>(), j.at("leaf_log_t").at(1).get<double>());
  c.orientation = j.at("orientation").get<int>();
  c.closure_residual = j.at("closure_residual").get<double>();
  c.drift_residual = j.at("drift_residual").get<double>();
  for (const auto& p : j.at("points")) {
    if (p.size() != 4) throw std::invalid_argument("cycle_from_json_string: bad point entry");
    c.points.emplace_back(Complex(p.at(0).get<double>(), p.at(1).get<double>()),
                          Complex(p.at(2).get<double>(), p.at(3).get<double>()));
  }
  if (c.points.size() < 3) throw std::invalid_argument("cycle_from_json_string: too few points");
  return c;
}

} // namespace pabi
