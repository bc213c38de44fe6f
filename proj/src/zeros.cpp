#include "pabi/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace pabi {

namespace {

const double kPi = 3.14159265358979323846;

int noise_sign(double v, double err) { return std::abs(v) <= 10 * err ? 0 : (v > 0 ? 1 : -1); }

} // namespace

double t_of_s(double epsilon, double s) {
  if (!(epsilon > 0) || !(s > 0)) throw std::invalid_argument("t_of_s: needs epsilon, s > 0");
  return std::pow(epsilon * s, epsilon);
}

ZeroReport scan_zeros(const DarbouxSystem& sys, double t_lo, double t_hi, int grid_n,
                      const TraceOptions& topts, const IntegralEval& eval,
                      std::vector<ScanSample>* samples) {
  if (grid_n < 8) throw std::invalid_argument("scan_zeros: need at least 8 grid points");
  const double t_c = find_center(sys).value_t;
  if (!(0 < t_lo && t_lo < t_hi && t_hi < t_c))
    throw std::invalid_argument("scan_zeros: range must sit inside (0, t_center)");
  IntegralEval I = eval;
  if (!I) I = [&](double tt) { return pseudo_abelian_I(sys, tt, topts); };

  struct Node {
    double t, v, err;
    int sgn;
  };
  std::vector<Node> grid;
  ZeroReport rep;
  for (int k = 0; k < grid_n; ++k) {
    double t = t_lo + (t_hi - t_lo) * k / (grid_n - 1);
    try {
      IntegralResult r = I(t);
      if (samples) samples->push_back({t, r.value, r.error_estimate});
      grid.push_back({t, r.value.real(), r.error_estimate, noise_sign(r.value.real(), r.error_estimate)});
    } catch (const std::exception&) {
      ++rep.skipped;
    }
  }
  if (grid.empty()) return rep;
  if (std::all_of(grid.begin(), grid.end(), [](const Node& n) { return n.sgn == 0; })) {
    rep.identically_zero = true;
    return rep;
  }

  const double target = 1e-8 * t_c;
  // Sign changes between consecutive points of determinate sign; anything
  // indeterminate in between just widens the bracket.
  std::size_t prev = grid.size();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k].sgn == 0) continue;
    if (prev < grid.size() && grid[prev].sgn * grid[k].sgn < 0) {
      Node a = grid[prev], b = grid[k];
      while (b.t - a.t > target) {
        double tm = (a.t + b.t) / 2;
        IntegralResult r = I(tm);
        int sm = noise_sign(r.value.real(), r.error_estimate);
        if (sm == 0) break; // bracket stays wide across the indeterminate gap
        (sm == a.sgn ? a : b) = Node{tm, r.value.real(), r.error_estimate, sm};
      }
      rep.zeros.push_back({(a.t + b.t) / 2, b.t - a.t});
    }
    prev = k;
  }
  rep.count = static_cast<int>(rep.zeros.size());
  return rep;
}

namespace {

Complex contour_value(const DarbouxSystem& sys, const Contour& c, double u,
                      const TraceOptions& topts) {
  const double pe = kPi * c.epsilon;
  double tau, th;
  if (u < 1) { // outer arc, counterclockwise
    tau = c.t_outer;
    th = -pe + 2 * pe * u;
  } else if (u < 2) { // upper cut edge, inward
    tau = c.t_outer * std::pow(c.t_inner / c.t_outer, u - 1);
    th = pe;
  } else if (u < 3) { // inner arc, clockwise
    tau = c.t_inner;
    th = pe - 2 * pe * (u - 2);
  } else { // lower cut edge, outward
    tau = c.t_inner * std::pow(c.t_outer / c.t_inner, u - 3);
    th = -pe;
  }
  IntegralResult r = pseudo_abelian_I_path(
      sys, th == 0 ? TPath::constant(tau) : TPath::arc(tau, th), topts);
  if (std::abs(r.value) <= 10 * r.error_estimate)
    throw ConvergenceError(
        "winding_number: contour sample indistinguishable from a zero; nudge the contour");
  return r.value;
}

double arg_walk(const DarbouxSystem& sys, const Contour& c, const TraceOptions& topts, double u0,
                Complex v0, double u1, Complex v1, int depth) {
  double d = std::arg(v1 / v0);
  if (std::abs(d) < kPi / 2) return d;
  if (depth >= 12)
    throw ConvergenceError("winding_number: argument step will not certify below pi/2");
  double um = (u0 + u1) / 2;
  Complex vm = contour_value(sys, c, um, topts);
  return arg_walk(sys, c, topts, u0, v0, um, vm, depth + 1) +
         arg_walk(sys, c, topts, um, vm, u1, v1, depth + 1);
}

} // namespace

int winding_number(const DarbouxSystem& sys, const Contour& c, int samples_per_side,
                   const TraceOptions& topts) {
  if (!(0 < c.t_inner && c.t_inner < c.t_outer))
    throw std::invalid_argument("winding_number: need 0 < t_inner < t_outer");
  if (!(c.epsilon > 0)) throw std::invalid_argument("winding_number: need epsilon > 0");
  if (samples_per_side < 2)
    throw std::invalid_argument("winding_number: need at least 2 samples per side");

  const int m = 4 * samples_per_side;
  std::vector<double> us(m + 1);
  std::vector<Complex> vs(m + 1);
  for (int k = 0; k <= m; ++k) {
    us[k] = 4.0 * k / m;
    vs[k] = k == m ? vs[0] : contour_value(sys, c, us[k], topts);
  }
  double total = 0;
  for (int k = 0; k < m; ++k)
    total += arg_walk(sys, c, topts, us[k], vs[k], us[k + 1], vs[k + 1], 0);
  long n = std::lround(total / (2 * kPi));
  if (std::abs(total - 2 * kPi * n) >= kPi / 4)
    throw ConvergenceError("winding_number: accumulated argument does not certify an integer");
  return static_cast<int>(n);
}

int im_zero_count_on_segment(const DarbouxSystem& sys, double t_lo, double t_hi, int grid_n,
                             const TraceOptions& topts) {
  if (grid_n < 4) throw std::invalid_argument("im_zero_count_on_segment: need >= 4 grid points");
  const double t_c = find_center(sys).value_t;
  if (!(0 < t_lo && t_lo < t_hi && t_hi < t_c))
    throw std::invalid_argument("im_zero_count_on_segment: range must sit inside (0, t_center)");
  const double phase = kPi * sys.epsilon();

  int count = 0, prev = 0;
  for (int k = 0; k < grid_n; ++k) {
    double tau = t_lo + (t_hi - t_lo) * k / (grid_n - 1);
    IntegralResult ip = pseudo_abelian_I_phase(sys, tau, phase, topts);
    IntegralResult j = figure_eight_J(sys, tau, topts);
    double imi = ip.value.imag(), imj = j.value.imag() / 2;
    // On the upper cut edge the imaginary part is half the figure-eight
    // period; a mismatch means one of the two evaluations went wrong.
    if (std::abs(imi - imj) > 10 * (ip.error_estimate + j.error_estimate) + 1e-9 * std::abs(imj))
      throw ConvergenceError("im_zero_count_on_segment: Im I and J/2 disagree");
    int s = noise_sign(imi, ip.error_estimate);
    if (s != 0) {
      if (prev != 0 && s * prev < 0) ++count;
      prev = s;
    }
  }
  return count;
}

ExponentFit estimate_leading_exponent(const std::vector<std::pair<double, Complex>>& samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 4) throw std::invalid_argument("estimate_leading_exponent: need at least 4 samples");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    auto [t, v] = samples[i];
    if (!(t > 0) || std::abs(v) == 0)
      throw std::invalid_argument("estimate_leading_exponent: samples must have t > 0, I != 0");
    if (i > 0 && samples[i - 1].second.real() * v.real() < 0 &&
        std::abs(v.imag()) < std::abs(v.real()))
      throw std::invalid_argument("estimate_leading_exponent: sign change inside sample range");
    A(i, 0) = std::log(t);
    A(i, 1) = 1;
    b(i) = std::log(std::abs(v));
  }
  Eigen::Vector2d sol = A.colPivHouseholderQr().solve(b);
  double rms = (A * sol - b).norm() / std::sqrt(static_cast<double>(n));
  return {sol(0), rms};
}

} // namespace pabi
