#include "pabi/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace pabi {

namespace {

// Images of (x, y, eps) as monomials in the chart coordinates (c1, c2, c3).
std::array<std::array<int, 3>, 3> chart_exponents(Chart chart, const Weights& w) {
  switch (chart) {
    case Chart::U1: return {{{0, 0, w.wx}, {1, 0, w.wy}, {0, 1, w.we}}};
    case Chart::U2: return {{{1, 0, w.wx}, {0, 0, w.wy}, {0, 1, w.we}}};
    case Chart::U3: return {{{1, 0, w.wx}, {0, 1, w.wy}, {0, 0, w.we}}};
  }
  throw std::logic_error("chart_exponents: bad chart");
}

// A transition is the monomial map target_k = prod_m source_m^{Q[k][m]}; the
// pivot is the source coordinate that normalizes to 1, the only one raised to
// fractional powers.
struct TransitionMap {
  std::array<std::array<double, 3>, 3> Q;
  int pivot;
};

TransitionMap transition_map(Chart from, Chart to, const Weights& w) {
  const double wx = w.wx, wy = w.wy, we = w.we;
  // Rows give (c1', c2', c3') of the target chart.
  if (from == Chart::U1 && to == Chart::U2)
    return {{{{-wx / wy, 0, 0}, {-we / wy, 1, 0}, {1 / wy, 0, 1}}}, 0};
  if (from == Chart::U1 && to == Chart::U3)
    return {{{{0, -wx / we, 0}, {1, -wy / we, 0}, {0, 1 / we, 1}}}, 1};
  if (from == Chart::U2 && to == Chart::U1)
    return {{{{-wy / wx, 0, 0}, {-we / wx, 1, 0}, {1 / wx, 0, 1}}}, 0};
  if (from == Chart::U2 && to == Chart::U3)
    return {{{{1, -wx / we, 0}, {0, -wy / we, 0}, {0, 1 / we, 1}}}, 1};
  if (from == Chart::U3 && to == Chart::U1)
    return {{{{-wy / wx, 1, 0}, {-we / wx, 0, 0}, {1 / wx, 0, 1}}}, 0};
  if (from == Chart::U3 && to == Chart::U2)
    return {{{{1, -wx / wy, 0}, {0, -we / wy, 0}, {0, 1 / wy, 1}}}, 1};
  throw std::logic_error("transition_map: identity transition");
}

bool is_integer(double q) { return q == std::floor(q); }

// prod_m base[m]^{Q[m]}, principal branch; negative bases only under integer
// exponents (the caller has vetted the pivot).
double mono_eval(const std::array<double, 3>& base, const std::array<double, 3>& q) {
  double v = 1;
  for (int m = 0; m < 3; ++m) {
    if (q[m] == 0) continue;
    v *= std::pow(base[m], q[m]);
  }
  return v;
}

} // namespace

std::array<double, 3> blow_down(const ChartPoint& p, const Weights& w) {
  auto img = chart_exponents(p.chart, w);
  std::array<double, 3> out;
  for (int k = 0; k < 3; ++k) {
    double v = 1;
    for (int m = 0; m < 3; ++m)
      for (int rep = 0; rep < img[k][m]; ++rep) v *= p.c[m];
    out[k] = v;
  }
  return out;
}

Transition chart_transition(const ChartPoint& p, Chart target, const Weights& w) {
  if (p.chart == target) return {p, 1};
  TransitionMap tm = transition_map(p.chart, target, w);
  double piv = p.c[tm.pivot];
  if (piv == 0) throw std::domain_error("chart_transition: pivot coordinate vanishes");
  if (piv < 0)
    for (int k = 0; k < 3; ++k)
      if (!is_integer(tm.Q[k][tm.pivot]))
        throw std::domain_error("chart_transition: negative pivot under a fractional power");
  ChartPoint out;
  out.chart = target;
  for (int k = 0; k < 3; ++k) out.c[k] = mono_eval(p.c, tm.Q[k]);
  int deck = 1;
  if ((w.wx % 2 == 0 || w.wy % 2 == 0 || w.we % 2 == 0) && piv < 0) deck = -1;
  return {out, deck};
}

std::array<std::array<double, 3>, 3> transition_jacobian(const ChartPoint& p, Chart target,
                                                         const Weights& w) {
  if (p.chart == target)
    return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  TransitionMap tm = transition_map(p.chart, target, w);
  std::array<std::array<double, 3>, 3> J{};
  for (int k = 0; k < 3; ++k)
    for (int m = 0; m < 3; ++m) {
      if (tm.Q[k][m] == 0) {
        J[k][m] = 0;
        continue;
      }
      double v = tm.Q[k][m] * std::pow(p.c[m], tm.Q[k][m] - 1);
      for (int j = 0; j < 3; ++j)
        if (j != m && tm.Q[k][j] != 0) v *= std::pow(p.c[j], tm.Q[k][j]);
      J[k][m] = v;
    }
  return J;
}

namespace {

// d(mu) ^ d(nu) for exponent triples of coefficient-1 monomials: the (i, j)
// component is (m_i n_j - m_j n_i) * c^{m + n - e_i - e_j}.
TriPoly wedge_piece(const std::array<int, 3>& m, const std::array<int, 3>& n, int i, int j) {
  TriPoly out;
  long f = static_cast<long>(m[i]) * n[j] - static_cast<long>(m[j]) * n[i];
  if (f == 0) return out;
  std::array<int, 3> g;
  for (int k = 0; k < 3; ++k) g[k] = m[k] + n[k];
  --g[i];
  --g[j];
  out.add_term(g, Rational(f));
  return out;
}

} // namespace

Pullback pullback_sigma(const DarbouxSystem& sys, Chart chart, const Weights& w) {
  auto img = chart_exponents(chart, w);
  std::array<Monomial<Rational, 3>, 3> sub;
  for (int v = 0; v < 3; ++v) sub[v].exponents = img[v];
  TriPoly A = substitute_monomials<Rational, 3, 3>(sys.omega_dx_sym(), sub);
  TriPoly B = substitute_monomials<Rational, 3, 3>(sys.omega_dy_sym(), sub);

  TwoForm3 f;
  TriPoly* comp[3] = {&f.c12, &f.c13, &f.c23};
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (int c = 0; c < 3; ++c) {
    int i = pairs[c][0], j = pairs[c][1];
    *comp[c] = A * wedge_piece(img[0], img[2], i, j) + B * wedge_piece(img[1], img[2], i, j);
  }

  int ord = std::numeric_limits<int>::max();
  for (int c = 0; c < 3; ++c)
    if (!comp[c]->is_zero()) ord = std::min(ord, valuation_in(*comp[c], 2));
  if (ord == std::numeric_limits<int>::max()) ord = 0;
  for (int c = 0; c < 3; ++c)
    if (!comp[c]->is_zero()) *comp[c] = divide_power(*comp[c], 2, ord);
  return {f, ord};
}

namespace {

struct FormNum {
  std::array<TriPolyD, 3> c;
  std::array<std::array<TriPolyD, 3>, 3> d; // d[i][j] = partial_j c[i]
};

FormNum to_numeric(const TwoForm3& form) {
  FormNum fn;
  fn.c = {to_double(form.c12), to_double(form.c13), to_double(form.c23)};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) fn.d[i][j] = derivative(fn.c[i], j);
  return fn;
}

} // namespace

std::vector<ZeroCluster> singular_locus(const TwoForm3& form, const std::array<double, 6>& box,
                                        int n) {
  if (n < 2) throw std::invalid_argument("singular_locus: grid must have at least 2 points");
  FormNum fn = to_numeric(form);

  std::array<double, 3> lo{box[0], box[2], box[4]}, hi{box[1], box[3], box[5]};
  std::array<double, 3> step;
  double h_max = 0;
  for (int d = 0; d < 3; ++d) {
    step[d] = (hi[d] - lo[d]) / (n - 1);
    h_max = std::max(h_max, step[d]);
  }

  auto resid = [&](const std::array<double, 3>& p) {
    return Eigen::Vector3d(fn.c[0].eval(p), fn.c[1].eval(p), fn.c[2].eval(p));
  };

  // Residual magnitudes over the grid set the form's scale and the polish
  // shortlist: only the flattest fifth of the seeds is worth iterating on.
  std::vector<std::array<double, 3>> seeds;
  std::vector<double> rn;
  seeds.reserve(static_cast<std::size_t>(n) * n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        std::array<double, 3> p{lo[0] + a * step[0], lo[1] + b * step[1], lo[2] + c * step[2]};
        seeds.push_back(p);
        rn.push_back(resid(p).norm());
      }
  double scale = *std::max_element(rn.begin(), rn.end());
  if (scale == 0) throw std::invalid_argument("singular_locus: form vanishes on the whole grid");
  std::vector<double> sorted = rn;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 5, sorted.end());
  double shortlist = std::max(sorted[sorted.size() / 5], 1e-9 * scale);

  const double accept = 1e-11 * scale;
  std::vector<std::array<double, 3>> hits;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    if (rn[s] > shortlist) continue;
    std::array<double, 3> p = seeds[s];
    Eigen::Vector3d r = resid(p);
    // Iterate to positional stagnation, not merely to a small residual:
    // where a coefficient vanishes quadratically the residual test is met
    // orders of magnitude before the position settles.
    for (int it = 0; it < 80 && r.norm() > 0; ++it) {
      Eigen::Matrix3d J;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) J(i, j) = fn.d[i][j].eval(p);
      Eigen::JacobiSVD<Eigen::Matrix3d> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
      svd.setThreshold(1e-10);
      Eigen::Vector3d dp = svd.solve(-r);
      double dn = dp.norm();
      if (dn <= 1e-13 * (1 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2])) break;
      if (dn > h_max) dp *= h_max / dn; // stay near the seed's cell
      for (int d = 0; d < 3; ++d) p[d] += dp(d);
      r = resid(p);
    }
    if (r.norm() > accept) continue;
    bool inside = true;
    for (int d = 0; d < 3; ++d)
      if (p[d] < lo[d] - step[d] || p[d] > hi[d] + step[d]) inside = false;
    if (inside) hits.push_back(p);
  }

  // Identical limits from many seeds (Newton contracts along a zero curve's
  // bilinear directions) collapse to one sample.
  {
    std::map<std::array<long, 3>, std::array<double, 3>> uniq;
    for (const auto& p : hits)
      uniq.insert({{std::lround(p[0] * 1e8), std::lround(p[1] * 1e8), std::lround(p[2] * 1e8)},
                   p});
    hits.clear();
    for (const auto& [k, p] : uniq) hits.push_back(p);
  }

  // Chain hits into clusters through a cell hash, linking anything closer
  // than 1.5 grid steps; a cluster that spans several links is a curve.
  const double r_link = 1.5 * h_max;
  std::map<std::array<long, 3>, std::vector<std::size_t>> cells;
  auto cell_of = [&](const std::array<double, 3>& p) {
    return std::array<long, 3>{std::lround(std::floor(p[0] / r_link)),
                               std::lround(std::floor(p[1] / r_link)),
                               std::lround(std::floor(p[2] / r_link))};
  };
  for (std::size_t i = 0; i < hits.size(); ++i) cells[cell_of(hits[i])].push_back(i);

  std::vector<std::size_t> parent(hits.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto dist2 = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0;
    for (int d = 0; d < 3; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
  };
  for (const auto& [key, members] : cells) {
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = cells.find({key[0] + dx, key[1] + dy, key[2] + dz});
          if (it == cells.end()) continue;
          for (std::size_t i : members)
            for (std::size_t j : it->second)
              if (i < j && dist2(hits[i], hits[j]) <= r_link * r_link)
                parent[find(i)] = find(j);
        }
  }

  std::map<std::size_t, ZeroCluster> grouped;
  for (std::size_t i = 0; i < hits.size(); ++i) grouped[find(i)].samples.push_back(hits[i]);

  std::vector<ZeroCluster> out;
  for (auto& [root, zc] : grouped) {
    std::array<double, 3> centroid{0, 0, 0}, bmin = zc.samples[0], bmax = zc.samples[0];
    for (const auto& p : zc.samples)
      for (int d = 0; d < 3; ++d) {
        centroid[d] += p[d] / zc.samples.size();
        bmin[d] = std::min(bmin[d], p[d]);
        bmax[d] = std::max(bmax[d], p[d]);
      }
    zc.rep = zc.samples[0];
    double best = std::numeric_limits<double>::max();
    for (const auto& p : zc.samples)
      if (double d2 = dist2(p, centroid); d2 < best) {
        best = d2;
        zc.rep = p;
      }
    // A positive-dimensional zero locus leaves the Jacobian rank-deficient at
    // the zero (the null direction is the tangent); an isolated zero does not.
    {
      Eigen::Matrix3d J;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) J(i, j) = fn.d[i][j].eval(zc.rep);
      Eigen::JacobiSVD<Eigen::Matrix3d> svd(J);
      zc.curve = svd.singularValues()(2) <= 1e-7 * (svd.singularValues()(0) + 1e-300) ||
                 std::sqrt(dist2(bmin, bmax)) > 3 * r_link;
    }
    out.push_back(std::move(zc));
  }
  std::sort(out.begin(), out.end(),
            [](const ZeroCluster& a, const ZeroCluster& b) { return a.rep < b.rep; });
  return out;
}

double eval_s_integral(const ChartPoint& p) {
  if (p.chart != Chart::U3)
    throw std::invalid_argument("eval_s_integral: point must lie in chart U3");
  const double X = p.c[0], Y = p.c[1], t = p.c[2];
  const double t2 = t * t;
  const double base = 1 - t2 * Y;
  if (!(base > 0))
    throw std::domain_error("eval_s_integral: 1 - t^2*Y must be positive on the real branch");
  // (1 - t^2 Y)^(1/t^2) = exp(log1p(-t^2 Y) / t^2), removable at t = 0.
  const double expo = t2 == 0 ? -Y : std::log1p(-t2 * Y) / t2;
  return std::exp(expo) * (Y - X * X);
}

} // namespace pabi
