#include "pabi/system.hpp"

#include <cmath>

namespace pabi {

namespace {

const double kPi = 3.14159265358979323846;

TriPoly lift(const BivarPoly& p) {
  TriPoly r;
  for (const auto& [e, c] : p.terms()) r.add_term({e[0], e[1], 0}, c);
  return r;
}

// prod_{j != i} P_j for every i, plus the full product.
struct FactorProducts {
  std::vector<TriPoly> skip;
  TriPoly all{Rational(1)};
};

FactorProducts factor_products(const std::vector<Factor>& factors) {
  FactorProducts fp;
  const std::size_t k = factors.size();
  fp.skip.assign(k, TriPoly{Rational(1)});
  for (std::size_t i = 0; i < k; ++i) {
    TriPoly pi = lift(factors[i].poly);
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) fp.skip[j] = fp.skip[j] * pi;
    fp.all = fp.all * pi;
  }
  return fp;
}

TriPolyD to_num(const TriPoly& p) { return to_double(p); }

} // namespace

DarbouxSystem::DarbouxSystem(BivarPoly p0, std::vector<Factor> factors, double epsilon,
                             OneForm eta, Domain domain)
    : p0_(std::move(p0)),
      factors_(std::move(factors)),
      epsilon_(epsilon),
      eta_(std::move(eta)),
      domain_(domain) {
  for (const auto& f : factors_)
    if (!(f.exponent > 0)) throw std::invalid_argument("factor exponent must be positive");
  if (epsilon_ < 0) throw std::invalid_argument("epsilon must be nonnegative");

  TriPoly P0 = lift(p0_);
  TriPoly e = TriPoly::variable(2);
  FactorProducts fp = factor_products(factors_);
  TriPoly Asym, Bsym;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    TriPoly pix = lift(derivative(factors_[i].poly, 0));
    TriPoly piy = lift(derivative(factors_[i].poly, 1));
    Asym += factors_[i].exponent * (fp.skip[i] * pix);
    Bsym += factors_[i].exponent * (fp.skip[i] * piy);
  }
  Asym = P0 * Asym + e * fp.all * lift(derivative(p0_, 0));
  Bsym = P0 * Bsym + e * fp.all * lift(derivative(p0_, 1));
  A_ = Asym;
  B_ = Bsym;

  num_.p0 = to_double(p0_);
  num_.p0x = derivative(num_.p0, 0);
  num_.p0y = derivative(num_.p0, 1);
  for (const auto& f : factors_) {
    NumericFactor nf;
    nf.p = to_double(f.poly);
    nf.px = derivative(nf.p, 0);
    nf.py = derivative(nf.p, 1);
    nf.a = to_double(f.exponent);
    num_.factors.push_back(std::move(nf));
  }
  num_.eta_dx = to_double(eta_.dx);
  num_.eta_dy = to_double(eta_.dy);
  num_.A = to_num(A_);
  num_.B = to_num(B_);
  num_.Ax = derivative(num_.A, 0);
  num_.Ay = derivative(num_.A, 1);
  num_.Bx = derivative(num_.B, 0);
  num_.By = derivative(num_.B, 1);
}

DarbouxSystem with_epsilon(const DarbouxSystem& sys, double epsilon) {
  return DarbouxSystem(sys.p0(), sys.factors(), epsilon, sys.eta(), sys.domain());
}

DarbouxSystem with_eta(const DarbouxSystem& sys, OneForm eta) {
  return DarbouxSystem(sys.p0(), sys.factors(), sys.epsilon(), std::move(eta), sys.domain());
}

DarbouxSystem model_system(double epsilon, OneForm eta) {
  return DarbouxSystem(parse_poly("y - x^2"), {{parse_poly("1 - y"), Rational(1)}}, epsilon,
                       std::move(eta), Domain{-1, 1, 0, 1});
}

DarbouxSystem toy_system(double epsilon, const Rational& a) {
  BivarPoly f = parse_poly("1 - y") + a * parse_poly("x");
  return DarbouxSystem(parse_poly("x"), {{f, Rational(1)}}, epsilon,
                       {parse_poly("0"), parse_poly("0")}, Domain{-1, 1, -1, 1});
}

double model_t_center(double epsilon) {
  return std::exp(epsilon * std::log(epsilon) - (1 + epsilon) * std::log1p(epsilon));
}

RealPoint omega_coefficients(const DarbouxSystem& sys, const RealPoint& p) {
  std::array<double, 3> at{p.x(), p.y(), sys.epsilon()};
  return {sys.num().A.eval(at), sys.num().B.eval(at)};
}

CPoint omega_coefficients(const DarbouxSystem& sys, const CPoint& p) {
  std::array<Complex, 3> at{p.x(), p.y(), Complex(sys.epsilon())};
  return {sys.num().A.eval(at), sys.num().B.eval(at)};
}

std::vector<Complex> factor_values(const DarbouxSystem& sys, const CPoint& p) {
  std::array<Complex, 2> at{p.x(), p.y()};
  std::vector<Complex> v;
  v.reserve(sys.factor_count() + 1);
  for (const auto& f : sys.num().factors) v.push_back(f.p.eval(at));
  v.push_back(sys.num().p0.eval(at));
  return v;
}

Complex eval_log_H(const DarbouxSystem& sys, const CPoint& p, const Windings* w) {
  if (w && w->factors.size() != sys.factor_count())
    throw std::invalid_argument("eval_log_H: winding vector size mismatch");
  std::array<Complex, 2> at{p.x(), p.y()};
  Complex acc = 0;
  const Complex twopii(0, 2 * kPi);
  for (std::size_t i = 0; i < sys.num().factors.size(); ++i) {
    Complex v = sys.num().factors[i].p.eval(at);
    if (v == Complex(0)) throw LeafBoundaryError("factor vanishes at evaluation point");
    Complex lg = std::log(v);
    if (w) lg += twopii * double(w->factors[i]);
    acc += sys.num().factors[i].a * lg;
  }
  Complex v0 = sys.num().p0.eval(at);
  if (v0 == Complex(0)) throw LeafBoundaryError("P0 vanishes at evaluation point");
  Complex lg0 = std::log(v0);
  if (w) lg0 += twopii * double(w->p0);
  acc += sys.epsilon() * lg0;
  return acc;
}

Complex eval_log_H(const DarbouxSystem& sys, const RealPoint& p) {
  return eval_log_H(sys, CPoint(Complex(p.x()), Complex(p.y())));
}

CPoint grad_log_H(const DarbouxSystem& sys, const CPoint& p) {
  std::array<Complex, 2> at{p.x(), p.y()};
  CPoint g(0, 0);
  for (const auto& f : sys.num().factors) {
    Complex v = f.p.eval(at);
    if (v == Complex(0)) throw LeafBoundaryError("factor vanishes at evaluation point");
    g.x() += f.a * f.px.eval(at) / v;
    g.y() += f.a * f.py.eval(at) / v;
  }
  Complex v0 = sys.num().p0.eval(at);
  if (v0 == Complex(0)) throw LeafBoundaryError("P0 vanishes at evaluation point");
  g.x() += sys.epsilon() * sys.num().p0x.eval(at) / v0;
  g.y() += sys.epsilon() * sys.num().p0y.eval(at) / v0;
  return g;
}

namespace {

// Damped Newton for a 2x2 real system with analytic Jacobian.
template <typename F, typename J>
std::optional<RealPoint> newton2(const F& f, const J& jac, RealPoint p, double tol,
                                 int max_iter = 50) {
  RealPoint fv = f(p);
  for (int it = 0; it < max_iter; ++it) {
    if (fv.lpNorm<Eigen::Infinity>() <= tol) return p;
    Eigen::Matrix2d Jm = jac(p);
    if (std::abs(Jm.determinant()) < 1e-300) return std::nullopt;
    RealPoint step = Jm.partialPivLu().solve(fv);
    double lambda = 1.0;
    for (int damp = 0; damp < 25; ++damp) {
      RealPoint cand = p - lambda * step;
      RealPoint fc = f(cand);
      if (fc.norm() < fv.norm() || fc.lpNorm<Eigen::Infinity>() <= tol) {
        p = cand;
        fv = fc;
        break;
      }
      lambda *= 0.5;
      if (damp == 24) return std::nullopt;
    }
  }
  return fv.lpNorm<Eigen::Infinity>() <= tol ? std::optional<RealPoint>(p) : std::nullopt;
}

} // namespace

CriticalPoint find_center(const DarbouxSystem& sys, std::optional<RealPoint> seed) {
  const auto& n = sys.num();
  const double eps = sys.epsilon();
  auto f = [&](const RealPoint& p) { return omega_coefficients(sys, p); };
  auto jac = [&](const RealPoint& p) {
    std::array<double, 3> at{p.x(), p.y(), eps};
    Eigen::Matrix2d J;
    J << n.Ax.eval(at), n.Ay.eval(at), n.Bx.eval(at), n.By.eval(at);
    return J;
  };

  std::vector<RealPoint> seeds;
  if (seed) {
    seeds.push_back(*seed);
  } else {
    // Prefer seeds in the open nest interior (all factors and P0 positive).
    const Domain& d = sys.domain();
    const int g = 40;
    RealPoint best_in(0, 0), best_any(0, 0);
    double v_in = 1e300, v_any = 1e300;
    for (int i = 1; i < g; ++i)
      for (int j = 1; j < g; ++j) {
        RealPoint p(d.xmin + d.width() * i / g, d.ymin + d.height() * j / g);
        double r = f(p).norm();
        bool interior = n.p0.eval({p.x(), p.y()}) > 0;
        for (const auto& fac : n.factors)
          interior = interior && fac.p.eval({p.x(), p.y()}) > 0;
        if (interior && r < v_in) {
          v_in = r;
          best_in = p;
        }
        if (r < v_any) {
          v_any = r;
          best_any = p;
        }
      }
    if (v_in < 1e300) seeds.push_back(best_in);
    if (v_any < 1e300) seeds.push_back(best_any);
    if (seeds.empty()) throw ConvergenceError("find_center: empty seed grid");
  }

  for (const auto& s : seeds) {
    auto root = newton2(f, jac, s, 1e-12);
    if (!root) continue;
    CriticalPoint cp;
    cp.location = *root;
    Eigen::Matrix2d J = jac(*root);
    // Dual field (B, -A); classification by the linearization determinant.
    Eigen::Matrix2d Jd;
    Jd << J(1, 0), J(1, 1), -J(0, 0), -J(0, 1);
    double det = Jd.determinant();
    double scale = J.cwiseAbs().maxCoeff();
    double tol = 1e-9 * std::max(1.0, scale * scale);
    if (det > tol)
      cp.kind = CriticalPoint::Kind::Center;
    else if (det < -tol)
      cp.kind = CriticalPoint::Kind::Saddle;
    else
      cp.kind = CriticalPoint::Kind::Tangency;
    bool positive = n.p0.eval({root->x(), root->y()}) > 0;
    for (const auto& fac : n.factors)
      positive = positive && fac.p.eval({root->x(), root->y()}) > 0;
    cp.value_t = positive ? std::exp(eval_log_H(sys, *root).real())
                          : std::numeric_limits<double>::quiet_NaN();
    return cp;
  }
  throw ConvergenceError("find_center: Newton did not converge from any seed");
}

TurningPoint find_turning_point(const DarbouxSystem& sys) {
  // omega_0 = sum a_i (M / P_i) dP_i, the eps = 0 part of omega.
  BivarPolyD A0, B0;
  {
    const auto& fs = sys.factors();
    for (std::size_t i = 0; i < fs.size(); ++i) {
      BivarPoly skip{Rational(1)};
      for (std::size_t j = 0; j < fs.size(); ++j)
        if (j != i) skip = skip * fs[j].poly;
      A0 += to_double(fs[i].exponent * (skip * derivative(fs[i].poly, 0)));
      B0 += to_double(fs[i].exponent * (skip * derivative(fs[i].poly, 1)));
    }
  }
  const auto& n = sys.num();
  BivarPolyD W = A0 * n.p0y - B0 * n.p0x;
  BivarPolyD Wx = derivative(W, 0), Wy = derivative(W, 1);

  auto f = [&](const RealPoint& p) -> RealPoint {
    std::array<double, 2> at{p.x(), p.y()};
    return {n.p0.eval(at), W.eval(at)};
  };
  auto jac = [&](const RealPoint& p) {
    std::array<double, 2> at{p.x(), p.y()};
    Eigen::Matrix2d J;
    J << n.p0x.eval(at), n.p0y.eval(at), Wx.eval(at), Wy.eval(at);
    return J;
  };

  const Domain& d = sys.domain();
  std::vector<RealPoint> roots;
  const int g = 40;
  for (int i = 0; i <= g; ++i)
    for (int j = 0; j <= g; ++j) {
      RealPoint s(d.xmin + d.width() * i / g, d.ymin + d.height() * j / g);
      auto root = newton2(f, jac, s, 1e-12);
      if (!root || !d.contains(*root)) continue;
      // Corners of the polycycle (M = 0) are not turning points.
      double m = 1;
      for (const auto& fac : n.factors) m *= fac.p.eval({root->x(), root->y()});
      if (std::abs(m) < 1e-9) continue;
      bool dup = false;
      for (const auto& r : roots) dup = dup || (r - *root).norm() < 1e-7;
      if (!dup) roots.push_back(*root);
    }
  if (roots.empty()) throw ConvergenceError("find_turning_point: no root in domain");
  std::sort(roots.begin(), roots.end(), [](const RealPoint& a, const RealPoint& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });

  // Second derivative of P0 along the omega_0 flow, field v = (B0, -A0):
  // L1 = v . grad P0, L2 = v . grad L1.  Quadratic contact needs L2 != 0.
  BivarPolyD L1 = B0 * n.p0x - A0 * n.p0y;
  BivarPolyD L2 = B0 * derivative(L1, 0) - A0 * derivative(L1, 1);

  TurningPoint tp;
  tp.all = roots;
  tp.location = roots.front();
  std::array<double, 2> at{tp.location.x(), tp.location.y()};
  double vnorm2 = A0.eval(at) * A0.eval(at) + B0.eval(at) * B0.eval(at);
  if (vnorm2 < 1e-20)
    throw DegenerateContactError("find_turning_point: omega_0 vanishes at the root");
  tp.contact_coeff = L2.eval(at);
  if (std::abs(tp.contact_coeff) < 1e-8 * std::max(1.0, vnorm2))
    throw DegenerateContactError("find_turning_point: contact is cubic or higher");
  return tp;
}

} // namespace pabi
