#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "pabi/parse.hpp"
#include "pabi/polynomial.hpp"

namespace pabi {

using Complex = std::complex<double>;
using RealPoint = Eigen::Vector2d;
using CPoint = Eigen::Vector2cd;

class LeafBoundaryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateContactError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Domain {
  double xmin = -1, xmax = 1, ymin = -1, ymax = 1;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(const RealPoint& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
  }
};

struct Factor {
  BivarPoly poly;
  Rational exponent; // a_i > 0
};

// eta = dx * dx-coefficient + dy * dy-coefficient, polynomial entries.
struct OneForm {
  BivarPoly dx, dy;
};

// Integer branch counts for log H = sum a_i (Log P_i + 2 pi i w_i)
//                                   + eps (Log P0 + 2 pi i w0).
// Index order: one entry per nest factor first, P0 last.
struct Windings {
  std::vector<int> factors;
  int p0 = 0;
};

struct NumericFactor {
  BivarPolyD p, px, py;
  double a;
};

// Double-precision mirrors of the exact data, built once per system.
struct NumericSystem {
  BivarPolyD p0, p0x, p0y;
  std::vector<NumericFactor> factors;
  BivarPolyD eta_dx, eta_dy;
  // Symbolic omega coefficients A, B in (x, y, e) and their plane partials.
  TriPolyD A, B, Ax, Ay, Bx, By;
};

class DarbouxSystem {
public:
  DarbouxSystem(BivarPoly p0, std::vector<Factor> factors, double epsilon, OneForm eta,
                Domain domain);

  const BivarPoly& p0() const { return p0_; }
  const std::vector<Factor>& factors() const { return factors_; }
  double epsilon() const { return epsilon_; }
  const OneForm& eta() const { return eta_; }
  const Domain& domain() const { return domain_; }
  const NumericSystem& num() const { return num_; }

  // Exact omega coefficients with epsilon promoted to the third variable.
  const TriPoly& omega_dx_sym() const { return A_; }
  const TriPoly& omega_dy_sym() const { return B_; }

  std::size_t factor_count() const { return factors_.size(); }

private:
  BivarPoly p0_;
  std::vector<Factor> factors_;
  double epsilon_;
  OneForm eta_;
  Domain domain_;
  TriPoly A_, B_;
  NumericSystem num_;
};

DarbouxSystem with_epsilon(const DarbouxSystem& sys, double epsilon);
DarbouxSystem with_eta(const DarbouxSystem& sys, OneForm eta);

// The running example: P0 = y - x^2, one nest factor 1 - y with a = 1.
DarbouxSystem model_system(double epsilon, OneForm eta = {parse_poly("0"), parse_poly("x + 2*y")});

// One-variable contact family used by the blow-up remark: P0 = x,
// single factor 1 - y + a*x, weights (1,1,1).
DarbouxSystem toy_system(double epsilon, const Rational& a);

// Coefficients (A, B) of omega_eps = A dx + B dy at a point; polynomial in the
// point, no division.
RealPoint omega_coefficients(const DarbouxSystem& sys, const RealPoint& p);
CPoint omega_coefficients(const DarbouxSystem& sys, const CPoint& p);

// log H = sum a_i Log P_i + eps Log P0 plus 2 pi i times the winding data.
// Throws LeafBoundaryError when a factor vanishes at the point.
Complex eval_log_H(const DarbouxSystem& sys, const CPoint& p, const Windings* w = nullptr);
Complex eval_log_H(const DarbouxSystem& sys, const RealPoint& p);

// Gradient of log H (no winding dependence).
CPoint grad_log_H(const DarbouxSystem& sys, const CPoint& p);

// Factor values in winding order (factors..., P0 last).
std::vector<Complex> factor_values(const DarbouxSystem& sys, const CPoint& p);

struct CriticalPoint {
  enum class Kind { Center, Saddle, Tangency };
  RealPoint location;
  double value_t = 0; // H_eps at the point
  Kind kind = Kind::Center;
};

// Newton solve of (A, B) = 0 seeded from `seed` or from a domain grid scan.
CriticalPoint find_center(const DarbouxSystem& sys,
                          std::optional<RealPoint> seed = std::nullopt);

struct TurningPoint {
  RealPoint location;
  double contact_coeff = 0;       // second derivative of P0 along the eps=0 flow
  std::vector<RealPoint> all;     // every root found in the domain, first returned
};

// Tangency point of {P0 = 0} with the unperturbed foliation: solves
// {P0 = 0, omega_0 ^ dP0 = 0} and verifies quadratic contact.
TurningPoint find_turning_point(const DarbouxSystem& sys);

// Closed-form center value for the model fixture, eps^eps / (1+eps)^(1+eps).
double model_t_center(double epsilon);

} // namespace pabi
