#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pabi/rational.hpp"

namespace pabi {

// Exponent tuple ordering: total degree first, then x-major lexicographic.
// This is also the canonical printing order, so iteration is deterministic.
template <int N>
struct GradedLex {
  bool operator()(const std::array<int, N>& a, const std::array<int, N>& b) const {
    int da = std::accumulate(a.begin(), a.end(), 0);
    int db = std::accumulate(b.begin(), b.end(), 0);
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }
};

// Sparse polynomial in N variables over a scalar coefficient ring.
// Invariant: no stored term has a zero coefficient.
template <typename Scalar, int N>
class Polynomial {
public:
  using Exponents = std::array<int, N>;
  using TermMap = std::map<Exponents, Scalar, GradedLex<N>>;

  Polynomial() = default;
  explicit Polynomial(const Scalar& c) {
    if (!(c == Scalar(0))) terms_[Exponents{}] = c;
  }

  static Polynomial variable(int var) {
    Polynomial p;
    Exponents e{};
    e.at(var) = 1;
    p.terms_[e] = Scalar(1);
    return p;
  }

  static Polynomial monomial(const Exponents& e, const Scalar& c) {
    Polynomial p;
    if (!(c == Scalar(0))) p.terms_[e] = c;
    return p;
  }

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  Scalar coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Scalar(0) : it->second;
  }

  int total_degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_)
      d = std::max(d, std::accumulate(e.begin(), e.end(), 0));
    return d;
  }

  int degree_in(int var) const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e.at(var));
    return d;
  }

  void add_term(const Exponents& e, const Scalar& c) {
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (!(c == Scalar(0))) terms_[e] = c;
      return;
    }
    it->second += c;
    if (it->second == Scalar(0)) terms_.erase(it);
  }

  Polynomial operator-() const {
    Polynomial r = *this;
    for (auto& [e, c] : r.terms_) c = -c;
    return r;
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial r;
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponents e;
        for (int i = 0; i < N; ++i) e[i] = ea[i] + eb[i];
        r.add_term(e, ca * cb);
      }
    return r;
  }

  friend Polynomial operator*(const Scalar& s, const Polynomial& p) {
    Polynomial r;
    if (s == Scalar(0)) return r;
    r.terms_ = p.terms_;
    for (auto& [e, c] : r.terms_) c = s * c;
    return r;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.terms_ == b.terms_;
  }

  // Evaluation over any ring the coefficients embed into (double, complex,
  // Rational).  Powers of each coordinate are cached up to the needed degree.
  template <typename S>
  S eval(const std::array<S, N>& pt) const {
    std::array<std::vector<S>, N> pows;
    for (int i = 0; i < N; ++i) pows[i].push_back(S(1));
    S acc(0);
    for (const auto& [e, c] : terms_) {
      S m = scalar_cast<S>(c);
      for (int i = 0; i < N; ++i) {
        auto& pw = pows[i];
        while ((int)pw.size() <= e[i]) pw.push_back(pw.back() * pt[i]);
        m *= pw[e[i]];
      }
      acc += m;
    }
    return acc;
  }

  // Concrete overload so braced argument lists deduce ({x, y} -> double).
  double eval(const std::array<double, N>& pt) const { return eval<double>(pt); }

private:
  template <typename To, typename From>
  static To scalar_cast(const From& v) {
    if constexpr (std::is_same_v<To, From>) return v;
    else if constexpr (std::is_same_v<From, Rational>) return To(to_double(v));
    else return To(v);
  }

  TermMap terms_;
};

template <typename Scalar, int N>
Polynomial<Scalar, N> pow(const Polynomial<Scalar, N>& p, int k) {
  if (k < 0) throw std::invalid_argument("pow: negative exponent");
  Polynomial<Scalar, N> r{Scalar(1)};
  for (int i = 0; i < k; ++i) r = r * p;
  return r;
}

template <typename Scalar, int N>
Polynomial<Scalar, N> derivative(const Polynomial<Scalar, N>& p, int var) {
  Polynomial<Scalar, N> r;
  for (const auto& [e, c] : p.terms()) {
    if (e.at(var) == 0) continue;
    auto e2 = e;
    e2[var] -= 1;
    r.add_term(e2, Scalar(e[var]) * c);
  }
  return r;
}

// Substitute each source variable by a monomial c * prod target_var^k.
// Used by the blow-up charts, where every chart map is monomial.
template <typename Scalar, int N>
struct Monomial {
  std::array<int, N> exponents{};
  Scalar coeff{1};
};

template <typename Scalar, int N, int M>
Polynomial<Scalar, N> substitute_monomials(const Polynomial<Scalar, M>& p,
                                           const std::array<Monomial<Scalar, N>, M>& image) {
  Polynomial<Scalar, N> r;
  for (const auto& [e, c] : p.terms()) {
    Scalar coeff = c;
    std::array<int, N> ex{};
    for (int i = 0; i < M; ++i) {
      for (int rep = 0; rep < e[i]; ++rep) coeff *= image[i].coeff;
      for (int j = 0; j < N; ++j) ex[j] += e[i] * image[i].exponents[j];
    }
    r.add_term(ex, coeff);
  }
  return r;
}

// Smallest power of `var` dividing every term; 0 for the zero polynomial.
template <typename Scalar, int N>
int valuation_in(const Polynomial<Scalar, N>& p, int var) {
  int v = -1;
  for (const auto& [e, c] : p.terms()) v = (v < 0) ? e.at(var) : std::min(v, e.at(var));
  return v < 0 ? 0 : v;
}

template <typename Scalar, int N>
Polynomial<Scalar, N> divide_power(const Polynomial<Scalar, N>& p, int var, int k) {
  Polynomial<Scalar, N> r;
  for (const auto& [e, c] : p.terms()) {
    if (e.at(var) < k) throw std::invalid_argument("divide_power: not divisible");
    auto e2 = e;
    e2[var] -= k;
    r.add_term(e2, c);
  }
  return r;
}

template <int N>
Polynomial<double, N> to_double(const Polynomial<Rational, N>& p) {
  Polynomial<double, N> r;
  for (const auto& [e, c] : p.terms()) r.add_term(e, to_double(c));
  return r;
}

inline std::string format_coeff(const Rational& q) {
  std::ostringstream os;
  os << numerator(q);
  if (denominator(q) != 1) os << "/" << denominator(q);
  return os.str();
}

inline std::string format_coeff(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Canonical text form, ascending graded-lex, re-parseable by parse_polynomial.
template <typename Scalar, int N, std::size_t M>
std::string to_string(const Polynomial<Scalar, N>& p, const std::array<std::string, M>& vars) {
  static_assert(M == static_cast<std::size_t>(N), "one name per variable");
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    Scalar a = c;
    bool neg = a < Scalar(0);
    if (neg) a = -a;
    if (first) {
      if (neg) os << "-";
      first = false;
    } else {
      os << (neg ? " - " : " + ");
    }
    std::string mono;
    for (int i = 0; i < N; ++i) {
      if (e[i] == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += vars[i];
      if (e[i] > 1) mono += "^" + std::to_string(e[i]);
    }
    if (mono.empty()) {
      os << format_coeff(a);
    } else if (a == Scalar(1)) {
      os << mono;
    } else {
      os << format_coeff(a) << "*" << mono;
    }
  }
  return os.str();
}

using BivarPoly = Polynomial<Rational, 2>;
using TriPoly = Polynomial<Rational, 3>;
using BivarPolyD = Polynomial<double, 2>;
using TriPolyD = Polynomial<double, 3>;

} // namespace pabi
