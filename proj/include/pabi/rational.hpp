#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace pabi {

// Exact coefficient type for the symbolic layers.  Arbitrary precision so
// repeated products of parsed decimal literals can never overflow.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

// Exact rational from a decimal literal, e.g. "0.25" -> 1/4.
// Accepts an optional sign, digits, and one optional fractional part.
inline Rational rational_from_decimal(const std::string& text) {
  std::size_t i = 0;
  bool neg = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    neg = (text[i] == '-');
    ++i;
  }
  BigInt num = 0;
  BigInt den = 1;
  bool any = false, frac = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (frac) throw std::invalid_argument("rational_from_decimal: second '.' in \"" + text + "\"");
      frac = true;
      continue;
    }
    if (c < '0' || c > '9')
      throw std::invalid_argument("rational_from_decimal: bad character in \"" + text + "\"");
    num = num * 10 + (c - '0');
    if (frac) den *= 10;
    any = true;
  }
  if (!any) throw std::invalid_argument("rational_from_decimal: no digits in \"" + text + "\"");
  Rational q(num, den);
  return neg ? -q : q;
}

} // namespace pabi
