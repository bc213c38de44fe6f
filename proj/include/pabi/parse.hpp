#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pabi/polynomial.hpp"

namespace pabi {

// Byte offset of the offending character is kept for error reporting.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

namespace detail {
std::map<std::vector<int>, Rational> parse_terms(const std::string& text,
                                                 const std::vector<std::string>& vars);
}

// Polynomial parser over named variables: +, -, *, ^ with nonnegative integer
// exponents, parentheses, decimal and rational literals.  No division.
template <int N>
Polynomial<Rational, N> parse_polynomial(const std::string& text,
                                         const std::array<std::string, N>& vars) {
  std::vector<std::string> v(vars.begin(), vars.end());
  Polynomial<Rational, N> p;
  for (const auto& [e, c] : detail::parse_terms(text, v)) {
    std::array<int, N> ex{};
    std::copy(e.begin(), e.end(), ex.begin());
    p.add_term(ex, c);
  }
  return p;
}

inline BivarPoly parse_poly(const std::string& text) {
  return parse_polynomial<2>(text, {"x", "y"});
}

} // namespace pabi
