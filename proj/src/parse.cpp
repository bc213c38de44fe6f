#include "pabi/parse.hpp"

#include <cctype>

namespace pabi::detail {
namespace {

using Terms = std::map<std::vector<int>, Rational>;

// Dense term accumulator used only during parsing; exponent vectors all have
// the same length as the variable list.
struct Poly {
  Terms terms;

  static Poly constant(std::size_t nvars, const Rational& c) {
    Poly p;
    if (c != 0) p.terms[std::vector<int>(nvars, 0)] = c;
    return p;
  }

  void add(const std::vector<int>& e, const Rational& c) {
    auto it = terms.find(e);
    if (it == terms.end()) {
      if (c != 0) terms[e] = c;
    } else {
      it->second += c;
      if (it->second == 0) terms.erase(it);
    }
  }
};

Poly operator+(const Poly& a, const Poly& b) {
  Poly r = a;
  for (const auto& [e, c] : b.terms) r.add(e, c);
  return r;
}

Poly operator-(const Poly& a, const Poly& b) {
  Poly r = a;
  for (const auto& [e, c] : b.terms) r.add(e, -c);
  return r;
}

Poly operator*(const Poly& a, const Poly& b) {
  Poly r;
  for (const auto& [ea, ca] : a.terms)
    for (const auto& [eb, cb] : b.terms) {
      std::vector<int> e(ea.size());
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      r.add(e, ca * cb);
    }
  return r;
}

Poly poly_pow(const Poly& p, long k, std::size_t nvars) {
  Poly r = Poly::constant(nvars, 1);
  for (long i = 0; i < k; ++i) r = r * p;
  return r;
}

struct Parser {
  const std::string& text;
  const std::vector<std::string>& vars;
  std::size_t pos = 0;

  Parser(const std::string& t, const std::vector<std::string>& v) : text(t), vars(v) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace((unsigned char)text[pos])) ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

  Poly parse() {
    Poly p = expr();
    if (!at_end()) fail(std::string("unexpected character '") + text[pos] + "'");
    return p;
  }

  Poly expr() {
    Poly acc = term();
    for (;;) {
      char c = peek();
      if (c == '+') {
        ++pos;
        acc = acc + term();
      } else if (c == '-') {
        ++pos;
        acc = acc - term();
      } else {
        return acc;
      }
    }
  }

  Poly term() {
    bool neg = false;
    for (;;) {
      char c = peek();
      if (c == '-') {
        neg = !neg;
        ++pos;
      } else if (c == '+') {
        ++pos;
      } else {
        break;
      }
    }
    Poly acc = factor();
    while (peek() == '*') {
      ++pos;
      acc = acc * factor();
    }
    if (neg) acc = Poly::constant(vars.size(), 0) - acc;
    return acc;
  }

  Poly factor() {
    Poly base = atom();
    if (peek() == '^') {
      ++pos;
      skip_ws();
      std::size_t at = pos;
      if (pos < text.size() && (text[pos] == '-' || text[pos] == '+'))
        fail("exponent must be a nonnegative integer literal");
      if (pos >= text.size() || !std::isdigit((unsigned char)text[pos]))
        fail("exponent must be a nonnegative integer literal");
      long k = 0;
      while (pos < text.size() && std::isdigit((unsigned char)text[pos])) {
        k = k * 10 + (text[pos] - '0');
        if (k > 1000) throw ParseError("exponent too large", at);
        ++pos;
      }
      if (pos < text.size() && text[pos] == '.')
        throw ParseError("exponent must be a nonnegative integer literal", at);
      return poly_pow(base, k, vars.size());
    }
    return base;
  }

  Poly atom() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    char c = text[pos];
    if (c == '(') {
      ++pos;
      Poly p = expr();
      if (peek() != ')') fail("expected ')'");
      ++pos;
      return p;
    }
    if (std::isdigit((unsigned char)c) || c == '.') return number();
    if (std::isalpha((unsigned char)c) || c == '_') return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  Poly number() {
    std::size_t start = pos;
    auto digits = [&]() {
      std::string d;
      while (pos < text.size() && std::isdigit((unsigned char)text[pos])) d += text[pos++];
      return d;
    };
    std::string intpart = digits();
    std::string fracpart;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      fracpart = digits();
      if (intpart.empty() && fracpart.empty()) throw ParseError("malformed number", start);
    }
    if (intpart.empty() && fracpart.empty()) throw ParseError("malformed number", start);
    Rational value = rational_from_decimal(intpart.empty() ? "0." + fracpart
                                                           : intpart + "." + fracpart);
    // Rational literal p/q; '/' is not an operator anywhere else.
    if (fracpart.empty() && pos < text.size() && text[pos] == '/') {
      std::size_t slash = pos;
      ++pos;
      std::string den = digits();
      if (den.empty()) throw ParseError("expected integer denominator after '/'", slash);
      Rational d = rational_from_decimal(den);
      if (d == 0) throw ParseError("zero denominator", slash);
      value /= d;
    }
    return Poly::constant(vars.size(), value);
  }

  Poly identifier() {
    std::size_t start = pos;
    std::string name;
    while (pos < text.size() &&
           (std::isalnum((unsigned char)text[pos]) || text[pos] == '_'))
      name += text[pos++];
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i] == name) {
        Poly p;
        std::vector<int> e(vars.size(), 0);
        e[i] = 1;
        p.terms[e] = 1;
        return p;
      }
    }
    std::string known;
    for (const auto& v : vars) known += (known.empty() ? "" : ", ") + v;
    throw ParseError("unknown variable '" + name + "' (expected one of: " + known + ")", start);
  }
};

} // namespace

std::map<std::vector<int>, Rational> parse_terms(const std::string& text,
                                                 const std::vector<std::string>& vars) {
  Parser p(text, vars);
  return p.parse().terms;
}

} // namespace pabi::detail
