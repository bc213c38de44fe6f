#include "pabi/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pabi {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& where) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw SchemaError("unknown key '" + k + "'", where + "." + k);
  for (const auto& k : required)
    if (!obj.contains(k)) throw SchemaError("missing key '" + k + "'", where);
}

BivarPoly poly_at(const json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError("polynomial must be a string", where);
  try {
    return parse_poly(j.get<std::string>());
  } catch (const ParseError& e) {
    throw SchemaError(std::string("bad polynomial: ") + e.what(), where);
  }
}

Rational exponent_at(const json& j, const std::string& where) {
  Rational a;
  if (j.is_number()) {
    a = Rational(j.get<double>()); // binary value taken exactly
  } else if (j.is_string()) {
    try {
      a = Rational(j.get<std::string>());
    } catch (const std::exception&) {
      throw SchemaError("exponent string must be an integer ratio like \"1/3\"", where);
    }
  } else {
    throw SchemaError("exponent must be a number or \"p/q\" string", where);
  }
  if (a <= 0) throw SchemaError("exponent must be positive", where);
  return a;
}

std::string print_poly(const BivarPoly& p) {
  return to_string(p, std::array<std::string, 2>{"x", "y"});
}

std::string print_rational(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

} // namespace

LoadedSystem load_system_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("not valid JSON: ") + e.what(), "$");
  }
  if (!doc.is_object()) throw SchemaError("document must be an object", "$");
  require_keys(doc, {"p0", "factors", "eta", "epsilon", "domain"},
               {"p0", "factors", "epsilon", "domain"}, "$");

  BivarPoly p0 = poly_at(doc["p0"], "$.p0");

  if (!doc["factors"].is_array() || doc["factors"].empty())
    throw SchemaError("factors must be a nonempty array", "$.factors");
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < doc["factors"].size(); ++i) {
    std::string where = "$.factors[" + std::to_string(i) + "]";
    const json& f = doc["factors"][i];
    if (!f.is_object()) throw SchemaError("factor must be an object", where);
    require_keys(f, {"poly", "exponent"}, {"poly", "exponent"}, where);
    factors.push_back({poly_at(f["poly"], where + ".poly"), exponent_at(f["exponent"], where + ".exponent")});
  }

  OneForm eta{BivarPoly{}, BivarPoly{}};
  if (doc.contains("eta")) {
    const json& e = doc["eta"];
    if (!e.is_object()) throw SchemaError("eta must be an object", "$.eta");
    require_keys(e, {"dx", "dy"}, {"dx", "dy"}, "$.eta");
    eta = {poly_at(e["dx"], "$.eta.dx"), poly_at(e["dy"], "$.eta.dy")};
  }

  if (!doc["epsilon"].is_number()) throw SchemaError("epsilon must be a number", "$.epsilon");
  double epsilon = doc["epsilon"].get<double>();
  if (epsilon < 0) throw SchemaError("epsilon must be >= 0", "$.epsilon");

  const json& dj = doc["domain"];
  if (!dj.is_array() || dj.size() != 4 || !dj[0].is_number() || !dj[1].is_number() ||
      !dj[2].is_number() || !dj[3].is_number())
    throw SchemaError("domain must be [xmin, xmax, ymin, ymax]", "$.domain");
  Domain dom{dj[0].get<double>(), dj[1].get<double>(), dj[2].get<double>(), dj[3].get<double>()};
  if (!(dom.xmin < dom.xmax) || !(dom.ymin < dom.ymax))
    throw SchemaError("domain must have xmin < xmax and ymin < ymax", "$.domain");

  LoadedSystem out{DarbouxSystem(p0, factors, epsilon, eta, dom), "", {}};

  // Sign normalization: the nest interior is where p0 and every factor are
  // positive.  Evaluated at the center; degenerate systems (epsilon = 0, or no
  // center in the domain) are left as written.
  if (epsilon > 0) {
    try {
      RealPoint c = find_center(out.sys).location;
      std::array<double, 2> at{c.x(), c.y()};
      bool flipped = false;
      if (to_double(p0).eval(at) < 0) {
        p0 = -p0;
        out.notes.push_back("p0 negated so the nest interior has p0 > 0");
        flipped = true;
      }
      for (std::size_t i = 0; i < factors.size(); ++i)
        if (to_double(factors[i].poly).eval(at) < 0) {
          factors[i].poly = -factors[i].poly;
          out.notes.push_back("factor " + std::to_string(i) +
                              " negated so the nest interior has it positive");
          flipped = true;
        }
      if (flipped) out.sys = DarbouxSystem(p0, factors, epsilon, eta, dom);
    } catch (const std::exception&) {
      // no locatable center: signs stay as written
    }
  }

  json canon;
  canon["p0"] = print_poly(out.sys.p0());
  canon["factors"] = json::array();
  for (const auto& f : out.sys.factors())
    canon["factors"].push_back({{"poly", print_poly(f.poly)}, {"exponent", print_rational(f.exponent)}});
  canon["eta"] = {{"dx", print_poly(out.sys.eta().dx)}, {"dy", print_poly(out.sys.eta().dy)}};
  canon["epsilon"] = epsilon;
  canon["domain"] = {dom.xmin, dom.xmax, dom.ymin, dom.ymax};
  out.canonical = canon.dump();
  return out;
}

LoadedSystem load_system_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open system file '" + path + "'", "$");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_system_text(buf.str());
}

} // namespace pabi
