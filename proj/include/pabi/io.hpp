#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pabi/system.hpp"

namespace pabi {

// System-file schema violation; path() points into the document, e.g.
// "$.factors[2].exponent".
class SchemaError : public std::runtime_error {
public:
  SchemaError(const std::string& what, std::string doc_path)
      : std::runtime_error(what + " (at " + doc_path + ")"), path_(std::move(doc_path)) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

struct LoadedSystem {
  DarbouxSystem sys;
  // Canonicalized system document (signs normalized, polynomials reprinted,
  // keys sorted): the stable base string for cache keys.
  std::string canonical;
  // Human-readable adjustments made during loading (factor sign flips).
  std::vector<std::string> notes;
};

// Schema: {"p0": string, "factors": [{"poly": string, "exponent": number|"p/q"}...],
//          "eta": {"dx": string, "dy": string},   (optional; default 0)
//          "epsilon": number >= 0, "domain": [xmin, xmax, ymin, ymax]}.
// Unknown keys are rejected.  Factors are sign-normalized so the nest interior
// (around the located center) has every factor and p0 positive; flips are
// reported in notes.
LoadedSystem load_system_text(const std::string& text);
LoadedSystem load_system_file(const std::string& path);

} // namespace pabi
