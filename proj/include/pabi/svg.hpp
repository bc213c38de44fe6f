#pragma once

#include <string>
#include <vector>

#include "pabi/system.hpp"
#include "pabi/trace.hpp"

namespace pabi {

struct PortraitOptions {
  int width = 720, height = 560;
  int curve_grid = 360; // marching-squares resolution for the zero curves
  std::vector<double> levels; // t values whose ovals are drawn
  TraceOptions trace;
};

// Deterministic SVG phase portrait: one closed path per traceable level oval,
// one path per zero curve (p0 and each nest factor), plus center and
// turning-point markers.  Untraceable levels and unlocatable markers are
// skipped; a note per skip lands in *warnings when given.
std::string render_portrait(const DarbouxSystem& sys, const PortraitOptions& opt,
                            std::vector<std::string>* warnings = nullptr);

} // namespace pabi
