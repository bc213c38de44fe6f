#include "pabi/svg.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace pabi {

namespace {

struct Mapper {
  const Domain& dom;
  double w, h, margin;
  double sx(double x) const { return margin + (x - dom.xmin) / dom.width() * (w - 2 * margin); }
  double sy(double y) const {
    return h - margin - (y - dom.ymin) / dom.height() * (h - 2 * margin);
  }
};

void append_num(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out += buf;
}

void append_seg(std::string& out, const Mapper& m, double x1, double y1, double x2, double y2) {
  out += "M ";
  append_num(out, m.sx(x1));
  out += ' ';
  append_num(out, m.sy(y1));
  out += " L ";
  append_num(out, m.sx(x2));
  out += ' ';
  append_num(out, m.sy(y2));
  out += ' ';
}

// Root of the linear interpolant between (a, fa) and (b, fb).
double cross(double a, double b, double fa, double fb) { return a + (b - a) * (fa / (fa - fb)); }

// Marching squares on one grid cell; emits 0, 1 or 2 segments of {f = 0}.
void cell_segments(std::string& out, const Mapper& m, double x0, double x1, double y0, double y1,
                   double f00, double f10, double f01, double f11) {
  int code = (f00 > 0) | (f10 > 0) << 1 | (f11 > 0) << 2 | (f01 > 0) << 3;
  if (code == 0 || code == 15) return;
  double bx = cross(x0, x1, f00, f10), tx = cross(x0, x1, f01, f11);
  double ly = cross(y0, y1, f00, f01), ry = cross(y0, y1, f10, f11);
  switch (code) {
    case 1: case 14: append_seg(out, m, x0, ly, bx, y0); break;
    case 2: case 13: append_seg(out, m, bx, y0, x1, ry); break;
    case 3: case 12: append_seg(out, m, x0, ly, x1, ry); break;
    case 4: case 11: append_seg(out, m, tx, y1, x1, ry); break;
    case 6: case 9: append_seg(out, m, bx, y0, tx, y1); break;
    case 7: case 8: append_seg(out, m, x0, ly, tx, y1); break;
    case 5: case 10: { // saddle: split by the center sign
      double fc = (f00 + f10 + f01 + f11) / 4;
      bool same = (code == 5) == (fc > 0);
      if (same) {
        append_seg(out, m, x0, ly, bx, y0);
        append_seg(out, m, tx, y1, x1, ry);
      } else {
        append_seg(out, m, x0, ly, tx, y1);
        append_seg(out, m, bx, y0, x1, ry);
      }
      break;
    }
  }
}

std::string curve_path(const BivarPolyD& f, const Domain& dom, int g, const Mapper& m) {
  std::vector<double> vals((g + 1) * (g + 1));
  for (int j = 0; j <= g; ++j)
    for (int i = 0; i <= g; ++i) {
      std::array<double, 2> at{dom.xmin + dom.width() * i / g, dom.ymin + dom.height() * j / g};
      vals[j * (g + 1) + i] = f.eval(at);
    }
  std::string d;
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) {
      double x0 = dom.xmin + dom.width() * i / g, x1 = dom.xmin + dom.width() * (i + 1) / g;
      double y0 = dom.ymin + dom.height() * j / g, y1 = dom.ymin + dom.height() * (j + 1) / g;
      cell_segments(d, m, x0, x1, y0, y1, vals[j * (g + 1) + i], vals[j * (g + 1) + i + 1],
                    vals[(j + 1) * (g + 1) + i], vals[(j + 1) * (g + 1) + i + 1]);
    }
  return d;
}

} // namespace

std::string render_portrait(const DarbouxSystem& sys, const PortraitOptions& opt,
                            std::vector<std::string>* warnings) {
  const Domain& dom = sys.domain();
  Mapper m{dom, double(opt.width), double(opt.height), 40};
  auto warn = [&](const std::string& s) {
    if (warnings) warnings->push_back(s);
  };

  std::string svg;
  char head[256];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 %d %d\">\n", opt.width,
                opt.height);
  svg += head;
  svg += "<style>path{fill:none;stroke-width:1.2}.oval{stroke:#3566a8}.curve-p0{stroke:#c23b4b;"
         "stroke-width:1.6}.curve-factor{stroke:#2c7a3f;stroke-width:1.6}"
         ".marker{stroke:#000;fill:#000}</style>\n";
  {
    char frame[160];
    std::snprintf(frame, sizeof frame,
                  "<rect x=\"%.6f\" y=\"%.6f\" width=\"%.6f\" height=\"%.6f\" fill=\"#ffffff\" "
                  "stroke=\"#888888\"/>\n",
                  m.sx(dom.xmin), m.sy(dom.ymax), m.sx(dom.xmax) - m.sx(dom.xmin),
                  m.sy(dom.ymin) - m.sy(dom.ymax));
    svg += frame;
  }

  for (double t : opt.levels) {
    try {
      Cycle c = trace_oval(sys, t, opt.trace);
      std::string d = "M ";
      for (std::size_t k = 0; k < c.points.size(); ++k) {
        if (k) d += "L ";
        append_num(d, m.sx(c.points[k].x().real()));
        d += ' ';
        append_num(d, m.sy(c.points[k].y().real()));
        d += ' ';
      }
      d += 'Z';
      svg += "<path class=\"oval\" d=\"" + d + "\"/>\n";
    } catch (const std::exception& e) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "level t=%.6g skipped: ", t);
      warn(buf + std::string(e.what()));
    }
  }

  svg += "<path class=\"curve-p0\" d=\"" + curve_path(sys.num().p0, dom, opt.curve_grid, m) +
         "\"/>\n";
  for (const auto& f : sys.num().factors)
    svg += "<path class=\"curve-factor\" d=\"" + curve_path(f.p, dom, opt.curve_grid, m) + "\"/>\n";

  try {
    RealPoint c = find_center(sys).location;
    char buf[128];
    std::snprintf(buf, sizeof buf, "<circle class=\"marker\" cx=\"%.6f\" cy=\"%.6f\" r=\"3.5\"/>\n",
                  m.sx(c.x()), m.sy(c.y()));
    svg += buf;
  } catch (const std::exception& e) {
    warn(std::string("center marker skipped: ") + e.what());
  }
  try {
    RealPoint tp = find_turning_point(sys).location;
    double cx = m.sx(tp.x()), cy = m.sy(tp.y());
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "<path class=\"marker\" d=\"M %.6f %.6f L %.6f %.6f M %.6f %.6f L %.6f %.6f\"/>\n",
                  cx - 5, cy, cx + 5, cy, cx, cy - 5, cx, cy + 5);
    svg += buf;
  } catch (const std::exception& e) {
    warn(std::string("turning-point marker skipped: ") + e.what());
  }

  svg += "</svg>\n";
  return svg;
}

} // namespace pabi
