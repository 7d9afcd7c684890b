#include "scevae/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iomanip>
#include <sstream>

#include "scevae/dataio.hpp"

namespace scevae {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double left = 60, right = 150, top = 30, bottom = 40;
  int width, height;
  double lo, hi;
  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
  double ypix(double v) const { return top + plot_h() * (1.0 - (v - lo) / (hi - lo)); }
};

void axes(std::ostringstream& os, const Frame& f, const std::string& title,
          const std::string& x_label, const std::string& y_label) {
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << f.width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
     << esc(title) << "</text>\n";
  os << "<line x1=\"" << f.left << "\" y1=\"" << f.top + f.plot_h() << "\" x2=\""
     << f.left + f.plot_w() << "\" y2=\"" << f.top + f.plot_h() << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\""
     << f.top + f.plot_h() << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = f.lo + (f.hi - f.lo) * k / 4.0;
    os << "<text x=\"" << f.left - 5 << "\" y=\"" << f.ypix(v) + 4
       << "\" text-anchor=\"end\" font-size=\"10\">" << std::setprecision(3) << v << "</text>\n";
  }
  os << "<text x=\"" << f.left + f.plot_w() / 2 << "\" y=\"" << f.height - 8
     << "\" text-anchor=\"middle\" font-size=\"12\">" << esc(x_label) << "</text>\n";
  os << "<text x=\"14\" y=\"" << f.top + f.plot_h() / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
     << f.top + f.plot_h() / 2 << ")\">" << esc(y_label) << "</text>\n";
}

void range(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

}  // namespace

std::string render_svg(const LinePlot& plot, int width, int height) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t n = 0;
  for (const auto& s : plot.series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  range(lo, hi);
  Frame f{60, 150, 30, 40, width, height, lo, hi};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\">\n";
  axes(os, f, plot.title, plot.x_label, plot.y_label);
  const double dx = n > 1 ? f.plot_w() / static_cast<double>(n - 1) : 0.0;
  os << "<text x=\"" << f.left << "\" y=\"" << f.top + f.plot_h() + 14
     << "\" font-size=\"10\" text-anchor=\"middle\">0</text>\n";
  if (n > 1) {
    os << "<text x=\"" << f.left + f.plot_w() << "\" y=\"" << f.top + f.plot_h() + 14
       << "\" font-size=\"10\" text-anchor=\"middle\">" << n - 1 << "</text>\n";
  }
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const std::string color = s.color.empty() ? kPalette[k % 6] : s.color;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\""
       << (s.dashed ? " stroke-dasharray=\"4 3\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (!std::isfinite(s.values[i])) continue;
      os << f.left + dx * static_cast<double>(i) << ',' << f.ypix(s.values[i]) << ' ';
    }
    os << "\"/>\n";
    const double ly = f.top + 15.0 + 16.0 * static_cast<double>(k);
    os << "<line x1=\"" << width - f.right + 10 << "\" y1=\"" << ly << "\" x2=\""
       << width - f.right + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color << "\"/>\n";
    os << "<text x=\"" << width - f.right + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
       << esc(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_svg(const BarChart& chart, int width, int height) {
  double lo = 0.0, hi = 0.0;
  for (const auto& g : chart.groups) {
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double e = i < g.errors.size() && std::isfinite(g.errors[i]) ? g.errors[i] : 0.0;
      if (!std::isfinite(g.values[i])) continue;
      hi = std::max(hi, g.values[i] + e);
      lo = std::min(lo, g.values[i] - e);
    }
  }
  range(lo, hi);
  Frame f{60, 150, 30, 40, width, height, lo, hi};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\">\n";
  axes(os, f, chart.title, "", chart.y_label);
  const std::size_t ng = std::max<std::size_t>(chart.groups.size(), 1);
  const std::size_t nc = std::max<std::size_t>(chart.categories.size(), 1);
  const double gw = f.plot_w() / static_cast<double>(ng);
  const double bw = 0.8 * gw / static_cast<double>(nc);
  for (std::size_t gi = 0; gi < chart.groups.size(); ++gi) {
    const auto& g = chart.groups[gi];
    const double gx = f.left + gw * static_cast<double>(gi) + 0.1 * gw;
    for (std::size_t c = 0; c < g.values.size() && c < nc; ++c) {
      const double v = g.values[c];
      if (!std::isfinite(v)) continue;
      const double x = gx + bw * static_cast<double>(c);
      const double y0 = f.ypix(0.0), y1 = f.ypix(v);
      os << "<rect x=\"" << x << "\" y=\"" << std::min(y0, y1) << "\" width=\"" << bw * 0.9
         << "\" height=\"" << std::abs(y0 - y1) << "\" fill=\"" << kPalette[c % 6] << "\"/>\n";
      if (c < g.errors.size() && std::isfinite(g.errors[c])) {
        const double xm = x + bw * 0.45;
        os << "<line x1=\"" << xm << "\" y1=\"" << f.ypix(v - g.errors[c]) << "\" x2=\"" << xm
           << "\" y2=\"" << f.ypix(v + g.errors[c]) << "\" stroke=\"black\"/>\n";
      }
    }
    os << "<text x=\"" << gx + 0.4 * gw << "\" y=\"" << f.top + f.plot_h() + 14
       << "\" font-size=\"10\" text-anchor=\"middle\">" << esc(g.label) << "</text>\n";
  }
  for (std::size_t c = 0; c < chart.categories.size(); ++c) {
    const double ly = f.top + 15.0 + 16.0 * static_cast<double>(c);
    os << "<rect x=\"" << width - f.right + 10 << "\" y=\"" << ly - 6
       << "\" width=\"12\" height=\"10\" fill=\"" << kPalette[c % 6] << "\"/>\n";
    os << "<text x=\"" << width - f.right + 28 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
       << esc(chart.categories[c]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void save_svg(const std::filesystem::path& path, const std::string& svg) { write_text(path, svg); }

}  // namespace scevae
