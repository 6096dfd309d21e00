#include "blockspec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace blockspec {

namespace {

const char* kLineColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& heatmap_palette() {
  static const std::vector<std::string> p = {"#f7fbff", "#c6dbef", "#6baed6", "#2171b5", "#08306b"};
  return p;
}

std::string svg_line_plot(const std::vector<PlotSeries>& series, const PlotOptions& opts) {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = opts.width - left - right, ph = opts.height - top - bottom;

  auto ty = [&](double y) { return opts.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!opts.log_y || y > 0); };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\"" << opts.height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(opts.title) << "</text>\n";
  os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 4.0, fy = ymin + (ymax - ymin) * k / 4.0;
    const double yval = opts.log_y ? std::pow(10.0, fy) : fy;
    os << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">" << tick(fx)
       << "</text>\n";
    os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(top + (1.0 - k / 4.0) * ph + 4)
       << "\" text-anchor=\"end\">" << tick(yval) << "</text>\n";
  }
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(opts.height - 10.0) << "\" text-anchor=\"middle\">"
     << escape(opts.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(opts.y_label) << (opts.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kLineColors[k % (sizeof kLineColors / sizeof *kLineColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) os << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    os << "\"/>\n";
    const double ly = top + 14.0 * double(k) + 8;
    os << "<line x1=\"" << num(left + pw + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 28)
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(left + pw + 32) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_heatmap(const HeterogeneityReport& r, const std::string& title) {
  const std::size_t n = r.blocks();
  const double cell = std::clamp(360.0 / double(std::max<std::size_t>(n, 1)), 12.0, 60.0);
  const double left = 80, top = 40;
  const double width = left + cell * double(n) + 120, height = top + cell * double(n) + 30;
  const auto& pal = heatmap_palette();

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(left) << "\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    os << "<text x=\"" << num(left - 4) << "\" y=\"" << num(top + cell * (double(i) + 0.5) + 4)
       << "\" text-anchor=\"end\">" << escape(r.labels[i]) << "</text>\n";
    for (std::size_t j = 0; j < n; ++j) {
      const double v = r.at(i, j);
      const std::size_t bin = std::min<std::size_t>(pal.size() - 1, std::size_t(std::max(0.0, v) * double(pal.size())));
      os << "<rect x=\"" << num(left + cell * double(j)) << "\" y=\"" << num(top + cell * double(i)) << "\" width=\""
         << num(cell) << "\" height=\"" << num(cell) << "\" fill=\"" << pal[bin] << "\" stroke=\"#999\"><title>"
         << tick(v) << "</title></rect>\n";
    }
  }
  const double lx = left + cell * double(n) + 16;
  for (std::size_t b = 0; b < pal.size(); ++b) {
    os << "<rect x=\"" << num(lx) << "\" y=\"" << num(top + 16.0 * double(b)) << "\" width=\"14\" height=\"14\" fill=\""
       << pal[b] << "\" stroke=\"#999\"/>\n";
    os << "<text x=\"" << num(lx + 20) << "\" y=\"" << num(top + 16.0 * double(b) + 11) << "\">" << tick(0.2 * double(b))
       << "-" << tick(0.2 * double(b + 1)) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace blockspec
