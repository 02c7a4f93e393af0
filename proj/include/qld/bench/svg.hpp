#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace qld::bench {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

inline std::string escape_xml(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

// Minimal line chart. Non-finite points are skipped; log_x drops x <= 0.
inline std::string line_plot(const std::string& title, const std::string& xlabel,
                             const std::string& ylabel, const std::vector<Series>& series,
                             bool log_x = false, int width = 640, int height = 400) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  auto ok = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!log_x || x > 0); };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (ok(s.x[i], s.y[i])) {
        x0 = std::min(x0, tx(s.x[i]));
        x1 = std::max(x1, tx(s.x[i]));
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
  if (!std::isfinite(x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }
  const double L = 70, R = 150, T = 40, B = 50;
  const double pw = width - L - R, ph = height - T - B;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return T + (1 - (y - y0) / (y1 - y0)) * ph; };
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape_xml(title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    double fy = y0 + (y1 - y0) * k / 4.0, fx = x0 + (x1 - x0) * k / 4.0;
    double yy = T + (1 - k / 4.0) * ph, xx = L + k / 4.0 * pw;
    os << "<text x=\"" << L - 6 << "\" y=\"" << yy + 4 << "\" text-anchor=\"end\">" << fy << "</text>\n";
    os << "<text x=\"" << xx << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">"
       << (log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
  }
  os << "<text x=\"" << L + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
     << escape_xml(xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << T + ph / 2 << "\" transform=\"rotate(-90 16 " << T + ph / 2
     << ")\" text-anchor=\"middle\">" << escape_xml(ylabel) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 10];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (ok(s.x[i], s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    os << "\"><title>" << escape_xml(s.name) << "</title></polyline>\n";
    double ly = T + 14 + 16.0 * static_cast<double>(k);
    os << "<line x1=\"" << L + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << L + pw + 30
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << L + pw + 34 << "\" y=\"" << ly << "\">" << escape_xml(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace qld::bench
