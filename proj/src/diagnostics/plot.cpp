#include "pgbias/diagnostics/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace pgbias {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

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

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0 ? 0.05 * std::abs(lo) : 1.0;
    lo -= pad;
    hi += pad;
  }
}

void header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& x_label, const std::string& y_label) {
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << num(kWidth - kLeft - kRight)
     << "\" height=\"" << num(kHeight - kTop - kBottom) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(kHeight - kBottom + 16)
       << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
       << "</text>\n";
  }
  os << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 12)
     << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << num((kTop + kHeight - kBottom) / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string svg_band_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<BandSeries>& series) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double sd = i < s.std.size() ? s.std[i] : 0.0;
      if (!std::isfinite(s.mean[i])) continue;
      f.x0 = std::min(f.x0, s.x[i]);
      f.x1 = std::max(f.x1, s.x[i]);
      f.y0 = std::min(f.y0, s.mean[i] - sd);
      f.y1 = std::max(f.y1, s.mean[i] + sd);
    }
  }
  if (!std::isfinite(f.x0)) f = {0, 1, 0, 1};
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);

  std::ostringstream os;
  header(os, title);
  axes(os, f, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    std::ostringstream upper, lower, line;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.mean[i])) continue;
      const double sd = i < s.std.size() ? s.std[i] : 0.0;
      upper << num(f.px(s.x[i])) << "," << num(f.py(s.mean[i] + sd)) << " ";
      line << num(f.px(s.x[i])) << "," << num(f.py(s.mean[i])) << " ";
    }
    for (std::size_t i = s.x.size(); i-- > 0;) {
      if (!std::isfinite(s.mean[i])) continue;
      const double sd = i < s.std.size() ? s.std[i] : 0.0;
      lower << num(f.px(s.x[i])) << "," << num(f.py(s.mean[i] - sd)) << " ";
    }
    os << "<polygon points=\"" << upper.str() << lower.str() << "\" fill=\"" << colour
       << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    os << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << colour
       << "\" stroke-width=\"1.5\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << num(kWidth - kRight + 10) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
       << num(kWidth - kRight + 30) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << colour
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(kWidth - kRight + 35) << "\" y=\"" << num(ly) << "\">" << escape(s.name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_heatmap(const std::string& title, const std::vector<double>& axis, const Table& grid) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : grid.data()) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  widen(lo, hi);
  Frame f{axis.front(), axis.back(), axis.front(), axis.back()};
  const double cw = (kWidth - kLeft - kRight) / static_cast<double>(axis.size());
  const double ch = (kHeight - kTop - kBottom) / static_cast<double>(axis.size());

  std::ostringstream os;
  header(os, title);
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      const double t = std::isfinite(grid(i, j)) ? (grid(i, j) - lo) / (hi - lo) : 0.0;
      const int red = static_cast<int>(std::lround(255 * t));
      const int blue = 255 - red;
      os << "<rect x=\"" << num(kLeft + cw * static_cast<double>(i)) << "\" y=\""
         << num(kHeight - kBottom - ch * static_cast<double>(j + 1)) << "\" width=\"" << num(cw + 0.5)
         << "\" height=\"" << num(ch + 0.5) << "\" fill=\"rgb(" << red << ",64," << blue << ")\"/>\n";
    }
  }
  axes(os, f, "a", "b");
  os << "<text x=\"" << num(kWidth - kRight + 10) << "\" y=\"" << num(kTop + 14) << "\">max " << tick(hi)
     << "</text>\n";
  os << "<text x=\"" << num(kWidth - kRight + 10) << "\" y=\"" << num(kTop + 32) << "\">min " << tick(lo)
     << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string svg_scatter(const std::string& title, const Table& points, const std::vector<double>& values) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    f.x0 = std::min(f.x0, points(r, 0));
    f.x1 = std::max(f.x1, points(r, 0));
    f.y0 = std::min(f.y0, points(r, 1));
    f.y1 = std::max(f.y1, points(r, 1));
    lo = std::min(lo, values[r]);
    hi = std::max(hi, values[r]);
  }
  if (points.rows() == 0) f = {0, 1, 0, 1}, lo = 0, hi = 1;
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);
  widen(lo, hi);

  std::ostringstream os;
  header(os, title);
  axes(os, f, "PC1", "PC2");
  for (std::size_t r = 0; r < points.rows(); ++r) {
    const double t = (values[r] - lo) / (hi - lo);
    const int red = static_cast<int>(std::lround(255 * t));
    os << "<circle cx=\"" << num(f.px(points(r, 0))) << "\" cy=\"" << num(f.py(points(r, 1)))
       << "\" r=\"2\" fill=\"rgb(" << red << ",64," << 255 - red << ")\" fill-opacity=\"0.6\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pgbias
