#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "climssm/error.hpp"

namespace climssm::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  const double a = std::abs(v);
  if (a != 0.0 && (a < 1e-2 || a >= 1e5)) {
    std::snprintf(buf, sizeof buf, "%.1e", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.3g", v);
  }
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

}  // namespace

double SvgCanvas::Panel::px(double x) const {
  return left + (x - x_min) / (x_max - x_min) * width;
}

double SvgCanvas::Panel::py(double y) const {
  return top + height - (y - y_min) / (y_max - y_min) * height;
}

SvgCanvas::SvgCanvas(double width, double height) : width_(width), height_(height) {}

SvgCanvas::Panel SvgCanvas::panel(double left, double top, double width, double height, double x_min,
                                  double x_max, double y_min, double y_max, const std::string& title,
                                  const std::string& x_label, const std::string& y_label) {
  if (!(x_max > x_min)) x_max = x_min + 1.0;
  if (!(y_max > y_min)) y_max = y_min + 1.0;
  Panel p{left, top, width, height, x_min, x_max, y_min, y_max};
  body_ << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(width)
        << "\" height=\"" << num(height) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  text(left + width / 2, top - 6, title, 12.0, "middle");
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    const double fy = y_min + (y_max - y_min) * i / 4.0;
    text(p.px(fx), top + height + 14, tick_label(fx), 9.0, "middle");
    text(left - 4, p.py(fy) + 3, tick_label(fy), 9.0, "end");
  }
  if (!x_label.empty()) text(left + width / 2, top + height + 28, x_label, 10.0, "middle");
  if (!y_label.empty()) {
    body_ << "<text x=\"" << num(left - 40) << "\" y=\"" << num(top + height / 2)
          << "\" font-size=\"10\" text-anchor=\"middle\" transform=\"rotate(-90 " << num(left - 40) << ' '
          << num(top + height / 2) << ")\">" << escape(y_label) << "</text>\n";
  }
  return p;
}

void SvgCanvas::line(const Panel& p, std::span<const double> x, std::span<const double> y,
                     const std::string& colour, double stroke) {
  std::string path;
  bool pen_down = false;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      pen_down = false;
      continue;
    }
    path += (pen_down ? " L" : " M") + num(p.px(x[i])) + ' ' + num(p.py(y[i]));
    pen_down = true;
  }
  if (path.empty()) return;
  body_ << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\""
        << num(stroke) << "\"/>\n";
}

void SvgCanvas::band(const Panel& p, std::span<const double> x, std::span<const double> lo,
                     std::span<const double> hi, const std::string& colour, double opacity) {
  std::string path;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(lo[i]) && std::isfinite(hi[i])) kept.push_back(i);
  }
  if (kept.size() < 2) return;
  for (std::size_t j = 0; j < kept.size(); ++j) {
    path += (j == 0 ? "M" : " L") + num(p.px(x[kept[j]])) + ' ' + num(p.py(hi[kept[j]]));
  }
  for (std::size_t j = kept.size(); j-- > 0;) path += " L" + num(p.px(x[kept[j]])) + ' ' + num(p.py(lo[kept[j]]));
  body_ << "<path d=\"" << path << " Z\" fill=\"" << colour << "\" fill-opacity=\"" << num(opacity)
        << "\" stroke=\"none\"/>\n";
}

void SvgCanvas::points(const Panel& p, std::span<const double> x, std::span<const double> y,
                       const std::string& colour, double radius) {
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    body_ << "<circle cx=\"" << num(p.px(x[i])) << "\" cy=\"" << num(p.py(y[i])) << "\" r=\"" << num(radius)
          << "\" fill=\"" << colour << "\"/>\n";
  }
}

void SvgCanvas::bars(const Panel& p, std::span<const double> x, std::span<const double> y, double bar_width,
                     const std::string& colour) {
  const double base = std::clamp(0.0, p.y_min, p.y_max);
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!std::isfinite(y[i])) continue;
    rect(p, x[i] - bar_width / 2, base, x[i] + bar_width / 2, y[i], colour);
  }
}

void SvgCanvas::hline(const Panel& p, double y, const std::string& colour, bool dashed) {
  if (!std::isfinite(y) || y < p.y_min || y > p.y_max) return;
  body_ << "<line x1=\"" << num(p.left) << "\" x2=\"" << num(p.left + p.width) << "\" y1=\"" << num(p.py(y))
        << "\" y2=\"" << num(p.py(y)) << "\" stroke=\"" << colour << '"'
        << (dashed ? " stroke-dasharray=\"4 3\"" : "") << "/>\n";
}

void SvgCanvas::rect(const Panel& p, double x0, double y0, double x1, double y1, const std::string& fill) {
  const double a = p.px(std::min(x0, x1)), b = p.px(std::max(x0, x1));
  const double c = p.py(std::max(y0, y1)), d = p.py(std::min(y0, y1));
  body_ << "<rect x=\"" << num(a) << "\" y=\"" << num(c) << "\" width=\"" << num(b - a) << "\" height=\""
        << num(d - c) << "\" fill=\"" << fill << "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& content, double size, const std::string& anchor) {
  body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << num(size)
        << "\" text-anchor=\"" << anchor << "\">" << escape(content) << "</text>\n";
}

std::string SvgCanvas::str() const {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\"" << num(height_)
      << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
  return out.str();
}

void SvgCanvas::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << str();
}

std::pair<double, double> data_range(std::initializer_list<std::span<const double>> series, double margin) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (double v : s) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi == lo) return {lo - 0.5, hi + 0.5};
  const double pad = (hi - lo) * margin;
  return {lo - pad, hi + pad};
}

std::string diverging_colour(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = static_cast<int>(33 + u * (255 - 33));
    g = static_cast<int>(102 + u * (255 - 102));
    b = static_cast<int>(172 + u * (255 - 172));
  } else {
    const double u = (t - 0.5) / 0.5;
    r = static_cast<int>(255 - u * (255 - 178));
    g = static_cast<int>(255 - u * 255);
    b = static_cast<int>(255 - u * (255 - 43));
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace climssm::cli
