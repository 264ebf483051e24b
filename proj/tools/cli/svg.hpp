#pragma once

#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace climssm::cli {

// Minimal SVG canvas made of rectangular panels with linear axes.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height);

  struct Panel {
    double left, top, width, height;
    double x_min, x_max, y_min, y_max;
    double px(double x) const;
    double py(double y) const;
  };

  // Framed panel with a title, five ticks per axis and optional axis labels.
  Panel panel(double left, double top, double width, double height, double x_min, double x_max, double y_min,
              double y_max, const std::string& title, const std::string& x_label = "",
              const std::string& y_label = "");

  void line(const Panel& p, std::span<const double> x, std::span<const double> y, const std::string& colour,
            double stroke = 1.0);
  void band(const Panel& p, std::span<const double> x, std::span<const double> lo, std::span<const double> hi,
            const std::string& colour, double opacity = 0.3);
  void points(const Panel& p, std::span<const double> x, std::span<const double> y, const std::string& colour,
              double radius = 2.0);
  void bars(const Panel& p, std::span<const double> x, std::span<const double> y, double bar_width,
            const std::string& colour);
  void hline(const Panel& p, double y, const std::string& colour, bool dashed = true);
  void rect(const Panel& p, double x0, double y0, double x1, double y1, const std::string& fill);
  void text(double x, double y, const std::string& content, double size = 11.0, const std::string& anchor = "start");

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  double width_;
  double height_;
  std::ostringstream body_;
};

// Finite min / max over several series with a small margin; [0, 1] when
// nothing is finite.
std::pair<double, double> data_range(std::initializer_list<std::span<const double>> series, double margin = 0.05);

// Blue-white-red ramp for t in [0, 1].
std::string diverging_colour(double t);

}  // namespace climssm::cli
