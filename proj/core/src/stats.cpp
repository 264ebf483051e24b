#include "climssm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "climssm/error.hpp"

namespace climssm::stats {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    comp_ += (sum_ - t) + v;
  } else {
    comp_ += (v - t) + sum_;
  }
  sum_ = t;
}

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  CompensatedSum s;
  for (double v : x) s.add(v);
  return s.value() / static_cast<double>(x.size());
}

double covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("covariance needs two equal-length samples of size >= 2");
  }
  const double mx = mean(x), my = mean(y);
  CompensatedSum s;
  for (std::size_t i = 0; i < x.size(); ++i) s.add((x[i] - mx) * (y[i] - my));
  return s.value() / static_cast<double>(x.size() - 1);
}

double variance(std::span<const double> x) { return covariance(x, x); }

double sd(std::span<const double> x) { return std::sqrt(variance(x)); }

double correlation(std::span<const double> x, std::span<const double> y) {
  const double vx = variance(x), vy = variance(y);
  if (!(vx > 0.0) || !(vy > 0.0)) throw NumericalError("correlation of a constant series");
  return covariance(x, y) / std::sqrt(vx * vy);
}

double quantile(std::span<const double> x, double p) {
  if (x.empty()) throw std::invalid_argument("quantile of empty sample");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Interval summarize(std::span<const double> x, double level) {
  const double tail = 0.5 * (1.0 - level);
  return {mean(x), quantile(x, tail), quantile(x, 1.0 - tail)};
}

}  // namespace climssm::stats
