#pragma once

#include <span>
#include <vector>

namespace climssm::stats {

double mean(std::span<const double> x);
// Sample variance with n - 1 denominator.
double variance(std::span<const double> x);
double sd(std::span<const double> x);
double covariance(std::span<const double> x, std::span<const double> y);
// Pearson correlation. Throws NumericalError when either series is constant.
double correlation(std::span<const double> x, std::span<const double> y);
// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::span<const double> x, double p);

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Ensemble mean with central `level` quantile interval.
Interval summarize(std::span<const double> x, double level = 0.95);

}  // namespace climssm::stats
