#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace polylab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log(sum(exp(v))) with the usual max shift; -inf entries are allowed.
inline double log_sum_exp(std::span<const double> v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Streaming mean / variance / standard error.
struct RunningStats {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / double(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double stderror() const { return n > 0 ? stddev() / std::sqrt(double(n)) : 0.0; }
};

}  // namespace polylab
