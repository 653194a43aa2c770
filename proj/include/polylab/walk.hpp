#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "polylab/lattice.hpp"

namespace polylab {

// Step law q(z) = P(omega_1 = z) of the reference walk: finite support,
// every site probability strictly inside (0,1), total mass 1.
class StepDistribution {
 public:
  StepDistribution(int d, std::map<Vec, double> pmf) : d_(d), pmf_(std::move(pmf)) {
    validate();
  }

  int dim() const { return d_; }
  const std::map<Vec, double>& pmf() const { return pmf_; }

  static StepDistribution srw(int d) {
    require_dim(d);
    std::map<Vec, double> q;
    double p = 1.0 / (2.0 * d);
    for (int j = 0; j < d; ++j) {
      Vec e = {0, 0, 0};
      e[j] = 1;
      q[e] = p;
      q[-e] = p;
    }
    return StepDistribution(d, std::move(q));
  }

  // Symmetric q(z) proportional to |z|^-exponent for 1 <= |z| <= cutoff.
  // Finite-support surrogate for a heavy-tailed walk; the discarded tail is
  // renormalized away, so report the cutoff alongside any results.
  static StepDistribution power_law_1d(double exponent, int cutoff) {
    if (!(exponent > 1) || cutoff < 1)
      throw std::invalid_argument("power_law_1d: need exponent > 1 and cutoff >= 1");
    double z_norm = 0;
    for (int m = 1; m <= cutoff; ++m) z_norm += 2 * std::pow(double(m), -exponent);
    std::map<Vec, double> q;
    for (int m = 1; m <= cutoff; ++m) {
      double p = std::pow(double(m), -exponent) / z_norm;
      q[vec1(m)] = p;
      q[vec1(-m)] = p;
    }
    return StepDistribution(1, std::move(q));
  }

  double entropy() const {
    double h = 0;
    for (const auto& [z, p] : pmf_) h -= p * std::log(p);
    return h;
  }

  double max_step_prob() const {
    double m = 0;
    for (const auto& [z, p] : pmf_) m = std::max(m, p);
    return m;
  }

  // Exact n-step marginal P(omega_n = .), by repeated convolution.
  std::map<Vec, double> n_step_marginal(int n) const {
    std::map<Vec, double> cur{{Vec{0, 0, 0}, 1.0}};
    for (int i = 0; i < n; ++i) {
      std::map<Vec, double> next;
      for (const auto& [y, w] : cur)
        for (const auto& [z, p] : pmf_) next[y + z] += w * p;
      cur = std::move(next);
    }
    return cur;
  }

 private:
  static void require_dim(int d) {
    if (d < 1 || d > 3) throw std::invalid_argument("dimension must be 1..3");
  }

  void validate() const {
    require_dim(d_);
    if (pmf_.empty()) throw std::invalid_argument("step pmf is empty");
    double total = 0;
    for (const auto& [z, p] : pmf_) {
      if (!(p > 0) || p >= 1)
        throw std::invalid_argument("step probabilities must lie in (0,1)");
      for (int j = d_; j < 3; ++j)
        if (z[j] != 0)
          throw std::invalid_argument("step uses coordinates beyond dimension");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("step pmf must sum to 1");
  }

  int d_;
  std::map<Vec, double> pmf_;
};

}  // namespace polylab
