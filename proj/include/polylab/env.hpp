#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "polylab/numeric.hpp"

namespace polylab {

// Disorder law of a single environment variable eta, with its log-moment
// generating function lambda(t) = log E exp(t eta) in closed form.
struct EnvironmentLaw {
  enum class Kind { gaussian, exponential, bernoulli, uniform };

  Kind kind;
  double a = 0.0;  // gaussian: mean; exponential: rate; bernoulli: p; uniform: lo
  double b = 0.0;  // gaussian: sd; bernoulli: lo; uniform: hi
  double c = 0.0;  // bernoulli: hi

  static EnvironmentLaw gaussian(double mean, double sd) {
    if (!(sd > 0)) throw std::invalid_argument("gaussian: sd must be > 0");
    return {Kind::gaussian, mean, sd, 0.0};
  }
  static EnvironmentLaw exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exponential: rate must be > 0");
    return {Kind::exponential, rate, 0.0, 0.0};
  }
  static EnvironmentLaw bernoulli(double p, double lo, double hi) {
    if (!(p > 0 && p < 1)) throw std::invalid_argument("bernoulli: need 0 < p < 1");
    if (!(lo < hi)) throw std::invalid_argument("bernoulli: need lo < hi");
    return {Kind::bernoulli, p, lo, hi};
  }
  static EnvironmentLaw uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform: need lo < hi");
    return {Kind::uniform, lo, hi, 0.0};
  }
};

namespace detail {

// Inverse of the standard normal CDF (Acklam's rational approximation,
// |error| < 1.15e-9).
inline double inv_normal_cdf(double p) {
  static const double A[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double B[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double C[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double D[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
           ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1);
  }
  if (p > phigh) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
           ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
         (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1);
}

// log(expm1(s)/s), stable through s = 0.
inline double log_expm1_over(double s) {
  if (s == 0.0) return 0.0;
  if (std::abs(s) < 1e-8) return s / 2;  // log(1 + s/2 + O(s^2))
  return std::log(std::expm1(s) / s);
}

}  // namespace detail

// lambda(t) = log E exp(t eta); +infinity where the moment diverges.
inline double lambda(const EnvironmentLaw& law, double t) {
  using K = EnvironmentLaw::Kind;
  if (t == 0.0) return 0.0;
  switch (law.kind) {
    case K::gaussian:
      return law.a * t + 0.5 * law.b * law.b * t * t;
    case K::exponential:
      // rate / (rate - t) for t < rate
      if (t >= law.a) return kInf;
      return -std::log1p(-t / law.a);
    case K::bernoulli: {
      double la = t * law.c + std::log(law.a);        // hi branch, prob p
      double lb = t * law.b + std::log1p(-law.a);     // lo branch
      return log_sum_exp(la, lb);
    }
    case K::uniform: {
      double w = law.b - law.a;
      return t * law.a + detail::log_expm1_over(t * w);
    }
  }
  return kInf;
}

// Supremum of t >= 0 with both lambda(t) and lambda(-t) finite.
inline double beta_max(const EnvironmentLaw& law) {
  return law.kind == EnvironmentLaw::Kind::exponential ? law.a : kInf;
}

inline double lambda_prime(const EnvironmentLaw& law, double t) {
  using K = EnvironmentLaw::Kind;
  if (t >= beta_max(law))
    throw std::domain_error("lambda_prime: t >= beta_max");
  switch (law.kind) {
    case K::gaussian:
      return law.a + law.b * law.b * t;
    case K::exponential:
      return 1.0 / (law.a - t);
    case K::bernoulli: {
      double la = t * law.c + std::log(law.a);
      double lb = t * law.b + std::log1p(-law.a);
      double m = std::max(la, lb);
      double wa = std::exp(la - m), wb = std::exp(lb - m);
      return (law.c * wa + law.b * wb) / (wa + wb);
    }
    case K::uniform: {
      double w = law.b - law.a;
      double s = t * w;
      if (std::abs(s) < 1e-5) {
        // e^s/(e^s-1) - 1/s = 1/2 + s/12 - s^3/720 + ...
        return law.a + w * (0.5 + s / 12 - s * s * s / 720);
      }
      return law.a + w * (std::exp(s) / std::expm1(s) - 1.0 / s);
    }
  }
  throw std::logic_error("unreachable");
}

inline double mean_eta(const EnvironmentLaw& law) {
  using K = EnvironmentLaw::Kind;
  switch (law.kind) {
    case K::gaussian: return law.a;
    case K::exponential: return 1.0 / law.a;
    case K::bernoulli: return law.a * law.c + (1 - law.a) * law.b;
    case K::uniform: return 0.5 * (law.a + law.b);
  }
  return 0.0;
}

inline double var_eta(const EnvironmentLaw& law) {
  using K = EnvironmentLaw::Kind;
  switch (law.kind) {
    case K::gaussian: return law.b * law.b;
    case K::exponential: return 1.0 / (law.a * law.a);
    case K::bernoulli: {
      double w = law.c - law.b;
      return law.a * (1 - law.a) * w * w;
    }
    case K::uniform: {
      double w = law.b - law.a;
      return w * w / 12.0;
    }
  }
  return 0.0;
}

// Quantile transform: maps a uniform u in (0,1) to a sample of the law.
inline double quantile(const EnvironmentLaw& law, double u) {
  using K = EnvironmentLaw::Kind;
  switch (law.kind) {
    case K::gaussian: return law.a + law.b * detail::inv_normal_cdf(u);
    case K::exponential: return -std::log1p(-u) / law.a;
    case K::bernoulli: return u < 1 - law.a ? law.b : law.c;
    case K::uniform: return law.a + u * (law.b - law.a);
  }
  return 0.0;
}

// CDF, used by distributional sanity tests.
inline double cdf(const EnvironmentLaw& law, double x) {
  using K = EnvironmentLaw::Kind;
  switch (law.kind) {
    case K::gaussian:
      return 0.5 * std::erfc(-(x - law.a) / (law.b * std::sqrt(2.0)));
    case K::exponential:
      return x <= 0 ? 0.0 : -std::expm1(-law.a * x);
    case K::bernoulli:
      if (x < law.b) return 0.0;
      if (x < law.c) return 1 - law.a;
      return 1.0;
    case K::uniform:
      if (x <= law.a) return 0.0;
      if (x >= law.b) return 1.0;
      return (x - law.a) / (law.b - law.a);
  }
  return 0.0;
}

inline std::string law_name(const EnvironmentLaw& law) {
  using K = EnvironmentLaw::Kind;
  switch (law.kind) {
    case K::gaussian: return "gaussian";
    case K::exponential: return "exponential";
    case K::bernoulli: return "bernoulli";
    case K::uniform: return "uniform";
  }
  return "?";
}

}  // namespace polylab
