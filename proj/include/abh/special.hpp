#pragma once

// Sine and cosine integrals, backed by GSL.

#include <gsl/gsl_sf_expint.h>

#include <cmath>
#include <numbers>

namespace abh::special {

// Si(x) = int_0^x sin(u)/u du, odd in x.
inline double Si(double x) {
  if (x == 0.0) return 0.0;
  return gsl_sf_Si(x);
}

// Ci(x) for x > 0.
inline double Ci(double x) { return gsl_sf_Ci(x); }

// Cin(x) = int_0^x (1 - cos u)/u du = gamma_E + ln|x| - Ci(|x|), even in x.
inline double Cin(double x) {
  x = std::abs(x);
  if (x < 2.0) {
    // sum_{k>=1} (-1)^{k+1} x^{2k} / (2k (2k)!)
    const double x2 = x * x;
    double term = 1.0, sum = 0.0;
    for (int k = 1; k < 20; ++k) {
      term *= x2 / ((2.0 * k - 1.0) * (2.0 * k));
      const double add = term / (2.0 * k);
      sum += (k % 2 ? add : -add);
      if (add < 1e-18 * sum) break;
    }
    return sum;
  }
  return std::numbers::egamma + std::log(x) - gsl_sf_Ci(x);
}

}  // namespace abh::special
