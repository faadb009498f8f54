#ifndef RSB_SPECFUN_HPP
#define RSB_SPECFUN_HPP

// Special functions used by the field kernels: the gamma function, Bessel J
// of the orders that arise for n = 2..5 spatial dimensions, and the
// regularized confluent hypergeometric limit function 0F1~(b; z) for z <= 0.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rsb/error.hpp"

namespace rsb::specfun {

struct SpecialValue {
  double value = 0.0;
  double abs_error_bound = 0.0;  // estimated
};

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr long double kEpsLd = std::numeric_limits<long double>::epsilon();

// Above this argument Bessel J0/J1 switch from backward recurrence to the
// Hankel expansion; the expansion's smallest term is ~exp(-2x).
inline constexpr double kHankelMin = 25.0;
inline constexpr double kSeriesMax = 8.0;

// sum_k (-x^2/4)^k / (k! Gamma(b+k)), in extended precision.
inline SpecialValue hyp0f1_series_ld(long double b, long double x,
                                     long double first_term) {
  const long double w = -x * x / 4.0L;
  long double term = first_term;
  long double sum = term;
  long double abs_sum = std::fabs(term);
  for (int k = 0; k < 500; ++k) {
    term *= w / ((k + 1) * (b + k));
    sum += term;
    abs_sum += std::fabs(term);
    if (std::fabs(term) <= kEpsLd * 1e-3L * std::fabs(sum) && (k + 1) > 0.5L * x) {
      break;
    }
  }
  const double v = static_cast<double>(sum);
  return {v, static_cast<double>(8.0L * kEpsLd * abs_sum) + kEps * std::fabs(v)};
}

struct J01 {
  double j0;
  double j1;
};

inline J01 bessel_j01_series(double x) {
  const auto j0 = hyp0f1_series_ld(1.0L, x, 1.0L);
  const auto j1 = hyp0f1_series_ld(2.0L, x, 1.0L);  // 1/Gamma(2) = 1
  return {j0.value, 0.5 * x * j1.value};
}

// Miller's backward recurrence normalized by J0 + 2 sum J_{2k} = 1.
inline J01 bessel_j01_miller(double x) {
  const int top = 2 * static_cast<int>((x + 40.0) / 2.0);
  const double two_over_x = 2.0 / x;
  double jp1 = 0.0;
  double j = 1e-20;
  double sum = 0.0;
  double j1 = 0.0;
  for (int k = top; k >= 1; --k) {
    const double jm1 = k * two_over_x * j - jp1;
    jp1 = j;
    j = jm1;
    // j now holds J_{k-1}
    if (k - 1 == 1) j1 = j;
    if ((k - 1) % 2 == 0 && k - 1 > 0) sum += 2.0 * j;
    if (std::fabs(j) > 1e250) {
      j *= 1e-250;
      jp1 *= 1e-250;
      sum *= 1e-250;
      j1 *= 1e-250;
    }
  }
  sum += j;
  return {j / sum, j1 / sum};
}

// Hankel asymptotic expansion for J_nu, nu in {0, 1}.
inline double bessel_j_hankel(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 80; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    const double mag = std::fabs(term);
    if (mag > prev) break;  // asymptotic series started to diverge
    prev = mag;
    // signs: P = a0 - a2/x^2 + a4/x^4 ..., Q = a1/x - a3/x^3 ...
    switch (k % 4) {
      case 0: p += term; break;
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
    }
    if (mag < 1e-18) break;
  }
  const double phi = (0.5 * nu + 0.25) * std::numbers::pi;
  const double s = std::sin(x);
  const double c = std::cos(x);
  const double cphi = std::cos(phi);
  const double sphi = std::sin(phi);
  const double cos_chi = c * cphi + s * sphi;
  const double sin_chi = s * cphi - c * sphi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cos_chi - q * sin_chi);
}

inline double bessel_j0_impl(double x) {
  if (x < kSeriesMax) return bessel_j01_series(x).j0;
  if (x < kHankelMin) return bessel_j01_miller(x).j0;
  return bessel_j_hankel(0, x);
}

inline double bessel_j1_impl(double x) {
  if (x < kSeriesMax) return bessel_j01_series(x).j1;
  if (x < kHankelMin) return bessel_j01_miller(x).j1;
  return bessel_j_hankel(1, x);
}

// Amplitude of (x/2)^{1-b} J_{b-1}(x) for large x; used for error scaling.
inline double hyp0f1_envelope(double b, double x, double inv_gamma_b) {
  if (x <= 1.0) return std::fabs(inv_gamma_b);
  const double asym = std::pow(0.5 * x, 1.0 - b) * std::sqrt(2.0 / (std::numbers::pi * x));
  return std::fmin(std::fabs(inv_gamma_b) + asym, std::fmax(std::fabs(inv_gamma_b), asym));
}

inline bool is_half_integer_or_integer(double x) {
  return std::floor(2.0 * x) == 2.0 * x;
}

}  // namespace detail

/// Gamma function for positive real arguments. Integers and half-integers up
/// to 40 are computed as exact products; everything else goes to std::tgamma.
inline double gamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("gamma_fn: argument must be positive and finite, got " +
                      std::to_string(x));
  }
  if (x <= 40.0 && detail::is_half_integer_or_integer(x)) {
    double acc;
    double y;
    if (std::floor(x) == x) {
      acc = 1.0;
      y = 1.0;
    } else {
      acc = std::sqrt(std::numbers::pi);
      y = 0.5;
    }
    for (; y < x; y += 1.0) acc *= y;
    return acc;
  }
  const double g = std::tgamma(x);
  if (!std::isfinite(g)) throw DomainError("gamma_fn: overflow at x = " + std::to_string(x));
  return g;
}

inline double bessel_j0(double x) {
  x = std::fabs(x);
  return detail::bessel_j0_impl(x);
}

inline double bessel_j1(double x) {
  if (x < 0.0) return -detail::bessel_j1_impl(-x);
  return detail::bessel_j1_impl(x);
}

/// Bessel J_nu(x) for x >= 0. Orders 0, 1/2, 1, 3/2 have dedicated paths.
inline double bessel_j(double nu, double x) {
  if (!(x >= 0.0) || !std::isfinite(x) || !std::isfinite(nu)) {
    throw DomainError("bessel_j: need finite nu and x >= 0");
  }
  if (nu == 0.0) return bessel_j0(x);
  if (nu == 1.0) return bessel_j1(x);
  if (x == 0.0) {
    if (nu > 0.0) return 0.0;
    if (std::floor(nu) == nu) return 0.0;
    throw DomainError("bessel_j: J_nu(0) is infinite for this negative order");
  }
  if (nu == 0.5) return std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x);
  if (nu == -0.5) return std::sqrt(2.0 / (std::numbers::pi * x)) * std::cos(x);
  if (nu == 1.5) {
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (std::sin(x) / x - std::cos(x));
  }
  if (nu >= 0.0) return std::cyl_bessel_j(nu, x);
  const double mu = -nu;
  if (std::floor(mu) == mu) {
    const double v = std::cyl_bessel_j(mu, x);
    return (static_cast<long>(mu) % 2 == 0) ? v : -v;
  }
  return std::cos(mu * std::numbers::pi) * std::cyl_bessel_j(mu, x) -
         std::sin(mu * std::numbers::pi) * std::cyl_neumann(mu, x);
}

/// 0F1~(b; -x^2/4) = (x/2)^{1-b} J_{b-1}(x), with an error estimate.
inline SpecialValue hyp0f1_reg_neg_sq_with_error(double b, double x) {
  using detail::kEps;
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw DomainError("hyp0f1_reg: parameter b must be positive, got " + std::to_string(b));
  }
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("hyp0f1_reg: x must be finite and >= 0");
  }
  constexpr double kInvSqrtPi = 0.5641895835477562869480794515607726;  // 1/sqrt(pi)
  if (b == 1.0) {
    const double v = bessel_j0(x);
    return {v, 16 * kEps * detail::hyp0f1_envelope(1.0, x, 1.0)};
  }
  if (b == 2.0) {
    if (x < 4.0) return detail::hyp0f1_series_ld(2.0L, x, 1.0L);
    const double v = 2.0 * bessel_j1(x) / x;
    return {v, 16 * kEps * detail::hyp0f1_envelope(2.0, x, 1.0)};
  }
  if (b == 1.5) {
    const double c = 2.0 * kInvSqrtPi;
    if (x < 1e-4) {
      const double x2 = x * x;
      const double v = c * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0));
      return {v, 2 * kEps * std::fabs(v)};
    }
    const double v = c * std::sin(x) / x;
    return {v, 4 * kEps * std::fmax(std::fabs(v), c / x)};
  }
  if (b == 2.5) {
    const double c = 4.0 * kInvSqrtPi;
    if (x < 2.0) return detail::hyp0f1_series_ld(2.5L, x, static_cast<long double>(c / 3.0));
    const double v = c * (std::sin(x) - x * std::cos(x)) / (x * x * x);
    return {v, 8 * kEps * c * (1.0 + x) / (x * x * x)};
  }
  if (b == 0.5) {
    const double v = kInvSqrtPi * std::cos(x);
    return {v, 2 * kEps * kInvSqrtPi};
  }
  const double inv_gamma = 1.0 / gamma_fn(b);
  if (x < detail::kSeriesMax) {
    return detail::hyp0f1_series_ld(b, x, static_cast<long double>(inv_gamma));
  }
  const double v = std::pow(0.5 * x, 1.0 - b) * bessel_j(b - 1.0, x);
  if (!std::isfinite(v)) {
    throw DomainError("hyp0f1_reg: overflow for b = " + std::to_string(b) +
                      ", x = " + std::to_string(x));
  }
  return {v, 64 * kEps * detail::hyp0f1_envelope(b, x, inv_gamma)};
}

inline double hyp0f1_reg_neg_sq(double b, double x) {
  return hyp0f1_reg_neg_sq_with_error(b, x).value;
}

/// Regularized 0F1~(b; z) = 0F1(b; z) / Gamma(b) for b > 0 and z <= 0.
inline double hyp0f1_reg(double b, double z) {
  if (!(z <= 0.0) || !std::isfinite(z)) {
    throw DomainError("hyp0f1_reg: only finite z <= 0 is supported, got " + std::to_string(z));
  }
  return hyp0f1_reg_neg_sq(b, 2.0 * std::sqrt(-z));
}

inline SpecialValue hyp0f1_reg_with_error(double b, double z) {
  if (!(z <= 0.0) || !std::isfinite(z)) {
    throw DomainError("hyp0f1_reg: only finite z <= 0 is supported, got " + std::to_string(z));
  }
  return hyp0f1_reg_neg_sq_with_error(b, 2.0 * std::sqrt(-z));
}

/// Direct power series (extended precision); accurate while |z| is moderate.
inline double hyp0f1_reg_series(double b, double z) {
  if (!(b > 0.0)) throw DomainError("hyp0f1_reg_series: b must be positive");
  if (!(z <= 0.0)) throw DomainError("hyp0f1_reg_series: z must be <= 0");
  const long double x = 2.0L * std::sqrt(static_cast<long double>(-z));
  return detail::hyp0f1_series_ld(b, x, 1.0L / std::tgamma(static_cast<long double>(b))).value;
}

/// Bessel-connection route (x/2)^{1-b} J_{b-1}(x), x = 2 sqrt(-z), for every b.
inline double hyp0f1_reg_bessel(double b, double z) {
  if (!(b > 0.0)) throw DomainError("hyp0f1_reg_bessel: b must be positive");
  if (!(z < 0.0)) throw DomainError("hyp0f1_reg_bessel: z must be < 0");
  const double x = 2.0 * std::sqrt(-z);
  return std::pow(0.5 * x, 1.0 - b) * bessel_j(b - 1.0, x);
}

}  // namespace rsb::specfun

#endif  // RSB_SPECFUN_HPP
