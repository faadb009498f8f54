#ifndef RSB_TESTS_ORACLE_HPP
#define RSB_TESTS_ORACLE_HPP

// Brute-force reference implementations used only by tests. Nothing here
// shares code with the library: uniform composite Simpson (double integrand,
// compensated long double sums), closed forms or the C library's j0/j1, and
// a cyclic Jacobi eigensolver.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace oracle {

using ld = long double;
constexpr ld kPi = 3.141592653589793238462643383279502884L;

/// Composite Simpson with `panels` uniform panels (rounded up to even).
template <std::size_t K, class F>
std::array<ld, K> simpson(const F& f, ld a, ld b, std::size_t panels) {
  if (panels % 2) ++panels;
  const ld h = (b - a) / static_cast<ld>(panels);
  std::array<ld, K> sum{}, comp{};
  auto add = [&](const std::array<ld, K>& v, ld w) {
    for (std::size_t k = 0; k < K; ++k) {
      const ld y = w * v[k] - comp[k];
      const ld t = sum[k] + y;
      comp[k] = (t - sum[k]) - y;
      sum[k] = t;
    }
  };
  add(f(a), 1.0L);
  add(f(b), 1.0L);
  for (std::size_t i = 1; i < panels; ++i) {
    add(f(a + h * static_cast<ld>(i)), (i % 2) ? 4.0L : 2.0L);
  }
  for (auto& s : sum) s *= h / 3.0L;
  return sum;
}

inline std::size_t kPanels = 10'000'000;
constexpr ld kUpper = 12.0L;

/// 0F1~(n/2; -x^2/4) from the C library's j0/j1 (n even) or elementary
/// closed forms (n odd).
inline double angular(int n, double x) {
  const double rpi = std::sqrt(static_cast<double>(kPi));
  switch (n) {
    case 2:
      return ::j0(x);
    case 3:
      if (x < 1e-3) return 2.0 / rpi * (1.0 - x * x / 6.0);
      return 2.0 / rpi * std::sin(x) / x;
    case 4:
      if (x < 1e-3) return 1.0 - x * x / 8.0;
      return 2.0 * ::j1(x) / x;
    case 5:
      if (x < 0.05) {
        const double x2 = x * x;
        return 4.0 / rpi * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0);
      }
      return 4.0 / rpi * (std::sin(x) - x * std::cos(x)) / (x * x * x);
    default:
      return NAN;
  }
}

/// sin(x) - x, summing its Taylor series for small x.
inline double sin_minus_x(double x) {
  if (std::fabs(x) > 0.5) return std::sin(x) - x;
  double term = -x * x * x / 6.0;
  double s = 0.0;
  for (int k = 1; k < 30 && term != 0.0; ++k) {
    s += term;
    term *= -x * x / static_cast<double>((2 * k + 2) * (2 * k + 3));
  }
  return s;
}

inline ld surface_prefactor(int n) {
  // pi^{n/2} / (2 pi)^n = 1 / (2^n pi^{n/2})
  return 1.0L / (std::pow(2.0L, n) * std::pow(kPi, 0.5L * n));
}

struct Kernels {
  ld gamma = 0;
  ld vartheta = 0;
  ld xi = 0;
};

/// Unit-coupling Gamma, vartheta, Xi by brute force. For n = 2 the
/// integral is taken in w = sqrt(u^2 + m^2), where u du = w dw removes the
/// sharp u/w feature at tiny mass.
inline Kernels kernels(int n, ld m_, ld t_, ld L_, bool sinc_form = false) {
  const double m = static_cast<double>(m_), t = static_cast<double>(t_), L = static_cast<double>(L_);
  const double cs = static_cast<double>(surface_prefactor(n));
  const double cg = 8.0 * cs / std::tgamma(0.5 * n);
  const double cv = 4.0 * cs;
  const double cx = 16.0 * cs;
  const double rpi = std::sqrt(static_cast<double>(kPi));
  auto F = [&](double uL) {
    if (sinc_form) return 2.0 / rpi * (uL == 0.0 ? 1.0 : std::sin(uL) / uL);
    return angular(n, uL);
  };
  std::array<ld, 3> r{};
  if (n == 2) {
    const ld w0 = m_;
    const ld w1 = std::sqrt(kUpper * kUpper + m_ * m_);
    r = simpson<3>(
        [&](ld wl) {
          const double w = static_cast<double>(wl);
          const double u = std::sqrt(std::fmax(w * w - m * m, 0.0));
          const double g = std::exp(-0.5 * u * u);
          const double s = std::sin(0.5 * w * t);
          const double ss = (w == 0.0) ? 0.25 * t * t : s * s / (w * w);
          const double ph = (w == 0.0) ? 0.0 : sin_minus_x(w * t) / (w * w);
          const double f = F(u * L);
          return std::array<ld, 3>{cg * g * ss, cv * g * ph * f, cx * g * ss * f};
        },
        w0, w1, kPanels);
  } else {
    r = simpson<3>(
        [&](ld ul) {
          const double u = static_cast<double>(ul);
          const double w = std::sqrt(u * u + m * m);
          if (w == 0.0) return std::array<ld, 3>{0, 0, 0};
          const double g = std::pow(u, n - 1) * std::exp(-0.5 * u * u);
          const double s = std::sin(0.5 * w * t);
          const double w3 = w * w * w;
          const double ss = s * s / w3;
          const double ph = sin_minus_x(w * t) / w3;
          const double f = F(u * L);
          return std::array<ld, 3>{cg * g * ss, cv * g * ph * f, cx * g * ss * f};
        },
        0.0L, kUpper, kPanels);
  }
  return {r[0], r[1], r[2]};
}

/// Unit-coupling R_alpha pieces: self term A (cross = false) or cross B(L).
/// With m > 0 the integrand has structure at u ~ m, far below the uniform
/// panel width at m = 1e-11, so [0, kIrEdge] is integrated in s = log u.
inline std::size_t kIrPanels = 400'000;
constexpr double kIrEdge = 1e-3;

inline ld reg(int alpha, int n, ld m_, ld L_, bool cross) {
  const double m = static_cast<double>(m_), L = static_cast<double>(L_);
  const double cs = static_cast<double>(surface_prefactor(n));
  const double c = cross ? cs : cs / std::tgamma(0.5 * n);
  if (m == 0.0) {
    return simpson<1>(
        [&](ld ul) {
          const double u = static_cast<double>(ul);
          // cancel the powers analytically so u = 0 takes its limit
          double v = c * std::pow(u, n - 2 - alpha) * std::exp(-0.5 * u * u);
          if (cross) v *= angular(n, u * L);
          return std::array<ld, 1>{v};
        },
        0.0L, kUpper, kPanels)[0];
  }
  auto f = [&](double u) {
    const double w = std::sqrt(u * u + m * m);
    double v = c * std::pow(u, n - 1) * std::exp(-0.5 * u * u) / std::pow(w, alpha + 1);
    if (cross) v *= angular(n, u * L);
    return v;
  };
  const ld outer = simpson<1>([&](ld ul) { return std::array<ld, 1>{f(static_cast<double>(ul))}; },
                              static_cast<ld>(kIrEdge), kUpper, kPanels)[0];
  // below u_lo the integrand is ~ u^{n-1} / m^{alpha+1}; its share is < 1e-12
  const double u_lo = 1e-12 * std::min(m, kIrEdge);
  const ld inner = simpson<1>(
      [&](ld sl) {
        const double u = std::exp(static_cast<double>(sl));
        return std::array<ld, 1>{f(u) * u};
      },
      std::log(static_cast<ld>(u_lo)), std::log(static_cast<ld>(kIrEdge)), kIrPanels)[0];
  return outer + inner;
}

using cplx = std::complex<double>;
using CMatrix = std::vector<std::vector<cplx>>;

/// Eigenvalues of a Hermitian matrix via cyclic Jacobi on its real
/// symmetric embedding [[Re, -Im], [Im, Re]]; each eigenvalue appears twice
/// in the embedding and is reported once.
inline std::vector<double> hermitian_eigenvalues(const CMatrix& h) {
  const std::size_t d = h.size();
  const std::size_t D = 2 * d;
  std::vector<std::vector<ld>> a(D, std::vector<ld>(D, 0.0L));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const ld re = h[i][j].real();
      const ld im = h[i][j].imag();
      a[i][j] = re;
      a[i + d][j + d] = re;
      a[i][j + d] = -im;
      a[i + d][j] = im;
    }
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    ld off = 0.0L;
    for (std::size_t p = 0; p < D; ++p)
      for (std::size_t q = p + 1; q < D; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-36L) break;
    for (std::size_t p = 0; p < D; ++p) {
      for (std::size_t q = p + 1; q < D; ++q) {
        if (std::fabs(a[p][q]) < 1e-300L) continue;
        const ld theta = (a[q][q] - a[p][p]) / (2.0L * a[p][q]);
        const ld t = (theta >= 0 ? 1.0L : -1.0L) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0L));
        const ld c = 1.0L / std::sqrt(t * t + 1.0L);
        const ld s = t * c;
        for (std::size_t k = 0; k < D; ++k) {
          const ld akp = a[k][p];
          const ld akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < D; ++k) {
          const ld apk = a[p][k];
          const ld aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(D);
  for (std::size_t i = 0; i < D; ++i) ev[i] = static_cast<double>(a[i][i]);
  std::sort(ev.begin(), ev.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < D; i += 2) out.push_back(0.5 * (ev[i] + ev[i + 1]));
  return out;
}

/// Partial transpose on qubit `q` (0 = leftmost tensor factor) of an
/// N-qubit matrix in the standard computational ordering.
inline CMatrix partial_transpose_qubit(const CMatrix& rho, int nq, int q) {
  const std::size_t d = rho.size();
  const std::size_t bit = std::size_t{1} << (nq - 1 - q);
  CMatrix out(d, std::vector<cplx>(d));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t rb = r & bit, cb = c & bit;
      const std::size_t r2 = (r & ~bit) | cb;
      const std::size_t c2 = (c & ~bit) | rb;
      out[r2][c2] = rho[r][c];
    }
  }
  return out;
}

inline double trace_norm(const CMatrix& h) {
  double s = 0.0;
  for (double e : hermitian_eigenvalues(h)) s += std::fabs(e);
  return s;
}

inline double negativity_qubit(const CMatrix& rho, int nq, int q) {
  return 0.5 * (trace_norm(partial_transpose_qubit(rho, nq, q)) - 1.0);
}

}  // namespace oracle

#endif  // RSB_TESTS_ORACLE_HPP
