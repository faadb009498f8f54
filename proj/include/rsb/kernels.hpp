#ifndef RSB_KERNELS_HPP
#define RSB_KERNELS_HPP

// Field kernels for pure-dephasing detectors with Gaussian smearing, in
// units sigma = 1 with u = |k| and w = sqrt(u^2 + m^2):
//
//   Gamma_j   = lambda_j^2 * 8 pi^{n/2} / ((2pi)^n G(n/2)) * I[ sin^2(wt/2)/w^3 ]
//   vartheta  = lambda_i lambda_j * 4 pi^{n/2} / (2pi)^n * I[ (sin wt - wt)/w^3 * F(uL) ]
//   Xi        = lambda_i lambda_j * 16 pi^{n/2} / (2pi)^n * I[ sin^2(wt/2)/w^3 * F(uL) ]
//
// with I[g] = int_0^inf u^{n-1} e^{-u^2/2} g du and F(x) = 0F1~(n/2; -x^2/4).
// The engine works with unit couplings and rescales analytically.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "rsb/error.hpp"
#include "rsb/kernel_cache.hpp"
#include "rsb/model.hpp"
#include "rsb/quad.hpp"
#include "rsb/specfun.hpp"

namespace rsb {

struct KernelSet {
  double t_tilde = 0.0;
  std::vector<double> gamma;
  std::vector<std::vector<double>> vartheta;
  std::vector<std::vector<double>> xi;
  std::uint64_t n_evals = 0;   // quadrature evaluations behind these values (cached or not)
  double max_rel_error = 0.0;  // worst estimated relative error among the integrals used
};

struct RegularityResult {
  bool divergent = false;
  double value = 0.0;
  std::string reason;
};

struct EnergyResult {
  bool unbounded = false;
  double value = 0.0;
  std::string reason;
};

namespace kern {

inline double pow_int(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

inline double sinc(double x) {
  if (std::fabs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
  }
  return std::sin(x) / x;
}

/// (sin x - x) / x^3 without cancellation.
inline double sin_minus_x_over_x3(double x) {
  const double x2 = x * x;
  if (std::fabs(x) < 0.25) {
    // -1/3! + x^2/5! - x^4/7! + x^6/9! - x^8/11!
    return -1.0 / 6.0 +
           x2 * (1.0 / 120.0 + x2 * (-1.0 / 5040.0 + x2 * (1.0 / 362880.0 + x2 * (-1.0 / 39916800.0))));
  }
  return (std::sin(x) - x) / (x2 * x);
}

inline double solid_half_power(int n) { return std::pow(std::numbers::pi, 0.5 * n); }
inline double two_pi_pow(int n) { return std::pow(2.0 * std::numbers::pi, n); }

inline double prefactor_gamma(int n) {
  return 8.0 * solid_half_power(n) / (two_pi_pow(n) * specfun::gamma_fn(0.5 * n));
}
inline double prefactor_vartheta(int n) { return 4.0 * solid_half_power(n) / two_pi_pow(n); }
inline double prefactor_xi(int n) { return 16.0 * solid_half_power(n) / two_pi_pow(n); }
inline double prefactor_reg_self(int n) {
  return solid_half_power(n) / (two_pi_pow(n) * specfun::gamma_fn(0.5 * n));
}
inline double prefactor_reg_cross(int n) { return solid_half_power(n) / two_pi_pow(n); }

/// Unit-coupling decay-exponent integrand.
struct GammaIntegrand {
  int n;
  double m;
  double t;
  double c;
  double operator()(double u) const {
    const double w = std::hypot(u, m);
    const double ratio = w > 0.0 ? u / w : 1.0;
    const double s = sinc(0.5 * w * t);
    // u^{n-1} sin^2(wt/2) / w^3 = u^{n-2} (u/w) (t/2)^2 sinc^2(wt/2)
    return c * pow_int(u, n - 2) * ratio * std::exp(-0.5 * u * u) * 0.25 * t * t * s * s;
  }
};

/// Unit-coupling (vartheta, Xi) integrand pair sharing one 0F1~ evaluation.
struct PairIntegrand {
  int n;
  double m;
  double t;
  double L;
  double c_vartheta;
  double c_xi;
  std::array<double, 2> operator()(double u) const {
    const double w = std::hypot(u, m);
    const double ratio = w > 0.0 ? u / w : 1.0;
    const double x = w * t;
    const double g = std::exp(-0.5 * u * u);
    const double f = specfun::hyp0f1_reg_neg_sq(0.5 * n, u * L);
    const double un1 = pow_int(u, n - 1);
    // (sin x - x)/w^3 = t^3 (sin x - x)/x^3
    const double phase = un1 * t * t * t * sin_minus_x_over_x3(x);
    const double s = sinc(0.5 * x);
    const double corr = pow_int(u, n - 2) * ratio * 0.25 * t * t * s * s;
    return {c_vartheta * g * f * phase, c_xi * g * f * corr};
  }
};

/// Integrand of the R_alpha self term A_alpha (cross term if L > 0).
struct RegIntegrand {
  int n;
  int alpha;
  double m;
  double L;
  double c;
  bool cross;
  double operator()(double u) const {
    const double w = std::hypot(u, m);
    // u^{n-1} / w^{alpha+1}; the IR criterion guarantees integrability
    double v = c * std::exp(-0.5 * u * u);
    if (w > 0.0) {
      v *= pow_int(u, n - 1) / pow_int(w, alpha + 1);
    } else {
      v *= (n - 1 == alpha + 1) ? 1.0 : 0.0;
    }
    if (cross) v *= specfun::hyp0f1_reg_neg_sq(0.5 * n, u * L);
    return v;
  }
};

/// IR convergence of R_alpha: finite iff m > 0 or n > alpha + 1.
inline bool reg_ir_finite(int alpha, int n, double m) { return m > 0.0 || n > alpha + 1; }

}  // namespace kern

class KernelEngine {
 public:
  explicit KernelEngine(quad::Options opt = {}, std::shared_ptr<KernelCache> cache = nullptr)
      : opt_(opt), cache_(std::move(cache)) {}

  const quad::Options& options() const { return opt_; }
  const std::shared_ptr<KernelCache>& cache() const { return cache_; }

  struct Unit {
    double v0 = 0.0;
    double v1 = 0.0;
    double rel_err = 0.0;
    std::uint64_t n_evals = 0;
  };

  /// Decay exponent for unit coupling.
  Unit gamma_unit(int n, double m, double t) const {
    check_common(n, m, t);
    if (t == 0.0) return {};
    KernelKey key = make_key(KernelId::Gamma, n, 0, t, 0.0, m);
    return cached(key, [&] {
      quad::Integrand<kern::GammaIntegrand> f{{n, m, t, kern::prefactor_gamma(n)}, {t}};
      f.feature_scale = m;
      const auto r = quad::integrate_semiinf(f, opt_);
      return Unit{r.value, 0.0, r.est_rel_error, r.n_evals};
    });
  }

  /// (vartheta, Xi) for unit couplings at separation L.
  Unit pair_unit(int n, double m, double t, double L) const {
    check_common(n, m, t);
    if (!(L >= 0.0) || !std::isfinite(L)) throw DomainError("kernels: separation must be finite and >= 0");
    if (t == 0.0) return {};
    KernelKey key = make_key(KernelId::PairPhase, n, 0, t, L, m);
    return cached(key, [&] {
      quad::Integrand<kern::PairIntegrand> f{
          {n, m, t, L, kern::prefactor_vartheta(n), kern::prefactor_xi(n)}, {t, L}};
      f.feature_scale = m;
      const auto r = quad::integrate_semiinf(f, opt_);
      return Unit{r.value[0], r.value[1], std::max(r.est_rel_error(0), r.est_rel_error(1)), r.n_evals};
    });
  }

  double decay_exponent(std::size_t j, double t, const ModelParams& p) const {
    const double lam = p.detectors.at(j).lambda_tilde;
    if (lam == 0.0 || t == 0.0) return 0.0;
    return lam * lam * gamma_unit(p.n, p.m_tilde, t).v0;
  }

  double vartheta(std::size_t i, std::size_t j, double t, const ModelParams& p) const {
    return pair_value(i, j, t, p).first;
  }

  double xi(std::size_t i, std::size_t j, double t, const ModelParams& p) const {
    return pair_value(i, j, t, p).second;
  }

  KernelSet kernel_set(double t, const ModelParams& p) const {
    return kernel_set_impl(t, p, [&p](std::size_t i, std::size_t j) { return p.distance(i, j); });
  }

  /// Kernel set with every pairwise separation taken as exactly L.
  KernelSet kernel_set_equilateral(double t, const ModelParams& p, double L) const {
    return kernel_set_impl(t, p, [L](std::size_t, std::size_t) { return L; });
  }

 private:
  template <class Distance>
  KernelSet kernel_set_impl(double t, const ModelParams& p, Distance&& dist) const {
    const std::size_t N = p.size();
    KernelSet ks;
    ks.t_tilde = t;
    ks.gamma.assign(N, 0.0);
    ks.vartheta.assign(N, std::vector<double>(N, 0.0));
    ks.xi.assign(N, std::vector<double>(N, 0.0));
    bool any_coupled = false;
    for (const auto& d : p.detectors) any_coupled = any_coupled || d.lambda_tilde != 0.0;
    if (t == 0.0 || !any_coupled) return ks;
    const Unit g = gamma_unit(p.n, p.m_tilde, t);
    ks.n_evals += g.n_evals;
    ks.max_rel_error = std::max(ks.max_rel_error, g.rel_err);
    for (std::size_t j = 0; j < N; ++j) {
      const double lam = p.detectors[j].lambda_tilde;
      ks.gamma[j] = lam * lam * g.v0;
    }
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = i + 1; j < N; ++j) {
        const double ll = p.detectors[i].lambda_tilde * p.detectors[j].lambda_tilde;
        if (ll == 0.0) continue;
        const Unit u = pair_unit(p.n, p.m_tilde, t, dist(i, j));
        ks.n_evals += u.n_evals;
        ks.max_rel_error = std::max(ks.max_rel_error, u.rel_err);
        ks.vartheta[i][j] = ks.vartheta[j][i] = ll * u.v0;
        ks.xi[i][j] = ks.xi[j][i] = ll * u.v1;
      }
    }
    return ks;
  }

 public:
  /// R_alpha(s . F) = sum_j lambda_j^2 A_alpha + 2 sum_{i<j} s_i s_j lambda_i lambda_j B_alpha(L_ij).
  RegularityResult r_alpha(int alpha, const std::vector<int>& s, const ModelParams& p) const {
    if (alpha != 1 && alpha != 2) throw DomainError("r_alpha: alpha must be 1 or 2");
    check_signs(s, p);
    p.validate();
    bool any_coupled = false;
    for (const auto& d : p.detectors) any_coupled = any_coupled || d.lambda_tilde != 0.0;
    if (!any_coupled) return {false, 0.0, "all couplings vanish"};
    if (!kern::reg_ir_finite(alpha, p.n, p.m_tilde)) {
      return {true, 0.0,
              "IR divergent: massless field with n = " + std::to_string(p.n) + " <= alpha + 1 = " +
                  std::to_string(alpha + 1) + "; the integrand behaves like u^" +
                  std::to_string(p.n - 2 - alpha) + " as u -> 0"};
    }
    const Unit a = reg_unit(alpha, p.n, p.m_tilde, 0.0, false);
    double value = 0.0;
    for (const auto& d : p.detectors) value += d.lambda_tilde * d.lambda_tilde * a.v0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = i + 1; j < p.size(); ++j) {
        const double ll = p.detectors[i].lambda_tilde * p.detectors[j].lambda_tilde;
        if (ll == 0.0) continue;
        const Unit b = reg_unit(alpha, p.n, p.m_tilde, p.distance(i, j), true);
        value += 2.0 * s[i] * s[j] * ll * b.v0;
      }
    }
    std::string reason = p.m_tilde > 0.0 ? "IR finite: massive field"
                                         : "IR finite: n = " + std::to_string(p.n) + " > alpha + 1";
    return {false, value, reason};
  }

  /// Lower bound s . Delta - R_1(s . F) on the energy in the sign sector s.
  EnergyResult ground_state_energy(const std::vector<int>& s, const ModelParams& p) const {
    check_signs(s, p);
    const RegularityResult r = r_alpha(1, s, p);
    if (r.divergent) return {true, 0.0, r.reason};
    double sd = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) sd += s[j] * p.detectors[j].delta_tilde;
    return {false, sd - r.value, r.reason};
  }

 private:
  quad::Options opt_;
  std::shared_ptr<KernelCache> cache_;

  static void check_common(int n, double m, double t) {
    if (n < 2 || n > 5) throw DomainError("unsupported dimension n = " + std::to_string(n));
    if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("kernels: m_tilde must be finite and >= 0");
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("kernels: t_tilde must be finite and >= 0");
  }

  static void check_signs(const std::vector<int>& s, const ModelParams& p) {
    if (s.size() != p.size()) throw DomainError("sign vector length must equal the number of detectors");
    for (int v : s) {
      if (v != 1 && v != -1) throw DomainError("sign vector entries must be +1 or -1");
    }
  }

  std::pair<double, double> pair_value(std::size_t i, std::size_t j, double t, const ModelParams& p) const {
    if (i == j) throw DomainError("kernels: pair kernels need i != j");
    const double ll = p.detectors.at(i).lambda_tilde * p.detectors.at(j).lambda_tilde;
    if (ll == 0.0 || t == 0.0) return {0.0, 0.0};
    // order the pair so (i,j) and (j,i) hit the same computation
    const std::size_t a = std::min(i, j), b = std::max(i, j);
    const Unit u = pair_unit(p.n, p.m_tilde, t, p.distance(a, b));
    return {ll * u.v0, ll * u.v1};
  }

  Unit reg_unit(int alpha, int n, double m, double L, bool cross) const {
    KernelKey key = make_key(cross ? KernelId::RegCross : KernelId::RegSelf, n, alpha, 0.0, L, m);
    return cached(key, [&] {
      const double c = cross ? kern::prefactor_reg_cross(n) : kern::prefactor_reg_self(n);
      quad::Integrand<kern::RegIntegrand> f{{n, alpha, m, L, c, cross}, {cross ? L : 0.0}};
      f.feature_scale = m;
      const auto r = quad::integrate_semiinf(f, opt_);
      return Unit{r.value, 0.0, r.est_rel_error, r.n_evals};
    });
  }

  KernelKey make_key(KernelId id, int n, int alpha, double t, double L, double m) const {
    KernelKey k;
    k.id = id;
    k.n = n;
    k.alpha = alpha;
    k.t = t;
    k.L = L;
    k.m = m;
    k.rel_tol = opt_.rel_tol;
    k.abs_tol = opt_.abs_tol;
    k.u_max = opt_.u_max.value_or(0.0);
    k.periods_per_panel = opt_.periods_per_panel;
    k.max_panel_width = opt_.max_panel_width;
    return k;
  }

  template <class Compute>
  Unit cached(const KernelKey& key, Compute&& compute) const {
    if (cache_) {
      if (auto e = cache_->find(key)) return Unit{e->v0, e->v1, e->rel_err, e->n_evals};
    }
    const Unit u = compute();
    if (cache_) cache_->insert(key, KernelEntry{u.v0, u.v1, u.rel_err, u.n_evals});
    return u;
  }
};

/// Free-function forms backed by an uncached engine.
inline double decay_exponent(std::size_t j, double t, const ModelParams& p, const quad::Options& opt = {}) {
  return KernelEngine(opt).decay_exponent(j, t, p);
}
inline double vartheta(std::size_t i, std::size_t j, double t, const ModelParams& p,
                       const quad::Options& opt = {}) {
  return KernelEngine(opt).vartheta(i, j, t, p);
}
inline double xi(std::size_t i, std::size_t j, double t, const ModelParams& p, const quad::Options& opt = {}) {
  return KernelEngine(opt).xi(i, j, t, p);
}
inline RegularityResult r_alpha(int alpha, const std::vector<int>& s, const ModelParams& p,
                                const quad::Options& opt = {}) {
  return KernelEngine(opt).r_alpha(alpha, s, p);
}
inline EnergyResult ground_state_energy(const std::vector<int>& s, const ModelParams& p,
                                        const quad::Options& opt = {}) {
  return KernelEngine(opt).ground_state_energy(s, p);
}

}  // namespace rsb

#endif  // RSB_KERNELS_HPP
