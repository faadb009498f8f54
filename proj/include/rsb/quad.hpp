#ifndef RSB_QUAD_HPP
#define RSB_QUAD_HPP

// Adaptive Gauss-Kronrod integration over [0, inf) for Gaussian-damped,
// oscillatory integrands. Integrands may be scalar or return a fixed-size
// std::array; vector integrands share one panel decomposition, which is how
// the field kernels evaluate several closely related integrals at once.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <sstream>
#include <type_traits>
#include <vector>

#include "rsb/error.hpp"

namespace rsb::quad {

/// A function of u >= 0 together with what the integrator needs to know
/// about its shape.
template <class F>
struct Integrand {
  F eval;
  /// Characteristic angular frequencies in u (e.g. t and L).
  std::vector<double> oscillation_scales;
  /// The integrand carries exp(-(damping_scale * u)^2); 1/sqrt(2) means exp(-u^2/2).
  double damping_scale = 1.0 / std::numbers::sqrt2;
  /// Smallest structural scale near u = 0 (e.g. the field mass); 0 if none.
  double feature_scale = 0.0;
};

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  /// Evaluation budget for adaptive refinement beyond the initial panel layout.
  std::size_t max_subdivision_evals = 10'000'000;
  /// Truncation point; by default 9 / (sqrt(2) * damping_scale).
  std::optional<double> u_max;
  /// Oscillation periods covered by one initial panel.
  double periods_per_panel = 8.0;
  double max_panel_width = 0.25;
};

struct QuadResult {
  double value = 0.0;
  double est_rel_error = 0.0;
  double est_abs_error = 0.0;
  std::size_t n_evals = 0;
};

template <std::size_t K>
struct VecQuadResult {
  std::array<double, K> value{};
  std::array<double, K> est_abs_error{};
  std::size_t n_evals = 0;

  double est_rel_error(std::size_t k) const {
    const double v = std::fabs(value[k]);
    if (v > 0.0) return est_abs_error[k] / v;
    return est_abs_error[k] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
};

namespace detail {

// 61-point Kronrod extension of the 30-point Gauss rule (QUADPACK qk61).
// Gauss nodes are xgk[1], xgk[3], ..., xgk[29].
inline constexpr std::array<double, 31> kXgk = {
    0.999484410050490637571325895705811, 0.996893484074649540271630050918695,
    0.991630996870404594858628366109486, 0.983668123279747209970032581605663,
    0.973116322501126268374693868423707, 0.960021864968307512216871025581798,
    0.944374444748559979415831324037439, 0.926200047429274325879324277080474,
    0.905573307699907798546522558925958, 0.882560535792052681543116462530226,
    0.857205233546061098958658510658944, 0.829565762382768397442898119732502,
    0.799727835821839083013668942322683, 0.767777432104826194917977340974503,
    0.733790062453226804726171131369528, 0.697850494793315796932292388026640,
    0.660061064126626961370053668149271, 0.620526182989242861140477556431189,
    0.579345235826361691756024932172540, 0.536624148142019899264169793311073,
    0.492480467861778574993693061207709, 0.447033769538089176780609900322854,
    0.400401254830394392535476211542661, 0.352704725530878113471037207089374,
    0.304073202273625077372677107199257, 0.254636926167889846439805129817805,
    0.204525116682309891438957671002025, 0.153869913608583546963794672743256,
    0.102806937966737030147096751318001, 0.051471842555317695833025213166723,
    0.0};

inline constexpr std::array<double, 31> kWgk = {
    0.001389013698677007624551591226760, 0.003890461127099884051267201844516,
    0.006630703915931292173319826369750, 0.009273279659517763428441146892024,
    0.011823015253496341742232898853251, 0.014369729507045804812451432443580,
    0.016920889189053272627572289420322, 0.019414141193942381173408951050128,
    0.021828035821609192297167485738339, 0.024191162078080601365686370725232,
    0.026509954882333101610601709335075, 0.028754048765041292843978785354334,
    0.030907257562387762472884252943092, 0.032981447057483726031814191016854,
    0.034979338028060024137499670731468, 0.036882364651821229223911065617136,
    0.038678945624727592950348651532281, 0.040374538951535959111995279752468,
    0.041969810215164246147147541285970, 0.043452539701356069316831728117073,
    0.044814800133162663192355551616723, 0.046059238271006988116271735559374,
    0.047185546569299153945261478181099, 0.048185861757087129140779492298305,
    0.049055434555029778887528165367238, 0.049795683427074206357811569379942,
    0.050405921402782346840893085653585, 0.050881795898749606492297473049805,
    0.051221547849258772170656282604944, 0.051426128537459025933862879215781,
    0.051494729429451567558340433647099};

inline constexpr std::array<double, 15> kWg = {
    0.007968192496166605615465883474674, 0.018466468311090959142302131912047,
    0.028784707883323369349719179611292, 0.038799192569627049596801936446348,
    0.048402672830594052902938140422808, 0.057493156217619066481721689402056,
    0.065974229882180495128128515115962, 0.073755974737705206268243850022191,
    0.080755895229420215354694938460530, 0.086899787201082979802387530715126,
    0.092122522237786128717632707087619, 0.096368737174644259639468626351810,
    0.099593420586795267062780282103569, 0.101762389748405504596428952168554,
    0.102852652893558840341285636705415};

inline constexpr std::size_t kEvalsPerPanel = 61;

template <class R>
struct ResultArity;
template <>
struct ResultArity<double> {
  static constexpr std::size_t value = 1;
};
template <std::size_t K>
struct ResultArity<std::array<double, K>> {
  static constexpr std::size_t value = K;
};

template <std::size_t K>
using Vec = std::array<double, K>;

template <std::size_t K, class F>
Vec<K> call(const F& f, double u) {
  if constexpr (K == 1 && std::is_same_v<std::invoke_result_t<const F&, double>, double>) {
    return {f(u)};
  } else {
    return f(u);
  }
}

template <std::size_t K>
struct Panel {
  double a;
  double b;
  Vec<K> value;
  Vec<K> error;
  Vec<K> l1;  // integral of |f|, for the roundoff floor
};

template <std::size_t K>
void check_finite(const Vec<K>& v, double u) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << "integrand returned a non-finite value at u = " << u;
      throw NonFiniteError(os.str());
    }
  }
}

template <std::size_t K, class F>
Panel<K> gk61(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  Vec<K> resk{};
  Vec<K> resg{};
  Vec<K> resabs{};
  const Vec<K> fc = call<K>(f, c);
  check_finite<K>(fc, c);
  for (std::size_t k = 0; k < K; ++k) {
    resk[k] = kWgk[30] * fc[k];
    resabs[k] = kWgk[30] * std::fabs(fc[k]);
  }
  for (std::size_t j = 0; j < 30; ++j) {
    const double dx = h * kXgk[j];
    const double x1 = c - dx;
    const double x2 = c + dx;
    const Vec<K> f1 = call<K>(f, x1);
    const Vec<K> f2 = call<K>(f, x2);
    check_finite<K>(f1, x1);
    check_finite<K>(f2, x2);
    const double wk = kWgk[j];
    const bool gauss_node = (j % 2 == 1);
    const double wg = gauss_node ? kWg[j / 2] : 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double s = f1[k] + f2[k];
      resk[k] += wk * s;
      resabs[k] += wk * (std::fabs(f1[k]) + std::fabs(f2[k]));
      if (gauss_node) resg[k] += wg * s;
    }
  }
  Panel<K> p{a, b, {}, {}, {}};
  for (std::size_t k = 0; k < K; ++k) {
    p.value[k] = resk[k] * h;
    p.error[k] = std::fabs((resk[k] - resg[k]) * h);
    p.l1[k] = resabs[k] * std::fabs(h);
  }
  return p;
}

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

template <std::size_t K>
struct Totals {
  Vec<K> value{};
  Vec<K> error{};
  Vec<K> l1{};
};

template <std::size_t K>
Vec<K> tolerances(const Totals<K>& t, const Options& opt) {
  Vec<K> tol{};
  constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon();
  for (std::size_t k = 0; k < K; ++k) {
    tol[k] = std::max({opt.rel_tol * std::fabs(t.value[k]), opt.abs_tol, kRoundoff * t.l1[k]});
  }
  return tol;
}

template <std::size_t K>
bool converged(const Totals<K>& t, const Vec<K>& tol) {
  for (std::size_t k = 0; k < K; ++k) {
    if (t.error[k] > tol[k]) return false;
  }
  return true;
}

template <std::size_t K>
double badness(const Panel<K>& p, const Vec<K>& tol) {
  double worst = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = tol[k] > 0.0 ? tol[k] : std::numeric_limits<double>::min();
    worst = std::max(worst, p.error[k] / denom);
  }
  return worst;
}

template <std::size_t K, class F>
VecQuadResult<K> adaptive(const F& f, const std::vector<double>& breakpoints, const Options& opt) {
  if (!(opt.rel_tol >= 1e-15 && opt.rel_tol <= 1e-1)) {
    throw DomainError("quad: rel_tol out of range");
  }
  if (breakpoints.size() < 2) throw DomainError("quad: need at least one panel");

  std::vector<Panel<K>> panels;
  panels.reserve(breakpoints.size() - 1);
  std::size_t n_evals = 0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    panels.push_back(gk61<K>(f, breakpoints[i], breakpoints[i + 1]));
    n_evals += kEvalsPerPanel;
  }

  auto sum_panels = [&panels]() {
    std::array<CompensatedSum, K> v{};
    Totals<K> t;
    for (const auto& p : panels) {
      for (std::size_t k = 0; k < K; ++k) {
        v[k].add(p.value[k]);
        t.error[k] += p.error[k];
        t.l1[k] += p.l1[k];
      }
    }
    for (std::size_t k = 0; k < K; ++k) t.value[k] = v[k].value();
    return t;
  };

  Totals<K> totals = sum_panels();
  Vec<K> tol = tolerances(totals, opt);

  if (!converged(totals, tol)) {
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> heap;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      const double bad = badness(panels[i], tol);
      if (bad > 0.0) heap.emplace(bad, i);
    }
    std::size_t sub_evals = 0;
    while (!converged(totals, tol)) {
      if (heap.empty() || sub_evals > opt.max_subdivision_evals) {
        std::ostringstream os;
        os << "quad: tolerance not reached (";
        for (std::size_t k = 0; k < K; ++k) {
          os << (k ? ", " : "") << "err " << totals.error[k] << " vs tol " << tol[k];
        }
        os << ") after " << sub_evals << " refinement evaluations";
        throw AccuracyError(os.str(), totals.value[0], totals.error[0]);
      }
      const std::size_t idx = heap.top().second;
      heap.pop();
      const Panel<K> parent = panels[idx];
      const double mid = 0.5 * (parent.a + parent.b);
      if (!(mid > parent.a && mid < parent.b)) continue;  // cannot split further
      Panel<K> left = gk61<K>(f, parent.a, mid);
      Panel<K> right = gk61<K>(f, mid, parent.b);
      sub_evals += 2 * kEvalsPerPanel;
      n_evals += 2 * kEvalsPerPanel;
      for (std::size_t k = 0; k < K; ++k) {
        totals.value[k] += left.value[k] + right.value[k] - parent.value[k];
        totals.error[k] += left.error[k] + right.error[k] - parent.error[k];
        totals.l1[k] += left.l1[k] + right.l1[k] - parent.l1[k];
      }
      panels[idx] = left;
      panels.push_back(right);
      tol = tolerances(totals, opt);
      heap.emplace(badness(panels[idx], tol), idx);
      heap.emplace(badness(panels.back(), tol), panels.size() - 1);
    }
    // Deterministic final summation in left-to-right order.
    std::sort(panels.begin(), panels.end(),
              [](const Panel<K>& x, const Panel<K>& y) { return x.a < y.a; });
    totals = sum_panels();
  }

  VecQuadResult<K> out;
  out.value = totals.value;
  out.est_abs_error = totals.error;
  out.n_evals = n_evals;
  return out;
}

}  // namespace detail

/// Default truncation point for a given damping scale.
inline double default_u_max(double damping_scale) {
  return 9.0 / (std::numbers::sqrt2 * damping_scale);
}

/// Initial panel layout on [0, u_max]: a short logarithmic ladder from
/// u_lo up through [0, 1e-3], then panels no wider than `width`.
inline std::vector<double> initial_breakpoints(double u_max, double width, double feature_scale) {
  if (!(u_max > 0.0) || !(width > 0.0)) throw DomainError("quad: invalid panel layout");
  double u_lo = 1e-5;
  if (feature_scale > 0.0) u_lo = std::min(u_lo, 1e-2 * feature_scale);
  u_lo = std::max(u_lo, 1e-15);
  std::vector<double> bp{0.0, u_lo};
  double u = u_lo;
  while (u < u_max) {
    const double next = std::min({u * 10.0, u + width, u_max});
    bp.push_back(next);
    u = next;
  }
  return bp;
}

inline double panel_width(const std::vector<double>& oscillation_scales, const Options& opt) {
  double omega = 0.0;
  for (double s : oscillation_scales) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("quad: oscillation scales must be finite and >= 0");
    omega += s;
  }
  if (omega <= 0.0) return opt.max_panel_width;
  return std::min(opt.periods_per_panel * 2.0 * std::numbers::pi / omega, opt.max_panel_width);
}

/// Integrate f over [0, inf), truncated at u_max where the Gaussian damping
/// has made the tail negligible. Returns VecQuadResult<K> for array-valued
/// integrands and QuadResult for scalar ones.
template <class F>
auto integrate_semiinf(const Integrand<F>& f, const Options& opt) {
  using R = std::invoke_result_t<const F&, double>;
  constexpr std::size_t K = detail::ResultArity<std::remove_cvref_t<R>>::value;
  if (f.oscillation_scales.empty()) throw DomainError("quad: oscillation_scales must be nonempty");
  if (!(f.damping_scale > 0.0)) throw DomainError("quad: damping_scale must be positive");
  const double u_max = opt.u_max.value_or(default_u_max(f.damping_scale));
  const auto bp = initial_breakpoints(u_max, panel_width(f.oscillation_scales, opt), f.feature_scale);
  auto res = detail::adaptive<K>(f.eval, bp, opt);
  if constexpr (std::is_same_v<std::remove_cvref_t<R>, double>) {
    return QuadResult{res.value[0], res.est_rel_error(0), res.est_abs_error[0], res.n_evals};
  } else {
    return res;
  }
}

template <class F>
QuadResult integrate_semiinf(const Integrand<F>& f, double rel_tol) {
  static_assert(std::is_same_v<std::remove_cvref_t<std::invoke_result_t<const F&, double>>, double>,
                "the rel_tol overload is for scalar integrands");
  Options opt;
  opt.rel_tol = rel_tol;
  if (!(rel_tol >= 1e-12 && rel_tol <= 1e-4)) throw DomainError("quad: rel_tol must lie in [1e-12, 1e-4]");
  return integrate_semiinf(f, opt);
}

/// Adaptive integration over a finite interval [a, b], starting from
/// `initial_panels` equal panels.
template <class F>
QuadResult integrate_interval(const F& f, double a, double b, const Options& opt,
                              std::size_t initial_panels = 1) {
  if (!(b > a)) throw DomainError("quad: need a < b");
  std::vector<double> bp(initial_panels + 1);
  for (std::size_t i = 0; i <= initial_panels; ++i) {
    bp[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(initial_panels);
  }
  bp.back() = b;
  auto res = detail::adaptive<1>(f, bp, opt);
  return QuadResult{res.value[0], res.est_rel_error(0), res.est_abs_error[0], res.n_evals};
}

}  // namespace rsb::quad

#endif  // RSB_QUAD_HPP
