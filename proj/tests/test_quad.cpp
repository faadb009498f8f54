#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "oracle/oracle.hpp"
#include "rsb/quad.hpp"

using namespace rsb::quad;

namespace {

template <class F>
Integrand<F> make(F f, std::vector<double> scales) {
  return Integrand<F>{f, std::move(scales)};
}

double rel_diff(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

// The damped oscillatory test integrand with a small mass-like offset.
double massive_sin2(double u) {
  const double w2 = u * u + 0.01;
  const double s = std::sin(std::sqrt(w2) * 500.0 / 2.0);
  return u * u * std::exp(-0.5 * u * u) * s * s / (w2 * std::sqrt(w2));
}

}  // namespace

TEST(Quad, GaussianIntegral) {
  auto f = make([](double u) { return std::exp(-0.5 * u * u); }, {0.0});
  const auto r = integrate_semiinf(f, 1e-10);
  EXPECT_LT(rel_diff(r.value, std::sqrt(std::numbers::pi / 2)), 1e-10);
  EXPECT_LE(r.est_rel_error, 1e-10);
  EXPECT_GT(r.n_evals, 0u);
}

TEST(Quad, DampedSineLaplaceTransform) {
  // Exponential rather than Gaussian damping, so truncate further out.
  auto f = make([](double u) { return std::exp(-u) * std::sin(50.0 * u); }, {50.0});
  Options opt;
  opt.rel_tol = 1e-10;
  opt.u_max = 45.0;
  const auto r = integrate_semiinf(f, opt);
  EXPECT_LT(rel_diff(r.value, 50.0 / 2501.0), 1e-10);
  EXPECT_NEAR(r.value, 0.019992003, 1e-9);
  EXPECT_LE(r.est_rel_error, 1e-10);
}

TEST(Quad, MassiveSinSquaredAgainstSimpson) {
  const auto ref = oracle::simpson<1>(
      [](oracle::ld u) {
        const oracle::ld w2 = u * u + 0.01L;
        const oracle::ld s = std::sin(std::sqrt(w2) * 250.0L);
        return std::array<oracle::ld, 1>{u * u * std::exp(-0.5L * u * u) * s * s / (w2 * std::sqrt(w2))};
      },
      0.0L, 12.0L, 10'000'000)[0];
  auto f = make(massive_sin2, {500.0});
  const auto r = integrate_semiinf(f, 1e-10);
  EXPECT_LT(rel_diff(r.value, static_cast<double>(ref)), 1e-9);
  EXPECT_LE(r.est_rel_error, 1e-10);
}

TEST(Quad, Linearity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coef(-3.0, 3.0), freq(1.0, 200.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = coef(rng), b = coef(rng), p = freq(rng), q = freq(rng);
    auto g1 = [p](double u) { return u * std::exp(-0.5 * u * u) * std::cos(p * u); };
    auto g2 = [q](double u) { return std::exp(-0.5 * u * u) * std::sin(q * u) * std::sin(q * u); };
    const auto r1 = integrate_semiinf(make(g1, {p}), 1e-10);
    const auto r2 = integrate_semiinf(make(g2, {2 * q}), 1e-10);
    auto h = [&](double u) { return a * g1(u) + b * g2(u); };
    const auto rh = integrate_semiinf(make(h, {p, 2 * q}), 1e-10);
    const double combined = std::fabs(a) * r1.est_abs_error + std::fabs(b) * r2.est_abs_error + rh.est_abs_error;
    const double roundoff = 1e-15 * (std::fabs(a * r1.value) + std::fabs(b * r2.value));
    EXPECT_LE(std::fabs(rh.value - (a * r1.value + b * r2.value)), 2.0 * combined + roundoff);
  }
}

TEST(Quad, TruncationSafety) {
  for (double t : {1.0, 30.0, 700.0}) {
    auto f = make(
        [t](double u) {
          const double s = std::sin(0.5 * u * t);
          return u * u * std::exp(-0.5 * u * u) * s * s / (u * u * u + 1e-3);
        },
        {t});
    Options o9, o12;
    o9.u_max = 9.0;
    o12.u_max = 12.0;
    const auto a = integrate_semiinf(f, o9);
    const auto b = integrate_semiinf(f, o12);
    EXPECT_LT(rel_diff(a.value, b.value), o9.rel_tol) << "t = " << t;
  }
}

TEST(Quad, RefinementMonotonicity) {
  // A deliberately coarse initial layout so the adaptive phase does the work.
  const double ref = [] {
    const auto r = oracle::simpson<1>(
        [](oracle::ld u) {
          return std::array<oracle::ld, 1>{std::exp(-0.5L * u * u) * std::cos(40.0L * u) * u * u};
        },
        0.0L, 12.0L, 10'000'000);
    return static_cast<double>(r[0]);
  }();
  auto f = make([](double u) { return std::exp(-0.5 * u * u) * std::cos(40.0 * u) * u * u; }, {40.0});
  double prev = INFINITY;
  for (double tol : {1e-4, 5e-5, 2.5e-5, 1.25e-5, 6.25e-6, 3.125e-6}) {
    Options opt;
    opt.rel_tol = tol;
    opt.periods_per_panel = 400.0;
    opt.max_panel_width = 9.0;
    const auto r = integrate_semiinf(f, opt);
    const double disc = std::fabs(r.value - ref);
    EXPECT_LE(disc, prev + 1e-16) << "tol = " << tol;
    prev = disc;
  }
}

TEST(Quad, VectorIntegrandSharesPanels) {
  auto f = make(
      [](double u) {
        const double g = std::exp(-0.5 * u * u);
        return std::array<double, 2>{g, u * g};
      },
      {0.0});
  Options opt;
  const auto r = integrate_semiinf(f, opt);
  EXPECT_LT(rel_diff(r.value[0], std::sqrt(std::numbers::pi / 2)), 1e-12);
  EXPECT_LT(rel_diff(r.value[1], 1.0), 1e-12);
}

TEST(Quad, BudgetExhaustionSignalsAccuracyFailure) {
  auto f = make([](double u) { return std::exp(-0.5 * u * u) * std::cos(400.0 * u); }, {400.0});
  Options opt;
  opt.rel_tol = 1e-12;
  opt.periods_per_panel = 5000.0;
  opt.max_panel_width = 9.0;
  opt.max_subdivision_evals = 500;
  EXPECT_THROW(integrate_semiinf(f, opt), rsb::AccuracyError);
}

TEST(Quad, NaNIsSignalled) {
  auto f = make([](double u) { return u > 3.0 ? std::nan("") : 1.0; }, {1.0});
  EXPECT_THROW(integrate_semiinf(f, 1e-8), rsb::NonFiniteError);
}

TEST(Quad, InvalidArguments) {
  auto f = make([](double u) { return std::exp(-u * u); }, {1.0});
  EXPECT_THROW(integrate_semiinf(f, 1e-13), rsb::DomainError);
  EXPECT_THROW(integrate_semiinf(f, 1e-3), rsb::DomainError);
  auto g = make([](double u) { return std::exp(-u * u); }, {});
  EXPECT_THROW(integrate_semiinf(g, 1e-8), rsb::DomainError);
}

TEST(Quad, Deterministic) {
  auto f = make(massive_sin2, {500.0});
  const auto a = integrate_semiinf(f, 1e-10);
  const auto b = integrate_semiinf(f, 1e-10);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.n_evals, b.n_evals);
}

TEST(Quad, FiniteIntervalWithEndpointSingularity) {
  Options opt;
  opt.rel_tol = 1e-10;
  const auto r = integrate_interval([](double x) { return std::sqrt(x); }, 0.0, 1.0, opt);
  EXPECT_LT(rel_diff(r.value, 2.0 / 3.0), 1e-10);
}

TEST(Quad, InitialLayout) {
  const auto bp = initial_breakpoints(9.0, 0.05, 1e-11);
  ASSERT_GE(bp.size(), 3u);
  EXPECT_EQ(bp.front(), 0.0);
  EXPECT_EQ(bp.back(), 9.0);
  for (std::size_t i = 1; i < bp.size(); ++i) EXPECT_LT(bp[i - 1], bp[i]);
  EXPECT_LE(bp[1], 1e-13);
  // logarithmic ladder through the first decade
  std::size_t below = 0;
  for (double b : bp) below += (b > 0.0 && b <= 1e-3) ? 1 : 0;
  EXPECT_GE(below, 8u);
  for (std::size_t i = 1; i < bp.size(); ++i) EXPECT_LE(bp[i] - bp[i - 1], 0.05 + 1e-15);
}
