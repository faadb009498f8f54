#ifndef RSB_TEST_DRAWS_HPP
#define RSB_TEST_DRAWS_HPP

// Random model draws shared by the property and acceptance suites.

#include <cmath>
#include <random>
#include <vector>

#include "rsb/model.hpp"

namespace oracle {

struct ModelDraw {
  rsb::ModelParams p;
  double t = 0.0;
};

struct DrawRanges {
  int n_lo = 2, n_hi = 5;
  double log_m_lo = -11.0, log_m_hi = 0.0;
  double lambda_hi = 2.0;
  double L_lo = 4.0, L_hi = 40.0;
  double t_hi = 1e3;
  double delta_hi = 1.0;
};

/// N detectors at random positions with every pairwise distance in [L_lo, L_hi].
inline ModelDraw draw_model(std::mt19937_64& rng, int N, const DrawRanges& r = {}) {
  std::uniform_int_distribution<int> dn(r.n_lo, r.n_hi);
  std::uniform_real_distribution<double> lm(r.log_m_lo, r.log_m_hi), lam(0.0, r.lambda_hi), dt(0.0, r.t_hi),
      dd(-r.delta_hi, r.delta_hi), dL(r.L_lo, r.L_hi), g(-1.0, 1.0);
  ModelDraw d;
  d.p.n = dn(rng);
  d.p.m_tilde = std::pow(10.0, lm(rng));
  d.t = dt(rng);
  const std::size_t n = static_cast<std::size_t>(d.p.n);
  std::vector<std::vector<double>> pos;
  pos.emplace_back(n, 0.0);
  while (static_cast<int>(pos.size()) < N) {
    // random direction from the first detector, then check the other distances
    std::vector<double> dir(n);
    double norm = 0.0;
    for (auto& x : dir) {
      x = g(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-3) continue;
    const double L = dL(rng);
    std::vector<double> cand(n);
    for (std::size_t k = 0; k < n; ++k) cand[k] = dir[k] / norm * L;
    bool ok = true;
    for (std::size_t q = 1; q < pos.size(); ++q) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += (cand[k] - pos[q][k]) * (cand[k] - pos[q][k]);
      const double dist = std::sqrt(s);
      ok = ok && dist >= r.L_lo && dist <= r.L_hi;
    }
    if (ok) pos.push_back(cand);
  }
  for (int j = 0; j < N; ++j) d.p.detectors.push_back({lam(rng), dd(rng), pos[static_cast<std::size_t>(j)]});
  return d;
}

}  // namespace oracle

#endif  // RSB_TEST_DRAWS_HPP
