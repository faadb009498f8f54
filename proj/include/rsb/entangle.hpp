#ifndef RSB_ENTANGLE_HPP
#define RSB_ENTANGLE_HPP

// Negativities, partial transposes and traces, and the three-qubit pi-tangle.
// Detector j is the j-th tensor factor; subsets are sets of detector indices.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "rsb/dmatrix.hpp"
#include "rsb/error.hpp"

namespace rsb {

using Subset = std::set<int>;

inline std::string detector_name(int j) { return std::string(1, static_cast<char>('A' + j)); }

namespace detail {

inline void check_subset(const Subset& subset, int n_qubits, bool proper) {
  if (subset.empty()) throw DomainError("subset must be nonempty");
  for (int j : subset) {
    if (j < 0 || j >= n_qubits) throw DomainError("detector index " + std::to_string(j) + " out of range");
  }
  if (proper && static_cast<int>(subset.size()) == n_qubits) throw DomainError("subset must be a proper subset");
}

inline std::size_t subset_mask_canonical(const Subset& subset, int n_qubits) {
  std::size_t mask = 0;
  for (int j : subset) mask |= std::size_t{1} << (n_qubits - 1 - j);
  return mask;
}

}  // namespace detail

/// Transpose on the tensor factors in `subset`, in canonical basis order.
inline CMatrix partial_transpose(const CMatrix& m, int n_qubits, const Subset& subset) {
  detail::check_subset(subset, n_qubits, false);
  const std::size_t dim = std::size_t{1} << n_qubits;
  if (static_cast<std::size_t>(m.rows()) != dim || static_cast<std::size_t>(m.cols()) != dim) {
    throw DomainError("partial_transpose: matrix size does not match 2^N");
  }
  const std::size_t mask = detail::subset_mask_canonical(subset, n_qubits);
  CMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const std::size_t r2 = (r & ~mask) | (c & mask);
      const std::size_t c2 = (c & ~mask) | (r & mask);
      out(static_cast<Eigen::Index>(r2), static_cast<Eigen::Index>(c2)) =
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

inline CMatrix partial_transpose(const DensityMatrix& rho, const Subset& subset) {
  detail::check_subset(subset, rho.n_qubits, true);
  return partial_transpose(rho.canonical().entries, rho.n_qubits, subset);
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
inline double trace_norm_hermitian(const CMatrix& h) {
  const Eigen::VectorXd ev = hermitian_eigenvalues(h);
  return ev.cwiseAbs().sum();
}

/// (||rho^{T_subset}||_1 - 1) / 2; roundoff below zero (within 1e-12) is clamped.
inline double negativity(const DensityMatrix& rho, const Subset& subset) {
  const double tn = trace_norm_hermitian(partial_transpose(rho, subset));
  const double v = 0.5 * (tn - 1.0);
  if (v >= 0.0) return v;
  if (v >= -1e-12) return 0.0;
  throw ModelConsistencyError("negativity: trace norm below 1 by " + std::to_string(-2.0 * v) +
                              "; the input is not normalized");
}

/// Reduced state on the detectors in `keep` (kept in increasing index order).
inline DensityMatrix partial_trace(const DensityMatrix& rho, const Subset& keep) {
  detail::check_subset(keep, rho.n_qubits, true);
  const int N = rho.n_qubits;
  const int K = static_cast<int>(keep.size());
  const CMatrix m = rho.canonical().entries;
  const std::vector<int> kept(keep.begin(), keep.end());
  std::vector<int> traced;
  for (int j = 0; j < N; ++j) {
    if (!keep.count(j)) traced.push_back(j);
  }
  auto compose = [&](std::size_t kidx, std::size_t tidx) {
    std::size_t full = 0;
    for (int a = 0; a < K; ++a) {
      if (kidx & (std::size_t{1} << (K - 1 - a))) full |= std::size_t{1} << (N - 1 - kept[static_cast<std::size_t>(a)]);
    }
    const int T = static_cast<int>(traced.size());
    for (int b = 0; b < T; ++b) {
      if (tidx & (std::size_t{1} << (T - 1 - b))) full |= std::size_t{1} << (N - 1 - traced[static_cast<std::size_t>(b)]);
    }
    return full;
  };
  const std::size_t dk = std::size_t{1} << K;
  const std::size_t dt = std::size_t{1} << (N - K);
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::size_t r = 0; r < dk; ++r) {
    for (std::size_t c = 0; c < dk; ++c) {
      cplx s = 0.0;
      for (std::size_t e = 0; e < dt; ++e) {
        s += m(static_cast<Eigen::Index>(compose(r, e)), static_cast<Eigen::Index>(compose(c, e)));
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s;
    }
  }
  return DensityMatrix{K, canonical_states(K), out};
}

struct EntanglementThresholds {
  double pair_zero = 1e-9;  // a pairwise negativity below this counts as zero
  double ghz = 1e-8;        // a clamped pi-tangle above this counts as positive
};

struct EntanglementReport {
  std::map<std::string, double> negativities;  // "A|BC", "A|B", ...
  std::array<double, 3> pi_components{};       // pi_A, pi_B, pi_C
  double pi_tangle_raw = 0.0;
  double pi_tangle_clamped = 0.0;
  bool ghz_type = false;
  EntanglementThresholds thresholds;

  double at(const std::string& key) const {
    auto it = negativities.find(key);
    if (it == negativities.end()) throw DomainError("no negativity recorded for " + key);
    return it->second;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["negativities"] = negativities;
    j["pi_components"] = pi_components;
    j["pi_tangle_raw"] = pi_tangle_raw;
    j["pi_tangle_clamped"] = pi_tangle_clamped;
    j["ghz_type"] = ghz_type;
    j["thresholds"] = {{"pair_zero", thresholds.pair_zero}, {"ghz", thresholds.ghz}};
    return j;
  }
};

/// pi = (pi_A + pi_B + pi_C)/3 with pi_A = N_{A(BC)}^2 - N_{A(B)}^2 - N_{A(C)}^2 and cyclic.
inline EntanglementReport pi_tangle(const DensityMatrix& rho, const EntanglementThresholds& th = {}) {
  if (rho.n_qubits != 3) throw DomainError("pi_tangle: needs a three-detector state");
  EntanglementReport rep;
  rep.thresholds = th;
  const DensityMatrix c = rho.canonical();
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, d = (a + 2) % 3;
    rep.negativities[detector_name(a) + "|" + detector_name(b) + detector_name(d)] = negativity(c, {a});
  }
  double max_pair = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a == b) continue;
      const int lo = std::min(a, b), hi = std::max(a, b);
      const DensityMatrix pair = partial_trace(c, {lo, hi});
      // transpose on detector a inside the pair
      const double v = negativity(pair, {a == lo ? 0 : 1});
      rep.negativities[detector_name(a) + "|" + detector_name(b)] = v;
      max_pair = std::max(max_pair, v);
    }
  }
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, d = (a + 2) % 3;
    const std::string A = detector_name(a), B = detector_name(b), D = detector_name(d);
    const double one_rest = rep.negativities[A + "|" + B + D];
    const double nab = rep.negativities[A + "|" + B];
    const double nad = rep.negativities[A + "|" + D];
    rep.pi_components[static_cast<std::size_t>(a)] = one_rest * one_rest - nab * nab - nad * nad;
  }
  rep.pi_tangle_raw = (rep.pi_components[0] + rep.pi_components[1] + rep.pi_components[2]) / 3.0;
  rep.pi_tangle_clamped = std::max(rep.pi_tangle_raw, 0.0);
  rep.ghz_type = rep.pi_tangle_clamped > th.ghz && max_pair < th.pair_zero;
  return rep;
}

/// Negativity of a two-detector state (transpose on the first detector).
inline double bipartite_negativity(const DensityMatrix& rho) {
  if (rho.n_qubits != 2) throw DomainError("bipartite_negativity: needs a two-detector state");
  return negativity(rho, {0});
}

}  // namespace rsb

#endif  // RSB_ENTANGLE_HPP
