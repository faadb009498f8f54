#ifndef RSB_DMATRIX_HPP
#define RSB_DMATRIX_HPP

// Reduced density matrices of N gapless detectors prepared in their ground
// states, written in the sigma_x product basis. The general builder is the
// reference; the two- and three-detector builders transcribe the explicit
// element lists.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "rsb/error.hpp"
#include "rsb/kernels.hpp"
#include "rsb/model.hpp"

namespace rsb {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

/// A basis state as a bitmask: bit j set means detector j is in |->.
using BasisState = std::uint32_t;

inline std::string state_label(BasisState s, int n_qubits) {
  std::string out(static_cast<std::size_t>(n_qubits), '+');
  for (int j = 0; j < n_qubits; ++j) {
    if (s & (BasisState{1} << j)) out[static_cast<std::size_t>(j)] = '-';
  }
  return out;
}

inline BasisState parse_state_label(const std::string& label) {
  BasisState s = 0;
  for (std::size_t j = 0; j < label.size(); ++j) {
    if (label[j] == '-') {
      s |= BasisState{1} << j;
    } else if (label[j] != '+') {
      throw DomainError("basis label must contain only '+' and '-': " + label);
    }
  }
  return s;
}

inline int sign_of(BasisState s, int j) { return (s & (BasisState{1} << j)) ? -1 : 1; }

/// Canonical ordering: index k has detector j in |-> iff bit (N-1-j) of k
/// is set, so the first detector is the most significant factor.
inline std::vector<BasisState> canonical_states(int n_qubits) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  std::vector<BasisState> out(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    BasisState s = 0;
    for (int j = 0; j < n_qubits; ++j) {
      if (k & (std::size_t{1} << (n_qubits - 1 - j))) s |= BasisState{1} << j;
    }
    out[k] = s;
  }
  return out;
}

/// Row order of the explicit three-detector element list.
inline std::vector<BasisState> tripartite_list_states() {
  std::vector<BasisState> out;
  for (const char* l : {"+++", "++-", "+-+", "-++", "+--", "-+-", "--+", "---"}) {
    out.push_back(parse_state_label(l));
  }
  return out;
}

struct DensityMatrix {
  int n_qubits = 0;
  std::vector<BasisState> states;
  CMatrix entries;

  std::size_t dim() const { return states.size(); }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (BasisState s : states) out.push_back(state_label(s, n_qubits));
    return out;
  }

  std::size_t index_of(BasisState s) const {
    auto it = std::find(states.begin(), states.end(), s);
    if (it == states.end()) throw DomainError("basis state not present");
    return static_cast<std::size_t>(it - states.begin());
  }

  /// Same operator expressed in another ordering of the same basis.
  DensityMatrix reordered(const std::vector<BasisState>& order) const {
    if (order.size() != states.size()) throw DomainError("reorder: wrong number of states");
    std::vector<std::size_t> idx(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) idx[k] = index_of(order[k]);
    DensityMatrix out{n_qubits, order, CMatrix(dim(), dim())};
    for (std::size_t r = 0; r < dim(); ++r) {
      for (std::size_t c = 0; c < dim(); ++c) {
        out.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            entries(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c]));
      }
    }
    return out;
  }

  DensityMatrix canonical() const { return reordered(canonical_states(n_qubits)); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["dim"] = dim();
    j["basis_labels"] = labels();
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < entries.rows(); ++r) {
      for (Eigen::Index c = 0; c < entries.cols(); ++c) {
        rows.push_back({entries(r, c).real(), entries(r, c).imag()});
      }
    }
    j["entries"] = rows;
    return j;
  }

  static DensityMatrix from_json(const nlohmann::json& j) {
    DensityMatrix out;
    const auto labels = j.at("basis_labels").get<std::vector<std::string>>();
    const std::size_t dim = j.at("dim").get<std::size_t>();
    if (labels.size() != dim || dim == 0) throw DomainError("density matrix JSON: label count must equal dim");
    out.n_qubits = static_cast<int>(labels.front().size());
    if ((std::size_t{1} << out.n_qubits) != dim) throw DomainError("density matrix JSON: dim must be 2^N");
    for (const auto& l : labels) out.states.push_back(parse_state_label(l));
    const auto& e = j.at("entries");
    if (e.size() != dim * dim) throw DomainError("density matrix JSON: expected dim^2 entries");
    out.entries.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim * dim; ++k) {
      out.entries(static_cast<Eigen::Index>(k / dim), static_cast<Eigen::Index>(k % dim)) =
          cplx(e[k].at(0).get<double>(), e[k].at(1).get<double>());
    }
    return out;
  }
};

// ---- diagnostics ----------------------------------------------------------

inline double hermiticity_error(const CMatrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

inline cplx matrix_trace(const CMatrix& m) { return m.trace(); }

inline double purity(const CMatrix& m) { return (m * m).trace().real(); }

/// Eigenvalues of the Hermitian part, ascending.
inline Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenError("Hermitian eigensolver did not converge");
  return es.eigenvalues();
}

inline double min_eigenvalue(const CMatrix& m) { return hermitian_eigenvalues(m).minCoeff(); }

struct BuildOptions {
  bool check_psd = true;
  double psd_tolerance = 1e-9;
};

namespace detail {

inline void check_positivity(const DensityMatrix& rho, const BuildOptions& opt, const char* who) {
  if (!rho.entries.allFinite()) throw NonFiniteError(std::string(who) + ": non-finite matrix entry");
  if (!opt.check_psd) return;
  const CMatrix h = 0.5 * (rho.entries + rho.entries.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw EigenError(std::string(who) + ": eigensolver did not converge");
  const double lmin = es.eigenvalues()(0);
  if (lmin >= -opt.psd_tolerance) return;
  // name the basis states carrying the negative direction
  const Eigen::VectorXcd v = es.eigenvectors().col(0);
  std::vector<std::pair<double, std::size_t>> weight;
  for (Eigen::Index k = 0; k < v.size(); ++k) weight.emplace_back(std::norm(v(k)), static_cast<std::size_t>(k));
  std::sort(weight.rbegin(), weight.rend());
  std::ostringstream os;
  os << who << ": assembled matrix is not positive semidefinite (min eigenvalue " << lmin
     << "); offending entries involve";
  const auto labels = rho.labels();
  for (std::size_t k = 0; k < std::min<std::size_t>(4, weight.size()); ++k) {
    if (weight[k].first < 1e-6) break;
    os << " |" << labels[weight[k].second] << ">";
  }
  throw ModelConsistencyError(os.str());
}

inline void require_kernel_shape(const KernelSet& ks, std::size_t N) {
  if (ks.gamma.size() != N || ks.vartheta.size() != N || ks.xi.size() != N) {
    throw DomainError("kernel set does not match the number of detectors");
  }
}

}  // namespace detail

/// Element (r, s) = 2^-N exp[i t (s-r).Delta] exp[i sum_{i<j} (s_i s_j - r_i r_j) vartheta_ij / 2]
///                  exp[-sum_j c_j^2 Gamma_j / 4 - sum_{i<j} c_i c_j Xi_ij / 4],  c = s - r.
inline DensityMatrix build_general(const KernelSet& ks, const ModelParams& p, const BuildOptions& opt = {}) {
  const std::size_t N = p.size();
  if (N < 1 || N > 6) throw DomainError("build_general: supports 1 <= N <= 6 detectors");
  detail::require_kernel_shape(ks, N);
  const int nq = static_cast<int>(N);
  DensityMatrix rho{nq, canonical_states(nq), {}};
  const std::size_t dim = rho.dim();
  rho.entries.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const double norm = 1.0 / static_cast<double>(dim);
  const double t = ks.t_tilde;
  for (std::size_t a = 0; a < dim; ++a) {
    const BasisState r = rho.states[a];
    rho.entries(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = norm;
    for (std::size_t b = a + 1; b < dim; ++b) {
      const BasisState s = rho.states[b];
      double phase = 0.0;
      double decay = 0.0;
      for (int j = 0; j < nq; ++j) {
        const int cj = sign_of(s, j) - sign_of(r, j);
        phase += t * cj * p.detectors[static_cast<std::size_t>(j)].delta_tilde;
        decay += 0.25 * cj * cj * ks.gamma[static_cast<std::size_t>(j)];
        for (int i = 0; i < j; ++i) {
          const int ci = sign_of(s, i) - sign_of(r, i);
          const int dss = sign_of(s, i) * sign_of(s, j) - sign_of(r, i) * sign_of(r, j);
          phase += 0.5 * dss * ks.vartheta[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          decay += 0.25 * ci * cj * ks.xi[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
      }
      const cplx v = norm * std::exp(-decay) * cplx(std::cos(phase), std::sin(phase));
      rho.entries(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      rho.entries(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = std::conj(v);
    }
  }
  detail::check_positivity(rho, opt, "build_general");
  return rho;
}

/// Two detectors, basis {++, +-, -+, --}, transcribed element by element.
inline DensityMatrix build_bipartite(const KernelSet& ks, const ModelParams& p, const BuildOptions& opt = {}) {
  if (p.size() != 2) throw DomainError("build_bipartite: needs exactly two detectors");
  detail::require_kernel_shape(ks, 2);
  const double t = ks.t_tilde;
  const double dA = p.detectors[0].delta_tilde, dB = p.detectors[1].delta_tilde;
  // omega_0 factors are kept as exponents so e^{+Xi} never meets an underflowed e^{-Gamma}
  const double gA = ks.gamma[0], gB = ks.gamma[1];
  const double th = ks.vartheta[0][1], X = ks.xi[0][1];
  const cplx I(0.0, 1.0);
  CMatrix m(4, 4);
  m.setZero();
  m(0, 1) = std::exp(-2.0 * I * t * dB) * std::exp(-I * th) * std::exp(-gB);
  m(0, 2) = std::exp(-2.0 * I * t * dA) * std::exp(-I * th) * std::exp(-gA);
  m(0, 3) = std::exp(-2.0 * I * t * (dA + dB)) * std::exp(-X - gA - gB);
  m(1, 2) = std::exp(-2.0 * I * t * (dA - dB)) * std::exp(X - gA - gB);
  m(1, 3) = std::exp(-2.0 * I * t * dA) * std::exp(I * th) * std::exp(-gA);
  m(2, 3) = std::exp(-2.0 * I * t * dB) * std::exp(I * th) * std::exp(-gB);
  for (int r = 0; r < 4; ++r) {
    m(r, r) = 1.0;
    for (int c = r + 1; c < 4; ++c) m(c, r) = std::conj(m(r, c));
  }
  DensityMatrix rho{2, canonical_states(2), m / 4.0};
  detail::check_positivity(rho, opt, "build_bipartite");
  return rho;
}

namespace detail {

// One upper-triangle element of the three-detector list. Pair order in the
// arrays is (AB, BC, CA); detectors are (A, B, C).
struct TriElement {
  int row, col;                // 1-based, list basis order
  std::array<int, 3> delta;    // coefficients of -2 i t Delta_j
  std::array<int, 3> vartheta; // coefficients of i vartheta_pair, as printed
  std::array<int, 3> xi;       // exponent signs of Xi_pair
  std::array<bool, 3> gamma;   // which omega_0 factors appear
};

inline constexpr TriElement kTriList[] = {
    {1, 2, {0, 0, 1}, {0, 1, 1}, {0, 0, 0}, {false, false, true}},
    {1, 3, {0, 1, 0}, {1, 1, 0}, {0, 0, 0}, {false, true, false}},
    {1, 4, {1, 0, 0}, {1, 0, 1}, {0, 0, 0}, {true, false, false}},
    {1, 5, {0, 1, 1}, {1, 0, 1}, {0, -1, 0}, {false, true, true}},
    {1, 6, {1, 0, 1}, {1, 1, 0}, {0, 0, -1}, {true, false, true}},
    {1, 7, {1, 1, 0}, {0, 1, 1}, {-1, 0, 0}, {true, true, false}},
    {1, 8, {1, 1, 1}, {0, 0, 0}, {-1, -1, -1}, {true, true, true}},
    {2, 3, {0, 1, -1}, {1, 0, -1}, {0, 1, 0}, {false, true, true}},
    {2, 4, {1, 0, -1}, {1, -1, 0}, {0, 0, 1}, {true, false, true}},
    {2, 5, {0, 1, 0}, {1, -1, 0}, {0, 0, 0}, {false, true, false}},
    {2, 6, {1, 0, 0}, {1, 0, -1}, {0, 0, 0}, {true, false, false}},
    {2, 7, {1, 1, -1}, {0, 0, 0}, {-1, 1, 1}, {true, true, true}},
    {2, 8, {1, 1, 0}, {0, -1, -1}, {-1, 0, 0}, {true, true, false}},
    {3, 4, {1, -1, 0}, {0, -1, 1}, {1, 0, 0}, {true, true, false}},
    {3, 5, {0, 0, 1}, {0, -1, 1}, {0, 0, 0}, {false, false, true}},
    {3, 6, {1, -1, 1}, {0, 0, 0}, {1, 1, -1}, {true, true, true}},
    {3, 7, {1, 0, 0}, {-1, 0, 1}, {0, 0, 0}, {true, false, false}},
    {3, 8, {1, 0, 1}, {-1, -1, 0}, {0, 0, -1}, {true, false, true}},
    {4, 5, {-1, 1, 1}, {0, 0, 0}, {1, -1, 1}, {true, true, true}},
    {4, 6, {0, 0, 1}, {0, 1, -1}, {0, 0, 0}, {false, false, true}},
    {4, 7, {0, 1, 0}, {-1, 1, 0}, {0, 0, 0}, {false, true, false}},
    {4, 8, {0, 1, 1}, {-1, 0, -1}, {0, -1, 0}, {false, true, true}},
    {5, 6, {1, -1, 0}, {0, 1, -1}, {1, 0, 0}, {true, true, false}},
    {5, 7, {1, 0, -1}, {-1, 1, 0}, {0, 0, 1}, {true, false, true}},
    {5, 8, {1, 0, 0}, {-1, 0, -1}, {0, 0, 0}, {true, false, false}},
    {6, 7, {0, 1, -1}, {-1, 0, 1}, {0, 1, 0}, {false, true, true}},
    {6, 8, {0, 1, 0}, {-1, -1, 0}, {0, 0, 0}, {false, true, false}},
    {7, 8, {0, 0, 1}, {0, -1, -1}, {0, 0, 0}, {false, false, true}},
};

}  // namespace detail

/// Sign applied to every vartheta phase of the three-detector list so that
/// it agrees with the general construction and with the two-detector list.
inline constexpr int kTriListVarthetaSign = -1;

/// Three detectors on an equilateral triangle of side L, basis
/// {+++, ++-, +-+, -++, +--, -+-, --+, ---}, transcribed element by element.
inline DensityMatrix build_tripartite_equilateral(const KernelSet& ks, const ModelParams& p, double L,
                                                  const BuildOptions& opt = {},
                                                  int vartheta_sign = kTriListVarthetaSign) {
  if (p.size() != 3) throw DomainError("build_tripartite_equilateral: needs exactly three detectors");
  if (!(L > 0.0)) throw DomainError("build_tripartite_equilateral: side length must be positive");
  for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{2, 0}}) {
    if (std::fabs(p.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) - L) > 1e-9 * L) {
      throw DomainError("build_tripartite_equilateral: detectors are not on an equilateral triangle of side L");
    }
  }
  detail::require_kernel_shape(ks, 3);
  const double t = ks.t_tilde;
  const std::array<double, 3> delta{p.detectors[0].delta_tilde, p.detectors[1].delta_tilde,
                                    p.detectors[2].delta_tilde};
  const std::array<double, 3> g{ks.gamma[0], ks.gamma[1], ks.gamma[2]};
  const std::array<double, 3> th{ks.vartheta[0][1], ks.vartheta[1][2], ks.vartheta[2][0]};
  const std::array<double, 3> X{ks.xi[0][1], ks.xi[1][2], ks.xi[2][0]};
  CMatrix m = CMatrix::Identity(8, 8);
  for (const auto& e : detail::kTriList) {
    double phase = 0.0, log_mag = 0.0;
    for (int k = 0; k < 3; ++k) {
      phase += -2.0 * t * e.delta[k] * delta[k];
      phase += vartheta_sign * e.vartheta[k] * th[k];
      log_mag += e.xi[k] * X[k];
      if (e.gamma[k]) log_mag -= g[k];
    }
    const cplx v = std::exp(log_mag) * cplx(std::cos(phase), std::sin(phase));
    m(e.row - 1, e.col - 1) = v;
    m(e.col - 1, e.row - 1) = std::conj(v);
  }
  DensityMatrix rho{3, tripartite_list_states(), m / 8.0};
  detail::check_positivity(rho, opt, "build_tripartite_equilateral");
  return rho;
}

// ---- convenience wrappers evaluating the kernels first ----------------------

inline DensityMatrix build_general(double t, const ModelParams& p, const KernelEngine& eng,
                                   const BuildOptions& opt = {}) {
  p.validate();
  return build_general(eng.kernel_set(t, p), p, opt);
}

inline DensityMatrix build_bipartite(double t, const ModelParams& p, const KernelEngine& eng,
                                     const BuildOptions& opt = {}) {
  p.validate();
  return build_bipartite(eng.kernel_set(t, p), p, opt);
}

inline DensityMatrix build_tripartite_equilateral(double t, double L, const ModelParams& p,
                                                  const KernelEngine& eng, const BuildOptions& opt = {}) {
  p.validate();
  return build_tripartite_equilateral(eng.kernel_set_equilateral(t, p, L), p, L, opt);
}

/// Local phase unitary diag(e^{-i t Delta_j}, e^{+i t Delta_j}) on each detector, canonical order.
inline CMatrix local_phase_unitary(double t, const ModelParams& p) {
  const int nq = static_cast<int>(p.size());
  const auto states = canonical_states(nq);
  CMatrix U = CMatrix::Zero(static_cast<Eigen::Index>(states.size()), static_cast<Eigen::Index>(states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) {
    double ph = 0.0;
    for (int j = 0; j < nq; ++j) ph -= t * p.detectors[static_cast<std::size_t>(j)].delta_tilde * sign_of(states[k], j);
    U(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = cplx(std::cos(ph), std::sin(ph));
  }
  return U;
}

}  // namespace rsb

#endif  // RSB_DMATRIX_HPP
