#ifndef RSB_MODEL_HPP
#define RSB_MODEL_HPP

// Dimensionless model configuration: lengths in units of the smearing width
// sigma, so m_tilde = m*sigma, delta_tilde = Delta*sigma, and the coupling is
// lambda_tilde = lambda * sigma^{-(n-3)/2}.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "rsb/error.hpp"

namespace rsb {

struct Detector {
  double lambda_tilde = 0.0;
  double delta_tilde = 0.0;
  std::vector<double> position;  // n components
};

struct ModelParams {
  int n = 3;
  double m_tilde = 1e-11;
  std::vector<Detector> detectors;

  std::size_t size() const { return detectors.size(); }

  double distance(std::size_t i, std::size_t j) const {
    const auto& a = detectors.at(i).position;
    const auto& b = detectors.at(j).position;
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return std::sqrt(s);
  }

  void validate() const {
    if (n < 2 || n > 5) {
      throw DomainError("unsupported dimension n = " + std::to_string(n) + " (supported: 2..5)");
    }
    if (!(m_tilde >= 0.0) || !std::isfinite(m_tilde)) throw DomainError("m_tilde must be finite and >= 0");
    for (std::size_t j = 0; j < detectors.size(); ++j) {
      const auto& d = detectors[j];
      const std::string tag = "detector " + std::to_string(j) + ": ";
      if (!(d.lambda_tilde >= 0.0) || !std::isfinite(d.lambda_tilde)) {
        throw DomainError(tag + "lambda_tilde must be finite and >= 0");
      }
      if (!std::isfinite(d.delta_tilde)) throw DomainError(tag + "delta_tilde must be finite");
      if (d.position.size() != static_cast<std::size_t>(n)) {
        throw DomainError(tag + "position must have n components");
      }
      for (double x : d.position) {
        if (!std::isfinite(x)) throw DomainError(tag + "position must be finite");
      }
    }
    for (std::size_t i = 0; i < detectors.size(); ++i) {
      for (std::size_t j = i + 1; j < detectors.size(); ++j) {
        if (distance(i, j) == 0.0) {
          throw DomainError("detectors " + std::to_string(i) + " and " + std::to_string(j) +
                            " share a position");
        }
      }
    }
  }
};

/// Two detectors on the first axis, separated by L.
inline ModelParams make_pair_model(int n, double m_tilde, double lambda_a, double lambda_b, double L,
                                   double delta_a = 0.0, double delta_b = 0.0) {
  ModelParams p;
  p.n = n;
  p.m_tilde = m_tilde;
  std::vector<double> xa(static_cast<std::size_t>(std::max(n, 0)), 0.0);
  std::vector<double> xb = xa;
  if (!xb.empty()) xb[0] = L;
  p.detectors = {{lambda_a, delta_a, xa}, {lambda_b, delta_b, xb}};
  return p;
}

/// Three detectors at the corners of an equilateral triangle of side L in
/// the first two coordinates. Requires n >= 2.
inline ModelParams make_equilateral_model(int n, double m_tilde, const std::vector<double>& lambdas,
                                          double L, const std::vector<double>& deltas = {0.0, 0.0, 0.0}) {
  if (lambdas.size() != 3 || deltas.size() != 3) throw DomainError("equilateral model needs three detectors");
  ModelParams p;
  p.n = n;
  p.m_tilde = m_tilde;
  const std::size_t dim = static_cast<std::size_t>(std::max(n, 0));
  std::vector<double> a(dim, 0.0), b(dim, 0.0), c(dim, 0.0);
  if (dim >= 2) {
    b[0] = L;
    c[0] = 0.5 * L;
    c[1] = 0.5 * std::numbers::sqrt3 * L;
  }
  p.detectors = {{lambdas[0], deltas[0], a}, {lambdas[1], deltas[1], b}, {lambdas[2], deltas[2], c}};
  return p;
}

}  // namespace rsb

#endif  // RSB_MODEL_HPP
