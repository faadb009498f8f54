#ifndef RSB_SWEEP_HPP
#define RSB_SWEEP_HPP

// (t, L) parameter grids, slices and zero-contour extraction, plus CSV and
// PPM writers. Cells are independent; workers pull cell indices from a
// shared atomic counter and write disjoint slots of the result array.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "rsb/dmatrix.hpp"
#include "rsb/entangle.hpp"
#include "rsb/error.hpp"
#include "rsb/kernels.hpp"
#include "rsb/model.hpp"
#include "rsb/palette.hpp"

namespace rsb {

enum class AxisSpacing { Linear, Log };

inline const char* to_string(AxisSpacing s) { return s == AxisSpacing::Log ? "log" : "linear"; }

struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  std::size_t points = 1;
  AxisSpacing spacing = AxisSpacing::Linear;

  bool operator==(const AxisSpec&) const = default;

  void validate(const std::string& name) const {
    if (!std::isfinite(min) || !std::isfinite(max)) throw DomainError(name + ": bounds must be finite");
    if (points == 0) throw DomainError(name + ": needs at least one point");
    if (points > 1 && !(max > min)) throw DomainError(name + ": max must exceed min");
    if (points == 1 && max != min) throw DomainError(name + ": a single-point axis needs min == max");
    if (spacing == AxisSpacing::Log && !(min > 0.0)) throw DomainError(name + ": log spacing needs min > 0");
  }

  /// Sample points; endpoints are exact.
  std::vector<double> values() const {
    validate("axis");
    std::vector<double> v(points);
    if (points == 1) {
      v[0] = min;
      return v;
    }
    const double last = static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
      const double f = static_cast<double>(i) / last;
      v[i] = spacing == AxisSpacing::Log ? std::exp(std::log(min) + f * (std::log(max) - std::log(min)))
                                         : min + f * (max - min);
    }
    v.front() = min;
    v.back() = max;
    return v;
  }
};

enum class MapKind { Bipartite, Tripartite };

inline const char* to_string(MapKind k) { return k == MapKind::Tripartite ? "tripartite" : "bipartite"; }

struct SweepSpec {
  MapKind kind = MapKind::Bipartite;
  int n = 3;
  double m_tilde = 1e-11;
  std::vector<double> lambdas{0.01, 0.01};  // one per detector
  std::vector<double> deltas{0.0, 0.0};
  AxisSpec L_axis;
  AxisSpec t_axis;
  quad::Options quad;
  EntanglementThresholds thresholds;
  double edge_radius = 1.75;
  double psd_tolerance = 1e-9;
  unsigned threads = 0;  // 0 picks the hardware concurrency
  double max_failed_fraction = 0.01;

  std::size_t detectors() const { return kind == MapKind::Tripartite ? 3 : 2; }

  void validate() const {
    if (n < 2 || n > 5) throw DomainError("unsupported dimension n = " + std::to_string(n));
    if (!(m_tilde >= 0.0) || !std::isfinite(m_tilde)) throw DomainError("m_tilde must be finite and >= 0");
    if (lambdas.size() != detectors()) throw DomainError("lambda_tilde needs one entry per detector");
    if (deltas.size() != detectors()) throw DomainError("delta_tilde needs one entry per detector");
    for (double l : lambdas) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw DomainError("lambda_tilde must be finite and >= 0");
    }
    L_axis.validate("L axis");
    t_axis.validate("t axis");
    if (!(L_axis.min > 0.0)) throw DomainError("L axis: separations must be > 0");
    if (t_axis.min < 0.0) throw DomainError("t axis: times must be >= 0");
    if (!(edge_radius >= 0.0)) throw DomainError("edge_radius must be >= 0");
    if (!(max_failed_fraction >= 0.0 && max_failed_fraction <= 1.0)) {
      throw DomainError("max_failed_fraction must lie in [0, 1]");
    }
  }

  ModelParams model(double L) const {
    if (kind == MapKind::Tripartite) {
      return make_equilateral_model(n, m_tilde, {lambdas[0], lambdas[1], lambdas[2]}, L,
                                    {deltas[0], deltas[1], deltas[2]});
    }
    return make_pair_model(n, m_tilde, lambdas[0], lambdas[1], L, deltas[0], deltas[1]);
  }

  double lightcone(double L) const { return L - 2.0 * edge_radius; }
};

struct CellResult {
  double L = 0.0;
  double t = 0.0;
  std::string status = "ok";
  std::string message;
  double negativity = 0.0;  // A|B; in three-detector maps this is the reduced pair
  double gamma_A = 0.0;
  double gamma_B = 0.0;
  double vartheta = 0.0;  // AB pair
  double xi = 0.0;
  std::uint64_t n_evals = 0;
  double max_rel_error = 0.0;
  std::optional<EntanglementReport> report;

  bool ok() const { return status == "ok"; }
  /// Plotted quantity: negativity, or the clamped pi-tangle for three detectors.
  double value() const { return report ? report->pi_tangle_clamped : negativity; }
};

struct SweepMeta {
  double wall_seconds = 0.0;
  std::uint64_t total_evals = 0;
  double max_rel_error = 0.0;
  std::size_t failed = 0;
  unsigned threads = 1;
  CacheStats cache;
};

struct SweepGrid {
  SweepSpec spec;
  std::vector<double> t_axis;
  std::vector<double> L_axis;
  std::vector<CellResult> cells;  // row-major, index it * L_axis.size() + iL
  SweepMeta meta;

  const CellResult& at(std::size_t it, std::size_t iL) const { return cells.at(it * L_axis.size() + iL); }
  double value(std::size_t it, std::size_t iL) const { return at(it, iL).value(); }
  bool partial() const {
    return !cells.empty() &&
           static_cast<double>(meta.failed) > spec.max_failed_fraction * static_cast<double>(cells.size());
  }
};

inline std::string error_status(const std::exception& e) {
  if (dynamic_cast<const AccuracyError*>(&e)) return "accuracy_error";
  if (dynamic_cast<const NonFiniteError*>(&e)) return "nonfinite";
  if (dynamic_cast<const EigenError*>(&e)) return "eigen_error";
  if (dynamic_cast<const ModelConsistencyError*>(&e)) return "model_error";
  if (dynamic_cast<const DomainError*>(&e)) return "domain_error";
  return "error";
}

/// One grid cell. Numerical failures are recorded in the cell, not thrown.
inline CellResult evaluate_cell(const SweepSpec& spec, const KernelEngine& eng, double L, double t) {
  CellResult c;
  c.L = L;
  c.t = t;
  try {
    const ModelParams p = spec.model(L);
    BuildOptions bo;
    bo.psd_tolerance = spec.psd_tolerance;
    if (spec.kind == MapKind::Tripartite) {
      const KernelSet ks = eng.kernel_set_equilateral(t, p, L);
      const DensityMatrix rho = build_tripartite_equilateral(ks, p, L, bo);
      c.report = pi_tangle(rho, spec.thresholds);
      c.negativity = c.report->at("A|B");
      c.gamma_A = ks.gamma[0];
      c.gamma_B = ks.gamma[1];
      c.vartheta = ks.vartheta[0][1];
      c.xi = ks.xi[0][1];
      c.n_evals = ks.n_evals;
      c.max_rel_error = ks.max_rel_error;
    } else {
      const KernelSet ks = eng.kernel_set(t, p);
      const DensityMatrix rho = build_bipartite(ks, p, bo);
      c.negativity = bipartite_negativity(rho);
      c.gamma_A = ks.gamma[0];
      c.gamma_B = ks.gamma[1];
      c.vartheta = ks.vartheta[0][1];
      c.xi = ks.xi[0][1];
      c.n_evals = ks.n_evals;
      c.max_rel_error = ks.max_rel_error;
    }
  } catch (const Error& e) {
    c.status = error_status(e);
    c.message = e.what();
  }
  return c;
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(count, 1)));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline SweepGrid run_map(const SweepSpec& spec, const KernelEngine& eng) {
  spec.validate();
  SweepGrid g;
  g.spec = spec;
  g.t_axis = spec.t_axis.values();
  g.L_axis = spec.L_axis.values();
  const std::size_t nL = g.L_axis.size();
  g.cells.resize(g.t_axis.size() * nL);
  g.meta.threads = resolve_threads(spec.threads);
  const auto start = std::chrono::steady_clock::now();
  parallel_for(g.cells.size(), g.meta.threads, [&](std::size_t idx) {
    g.cells[idx] = evaluate_cell(spec, eng, g.L_axis[idx % nL], g.t_axis[idx / nL]);
  });
  g.meta.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& c : g.cells) {
    g.meta.total_evals += c.n_evals;
    g.meta.max_rel_error = std::max(g.meta.max_rel_error, c.max_rel_error);
    if (!c.ok()) ++g.meta.failed;
  }
  if (eng.cache()) g.meta.cache = eng.cache()->stats();
  return g;
}

inline SweepGrid run_bipartite_map(SweepSpec spec, const KernelEngine& eng) {
  spec.kind = MapKind::Bipartite;
  return run_map(spec, eng);
}

inline SweepGrid run_tripartite_map(SweepSpec spec, const KernelEngine& eng) {
  spec.kind = MapKind::Tripartite;
  return run_map(spec, eng);
}

struct SliceResult {
  SweepGrid grid;  // a single L column
  double max_value = 0.0;
  double argmax_t = 0.0;
};

/// Time trace at the single separation of spec.L_axis.
inline SliceResult run_slice(const SweepSpec& spec, const KernelEngine& eng) {
  if (spec.L_axis.points != 1) throw DomainError("slice: the L axis must have exactly one point");
  SliceResult s;
  s.grid = run_map(spec, eng);
  bool any = false;
  for (const auto& c : s.grid.cells) {
    if (!c.ok()) continue;
    if (!any || c.value() > s.max_value) {
      s.max_value = c.value();
      s.argmax_t = c.t;
      any = true;
    }
  }
  return s;
}

struct ConePoint {
  double L = 0.0;
  double t_star = 0.0;  // earliest time known to exceed epsilon
  double t_lo = 0.0;    // latest time known not to exceed it (t_star when the first row already does)
};

struct ConeContour {
  std::vector<ConePoint> points;
  std::vector<double> non_crossing;  // L columns that never exceed epsilon
  double epsilon = 0.0;
  double edge_radius = 1.75;

  bool empty() const { return points.empty(); }
  double lightcone(double L) const { return L - 2.0 * edge_radius; }
};

/// Evaluates the plotted quantity at (L, t); used to refine contour brackets.
using CellProbe = std::function<double(double L, double t)>;

inline CellProbe make_probe(const SweepSpec& spec, const KernelEngine& eng) {
  return [spec, &eng](double L, double t) {
    const CellResult c = evaluate_cell(spec, eng, L, t);
    if (!c.ok()) throw NumericalError("contour refinement failed at L = " + std::to_string(L) + ", t = " +
                                      std::to_string(t) + ": " + c.message);
    return c.value();
  };
}

/// First crossing of `epsilon` along t in each L column, with one bisection
/// step between neighbouring rows when a probe is supplied. Failed cells end
/// the search in their column.
inline ConeContour extract_cone(const SweepGrid& g, double epsilon, const CellProbe& probe = nullptr) {
  if (!(epsilon >= 0.0)) throw DomainError("extract_cone: epsilon must be >= 0");
  ConeContour out;
  out.epsilon = epsilon;
  out.edge_radius = g.spec.edge_radius;
  const bool log_t = g.spec.t_axis.spacing == AxisSpacing::Log;
  for (std::size_t iL = 0; iL < g.L_axis.size(); ++iL) {
    std::optional<std::size_t> hit;
    for (std::size_t it = 0; it < g.t_axis.size(); ++it) {
      const CellResult& c = g.at(it, iL);
      if (!c.ok()) break;
      if (c.value() > epsilon) {
        hit = it;
        break;
      }
    }
    if (!hit) {
      out.non_crossing.push_back(g.L_axis[iL]);
      continue;
    }
    ConePoint pt;
    pt.L = g.L_axis[iL];
    pt.t_star = g.t_axis[*hit];
    pt.t_lo = *hit == 0 ? pt.t_star : g.t_axis[*hit - 1];
    if (probe && *hit > 0) {
      const double mid = log_t && pt.t_lo > 0.0 ? std::sqrt(pt.t_lo * pt.t_star) : 0.5 * (pt.t_lo + pt.t_star);
      if (probe(pt.L, mid) > epsilon) {
        pt.t_star = mid;
      } else {
        pt.t_lo = mid;
      }
    }
    out.points.push_back(pt);
  }
  return out;
}

// ---- output -----------------------------------------------------------------

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_grid_csv(const SweepGrid& g, std::ostream& os) {
  const bool tri = g.spec.kind == MapKind::Tripartite;
  os << "L_over_sigma,t_over_sigma,negativity,kernel_gamma_A,kernel_gamma_B,vartheta,xi,n_evals,status";
  if (tri) os << ",neg_A_BC,neg_B_CA,neg_C_AB,neg_AB,neg_BC,neg_CA,pi_raw,pi_clamped,ghz_type";
  os << "\n";
  for (std::size_t iL = 0; iL < g.L_axis.size(); ++iL) {
    for (std::size_t it = 0; it < g.t_axis.size(); ++it) {
      const CellResult& c = g.at(it, iL);
      os << fmt_g17(c.L) << ',' << fmt_g17(c.t) << ',';
      if (c.ok()) {
        os << fmt_g17(c.negativity) << ',' << fmt_g17(c.gamma_A) << ',' << fmt_g17(c.gamma_B) << ','
           << fmt_g17(c.vartheta) << ',' << fmt_g17(c.xi);
      } else {
        os << "nan,nan,nan,nan,nan";
      }
      os << ',' << c.n_evals << ',' << c.status;
      if (tri) {
        if (c.report) {
          const auto& r = *c.report;
          for (const char* k : {"A|BC", "B|CA", "C|AB", "A|B", "B|C", "C|A"}) os << ',' << fmt_g17(r.at(k));
          os << ',' << fmt_g17(r.pi_tangle_raw) << ',' << fmt_g17(r.pi_tangle_clamped) << ','
             << (r.ghz_type ? 1 : 0);
        } else {
          os << ",nan,nan,nan,nan,nan,nan,nan,nan,0";
        }
      }
      os << "\n";
    }
  }
}

inline void write_cone_csv(const ConeContour& c, std::ostream& os) {
  os << "L_over_sigma,t_star_over_sigma\n";
  for (const auto& p : c.points) os << fmt_g17(p.L) << ',' << fmt_g17(p.t_star) << "\n";
}

struct HeatmapOptions {
  int cell_pixels = 6;
  double zero_threshold = 1e-9;  // cells at or below this are painted green
  bool lightcone_overlay = true;
};

namespace detail {

inline void put_pixel(std::vector<std::uint8_t>& img, int W, int x, int y, const std::array<std::uint8_t, 3>& c) {
  const std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(W) + static_cast<std::size_t>(x)) * 3;
  img[o] = c[0];
  img[o + 1] = c[1];
  img[o + 2] = c[2];
}

inline void write_ppm(std::ostream& os, int W, int H, const std::vector<std::uint8_t>& img) {
  os << "P6\n" << W << ' ' << H << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

}  // namespace detail

/// Binary PPM heat map: L runs left to right, t bottom to top. Colour scale is
/// linear from 0 to the grid maximum; failed cells are red.
inline void write_heatmap_ppm(const SweepGrid& g, std::ostream& os, const HeatmapOptions& opt = {}) {
  const int px = std::max(1, opt.cell_pixels);
  const int nL = static_cast<int>(g.L_axis.size());
  const int nt = static_cast<int>(g.t_axis.size());
  const int W = nL * px, H = nt * px;
  std::vector<std::uint8_t> img(static_cast<std::size_t>(W) * static_cast<std::size_t>(H) * 3, 0);
  double vmax = 0.0;
  for (const auto& c : g.cells) {
    if (c.ok()) vmax = std::max(vmax, c.value());
  }
  constexpr std::array<std::uint8_t, 3> kGreen{0, 190, 60}, kRed{220, 30, 30}, kWhite{255, 255, 255};
  for (int it = 0; it < nt; ++it) {
    for (int iL = 0; iL < nL; ++iL) {
      const CellResult& c = g.at(static_cast<std::size_t>(it), static_cast<std::size_t>(iL));
      std::array<std::uint8_t, 3> col;
      if (!c.ok()) {
        col = kRed;
      } else if (c.value() <= opt.zero_threshold) {
        col = kGreen;
      } else {
        const double f = vmax > 0.0 ? std::clamp(c.value() / vmax, 0.0, 1.0) : 0.0;
        col = kViridis[static_cast<std::size_t>(std::lround(f * 255.0))];
      }
      const int y0 = (nt - 1 - it) * px;
      for (int dy = 0; dy < px; ++dy) {
        for (int dx = 0; dx < px; ++dx) detail::put_pixel(img, W, iL * px + dx, y0 + dy, col);
      }
    }
  }
  if (opt.lightcone_overlay && nt > 1) {
    // mark, in each column, the row closest to the light-cone time
    for (int iL = 0; iL < nL; ++iL) {
      const double tc = g.spec.lightcone(g.L_axis[static_cast<std::size_t>(iL)]);
      if (tc < g.t_axis.front() || tc > g.t_axis.back()) continue;
      const auto it = std::lower_bound(g.t_axis.begin(), g.t_axis.end(), tc) - g.t_axis.begin();
      const int row = static_cast<int>(it);
      const int y = (nt - 1 - row) * px + px / 2;
      for (int dx = 0; dx < px; dx += 2) detail::put_pixel(img, W, iL * px + dx, y, kWhite);
    }
  }
  detail::write_ppm(os, W, H, img);
}

/// Binary PPM line plot of a slice: sample index left to right, value bottom to top.
inline void write_line_ppm(const SliceResult& s, std::ostream& os, int width = 640, int height = 360) {
  const auto& cells = s.grid.cells;
  std::vector<std::uint8_t> img(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, 255);
  constexpr std::array<std::uint8_t, 3> kAxis{120, 120, 120};
  const auto line = kViridis[64];
  for (int x = 0; x < width; ++x) detail::put_pixel(img, width, x, height - 1, kAxis);
  for (int y = 0; y < height; ++y) detail::put_pixel(img, width, 0, y, kAxis);
  const double vmax = s.max_value > 0.0 ? s.max_value : 1.0;
  auto ypix = [&](double v) {
    return std::clamp(static_cast<int>(std::lround((1.0 - v / vmax) * (height - 2))), 0, height - 1);
  };
  const std::size_t n = cells.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!cells[i].ok() || !cells[i + 1].ok()) continue;
    const int x0 = static_cast<int>(std::lround(static_cast<double>(i) * (width - 1) / std::max<std::size_t>(n - 1, 1)));
    const int x1 =
        static_cast<int>(std::lround(static_cast<double>(i + 1) * (width - 1) / std::max<std::size_t>(n - 1, 1)));
    const int y0 = ypix(cells[i].value()), y1 = ypix(cells[i + 1].value());
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int k = 0; k <= steps; ++k) {
      const int x = x0 + (x1 - x0) * k / steps;
      const int y = y0 + (y1 - y0) * k / steps;
      detail::put_pixel(img, width, x, y, line);
    }
  }
  detail::write_ppm(os, width, height, img);
}

}  // namespace rsb

#endif  // RSB_SWEEP_HPP
