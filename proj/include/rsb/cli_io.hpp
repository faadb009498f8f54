#ifndef RSB_CLI_IO_HPP
#define RSB_CLI_IO_HPP

// Run orchestration behind the command-line tool: output files, manifest,
// kernel-cache persistence, exit codes and the built-in self test.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "rsb/config.hpp"
#include "rsb/dmatrix.hpp"
#include "rsb/entangle.hpp"
#include "rsb/kernel_cache.hpp"
#include "rsb/kernels.hpp"
#include "rsb/specfun.hpp"
#include "rsb/sweep.hpp"

#ifndef RSB_VERSION
#define RSB_VERSION "0.0.0"
#endif

namespace rsb {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitPartial = 4 };

/// Resolves the cache setting: "off", an explicit path, or "auto", which means
/// $RSB_CACHE_DIR/kernels.rsbcache when that variable is set and
/// <output_dir>/kernels.rsbcache otherwise.
inline std::string resolve_cache_path(const RunConfig& c) {
  if (c.cache == "off") return "";
  if (c.cache != "auto") return c.cache;
  if (const char* dir = std::getenv("RSB_CACHE_DIR"); dir && *dir) {
    return (std::filesystem::path(dir) / "kernels.rsbcache").string();
  }
  return (std::filesystem::path(c.output_dir) / "kernels.rsbcache").string();
}

struct RunReport {
  int exit_code = kExitOk;
  nlohmann::json manifest;
  std::vector<std::string> outputs;
};

namespace detail {

inline void ensure_writable_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("/output_dir", "cannot create '" + dir + "': " + ec.message());
  const auto probe = std::filesystem::path(dir) / ".rsb_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("/output_dir", "directory '" + dir + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

template <class Writer>
std::string write_file(const std::string& dir, const std::string& name, Writer&& w, std::vector<std::string>& outs,
                       bool binary = false) {
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw Error("cannot write " + path);
  w(f);
  if (!f) throw Error("write failed for " + path);
  outs.push_back(name);
  return path;
}

inline nlohmann::json failures_json(const SweepGrid& g) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : g.cells) {
    if (c.ok()) continue;
    arr.push_back({{"L", c.L}, {"t", c.t}, {"status", c.status}, {"message", c.message}});
    if (arr.size() >= 50) break;
  }
  return arr;
}

inline nlohmann::json grid_meta_json(const SweepGrid& g) {
  return {{"cells", g.cells.size()},
          {"failed_cells", g.meta.failed},
          {"partial", g.partial()},
          {"threads", g.meta.threads},
          {"grid_wall_seconds", g.meta.wall_seconds},
          {"quadrature_evaluations", g.meta.total_evals},
          {"quad_max_est_rel_error", g.meta.max_rel_error},
          {"failures", failures_json(g)}};
}

}  // namespace detail

// ---- self test ---------------------------------------------------------------

struct SelfTestRow {
  std::string module;
  std::string check;
  bool pass = false;
  std::string detail;
};

/// A fast subset of every module's invariants.
inline std::vector<SelfTestRow> run_self_test() {
  std::vector<SelfTestRow> rows;
  auto add = [&rows](const std::string& mod, const std::string& name, const std::function<std::string(bool&)>& fn) {
    SelfTestRow r{mod, name, false, ""};
    try {
      bool ok = false;
      r.detail = fn(ok);
      r.pass = ok;
    } catch (const std::exception& e) {
      r.detail = std::string("threw: ") + e.what();
    }
    rows.push_back(r);
  };
  auto sci = [](double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
  };

  add("specfun", "0F1~(3/2; -x^2/4) = 2 sin x / (sqrt(pi) x)", [&](bool& ok) {
    double worst = 0.0;
    for (double x = 0.1; x < 40.0; x += 0.37) {
      const double ref = 2.0 * std::sin(x) / (std::sqrt(std::numbers::pi) * x);
      worst = std::max(worst, std::fabs(specfun::hyp0f1_reg(1.5, -x * x / 4) - ref));
    }
    ok = worst < 1e-13;
    return "max abs diff " + sci(worst);
  });
  add("specfun", "series and Bessel routes agree", [&](bool& ok) {
    double worst = 0.0;
    for (double b : {1.0, 2.0, 2.5}) {
      for (double x = 0.5; x < 15.0; x += 0.7) {
        const double z = -x * x / 4;
        worst = std::max(worst, std::fabs(specfun::hyp0f1_reg_series(b, z) - specfun::hyp0f1_reg_bessel(b, z)));
      }
    }
    ok = worst < 1e-10;
    return "max abs diff " + sci(worst);
  });
  add("quad", "Gaussian moment", [&](bool& ok) {
    quad::Integrand f{[](double u) { return u * u * std::exp(-0.5 * u * u); }, {0.0}};
    const auto r = quad::integrate_semiinf(f, 1e-10);
    const double err = std::fabs(r.value - std::sqrt(std::numbers::pi / 2)) / std::sqrt(std::numbers::pi / 2);
    ok = err < 1e-10;
    return "rel err " + sci(err);
  });
  add("kernels", "Xi(L = 0) = 2 Gamma", [&](bool& ok) {
    KernelEngine eng;
    const auto g = eng.gamma_unit(3, 0.1, 7.0);
    const auto pr = eng.pair_unit(3, 0.1, 7.0, 0.0);
    const double err = std::fabs(pr.v1 - 2.0 * g.v0) / (2.0 * g.v0);
    ok = err < 1e-9;
    return "rel err " + sci(err);
  });
  add("kernels", "coupling scaling and symmetry", [&](bool& ok) {
    KernelEngine eng;
    auto p = make_pair_model(3, 1e-11, 0.3, 0.7, 9.0);
    auto q = make_pair_model(3, 1e-11, 0.6, 0.7, 9.0);
    const double a = eng.vartheta(0, 1, 20.0, p), b = eng.vartheta(1, 0, 20.0, p), c = eng.vartheta(0, 1, 20.0, q);
    const double g1 = eng.decay_exponent(0, 20.0, p), g2 = eng.decay_exponent(0, 20.0, q);
    const double err = std::max({std::fabs(a - b), std::fabs(c - 2 * a) / std::fabs(c), std::fabs(g2 - 4 * g1) / g2});
    ok = err < 1e-13;
    return "max deviation " + sci(err);
  });
  add("kernels", "R_2 IR criterion", [&](bool& ok) {
    KernelEngine eng;
    const auto d = eng.r_alpha(2, {1, 1}, make_pair_model(3, 0.0, 0.01, 0.01, 10.0));
    const auto f4 = eng.r_alpha(2, {1, 1}, make_pair_model(4, 0.0, 0.01, 0.01, 10.0));
    const auto fm = eng.r_alpha(2, {1, 1}, make_pair_model(3, 0.1, 0.01, 0.01, 10.0));
    ok = d.divergent && !f4.divergent && !fm.divergent;
    return std::string(d.divergent ? "divergent" : "finite") + " / " + (f4.divergent ? "divergent" : "finite") +
           " / " + (fm.divergent ? "divergent" : "finite");
  });
  add("dmatrix", "Hermitian, unit trace, PSD on random draws", [&](bool& ok) {
    KernelEngine eng;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lam(0.0, 2.0), L(4.0, 40.0), t(0.0, 200.0), lm(-11.0, 0.0);
    double herm = 0.0, tr = 0.0, lmin = 1.0;
    for (int k = 0; k < 24; ++k) {
      const int N = 1 + k % 3;
      ModelParams p;
      p.n = 2 + k % 4;
      p.m_tilde = std::pow(10.0, lm(rng));
      for (int j = 0; j < N; ++j) {
        std::vector<double> pos(static_cast<std::size_t>(p.n), 0.0);
        pos[0] = j * L(rng);
        if (p.n > 1) pos[1] = j * j * 0.5 * L(rng);
        p.detectors.push_back({lam(rng), 0.3 * j, pos});
      }
      const auto rho = build_general(t(rng), p, eng);
      herm = std::max(herm, hermiticity_error(rho.entries));
      tr = std::max(tr, std::abs(matrix_trace(rho.entries) - 1.0));
      lmin = std::min(lmin, min_eigenvalue(rho.entries));
    }
    ok = herm <= 1e-12 && tr <= 1e-12 && lmin >= -1e-9;
    return "herm " + sci(herm) + ", trace " + sci(tr) + ", min eig " + sci(lmin);
  });
  add("dmatrix", "specialized builders match the general one", [&](bool& ok) {
    KernelEngine eng;
    auto p2 = make_pair_model(3, 1e-11, 0.4, 0.9, 8.0, 0.2, -0.5);
    auto p3 = make_equilateral_model(3, 0.1, {0.5, 0.2, 0.8}, 7.0, {0.1, 0.0, -0.3});
    const double d2 = (build_bipartite(30.0, p2, eng).canonical().entries - build_general(30.0, p2, eng).entries)
                          .cwiseAbs()
                          .maxCoeff();
    const double d3 =
        (build_tripartite_equilateral(30.0, 7.0, p3, eng).canonical().entries -
         build_general(eng.kernel_set_equilateral(30.0, p3, 7.0), p3).entries)
            .cwiseAbs()
            .maxCoeff();
    ok = d2 <= 1e-10 && d3 <= 1e-10;
    return "N=2 " + sci(d2) + ", N=3 " + sci(d3);
  });
  add("entangle", "Bell, Werner and GHZ closed forms", [&](bool& ok) {
    CMatrix bell = CMatrix::Zero(4, 4);
    bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
    const double nb = negativity(DensityMatrix{2, canonical_states(2), bell}, {0});
    const double p = 0.8;
    CMatrix werner = p * bell + (1 - p) / 4 * CMatrix::Identity(4, 4);
    const double nw = negativity(DensityMatrix{2, canonical_states(2), werner}, {0});
    CMatrix ghz = CMatrix::Zero(8, 8);
    ghz(0, 0) = ghz(0, 7) = ghz(7, 0) = ghz(7, 7) = 0.5;
    const auto rep = pi_tangle(DensityMatrix{3, canonical_states(3), ghz});
    const double err = std::max({std::fabs(nb - 0.5), std::fabs(nw - (3 * p - 1) / 4), std::fabs(rep.pi_tangle_raw - 0.25)});
    ok = err < 1e-10 && rep.ghz_type;
    return "max deviation " + sci(err);
  });
  add("sweep", "spacelike cells vanish and reruns are identical", [&](bool& ok) {
    KernelEngine eng(quad::Options{}, std::make_shared<KernelCache>());
    SweepSpec s;
    s.L_axis = {8.0, 12.0, 3, AxisSpacing::Linear};
    s.t_axis = {0.5, 3.0, 4, AxisSpacing::Linear};
    s.lambdas = {1.0, 1.0};
    s.threads = 1;
    const auto g1 = run_bipartite_map(s, eng);
    const auto g2 = run_bipartite_map(s, eng);
    std::ostringstream a, b;
    write_grid_csv(g1, a);
    write_grid_csv(g2, b);
    double worst = 0.0;
    for (const auto& c : g1.cells) worst = std::max(worst, c.negativity);
    ok = a.str() == b.str() && worst < 1e-9 && g1.meta.failed == 0;
    return "max spacelike negativity " + sci(worst);
  });
  return rows;
}

inline void print_self_test(const std::vector<SelfTestRow>& rows, std::ostream& os) {
  os << std::left << std::setw(10) << "module" << std::setw(48) << "check" << std::setw(6) << "result"
     << "detail\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << r.module << std::setw(48) << r.check << std::setw(6)
       << (r.pass ? "PASS" : "FAIL") << r.detail << "\n";
  }
}

// ---- run ---------------------------------------------------------------------

/// Executes a validated configuration, writing outputs and manifest.json into
/// the output directory. Numerical failures map to exit codes; config errors
/// propagate as ConfigError.
inline RunReport run(const RunConfig& cfg, std::ostream& log) {
  RunReport rep;
  const auto start = std::chrono::steady_clock::now();
  nlohmann::json results;

  if (cfg.mode == RunMode::Validate) {
    const auto rows = run_self_test();
    print_self_test(rows, log);
    bool all = true;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
      all = all && r.pass;
      arr.push_back({{"module", r.module}, {"check", r.check}, {"pass", r.pass}, {"detail", r.detail}});
    }
    rep.exit_code = all ? kExitOk : kExitNumerical;
    rep.manifest = {{"tool", "rsb_cli"}, {"version", RSB_VERSION}, {"mode", "validate"}, {"self_test", arr}};
    return rep;
  }

  detail::ensure_writable_dir(cfg.output_dir);
  const std::string cache_path = resolve_cache_path(cfg);
  std::shared_ptr<KernelCache> cache = std::make_shared<KernelCache>();
  if (!cache_path.empty()) cache->load(cache_path);
  quad::Options qopt;
  qopt.rel_tol = cfg.quad_rel_tol;
  const KernelEngine eng(qopt, cache);
  const SweepSpec spec = cfg.sweep_spec();
  const bool ppm = cfg.format == "csv+ppm";
  HeatmapOptions hopt;
  hopt.zero_threshold = cfg.neg_zero_threshold;

  try {
    switch (cfg.mode) {
      case RunMode::BipartiteMap:
      case RunMode::TripartiteMap: {
        const SweepGrid g = run_map(spec, eng);
        detail::write_file(cfg.output_dir, "grid.csv", [&](std::ostream& f) { write_grid_csv(g, f); }, rep.outputs);
        if (ppm) {
          detail::write_file(cfg.output_dir, "heatmap.ppm", [&](std::ostream& f) { write_heatmap_ppm(g, f, hopt); },
                             rep.outputs, true);
        }
        results = detail::grid_meta_json(g);
        if (g.partial()) rep.exit_code = kExitPartial;
        if (cfg.mode == RunMode::TripartiteMap) {
          std::size_t ghz = 0;
          double ghz_max = 0.0;
          for (const auto& c : g.cells) {
            if (c.report && c.report->ghz_type) {
              ++ghz;
              ghz_max = std::max(ghz_max, c.report->pi_tangle_clamped);
            }
          }
          results["ghz_type_cells"] = ghz;
          results["ghz_type_max_pi"] = ghz_max;
        }
        break;
      }
      case RunMode::Slice: {
        const SliceResult s = run_slice(spec, eng);
        detail::write_file(cfg.output_dir, "slice.csv", [&](std::ostream& f) { write_grid_csv(s.grid, f); },
                           rep.outputs);
        if (ppm) {
          detail::write_file(cfg.output_dir, "slice.ppm", [&](std::ostream& f) { write_line_ppm(s, f); }, rep.outputs,
                             true);
        }
        results = detail::grid_meta_json(s.grid);
        results["max_value"] = s.max_value;
        results["argmax_t_over_sigma"] = s.argmax_t;
        if (s.grid.partial()) rep.exit_code = kExitPartial;
        break;
      }
      case RunMode::Cone: {
        const SweepGrid g = run_map(spec, eng);
        const ConeContour cone = extract_cone(g, cfg.cone_epsilon, make_probe(spec, eng));
        detail::write_file(cfg.output_dir, "grid.csv", [&](std::ostream& f) { write_grid_csv(g, f); }, rep.outputs);
        detail::write_file(cfg.output_dir, "cone.csv", [&](std::ostream& f) { write_cone_csv(cone, f); },
                           rep.outputs);
        if (ppm) {
          detail::write_file(cfg.output_dir, "heatmap.ppm", [&](std::ostream& f) { write_heatmap_ppm(g, f, hopt); },
                             rep.outputs, true);
        }
        results = detail::grid_meta_json(g);
        results["cone_points"] = cone.points.size();
        results["cone_empty"] = cone.empty();
        results["non_crossing_L"] = cone.non_crossing;
        if (cone.empty()) log << "contour is empty: no column exceeds epsilon = " << cfg.cone_epsilon << "\n";
        if (g.partial()) rep.exit_code = kExitPartial;
        break;
      }
      case RunMode::Regularity: {
        const ModelParams p = cfg.model();
        nlohmann::json arr = nlohmann::json::array();
        for (int alpha : {1, 2}) {
          const RegularityResult r = eng.r_alpha(alpha, cfg.signs, p);
          log << "R_" << alpha << ": " << (r.divergent ? "Divergent" : fmt_g17(r.value));
          if (!r.reason.empty()) log << "  (" << r.reason << ")";
          log << "\n";
          arr.push_back({{"alpha", alpha}, {"divergent", r.divergent}, {"value", r.divergent ? nlohmann::json() : nlohmann::json(r.value)},
                         {"reason", r.reason}});
        }
        const EnergyResult e = eng.ground_state_energy(cfg.signs, p);
        log << "E: " << (e.unbounded ? "Unbounded" : fmt_g17(e.value)) << "\n";
        results["r_alpha"] = arr;
        results["requested_alpha"] = cfg.alpha;
        results["ground_state_energy"] = {{"unbounded", e.unbounded},
                                          {"value", e.unbounded ? nlohmann::json() : nlohmann::json(e.value)},
                                          {"reason", e.reason}};
        detail::write_file(cfg.output_dir, "regularity.json", [&](std::ostream& f) { f << results.dump(2) << "\n"; },
                           rep.outputs);
        break;
      }
      case RunMode::Validate:
        break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << "\n";
    rep.exit_code = kExitNumerical;
    results["error"] = e.what();
  } catch (const DomainError& e) {
    log << "numerical failure: " << e.what() << "\n";
    rep.exit_code = kExitNumerical;
    results["error"] = e.what();
  }

  if (!cache_path.empty()) cache->save(cache_path);
  const CacheStats cs = cache->stats();
  rep.manifest = {
      {"tool", "rsb_cli"},
      {"version", RSB_VERSION},
      {"mode", to_string(cfg.mode)},
      {"config", to_json(cfg)},
      {"effective",
       {{"cache_path", cache_path},
        {"threads", resolve_threads(cfg.threads)},
        {"lightcone", "t = L - 2 * edge_radius"},
        {"quad_u_max", "9 / (sqrt(2) * damping)"},
        {"quad_max_subdivision_evals", qopt.max_subdivision_evals}}},
      {"kernel_cache",
       {{"hits", cs.hits}, {"misses", cs.misses}, {"inserts", cs.inserts}, {"entries", cs.entries}, {"loaded", cs.loaded}}},
      {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
      {"results", results},
      {"outputs", rep.outputs},
      {"exit_code", rep.exit_code}};
  std::vector<std::string> ignored;
  detail::write_file(cfg.output_dir, "manifest.json", [&](std::ostream& f) { f << rep.manifest.dump(2) << "\n"; },
                     ignored);
  return rep;
}

/// Reads a config file. A manifest written by `run` is accepted too; its
/// embedded config is used.
inline RunConfig load_config_file(const std::string& path, std::optional<RunMode> mode_hint) {
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("tool") && doc.contains("config")) return parse_config(doc.at("config"), mode_hint);
  return parse_config(doc, mode_hint);
}

}  // namespace rsb

#endif  // RSB_CLI_IO_HPP
