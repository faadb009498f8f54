#ifndef RSB_CONFIG_HPP
#define RSB_CONFIG_HPP

// Run configuration: JSON parsing with path-located errors, explicit defaults
// and a canonical serialization that parses back to the same value.

#include <cmath>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "rsb/error.hpp"
#include "rsb/sweep.hpp"

namespace rsb {

inline constexpr int kSchemaVersion = 1;

enum class RunMode { BipartiteMap, TripartiteMap, Slice, Cone, Regularity, Validate };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::BipartiteMap: return "bipartite-map";
    case RunMode::TripartiteMap: return "tripartite-map";
    case RunMode::Slice: return "slice";
    case RunMode::Cone: return "cone";
    case RunMode::Regularity: return "regularity";
    case RunMode::Validate: return "validate";
  }
  return "?";
}

inline RunMode parse_mode(const std::string& s, const std::string& path = "/mode") {
  for (RunMode m : {RunMode::BipartiteMap, RunMode::TripartiteMap, RunMode::Slice, RunMode::Cone,
                    RunMode::Regularity, RunMode::Validate}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError(path, "unknown mode '" + s + "'");
}

struct RunConfig {
  RunMode mode = RunMode::BipartiteMap;
  int n = 3;
  double m_tilde = 1e-11;
  int detectors = 2;
  std::vector<double> lambda_tilde{0.01, 0.01};
  std::vector<double> delta_tilde{0.0, 0.0};
  AxisSpec L{4.0, 40.0, 40, AxisSpacing::Linear};
  AxisSpec t{1.0, 1e4, 60, AxisSpacing::Log};
  double quad_rel_tol = 1e-10;
  double neg_zero_threshold = 1e-9;
  double pair_zero_threshold = 1e-9;
  double ghz_threshold = 1e-8;
  double psd_tolerance = 1e-9;
  double cone_epsilon = 1e-6;
  double edge_radius = 1.75;
  double max_failed_fraction = 0.01;
  int alpha = 2;
  std::vector<int> signs{1, 1};  // regularity only, one per detector
  std::string output_dir = "out";
  std::string format = "csv";
  std::string cache = "auto";  // "auto", "off" or a file path
  unsigned threads = 0;        // 0 = auto

  bool operator==(const RunConfig&) const = default;

  SweepSpec sweep_spec() const {
    SweepSpec s;
    s.kind = detectors == 3 ? MapKind::Tripartite : MapKind::Bipartite;
    s.n = n;
    s.m_tilde = m_tilde;
    s.lambdas = lambda_tilde;
    s.deltas = delta_tilde;
    s.L_axis = L;
    s.t_axis = t;
    s.quad.rel_tol = quad_rel_tol;
    s.thresholds.pair_zero = pair_zero_threshold;
    s.thresholds.ghz = ghz_threshold;
    s.edge_radius = edge_radius;
    s.psd_tolerance = psd_tolerance;
    s.threads = threads;
    s.max_failed_fraction = max_failed_fraction;
    return s;
  }

  ModelParams model() const {
    if (detectors == 3) {
      return make_equilateral_model(n, m_tilde, {lambda_tilde[0], lambda_tilde[1], lambda_tilde[2]}, L.min,
                                    {delta_tilde[0], delta_tilde[1], delta_tilde[2]});
    }
    return make_pair_model(n, m_tilde, lambda_tilde[0], lambda_tilde[1], L.min, delta_tilde[0], delta_tilde[1]);
  }
};

namespace detail {

class JsonReader {
 public:
  JsonReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }
  std::string at(const std::string& key) const { return path_ + "/" + key; }
  const nlohmann::json& get(const std::string& key) const { return obj_.at(key); }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key), "must be finite");
    return d;
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<long long>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline AxisSpacing parse_spacing(const std::string& s, const std::string& path) {
  if (s == "log") return AxisSpacing::Log;
  if (s == "linear") return AxisSpacing::Linear;
  throw ConfigError(path, "spacing must be 'log' or 'linear'");
}

inline AxisSpec parse_axis(const nlohmann::json& v, const std::string& path, const AxisSpec& fallback) {
  if (v.is_number()) {
    const double x = v.get<double>();
    return AxisSpec{x, x, 1, fallback.spacing};
  }
  JsonReader r(v, path);
  AxisSpec a = fallback;
  if (!r.has("min")) throw ConfigError(path + "/min", "required");
  if (!r.has("max")) throw ConfigError(path + "/max", "required");
  a.min = r.number("min", 0.0);
  a.max = r.number("max", 0.0);
  const long long pts = r.integer("points", static_cast<long long>(fallback.points));
  if (pts < 1 || pts > 1000000) throw ConfigError(path + "/points", "must lie in [1, 1e6]");
  a.points = static_cast<std::size_t>(pts);
  a.spacing = parse_spacing(r.string("spacing", to_string(fallback.spacing)), path + "/spacing");
  r.reject_unknown();
  try {
    a.validate(path);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return a;
}

inline std::vector<double> parse_per_detector(const nlohmann::json& v, const std::string& path, int detectors) {
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(static_cast<std::size_t>(detectors), v.get<double>());
  } else if (v.is_array()) {
    if (v.size() != static_cast<std::size_t>(detectors)) {
      throw ConfigError(path, "expected " + std::to_string(detectors) + " entries, one per detector");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(path + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
  } else {
    throw ConfigError(path, "expected a number or an array of numbers");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) throw ConfigError(path + "/" + std::to_string(i), "must be finite");
  }
  return out;
}

inline void check_range(double v, double lo, double hi, const std::string& path) {
  if (!(v >= lo && v <= hi)) {
    throw ConfigError(path, "must lie in [" + fmt_g17(lo) + ", " + fmt_g17(hi) + "]");
  }
}

inline nlohmann::json axis_json(const AxisSpec& a) {
  return {{"min", a.min}, {"max", a.max}, {"points", a.points}, {"spacing", to_string(a.spacing)}};
}

}  // namespace detail

/// Parses and validates a configuration document. `mode_hint` is the
/// subcommand; a "mode" key in the document must agree with it.
inline RunConfig parse_config(const nlohmann::json& doc, std::optional<RunMode> mode_hint = std::nullopt) {
  detail::JsonReader r(doc, "");
  RunConfig c;
  const long long version = r.integer("schema_version", kSchemaVersion);
  if (version != kSchemaVersion) {
    throw ConfigError("/schema_version", "unsupported schema version " + std::to_string(version));
  }
  if (r.has("mode")) {
    c.mode = parse_mode(r.string("mode", ""));
    if (mode_hint && *mode_hint != c.mode) {
      throw ConfigError("/mode", std::string("config is for '") + to_string(c.mode) + "' but the command is '" +
                                     to_string(*mode_hint) + "'");
    }
  } else if (mode_hint) {
    c.mode = *mode_hint;
  }

  c.n = static_cast<int>(r.integer("n", c.n));
  if (c.n < 2 || c.n > 5) throw ConfigError("/n", "unsupported dimension n = " + std::to_string(c.n));
  c.m_tilde = r.number("m_tilde", c.m_tilde);
  if (c.m_tilde < 0.0) throw ConfigError("/m_tilde", "must be >= 0");

  const int default_detectors = c.mode == RunMode::TripartiteMap ? 3 : 2;
  c.detectors = static_cast<int>(r.integer("detectors", default_detectors));
  if (c.mode == RunMode::TripartiteMap && c.detectors != 3) {
    throw ConfigError("/detectors", "tripartite-map needs 3 detectors");
  }
  if (c.mode == RunMode::BipartiteMap && c.detectors != 2) {
    throw ConfigError("/detectors", "bipartite-map needs 2 detectors");
  }
  if (c.detectors != 2 && c.detectors != 3) throw ConfigError("/detectors", "must be 2 or 3");

  c.lambda_tilde = r.has("lambda_tilde") ? detail::parse_per_detector(r.get("lambda_tilde"), "/lambda_tilde", c.detectors)
                                         : std::vector<double>(static_cast<std::size_t>(c.detectors), 0.01);
  for (std::size_t i = 0; i < c.lambda_tilde.size(); ++i) {
    if (c.lambda_tilde[i] < 0.0) throw ConfigError("/lambda_tilde/" + std::to_string(i), "must be >= 0");
  }
  c.delta_tilde = r.has("delta_tilde") ? detail::parse_per_detector(r.get("delta_tilde"), "/delta_tilde", c.detectors)
                                       : std::vector<double>(static_cast<std::size_t>(c.detectors), 0.0);

  const bool single_L = c.mode == RunMode::Slice || c.mode == RunMode::Regularity;
  if (single_L) c.L = AxisSpec{10.0, 10.0, 1, AxisSpacing::Linear};
  if (r.has("L")) c.L = detail::parse_axis(r.get("L"), "/L", c.L);
  if (single_L && c.L.points != 1) throw ConfigError("/L", "this mode needs a single separation");
  if (!(c.L.min > 0.0)) throw ConfigError("/L", "separations must be > 0");
  if (r.has("t_range")) c.t = detail::parse_axis(r.get("t_range"), "/t_range", c.t);
  if (c.t.min < 0.0) throw ConfigError("/t_range/min", "times must be >= 0");

  c.quad_rel_tol = r.number("quad_rel_tol", c.quad_rel_tol);
  detail::check_range(c.quad_rel_tol, 1e-12, 1e-4, "/quad_rel_tol");
  c.neg_zero_threshold = r.number("neg_zero_threshold", c.neg_zero_threshold);
  detail::check_range(c.neg_zero_threshold, 0.0, 1e-2, "/neg_zero_threshold");
  c.pair_zero_threshold = r.number("pair_zero_threshold", c.pair_zero_threshold);
  detail::check_range(c.pair_zero_threshold, 0.0, 1e-2, "/pair_zero_threshold");
  c.ghz_threshold = r.number("ghz_threshold", c.ghz_threshold);
  detail::check_range(c.ghz_threshold, 0.0, 1e-1, "/ghz_threshold");
  c.psd_tolerance = r.number("psd_tolerance", c.psd_tolerance);
  detail::check_range(c.psd_tolerance, 0.0, 1e-3, "/psd_tolerance");
  c.cone_epsilon = r.number("cone_epsilon", c.cone_epsilon);
  detail::check_range(c.cone_epsilon, 0.0, 0.5, "/cone_epsilon");
  c.edge_radius = r.number("edge_radius", c.edge_radius);
  detail::check_range(c.edge_radius, 0.0, 100.0, "/edge_radius");
  c.max_failed_fraction = r.number("max_failed_fraction", c.max_failed_fraction);
  detail::check_range(c.max_failed_fraction, 0.0, 1.0, "/max_failed_fraction");

  c.alpha = static_cast<int>(r.integer("alpha", c.alpha));
  if (c.alpha != 1 && c.alpha != 2) throw ConfigError("/alpha", "must be 1 or 2");
  if (r.has("signs")) {
    const auto& v = r.get("signs");
    c.signs.clear();
    if (!v.is_array() || v.size() != static_cast<std::size_t>(c.detectors)) {
      throw ConfigError("/signs", "expected one sign per detector");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || (v[i].get<int>() != 1 && v[i].get<int>() != -1)) {
        throw ConfigError("/signs/" + std::to_string(i), "must be +1 or -1");
      }
      c.signs.push_back(v[i].get<int>());
    }
  } else {
    c.signs.assign(static_cast<std::size_t>(c.detectors), 1);
  }

  c.output_dir = r.string("output_dir", c.output_dir);
  if (c.output_dir.empty()) throw ConfigError("/output_dir", "must not be empty");
  c.format = r.string("format", c.format);
  if (c.format != "csv" && c.format != "csv+ppm") throw ConfigError("/format", "must be 'csv' or 'csv+ppm'");
  c.cache = r.string("cache", c.cache);
  if (c.cache.empty()) throw ConfigError("/cache", "use 'auto', 'off' or a path");
  if (r.has("threads")) {
    const auto& v = r.get("threads");
    if (v.is_string() && v.get<std::string>() == "auto") {
      c.threads = 0;
    } else if (v.is_number_integer() && v.get<long long>() >= 1 && v.get<long long>() <= 4096) {
      c.threads = static_cast<unsigned>(v.get<long long>());
    } else {
      throw ConfigError("/threads", "expected 'auto' or an integer in [1, 4096]");
    }
  }
  r.reject_unknown();

  try {
    c.model().validate();
    c.sweep_spec().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    throw ConfigError("", e.what());
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text, std::optional<RunMode> mode_hint = std::nullopt) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc, mode_hint);
}

/// Every effective parameter, explicitly.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["mode"] = to_string(c.mode);
  j["n"] = c.n;
  j["m_tilde"] = c.m_tilde;
  j["detectors"] = c.detectors;
  j["lambda_tilde"] = c.lambda_tilde;
  j["delta_tilde"] = c.delta_tilde;
  j["L"] = detail::axis_json(c.L);
  j["t_range"] = detail::axis_json(c.t);
  j["quad_rel_tol"] = c.quad_rel_tol;
  j["neg_zero_threshold"] = c.neg_zero_threshold;
  j["pair_zero_threshold"] = c.pair_zero_threshold;
  j["ghz_threshold"] = c.ghz_threshold;
  j["psd_tolerance"] = c.psd_tolerance;
  j["cone_epsilon"] = c.cone_epsilon;
  j["edge_radius"] = c.edge_radius;
  j["max_failed_fraction"] = c.max_failed_fraction;
  j["alpha"] = c.alpha;
  j["signs"] = c.signs;
  j["output_dir"] = c.output_dir;
  j["format"] = c.format;
  j["cache"] = c.cache;
  if (c.threads == 0) {
    j["threads"] = "auto";
  } else {
    j["threads"] = c.threads;
  }
  return j;
}

}  // namespace rsb

#endif  // RSB_CONFIG_HPP
