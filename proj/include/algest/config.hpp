#pragma once

// The JSON configuration document and the serialized forms of reports,
// compiled estimators and estimate tables.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "algest/error.hpp"
#include "algest/estimator.hpp"
#include "algest/experiment.hpp"
#include "algest/identify.hpp"
#include "algest/noise.hpp"
#include "algest/sigmodel.hpp"

namespace algest {

using Json = nlohmann::ordered_json;

struct WindowSpec {
  double t = 1.0;
  std::optional<double> stride;  // sliding estimation when present
  QuadratureRule rule = QuadratureRule::trapezoid;
  double divisor_floor = 1e-9;
};

struct NoiseConfig {
  std::optional<WhiteNoiseSpec> white;  // N is taken from the grid
  HfSinusoidSpec hf;
};

struct Config {
  ModelSpec model;
  bool has_model = false;
  Grid grid{0.0, 1.0, 10001};
  WindowSpec window;
  NoiseConfig noise;
  std::optional<std::string> input_csv;  // measured samples instead of the model's solution
  std::optional<SweepSpec> sweep;
  std::optional<DemodSpec> demod;
  std::uint64_t seed = 1;
};

namespace detail {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw config_error(where + ": missing '" + key + "'");
  return j.at(key);
}

inline QuadratureRule parse_rule(const std::string& s) {
  if (s == "trapezoid") return QuadratureRule::trapezoid;
  if (s == "simpson") return QuadratureRule::simpson;
  throw config_error("unknown quadrature rule '" + s + "'");
}

inline std::string rule_name(QuadratureRule r) { return r == QuadratureRule::trapezoid ? "trapezoid" : "simpson"; }

inline Distribution parse_distribution_cfg(const std::string& s) {
  try {
    return parse_distribution(s);
  } catch (const invalid_input& e) {
    throw config_error(e.what());
  }
}

inline ModelSpec parse_model(const Json& j) {
  if (!j.is_object()) throw config_error("model: expected an object");
  ModelSpec m;
  m.kind = parse_model_kind(require(j, "kind", "model").get<std::string>());
  m.tones = get_or(j, "tones", 1);
  m.unknown_frequency = get_or(j, "unknown_frequency", false);
  m.known_phase = get_or(j, "known_phase", false);
  m.degree = get_or(j, "degree", 0);
  m.num_degree = get_or(j, "num_degree", 0);
  m.den_degree = get_or(j, "den_degree", 1);
  if (j.contains("params")) {
    for (const auto& [k, v] : j.at("params").items()) {
      if (!v.is_number()) throw config_error("model.params." + k + ": expected a number");
      m.params[k] = v.get<double>();
    }
  }
  if (j.contains("unknowns")) m.unknowns = j.at("unknowns").get<std::vector<std::string>>();
  return m;
}

inline SweepSpec parse_sweep(const Json& j) {
  SweepSpec s;
  s.swept = parse_swept(require(j, "swept", "sweep").get<std::string>());
  s.values = require(j, "values", "sweep").get<std::vector<double>>();
  s.rule = parse_amplitude_rule(get_or<std::string>(j, "amplitude_rule", "fixed"));
  s.amplitude = get_or(j, "amplitude", 1.0);
  s.trials = get_or(j, "trials", 100);
  s.base_seed = get_or<std::uint64_t>(j, "base_seed", 0);
  s.distribution = parse_distribution_cfg(get_or<std::string>(j, "distribution", "gaussian"));
  s.window = get_or(j, "window", 1.0);
  s.samples = get_or<std::size_t>(j, "samples", 10001);
  s.hf_points_per_radian = get_or(j, "hf_points_per_radian", 10.0);
  s.validate();
  return s;
}

inline DemodSpec parse_demod(const Json& j) {
  DemodSpec d;
  d.symbols = get_or(j, "symbols", 32);
  d.samples_per_symbol = get_or<std::size_t>(j, "samples_per_symbol", 2000);
  d.symbol_time = get_or(j, "symbol_time", 1.0);
  d.carrier = get_or(j, "carrier", 2.0 * std::numbers::pi);
  d.phase = get_or(j, "phase", 0.0);
  d.A0 = get_or(j, "A0", 0.0);
  d.A1 = get_or(j, "A1", 1.0);
  if (j.contains("window")) d.window = j.at("window").get<double>();
  d.known_phase = get_or(j, "known_phase", false);
  if (j.contains("snr_db") && !j.at("snr_db").is_null()) d.snr_db = j.at("snr_db").get<double>();
  d.distribution = parse_distribution_cfg(get_or<std::string>(j, "distribution", "gaussian"));
  if (j.contains("jammer") && !j.at("jammer").is_null()) {
    const Json& jj = j.at("jammer");
    HfJammer h;
    h.amplitude_ratio = get_or(jj, "amplitude_ratio", 10.0);
    h.omega_ratio = get_or(jj, "omega_ratio", 1e4);
    h.phi = get_or(jj, "phi", 0.0);
    d.jammer = h;
  }
  d.seed = get_or<std::uint64_t>(j, "seed", 0);
  d.validate();
  return d;
}

}  // namespace detail

/// Reads the whole document; every structural problem is a config_error.
inline Config parse_config(const Json& j) {
  try {
    if (!j.is_object()) throw config_error("configuration must be a JSON object");
    Config c;
    if (j.contains("model")) {
      c.model = detail::parse_model(j.at("model"));
      c.has_model = true;
    }
    if (j.contains("grid")) {
      const Json& g = j.at("grid");
      c.grid = {detail::get_or(g, "t0", 0.0), detail::get_or(g, "t1", 1.0), detail::get_or<std::size_t>(g, "n", 10001)};
      try {
        c.grid.validate();
      } catch (const invalid_input& e) {
        throw config_error(std::string("grid: ") + e.what());
      }
    }
    if (j.contains("window")) {
      const Json& w = j.at("window");
      c.window.t = detail::get_or(w, "t", c.grid.t1 - c.grid.t0);
      if (w.contains("stride") && !w.at("stride").is_null()) c.window.stride = w.at("stride").get<double>();
      c.window.rule = detail::parse_rule(detail::get_or<std::string>(w, "rule", "trapezoid"));
      c.window.divisor_floor = detail::get_or(w, "divisor_floor", 1e-9);
      if (!(c.window.divisor_floor >= 0.0)) throw config_error("window.divisor_floor must be nonnegative");
    } else {
      c.window.t = c.grid.t1 - c.grid.t0;
    }
    if (j.contains("noise")) {
      const Json& n = j.at("noise");
      if (n.contains("white") && !n.at("white").is_null()) {
        const Json& w = n.at("white");
        WhiteNoiseSpec ws;
        ws.A = detail::get_or(w, "A", 1.0);
        ws.distribution = detail::parse_distribution_cfg(detail::get_or<std::string>(w, "distribution", "gaussian"));
        ws.seed = detail::get_or<std::uint64_t>(w, "seed", 0);
        c.noise.white = ws;
      }
      if (n.contains("hf")) {
        for (const auto& t : n.at("hf")) {
          const HfTone tone{detail::get_or(t, "A", 0.0), detail::get_or(t, "Omega", 0.0), detail::get_or(t, "phi", 0.0)};
          if (!(tone.Omega > 0.0)) throw config_error("noise.hf: Omega must be positive");
          c.noise.hf.tones.push_back(tone);
        }
      }
    }
    if (j.contains("input") && j.at("input").contains("csv")) c.input_csv = j.at("input").at("csv").get<std::string>();
    if (j.contains("sweep")) c.sweep = detail::parse_sweep(j.at("sweep"));
    if (j.contains("demod")) c.demod = detail::parse_demod(j.at("demod"));
    c.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
    return c;
  } catch (const Json::exception& e) {
    throw config_error(std::string("configuration: ") + e.what());
  }
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open configuration '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw config_error("'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

inline Json to_json(const KernelTerm& t) {
  return {{"c", {{"num", t.c.get_num().get_str()}, {"den", t.c.get_den().get_str()}}},
          {"k", t.k},
          {"nu", t.nu},
          {"applies_to", t.applies_to == Applies::signal ? "signal" : "one"}};
}

inline KernelTerm kernel_term_from_json(const Json& j) {
  KernelTerm t;
  Rational c(Integer(j.at("c").at("num").get<std::string>()), Integer(j.at("c").at("den").get<std::string>()));
  if (c.get_den() == 0) throw config_error("kernel term with zero denominator");
  c.canonicalize();
  t.c = c;
  t.k = j.at("k").get<int>();
  t.nu = j.at("nu").get<int>();
  const auto a = j.at("applies_to").get<std::string>();
  if (a != "signal" && a != "one") throw config_error("kernel term applies_to must be 'signal' or 'one'");
  t.applies_to = a == "signal" ? Applies::signal : Applies::one;
  if (t.k < 1 || t.nu < 0) throw config_error("kernel term needs k >= 1 and nu >= 0");
  return t;
}

inline Json to_json(const CompiledEstimator& est) {
  auto entry = [](const KernelEntry& e) {
    Json a = Json::array();
    for (const auto& t : e) a.push_back(to_json(t));
    return a;
  };
  Json A = Json::array();
  for (const auto& row : est.A) {
    Json r = Json::array();
    for (const auto& e : row) r.push_back(entry(e));
    A.push_back(r);
  }
  Json B = Json::array();
  for (const auto& e : est.B) B.push_back(entry(e));
  return {{"theta_names", est.theta_names},
          {"divisor_floor", est.divisor_floor},
          {"rule", detail::rule_name(est.rule)},
          {"A", A},
          {"B", B}};
}

inline CompiledEstimator estimator_from_json(const Json& j) {
  try {
    CompiledEstimator est;
    est.theta_names = j.at("theta_names").get<std::vector<std::string>>();
    est.divisor_floor = j.at("divisor_floor").get<double>();
    est.rule = detail::parse_rule(j.at("rule").get<std::string>());
    auto entry = [](const Json& a) {
      KernelEntry e;
      for (const auto& t : a) e.push_back(kernel_term_from_json(t));
      return e;
    };
    const std::size_t rho = est.theta_names.size();
    if (j.at("A").size() != rho || j.at("B").size() != rho) throw config_error("estimator dimensions do not match");
    for (const auto& row : j.at("A")) {
      if (row.size() != rho) throw config_error("estimator A is not square");
      std::vector<KernelEntry> r;
      for (const auto& e : row) r.push_back(entry(e));
      est.A.push_back(std::move(r));
    }
    for (const auto& e : j.at("B")) est.B.push_back(entry(e));
    return est;
  } catch (const Json::exception& e) {
    throw config_error(std::string("estimator document: ") + e.what());
  }
}

/// Derivation steps in the order they were performed.
struct IdentifyReport {
  SignalModel model;
  Derivation derivation;

  Json to_json() const {
    const auto& d = derivation;
    Json eqs = Json::array();
    for (std::size_t r = 0; r < d.system.size(); ++r)
      eqs.push_back({{"xi", d.system.row_orders[r]},
                     {"equation", d.system.equation_string(r)},
                     {"strict_shift", d.strict.strict_shift[r]},
                     {"strict_equation", d.strict.equation_string(r)}});
    return {{"model", std::string(algest::to_string(model.spec.kind))},
            {"identity", model.identity_string()},
            {"N", model.N()},
            {"M", model.M()},
            {"unknowns", model.unknowns},
            {"nuisances", model.nuisances},
            {"matrix_rows", d.matrix.size()},
            {"matrix_cols", d.matrix.empty() ? 0 : d.matrix.front().size()},
            {"rank", d.rank},
            {"annihilation_order", d.system.annihilation_order},
            {"equations", eqs}};
  }

  std::string text() const {
    const auto& d = derivation;
    std::ostringstream o;
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
      return s.empty() ? std::string("(none)") : s;
    };
    o << "model       " << algest::to_string(model.spec.kind) << '\n';
    o << "identity    " << model.identity_string() << '\n';
    o << "unknowns    " << join(model.unknowns) << '\n';
    o << "nuisances   " << join(model.nuisances) << '\n';
    const std::size_t cols = d.matrix.empty() ? 0 : d.matrix.front().size();
    o << "matrix      " << d.matrix.size() << " x " << cols << ", rank " << d.rank << " (N + M = "
      << model.N() + model.M() << ")\n";
    if (d.system.annihilation_order > 0) o << "annihilate  d^" << d.system.annihilation_order << "/ds^" << d.system.annihilation_order << '\n';
    o << "system\n";
    for (std::size_t r = 0; r < d.system.size(); ++r)
      o << "  [d^" << d.system.row_orders[r] << "] " << d.system.equation_string(r) << '\n';
    o << "strict form\n";
    for (std::size_t r = 0; r < d.strict.size(); ++r)
      o << "  [s^-" << d.strict.strict_shift[r] << "] " << d.strict.equation_string(r) << '\n';
    return o.str();
  }
};

inline std::string estimate_csv_header(const std::vector<std::string>& names) {
  std::string h = "t";
  for (const auto& n : names) h += "," + n;
  return h + ",divisor,status\n";
}

inline std::string estimate_csv_row(const EstimateResult& r) {
  std::string row = detail::format_double(r.t);
  for (double v : r.theta_hat) row += "," + detail::format_double(v);
  return row + "," + detail::format_double(r.divisor) + "," + std::string(to_string(r.status)) + "\n";
}

inline Json to_json(const SweepSpec& spec, const SweepResult& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    Json by = Json::object();
    for (std::size_t i = 0; i < r.theta_names.size() && i < p.rms_by_theta.size(); ++i) by[r.theta_names[i]] = p.rms_by_theta[i];
    pts.push_back({{"x", p.x},
                   {"amplitude", p.amplitude},
                   {"samples", p.samples},
                   {"rms", p.rms},
                   {"rms_by_theta", by},
                   {"trials", p.used_trials},
                   {"ill_conditioned", p.ill_conditioned},
                   {"skipped", p.skipped}});
  }
  Json j = {{"swept", std::string(to_string(spec.swept))},
            {"amplitude_rule", std::string(to_string(spec.rule))},
            {"distribution", std::string(to_string(spec.distribution))},
            {"base_seed", spec.base_seed},
            {"points", pts}};
  if (r.fit) {
    j["slope"] = r.fit->slope;
    j["intercept"] = r.fit->intercept;
    j["r2"] = r.fit->r2;
  } else {
    j["slope"] = nullptr;
  }
  j["strictly_decreasing"] = r.strictly_decreasing();
  return j;
}

inline Json to_json(const BerReport& b) {
  return {{"symbols", b.symbols}, {"errors", b.errors}, {"ber", b.ber}, {"per_sample_snr_db", b.per_sample_snr_db}};
}

/// Two-column CSV (t, value) with a header row, on a uniform grid.
inline SampledSignal read_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open signal file '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<double> t;
  std::vector<double> v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    double a = 0.0;
    double b = 0.0;
    char comma = 0;
    if (!(ls >> a >> comma >> b) || comma != ',') throw config_error("malformed signal row '" + line + "'");
    t.push_back(a);
    v.push_back(b);
  }
  if (t.size() < 2) throw config_error("signal file needs at least two samples");
  const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!(h > 0.0) || std::abs(t[i] - (t.front() + h * static_cast<double>(i))) > 1e-6 * h)
      throw config_error("signal file is not on a uniform grid");
  return SampledSignal(t.front(), t.back(), std::move(v));
}

}  // namespace algest
