// algest: derivation reports, estimation runs, demodulation and noise sweeps
// driven by one JSON configuration document.
//
// Exit codes: 0 ok, 1 configuration error, 2 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "algest/config.hpp"
#include "algest/estimator.hpp"
#include "algest/experiment.hpp"

namespace {

using namespace algest;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericalFailure = 2;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write '" + path + "'");
  out << text;
}

Config require_model(const std::string& path) {
  Config c = load_config(path);
  if (!c.has_model) throw config_error("configuration has no 'model' section");
  return c;
}

Derivation derive_configured(const Config& c) {
  const SignalModel model = build_model(c.model);
  Rng rng(c.seed);
  Derivation d = derive(model, rng);
  d.estimator.rule = c.window.rule;
  d.estimator.divisor_floor = c.window.divisor_floor;
  return d;
}

int cmd_identify(const std::string& cfg, bool json) {
  const Config c = require_model(cfg);
  const SignalModel model = build_model(c.model);
  Rng rng(c.seed);
  const IdentifyReport report{model, derive(model, rng)};
  write_text("-", json ? report.to_json().dump(2) + "\n" : report.text());
  return kOk;
}

int cmd_derive(const std::string& cfg, const std::string& out) {
  const Derivation d = derive_configured(require_model(cfg));
  write_text(out, to_json(d.estimator).dump(2) + "\n");
  return kOk;
}

SampledSignal measured_signal(const Config& c) {
  if (c.input_csv) return read_signal_csv(*c.input_csv);
  SampledSignal y = sample_solution(c.model, c.grid);
  if (c.noise.white) {
    WhiteNoiseSpec w = *c.noise.white;
    w.N = c.grid.n - 1;
    y = mix(y, gen_white(w, c.grid));
  }
  if (!c.noise.hf.tones.empty()) y = mix(y, gen_hf(c.noise.hf, c.grid));
  return y;
}

int cmd_estimate(const std::string& cfg, const std::string& estimator_path, const std::string& out) {
  const Config c = load_config(cfg);
  CompiledEstimator est;
  if (!estimator_path.empty()) {
    std::ifstream in(estimator_path);
    if (!in) throw config_error("cannot open estimator '" + estimator_path + "'");
    try {
      est = estimator_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
      throw config_error(std::string("estimator file: ") + e.what());
    }
  } else {
    if (!c.has_model) throw config_error("estimate needs a 'model' section or --estimator");
    est = derive_configured(c).estimator;
  }
  if (!c.has_model && !c.input_csv) throw config_error("estimate needs samples: a model or input.csv");

  const SampledSignal y = measured_signal(c);
  std::vector<EstimateResult> results;
  if (c.window.stride) {
    results = sliding_estimate(est, y, c.window.t, *c.window.stride);
  } else {
    results.push_back(estimate(est, y, c.window.t));
  }
  std::string csv = estimate_csv_header(est.theta_names);
  bool any_ok = false;
  for (const auto& r : results) {
    csv += estimate_csv_row(r);
    any_ok = any_ok || r.status == EstimateStatus::ok;
  }
  write_text(out, csv);
  if (!any_ok) {
    std::cerr << "algest: every window is ill-conditioned\n";
    return kNumericalFailure;
  }
  return kOk;
}

int cmd_demodulate(const std::string& cfg, const std::string& csv_path, const std::string& summary_path) {
  const Config c = load_config(cfg);
  if (!c.demod) throw config_error("configuration has no 'demod' section");
  const CompiledEstimator est = carrier_estimator(*c.demod);
  const DemodResult r = run_demodulation(*c.demod, est);
  if (!csv_path.empty()) write_text(csv_path, r.csv);
  write_text(summary_path, to_json(r.report).dump(2) + "\n");
  return kOk;
}

int cmd_sweep(const std::string& cfg, const std::string& csv_path, const std::string& summary_path,
              const std::string& plot_path) {
  const Config c = require_model(cfg);
  if (!c.sweep) throw config_error("configuration has no 'sweep' section");
  const SignalModel model = build_model(c.model);
  const Derivation d = derive_configured(c);
  const SweepResult r = run_sweep(model, d.estimator, *c.sweep);
  if (!csv_path.empty()) write_text(csv_path, r.csv);
  write_text(summary_path, to_json(*c.sweep, r).dump(2) + "\n");
  if (!plot_path.empty()) {
    std::string dat = "# x rms\n";
    for (const auto& p : r.points)
      if (!p.skipped) dat += detail::format_double(p.x) + " " + detail::format_double(p.rms) + "\n";
    write_text(plot_path, dat);
  }
  for (const auto& p : r.points)
    if (p.skipped) std::cerr << "algest: sweep point " << p.x << " skipped, every trial ill-conditioned\n";
  if (!r.fit) {
    std::cerr << "algest: fewer than two usable sweep points\n";
    return kNumericalFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Algebraic parameter estimation toolkit"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  std::string estimator_path;
  std::string csv_path;
  std::string summary_path;
  std::string plot_path;
  bool json = false;

  auto* identify = app.add_subcommand("identify", "Report the derivation matrix, its rank and the linear system");
  identify->add_option("-c,--config", config, "Configuration document")->required();
  identify->add_flag("--json", json, "Emit the report as JSON");

  auto* derive = app.add_subcommand("derive", "Compile the estimator and write it as JSON");
  derive->add_option("-c,--config", config, "Configuration document")->required();
  derive->add_option("-o,--out", out, "Output file (default: stdout)");

  auto* estimate = app.add_subcommand("estimate", "Estimate parameters on sampled data");
  estimate->add_option("-c,--config", config, "Configuration document")->required();
  estimate->add_option("-e,--estimator", estimator_path, "Compiled estimator from 'derive'");
  estimate->add_option("-o,--out", out, "CSV output (default: stdout)");

  auto* demod = app.add_subcommand("demodulate", "Binary ASK demodulation and bit error rate");
  demod->add_option("-c,--config", config, "Configuration document")->required();
  demod->add_option("--csv", csv_path, "Per-symbol CSV output");
  demod->add_option("--summary", summary_path, "Summary JSON (default: stdout)");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo noise scaling study");
  sweep->add_option("-c,--config", config, "Configuration document")->required();
  sweep->add_option("--csv", csv_path, "Per-trial CSV output");
  sweep->add_option("--summary", summary_path, "Summary JSON (default: stdout)");
  sweep->add_option("--plot", plot_path, "Two-column data file for plotting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*identify) return cmd_identify(config, json);
    if (*derive) return cmd_derive(config, out);
    if (*estimate) return cmd_estimate(config, estimator_path, out);
    if (*demod) return cmd_demodulate(config, csv_path, summary_path);
    if (*sweep) return cmd_sweep(config, csv_path, summary_path, plot_path);
  } catch (const config_error& e) {
    std::cerr << "algest: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const invalid_input& e) {
    std::cerr << "algest: invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const not_identifiable& e) {
    std::cerr << "algest: not identifiable: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const numerical_failure& e) {
    std::cerr << "algest: numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const pole_error& e) {
    std::cerr << "algest: numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kOk;
}
