#pragma once

// Monte Carlo scaling studies and the ASK demodulation harness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "algest/error.hpp"
#include "algest/estimator.hpp"
#include "algest/noise.hpp"
#include "algest/sigmodel.hpp"

namespace algest {

/// Runs body(i) for i in [0, n) on up to hardware_concurrency threads.
/// Results must be written by index; scheduling does not affect them.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t hw = std::max(1U, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hw, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  for (auto& t : pool) t.join();
}

struct SlopeReport {
  std::vector<std::pair<double, double>> points;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares line through (log10 x, log10 y).
inline SlopeReport fit_loglog(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw invalid_input("a log-log fit needs at least two points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw invalid_input("log-log fit needs positive coordinates");
    lx.push_back(std::log10(x));
    ly.push_back(std::log10(y));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw invalid_input("log-log fit needs distinct abscissae");
  SlopeReport r;
  r.points.assign(points.begin(), points.end());
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return r;
}

enum class SweptVariable { Omega, N };
enum class AmplitudeRule { fixed, sqrt_omega, n_cuberoot, a2_over_n_fixed };

inline SweptVariable parse_swept(std::string_view s) {
  if (s == "Omega") return SweptVariable::Omega;
  if (s == "N") return SweptVariable::N;
  throw config_error("sweep variable must be 'Omega' or 'N'");
}

inline std::string_view to_string(SweptVariable v) { return v == SweptVariable::Omega ? "Omega" : "N"; }

inline AmplitudeRule parse_amplitude_rule(std::string_view s) {
  if (s == "fixed") return AmplitudeRule::fixed;
  if (s == "sqrt_omega") return AmplitudeRule::sqrt_omega;
  if (s == "n_cuberoot") return AmplitudeRule::n_cuberoot;
  if (s == "a2_over_n_fixed") return AmplitudeRule::a2_over_n_fixed;
  throw config_error("unknown amplitude rule '" + std::string(s) + "'");
}

inline std::string_view to_string(AmplitudeRule r) {
  switch (r) {
    case AmplitudeRule::fixed: return "fixed";
    case AmplitudeRule::sqrt_omega: return "sqrt_omega";
    case AmplitudeRule::n_cuberoot: return "n_cuberoot";
    case AmplitudeRule::a2_over_n_fixed: return "a2_over_n_fixed";
  }
  return "?";
}

struct SweepSpec {
  SweptVariable swept = SweptVariable::N;
  std::vector<double> values;
  AmplitudeRule rule = AmplitudeRule::fixed;
  double amplitude = 1.0;  // A, the rule's prefactor, or A^2/N
  int trials = 100;
  std::uint64_t base_seed = 0;
  Distribution distribution = Distribution::gaussian;
  double window = 1.0;
  std::size_t samples = 10001;         // grid size for Omega sweeps before refinement
  double hf_points_per_radian = 10.0;  // Omega sweeps keep Omega*h <= 1/this

  void validate() const {
    if (values.size() < 4) throw config_error("a sweep needs at least four points");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0)) throw config_error("sweep values must be positive");
      if (i > 0 && !(values[i] > values[i - 1])) throw config_error("sweep values must be ascending");
    }
    if (trials < 1) throw config_error("trials must be positive");
    if (swept == SweptVariable::N && trials < 50) throw config_error("white-noise sweeps need at least 50 trials");
    if (!(window > 0.0)) throw config_error("window must be positive");
    if (samples < 2) throw config_error("samples must be at least 2");
    const bool omega_rule = rule == AmplitudeRule::sqrt_omega;
    const bool n_rule = rule == AmplitudeRule::n_cuberoot || rule == AmplitudeRule::a2_over_n_fixed;
    if (omega_rule && swept != SweptVariable::Omega) throw config_error("sqrt_omega applies to Omega sweeps");
    if (n_rule && swept != SweptVariable::N) throw config_error(std::string(to_string(rule)) + " applies to N sweeps");
  }

  double amplitude_at(double x) const {
    switch (rule) {
      case AmplitudeRule::fixed: return amplitude;
      case AmplitudeRule::sqrt_omega: return amplitude * std::sqrt(x);
      case AmplitudeRule::n_cuberoot: return amplitude * std::cbrt(x);
      case AmplitudeRule::a2_over_n_fixed: return std::sqrt(amplitude * x);
    }
    return amplitude;
  }

  Grid grid_at(double x) const {
    if (swept == SweptVariable::N) {
      const auto n = static_cast<std::size_t>(std::llround(x));
      if (n < 1 || static_cast<double>(n) != x) throw config_error("N sweep values must be positive integers");
      return {0.0, window, n + 1};
    }
    const double need = std::ceil(hf_points_per_radian * x * window);
    return {0.0, window, std::max(samples, static_cast<std::size_t>(need) + 1)};
  }
};

struct SweepPoint {
  double x = 0.0;
  double amplitude = 0.0;
  std::size_t samples = 0;
  double rms = 0.0;
  std::vector<double> rms_by_theta;
  int used_trials = 0;
  int ill_conditioned = 0;
  bool skipped = false;
};

struct SweepResult {
  std::vector<std::string> theta_names;
  std::vector<SweepPoint> points;
  std::optional<SlopeReport> fit;  // absent when fewer than two points survive
  std::string csv;

  bool strictly_decreasing() const {
    for (std::size_t i = 1; i < points.size(); ++i)
      if (!(points[i].rms < points[i - 1].rms)) return false;
    return true;
  }
};

namespace detail {
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct TrialOutcome {
  std::vector<double> error;
  bool ok = false;
};
}  // namespace detail

/// Per sweep point: `trials` estimates on fresh noise over the window [0, window].
/// Error statistic is the RMS over trials of the Euclidean parameter error.
inline SweepResult run_sweep(const SignalModel& model, const CompiledEstimator& est, const SweepSpec& spec) {
  spec.validate();
  SweepResult out;
  out.theta_names = est.theta_names;
  const std::vector<double> truth = model.true_unknowns();
  const std::size_t rho = est.size();
  std::string csv = "point,trial,theta_name,error\n";

  for (std::size_t p = 0; p < spec.values.size(); ++p) {
    const double x = spec.values[p];
    const Grid grid = spec.grid_at(x);
    SweepPoint pt;
    pt.x = x;
    pt.amplitude = spec.amplitude_at(x);
    pt.samples = grid.n;
    const SampledSignal clean = sample_solution(model.spec, grid);
    const EstimatorPlan plan(est, grid.n - 1, grid.step());
    const double floor = est.divisor_floor * row_scale(plan.assemble(clean.values).A);

    std::vector<detail::TrialOutcome> outcomes(static_cast<std::size_t>(spec.trials));
    parallel_for(outcomes.size(), [&](std::size_t trial) {
      const std::uint64_t seed = derive_seed(spec.base_seed, p, trial);
      SampledSignal noise;
      if (spec.swept == SweptVariable::N) {
        noise = gen_white({pt.amplitude, grid.n - 1, spec.distribution, seed}, grid);
      } else {
        Rng rng(seed);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        noise = gen_hf({{{pt.amplitude, x, phase(rng)}}}, grid);
      }
      const SampledSignal y = mix(clean, noise);
      const EstimateResult r = solve_assembled(plan.assemble(y.values), plan.window(), floor);
      auto& o = outcomes[trial];
      o.ok = r.status == EstimateStatus::ok;
      o.error.resize(rho);
      for (std::size_t i = 0; i < rho; ++i) o.error[i] = r.theta_hat[i] - truth[i];
    });

    double sum_sq = 0.0;
    pt.rms_by_theta.assign(rho, 0.0);
    for (std::size_t trial = 0; trial < outcomes.size(); ++trial) {
      const auto& o = outcomes[trial];
      if (!o.ok) {
        ++pt.ill_conditioned;
        continue;
      }
      ++pt.used_trials;
      for (std::size_t i = 0; i < rho; ++i) {
        sum_sq += o.error[i] * o.error[i];
        pt.rms_by_theta[i] += o.error[i] * o.error[i];
        csv += std::to_string(p) + ',' + std::to_string(trial) + ',' + est.theta_names[i] + ',' +
               detail::format_double(o.error[i]) + '\n';
      }
    }
    if (pt.used_trials == 0) {
      pt.skipped = true;
    } else {
      const double n = static_cast<double>(pt.used_trials);
      pt.rms = std::sqrt(sum_sq / n);
      for (auto& v : pt.rms_by_theta) v = std::sqrt(v / n);
    }
    out.points.push_back(std::move(pt));
  }

  std::vector<std::pair<double, double>> xy;
  for (const auto& pt : out.points)
    if (!pt.skipped && pt.rms > 0.0) xy.emplace_back(pt.x, pt.rms);
  if (xy.size() >= 2) out.fit = fit_loglog(xy);
  out.csv = std::move(csv);
  return out;
}

struct HfJammer {
  double amplitude_ratio = 10.0;  // relative to A1
  double omega_ratio = 1e4;       // relative to the carrier
  double phi = 0.0;
};

/// Binary ASK: bit b is sent as A_b sin(carrier t + phase) over one symbol.
struct DemodSpec {
  int symbols = 32;
  std::size_t samples_per_symbol = 2000;
  double symbol_time = 1.0;
  double carrier = 2.0 * std::numbers::pi;
  double phase = 0.0;
  double A0 = 0.0;
  double A1 = 1.0;
  std::optional<double> window;  // defaults to the symbol time
  bool known_phase = false;
  std::optional<double> snr_db;  // white noise at this per-sample SNR
  Distribution distribution = Distribution::gaussian;
  std::optional<HfJammer> jammer;
  std::uint64_t seed = 0;

  void validate() const {
    if (symbols < 1) throw config_error("symbols must be positive");
    if (samples_per_symbol < 2) throw config_error("samples_per_symbol must be at least 2");
    if (!(symbol_time > 0.0) || !(carrier > 0.0)) throw config_error("symbol_time and carrier must be positive");
    if (A0 == A1) throw config_error("the two amplitudes must differ");
    if (window && std::abs(*window - symbol_time) > 1e-12 * symbol_time)
      throw config_error("the estimation window must equal the symbol time");
    if (known_phase) {
      const double cycles = carrier * symbol_time / (2.0 * std::numbers::pi);
      if (std::abs(cycles - std::round(cycles)) > 1e-9)
        throw config_error("known_phase needs a whole number of carrier cycles per symbol");
    }
    if (jammer && (!(jammer->omega_ratio > 0.0))) throw config_error("jammer omega_ratio must be positive");
  }
};

struct BerReport {
  int symbols = 0;
  int errors = 0;
  double ber = 0.0;
  double per_sample_snr_db = 0.0;
};

struct DemodResult {
  BerReport report;
  std::vector<int> bits;
  std::vector<double> estimates;
  std::vector<int> decisions;
  std::string csv;
};

/// Tone estimator for the carrier; amplitude only when the phase is known.
inline CompiledEstimator carrier_estimator(const DemodSpec& spec) {
  ModelSpec m;
  m.kind = ModelKind::trig_sum;
  m.known_phase = spec.known_phase;
  m.params = {{"A", 1.0}, {"omega", spec.carrier}, {"phi", spec.phase}};
  Rng rng(spec.seed);
  const SignalModel model = build_model(m);
  return compile(strictify(derive_linear_system(model, rng)));
}

inline std::vector<int> random_bits(int count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x62697473ULL));
  std::bernoulli_distribution coin(0.5);
  std::vector<int> bits(static_cast<std::size_t>(count));
  for (auto& b : bits) b = coin(rng) ? 1 : 0;
  return bits;
}

inline SampledSignal ask_stream(const DemodSpec& spec, const std::vector<int>& bits) {
  const std::size_t per = spec.samples_per_symbol;
  const Grid grid{0.0, spec.symbol_time * static_cast<double>(bits.size()), bits.size() * per + 1};
  std::vector<double> v(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const std::size_t k = std::min(i / per, bits.size() - 1);
    const double a = bits[k] ? spec.A1 : spec.A0;
    v[i] = a * std::sin(spec.carrier * grid.time(i) + spec.phase);
  }
  return SampledSignal(grid, std::move(v));
}

inline DemodResult run_demodulation(const DemodSpec& spec, const CompiledEstimator& est) {
  spec.validate();
  DemodResult out;
  out.bits = random_bits(spec.symbols, spec.seed);
  const SampledSignal clean = ask_stream(spec, out.bits);
  const Grid grid = clean.grid();
  const double signal_power = mean_power(clean);

  SampledSignal noise(grid, std::vector<double>(grid.n, 0.0));
  if (spec.snr_db) {
    const double sigma = std::sqrt(signal_power / std::pow(10.0, *spec.snr_db / 10.0));
    noise = mix(noise, gen_white({sigma, grid.n - 1, spec.distribution, derive_seed(spec.seed, 0x6e6f697365ULL)}, grid));
  }
  if (spec.jammer) {
    const HfJammer& j = *spec.jammer;
    noise = mix(noise, gen_hf({{{j.amplitude_ratio * std::max(std::abs(spec.A0), std::abs(spec.A1)),
                                 j.omega_ratio * spec.carrier, j.phi}}},
                              grid));
  }
  const double noise_power = mean_power(noise);
  const SampledSignal y = mix(clean, noise);

  const auto results = sliding_estimate(est, y, spec.symbol_time, spec.symbol_time);
  if (results.size() != out.bits.size()) throw invalid_input("window/symbol-rate mismatch");
  const double threshold = 0.5 * (spec.A0 + spec.A1);
  const bool high_is_one = spec.A1 > spec.A0;
  std::string csv = "index,bit,estimate,decision\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& th = results[k].theta_hat;
    const double a = spec.known_phase ? th[0] : std::hypot(th[0], th[1]);
    const int decision = (a > threshold) == high_is_one ? 1 : 0;
    out.estimates.push_back(a);
    out.decisions.push_back(decision);
    if (decision != out.bits[k]) ++out.report.errors;
    csv += std::to_string(k) + ',' + std::to_string(out.bits[k]) + ',' + detail::format_double(a) + ',' +
           std::to_string(decision) + '\n';
  }
  out.report.symbols = static_cast<int>(results.size());
  out.report.ber = static_cast<double>(out.report.errors) / static_cast<double>(out.report.symbols);
  out.report.per_sample_snr_db =
      noise_power > 0.0 ? snr_db(signal_power, noise_power) : std::numeric_limits<double>::infinity();
  out.csv = std::move(csv);
  return out;
}

}  // namespace algest
