// End-to-end acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "algest/diffop.hpp"
#include "algest/estimator.hpp"
#include "algest/experiment.hpp"
#include "algest/identify.hpp"
#include "support.hpp"

using namespace algest;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ModelSpec spec_of(ModelKind k, ParamValues p) {
  ModelSpec m;
  m.kind = k;
  m.params = std::move(p);
  return m;
}

ModelSpec tone_spec(double a = 3.0, double w = 2 * pi, double phi = pi / 6) {
  return spec_of(ModelKind::trig_sum, {{"A", a}, {"omega", w}, {"phi", phi}});
}

CompiledEstimator estimator_for(const SignalModel& m) {
  Rng rng(1);
  return derive(m, rng).estimator;
}

SweepResult white_sweep(AmplitudeRule rule, double amplitude, Distribution dist, std::uint64_t seed) {
  const SignalModel m = build_model(tone_spec());
  SweepSpec s;
  s.swept = SweptVariable::N;
  s.values = {1e3, 1e4, 1e5, 1e6};
  s.rule = rule;
  s.amplitude = amplitude;
  s.trials = 100;
  s.distribution = dist;
  s.base_seed = seed;
  return run_sweep(m, estimator_for(m), s);
}

SweepResult hf_sweep(AmplitudeRule rule, std::uint64_t seed) {
  const SignalModel m = build_model(tone_spec());
  SweepSpec s;
  s.swept = SweptVariable::Omega;
  s.values = {1e2, 1e3, 1e4, 1e5};
  s.rule = rule;
  s.amplitude = 1.0;
  s.trials = 20;
  s.base_seed = seed;
  return run_sweep(m, estimator_for(m), s);
}

std::string rms_list(const SweepResult& r) {
  std::string s;
  for (const auto& p : r.points) s += fmt("%s%.3g", s.empty() ? "" : " ", p.rms);
  return s;
}

bool any_skipped(const SweepResult& r) {
  for (const auto& p : r.points)
    if (p.skipped || p.ill_conditioned > 0) return true;
  return false;
}

// 1
Verdict algebra_suite() {
  std::mt19937_64 rng(20240601);
  const RatFunc s(Poly::s());
  const DiffOp D = DiffOp::d();
  int failures = 0;
  const int cases = 500;
  for (int i = 0; i < cases; ++i) {
    const DiffOp a = testing::random_op(rng);
    const DiffOp b = testing::random_op(rng);
    const DiffOp c = testing::random_op(rng);
    const RatFunc f = testing::random_ratfunc(rng);
    const SExpr e = testing::random_sexpr(rng);
    bool ok = compose(compose(a, b), c) == compose(a, compose(b, c));
    ok = ok && compose(a, b + c) == compose(a, b) + compose(a, c);
    ok = ok && compose(a + b, c) == compose(a, c) + compose(b, c);
    ok = ok && compose(DiffOp::identity(), a) == a && compose(a, DiffOp::identity()) == a;
    ok = ok && compose(D, DiffOp::multiply(f)) - compose(DiffOp::multiply(f), D) == DiffOp::multiply(f.derivative());
    ok = ok && op_apply_rat(compose(a, b), f) == op_apply_rat(a, op_apply_rat(b, f));
    ok = ok && op_apply_formal(compose(a, b), e) == op_apply_formal(a, op_apply_formal(b, e));
    if (!ok) ++failures;
  }
  const bool commutator = compose(D, DiffOp::multiply(s)) - compose(DiffOp::multiply(s), D) == DiffOp::identity();
  return {failures == 0 && commutator,
          fmt("%d/%d randomized cases exact, commutator %s", cases - failures, cases, commutator ? "= 1" : "!= 1")};
}

// 2
Verdict rank_theorem() {
  Rng rng(77);
  std::uniform_real_distribution<double> amp(0.2, 5.0);
  std::uniform_real_distribution<double> freq(0.3, 12.0);
  std::uniform_real_distribution<double> phase(0.0, 2 * pi);
  int good = 0;
  int total = 0;
  for (int i = 0; i < 20; ++i) {
    const std::vector<ModelSpec> specs{
        spec_of(ModelKind::constant, {{"theta", amp(rng)}}),
        tone_spec(amp(rng), freq(rng), phase(rng)),
        spec_of(ModelKind::sinc, {{"omega", freq(rng)}}),
        spec_of(ModelKind::raised_cosine, {{"omega", freq(rng)}}),
    };
    for (const auto& sp : specs) {
      const SignalModel m = build_model(sp);
      ++total;
      if (rank_M(build_M(m), m, rng) == m.N() + m.M()) ++good;
    }
  }
  return {good == total, fmt("rank = N+M on %d/%d draws (constant, tone, sinc, raised cosine)", good, total)};
}

// 3
Verdict clean_tone() {
  const ModelSpec sp = tone_spec();
  const SignalModel m = build_model(sp);
  const CompiledEstimator est = estimator_for(m);
  auto amp_phase_error = [&](std::size_t n) {
    const EstimateResult r = estimate(est, sample_solution(sp, {0.0, 1.0, n}), 1.0);
    const double a = std::hypot(r.theta_hat[0], r.theta_hat[1]);
    const double phi = std::atan2(r.theta_hat[0], r.theta_hat[1]);
    return std::max(std::abs(a - 3.0) / 3.0, std::abs(phi - pi / 6) / (pi / 6));
  };
  const double e = amp_phase_error(10000);
  bool rate_ok = true;
  std::string ratios;
  for (std::size_t n : {1000, 5000, 20000}) {
    const double ratio = amp_phase_error(n + 1) / amp_phase_error(2 * n + 1);
    rate_ok = rate_ok && ratio >= 3.0 && ratio <= 5.0;
    ratios += fmt("%s%.3f", ratios.empty() ? "" : " ", ratio);
  }
  return {e < 1e-5 && rate_ok, fmt("rel error %.2e at n=1e4; error ratio on doubling n: %s", e, ratios.c_str())};
}

// 4
Verdict frequency() {
  ModelSpec sp = tone_spec(1.0, 10.0, 0.0);
  sp.unknown_frequency = true;
  const SignalModel m = build_model(sp);
  const EstimateResult r = estimate(estimator_for(m), sample_solution(sp, {0.0, 1.0, 100001}), 1.0);
  const double rel = std::abs(r.theta_hat[0] - 100.0) / 100.0;
  return {rel < 1e-4 && r.status == EstimateStatus::ok, fmt("w^2 = %.9f, rel error %.2e", r.theta_hat[0], rel)};
}

// 5
Verdict hf_fixed() {
  const SweepResult r = hf_sweep(AmplitudeRule::fixed, 501);
  if (!r.fit || any_skipped(r)) return {false, "sweep points skipped"};
  const bool ok = std::abs(r.fit->slope + 1.0) <= 0.15 && r.fit->r2 >= 0.98;
  return {ok, fmt("slope %.3f, r2 %.4f, rms %s", r.fit->slope, r.fit->r2, rms_list(r).c_str())};
}

// 6
Verdict hf_sqrt() {
  const SweepResult r = hf_sweep(AmplitudeRule::sqrt_omega, 601);
  if (!r.fit || any_skipped(r)) return {false, "sweep points skipped"};
  const bool ok = std::abs(r.fit->slope + 0.5) <= 0.15 && r.strictly_decreasing();
  return {ok, fmt("slope %.3f, r2 %.4f, strictly decreasing %s, rms %s", r.fit->slope, r.fit->r2,
                  r.strictly_decreasing() ? "yes" : "no", rms_list(r).c_str())};
}

// 7; the gaussian endpoint feeds criterion 9
double white_endpoint = 0.0;

Verdict white_fixed() {
  const SweepResult g = white_sweep(AmplitudeRule::fixed, 1.0, Distribution::gaussian, 701);
  const SweepResult r = white_sweep(AmplitudeRule::fixed, 1.0, Distribution::rademacher, 702);
  if (!g.fit || !r.fit || any_skipped(g) || any_skipped(r)) return {false, "sweep points skipped"};
  white_endpoint = g.points.back().rms;
  const bool ok = std::abs(g.fit->slope + 0.5) <= 0.15 && std::abs(r.fit->slope + 0.5) <= 0.15;
  return {ok, fmt("gaussian slope %.3f (rms %s), rademacher slope %.3f (rms %s)", g.fit->slope, rms_list(g).c_str(),
                  r.fit->slope, rms_list(r).c_str())};
}

// 8
Verdict white_cuberoot() {
  const SweepResult r = white_sweep(AmplitudeRule::n_cuberoot, 1.0, Distribution::gaussian, 801);
  if (!r.fit || any_skipped(r)) return {false, "sweep points skipped"};
  const bool ok = std::abs(r.fit->slope + 1.0 / 6.0) <= 0.1 && r.strictly_decreasing();
  return {ok, fmt("slope %.3f, strictly decreasing %s, rms %s", r.fit->slope, r.strictly_decreasing() ? "yes" : "no",
                  rms_list(r).c_str())};
}

// 9
Verdict white_appreciable() {
  if (white_endpoint == 0.0) white_fixed();
  const SweepResult r = white_sweep(AmplitudeRule::a2_over_n_fixed, 1.0, Distribution::gaussian, 901);
  if (!r.fit || any_skipped(r)) return {false, "sweep points skipped"};
  const double last = r.points.back().rms;
  const bool ok = std::abs(r.fit->slope) <= 0.1 && last > 10.0 * white_endpoint;
  return {ok, fmt("A^2/N = 1: slope %.3f, final rms %.3g vs 10 x %.3g", r.fit->slope, last, white_endpoint)};
}

// 10
Verdict demodulation() {
  int clean_runs = 0;
  double snr_sum = 0.0;
  for (int run = 0; run < 100; ++run) {
    DemodSpec d;
    d.snr_db = -10.0;
    d.seed = derive_seed(1001, run);
    const DemodResult r = run_demodulation(d, carrier_estimator(d));
    clean_runs += r.report.errors == 0;
    snr_sum += r.report.per_sample_snr_db;
  }
  // At 2000 samples/symbol a tone at 1e4 x carrier sits on an exact alias of
  // the sampling grid; the jammer runs sample finely enough to resolve it.
  int jam_clean = 0;
  double worst = 0.0;
  for (int run = 0; run < 100; ++run) {
    DemodSpec d;
    d.samples_per_symbol = 200000;
    d.seed = derive_seed(1002, run);
    std::uniform_real_distribution<double> phase(0.0, 2 * pi);
    Rng rng(derive_seed(1003, run));
    d.jammer = HfJammer{10.0, 1e4, phase(rng)};
    const DemodResult r = run_demodulation(d, carrier_estimator(d));
    jam_clean += r.report.errors == 0;
    for (std::size_t k = 0; k < r.bits.size(); ++k) worst = std::max(worst, std::abs(r.estimates[k] - r.bits[k]));
  }
  const bool ok = clean_runs >= 95 && jam_clean == 100;
  return {ok, fmt("-10 dB white (mean measured %.2f dB): BER 0 in %d/100; 10x jammer at 1e4 x carrier: BER 0 in "
                  "%d/100, worst amplitude error %.2e",
                  snr_sum / 100.0, clean_runs, jam_clean, worst)};
}

// 11
Verdict divisor() {
  const double w = 2 * pi;
  const ModelSpec sp = tone_spec(3.0, w, pi / 6);
  const CompiledEstimator est = estimator_for(build_model(sp));
  const SampledSignal y = sample_solution(sp, {0.0, 1.0, 10001});
  double dev_cubic = 0.0;
  double dev_quartic = 0.0;
  for (int i = 1; i <= 10; ++i) {
    const double t = 0.1 * i;
    const EstimateResult r = estimate(est, y, t);
    dev_cubic = std::max(dev_cubic, std::abs(r.divisor + w * t * t * t / 4.0));
    dev_quartic = std::max(dev_quartic, std::abs(r.divisor + w * t * t * t * t / 4.0));
  }
  bool tiny_ill = true;
  for (double t : {1e-3, 5e-4, 1e-4, 0.0}) tiny_ill = tiny_ill && estimate(est, y, t).status == EstimateStatus::ill_conditioned;
  bool rest_ok = true;
  for (int i = 1; i <= 10; ++i) rest_ok = rest_ok && estimate(est, y, 0.1 * i).status == EstimateStatus::ok;
  // Tolerance for "within quadrature error": the divisor is assembled from
  // exact polynomial kernels, so anything beyond 1e-6 w is structural.
  const bool cubic_ok = dev_cubic <= 1e-6 * w;
  const bool quartic_ok = dev_quartic <= 1e-9 * w;
  return {cubic_ok && tiny_ill && rest_ok,
          fmt("max |det + w t^3/4| = %.3g (%s); max |det + w t^4/4| = %.3g (%s); ill_conditioned for t <= 1e-3: %s; "
              "ok for t in [0.1, 1]: %s",
              dev_cubic, cubic_ok ? "match" : "no match", dev_quartic, quartic_ok ? "match" : "no match",
              tiny_ill ? "yes" : "no", rest_ok ? "yes" : "no")};
}

// 12
Verdict determinism() {
  const SweepResult a = white_sweep(AmplitudeRule::fixed, 1.0, Distribution::gaussian, 1201);
  const SweepResult b = white_sweep(AmplitudeRule::fixed, 1.0, Distribution::gaussian, 1201);
  const SweepResult c = white_sweep(AmplitudeRule::fixed, 1.0, Distribution::gaussian, 1202);
  const SweepResult h1 = hf_sweep(AmplitudeRule::sqrt_omega, 1203);
  const SweepResult h2 = hf_sweep(AmplitudeRule::sqrt_omega, 1203);
  const bool same = a.csv == b.csv && h1.csv == h2.csv;
  const bool differs = a.csv != c.csv;
  return {same && differs, fmt("white and HF sweep CSVs byte-identical under equal seeds: %s (%zu + %zu bytes); "
                               "different seed changes output: %s",
                               same ? "yes" : "no", a.csv.size(), h1.csv.size(), differs ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "algebra suite", 10, algebra_suite},
      {2, "rank theorem", 30, rank_theorem},
      {3, "clean-signal exactness", 10, clean_tone},
      {4, "frequency estimation", 10, frequency},
      {5, "HF noise, fixed amplitude", 60, hf_fixed},
      {6, "HF noise, amplitude sqrt(Omega)", 60, hf_sqrt},
      {7, "white noise, fixed amplitude", 300, white_fixed},
      {8, "white noise, amplitude N^(1/3)", 300, white_cuberoot},
      {9, "white noise, A^2/N held fixed", 300, white_appreciable},
      {10, "ASK demodulation", 120, demodulation},
      {11, "divisor behavior", 10, divisor},
      {12, "determinism", 60, determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %s: %s [%.1f s of %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.title, v.detail.c_str(), secs,
                c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
