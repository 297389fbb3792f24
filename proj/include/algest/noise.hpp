#pragma once

// Additive perturbations: finite sums of high-frequency sinusoids and
// discrete white noise w_i = A n_i with i.i.d. zero-mean unit-variance n_i.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "algest/error.hpp"
#include "algest/sigmodel.hpp"

namespace algest {

struct HfTone {
  double A = 0.0;
  double Omega = 1.0;  // rad/s
  double phi = 0.0;    // [0, 2 pi)
};

struct HfSinusoidSpec {
  std::vector<HfTone> tones;
};

enum class Distribution { gaussian, uniform, rademacher };

inline Distribution parse_distribution(std::string_view s) {
  if (s == "gaussian") return Distribution::gaussian;
  if (s == "uniform") return Distribution::uniform;
  if (s == "rademacher") return Distribution::rademacher;
  throw invalid_input("unsupported noise distribution '" + std::string(s) + "'");
}

inline std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::gaussian: return "gaussian";
    case Distribution::uniform: return "uniform";
    case Distribution::rademacher: return "rademacher";
  }
  return "?";
}

struct WhiteNoiseSpec {
  double A = 1.0;
  std::size_t N = 1000;  // grid has N + 1 samples
  Distribution distribution = Distribution::gaussian;
  std::uint64_t seed = 0;
};

/// splitmix64 finalizer; combines a base seed with trial coordinates.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

inline SampledSignal gen_hf(const HfSinusoidSpec& spec, const Grid& grid) {
  grid.validate();
  for (const auto& t : spec.tones)
    if (!(t.Omega > 0.0)) throw invalid_input("high-frequency tone needs Omega > 0");
  std::vector<double> v(grid.n, 0.0);
  for (const auto& t : spec.tones)
    for (std::size_t i = 0; i < grid.n; ++i) v[i] += t.A * std::sin(t.Omega * grid.time(i) + t.phi);
  return SampledSignal(grid, std::move(v));
}

/// Unit-variance zero-mean draws, deterministic under the generator state.
inline void fill_unit_noise(std::vector<double>& out, Distribution d, Rng& rng) {
  switch (d) {
    case Distribution::gaussian: {
      std::normal_distribution<double> g(0.0, 1.0);
      for (auto& x : out) x = g(rng);
      break;
    }
    case Distribution::uniform: {
      const double half = std::sqrt(3.0);
      std::uniform_real_distribution<double> u(-half, half);
      for (auto& x : out) x = u(rng);
      break;
    }
    case Distribution::rademacher: {
      for (std::size_t i = 0; i < out.size();) {
        std::uint64_t bits = rng();
        for (int b = 0; b < 64 && i < out.size(); ++b, ++i, bits >>= 1) out[i] = (bits & 1U) ? 1.0 : -1.0;
      }
      break;
    }
  }
}

inline SampledSignal gen_white(const WhiteNoiseSpec& spec, const Grid& grid) {
  grid.validate();
  if (grid.n != spec.N + 1)
    throw invalid_input("white noise of size N = " + std::to_string(spec.N) + " needs a grid of N + 1 samples");
  std::vector<double> v(grid.n);
  Rng rng(spec.seed);
  fill_unit_noise(v, spec.distribution, rng);
  for (auto& x : v) x *= spec.A;
  return SampledSignal(grid, std::move(v));
}

inline bool same_grid(const SampledSignal& a, const SampledSignal& b) {
  return a.size() == b.size() && a.t0 == b.t0 && a.t1 == b.t1;
}

/// Pointwise sum: what the sensor delivers is x + w.
template <typename... Noise>
SampledSignal mix(const SampledSignal& clean, const Noise&... noise) {
  SampledSignal out = clean;
  auto add = [&out](const SampledSignal& w) {
    if (!same_grid(out, w)) throw invalid_input("cannot mix signals on different grids");
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += w.values[i];
  };
  (add(noise), ...);
  return out;
}

inline double mean_power(const SampledSignal& x) {
  double acc = 0.0;
  for (double v : x.values) acc += v * v;
  return acc / static_cast<double>(x.size());
}

/// Per-sample SNR in dB from the two powers.
inline double snr_db(double signal_power, double noise_power) {
  return 10.0 * std::log10(signal_power / noise_power);
}

}  // namespace algest
