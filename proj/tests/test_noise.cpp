#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "algest/estimator.hpp"
#include "algest/experiment.hpp"
#include "algest/noise.hpp"

using namespace algest;

namespace {

constexpr double pi = std::numbers::pi;

double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size() - 1);
}

WhiteNoiseSpec white(double a, std::size_t n, Distribution d, std::uint64_t seed) {
  WhiteNoiseSpec w;
  w.A = a;
  w.N = n;
  w.distribution = d;
  w.seed = seed;
  return w;
}

}  // namespace

TEST(GenHf, ToneStartsAtZero) {
  const Grid g{0.0, 1.0, 10001};
  const SampledSignal w = gen_hf({{{1.0, 1e3, 0.0}}}, g);
  EXPECT_EQ(w.values.front(), 0.0);
}

TEST(GenHf, GridMeanIsBoundedByTwoOverOmega) {
  const Grid g{0.0, 1.0, 100001};
  for (double omega : {1e2, 1e3, 1e4}) {
    const SampledSignal w = gen_hf({{{1.0, omega, 0.0}}}, g);
    double mean = 0.0;
    for (double v : w.values) mean += v;
    mean /= static_cast<double>(w.size());
    EXPECT_LE(std::abs(mean), 2.0 / omega + 1e-4) << omega;
    EXPECT_NEAR(mean, (1.0 - std::cos(omega)) / omega, 1e-4) << omega;
  }
}

TEST(GenHf, AntiphaseTonesCancel) {
  const Grid g{0.0, 1.0, 4097};
  const SampledSignal w = gen_hf({{{2.0, 300.0, 0.3}, {2.0, 300.0, 0.3 + pi}}}, g);
  for (double v : w.values) EXPECT_NEAR(v, 0.0, 1e-13);
}

TEST(GenHf, RejectsNonpositiveFrequency) {
  const Grid g{0.0, 1.0, 11};
  EXPECT_THROW(gen_hf({{{1.0, 0.0, 0.0}}}, g), invalid_input);
  EXPECT_THROW(gen_hf({{{1.0, -5.0, 0.0}}}, g), invalid_input);
}

TEST(GenWhite, ZeroAmplitudeGivesZeros) {
  const SampledSignal w = gen_white(white(0.0, 100, Distribution::gaussian, 3), {0.0, 1.0, 101});
  for (double v : w.values) EXPECT_EQ(v, 0.0);
}

TEST(GenWhite, RademacherSupport) {
  for (std::uint64_t seed : {1ULL, 2ULL, 77ULL}) {
    const SampledSignal w = gen_white(white(0.7, 999, Distribution::rademacher, seed), {0.0, 1.0, 1000});
    for (double v : w.values) EXPECT_TRUE(v == 0.7 || v == -0.7);
  }
}

TEST(GenWhite, UniformSupport) {
  const SampledSignal w = gen_white(white(1.0, 9999, Distribution::uniform, 5), {0.0, 1.0, 10000});
  for (double v : w.values) EXPECT_LE(std::abs(v), std::sqrt(3.0));
}

TEST(GenWhite, VarianceOverAMillionSamples) {
  const std::size_t n = 1000000;
  for (auto d : {Distribution::gaussian, Distribution::uniform, Distribution::rademacher}) {
    const SampledSignal w = gen_white(white(2.0, n, d, 11), {0.0, 1.0, n + 1});
    EXPECT_NEAR(sample_variance(w.values), 4.0, 0.04) << to_string(d);
  }
}

TEST(GenWhite, GridSizeMustMatch) {
  EXPECT_THROW(gen_white(white(1.0, 100, Distribution::gaussian, 1), {0.0, 1.0, 100}), invalid_input);
}

TEST(GenWhite, UnsupportedDistribution) {
  EXPECT_THROW(parse_distribution("cauchy"), invalid_input);
  EXPECT_EQ(parse_distribution("rademacher"), Distribution::rademacher);
}

TEST(GenWhiteProperty, SameSeedIsBitExact) {
  for (auto d : {Distribution::gaussian, Distribution::uniform, Distribution::rademacher}) {
    const auto a = gen_white(white(1.5, 5000, d, 42), {0.0, 1.0, 5001});
    const auto b = gen_white(white(1.5, 5000, d, 42), {0.0, 1.0, 5001});
    const auto c = gen_white(white(1.5, 5000, d, 43), {0.0, 1.0, 5001});
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
  }
}

TEST(GenWhiteProperty, KernelSumVarianceLaw) {
  // Var[(1/N) sum K_i A n_i] = (A^2/N) (1/N) sum K_i^2
  const std::size_t n = 1000;
  const double a = 3.0;
  std::vector<double> kernel(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double tau = static_cast<double>(i) / static_cast<double>(n);
    kernel[i] = (1.0 - tau) * tau * tau;
  }
  double k2 = 0.0;
  for (double k : kernel) k2 += k * k;
  const double predicted = a * a / n * (k2 / n);
  for (auto d : {Distribution::gaussian, Distribution::rademacher}) {
    std::vector<double> stat;
    for (int trial = 0; trial < 800; ++trial) {
      const auto w = gen_white(white(a, n, d, derive_seed(99, trial)), {0.0, 1.0, n + 1});
      double acc = 0.0;
      for (std::size_t i = 0; i <= n; ++i) acc += kernel[i] * w.values[i];
      stat.push_back(acc / n);
    }
    EXPECT_NEAR(sample_variance(stat) / predicted, 1.0, 0.15) << to_string(d);
  }
}

TEST(GenHfProperty, KernelIntegralsDecayAsOneOverOmega) {
  const std::vector<std::pair<int, int>> kernels{{2, 0}, {1, 1}, {3, 0}};
  for (const auto& [k, nu] : kernels) {
    std::vector<std::pair<double, double>> pts;
    for (double omega : {1e2, 1e3, 1e4, 1e5}) {
      const Grid g{0.0, 1.0, static_cast<std::size_t>(10 * omega) + 1};
      double worst = 0.0;
      for (int p = 0; p < 16; ++p) {
        const SampledSignal w = gen_hf({{{1.0, omega, 2 * pi * p / 16}}}, g);
        worst = std::max(worst, std::abs(kernel_eval({{Rational(1), k, nu, Applies::signal}}, w, 1.0)));
      }
      pts.emplace_back(omega, worst);
    }
    const SlopeReport fit = fit_loglog(pts);
    EXPECT_NEAR(fit.slope, -1.0, 0.1) << "k=" << k << " nu=" << nu;
  }
}

TEST(Mix, Examples) {
  const Grid g{0.0, 1.0, 1001};
  const SampledSignal x = gen_hf({{{1.0, 7.0, 0.2}}}, g);
  const SampledSignal zero(g, std::vector<double>(g.n, 0.0));
  EXPECT_EQ(mix(x, zero).values, x.values);

  const SampledSignal w = gen_white(white(0.25, 1000, Distribution::uniform, 4), g);
  const SampledSignal y = mix(x, w);
  // exact up to the rounding of one addition
  for (std::size_t i = 0; i < g.n; ++i)
    EXPECT_LE(std::abs(y.values[i] - w.values[i] - x.values[i]), 2e-16 * std::abs(y.values[i]) + 1e-300);
}

TEST(Mix, MismatchedGridsAreRejected) {
  const SampledSignal a({0.0, 1.0, 11}, std::vector<double>(11, 1.0));
  const SampledSignal b({0.0, 1.0, 12}, std::vector<double>(12, 1.0));
  const SampledSignal c({0.0, 2.0, 11}, std::vector<double>(11, 1.0));
  EXPECT_THROW(mix(a, b), invalid_input);
  EXPECT_THROW(mix(a, c), invalid_input);
}

TEST(Snr, ToneUnderStrongGaussianNoise) {
  EXPECT_NEAR(snr_db(0.5, 100.0), -23.0103, 1e-4);
  const std::size_t n = 200000;
  const Grid g{0.0, 1.0, n + 1};
  const SampledSignal x = gen_hf({{{1.0, 2 * pi * 50, 0.0}}}, g);
  const SampledSignal w = gen_white(white(10.0, n, Distribution::gaussian, 8), g);
  EXPECT_NEAR(snr_db(mean_power(x), mean_power(w)), -23.0, 0.1);
}

TEST(DeriveSeed, DistinctCoordinatesGiveDistinctSeeds) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}
