#pragma once

// Brute-force oracles: centroid-wander sampling, geometric overlap
// integration and estimator-coverage simulation.
//
// Random numbers come from a counter-based SplitMix64 stream:
//   key(seed, stream) = mix(seed ^ mix(stream))
//   word(i)           = mix(key + i * 0x9E3779B97F4A7C15)
//   uniform(i)        = ((word(i) >> 11) + 0.5) * 2^-53    in (0, 1)
// Work is split into fixed-size chunks with stream = chunk index, so results
// do not depend on how chunks are scheduled across threads.

#include "fso/estimation.hpp"
#include "fso/fading.hpp"
#include "fso/math.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

namespace fso {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
inline constexpr std::size_t kOracleChunk = 1 << 14;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kGoldenGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based stream; value i depends only on (seed, stream, i).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(splitmix64(seed ^ splitmix64(stream))) {}

  std::uint64_t word(std::uint64_t i) const { return splitmix64(key_ + i * kGoldenGamma); }
  double uniform(std::uint64_t i) const { return (static_cast<double>(word(i) >> 11) + 0.5) * 0x1.0p-53; }

  /// Sequential draws.
  double next_uniform() { return uniform(counter_++); }
  /// Box-Muller pair; both variates are standard normal.
  std::pair<double, double> next_normal_pair() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(2.0 * math::kPi * u2), r * std::sin(2.0 * math::kPi * u2)};
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Runs body(chunk, begin, end) over [0, total) in fixed chunks.
template <class Body>
void for_each_chunk(std::size_t total, unsigned threads, Body&& body) {
  const std::size_t chunks = (total + kOracleChunk - 1) / kOracleChunk;
  auto run = [&](std::size_t k) { body(k, k * kOracleChunk, std::min(total, (k + 1) * kOracleChunk)); };
  if (threads <= 1 || chunks <= 1) {
    for (std::size_t k = 0; k < chunks; ++k) run(k);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t k = t; k < chunks; k += threads) run(k);
    });
  for (auto& th : pool) th.join();
}

enum class Statistic { ks_distance, mean, variance, coverage };

struct OracleRun {
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  Statistic statistic = Statistic::mean;
  double value = 0.0;
  double ci95 = 0.0;
};

/// Centroid distances: Rayleigh for d = 0, Rician (two Gaussians) otherwise.
inline std::vector<double> sample_deflection(double sigma, double d, std::uint64_t seed, std::size_t n,
                                             unsigned threads = 1) {
  std::vector<double> r(n);
  for_each_chunk(n, threads, [&](std::size_t k, std::size_t b, std::size_t e) {
    CounterRng rng(seed, k);
    for (std::size_t i = b; i < e; ++i) {
      if (d == 0.0) {
        r[i] = sigma * std::sqrt(-2.0 * std::log(rng.next_uniform()));
      } else {
        const auto [gx, gy] = rng.next_normal_pair();
        r[i] = std::hypot(d + sigma * gx, sigma * gy);
      }
    }
  });
  return r;
}

/// Transmissivity samples tau = eta exp[-(r/r0)^gamma].
inline std::vector<double> sample_fading(const FadingModel& m, std::uint64_t seed, std::size_t n,
                                         unsigned threads = 1) {
  if (!m.fades()) return std::vector<double>(n, m.eta);
  auto r = sample_deflection(m.sigma, m.d, seed, n, threads);
  for (double& v : r) v = tau_of_deflection(m, v);
  return r;
}

/// Kolmogorov-Smirnov distance between samples and a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> samples, Cdf&& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

/// Power of a Gaussian beam of spot size w, displaced by r, falling on a disk
/// of radius a.  Composite Simpson in the radius, periodic trapezoid in angle.
inline double overlap_oracle(double r, double aperture, double w, int grid_n = 400) {
  if (grid_n < 2) throw std::invalid_argument("overlap_oracle: grid too coarse");
  const int nr = 2 * grid_n;
  const int nphi = 2 * grid_n;
  const double h = aperture / nr;
  const double dphi = 2.0 * math::kPi / nphi;
  const double norm = 2.0 / (math::kPi * w * w);
  double total = 0.0;
  for (int i = 0; i <= nr; ++i) {
    const double rho = i * h;
    double ring = 0.0;
    for (int j = 0; j < nphi; ++j) {
      const double phi = j * dphi;
      const double dist2 = rho * rho + r * r - 2.0 * rho * r * std::cos(phi);
      ring += std::exp(-2.0 * dist2 / (w * w));
    }
    ring *= dphi * rho;
    const double weight = (i == 0 || i == nr) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    total += weight * ring;
  }
  return norm * total * h / 3.0;
}

/// Fraction of simulated estimation rounds in which the worst-case noise
/// n_hat + w sigma_n falls below the true noise.  Only the residual
/// y - sqrt(tau) x = z is simulated.
inline OracleRun estimator_coverage(const EstimationConfig& c, const ChannelPoint& p, std::uint64_t seed,
                                    std::size_t trials, double w, unsigned threads = 1) {
  validate(c);
  const bool het = c.detection == Detection::heterodyne;
  const auto samples = static_cast<std::size_t>(het ? 2.0 * c.m : c.m);
  const double noise_sd = std::sqrt(het ? p.sigma_z2() + 1.0 : p.sigma_z2());
  const double bound_sd = std::sqrt(estimator_variances(c, p).n_bar);
  std::vector<unsigned char> failed(trials, 0);
  for_each_chunk(trials, threads, [&](std::size_t k, std::size_t b, std::size_t e) {
    CounterRng rng(seed, k);
    for (std::size_t t = b; t < e; ++t) {
      double ss = 0.0;
      for (std::size_t i = 0; i < samples; i += 2) {
        const auto [g1, g2] = rng.next_normal_pair();
        ss += g1 * g1;
        if (i + 1 < samples) ss += g2 * g2;
      }
      const double n_hat = estimate_noise(ss * noise_sd * noise_sd, static_cast<double>(samples), c.detection);
      failed[t] = n_hat + w * bound_sd < p.n_bar;
    }
  });
  std::size_t count = 0;
  for (auto f : failed) count += f;
  OracleRun run;
  run.seed = seed;
  run.samples = trials;
  run.statistic = Statistic::coverage;
  run.value = static_cast<double>(count) / static_cast<double>(trials);
  run.ci95 = 1.96 * std::sqrt(std::max(run.value * (1.0 - run.value), 1.0 / trials) / trials);
  return run;
}

inline OracleRun estimator_coverage(const EstimationConfig& c, const ChannelPoint& p, std::uint64_t seed,
                                    std::size_t trials, unsigned threads = 1) {
  return estimator_coverage(c, p, seed, trials, deviations_from_eps(c.eps_pe), threads);
}

}  // namespace fso
