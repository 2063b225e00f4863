#pragma once

// Parameter estimation from m sampled signal pairs y = sqrt(tau) x + z:
// estimator variances, confidence deviations and worst-case parameters.

#include "fso/cvqkd.hpp"
#include "fso/math.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace fso {

struct EstimationConfig {
  double m = 1.0;  // estimation signals
  double eps_pe = 1e-10;
  Detection detection = Detection::heterodyne;
  double pilot_energy = 0.0;
};

inline void validate(const EstimationConfig& c) {
  if (!(c.m >= 1)) throw std::invalid_argument("estimation: need at least one sample");
  if (!(c.eps_pe > 0 && c.eps_pe < 0.5)) throw std::invalid_argument("estimation: eps_pe outside (0, 1/2)");
}

/// Below this error probability the Gaussian quantile gives way to the tail bound.
inline constexpr double kTailBoundThreshold = 1e-17;

/// Standard-normal deviations with upper-tail mass eps.
inline double deviations_gaussian(double eps) { return std::sqrt(2.0) * math::erfc_inv(2.0 * eps); }

/// Deviations from the tail bound Prob(Z > w) <= exp(-w^2/2).
inline double deviations_tail(double eps) { return std::sqrt(2.0 * std::log(1.0 / eps)); }

inline double deviations_from_eps(double eps) {
  if (!(eps > 0 && eps < 0.5)) throw std::invalid_argument("deviations_from_eps: eps outside (0, 1/2)");
  return eps >= kTailBoundThreshold ? deviations_gaussian(eps) : deviations_tail(eps);
}

struct EstimatorVariances {
  double tau;
  double n_bar;
};

inline EstimatorVariances estimator_variances(const EstimationConfig& c, const ChannelPoint& p) {
  validate(c);
  const bool het = c.detection == Detection::heterodyne;
  const double m = het ? 2.0 * c.m : c.m;
  const double sz2 = het ? p.sigma_z2() + 1.0 : p.sigma_z2();
  const double tau_var = p.tau > 0 ? 4.0 * p.tau * p.tau / m * (2.0 + sz2 / (p.tau * p.sigma_x2())) : 0.0;
  return {tau_var, sz2 * sz2 / (2.0 * m)};
}

struct WorstCase {
  double tau;
  double n_bar;
};

/// tau - w sigma_tau (clamped at 0) and n + w sigma_n.
inline WorstCase worst_case_params(const EstimationConfig& c, const ChannelPoint& p, double w) {
  const auto v = estimator_variances(c, p);
  return {std::max(0.0, p.tau - w * std::sqrt(v.tau)), p.n_bar + w * std::sqrt(v.n_bar)};
}

inline WorstCase worst_case_params(const EstimationConfig& c, const ChannelPoint& p) {
  return worst_case_params(c, p, deviations_from_eps(c.eps_pe));
}

/// Worst-case noise when pilots track the transmissivity; independent of the
/// pilot energy.
inline double pilot_worst_case_noise(const EstimationConfig& c, double n_bar, double w) {
  validate(c);
  if (c.detection == Detection::homodyne) return n_bar + w * (2.0 * n_bar + 1.0) / std::sqrt(2.0 * c.m);
  return n_bar + w * (n_bar + 1.0) / std::sqrt(c.m);
}

inline double pilot_worst_case_noise(const EstimationConfig& c, double n_bar) {
  return pilot_worst_case_noise(c, n_bar, deviations_from_eps(c.eps_pe));
}

/// (C_xy / sigma_x^2)^2 with C_xy the sample covariance.
inline double estimate_transmissivity(std::span<const double> x, std::span<const double> y, double sigma_x2) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("estimate_transmissivity: size mismatch");
  double cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) cxy += x[i] * y[i];
  cxy /= static_cast<double>(x.size());
  const double r = cxy / sigma_x2;
  return r * r;
}

/// Thermal-noise estimate from the residual sum of squares of y - sqrt(tau) x
/// over `samples` quadratures.  Heterodyne residuals carry one extra vacuum unit.
inline double estimate_noise(double residual_sum_sq, double samples, Detection d) {
  const double mean = residual_sum_sq / samples;
  return d == Detection::homodyne ? 0.5 * (mean - 1.0) : 0.5 * (mean - 2.0);
}

}  // namespace fso
