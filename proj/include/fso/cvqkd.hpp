#pragma once

// Asymptotic rates of Gaussian-modulated coherent-state CV-QKD with reverse
// reconciliation over a thermal-loss channel.  Variances are in shot-noise
// units; mu = 2 n_T + 1 is the average input variance.

#include "fso/math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string_view>

namespace fso {

enum class Detection { homodyne, heterodyne };

inline std::string_view to_string(Detection d) { return d == Detection::homodyne ? "hom" : "het"; }

/// Largest modulation variance accepted, keeping mu^2 well inside double range.
inline constexpr double kMaxModulation = 1e8;

struct ChannelPoint {
  double tau = 1.0;
  double n_bar = 0.0;
  double mu = 1.0;

  double sigma_x2() const { return mu - 1.0; }
  double sigma_z2() const { return 2.0 * n_bar + 1.0; }
  /// Receiver variance tau (mu - 1) + 2 n + 1.
  double b() const { return tau * (mu - 1.0) + 2.0 * n_bar + 1.0; }
  /// ab - c^2 of the transmitter-receiver state, in cancellation-free form.
  double det_root() const { return mu * (2.0 * n_bar + 1.0 - tau) + tau; }
};

inline void validate(const ChannelPoint& p) {
  if (!(p.tau >= 0 && p.tau <= 1)) throw std::domain_error("channel point: transmissivity outside [0,1]");
  if (!(p.n_bar >= 0)) throw std::domain_error("channel point: negative thermal noise");
  if (!(p.mu >= 1 && p.mu <= kMaxModulation)) throw std::domain_error("channel point: modulation outside [1, 1e8]");
}

struct TwoModeCM {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;
};

inline TwoModeCM covariance_matrix(const ChannelPoint& p) {
  validate(p);
  return {p.mu, p.b(), std::sqrt(p.tau * (p.mu * p.mu - 1.0))};
}

struct SymplecticSpectrum {
  double plus;
  double minus;
};

namespace detail {

inline SymplecticSpectrum symplectic_from_invariants(double a, double b, double c, double det_root) {
  const double sum = a * a + b * b - 2.0 * c * c;
  // sum^2 - 4 det = (a-b)^2 [(a+b)^2 - 4c^2]
  double disc = (a - b) * (a - b) * ((a + b) * (a + b) - 4.0 * c * c);
  if (disc < 0) {
    if (disc < -1e-12 * sum * sum) throw std::domain_error("symplectic_eigenvalues: unphysical covariance matrix");
    disc = 0.0;
  }
  const double plus = std::sqrt(0.5 * (sum + std::sqrt(disc)));
  return {plus, std::abs(det_root) / plus};
}

}  // namespace detail

inline SymplecticSpectrum symplectic_eigenvalues(const TwoModeCM& cm) {
  if (cm.a < 1.0 - 1e-12 || cm.b < 1.0 - 1e-12) throw std::domain_error("symplectic_eigenvalues: diagonal block below vacuum");
  return detail::symplectic_from_invariants(cm.a, cm.b, cm.c, cm.a * cm.b - cm.c * cm.c);
}

inline SymplecticSpectrum symplectic_eigenvalues(const ChannelPoint& p) {
  const TwoModeCM cm = covariance_matrix(p);
  return detail::symplectic_from_invariants(cm.a, cm.b, cm.c, p.det_root());
}

/// Transmitter variance conditioned on the receiver's measurement outcome.
inline double conditional_eigenvalue(const ChannelPoint& p, Detection d) {
  validate(p);
  if (d == Detection::homodyne) return std::sqrt(p.mu * p.det_root() / p.b());
  return (p.mu * (2.0 * p.n_bar + 2.0 - p.tau) + p.tau) / (p.b() + 1.0);
}

inline double mutual_info(const ChannelPoint& p, Detection d) {
  validate(p);
  if (d == Detection::homodyne) return 0.5 * std::log1p(p.tau * p.sigma_x2() / p.sigma_z2()) / math::kLn2;
  return std::log1p(p.tau * p.sigma_x2() / (1.0 + p.sigma_z2())) / math::kLn2;
}

inline double holevo_bound(const ChannelPoint& p, Detection d) {
  const auto nu = symplectic_eigenvalues(p);
  return math::entropy_symplectic(nu.plus) + math::entropy_symplectic(nu.minus) -
         math::entropy_symplectic(conditional_eigenvalue(p, d));
}

struct RateValue {
  double value = 0.0;
  double raw = 0.0;
  bool clamped() const { return raw < 0.0; }
};

/// beta I - chi, unclamped.
inline double rate_raw(const ChannelPoint& p, double beta, Detection d) {
  if (!(beta >= 0 && beta <= 1)) throw std::domain_error("reconciliation efficiency outside [0,1]");
  return beta * mutual_info(p, d) - holevo_bound(p, d);
}

inline RateValue asymptotic_rate(const ChannelPoint& p, double beta, Detection d) {
  const double raw = rate_raw(p, beta, d);
  return {std::max(0.0, raw), raw};
}

/// Heterodyne rate for beta = 1 and unbounded modulation.
inline double heterodyne_rate_limit(double tau, double n_bar) {
  return std::log2(tau / (std::exp(1.0) * (1.0 - tau) * (n_bar + 1.0))) - math::entropy_h(n_bar / (1.0 - tau)) +
         math::entropy_h((n_bar + 1.0) / tau - 1.0);
}

}  // namespace fso
