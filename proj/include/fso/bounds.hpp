#pragma once

// Key-capacity bounds for pure-loss and thermal-loss fading channels, their
// detector-timescale variants and matching achievable rates.  All values are
// in bits per channel use.

#include "fso/beam_optics.hpp"
#include "fso/fading.hpp"
#include "fso/math.hpp"
#include "fso/turbulence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace fso {

using math::entropy_h;

/// Repeaterless bound -log2(1 - tau).
inline double plob(double tau) {
  if (!(tau >= 0 && tau <= 1)) throw std::domain_error("plob: transmissivity outside [0,1]");
  return -math::log2_one_minus(tau);
}

/// Thermal-loss bound; zero once the noise reaches the transmissivity.
inline double plob_thermal(double tau, double n_bar) {
  if (!(tau >= 0 && tau < 1) || n_bar < 0) throw std::domain_error("plob_thermal: invalid input");
  if (n_bar >= tau) return 0.0;
  if (n_bar == 0.0) return plob(tau);
  const double ratio = n_bar / (1.0 - tau);
  return -math::log2_one_minus(tau) - ratio * std::log2(tau) - entropy_h(ratio);
}

/// Reverse coherent information of a thermal-loss channel.
inline double rci(double tau, double n_bar) { return plob(tau) - entropy_h(n_bar / (1.0 - tau)); }

namespace detail {

// (1/c)^{gamma/2}: the decay length of exp(-c x^{2/gamma}) in x = ln(eta/tau).
inline double wander_length(const FadingModel& m) { return std::pow(m.wander_ratio(), -m.gamma / 2.0); }

}  // namespace detail

/// Omega(eta') = \int_0^inf exp(-c x^{2/gamma}) / (e^x - eta') dx for the wander
/// statistics of m, evaluated at transmissivity eta' < 1.
inline double wander_integral(const FadingModel& m, double eta_value) {
  if (!m.fades()) return 0.0;
  if (!(eta_value >= 0 && eta_value < 1)) throw std::domain_error("wander_integral: transmissivity outside [0,1)");
  const double ell = detail::wander_length(m);
  const double k = 2.0 / m.gamma;
  auto f = [&](double v) {
    const double x = ell * v;
    return std::exp(-std::pow(v, k)) / ((1.0 - eta_value) + std::expm1(x));
  };
  return ell * math::integrate_half_line(f, 0.0, 1e-12);
}

/// Loss bound at transmissivity eta' with the wander statistics of m:
/// [-ln(1 - eta') - eta' Omega(eta')] / ln 2.
inline double loss_bound_at(const FadingModel& m, double eta_value) {
  if (eta_value == 0.0) return 0.0;
  return (-std::log1p(-eta_value) - eta_value * wander_integral(m, eta_value)) / math::kLn2;
}

/// Delta(eta', sigma) = 1 + eta' Omega / ln(1 - eta').
inline double delta_correction_at(const FadingModel& m, double eta_value) {
  if (!m.fades() || eta_value == 0.0) return 1.0;
  return 1.0 + eta_value * wander_integral(m, eta_value) / std::log1p(-eta_value);
}

inline double delta_correction(const FadingModel& m) { return delta_correction_at(m, m.eta); }

/// Fading-averaged repeaterless bound -Delta log2(1 - eta).
inline double loss_bound(const FadingModel& m) { return loss_bound_at(m, m.eta); }

/// High-loss correction Lambda = 1 - \int_0^inf exp(-c x^{2/gamma} - x) dx.
inline double lambda_correction(const FadingModel& m) {
  if (!m.fades()) return 1.0;
  const double ell = detail::wander_length(m);
  const double k = 2.0 / m.gamma;
  auto f = [&](double v) { return std::exp(-std::pow(v, k) - ell * v); };
  return 1.0 - ell * math::integrate_half_line(f, 0.0, 1e-12);
}

/// n log2(n) / (1 - n) + h(n).
inline double thermal_offset(double n_bar) {
  if (n_bar == 0.0) return 0.0;
  return n_bar * std::log2(n_bar) / (1.0 - n_bar) + entropy_h(n_bar);
}

/// Thermal correction N(n) g(n) - Delta(n, sigma) log2(1 - n), N the fading
/// mass above n.
inline double thermal_correction(const FadingModel& m, double n_bar) {
  if (n_bar == 0.0) return 0.0;
  return p0_survival(n_bar, m) * thermal_offset(n_bar) + loss_bound_at(m, n_bar);
}

enum class BoundKind { loss_only, thermal, slow, intermediate };

struct BoundResult {
  double upper = 0.0;
  double lower = 0.0;
  BoundKind kind = BoundKind::loss_only;
  double delta_factor = 1.0;
  double thermal_correction = 0.0;
  double upper_raw = 0.0;  // before clamping
  double lower_raw = 0.0;
  bool clamped() const { return upper_raw < 0.0 || lower_raw < 0.0; }
};

/// Upper bound for a thermal-loss fading channel; 0 when n >= eta.
inline double thermal_upper_raw(const FadingModel& m, double n_bar) {
  if (n_bar < 0) throw std::domain_error("thermal_upper: negative noise");
  if (n_bar >= m.eta) return 0.0;
  return loss_bound(m) - thermal_correction(m, n_bar);
}

inline double thermal_upper(const FadingModel& m, double n_bar) {
  return std::max(0.0, thermal_upper_raw(m, n_bar));
}

/// Achievable rate B - h(n / (1 - eta)), clamped at 0.
inline double thermal_lower(const FadingModel& m, double n_bar) {
  if (n_bar < 0) throw std::domain_error("thermal_lower: negative noise");
  return std::max(0.0, loss_bound(m) - entropy_h(n_bar / (1.0 - m.eta)));
}

/// Tighter achievable rate: fading average of the reverse coherent information.
inline double thermal_lower_quadrature(const FadingModel& m, double n_bar) {
  if (n_bar < 0) throw std::domain_error("thermal_lower: negative noise");
  const double avg = fading_expectation(m, [&](double tau) { return entropy_h(n_bar / (1.0 - tau)); });
  return std::max(0.0, loss_bound(m) - avg);
}

inline BoundResult thermal_bounds(const FadingModel& m, double n_bar) {
  BoundResult r;
  r.kind = n_bar > 0 ? BoundKind::thermal : BoundKind::loss_only;
  r.delta_factor = delta_correction(m);
  const double b = loss_bound(m);
  r.thermal_correction = n_bar > 0 && n_bar < m.eta ? thermal_correction(m, n_bar) : 0.0;
  r.upper_raw = n_bar >= m.eta ? 0.0 : b - r.thermal_correction;
  r.lower_raw = b - entropy_h(n_bar / (1.0 - m.eta));
  r.upper = std::max(0.0, r.upper_raw);
  r.lower = std::max(0.0, r.lower_raw);
  return r;
}

/// Distance at which 2 f_0R(z) = -ln(1 - n) for a collimated-beam link, found
/// by bisection.  Empty when n = 0 (no limit).
inline std::optional<double> max_secure_distance(const LinkGeometry& g, double n_bar) {
  if (!(n_bar >= 0 && n_bar < 1)) throw std::domain_error("max_secure_distance: noise outside [0,1)");
  if (n_bar == 0.0) return std::nullopt;
  const double target = -std::log1p(-n_bar);
  auto excess = [&](double z) {
    LinkGeometry h = g;
    h.distance = z;
    return 2.0 * fresnel_product(h) - target;
  };
  double lo = 1e-6, hi = 1.0;
  while (excess(hi) > 0) hi *= 2.0;
  while (excess(lo) < 0) lo *= 0.5;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = std::sqrt(lo * hi);
    (excess(mid) > 0 ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

/// Detector slower than the wander: beam averaged over w_lt^2 + sigma_p^2.
inline double slow_detector_bound(const LinkGeometry& g, const TurbulenceState& t, double eta_eff,
                                  double eta_atmosphere) {
  const double w2 = t.w_lt * t.w_lt + t.sigma_p * t.sigma_p;
  const double eta_slow = eta_eff * eta_atmosphere * aperture_fraction(g.rx_aperture, std::sqrt(w2));
  return plob(eta_slow);
}

/// Detector resolving pointing jitter but not turbulent wander.
inline FadingModel intermediate_fading_model(const LinkGeometry& g, const TurbulenceState& t, double eta_eff,
                                             double eta_atmosphere) {
  TurbulenceState lt = t;
  lt.w_st = t.w_lt;
  lt.sigma = t.sigma_p;
  return make_fading_model(g, lt, eta_eff, eta_atmosphere);
}

inline double intermediate_detector_bound(const LinkGeometry& g, const TurbulenceState& t, double eta_eff,
                                          double eta_atmosphere) {
  return loss_bound(intermediate_fading_model(g, t, eta_eff, eta_atmosphere));
}

/// Biased squeezed-state protocol in the large-modulation limit; sifting keeps
/// a fraction p^2 + (1-p)^2 of the pure-loss capacity.
inline double squeezed_rate(double p, double tau) {
  if (!(p >= 0 && p <= 1)) throw std::domain_error("squeezed_rate: bias outside [0,1]");
  return (p * p + (1.0 - p) * (1.0 - p)) * plob(tau);
}

/// Coherent-state homodyne protocol in the large-modulation limit.
inline double coherent_rate(double tau, double n_bar) {
  return plob(tau) - entropy_h(n_bar / (1.0 - tau)) + 0.5 * std::log2(1.0 - tau / (2.0 * n_bar + 1.0));
}

/// Fading average of a per-transmissivity rate.
template <class F>
double fading_average(const FadingModel& m, F&& rate) {
  return fading_expectation(m, rate);
}

}  // namespace fso
