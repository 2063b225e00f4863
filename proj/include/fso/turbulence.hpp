#pragma once

// Weak-turbulence description of a horizontal link: refractive-index
// structure constant, coherence length, Rytov variance, short/long-term spot
// sizes and centroid wandering.

#include "fso/beam_optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>

namespace fso {

enum class Regime { weak_yura, weak_numerical_warn, negligible_wander, strong };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::weak_yura: return "weak_yura";
    case Regime::weak_numerical_warn: return "weak_numerical_warn";
    case Regime::negligible_wander: return "negligible_wander";
    case Regime::strong: return "strong";
  }
  return "unknown";
}

inline bool is_weak(Regime r) { return r != Regime::strong; }

/// rho0 / w0 below this uses the Yura closed forms without a warning.
inline constexpr double kYuraTrustedRatio = 0.5;
inline constexpr double kDefaultPointingJitter = 1e-6;  // rad
/// Fried parameter in units of the spherical-wave coherence length.
inline constexpr double kFriedPerCoherence = 2.088;

struct TurbulenceState {
  double cn2 = 0.0;
  double rho0 = std::numeric_limits<double>::infinity();
  double rytov_var = 0.0;
  double phi = 0.0;
  double w_st = 0.0;
  double w_lt = 0.0;
  double sigma_tb = 0.0;
  double sigma_p = 0.0;
  double sigma = 0.0;
  Regime regime = Regime::negligible_wander;
};

/// Hufnagel-Valley profile at altitude h for rms wind v and ground term A.
inline double cn2_hufnagel_valley(double altitude, double wind, double ground) {
  if (altitude < 0 || wind < 0 || ground < 0) throw std::invalid_argument("cn2_hufnagel_valley: negative input");
  const double v = wind / 27.0;
  return 5.94e-53 * v * v * std::pow(altitude, 10) * std::exp(-altitude / 1000.0) +
         2.7e-16 * std::exp(-altitude / 1500.0) + ground * std::exp(-altitude / 100.0);
}

/// Spherical-wave coherence length; infinite without turbulence.
inline double coherence_length(double cn2, double wavelength, double distance) {
  if (cn2 < 0 || !(wavelength > 0) || distance < 0) throw std::invalid_argument("coherence_length: invalid input");
  const double k = wavenumber(wavelength);
  const double base = 0.548 * k * k * cn2 * distance;
  if (base == 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(base, -0.6);
}

inline double fried_parameter(double rho0) { return kFriedPerCoherence * rho0; }

inline double rytov_variance(double cn2, double wavelength, double distance) {
  if (cn2 < 0 || !(wavelength > 0) || distance < 0) throw std::invalid_argument("rytov_variance: invalid input");
  const double k = wavenumber(wavelength);
  return 1.23 * cn2 * std::pow(k, 7.0 / 6.0) * std::pow(distance, 11.0 / 6.0);
}

inline double pointing_sigma(double distance, double jitter = kDefaultPointingJitter) {
  if (distance < 0 || jitter < 0) throw std::invalid_argument("pointing_sigma: negative input");
  return jitter * distance;
}

/// Weak iff Rytov variance < 1 and z <= k min(aR, rho0)^2; weak results carry
/// the rho0/w0 subregime.
inline Regime weak_turbulence_check(double rytov_var, double rho0, const LinkGeometry& g) {
  const double k = wavenumber(g.wavelength);
  const double scale = std::min(g.rx_aperture, rho0);
  if (!(rytov_var < 1.0) || !(g.distance <= k * scale * scale)) return Regime::strong;
  const double ratio = rho0 / g.waist;
  if (ratio >= 1.0) return Regime::negligible_wander;
  if (ratio >= kYuraTrustedRatio) return Regime::weak_numerical_warn;
  return Regime::weak_yura;
}

inline Regime weak_turbulence_check(const TurbulenceState& s, const LinkGeometry& g) {
  return weak_turbulence_check(s.rytov_var, s.rho0, g);
}

/// Long-term spot size from the Yura closed form, w_z^2 + 2 (lambda z / pi rho0)^2.
inline double long_term_spot_closed_form(const LinkGeometry& g, double rho0) {
  const double spread = g.wavelength * g.distance / (math::kPi * rho0);
  return std::sqrt(spot_size_squared(g) + 2.0 * spread * spread);
}

/// Spot sizes and turbulent wander for a given coherence length.  Pointing and
/// regime fields are left at their defaults.
/// rho0/w0 >= 1: sigma_tb = 0, w_st = w_lt.  Otherwise w_lt^2 = w_st^2 + sigma_tb^2.
inline TurbulenceState short_long_term(const LinkGeometry& g, double rho0) {
  if (!(rho0 > 0)) throw std::invalid_argument("short_long_term: coherence length must be positive");
  TurbulenceState s;
  s.rho0 = rho0;
  const double wz2 = spot_size_squared(g);
  if (std::isinf(rho0) || g.distance == 0.0) {
    s.w_st = s.w_lt = std::sqrt(wz2);
    return s;
  }
  const double ratio = rho0 / g.waist;
  s.phi = 0.33 * std::cbrt(ratio);
  const double spread = g.wavelength * g.distance / (math::kPi * rho0);
  if (ratio >= 1.0) {
    s.w_st = s.w_lt = std::sqrt(wz2 + 2.0 * spread * spread);
    return s;
  }
  const double narrowing = 1.0 - s.phi;
  const double w_st2 = wz2 + 2.0 * spread * spread * narrowing * narrowing;
  const double tb2 = 0.1337 * g.wavelength * g.wavelength * g.distance * g.distance /
                     (std::cbrt(g.waist) * std::pow(rho0, 5.0 / 3.0));
  s.w_st = std::sqrt(w_st2);
  s.sigma_tb = std::sqrt(tb2);
  s.w_lt = std::sqrt(w_st2 + tb2);
  return s;
}

/// Total centroid wander; the only place sigma_tb and sigma_p are combined.
inline double total_wander(double sigma_tb, double sigma_p) { return std::hypot(sigma_tb, sigma_p); }

/// Full turbulence state for a link with structure constant cn2 and pointing
/// jitter (rad).  Strong turbulence collapses to sigma_tb = 0, w_st = w_lt.
inline TurbulenceState make_turbulence_state(const LinkGeometry& g, double cn2,
                                             double jitter = kDefaultPointingJitter) {
  validate(g);
  const double rho0 = coherence_length(cn2, g.wavelength, g.distance);
  TurbulenceState s = short_long_term(g, rho0);
  s.cn2 = cn2;
  s.rytov_var = rytov_variance(cn2, g.wavelength, g.distance);
  s.regime = weak_turbulence_check(s.rytov_var, rho0, g);
  if (s.regime == Regime::strong && s.sigma_tb > 0) {
    s.w_st = s.w_lt = long_term_spot_closed_form(g, rho0);
    s.sigma_tb = 0.0;
  }
  s.sigma_p = pointing_sigma(g.distance, jitter);
  s.sigma = total_wander(s.sigma_tb, s.sigma_p);
  return s;
}

}  // namespace fso
