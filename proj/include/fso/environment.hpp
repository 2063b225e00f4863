#pragma once

// Atmospheric extinction and sky background noise.

#include "fso/math.hpp"

#include <cmath>
#include <stdexcept>

namespace fso {

inline constexpr double kPlanck = 6.62607015e-34;      // J s
inline constexpr double kSpeedOfLight = 299792458.0;   // m / s
inline constexpr double kExtinctionScaleHeight = 6600; // m

struct ExtinctionModel {
  double alpha0 = 5e-6;  // sea-level extinction, 1/m
  double scale_height = kExtinctionScaleHeight;
};

/// Beer-Lambert transmissivity along a horizontal path at altitude h.
inline double eta_atm(const ExtinctionModel& m, double altitude, double distance) {
  if (m.alpha0 < 0) throw std::invalid_argument("extinction factor must be nonnegative");
  if (altitude < 0 || distance < 0) throw std::invalid_argument("eta_atm: negative altitude or distance");
  return std::exp(-m.alpha0 * std::exp(-altitude / m.scale_height) * distance);
}

struct NoiseModel {
  double sky_brightness = 0.0;  // W m^-2 nm^-1 sr^-1
  double filter_nm = 1.0;       // spectral filter width, nm
  double gate = 10e-9;          // detector time window, s
  double fov = 1e-10;           // field of view, sr
  double rx_aperture = 0.05;    // m
  double eta_eff = 0.5;         // setup efficiency
  double n_ex = 0.0;            // local excess noise, photons per mode
};

inline void validate(const NoiseModel& n) {
  if (n.sky_brightness < 0 || n.filter_nm < 0 || n.gate < 0 || n.fov < 0)
    throw std::invalid_argument("noise model: negative brightness or detector window");
  if (!(n.rx_aperture > 0)) throw std::invalid_argument("noise model: aperture must be positive");
  if (n.eta_eff < 0 || n.eta_eff > 1) throw std::invalid_argument("noise model: eta_eff outside [0,1]");
  if (n.n_ex < 0) throw std::invalid_argument("noise model: negative excess noise");
}

/// Background thermal photons per mode collected from the sky.
inline double n_background(const NoiseModel& n, double wavelength) {
  const double collection = n.filter_nm * n.gate * n.fov * n.rx_aperture * n.rx_aperture;
  return math::kPi * wavelength * collection * n.sky_brightness / (kPlanck * kSpeedOfLight);
}

/// Thermal photons per mode at the detector: eta_eff * nB + n_ex.
inline double n_total(const NoiseModel& n, double wavelength) {
  return n.eta_eff * n_background(n, wavelength) + n.n_ex;
}

}  // namespace fso
