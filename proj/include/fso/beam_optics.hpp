#pragma once

// Gaussian-beam geometry of a horizontal free-space link.  All lengths are
// meters; the beam waist is the field (1/e amplitude) spot size.

#include "fso/math.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fso {

struct LinkGeometry {
  double wavelength = 800e-9;
  double distance = 0.0;
  double altitude = 0.0;
  double waist = 0.05;
  /// Phase-front radius of curvature; empty means collimated.
  std::optional<double> curvature;
  double tx_aperture = 0.1;
  double rx_aperture = 0.05;
};

/// Throws std::invalid_argument if a geometry invariant is violated.
inline void validate(const LinkGeometry& g) {
  if (!(g.wavelength > 0)) throw std::invalid_argument("wavelength must be positive");
  if (!(g.distance >= 0)) throw std::invalid_argument("distance must be nonnegative");
  if (!(g.altitude >= 0)) throw std::invalid_argument("altitude must be nonnegative");
  if (!(g.waist > 0)) throw std::invalid_argument("beam waist must be positive");
  if (!(g.rx_aperture > 0)) throw std::invalid_argument("receiver aperture must be positive");
  if (!(g.tx_aperture > 0)) throw std::invalid_argument("transmitter aperture must be positive");
  if (g.curvature && *g.curvature == 0.0)
    throw std::invalid_argument("curvature radius 0 is undefined");
}

/// Non-fatal geometry diagnostics.
inline std::vector<std::string> geometry_warnings(const LinkGeometry& g) {
  std::vector<std::string> out;
  if (g.tx_aperture < 2.0 * g.waist)
    out.emplace_back("transmitter aperture below twice the beam waist; transmitter diffraction is not modeled");
  return out;
}

inline double wavenumber(double wavelength) { return 2.0 * math::kPi / wavelength; }

inline double rayleigh_range(const LinkGeometry& g) {
  return math::kPi * g.waist * g.waist / g.wavelength;
}

inline double spot_size_squared(const LinkGeometry& g) {
  if (g.curvature && *g.curvature == 0.0) throw std::invalid_argument("curvature radius 0 is undefined");
  const double focus = g.curvature ? 1.0 - g.distance / *g.curvature : 1.0;
  const double spread = g.distance / rayleigh_range(g);
  return g.waist * g.waist * (focus * focus + spread * spread);
}

inline double spot_size(const LinkGeometry& g) { return std::sqrt(spot_size_squared(g)); }

/// Power fraction of a centred Gaussian beam of spot size w on a disk of radius a.
inline double aperture_fraction(double aperture, double w) {
  return -std::expm1(-2.0 * aperture * aperture / (w * w));
}

inline double eta_diffraction(const LinkGeometry& g) {
  return -std::expm1(-2.0 * g.rx_aperture * g.rx_aperture / spot_size_squared(g));
}

inline double fresnel_product(const LinkGeometry& g) {
  if (!(g.distance > 0)) throw std::invalid_argument("fresnel_product: distance must be positive");
  const double x = math::kPi * g.waist * g.rx_aperture / (g.wavelength * g.distance);
  return x * x;
}

enum class BeamFocus { as_configured, focused, collimated };

/// Diffraction-limited key-capacity bound 2 aR^2 / (ln2 w^2) in bits per use.
inline double diffraction_bound(const LinkGeometry& g, BeamFocus focus = BeamFocus::as_configured) {
  if (focus == BeamFocus::focused) return 2.0 * fresnel_product(g) / math::kLn2;
  LinkGeometry h = g;
  if (focus == BeamFocus::collimated) h.curvature.reset();
  return 2.0 / math::kLn2 * h.rx_aperture * h.rx_aperture / spot_size_squared(h);
}

}  // namespace fso
