#pragma once

// Assembly of a complete link: geometry, extinction, turbulence and noise are
// combined into the fading model and thermal noise used by the bounds.

#include "fso/beam_optics.hpp"
#include "fso/environment.hpp"
#include "fso/fading.hpp"
#include "fso/turbulence.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fso {

/// C_n^2 either fixed or from the Hufnagel-Valley profile at the link altitude.
struct TurbulenceProfile {
  std::optional<double> cn2_fixed;
  double wind = 21.0;      // m/s
  double ground = 1.7e-14; // m^{-2/3}

  double cn2(double altitude) const {
    return cn2_fixed ? *cn2_fixed : cn2_hufnagel_valley(altitude, wind, ground);
  }
};

struct LinkInputs {
  LinkGeometry geometry;
  ExtinctionModel extinction;
  TurbulenceProfile turbulence;
  double pointing_jitter = kDefaultPointingJitter;
  NoiseModel noise;
};

struct LinkState {
  LinkGeometry geometry;
  TurbulenceState turbulence;
  double eta_d = 0.0;
  double eta_atm = 1.0;
  double eta_eff = 1.0;
  double n_background = 0.0;
  double n_bar = 0.0;
  FadingModel fading;
};

inline LinkState evaluate_link(const LinkInputs& in) {
  validate(in.geometry);
  NoiseModel noise = in.noise;
  noise.rx_aperture = in.geometry.rx_aperture;
  validate(noise);
  LinkState s;
  s.geometry = in.geometry;
  s.turbulence = make_turbulence_state(in.geometry, in.turbulence.cn2(in.geometry.altitude), in.pointing_jitter);
  s.eta_d = eta_diffraction(in.geometry);
  s.eta_atm = eta_atm(in.extinction, in.geometry.altitude, in.geometry.distance);
  s.eta_eff = noise.eta_eff;
  s.n_background = n_background(noise, in.geometry.wavelength);
  s.n_bar = n_total(noise, in.geometry.wavelength);
  s.fading = make_fading_model(in.geometry, s.turbulence, s.eta_eff, s.eta_atm);
  return s;
}

/// Channel seen by the bounds.  With a trusted receiver setup, the setup loss
/// and local noise are excluded: eta -> eta_st eta_atm, n -> eta_eff nB.
struct BoundInputs {
  FadingModel fading;
  double n_bar;
};

inline BoundInputs bound_inputs(const LinkState& s, bool trusted_setup) {
  BoundInputs b{s.fading, s.n_bar};
  if (trusted_setup) {
    b.fading.eta = s.fading.eta_st * s.eta_atm;
    b.n_bar = s.eta_eff * s.n_background;
  }
  return b;
}

enum class Preset { night, day };

inline std::optional<Preset> parse_preset(std::string_view name) {
  if (name == "night") return Preset::night;
  if (name == "day") return Preset::day;
  return std::nullopt;
}

inline std::string_view to_string(Preset p) { return p == Preset::night ? "night" : "day"; }

/// Reference horizontal link at 30 m altitude: 800 nm, w0 = aR = 5 cm,
/// 1e-10 sr, 10 ns, 1 nm, eta_eff = 0.5, clear night or bright day sky.
inline LinkInputs preset_link(Preset p, double distance) {
  LinkInputs in;
  in.geometry.wavelength = 800e-9;
  in.geometry.waist = 0.05;
  in.geometry.rx_aperture = 0.05;
  in.geometry.tx_aperture = 0.1;
  in.geometry.altitude = 30.0;
  in.geometry.distance = distance;
  in.extinction.alpha0 = 5e-6;
  in.noise.filter_nm = 1.0;
  in.noise.gate = 10e-9;
  in.noise.fov = 1e-10;
  in.noise.rx_aperture = 0.05;
  in.noise.eta_eff = 0.5;
  if (p == Preset::night) {
    in.turbulence.wind = 21.0;
    in.turbulence.ground = 1.7e-14;
    in.noise.sky_brightness = 1e-6;
  } else {
    in.turbulence.wind = 57.0;
    in.turbulence.ground = 2.75e-14;
    in.noise.sky_brightness = 0.1;
  }
  return in;
}

}  // namespace fso
