#pragma once

// Beam-wandering fading: misaligned aperture transmissivity, the Weibull-type
// shape approximation and the induced transmissivity density P0(tau).
//
// With c = r0^2 / (2 sigma^2) and L = ln(eta / tau), the distribution is
//   Prob(tau <= t) = exp(-c L^{2/gamma}),   0 < t <= eta.
// Averages over P0 use s = c L^{2/gamma}, which is Exp(1) distributed.

#include "fso/beam_optics.hpp"
#include "fso/math.hpp"
#include "fso/turbulence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fso {

struct FadingModel {
  double eta = 1.0;    // maximum transmissivity eta_st * eta_eff * eta_atm
  double gamma = 2.0;  // shape
  double r0 = 1.0;     // scale, m
  double sigma = 0.0;  // centroid wander std, m
  double d = 0.0;      // mean deflection, m
  double eta_st = 1.0;
  double eta_st_far = 1.0;

  bool fades() const { return sigma > 0.0; }
  /// c = r0^2 / (2 sigma^2); infinite without wander.
  double wander_ratio() const {
    return fades() ? r0 * r0 / (2.0 * sigma * sigma) : std::numeric_limits<double>::infinity();
  }
};

inline void validate(const FadingModel& m) {
  if (!(m.eta > 0 && m.eta <= 1)) throw std::invalid_argument("fading model: eta outside (0,1]");
  if (!(m.gamma > 0)) throw std::invalid_argument("fading model: gamma must be positive");
  if (!(m.r0 > 0)) throw std::invalid_argument("fading model: r0 must be positive");
  if (m.sigma < 0 || m.d < 0) throw std::invalid_argument("fading model: negative wander");
}

struct ShortTermTransmissivity {
  double eta_st;
  double eta_st_far;
};

inline ShortTermTransmissivity eta_shortterm(double rx_aperture, double w_st) {
  if (!(w_st > 0)) throw std::invalid_argument("eta_shortterm: spot size must be positive");
  const double x = 2.0 * rx_aperture * rx_aperture / (w_st * w_st);
  return {-std::expm1(-x), x};
}

inline ShortTermTransmissivity eta_shortterm(const LinkGeometry& g, double w_st) {
  return eta_shortterm(g.rx_aperture, w_st);
}

/// e^{-shift} Q0(x, y), Q0 the incomplete Weber integral
///   Q0(x, y) = (2x)^{-1} e^x \int_0^y t e^{-t^2/4x} I0(t) dt.
/// Bounded for shift = 2x, which is the form the deflected transmissivity needs.
inline double weber_q0_scaled(double x, double y, double shift) {
  if (x < 0 || y < 0) throw std::invalid_argument("weber_q0: negative argument");
  if (y == 0.0) return 0.0;
  if (x == 0.0) return std::exp(-shift);
  if (std::isinf(y)) return std::exp(2.0 * x - shift);
  // exponent f(t) = x + t - t^2/4x peaks at min(2x, y)
  const double t_peak = std::min(2.0 * x, y);
  const double f_peak = x + t_peak - t_peak * t_peak / (4.0 * x);
  auto integrand = [&](double t) {
    const double f = x + t - t * t / (4.0 * x);
    return t * std::exp(f - f_peak) * math::bessel_i0e(t);
  };
  const double width = 8.0 * std::sqrt(2.0 * x);
  double cuts[5] = {0.0, std::max(0.0, t_peak - width), t_peak, std::min(y, t_peak + width), y};
  double sum = 0.0;
  for (int i = 0; i < 4; ++i)
    if (cuts[i + 1] > cuts[i]) sum += math::integrate_smooth(integrand, cuts[i], cuts[i + 1], 1e-12);
  return sum * std::exp(f_peak - shift) / (2.0 * x);
}

inline double weber_q0(double x, double y) {
  if (x == 0.0) return y > 0.0 ? 1.0 : 0.0;
  return weber_q0_scaled(x, y, 0.0);
}

/// Power fraction collected by a disk of radius aR from a Gaussian beam of
/// short-term spot size w_st whose centre is displaced by r.
inline double eta_deflected_exact(double r, double rx_aperture, double w_st) {
  if (r < 0) throw std::invalid_argument("eta_deflected_exact: negative deflection");
  const double inv_w2 = 1.0 / (w_st * w_st);
  if (r == 0.0) return -std::expm1(-2.0 * rx_aperture * rx_aperture * inv_w2);
  const double x = 2.0 * r * r * inv_w2;
  const double y = 4.0 * r * rx_aperture * inv_w2;
  return weber_q0_scaled(x, y, 2.0 * x);
}

struct FadingShape {
  double gamma;
  double r0;
};

/// Shape and scale of tau(r) ~ eta exp[-(r/r0)^gamma] from the far-field
/// exponent x = 2 aR^2 / w_st^2.  Lambda_n(x) = e^{-2x} I_n(2x).
inline FadingShape fading_shape_params(double eta_st, double eta_st_far, double rx_aperture) {
  const double x = eta_st_far;
  if (!(x > 0)) throw std::invalid_argument("fading_shape_params: far-field transmissivity must be positive");
  const double one_m_l0 = math::one_minus_lambda0(x);
  const double l1 = math::lambda_n(1, x);
  // 2 eta_st - (1 - Lambda0), cancellation-free when eta_st = 1 - e^{-x}
  double excess = 2.0 * eta_st - one_m_l0;
  if (excess < 0.5 * one_m_l0) {
    const double t = 2.0 * x;
    const double tail = t < 1.0 ? std::exp(-t) * math::bessel_i0m1(t) : math::bessel_i0e(t) - std::exp(-t);
    const double a = -std::expm1(-x);
    excess = a * a + tail;
  }
  const double log_term = std::log1p(excess / one_m_l0);
  FadingShape s;
  s.gamma = 4.0 * x * l1 / one_m_l0 / log_term;
  s.r0 = rx_aperture * std::pow(log_term, -1.0 / s.gamma);
  return s;
}

/// Builds the fading model for a link with given setup efficiency and
/// atmospheric transmissivity.
inline FadingModel make_fading_model(const LinkGeometry& g, const TurbulenceState& t, double eta_eff,
                                     double eta_atmosphere) {
  const auto st = eta_shortterm(g, t.w_st);
  const auto shape = fading_shape_params(st.eta_st, st.eta_st_far, g.rx_aperture);
  FadingModel m;
  m.eta = st.eta_st * eta_eff * eta_atmosphere;
  m.gamma = shape.gamma;
  m.r0 = shape.r0;
  m.sigma = t.sigma;
  m.eta_st = st.eta_st;
  m.eta_st_far = st.eta_st_far;
  return m;
}

/// tau(r) = eta exp[-(r/r0)^gamma].
inline double tau_of_deflection(const FadingModel& m, double r) {
  return m.eta * std::exp(-std::pow(r / m.r0, m.gamma));
}

/// Prob(tau <= t).
inline double p0_cdf(double t, const FadingModel& m) {
  if (t >= m.eta) return 1.0;
  if (t <= 0.0) return 0.0;
  if (!m.fades()) return 0.0;
  const double L = std::log(m.eta / t);
  return std::exp(-m.wander_ratio() * std::pow(L, 2.0 / m.gamma));
}

/// Prob(tau > t).
inline double p0_survival(double t, const FadingModel& m) {
  if (t >= m.eta) return 0.0;
  if (t <= 0.0) return 1.0;
  if (!m.fades()) return 1.0;
  const double L = std::log(m.eta / t);
  return -std::expm1(-m.wander_ratio() * std::pow(L, 2.0 / m.gamma));
}

/// Density of tau on (0, eta]; zero outside.
inline double p0_density(double tau, const FadingModel& m) {
  if (!(tau > 0.0) || tau > m.eta) return 0.0;
  if (!m.fades()) throw std::domain_error("p0_density: no wander, distribution is a point mass");
  const double c = m.wander_ratio();
  const double L = std::log(m.eta / tau);
  const double k = 2.0 / m.gamma;
  if (L == 0.0) {
    if (k < 1.0) return std::numeric_limits<double>::infinity();
    if (k > 1.0) return 0.0;
    return 2.0 * c / (m.gamma * tau);
  }
  return 2.0 * c / (m.gamma * tau) * std::pow(L, k - 1.0) * std::exp(-c * std::pow(L, k));
}

/// Rician density of the centroid distance r for mean deflection d.
inline double p_rician_density(double r, double d, double sigma) {
  if (r < 0 || d < 0 || !(sigma > 0)) throw std::invalid_argument("p_rician_density: invalid input");
  const double s2 = sigma * sigma;
  return r / s2 * std::exp(-(r - d) * (r - d) / (2.0 * s2)) * math::bessel_i0e(r * d / s2);
}

/// Prob(t_lo < tau <= t_hi).
inline double slot_probability(double t_lo, double t_hi, const FadingModel& m) {
  if (!(t_lo >= 0 && t_lo <= t_hi && t_hi <= m.eta))
    throw std::invalid_argument("slot_probability: need 0 <= t_lo <= t_hi <= eta");
  // difference of the smaller tails keeps thin upper slots accurate
  const double upper_hi = p0_survival(t_hi, m);
  if (upper_hi < 0.5) return p0_survival(t_lo, m) - upper_hi;
  return p0_cdf(t_hi, m) - p0_cdf(t_lo, m);
}

/// Transmissivity quantile: the t with Prob(tau > t) = p.
inline double p0_upper_quantile(double p, const FadingModel& m) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("p0_upper_quantile: p outside (0,1)");
  if (!m.fades()) return m.eta;
  const double L = std::pow(-std::log1p(-p) / m.wander_ratio(), m.gamma / 2.0);
  return m.eta * std::exp(-L);
}

/// \int_{t_lo}^{t_hi} P0(tau) f(tau) dtau over [0, eta].
template <class F>
double fading_expectation(const FadingModel& m, F&& f, double t_lo = 0.0,
                          double t_hi = std::numeric_limits<double>::infinity(), double rel_tol = 1e-11) {
  t_hi = std::min(t_hi, m.eta);
  t_lo = std::max(t_lo, 0.0);
  if (!(t_hi > t_lo)) return 0.0;
  if (!m.fades()) return t_hi >= m.eta ? f(m.eta) : 0.0;
  const double c = m.wander_ratio();
  const double k = 2.0 / m.gamma;
  auto s_of = [&](double t) { return t >= m.eta ? 0.0 : c * std::pow(std::log(m.eta / t), k); };
  auto tau_of = [&](double s) { return m.eta * std::exp(-std::pow(s / c, 1.0 / k)); };
  const double s_hi = s_of(t_hi);
  if (t_lo == 0.0) {
    auto g = [&](double u) { return std::exp(-u) * f(tau_of(s_hi + u)); };
    return std::exp(-s_hi) * math::integrate_half_line(g, 0.0, rel_tol);
  }
  const double s_lo = s_of(t_lo);
  auto g = [&](double s) { return std::exp(-s) * f(tau_of(s)); };
  return math::integrate_interval(g, s_hi, s_lo, rel_tol);
}

}  // namespace fso
