#pragma once

// Composable finite-size key rates over a fading channel: threshold and
// lattice post-selection of the instantaneous transmissivity, collective and
// general attacks, and the (modulation, threshold) optimizer.

#include "fso/cvqkd.hpp"
#include "fso/estimation.hpp"
#include "fso/fading.hpp"
#include "fso/math.hpp"
#include "fso/turbulence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace fso {

enum class Attack { collective, general };

inline std::string_view to_string(Attack a) { return a == Attack::collective ? "collective" : "general"; }

/// pilot: transmissivity known exactly, only the noise is estimated.
/// blind: both channel parameters estimated from the m signal pairs.
enum class ChannelEstimation { pilot, blind };

inline std::string_view to_string(ChannelEstimation e) { return e == ChannelEstimation::pilot ? "pilot" : "blind"; }

struct ProtocolConfig {
  double total_modes = 5e7;
  double estimation_modes = 0.15 * 5e7;
  double alphabet = 32.0;  // digitization levels per quadrature
  double beta = 0.98;
  double p_ec = 0.9;
  double eps_s = 0x1p-33;
  double eps_h = 0x1p-33;
  double eps_cor = 0x1p-33;
  double eps_pe = 0x1p-33;
  double energy_test_fraction = 0.0;
  // photon thresholds of the energy test; unset means (mu - 1) / 2
  std::optional<double> threshold_tx;
  std::optional<double> threshold_rx;
  Detection detection = Detection::heterodyne;
  Attack attack = Attack::collective;
  ChannelEstimation estimation = ChannelEstimation::pilot;
  int estimated_parameters = 1;  // multiplicity of eps_pe in the total epsilon

  /// Modes left for key generation.
  double key_modes() const {
    const double rest = total_modes - estimation_modes;
    return attack == Attack::general ? rest / (1.0 + energy_test_fraction) : rest;
  }

  EstimationConfig estimation_config() const { return {estimation_modes, eps_pe, detection, 0.0}; }
};

inline void validate(const ProtocolConfig& c) {
  auto in_unit = [](double x) { return x > 0 && x < 1; };
  if (!(c.total_modes > 0 && c.estimation_modes >= 1 && c.estimation_modes < c.total_modes))
    throw std::invalid_argument("protocol: need 1 <= m < N");
  if (!(c.alphabet >= 2)) throw std::invalid_argument("protocol: alphabet size below 2");
  if (!(c.beta >= 0 && c.beta <= 1)) throw std::invalid_argument("protocol: beta outside [0,1]");
  if (!(c.p_ec > 0 && c.p_ec <= 1)) throw std::invalid_argument("protocol: p_ec outside (0,1]");
  if (!in_unit(c.eps_s) || !in_unit(c.eps_h) || !in_unit(c.eps_cor) || !(c.eps_pe > 0 && c.eps_pe < 0.5))
    throw std::invalid_argument("protocol: epsilon parameter outside (0,1)");
  if (!(c.energy_test_fraction >= 0)) throw std::invalid_argument("protocol: negative energy-test fraction");
  if ((c.threshold_tx && !(*c.threshold_tx >= 0)) || (c.threshold_rx && !(*c.threshold_rx >= 0)))
    throw std::invalid_argument("protocol: negative photon threshold");
  if (c.estimated_parameters != 1 && c.estimated_parameters != 2)
    throw std::invalid_argument("protocol: estimated_parameters must be 1 or 2");
  if (c.attack == Attack::general) {
    if (c.detection != Detection::heterodyne) throw std::invalid_argument("protocol: general attacks need heterodyne");
    if (!(c.energy_test_fraction > 0)) throw std::invalid_argument("protocol: general attacks need an energy test");
  }
}

struct CompositeEpsilon {
  double eps;
  std::optional<double> eps_prime;
};

inline double total_epsilon(const ProtocolConfig& c) {
  return c.estimated_parameters * c.p_ec * c.eps_pe + c.eps_cor + c.eps_s + c.eps_h;
}

/// Penalty of the asymptotic equipartition step, bits.
inline double aep_delta(double p_ec, double eps_s, double alphabet) {
  if (!(p_ec > 0 && p_ec <= 1 && eps_s > 0 && eps_s < 1 && alphabet >= 1))
    throw std::invalid_argument("aep_delta: parameter out of range");
  // log2(18 / (p_ec^2 eps_s^4)) without forming eps_s^4
  const double inner = std::log2(18.0) - 2.0 * std::log2(p_ec) - 4.0 * std::log2(eps_s);
  return 4.0 * std::log2(2.0 * std::sqrt(alphabet) + 1.0) * std::sqrt(inner);
}

/// Hashing and smoothing offset, bits; negative for small epsilons.
inline double theta_term(double p_ec, double eps_s, double eps_h) {
  if (!(p_ec > 0 && p_ec <= 1 && eps_s > 0 && eps_s < 1 && eps_h > 0))
    throw std::invalid_argument("theta_term: parameter out of range");
  return std::log2(p_ec * (1.0 - eps_s * eps_s / 3.0)) + 2.0 * (0.5 + std::log2(eps_h));
}

/// Sigma factor of the energy-test tail bound for `modes` key modes.
inline double energy_test_sigma(double modes, double eps, double energy_test_fraction) {
  const double L = std::log(8.0 / eps);
  const double den = 1.0 - 2.0 * std::sqrt(L / (2.0 * energy_test_fraction * modes));
  if (!(den > 0)) return math::kInf;
  return (1.0 + 2.0 * std::sqrt(L / (2.0 * modes)) + L / modes) / den;
}

/// Effective dimension of the de Finetti reduction, at least 1.
inline double definetti_dimension(double modes, double photons, double eps, double energy_test_fraction) {
  return std::max(1.0, modes * photons * energy_test_sigma(modes, eps, energy_test_fraction));
}

/// 2 ceil(log2 binom(K + 4, 4)) as a sum of logs; K may be large or non-integer.
inline double definetti_penalty(double K) {
  if (!(K >= 1)) throw std::invalid_argument("definetti_penalty: K below 1");
  if (std::isinf(K)) return math::kInf;
  double bits = -std::log2(24.0);
  for (int j = 1; j <= 4; ++j) bits += std::log2(K + j);
  return 2.0 * std::ceil(bits - 1e-12);
}

struct RateContext {
  FadingModel fading;
  double n_bar = 0.0;  // true thermal noise
  Regime regime = Regime::weak_yura;
  bool allow_strong = false;
};

inline void require_weak(const RateContext& ctx) {
  if (ctx.regime == Regime::strong && !ctx.allow_strong)
    throw std::domain_error("finite-size rate: fading model invalid in strong turbulence");
}

/// Key contribution of one transmissivity slot.
struct SlotRate {
  double tau = 0.0;  // transmissivity assigned to the slot
  double probability = 0.0;
  double raw = 0.0;  // n p p_ec / N [R_pe - ...], may be negative
  double rate_pe = 0.0;
  double penalty_bits = 0.0;  // de Finetti reduction, general attacks
  std::optional<double> eps_prime;
  double value() const { return std::max(0.0, raw); }
};

struct RateResult {
  double value = 0.0;
  double raw = 0.0;
  double p_slot = 0.0;
  double n_bar_prime = 0.0;
  CompositeEpsilon epsilon{0.0, std::nullopt};
  bool clamped() const { return raw < 0.0; }
};

namespace detail {

struct WorstChannel {
  double tau;
  double n_bar;
};

inline WorstChannel worst_channel(const ProtocolConfig& c, double tau, double n_bar, double mu) {
  const auto est = c.estimation_config();
  const double w = deviations_from_eps(c.eps_pe);
  if (c.estimation == ChannelEstimation::pilot) return {tau, pilot_worst_case_noise(est, n_bar, w)};
  const auto wc = worst_case_params(est, ChannelPoint{tau, n_bar, mu}, w);
  return {wc.tau, wc.n_bar};
}

/// Requires n p >= 1; the caller decides how to treat starved slots.
inline SlotRate slot_rate(const ProtocolConfig& c, double tau, double probability, double n_bar, double mu) {
  SlotRate s;
  s.tau = tau;
  s.probability = probability;
  const double n = c.key_modes();
  const double np = n * probability;
  const auto wc = worst_channel(c, tau, n_bar, mu);
  s.rate_pe = rate_raw(ChannelPoint{wc.tau, wc.n_bar, mu}, c.beta, c.detection);
  double offset = theta_term(c.p_ec, c.eps_s, c.eps_h);
  if (c.attack == Attack::general) {
    const double eps = total_epsilon(c);
    const double half = 0.5 * (mu - 1.0);
    const double photons = c.threshold_tx.value_or(half) + c.threshold_rx.value_or(half);
    const double K = definetti_dimension(np, photons, eps, c.energy_test_fraction);
    s.penalty_bits = definetti_penalty(K);
    s.eps_prime = std::pow(K, 4) * eps / 50.0;
    offset -= s.penalty_bits;
  }
  const double bracket = s.rate_pe - aep_delta(c.p_ec, c.eps_s, c.alphabet) / std::sqrt(np) + offset / np;
  s.raw = np * c.p_ec / c.total_modes * bracket;
  return s;
}

inline double slot_noise(const ProtocolConfig& c, double n_bar) {
  return c.estimation == ChannelEstimation::pilot
             ? pilot_worst_case_noise(c.estimation_config(), n_bar, deviations_from_eps(c.eps_pe))
             : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Key rate from the slot above eta_th, attack chosen by the config.
inline RateResult threshold_rate(const ProtocolConfig& c, const RateContext& ctx, double mu, double eta_th) {
  validate(c);
  require_weak(ctx);
  if (!(eta_th >= 0 && eta_th <= ctx.fading.eta)) throw std::invalid_argument("threshold_rate: need 0 <= eta_th <= eta");
  RateResult r;
  r.epsilon.eps = total_epsilon(c);
  r.n_bar_prime = detail::slot_noise(c, ctx.n_bar);
  r.p_slot = slot_probability(eta_th, ctx.fading.eta, ctx.fading);
  if (r.p_slot == 0.0) return r;
  if (c.key_modes() * r.p_slot < 1.0) throw std::domain_error("threshold_rate: fewer than one key mode above threshold");
  const auto s = detail::slot_rate(c, eta_th, r.p_slot, ctx.n_bar, mu);
  r.raw = s.raw;
  r.value = s.value();
  r.epsilon.eps_prime = s.eps_prime;
  return r;
}

inline RateResult collective_rate_threshold(ProtocolConfig c, const RateContext& ctx, double mu, double eta_th) {
  c.attack = Attack::collective;
  return threshold_rate(c, ctx, mu, eta_th);
}

inline RateResult general_attack_rate(ProtocolConfig c, const RateContext& ctx, double mu, double eta_th) {
  c.attack = Attack::general;
  return threshold_rate(c, ctx, mu, eta_th);
}

struct LatticeResult {
  double value = 0.0;
  std::vector<SlotRate> slots;  // k = 2..M
  int starved = 0;              // slots skipped with n p_k < 1
  double n_bar_prime = 0.0;
  CompositeEpsilon epsilon{0.0, std::nullopt};
};

/// Average over M equal transmissivity slots, each keyed at its lower edge.
inline LatticeResult lattice_rate(const ProtocolConfig& c, const RateContext& ctx, double mu, int slots) {
  validate(c);
  require_weak(ctx);
  if (slots < 2) throw std::invalid_argument("lattice_rate: need at least two slots");
  LatticeResult r;
  r.epsilon.eps = total_epsilon(c);
  r.n_bar_prime = detail::slot_noise(c, ctx.n_bar);
  const double eta = ctx.fading.eta;
  const double n = c.key_modes();
  for (int k = 2; k <= slots; ++k) {
    const double lo = (k - 1) * (eta / slots);
    const double hi = k == slots ? eta : k * (eta / slots);
    const double p = slot_probability(lo, hi, ctx.fading);
    if (p == 0.0) continue;
    if (n * p < 1.0) {
      ++r.starved;
      continue;
    }
    auto s = detail::slot_rate(c, lo, p, ctx.n_bar, mu);
    r.value += s.value();
    if (s.eps_prime) r.epsilon.eps_prime = std::max(r.epsilon.eps_prime.value_or(0.0), *s.eps_prime);
    r.slots.push_back(s);
  }
  return r;
}

struct OptimizerOptions {
  double mu_min = 1.0 + 1e-3;
  double mu_max = 1e3;
  int grid = 25;
  // search range of logit(p_slot)
  double logit_lo = -12.0;
  double logit_hi = 16.0;
  int max_iterations = 400;
  // pinned coordinates are not searched
  std::optional<double> fixed_mu;
  std::optional<double> fixed_eta_th;
};

inline void validate(const OptimizerOptions& o) {
  if (!(o.mu_min > 1 && o.mu_max > o.mu_min && o.mu_max <= kMaxModulation && o.grid >= 2 && o.logit_lo < o.logit_hi))
    throw std::invalid_argument("optimizer: bad search box");
  if (o.fixed_mu && !(*o.fixed_mu >= 1 && *o.fixed_mu <= kMaxModulation))
    throw std::invalid_argument("optimizer: fixed modulation outside [1, 1e8]");
}

struct OptimumPoint {
  double mu;
  double eta_th;
  double p_slot;
};

struct Optimum {
  double rate = 0.0;
  std::optional<OptimumPoint> argmax;  // empty when no point yields a key
  RateResult at_optimum;
};

namespace detail {

inline double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

/// Threshold with upper-tail mass p; just below eta without wander.
inline double threshold_for_mass(const FadingModel& m, double p) {
  if (!m.fades()) return std::nextafter(m.eta, 0.0);
  return p0_upper_quantile(p, m);
}

/// Grid then Nelder-Mead over the free coordinates among (log(mu - 1),
/// logit p_slot).  The grid runs mu ascending, threshold ascending and keeps
/// the first strict maximum.
template <class Objective>
std::optional<std::array<double, 2>> search_max(Objective&& f, std::array<bool, 2> free,
                                                std::array<double, 2> lo, std::array<double, 2> hi, int grid,
                                                int max_iterations, double& best_val) {
  std::array<int, 2> steps{free[0] ? grid : 1, free[1] ? grid : 1};
  auto coord = [&](int k, int i) { return steps[k] == 1 ? hi[k] : lo[k] + (hi[k] - lo[k]) * i / (steps[k] - 1); };
  std::array<double, 2> best{coord(0, 0), coord(1, 0)};
  best_val = -math::kInf;
  for (int i = 0; i < steps[0]; ++i) {
    for (int j = 0; j < steps[1]; ++j) {
      // descending mass is ascending threshold
      const std::array<double, 2> x{coord(0, i), steps[1] == 1 ? hi[1] : hi[1] - (hi[1] - lo[1]) * j / (steps[1] - 1)};
      const double v = f(x);
      if (v > best_val) {
        best_val = v;
        best = x;
      }
    }
  }
  std::vector<int> dims;
  for (int k = 0; k < 2; ++k)
    if (free[k]) dims.push_back(k);
  if (dims.empty() || !std::isfinite(best_val)) return best_val > -math::kInf ? std::optional(best) : std::nullopt;
  std::vector<double> start, step, blo, bhi;
  for (int k : dims) {
    start.push_back(best[k]);
    step.push_back((hi[k] - lo[k]) / (grid - 1));
    blo.push_back(lo[k]);
    bhi.push_back(hi[k]);
  }
  auto lift = [&](const std::vector<double>& y) {
    auto x = best;
    for (std::size_t i = 0; i < dims.size(); ++i) x[dims[i]] = y[i];
    return x;
  };
  const auto y = math::nelder_mead_max([&](const std::vector<double>& v) { return f(lift(v)); }, start, step, blo, bhi,
                                       max_iterations);
  const auto refined = lift(y);
  const double v = f(refined);
  if (v > best_val) {
    best_val = v;
    best = refined;
  }
  return best;
}

}  // namespace detail

/// Maximizes the threshold rate over modulation and threshold.  Deterministic;
/// ties keep the lowest mu, then the lowest threshold.
inline Optimum optimize_rate(const ProtocolConfig& c, const RateContext& ctx, const OptimizerOptions& o = {}) {
  validate(c);
  validate(o);
  require_weak(ctx);
  const double n = c.key_modes();
  const auto& m = ctx.fading;
  const bool fades = m.fades();
  std::array<bool, 2> free{!o.fixed_mu.has_value(), fades && !o.fixed_eta_th.has_value()};
  std::array<double, 2> lo{std::log(o.mu_min - 1.0), o.logit_lo}, hi{std::log(o.mu_max - 1.0), o.logit_hi};
  if (o.fixed_mu) lo[0] = hi[0] = *o.fixed_mu > 1.0 ? std::log(*o.fixed_mu - 1.0) : -math::kInf;

  auto point_of = [&](const std::array<double, 2>& x) {
    const double mu = o.fixed_mu ? *o.fixed_mu : 1.0 + std::exp(x[0]);
    if (o.fixed_eta_th) return OptimumPoint{mu, *o.fixed_eta_th, slot_probability(std::min(*o.fixed_eta_th, m.eta), m.eta, m)};
    const double p = fades ? detail::logistic(x[1]) : 1.0;
    return OptimumPoint{mu, detail::threshold_for_mass(m, p), p};
  };
  auto objective = [&](const std::array<double, 2>& x) {
    const auto pt = point_of(x);
    if (n * pt.p_slot < 1.0 || !(pt.eta_th < m.eta)) return -math::kInf;
    return threshold_rate(c, ctx, pt.mu, pt.eta_th).raw;
  };

  double best_val = -math::kInf;
  const auto best = detail::search_max(objective, free, lo, hi, o.grid, o.max_iterations, best_val);
  Optimum out;
  if (!best || !(best_val > 0)) return out;
  const auto pt = point_of(*best);
  out.argmax = pt;
  out.at_optimum = threshold_rate(c, ctx, pt.mu, pt.eta_th);
  out.rate = out.at_optimum.value;
  return out;
}

struct LatticeOptimum {
  double rate = 0.0;
  std::optional<double> mu;
  LatticeResult at_optimum;
};

/// Maximizes the lattice rate over the modulation.
inline LatticeOptimum optimize_lattice(const ProtocolConfig& c, const RateContext& ctx, int slots,
                                       const OptimizerOptions& o = {}) {
  validate(c);
  validate(o);
  require_weak(ctx);
  auto mu_of = [&](const std::array<double, 2>& x) { return o.fixed_mu ? *o.fixed_mu : 1.0 + std::exp(x[0]); };
  auto objective = [&](const std::array<double, 2>& x) { return lattice_rate(c, ctx, mu_of(x), slots).value; };
  std::array<double, 2> lo{std::log(o.mu_min - 1.0), 0.0}, hi{std::log(o.mu_max - 1.0), 0.0};
  double best_val = -math::kInf;
  const auto best = detail::search_max(objective, {!o.fixed_mu.has_value(), false}, lo, hi, o.grid, o.max_iterations, best_val);
  LatticeOptimum out;
  if (!best || !(best_val > 0)) return out;
  out.mu = mu_of(*best);
  out.at_optimum = lattice_rate(c, ctx, *out.mu, slots);
  out.rate = out.at_optimum.value;
  return out;
}

}  // namespace fso
