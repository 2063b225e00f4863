#include "fso/bounds.hpp"
#include "fso/link.hpp"
#include "oracles.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace fso;

namespace {

LinkState day_link(double z) { return evaluate_link(preset_link(Preset::day, z)); }

}  // namespace

TEST(Plob, Values) {
  EXPECT_EQ(plob(0.0), 0.0);
  EXPECT_NEAR(plob(0.5), 1.0, 1e-15);
  EXPECT_NEAR(plob(0.01), 0.0144996, 1e-6);
  // -ln(1 - tau) / tau = 1 + tau/2 + O(tau^2)
  EXPECT_NEAR(plob(0.01) / (0.01 / std::log(2.0)), 1.005, 1e-4);
  EXPECT_NEAR(plob(1e-12), 1e-12 / std::log(2.0), 1e-24);
}

TEST(PlobThermal, ThresholdAndReduction) {
  EXPECT_EQ(plob_thermal(0.3, 0.0), plob(0.3));
  EXPECT_EQ(plob_thermal(0.3, 0.3), 0.0);
  EXPECT_EQ(plob_thermal(0.3, 0.5), 0.0);
}

TEST(PlobThermal, ExtendedPrecisionReference) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const Big tau("0.5"), n("0.1");
  const Big r = n / (1 - tau);
  const Big h = (r + 1) * log(r + 1) / log(Big(2)) - r * log(r) / log(Big(2));
  const Big ref = -log((1 - tau) * pow(tau, r)) / log(Big(2)) - h;
  EXPECT_NEAR(plob_thermal(0.5, 0.1), static_cast<double>(ref), 1e-14);
}

TEST(Delta, NoWanderLimit) {
  auto m = day_link(500).fading;
  m.sigma = 0;
  EXPECT_EQ(delta_correction(m), 1.0);
  EXPECT_NEAR(loss_bound(m), plob(m.eta), 1e-15);
  m.sigma = 1e-7;
  EXPECT_NEAR(delta_correction(m), 1.0, 1e-9);
  EXPECT_NEAR(lambda_correction(m), 1.0, 1e-9);
}

TEST(Delta, ByPartsIdentity) {
  for (double z : {100.0, 300.0, 700.0, 1000.0}) {
    const auto m = day_link(z).fading;
    const double direct = reference::tau_domain_average(m, [](double t) { return -std::log2(1 - t); });
    EXPECT_NEAR(loss_bound(m), direct, 1e-8) << z;
    EXPECT_NEAR(-delta_correction(m) * std::log2(1 - m.eta), loss_bound(m), 1e-12);
  }
}

TEST(Delta, WithinUnitIntervalOnSweep) {
  for (double z = 50; z <= 1000; z += 50) {
    const double d = delta_correction(day_link(z).fading);
    EXPECT_GT(d, 0.0) << z;
    EXPECT_LE(d, 1.0) << z;
  }
}

TEST(LossBound, DecreasingInWander) {
  auto m = day_link(800).fading;
  double prev = plob(m.eta);
  for (double s : {1e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1}) {
    m.sigma = s;
    const double b = loss_bound(m);
    EXPECT_LT(b, prev) << s;
    prev = b;
  }
}

TEST(LossBound, HighLossLambdaApproximation) {
  for (double z = 100; z <= 1000; z += 100) {
    auto m = day_link(z).fading;
    for (double eta : {1e-3, 5e-3, 9.9e-3}) {
      m.eta = eta;
      const double approx = eta * lambda_correction(m) / std::log(2.0);
      EXPECT_NEAR(approx / loss_bound(m), 1.0, 0.01) << z << " " << eta;
      EXPECT_LT(std::abs(lambda_correction(m) - delta_correction(m)), 1e-2);
    }
  }
}

TEST(Lambda, InUnitInterval) {
  for (double z = 50; z <= 1000; z += 190) {
    const double l = lambda_correction(day_link(z).fading);
    EXPECT_GT(l, 0.0);
    EXPECT_LE(l, 1.0);
  }
}

TEST(Thermal, CollapseAtZeroNoise) {
  const auto m = day_link(600).fading;
  EXPECT_NEAR(thermal_upper(m, 1e-12), loss_bound(m), 1e-6);
  EXPECT_EQ(thermal_upper(m, 0.0), loss_bound(m));
  EXPECT_EQ(thermal_lower(m, 0.0), loss_bound(m));
  EXPECT_EQ(thermal_upper(m, m.eta), 0.0);
  EXPECT_EQ(thermal_upper(m, 2 * m.eta), 0.0);
}

TEST(Thermal, ContinuousAtZeroNoise) {
  const auto m = day_link(600).fading;
  double prev = loss_bound(m);
  for (double n : {1e-14, 1e-12, 1e-10, 1e-8}) {
    const double u = thermal_upper(m, n);
    EXPECT_LE(u, prev + 1e-12);
    EXPECT_NEAR(u, loss_bound(m), 1e-6 + 50 * n * std::abs(std::log2(n)));
    prev = u;
  }
}

TEST(Thermal, SandwichOnDaySweep) {
  for (double z = 50; z <= 1000; z += 50) {
    const auto s = day_link(z);
    const auto& m = s.fading;
    const double up = thermal_upper(m, s.n_bar);
    const double lo = thermal_lower(m, s.n_bar);
    const double lo_q = thermal_lower_quadrature(m, s.n_bar);
    EXPECT_LE(lo, up) << z;
    EXPECT_LE(up, loss_bound(m)) << z;
    EXPECT_GE(lo_q, lo - 1e-12) << z;
    EXPECT_LE(lo_q, up) << z;
    const double direct = reference::tau_domain_average(
        m, [&](double t) { return plob_thermal(t, s.n_bar); }, s.n_bar, m.eta);
    EXPECT_LE(direct, up + 1e-9) << z;
  }
}

TEST(Thermal, ResultStructConsistency) {
  const auto s = day_link(400);
  const auto r = thermal_bounds(s.fading, s.n_bar);
  EXPECT_EQ(r.kind, BoundKind::thermal);
  EXPECT_DOUBLE_EQ(r.upper, thermal_upper(s.fading, s.n_bar));
  EXPECT_DOUBLE_EQ(r.lower, thermal_lower(s.fading, s.n_bar));
  EXPECT_LE(r.lower, r.upper);
  EXPECT_GE(r.delta_factor, 0);
  EXPECT_LE(r.delta_factor, 1);
}

TEST(MaxDistance, ClosedFormAndScaling) {
  LinkGeometry g;
  g.waist = g.rx_aperture = 0.05;
  EXPECT_FALSE(max_secure_distance(g, 0.0).has_value());
  for (double n : {1e-5, 2.4e-3, 0.05}) {
    const double z = *max_secure_distance(g, n);
    const double closed = M_PI * g.waist * g.rx_aperture / g.wavelength * std::sqrt(2.0 / -std::log1p(-n));
    EXPECT_NEAR(z / closed, 1.0, 1e-10);
    auto g2 = g;
    g2.rx_aperture *= 2;
    EXPECT_NEAR(*max_secure_distance(g2, n) / z, 2.0, 1e-10);
  }
}

TEST(MaxDistance, BoundsTheThermalBoundRoot) {
  // pure diffraction link: no turbulence, no setup loss, no extinction
  auto in = preset_link(Preset::day, 1000);
  in.turbulence.cn2_fixed = 0.0;
  in.pointing_jitter = 0.0;
  in.noise.eta_eff = 1.0;
  in.extinction.alpha0 = 0.0;
  const double n = evaluate_link(in).n_bar;
  const double z_max = *max_secure_distance(in.geometry, n);
  auto at = [&](double z) {
    auto i = in;
    i.geometry.distance = z;
    return evaluate_link(i);
  };
  auto bisect = [](auto positive) {
    double lo = 100, hi = 1e7;
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      (positive(mid) ? lo : hi) = mid;
    }
    return lo;
  };
  // eta = n at the near-field diffraction transmissivity; z_max is its far-field form
  const double eta_root = bisect([&](double z) { return at(z).fading.eta > n; });
  EXPECT_NEAR(eta_root / z_max, 1.0, 0.005);
  // the thermal upper bound closes no later than z_max
  const double ub_root = bisect([&](double z) {
    const auto s = at(z);
    return thermal_upper_raw(s.fading, s.n_bar) > 0;
  });
  EXPECT_LE(ub_root, z_max);
  const auto s = at(z_max);
  EXPECT_EQ(thermal_upper(s.fading, s.n_bar), 0.0);
}

TEST(DetectorRegimes, SlowBoundChain) {
  double worst_excess = 0.0;
  for (double z = 100; z <= 1000; z += 100) {
    const auto s = day_link(z);
    const double fast = loss_bound(s.fading);
    const double slow = slow_detector_bound(s.geometry, s.turbulence, s.eta_eff, s.eta_atm);
    const double w2 = s.turbulence.w_lt * s.turbulence.w_lt + s.turbulence.sigma_p * s.turbulence.sigma_p;
    EXPECT_LE(slow, 2 / std::log(2.0) * 0.0025 / w2);
    EXPECT_GT(slow, 0.0);
    worst_excess = std::max(worst_excess, (slow - fast) / fast);
  }
  // slow and fast bounds describe different detectors and are not ordered
  RecordProperty("max_relative_slow_over_fast", std::to_string(worst_excess));
}

TEST(DetectorRegimes, Reductions) {
  auto s = day_link(150);
  auto t = s.turbulence;
  t.sigma_tb = t.sigma_p = t.sigma = 0;
  t.w_lt = t.w_st;
  auto m = s.fading;
  m.sigma = 0;
  EXPECT_NEAR(slow_detector_bound(s.geometry, t, s.eta_eff, s.eta_atm), loss_bound(m), 1e-14);
  const auto inter_m = intermediate_fading_model(s.geometry, t, s.eta_eff, s.eta_atm);
  EXPECT_NEAR(intermediate_detector_bound(s.geometry, t, s.eta_eff, s.eta_atm), plob(inter_m.eta), 1e-14);
  // w_lt = w_st: intermediate equals the fast bound with wander sigma_p only
  auto t2 = s.turbulence;
  t2.w_lt = t2.w_st;
  auto m2 = s.fading;
  m2.sigma = t2.sigma_p;
  EXPECT_NEAR(intermediate_detector_bound(s.geometry, t2, s.eta_eff, s.eta_atm), loss_bound(m2), 1e-12);
}

TEST(Achievable, ProtocolLimits) {
  for (double tau : {0.01, 0.3, 0.8}) {
    EXPECT_NEAR(squeezed_rate(1.0, tau), plob(tau), 1e-15);
    EXPECT_NEAR(squeezed_rate(0.5, tau), plob(tau) / 2, 1e-15);
    EXPECT_NEAR(coherent_rate(tau, 0.0), plob(tau) / 2, 1e-14);
    const double n = 1e-6;
    EXPECT_NEAR(coherent_rate(tau, n), plob(tau) / 2 - entropy_h(n / (1 - tau)), 1.01 * n * tau / ((1 - tau) * std::log(2.0)));
  }
  const auto m = day_link(300).fading;
  EXPECT_NEAR(fading_average(m, [](double t) { return squeezed_rate(1.0, t); }), loss_bound(m), 1e-9);
}

TEST(TrustedSetup, SwapsChannelParameters) {
  const auto s = day_link(400);
  const auto u = bound_inputs(s, false);
  const auto t = bound_inputs(s, true);
  EXPECT_EQ(u.fading.eta, s.fading.eta);
  EXPECT_NEAR(t.fading.eta, s.fading.eta_st * s.eta_atm, 1e-15);
  EXPECT_NEAR(t.n_bar, s.eta_eff * s.n_background, 1e-20);
  EXPECT_GE(thermal_upper(t.fading, t.n_bar), thermal_upper(u.fading, u.n_bar));
}
