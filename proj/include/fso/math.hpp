#pragma once

// Special functions and quadrature helpers shared by the channel and key-rate
// modules.  Scaled Bessel functions keep e^{-x} factors folded in so that the
// fading formulas never overflow.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fso::math {

inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log2(1 - x) without cancellation for small x.
inline double log2_one_minus(double x) { return std::log1p(-x) / kLn2; }

/// Entropy of a thermal state with mean photon number x, in bits.  h(0) = 0.
inline double entropy_h(double x) {
  if (!(x >= 0.0)) throw std::domain_error("entropy_h: negative photon number");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return kInf;
  return ((x + 1.0) * std::log1p(x) - x * std::log(x)) / kLn2;
}

/// Von Neumann entropy of a thermal mode with symplectic eigenvalue nu >= 1.
/// Values within round-off below 1 are treated as 1.
inline double entropy_symplectic(double nu) {
  if (nu < 1.0 - 1e-9) throw std::domain_error("entropy_symplectic: eigenvalue below 1");
  return entropy_h(std::max(0.0, (nu - 1.0) / 2.0));
}

namespace detail {

// e^{-x} I_n(x) by the ascending series; accurate for 0 <= x <= ~30.
inline double bessel_i_scaled_series(int n, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  for (int j = 1; j <= n; ++j) term *= 0.5 * x / j;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * (k + n));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum * std::exp(-x);
}

// Hankel asymptotic expansion of e^{-x} I_n(x); used for x > 30.
inline double bessel_i_scaled_asymptotic(int n, double x) {
  const double mu = 4.0 * n * n;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * kPi * x);
}

inline constexpr double kBesselSeriesLimit = 30.0;

}  // namespace detail

/// e^{-|x|} I0(x).
inline double bessel_i0e(double x) {
  x = std::abs(x);
  return x <= detail::kBesselSeriesLimit ? detail::bessel_i_scaled_series(0, x)
                                         : detail::bessel_i_scaled_asymptotic(0, x);
}

/// e^{-|x|} I1(x), odd in x.
inline double bessel_i1e(double x) {
  const double ax = std::abs(x);
  const double v = ax <= detail::kBesselSeriesLimit ? detail::bessel_i_scaled_series(1, ax)
                                                    : detail::bessel_i_scaled_asymptotic(1, ax);
  return x < 0 ? -v : v;
}

/// I0(x) - 1 without cancellation for small x.  Intended for |x| <= 30.
inline double bessel_i0m1(double x) {
  const double q = 0.25 * x * x;
  double term = q;
  double sum = q;
  for (int k = 2; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

/// e^{-2x} I_n(2x) for n in {0, 1}.
inline double lambda_n(int n, double x) {
  if (n == 0) return bessel_i0e(2.0 * x);
  if (n == 1) return bessel_i1e(2.0 * x);
  throw std::invalid_argument("lambda_n: order must be 0 or 1");
}

/// 1 - e^{-2x} I0(2x), accurate as x -> 0.
inline double one_minus_lambda0(double x) {
  const double t = 2.0 * x;
  if (t < 1.0) return -std::expm1(-t) - std::exp(-t) * bessel_i0m1(t);
  return 1.0 - bessel_i0e(t);
}

/// Inverse of the complementary error function on (0, 2).
namespace detail {

// exp(x^2) erfc(x); continued fraction for x >= 5 where erfc underflows.
inline double erfc_scaled(double x) {
  if (x < 5.0) return std::exp(x * x) * std::erfc(x);
  double f = x;
  for (int k = 60; k >= 1; --k) f = x + 0.5 * k / f;
  return 1.0 / (std::sqrt(kPi) * f);
}

}  // namespace detail

inline double erfc_inv(double q) {
  if (!(q > 0.0 && q < 2.0)) {
    if (q == 0.0) return kInf;
    if (q == 2.0) return -kInf;
    throw std::domain_error("erfc_inv: argument outside (0, 2)");
  }
  if (q > 1.0) return -erfc_inv(2.0 - q);
  // Single-precision rational start, then Newton on log(erfc).
  double w = -std::log(q * (2.0 - q));
  double p;
  if (w < 5.0) {
    w -= 2.5;
    p = 2.81022636e-08;
    p = 3.43273939e-07 + p * w;
    p = -3.5233877e-06 + p * w;
    p = -4.39150654e-06 + p * w;
    p = 0.00021858087 + p * w;
    p = -0.00125372503 + p * w;
    p = -0.00417768164 + p * w;
    p = 0.246640727 + p * w;
    p = 1.50140941 + p * w;
  } else {
    w = std::sqrt(w) - 3.0;
    p = -0.000200214257;
    p = 0.000100950558 + p * w;
    p = 0.00134934322 + p * w;
    p = -0.00367342844 + p * w;
    p = 0.00573950773 + p * w;
    p = -0.0076224613 + p * w;
    p = 0.00943887047 + p * w;
    p = 1.00167406 + p * w;
    p = 2.83297682 + p * w;
  }
  double x = p * (1.0 - q);
  if (q < 1e-8) {
    // leading asymptotic inverse of erfc(x) ~ exp(-x^2) / (x sqrt(pi))
    const double t = -std::log(q);
    x = std::sqrt(t - 0.5 * std::log(kPi * t));
  }
  const double log_q = std::log(q);
  for (int it = 0; it < 8; ++it) {
    const double scaled = detail::erfc_scaled(x);
    const double step = (std::log(scaled) - x * x - log_q) * std::sqrt(kPi) * scaled / 2.0;
    x += step;
    if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

// ---- quadrature -----------------------------------------------------------

// One rule per thread; the rules grow their abscissa tables lazily.
inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
  thread_local boost::math::quadrature::tanh_sinh<double> rule(18);
  return rule;
}

inline boost::math::quadrature::exp_sinh<double>& exp_sinh_rule() {
  thread_local boost::math::quadrature::exp_sinh<double> rule(12);
  return rule;
}

/// Integral over [a, b] tolerant of integrable endpoint singularities.
template <class F>
double integrate_interval(F&& f, double a, double b, double rel_tol = 1e-10) {
  if (a == b) return 0.0;
  if (b < a) return -integrate_interval(f, b, a, rel_tol);
  return tanh_sinh_rule().integrate(f, a, b, rel_tol);
}

/// Integral over [a, inf).
template <class F>
double integrate_half_line(F&& f, double a = 0.0, double rel_tol = 1e-10) {
  auto shifted = [&](double u) { return f(a + u); };
  return exp_sinh_rule().integrate(shifted, 0.0, kInf, rel_tol);
}

/// Adaptive Gauss-Kronrod over [a, b] for smooth integrands.
template <class F>
double integrate_smooth(F&& f, double a, double b, double rel_tol = 1e-11) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, rel_tol);
}

// ---- local maximization ----------------------------------------------------

/// Nelder-Mead maximization inside the box [lo, hi]; trial points are clamped
/// to the box.  Deterministic; returns the best vertex.
template <class F>
std::vector<double> nelder_mead_max(F&& f, std::vector<double> start, const std::vector<double>& step,
                                    const std::vector<double>& lo, const std::vector<double>& hi,
                                    int max_iterations = 400, double tol = 1e-9) {
  const std::size_t n = start.size();
  if (n == 0) return start;
  auto clamp = [&](std::vector<double> x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
  };
  std::vector<std::vector<double>> pts{clamp(start)};
  for (std::size_t i = 0; i < n; ++i) {
    auto x = pts[0];
    x[i] += step[i];
    if (clamp(x)[i] == pts[0][i]) x[i] -= 2 * step[i];
    pts.push_back(clamp(x));
  }
  std::vector<double> val;
  for (const auto& x : pts) val.push_back(f(x));
  auto affine = [&](const std::vector<double>& a, const std::vector<double>& b, double t) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i] + t * (b[i] - a[i]);
    return clamp(x);
  };
  std::vector<std::size_t> order(n + 1);
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] > val[b]; });
    const auto best = order.front(), worst = order.back();
    double spread = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t i = 0; i < n; ++i) spread += std::abs(pts[order[k]][i] - pts[best][i]);
    if (spread < tol) break;
    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[order[k]][i] / n;
    const auto refl = affine(centroid, pts[worst], -1.0);
    const double f_refl = f(refl);
    if (f_refl > val[best]) {
      const auto expd = affine(centroid, pts[worst], -2.0);
      const double f_exp = f(expd);
      if (f_exp > f_refl) {
        pts[worst] = expd;
        val[worst] = f_exp;
      } else {
        pts[worst] = refl;
        val[worst] = f_refl;
      }
    } else if (f_refl > val[order[n - 1]]) {
      pts[worst] = refl;
      val[worst] = f_refl;
    } else {
      const auto con = affine(centroid, pts[worst], 0.5);
      const double f_con = f(con);
      if (f_con > val[worst]) {
        pts[worst] = con;
        val[worst] = f_con;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          pts[order[k]] = affine(pts[best], pts[order[k]], 0.5);
          val[order[k]] = f(pts[order[k]]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k <= n; ++k)
    if (val[k] > val[best]) best = k;
  return pts[best];
}

}  // namespace fso::math
