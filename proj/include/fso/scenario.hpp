#pragma once

// Scenario files and sweep evaluation behind the command-line tool.
//
// A scenario is flat `key = value` text.  Keys carry a section prefix and a
// unit suffix (geometry.z_m, noise.gate_ns); `#` starts a comment.  A
// `preset = night|day` line loads the reference link first, whatever its
// position; all other keys then apply in file order.

#include "fso/bounds.hpp"
#include "fso/finite_size.hpp"
#include "fso/link.hpp"
#include "fso/oracle_mc.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace fso {

inline constexpr int kCsvSchemaVersion = 1;

/// Malformed scenario text; line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& what)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Sweep point outside the weak-turbulence regime.
class RegimeViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SweepVariable { none, distance, rx_aperture, modulation, threshold, slots };

inline std::string_view column_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::none:
    case SweepVariable::distance: return "z_m";
    case SweepVariable::rx_aperture: return "aR_m";
    case SweepVariable::modulation: return "mu";
    case SweepVariable::threshold: return "eta_th";
    case SweepVariable::slots: return "M";
  }
  return "x";
}

struct SweepSpec {
  SweepVariable variable = SweepVariable::none;
  double from = 0.0;
  double to = 0.0;
  int points = 1;
  bool log_spacing = false;

  std::vector<double> values() const {
    if (variable == SweepVariable::none) return {std::numeric_limits<double>::quiet_NaN()};
    std::vector<double> v;
    for (int i = 0; i < points; ++i) {
      const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
      v.push_back(log_spacing ? from * std::pow(to / from, t) : from + (to - from) * t);
      if (variable == SweepVariable::slots) v.back() = std::round(v.back());
    }
    if (points > 1) v.back() = to;
    return v;
  }
};

struct Scenario {
  std::optional<Preset> preset;
  LinkInputs link;
  ProtocolConfig collective;
  ProtocolConfig general;
  OptimizerOptions optimizer;
  std::optional<int> slots;  // lattice strategy when set
  bool trusted_setup = false;
  SweepSpec sweep;
  std::size_t oracle_samples = 0;
  std::optional<std::string> output;
};

/// Reference finite-size protocol: collective and general-attack parameter sets.
inline ProtocolConfig reference_protocol(Attack a) {
  ProtocolConfig c;
  c.attack = a;
  if (a == Attack::general) {
    c.p_ec = 0.1;
    c.eps_s = c.eps_h = c.eps_cor = c.eps_pe = 1e-43;
    c.energy_test_fraction = 0.9;
  }
  return c;
}

inline Scenario default_scenario() {
  Scenario s;
  s.collective = reference_protocol(Attack::collective);
  s.general = reference_protocol(Attack::general);
  return s;
}

// ---- value parsing ---------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_plain(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Decimal number, or a power `b^e` with optional factor `k*b^e`.
inline double parse_number(std::string_view s) {
  s = detail::trim(s);
  if (s.empty()) throw std::invalid_argument("missing number");
  const auto caret = s.find('^');
  if (caret == std::string_view::npos) return detail::parse_plain(s);
  double factor = 1.0;
  auto base_part = s.substr(0, caret);
  if (const auto star = base_part.find('*'); star != std::string_view::npos) {
    factor = detail::parse_plain(detail::trim(base_part.substr(0, star)));
    base_part = base_part.substr(star + 1);
  }
  const double base = detail::parse_plain(detail::trim(base_part));
  const double exponent = detail::parse_plain(detail::trim(s.substr(caret + 1)));
  const double v = factor * std::pow(base, exponent);
  if (!std::isfinite(v)) throw std::invalid_argument("number out of range: '" + std::string(s) + "'");
  return v;
}

inline int parse_count(std::string_view s) {
  const double v = parse_number(s);
  if (!(v >= 0 && v <= 1e9 && v == std::floor(v))) throw std::invalid_argument("expected a non-negative integer");
  return static_cast<int>(v);
}

inline bool parse_flag(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected true or false");
}

inline Detection parse_detection(std::string_view s) {
  if (s == "hom" || s == "homodyne") return Detection::homodyne;
  if (s == "het" || s == "heterodyne") return Detection::heterodyne;
  throw std::invalid_argument("detection must be hom or het");
}

inline SweepVariable parse_sweep_variable(std::string_view s) {
  if (s == "z") return SweepVariable::distance;
  if (s == "aR") return SweepVariable::rx_aperture;
  if (s == "mu") return SweepVariable::modulation;
  if (s == "eta_th") return SweepVariable::threshold;
  if (s == "M") return SweepVariable::slots;
  throw std::invalid_argument("sweep variable must be one of z, aR, mu, eta_th, M");
}

// ---- key table --------------------------------------------------------------

namespace detail {

using Setter = std::function<void(Scenario&, std::string_view)>;

inline void add_protocol_keys(std::map<std::string, Setter, std::less<>>& t, const std::string& prefix,
                              ProtocolConfig Scenario::*member) {
  auto num = [&](const char* key, double ProtocolConfig::*field) {
    t[prefix + key] = [member, field](Scenario& s, std::string_view v) { (s.*member).*field = parse_number(v); };
  };
  num(".N", &ProtocolConfig::total_modes);
  num(".m", &ProtocolConfig::estimation_modes);
  num(".d", &ProtocolConfig::alphabet);
  num(".beta", &ProtocolConfig::beta);
  num(".p_ec", &ProtocolConfig::p_ec);
  num(".eps_s", &ProtocolConfig::eps_s);
  num(".eps_h", &ProtocolConfig::eps_h);
  num(".eps_cor", &ProtocolConfig::eps_cor);
  num(".eps_pe", &ProtocolConfig::eps_pe);
  num(".f_et", &ProtocolConfig::energy_test_fraction);
  t[prefix + ".eps"] = [member](Scenario& s, std::string_view v) {
    auto& c = s.*member;
    c.eps_s = c.eps_h = c.eps_cor = c.eps_pe = parse_number(v);
  };
  t[prefix + ".d_T"] = [member](Scenario& s, std::string_view v) { (s.*member).threshold_tx = parse_number(v); };
  t[prefix + ".d_R"] = [member](Scenario& s, std::string_view v) { (s.*member).threshold_rx = parse_number(v); };
  t[prefix + ".detection"] = [member](Scenario& s, std::string_view v) { (s.*member).detection = parse_detection(v); };
  t[prefix + ".estimation"] = [member](Scenario& s, std::string_view v) {
    if (v == "pilot") (s.*member).estimation = ChannelEstimation::pilot;
    else if (v == "blind") (s.*member).estimation = ChannelEstimation::blind;
    else throw std::invalid_argument("estimation must be pilot or blind");
  };
  t[prefix + ".estimated_parameters"] = [member](Scenario& s, std::string_view v) {
    (s.*member).estimated_parameters = parse_count(v);
  };
}

inline const std::map<std::string, Setter, std::less<>>& key_table() {
  static const auto table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto num = [&t](const char* key, auto field_ref) {
      t[key] = [field_ref](Scenario& s, std::string_view v) { field_ref(s) = parse_number(v); };
    };
    t["geometry.lambda_nm"] = [](Scenario& s, std::string_view v) { s.link.geometry.wavelength = parse_number(v) * 1e-9; };
    num("geometry.z_m", [](Scenario& s) -> double& { return s.link.geometry.distance; });
    num("geometry.h_m", [](Scenario& s) -> double& { return s.link.geometry.altitude; });
    num("geometry.w0_m", [](Scenario& s) -> double& { return s.link.geometry.waist; });
    num("geometry.aT_m", [](Scenario& s) -> double& { return s.link.geometry.tx_aperture; });
    num("geometry.aR_m", [](Scenario& s) -> double& { return s.link.geometry.rx_aperture; });
    t["geometry.R0_m"] = [](Scenario& s, std::string_view v) { s.link.geometry.curvature = parse_number(v); };
    num("extinction.alpha0_per_m", [](Scenario& s) -> double& { return s.link.extinction.alpha0; });
    num("extinction.scale_height_m", [](Scenario& s) -> double& { return s.link.extinction.scale_height; });
    t["turbulence.cn2_m23"] = [](Scenario& s, std::string_view v) { s.link.turbulence.cn2_fixed = parse_number(v); };
    num("turbulence.wind_mps", [](Scenario& s) -> double& { return s.link.turbulence.wind; });
    num("turbulence.A_m23", [](Scenario& s) -> double& { return s.link.turbulence.ground; });
    num("turbulence.jitter_rad", [](Scenario& s) -> double& { return s.link.pointing_jitter; });
    num("noise.sky_w_m2_nm_sr", [](Scenario& s) -> double& { return s.link.noise.sky_brightness; });
    num("noise.filter_nm", [](Scenario& s) -> double& { return s.link.noise.filter_nm; });
    t["noise.gate_ns"] = [](Scenario& s, std::string_view v) { s.link.noise.gate = parse_number(v) * 1e-9; };
    num("noise.fov_sr", [](Scenario& s) -> double& { return s.link.noise.fov; });
    num("noise.eta_eff", [](Scenario& s) -> double& { return s.link.noise.eta_eff; });
    num("noise.n_ex", [](Scenario& s) -> double& { return s.link.noise.n_ex; });
    add_protocol_keys(t, "collective", &Scenario::collective);
    add_protocol_keys(t, "general", &Scenario::general);
    t["rate.mu"] = [](Scenario& s, std::string_view v) { s.optimizer.fixed_mu = parse_number(v); };
    t["rate.eta_th"] = [](Scenario& s, std::string_view v) { s.optimizer.fixed_eta_th = parse_number(v); };
    t["rate.mu_max"] = [](Scenario& s, std::string_view v) { s.optimizer.mu_max = parse_number(v); };
    t["rate.grid"] = [](Scenario& s, std::string_view v) { s.optimizer.grid = parse_count(v); };
    t["rate.slots"] = [](Scenario& s, std::string_view v) { s.slots = parse_count(v); };
    t["bounds.trusted_setup"] = [](Scenario& s, std::string_view v) { s.trusted_setup = parse_flag(v); };
    t["sweep.variable"] = [](Scenario& s, std::string_view v) { s.sweep.variable = parse_sweep_variable(v); };
    num("sweep.from", [](Scenario& s) -> double& { return s.sweep.from; });
    num("sweep.to", [](Scenario& s) -> double& { return s.sweep.to; });
    t["sweep.points"] = [](Scenario& s, std::string_view v) { s.sweep.points = parse_count(v); };
    t["sweep.spacing"] = [](Scenario& s, std::string_view v) {
      if (v == "linear") s.sweep.log_spacing = false;
      else if (v == "log") s.sweep.log_spacing = true;
      else throw std::invalid_argument("spacing must be linear or log");
    };
    t["oracle.samples"] = [](Scenario& s, std::string_view v) { s.oracle_samples = static_cast<std::size_t>(parse_count(v)); };
    t["output.path"] = [](Scenario& s, std::string_view v) { s.output = std::string(v); };
    return t;
  }();
  return table;
}

}  // namespace detail

/// Rejects inconsistent combinations that single keys cannot catch.
inline void validate(const Scenario& s) {
  validate(s.link.geometry);
  validate(s.link.noise);
  validate(s.collective);
  validate(s.general);
  validate(s.optimizer);
  if (s.collective.attack != Attack::collective || s.general.attack != Attack::general)
    throw std::invalid_argument("scenario: protocol sections swapped");
  if (s.link.pointing_jitter < 0) throw std::invalid_argument("scenario: negative pointing jitter");
  if (s.slots && *s.slots < 2) throw std::invalid_argument("scenario: rate.slots must be at least 2");
  const auto& w = s.sweep;
  if (w.variable != SweepVariable::none) {
    if (w.points < 1) throw std::invalid_argument("scenario: sweep.points must be positive");
    if (w.log_spacing && !(w.from > 0 && w.to > 0)) throw std::invalid_argument("scenario: log sweep needs positive bounds");
    if (w.variable == SweepVariable::slots && !(w.from >= 2 && w.to >= 2))
      throw std::invalid_argument("scenario: slot sweep needs M >= 2");
    if ((w.variable == SweepVariable::distance || w.variable == SweepVariable::rx_aperture) && !(w.from > 0 && w.to > 0))
      throw std::invalid_argument("scenario: distance and aperture sweeps need positive bounds");
  }
}

inline Scenario parse_scenario(std::string_view text) {
  struct Entry {
    int line;
    int key_col;
    int value_col;
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (detail::trim(line).empty()) continue;
    const int first = static_cast<int>(line.find_first_not_of(" \t")) + 1;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, first, "expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, first, "missing key");
    const auto raw_value = line.substr(eq + 1);
    const auto value = detail::trim(raw_value);
    const auto lead = raw_value.find_first_not_of(" \t");
    const int value_col = static_cast<int>(eq) + 2 + static_cast<int>(lead == std::string_view::npos ? 0 : lead);
    if (value.empty()) throw ParseError(line_no, value_col, "missing value for '" + std::string(key) + "'");
    if (key != "preset" && !detail::key_table().count(key))
      throw ParseError(line_no, first, "unknown key '" + std::string(key) + "'");
    if (const auto it = seen.find(key); it != seen.end())
      throw ParseError(line_no, first, "duplicate key '" + std::string(key) + "' (first on line " + std::to_string(it->second) + ")");
    seen.emplace(std::string(key), line_no);
    entries.push_back({line_no, first, value_col, std::string(key), std::string(value)});
  }

  Scenario s = default_scenario();
  for (const auto& e : entries) {
    if (e.key != "preset") continue;
    const auto p = parse_preset(e.value);
    if (!p) throw ParseError(e.line, e.value_col, "preset must be night or day");
    s.preset = p;
    s.link = preset_link(*p, 1000.0);
  }
  for (const auto& e : entries) {
    if (e.key == "preset") continue;
    try {
      detail::key_table().at(e.key)(s, e.value);
    } catch (const std::invalid_argument& ex) {
      throw ParseError(e.line, e.value_col, e.key + ": " + ex.what());
    }
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

/// Preset expanded as scenario text.
inline std::string preset_text(Preset p) {
  const auto in = preset_link(p, 1000.0);
  char buf[2048];
  std::snprintf(buf, sizeof buf,
                "# %s preset\n"
                "geometry.lambda_nm = %.17g\ngeometry.h_m = %.17g\ngeometry.w0_m = %.17g\n"
                "geometry.aT_m = %.17g\ngeometry.aR_m = %.17g\n"
                "extinction.alpha0_per_m = %.17g\nextinction.scale_height_m = %.17g\n"
                "turbulence.wind_mps = %.17g\nturbulence.A_m23 = %.17g\nturbulence.jitter_rad = %.17g\n"
                "noise.sky_w_m2_nm_sr = %.17g\nnoise.filter_nm = %.17g\nnoise.gate_ns = %.17g\n"
                "noise.fov_sr = %.17g\nnoise.eta_eff = %.17g\nnoise.n_ex = %.17g\n",
                std::string(to_string(p)).c_str(), in.geometry.wavelength * 1e9, in.geometry.altitude,
                in.geometry.waist, in.geometry.tx_aperture, in.geometry.rx_aperture, in.extinction.alpha0,
                in.extinction.scale_height, in.turbulence.wind, in.turbulence.ground, in.pointing_jitter,
                in.noise.sky_brightness, in.noise.filter_nm, in.noise.gate * 1e9, in.noise.fov, in.noise.eta_eff,
                in.noise.n_ex);
  return buf;
}

// ---- evaluation ---------------------------------------------------------------

struct RunOptions {
  bool override_regime = false;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct PointInputs {
  LinkInputs link;
  OptimizerOptions optimizer;
  std::optional<int> slots;
};

/// Inputs of sweep point x; NaN x means no sweep.
inline PointInputs point_inputs(const Scenario& s, double x) {
  PointInputs p{s.link, s.optimizer, s.slots};
  switch (s.sweep.variable) {
    case SweepVariable::none: break;
    case SweepVariable::distance: p.link.geometry.distance = x; break;
    case SweepVariable::rx_aperture: p.link.geometry.rx_aperture = x; break;
    case SweepVariable::modulation: p.optimizer.fixed_mu = x; break;
    case SweepVariable::threshold: p.optimizer.fixed_eta_th = x; break;
    case SweepVariable::slots: p.slots = static_cast<int>(x); break;
  }
  return p;
}

inline double sweep_coordinate(const Scenario& s, double x) {
  return s.sweep.variable == SweepVariable::none ? s.link.geometry.distance : x;
}

struct RegimeReport {
  double x;
  Regime regime;
  double rytov_var;
  double coherence_ratio;
  std::vector<std::string> warnings;
};

inline RegimeReport classify_point(const Scenario& s, double x) {
  const auto in = point_inputs(s, x);
  validate(in.link.geometry);
  const auto t = make_turbulence_state(in.link.geometry, in.link.turbulence.cn2(in.link.geometry.altitude),
                                       in.link.pointing_jitter);
  return {sweep_coordinate(s, x), t.regime, t.rytov_var, t.rho0 / in.link.geometry.waist,
          geometry_warnings(in.link.geometry)};
}

struct PointResult {
  double x = 0.0;
  LinkState link;
  double delta = 0.0;
  double loss = 0.0;
  double thermal_up = 0.0;
  double thermal_lo = 0.0;
  double rate_collective = 0.0;
  double rate_general = 0.0;
  double eps = 0.0;
  std::optional<double> eps_prime;
  std::optional<double> mu_collective, eta_th_collective, mu_general, eta_th_general;
  std::optional<double> ks;
  bool lattice = false;
};

inline PointResult evaluate_point(const Scenario& s, double x, std::size_t index, const RunOptions& opt) {
  const auto in = point_inputs(s, x);
  PointResult r;
  r.x = sweep_coordinate(s, x);
  r.link = evaluate_link(in.link);
  const auto regime = r.link.turbulence.regime;
  if (regime == Regime::strong && !opt.override_regime) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "point %zu (%s = %.17g): strong turbulence, Rytov variance %.4g", index + 1,
                  std::string(column_name(s.sweep.variable)).c_str(), r.x, r.link.turbulence.rytov_var);
    throw RegimeViolation(buf);
  }
  const auto& m = r.link.fading;
  r.delta = delta_correction(m);
  r.loss = loss_bound(m);
  const auto b = bound_inputs(r.link, s.trusted_setup);
  r.thermal_up = thermal_upper(b.fading, b.n_bar);
  r.thermal_lo = thermal_lower(b.fading, b.n_bar);

  const RateContext ctx{m, r.link.n_bar, regime, opt.override_regime};
  r.eps = total_epsilon(s.collective);
  if (in.slots) {
    r.lattice = true;
    const auto c = optimize_lattice(s.collective, ctx, *in.slots, in.optimizer);
    const auto g = optimize_lattice(s.general, ctx, *in.slots, in.optimizer);
    r.rate_collective = c.rate;
    r.rate_general = g.rate;
    r.mu_collective = c.mu;
    r.mu_general = g.mu;
    if (g.mu) r.eps_prime = g.at_optimum.epsilon.eps_prime;
  } else {
    const auto c = optimize_rate(s.collective, ctx, in.optimizer);
    const auto g = optimize_rate(s.general, ctx, in.optimizer);
    r.rate_collective = c.rate;
    r.rate_general = g.rate;
    if (c.argmax) {
      r.mu_collective = c.argmax->mu;
      r.eta_th_collective = c.argmax->eta_th;
    }
    if (g.argmax) {
      r.mu_general = g.argmax->mu;
      r.eta_th_general = g.argmax->eta_th;
      r.eps_prime = g.at_optimum.epsilon.eps_prime;
    }
  }
  if (s.oracle_samples > 0) {
    const auto tau = sample_fading(m, splitmix64(opt.seed + index), s.oracle_samples);
    r.ks = ks_distance(tau, [&](double t) { return p0_cdf(t, m); });
  }
  return r;
}

// ---- CSV ------------------------------------------------------------------------

inline std::string csv_header(const Scenario& s) {
  return std::string(column_name(s.sweep.variable)) +
         ",eta_d,eta_st,eta,sigma_m,delta,loss_bound,thermal_upper,thermal_lower,rate_collective,rate_general,"
         "eps,eps_prime,regime,strong,strategy,mu_collective,eta_th_collective,mu_general,eta_th_general,n_bar,"
         "ks_distance,schema_version\r\n";
}

namespace detail {

inline void put_number(std::string& out, double v) {
  char buf[40];
  if (std::isnan(v)) buf[0] = '\0';
  else std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

inline void put_optional(std::string& out, const std::optional<double>& v) {
  if (v) put_number(out, *v);
}

}  // namespace detail

inline std::string csv_row(const PointResult& r) {
  std::string out;
  auto num = [&](double v) {
    detail::put_number(out, v);
    out += ',';
  };
  auto opt = [&](const std::optional<double>& v) {
    detail::put_optional(out, v);
    out += ',';
  };
  num(r.x);
  num(r.link.eta_d);
  num(r.link.fading.eta_st);
  num(r.link.fading.eta);
  num(r.link.fading.sigma);
  num(r.delta);
  num(r.loss);
  num(r.thermal_up);
  num(r.thermal_lo);
  num(r.rate_collective);
  num(r.rate_general);
  num(r.eps);
  opt(r.eps_prime);
  out += to_string(r.link.turbulence.regime);
  out += r.link.turbulence.regime == Regime::strong ? ",1," : ",0,";
  out += r.lattice ? "lattice," : "threshold,";
  opt(r.mu_collective);
  opt(r.eta_th_collective);
  opt(r.mu_general);
  opt(r.eta_th_general);
  num(r.link.n_bar);
  opt(r.ks);
  out += std::to_string(kCsvSchemaVersion);
  out += "\r\n";
  return out;
}

/// Checks every point's regime first so that a violation leaves no partial
/// output, then evaluates points concurrently and joins rows in sweep order.
inline std::string run_scenario(const Scenario& s, const RunOptions& opt) {
  validate(s);
  const auto xs = s.sweep.values();
  if (!opt.override_regime) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto rep = classify_point(s, xs[i]);
      if (rep.regime == Regime::strong) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "point %zu (%s = %.17g): strong turbulence, Rytov variance %.4g", i + 1,
                      std::string(column_name(s.sweep.variable)).c_str(), rep.x, rep.rytov_var);
        throw RegimeViolation(buf);
      }
    }
  }
  std::vector<std::string> rows(xs.size());
  std::vector<std::exception_ptr> errors(xs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < xs.size();) {
      try {
        rows[i] = csv_row(evaluate_point(s, xs[i], i, opt));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(xs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::string csv = csv_header(s);
  for (const auto& r : rows) csv += r;
  return csv;
}

}  // namespace fso
