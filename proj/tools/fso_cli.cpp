// Command-line front end: run and validate scenario files, list presets.
//
// Exit codes: 0 success, 1 runtime failure, 2 malformed input or usage,
// 3 strong-turbulence point without --override-regime.

#include "fso/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;
constexpr int kExitRegime = 3;

int report(const char* what, const std::exception& e, int code) {
  std::fprintf(stderr, "fso_cli: %s: %s\n", what, e.what());
  return code;
}

int run(const std::string& path, const std::string& output, const fso::RunOptions& opt) {
  fso::Scenario s;
  try {
    s = fso::load_scenario(path);
    fso::validate(s);
  } catch (const fso::ParseError& e) {
    std::fprintf(stderr, "%s:%s\n", path.c_str(), e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    return report(path.c_str(), e, kExitInput);
  }
  std::string csv;
  try {
    csv = fso::run_scenario(s, opt);
  } catch (const fso::RegimeViolation& e) {
    return report(path.c_str(), e, kExitRegime);
  } catch (const std::exception& e) {
    return report(path.c_str(), e, kExitRuntime);
  }
  const std::string target = !output.empty() ? output : s.output.value_or("");
  if (target.empty() || target == "-") {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
    std::fflush(stdout);
  } else {
    std::ofstream out(target, std::ios::binary);
    out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!out) {
      std::fprintf(stderr, "fso_cli: cannot write '%s'\n", target.c_str());
      return kExitRuntime;
    }
  }
  std::fprintf(stderr, "fso_cli: %zu points written%s%s\n", s.sweep.values().size(), target.empty() ? "" : " to ",
               target.c_str());
  return 0;
}

int validate(const std::string& path, bool override_regime) {
  fso::Scenario s;
  try {
    s = fso::load_scenario(path);
    fso::validate(s);
  } catch (const fso::ParseError& e) {
    std::fprintf(stderr, "%s:%s\n", path.c_str(), e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    return report(path.c_str(), e, kExitInput);
  }
  const auto xs = s.sweep.values();
  const auto label = std::string(fso::column_name(s.sweep.variable));
  bool warned = false;
  std::size_t strong = 0;
  try {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto rep = fso::classify_point(s, xs[i]);
      if (!warned || s.sweep.variable == fso::SweepVariable::rx_aperture) {
        for (const auto& w : rep.warnings) std::printf("warning: point %zu: %s\n", i + 1, w.c_str());
        warned = true;
      }
      if (rep.regime == fso::Regime::strong) ++strong;
      std::printf("point %zu %s=%.17g rytov_var=%.6g rho0_over_w0=%.6g regime=%s\n", i + 1, label.c_str(), rep.x,
                  rep.rytov_var, rep.coherence_ratio, std::string(fso::to_string(rep.regime)).c_str());
    }
  } catch (const std::exception& e) {
    return report(path.c_str(), e, kExitInput);
  }
  if (strong > 0) {
    std::printf("%zu of %zu points in strong turbulence%s\n", strong, xs.size(),
                override_regime ? " (override active)" : "");
    if (!override_regime) return kExitRegime;
  }
  return 0;
}

void presets() {
  for (auto p : {fso::Preset::night, fso::Preset::day}) std::fputs(fso::preset_text(p).c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-space optical quantum link bounds and composable key rates"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string output;
  bool override_regime = false;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  auto* run_cmd = app.add_subcommand("run", "evaluate a scenario sweep and emit CSV");
  run_cmd->add_option("scenario", scenario_path, "scenario file")->required();
  run_cmd->add_option("--output", output, "CSV path, '-' for stdout");
  run_cmd->add_flag("--override-regime", override_regime, "evaluate strong-turbulence points");
  run_cmd->add_option("--seed", seed, "oracle seed");
  run_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "check inputs and classify turbulence per point");
  validate_cmd->add_option("scenario", scenario_path, "scenario file")->required();
  validate_cmd->add_flag("--override-regime", override_regime, "accept strong-turbulence points");

  app.add_subcommand("presets", "print the reference presets as scenario text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (run_cmd->parsed()) return run(scenario_path, output, {override_regime, seed, threads});
  if (validate_cmd->parsed()) return validate(scenario_path, override_regime);
  presets();
  return 0;
}
