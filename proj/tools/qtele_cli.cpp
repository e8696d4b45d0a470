// Copyright 2026 The qtele Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qtele/analysis.hpp"
#include "qtele/config.hpp"
#include "qtele/scenarios.hpp"
#include "qtele/tomography.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAnalysis = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace qtele;
  CLI::App app{"Teleportation experiment simulator"};
  app.set_version_flag("--version", scenarios::kVersion);
  app.require_subcommand(1);

  scenarios::CliOptions opt;
  opt.trials = 1000000;
  std::string out;
  auto* run = app.add_subcommand("run", "Run a scenario and write its outputs");
  run->add_option("scenario", opt.scenario, "Scenario to run")
      ->required()
      ->check(CLI::IsMember(scenarios::scenario_names()));
  run->add_option("--config", opt.config_path, "Experiment config file (TOML subset)")->check(CLI::ExistingFile);
  run->add_option("--trials", opt.trials, "Pump windows per run (hom: trials per delay)")->check(CLI::PositiveNumber);
  run->add_option("--seed", opt.seed, "Seed for all randomness");
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--fibre-km", opt.fibre_km, "Fibre length applied to both the idler and the WCS arm")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--inputs", opt.inputs, "tomography: input states (H, V, +, -, R, L)")->delimiter(',');
  run->add_option("--angles", opt.angles, "visibility: half-wave plate angles in rad")->delimiter(',');
  run->add_option("--delays", opt.delays, "hom: delays in ns")->delimiter(',');
  run->add_option("--sweep-param", opt.sweep_param, "sweep: p, mu, eta_i or eta_s")
      ->check(CLI::IsMember({"p", "mu", "eta_i", "eta_s"}));
  run->add_option("--sweep-values", opt.sweep_values, "sweep: parameter values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  opt.out = out;

  try {
    ExperimentConfig cfg = opt.config_path.empty() ? ExperimentConfig{} : load_config(opt.config_path);
    auto files = scenarios::run(opt, cfg);
    for (const auto& f : files) std::cout << (opt.out / f).string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const scenarios::OutputError& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kExitAnalysis;
  } catch (const analysis::AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << '\n';
    return kExitAnalysis;
  } catch (const tomography::TomographyError& e) {
    std::cerr << "analysis error: " << e.what() << '\n';
    return kExitAnalysis;
  }
}
