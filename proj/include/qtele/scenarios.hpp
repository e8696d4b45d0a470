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

#ifndef QTELE_SCENARIOS_HPP
#define QTELE_SCENARIOS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtele/analysis.hpp"
#include "qtele/config.hpp"
#include "qtele/engine.hpp"
#include "qtele/fock.hpp"
#include "qtele/oracle.hpp"
#include "qtele/tomography.hpp"

namespace qtele::scenarios {

inline constexpr const char* kVersion = "0.1.0";

// Output files could not be written; carries the offending path.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Threefold delays are taken around the stored peak when the memory stores
// anything, around the transmitted peak otherwise.
double analysis_peak_ns(const ExperimentConfig& cfg);
analysis::HistParams hist_params(const ExperimentConfig& cfg);

struct OffsetChoice {
  analysis::Offsets offsets;
  bool calibrated = false;  // false: nominal peak delay, the twofold peaks were too weak
};
OffsetChoice choose_offsets(const ExperimentConfig& cfg, const EventLog& log);

struct TeleportOutput {
  OffsetChoice offsets;
  analysis::Histogram2D h3, h4;
  analysis::Slice s3, s4;  // centre row
  analysis::RatioResult r3, r4;
  analysis::BandProfile b3, b4;
  engine::RunStats stats;
};
TeleportOutput teleport(const ExperimentConfig& cfg, int64_t windows, uint64_t seed);

struct StateTomography {
  std::string label;
  PureQubit input;
  tomography::RawCounts raw;
  double ratio = 1.0;
  double ratio_sigma = 0.0;
  std::string ratio_method;  // "off_diagonal", "visibility" or "none"
  tomography::TomographyResult result;
};
// Three analyzer bases for the configured input state. With normalize the
// D4/D3 efficiency ratio is estimated from the data.
StateTomography tomograph_state(const ExperimentConfig& cfg, int64_t windows, uint64_t seed, bool normalize = true);

struct Campaign {
  std::vector<StateTomography> states;
  double F_equatorial = 0, F_polar = 0;  // means over the two classes of input states
  double F_avg = 0;                      // weighted 2/3 equatorial, 1/3 polar
  double sigma = 0;
};
Campaign campaign(const ExperimentConfig& cfg, const std::vector<std::string>& inputs, int64_t windows, uint64_t seed);

struct GsiOutput {
  analysis::GsiEstimate transmitted;
  std::optional<analysis::GsiEstimate> stored;
  double ideal = 0;
};
// WCS off. The window is one slot (one temporal mode) unless window_ns > 0;
// references are taken displaced_periods pump periods to each side.
GsiOutput gsi(const ExperimentConfig& cfg, int64_t windows, uint64_t seed, double window_ns = 0.0,
              int displaced_periods = 4);

struct VisibilityOutput {
  std::vector<analysis::VisibilityCounts> data;
  analysis::VisibilityFit fit;
  double efficiency_ratio = 1.0;
};
std::vector<double> default_angles();
VisibilityOutput visibility(const ExperimentConfig& cfg, const std::vector<double>& angles, int64_t windows_per_angle,
                            uint64_t seed);

fock::HomParams hom_params(const ExperimentConfig& cfg);
struct HomOutput {
  fock::HomScan engine;
  std::vector<engine::HomPoint> mc;
  double mc_visibility = 0;
  double mc_sigma = 0;
};
std::vector<double> default_delays();
HomOutput hom(const fock::HomParams& hp, const std::vector<double>& delays, uint64_t trials, uint64_t seed);

struct SweepRow {
  double p, mu, eta_i, eta_s;
  oracle::NoiseBudget budget;
};
// One parameter ("p", "mu", "eta_i" or "eta_s") varied around the oracle inputs of cfg.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& param, const std::vector<double>& values);

struct CliOptions {
  std::string scenario;
  std::string config_path;
  int64_t trials = 0;
  uint64_t seed = 1;
  std::filesystem::path out;
  std::optional<double> fibre_km;
  std::vector<std::string> inputs;  // tomography: input states, empty = configured one
  std::vector<double> angles;       // visibility: half-wave plate angles in rad
  std::vector<double> delays;       // hom: delays in ns
  std::string sweep_param = "mu";
  std::vector<double> sweep_values;
};

const std::vector<std::string>& scenario_names();

// Runs the scenario and writes its files into opt.out. Returns the file names written.
std::vector<std::string> run(const CliOptions& opt, const ExperimentConfig& cfg);

}  // namespace qtele::scenarios

#endif  // QTELE_SCENARIOS_HPP
