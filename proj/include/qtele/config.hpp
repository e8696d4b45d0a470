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

#ifndef QTELE_CONFIG_HPP
#define QTELE_CONFIG_HPP

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qtele/quantum_core.hpp"

namespace qtele {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key/value view of a TOML-style file. Keys are "section.key".
using ConfigValue = std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;
using ConfigTable = std::map<std::string, ConfigValue>;

// Supports [section] headers, numbers, "strings", booleans, single-line
// arrays of numbers or strings and # comments.
ConfigTable parse_config_text(const std::string& text);

enum class PumpShape { gaussian, flat_top, cw };
enum class PairStatistics { two_term, thermal };
enum class Acquisition { analyzer_triggered, full };

struct DetectorConfig {
  double efficiency = 0.75;
  double jitter_sigma_ns = 0.212;
  double dark_rate_hz = 300.0;
};

struct GateInterval {
  double lo_ns;  // analyzer time minus BSM time
  double hi_ns;
};

struct ExperimentConfig {
  // source
  double p = 0.01;
  double mu = 0.011;
  double phi = 0.0;
  double phi_drift_rad_per_s = 0.0;
  double V_src = 0.93;
  double hh_weight = 0.5;
  double tau_i_ns = 1.4;
  double xi_max = 1.0;
  PairStatistics pair_statistics = PairStatistics::two_term;
  int max_pairs = 3;
  bool wcs_enabled = true;

  // transmissions
  double eta_i = 0.13;   // idler path up to the BSM detectors
  double eta_s = 0.168;  // signal path after the memory, up to the analyzer detectors

  // memory
  double mem_efficiency = 0.05;
  double mem_storage_ns = 50.0;
  double mem_transmission = 0.1;

  // pump
  PumpShape pump_shape = PumpShape::gaussian;
  double pump_fwhm_ns = 25.0;
  double pump_period_ns = 100.0;

  // fibre spools
  double fibre_idler_km = 0.0;
  double fibre_wcs_km = 0.0;
  double attenuation_db_per_km = 0.35;

  std::array<DetectorConfig, 4> detectors{};

  // input and analyzer
  std::string wcs_pol = "-";
  std::string analyzer_target = "-";  // state projected onto by D3
  bool apply_correction = true;
  bool polarizers = true;

  // analysis
  double bin_ns = 0.486;
  double range_ns = 15.0;
  int fidelity_half_width_bins = 1;
  double normalization_range_ns = 100.0;

  // acquisition
  Acquisition acquisition = Acquisition::analyzer_triggered;
  std::vector<GateInterval> gates;  // empty: transmitted and stored peaks, +-range_ns
  bool drop_unheralded = false;

  uint64_t seed = 1;

  PureQubit input_state() const;
  PureQubit target_state() const;
  double eta_fibre_idler() const;
  double eta_fibre_wcs() const;
  std::vector<GateInterval> effective_gates() const;
};

ExperimentConfig config_from_table(const ConfigTable& t);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

// Throws ConfigError on the first violated invariant.
void validate(const ExperimentConfig& cfg);

// Canonical text form; parse_config(to_toml(c)) reproduces c.
std::string to_toml(const ExperimentConfig& cfg);
uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(uint64_t h);

struct OracleInputs {
  double p, mu, eta_i, eta_s;
};
// Per-window quantities entering the closed-form noise budget.
OracleInputs oracle_inputs(const ExperimentConfig& cfg);

}  // namespace qtele

#endif  // QTELE_CONFIG_HPP
