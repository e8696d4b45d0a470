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

#ifndef QTELE_ENGINE_HPP
#define QTELE_ENGINE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "qtele/analysis.hpp"
#include "qtele/config.hpp"
#include "qtele/event_log.hpp"
#include "qtele/fock.hpp"

namespace qtele::engine {

struct RunOptions {
  std::optional<Unitary2> analyzer;  // overrides the configured analyzer
  bool idler_plate = false;          // wave plate on the idler before the beam splitter
  Unitary2 idler_plate_u = Unitary2::identity();
};

struct RunStats {
  int64_t slots = 0;
  int64_t survivors = 0;
  int64_t region_slots = 0;
  int64_t occupied_slots = 0;
  int64_t groups = 0;
  int64_t core_intervals = 0;
  double seconds = 0;
};

struct RunResult {
  EventLog log;
  TruthTable truth;
  RunStats stats;
};

// Maps target -> |H> and its orthogonal state -> |V>, built from wave plates
// for the six named states.
Unitary2 analyzer_basis_unitary(const PureQubit& target);
// Basis rotation times the correction unitary (when enabled).
Unitary2 analyzer_unitary(const ExperimentConfig& cfg);

// Simulates pump windows [first_window, first_window + n_windows).
RunResult run(const ExperimentConfig& cfg, int64_t n_windows, uint64_t seed, int64_t first_window = 0,
              const RunOptions& opt = {});

// WCS off, idler rotated to the diagonal basis, analyzer = quarter-wave plate
// at 45 degrees followed by a half-wave plate at each angle. Twofolds are
// counted at the transmitted-photon peak.
std::vector<analysis::VisibilityCounts> run_visibility_scan(const ExperimentConfig& cfg, const std::vector<double>& hwp_angles,
                                                  int64_t n_windows, uint64_t seed);

struct HomPoint {
  double delta_t_ns;
  uint64_t trials;
  uint64_t coincidences;
};
// Heralded trials: the WCS photons share the idler temporal mode with
// probability xi^2 each, coincidences follow the Fock output distribution.
std::vector<HomPoint> run_hom(const fock::HomParams& hp, const std::vector<double>& delays_ns, uint64_t trials,
                              uint64_t seed);

}  // namespace qtele::engine

#endif  // QTELE_ENGINE_HPP
