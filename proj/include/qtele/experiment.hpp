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

#ifndef QTELE_EXPERIMENT_HPP
#define QTELE_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "qtele/config.hpp"
#include "qtele/event_log.hpp"
#include "qtele/quantum_core.hpp"
#include "qtele/rng.hpp"

namespace qtele::experiment {

// Relative pump intensity in [0, 1] at time t; pulse centres sit at multiples of the period.
double pump_envelope(const ExperimentConfig& cfg, double t_ns);

// P(n pairs) for n = 0..max_pairs in a slot with envelope value g; entries
// above max_pairs are zero.
using PairLaw = std::array<double, 5>;
PairLaw pair_number_law(const ExperimentConfig& cfg, double g);

int64_t slot_ps(const ExperimentConfig& cfg);
// Slots k with k * slot in [window * period, (window + 1) * period).
int64_t first_slot_of_window(const ExperimentConfig& cfg, int64_t window);

enum class PhotonMode { signal, idler, wcs };

// Polarization of two-pair emissions: both pairs HH, both VV, or one of each.
enum class PairBranch : uint8_t { single, hh_hh, vv_vv, hh_vv };

struct PhotonEvent {
  double time_ns;
  PhotonMode mode;
  int64_t pair_handle;  // shared by the signal and idler of one pair, -1 for WCS photons
  PairBranch branch;
  PureQubit pol;  // WCS polarization; unused for pair photons
};

std::vector<PhotonEvent> sample_emissions(const ExperimentConfig& cfg, int64_t window, Rng& rng);

enum class MemoryBranch { transmitted, stored, lost };
struct MemoryOutcome {
  MemoryBranch branch;
  double time_ns;
};
MemoryOutcome memory_branch(const PhotonEvent& signal, const ExperimentConfig& cfg, Rng& rng);

enum class Arm { idler, wcs };
std::vector<PhotonEvent> channel_attenuate(const std::vector<PhotonEvent>& events, Arm arm,
                                           const ExperimentConfig& cfg, Rng& rng);

struct ClickCandidate {
  int detector;  // 1..4
  double time_ns;
  double weight;  // extra acceptance probability applied with the efficiency
};

// Keeps each candidate with efficiency * weight, adds Gaussian jitter and
// homogeneous dark counts over [t0, t1). Output sorted by time.
std::vector<DetectionRecord> detect(const std::vector<ClickCandidate>& clicks, const ExperimentConfig& cfg,
                                    double t0_ns, double t1_ns, Rng& rng);

}  // namespace qtele::experiment

#endif  // QTELE_EXPERIMENT_HPP
