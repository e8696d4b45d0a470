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

#include "qtele/experiment.hpp"

#include <algorithm>
#include <cmath>

namespace qtele::experiment {

double pump_envelope(const ExperimentConfig& cfg, double t_ns) {
  if (cfg.pump_shape == PumpShape::cw) return 1.0;
  double d = t_ns - cfg.pump_period_ns * std::round(t_ns / cfg.pump_period_ns);
  if (cfg.pump_shape == PumpShape::flat_top) return std::abs(d) <= 0.5 * cfg.pump_fwhm_ns ? 1.0 : 0.0;
  double x = d / cfg.pump_fwhm_ns;
  return std::exp(-4.0 * std::log(2.0) * x * x);
}

PairLaw pair_number_law(const ExperimentConfig& cfg, double g) {
  double x = cfg.p * g;
  PairLaw P{};
  if (cfg.pair_statistics == PairStatistics::two_term) {
    P[1] = x;
    if (cfg.max_pairs >= 2) P[2] = 0.75 * x * x;
  } else {
    // two thermal polarization modes, each with x/2 pairs on average
    double y = 0.5 * x, norm = 0;
    for (int n = 0; n <= cfg.max_pairs; ++n) norm += (n + 1) * std::pow(y, n) * (1 - y) * (1 - y);
    for (int n = 1; n <= cfg.max_pairs; ++n) P[n] = (n + 1) * std::pow(y, n) * (1 - y) * (1 - y) / norm;
  }
  double rest = 0;
  for (int n = 1; n <= cfg.max_pairs; ++n) rest += P[n];
  P[0] = std::max(0.0, 1.0 - rest);
  return P;
}

int64_t slot_ps(const ExperimentConfig& cfg) { return std::llround(cfg.bin_ns * 1000.0); }

int64_t first_slot_of_window(const ExperimentConfig& cfg, int64_t window) {
  int64_t w = slot_ps(cfg);
  int64_t t = std::llround(static_cast<double>(window) * cfg.pump_period_ns * 1000.0);
  return t >= 0 ? (t + w - 1) / w : -((-t) / w);
}

namespace {

int sample_discrete(const PairLaw& P, Rng& rng) {
  double u = rng.uniform(), c = 0;
  for (size_t n = 0; n < P.size(); ++n) {
    c += P[n];
    if (u < c) return static_cast<int>(n);
  }
  return 0;
}

}  // namespace

std::vector<PhotonEvent> sample_emissions(const ExperimentConfig& cfg, int64_t window, Rng& rng) {
  std::vector<PhotonEvent> out;
  const int64_t w = slot_ps(cfg);
  const int64_t k0 = first_slot_of_window(cfg, window), k1 = first_slot_of_window(cfg, window + 1);
  const PureQubit pol = cfg.input_state();
  for (int64_t k = k0; k < k1; ++k) {
    double t = static_cast<double>(k * w) / 1000.0;
    double g = pump_envelope(cfg, t);
    if (g <= 0) continue;
    int n = sample_discrete(pair_number_law(cfg, g), rng);
    PairBranch br = PairBranch::single;
    if (n == 2) {
      // (HH + VV)^2 splits evenly over HH.HH, VV.VV and HH.VV
      double u = rng.uniform();
      br = u < 1.0 / 3 ? PairBranch::hh_hh : (u < 2.0 / 3 ? PairBranch::vv_vv : PairBranch::hh_vv);
    }
    for (int i = 0; i < n; ++i) {
      int64_t handle = k * 8 + i;
      out.push_back({t, PhotonMode::signal, handle, br, PureQubit::H()});
      out.push_back({t, PhotonMode::idler, handle, br, PureQubit::H()});
    }
    if (cfg.wcs_enabled) {
      uint64_t m = rng.poisson(cfg.mu * g);
      for (uint64_t i = 0; i < m; ++i) out.push_back({t, PhotonMode::wcs, -1, PairBranch::single, pol});
    }
  }
  return out;
}

MemoryOutcome memory_branch(const PhotonEvent& signal, const ExperimentConfig& cfg, Rng& rng) {
  double u = rng.uniform();
  if (u < cfg.mem_efficiency) return {MemoryBranch::stored, signal.time_ns + cfg.mem_storage_ns};
  if (u < cfg.mem_efficiency + cfg.mem_transmission) return {MemoryBranch::transmitted, signal.time_ns};
  return {MemoryBranch::lost, signal.time_ns};
}

std::vector<PhotonEvent> channel_attenuate(const std::vector<PhotonEvent>& events, Arm arm,
                                           const ExperimentConfig& cfg, Rng& rng) {
  double eta = arm == Arm::idler ? cfg.eta_fibre_idler() : cfg.eta_fibre_wcs();
  PhotonMode mode = arm == Arm::idler ? PhotonMode::idler : PhotonMode::wcs;
  std::vector<PhotonEvent> out;
  out.reserve(events.size());
  for (const auto& e : events)
    if (e.mode != mode || eta >= 1.0 || rng.bernoulli(eta)) out.push_back(e);
  return out;
}

std::vector<DetectionRecord> detect(const std::vector<ClickCandidate>& clicks, const ExperimentConfig& cfg,
                                    double t0_ns, double t1_ns, Rng& rng) {
  std::vector<DetectionRecord> out;
  auto window_of = [&](int64_t ps) {
    return static_cast<int64_t>(std::floor(static_cast<double>(ps) / (cfg.pump_period_ns * 1000.0)));
  };
  for (const auto& c : clicks) {
    const auto& d = cfg.detectors.at(c.detector - 1);
    if (!rng.bernoulli(d.efficiency * c.weight)) continue;
    double t = c.time_ns + (d.jitter_sigma_ns > 0 ? d.jitter_sigma_ns * rng.normal() : 0.0);
    int64_t ps = std::llround(t * 1000.0);
    out.push_back({static_cast<uint8_t>(c.detector), ps, window_of(ps)});
  }
  double span_s = std::max(0.0, t1_ns - t0_ns) * 1e-9;
  for (int det = 1; det <= 4; ++det) {
    uint64_t n = rng.poisson(cfg.detectors[det - 1].dark_rate_hz * span_s);
    for (uint64_t i = 0; i < n; ++i) {
      int64_t ps = std::llround((t0_ns + rng.uniform() * (t1_ns - t0_ns)) * 1000.0);
      out.push_back({static_cast<uint8_t>(det), ps, window_of(ps)});
    }
  }
  std::sort(out.begin(), out.end(), [](const DetectionRecord& a, const DetectionRecord& b) {
    return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.detector < b.detector;
  });
  return out;
}

}  // namespace qtele::experiment
