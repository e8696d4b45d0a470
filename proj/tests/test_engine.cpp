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

#include <gtest/gtest.h>

#include <cmath>

#include "qtele/engine.hpp"
#include "qtele/experiment.hpp"
#include "qtele/oracle.hpp"
#include "qtele/scenarios.hpp"

namespace qtele::engine {
namespace {

// Lossless, noiseless apparatus with weak sources; CW pump so the arm
// level does not depend on the position inside a pulse.
ExperimentConfig ideal() {
  ExperimentConfig c;
  c.p = 1e-4;
  c.mu = 0.02;
  c.eta_i = 1;
  c.eta_s = 1;
  c.mem_efficiency = 0;
  c.mem_transmission = 1;
  c.V_src = 1;
  c.pump_shape = PumpShape::cw;
  for (auto& d : c.detectors) d = {1.0, 0.0, 0.0};
  return c;
}

double z_score(double a, double b) { return std::abs(a - b) / std::sqrt(std::max(1.0, a + b)); }

TEST(Engine, SameSeedSameLog) {
  ExperimentConfig c;
  c.p = 0.05;
  c.mu = 0.05;
  RunResult a = run(c, 20000, 11), b = run(c, 20000, 11), d = run(c, 20000, 12);
  EXPECT_EQ(a.log.records(), b.log.records());
  EXPECT_EQ(a.truth.tags, b.truth.tags);
  EXPECT_NE(a.log.records(), d.log.records());
  EXPECT_EQ(a.log.header().config_hash, hash_hex(config_hash(c)));
  EXPECT_EQ(a.truth.tags.size(), a.log.records().size());
}

TEST(Engine, SourcesOffLeavesOnlyDarks) {
  ExperimentConfig c;
  c.p = 0;
  c.mu = 0;
  c.acquisition = Acquisition::full;
  for (auto& d : c.detectors) d.dark_rate_hz = 1e7;
  RunResult r = run(c, 1, 1);
  EXPECT_GT(r.log.records().size(), 0u);
  for (Truth t : r.truth.tags) EXPECT_EQ(t, Truth::dark);
}

TEST(Engine, InvalidConfigRejectedBeforeSampling) {
  ExperimentConfig c;
  c.p = -1;
  EXPECT_THROW(run(c, 10, 1), ConfigError);
  EXPECT_THROW(run(ExperimentConfig{}, 0, 1), ConfigError);
}

TEST(Engine, SplitRunsMergeToOneRun) {
  ExperimentConfig c;
  c.p = 0.05;
  c.mu = 0.05;
  c.acquisition = Acquisition::full;
  RunResult a = run(c, 2000, 9), b1 = run(c, 1000, 9, 0), b2 = run(c, 1000, 9, 1000);
  auto merged = b1.log.records();
  merged.insert(merged.end(), b2.log.records().begin(), b2.log.records().end());
  EXPECT_EQ(merged, a.log.records());

  // triggered runs may differ at the split boundary only
  c.acquisition = Acquisition::analyzer_triggered;
  a = run(c, 20000, 9);
  b1 = run(c, 10000, 9, 0);
  b2 = run(c, 10000, 9, 10000);
  for (int det = 1; det <= 4; ++det)
    EXPECT_LT(z_score(static_cast<double>(a.log.count(det)), static_cast<double>(b1.log.count(det) + b2.log.count(det))),
              1.0);
}

TEST(Engine, TriggeredAcquisitionMatchesFullAcquisition) {
  ExperimentConfig c = ideal();
  c.p = 0.01;
  c.mu = 0.05;
  for (auto& d : c.detectors) d = {0.75, 0.212, 3000.0};
  c.mem_efficiency = 0.3;
  c.mem_transmission = 0.5;
  c.acquisition = Acquisition::full;
  const int64_t n = 40000;
  RunResult full = run(c, n, 21);
  c.acquisition = Acquisition::analyzer_triggered;
  RunResult trig = run(c, n, 22);
  const auto hp = scenarios::hist_params(c);
  for (double peak : {0.0, 50.0}) {
    auto off = analysis::Offsets::uniform(peak);
    auto hf = analysis::build_threefold_histograms(full.log, off, hp);
    auto ht = analysis::build_threefold_histograms(trig.log, off, hp);
    EXPECT_LT(z_score(hf.first.total(), ht.first.total()), 4.0) << peak;
    EXPECT_LT(z_score(hf.second.total(), ht.second.total()), 4.0) << peak;
    EXPECT_LT(z_score(analysis::centre_counts(hf.first, 1), analysis::centre_counts(ht.first, 1)), 4.0) << peak;
    EXPECT_LT(z_score(analysis::centre_counts(hf.second, 1), analysis::centre_counts(ht.second, 1)), 4.0) << peak;
    for (int a = 3; a <= 4; ++a)
      EXPECT_LT(z_score(analysis::count_twofolds(full.log, a, 1, std::llround(peak * 1000), 300),
                        analysis::count_twofolds(trig.log, a, 1, std::llround(peak * 1000), 300)),
                4.0);
  }
  // gates skip part of every window
  EXPECT_GT(full.log.count(1), trig.log.count(1));
}

TEST(Engine, IdealTeleportationIdentityOnTruth) {
  // centre threefolds heralded by one idler and one WCS photon reach D3; the
  // exceptions are groups with a third photon, a fraction of order mu
  ExperimentConfig c = ideal();
  RunResult r = run(c, 4000000, 5);
  uint64_t good = 0, wrong = 0, total = 0;
  std::array<uint64_t, 5> by_truth{};
  for (int det = 3; det <= 4; ++det)
    analysis::for_each_threefold(r.log, det, analysis::Offsets::uniform(0), 15.0, c.bin_ns,
                                 [&](size_t ia, size_t i1, size_t i2, double d1, double d2) {
                                   ++total;
                                   ++by_truth[static_cast<size_t>(r.truth.tags[ia])];
                                   if (std::abs(d1) > 0.2 || std::abs(d2) > 0.2) return;
                                   Truth t1 = r.truth.tags[i1], t2 = r.truth.tags[i2];
                                   bool mixed = (t1 == Truth::idler && t2 == Truth::wcs) ||
                                                (t1 == Truth::wcs && t2 == Truth::idler);
                                   if (!mixed) return;
                                   (det == 3 ? good : wrong)++;
                                 });
  EXPECT_GT(good, 100u);
  EXPECT_LE(wrong * 20, good);
  // every threefold belongs to exactly one truth category
  uint64_t sum = 0;
  for (auto n : by_truth) sum += n;
  EXPECT_EQ(sum, total);
}

TEST(Engine, IdealCentrePeakAndDip) {
  ExperimentConfig c = ideal();
  scenarios::TeleportOutput t = scenarios::teleport(c, 20000000, 6);
  EXPECT_NEAR(t.r3.ratio, 4.0, std::max(0.4, 3 * t.r3.sigma));
  EXPECT_LE(t.r4.ratio, 0.1);
  // expected centre level: slots * p * mu / 8 for |-> analyzed in its own basis
  const double slots = 20000000.0 * 100.0 / c.bin_ns;
  EXPECT_NEAR(t.r3.centre, slots * c.p * c.mu / 8, 4 * std::sqrt(slots * c.p * c.mu / 8));
}

TEST(Engine, PolarBasisShowsSingleBands) {
  ExperimentConfig c = ideal();
  c.analyzer_target = "H";
  scenarios::TeleportOutput t = scenarios::teleport(c, 4000000, 7);
  // D3 and D4 each keep one band, on crossed axes
  EXPECT_GT(t.b3.col_band, 10 * std::max(t.b3.row_band, 0.5));
  EXPECT_GT(t.b4.row_band, 10 * std::max(t.b4.col_band, 0.5));
}

TEST(Engine, ThreefoldRateMatchesNoiseBudget) {
  ExperimentConfig c;
  c.pump_shape = PumpShape::flat_top;
  c.mem_efficiency = 1;
  c.mem_transmission = 0;
  c.eta_s = 1;
  for (auto& d : c.detectors) d.dark_rate_hz = d.jitter_sigma_ns = 0;
  c.gates = {{49, 51}};
  const int64_t n = 20000000;
  RunResult r = run(c, n, 4);
  analysis::HistParams hp{c.bin_ns, 1.5};
  auto h = analysis::build_threefold_histograms(r.log, analysis::Offsets::uniform(50), hp);
  double counts = analysis::centre_counts(h.first, 0) + analysis::centre_counts(h.second, 0);
  OracleInputs in = oracle_inputs(c);
  oracle::NoiseBudget b = oracle::evaluate(in.p, in.mu, in.eta_i, in.eta_s);
  int64_t slots = 0;
  for (int64_t k = experiment::first_slot_of_window(c, 0); k < experiment::first_slot_of_window(c, 1); ++k)
    slots += experiment::pump_envelope(c, k * c.bin_ns) > 0;
  // the budget leaves out the two BSM detector efficiencies
  double predicted = (b.P11 + b.P20 + b.P02) * slots * n * c.detectors[0].efficiency * c.detectors[1].efficiency;
  EXPECT_NEAR(counts / predicted, 1.0, 0.1);
}

TEST(Engine, VisibilityScanRecoversPhaseAndVisibility) {
  ExperimentConfig c = ideal();
  c.p = 0.01;
  c.pump_shape = PumpShape::gaussian;
  c.phi = 0.2;
  c.V_src = 0.93;
  auto angles = scenarios::default_angles();
  scenarios::VisibilityOutput v = scenarios::visibility(c, angles, 20000, 8);
  EXPECT_NEAR(v.fit.phi, 0.2, 0.02);
  EXPECT_NEAR(v.fit.visibility, 0.93, 0.02);
  EXPECT_NEAR(v.efficiency_ratio, 1.0, 0.05);

  c.phi = 0;
  c.V_src = 1;
  v = scenarios::visibility(c, angles, 20000, 9);
  EXPECT_NEAR(v.fit.phi, 0.0, 0.05);
  EXPECT_GT(v.fit.visibility, 0.97);
}

TEST(Engine, VisibilityScanSeesUnequalAnalyzerEfficiency) {
  ExperimentConfig c = ideal();
  c.p = 0.01;
  c.detectors[3].efficiency = 0.8;
  scenarios::VisibilityOutput v = scenarios::visibility(c, scenarios::default_angles(), 20000, 10);
  EXPECT_NEAR(v.efficiency_ratio, 0.8, 0.04);
}

TEST(Engine, JitterFreeOffsetCalibration) {
  // all delays on the slot lattice: the peak fit must stay on the stored delay
  ExperimentConfig c;
  c.wcs_pol = c.analyzer_target = "+";
  for (auto& d : c.detectors) d.jitter_sigma_ns = 0;
  RunResult r = run(c, 50000000, stream_key(9, 0, 21));
  analysis::Offsets off = analysis::calibrate_offsets(r.log, c.mem_storage_ns);
  for (int a = 3; a <= 4; ++a)
    for (int b = 1; b <= 2; ++b) EXPECT_NEAR(off.get(a, b), 50.0, 0.1) << a << b;
}

TEST(Engine, HomMonteCarloFollowsFockEngine) {
  fock::HomParams hp;
  hp.p = 0.0025;
  hp.mu = 0.0035;
  const std::vector<double> delays = {-8, -6, -1, 0, 1, 6, 8};
  auto mc = run_hom(hp, delays, 400000, 3);
  fock::HomScan scan = fock::hom_scan(delays, hp);
  for (size_t i = 0; i < delays.size(); ++i) {
    double n = static_cast<double>(mc[i].trials), pe = scan.coincidence[i];
    EXPECT_NEAR(mc[i].coincidences / n, pe, 4 * std::sqrt(pe * (1 - pe) / n)) << delays[i];
  }
}

}  // namespace
}  // namespace qtele::engine
