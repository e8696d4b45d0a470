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

#include "json.hpp"
#include "qtele/engine.hpp"
#include "qtele/rng.hpp"
#include "qtele/scenarios.hpp"
#include "qtele/tomography.hpp"

namespace qtele::tomography {
namespace {

template <class T>
concept Renormalizable = requires(const T& c) { normalize(c, 1.0); };
// normalizing twice does not compile
static_assert(Renormalizable<RawCounts>);
static_assert(!Renormalizable<NormalizedCounts>);

RawCounts counts(BasisCounts x, BasisCounts y, BasisCounts z) { return RawCounts{{x, y, z}}; }

// Expected D3/D4 counts for state rho with n counts per basis.
RawCounts expected_counts(const BlochVector& r, double n) {
  RawCounts c;
  const double v[3] = {r.x, r.y, r.z};
  for (int i = 0; i < 3; ++i) c.bases[i] = {n * (1 + v[i]) / 2, n * (1 - v[i]) / 2};
  return c;
}

RawCounts poisson_counts(const BlochVector& r, double n, uint64_t seed) {
  RawCounts e = expected_counts(r, n), c;
  Rng rng(seed);
  for (int i = 0; i < 3; ++i)
    c.bases[i] = {static_cast<double>(rng.poisson(e.bases[i].n_plus)),
                  static_cast<double>(rng.poisson(e.bases[i].n_minus))};
  return c;
}

TEST(Reconstruct, PureHorizontal) {
  TomographyResult t = reconstruct(normalize(counts({0.5, 0.5}, {0.5, 0.5}, {1, 0}), 1.0), PureQubit::H());
  EXPECT_NEAR(t.bloch.z, 1.0, 1e-15);
  EXPECT_NEAR(t.bloch.x, 0.0, 1e-15);
  EXPECT_NEAR(t.fidelity, 1.0, 1e-12);
  EXPECT_NEAR(t.purity, 1.0, 1e-12);
  EXPECT_NEAR(t.rho.matrix().m[0][0].real(), 1.0, 1e-12);
  EXPECT_FALSE(t.clipped);
}

TEST(Reconstruct, SeventyFiveTwentyFive) {
  TomographyResult t = reconstruct(normalize(counts({75, 25}, {75, 25}, {75, 25}), 1.0), PureQubit::H());
  EXPECT_NEAR(t.bloch.norm(), 0.8660254037844386, 1e-12);
  EXPECT_NEAR(t.purity, 0.875, 1e-12);
  EXPECT_NEAR(t.f_max, f_max_from_purity(0.875), 1e-12);
}

TEST(Reconstruct, ClippingRecorded) {
  TomographyResult t = reconstruct(normalize(counts({10, 0}, {10, 0}, {5, 5}), 1.0), PureQubit::plus());
  EXPECT_TRUE(t.clipped);
  EXPECT_NEAR(t.bloch.norm(), 1.0, 1e-12);
  EXPECT_NEAR(t.purity, 1.0, 1e-12);
}

TEST(Reconstruct, EmptyBasisIsInsufficientData) {
  EXPECT_THROW(reconstruct(normalize(counts({1, 1}, {0, 0}, {1, 1}), 1.0), PureQubit::H()), InsufficientData);
}

TEST(Reconstruct, FidelityEqualsCountFidelityInOwnBasis) {
  RawCounts c = counts({812, 61}, {430, 455}, {401, 470});
  TomographyResult t = reconstruct(normalize(c, 1.0), PureQubit::plus());
  EXPECT_NEAR(t.fidelity, fidelity_from_counts(812, 61).F, 1e-14);
  t = reconstruct(normalize(c, 1.0), PureQubit::minus());
  EXPECT_NEAR(t.fidelity, fidelity_from_counts(61, 812).F, 1e-14);
}

TEST(Reconstruct, DepolarizedStateSatisfiesFmax) {
  BlochVector r{0, 0, 0};
  DensityMatrix rho = depolarize(PureQubit::R(), 0.7);
  r = bloch_from_density(rho);
  TomographyResult t = reconstruct(normalize(expected_counts(r, 1000), 1.0), PureQubit::R());
  EXPECT_NEAR(t.fidelity, t.f_max, 1e-12);
  EXPECT_NEAR(t.fidelity, 0.85, 1e-12);
}

TEST(Reconstruct, RoundTripFromKnownState) {
  const BlochVector r{0.3, -0.5, 0.6};
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    TomographyResult t = reconstruct(normalize(poisson_counts(r, 1e5, seed), 1.0), PureQubit::H());
    EXPECT_NEAR(t.bloch.x, r.x, 0.02);
    EXPECT_NEAR(t.bloch.y, r.y, 0.02);
    EXPECT_NEAR(t.bloch.z, r.z, 0.02);
  }
}

TEST(Normalize, DividesAnalyzerMinusCounts) {
  NormalizedCounts n = normalize(counts({80, 40}, {60, 48}, {10, 8}), 0.8);
  EXPECT_DOUBLE_EQ(n.bases()[0].n_minus, 50.0);
  EXPECT_DOUBLE_EQ(n.bases()[0].n_plus, 80.0);
  EXPECT_DOUBLE_EQ(n.ratio(), 0.8);
  EXPECT_THROW(normalize(RawCounts{}, 0.0), NormalizationError);
  EXPECT_THROW(normalize(RawCounts{}, NAN), NormalizationError);
}

TEST(Uncertainty, ScalesAsInverseSqrtN) {
  const BlochVector r{0.2, -0.7, 0.4};
  Sigmas a = uncertainty(expected_counts(r, 1e4), 1.0, PureQubit::H(), 2000, 1);
  Sigmas b = uncertainty(expected_counts(r, 4e4), 1.0, PureQubit::H(), 2000, 2);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(a.bloch[k] / b.bloch[k], 2.0, 0.2) << k;
  EXPECT_NEAR(a.fidelity / b.fidelity, 2.0, 0.2);
  Sigmas d = uncertainty(expected_counts(r, 2e4), 1.0, PureQubit::H(), 2000, 3);
  EXPECT_NEAR(a.bloch[1] / d.bloch[1], std::sqrt(2.0), 0.15);
  // analytic width of a binomial Bloch component
  EXPECT_NEAR(a.bloch[0], std::sqrt((1 - r.x * r.x) / 1e4), 0.1 * std::sqrt((1 - r.x * r.x) / 1e4));
}

TEST(Uncertainty, HugeCountsAndDeterminism) {
  Sigmas s = uncertainty(expected_counts({0.9, 0, 0}, 1e8), 1.0, PureQubit::plus(), 100, 4);
  EXPECT_LT(s.fidelity, 1e-3);
  RawCounts c = expected_counts({0.5, 0.1, 0.2}, 500);
  Sigmas a = uncertainty(c, 0.9, PureQubit::plus(), 200, 7), b = uncertainty(c, 0.9, PureQubit::plus(), 200, 7);
  EXPECT_EQ(a.fidelity, b.fidelity);
  EXPECT_EQ(a.bloch, b.bloch);
  EXPECT_THROW(uncertainty(c, 1.0, PureQubit::plus(), 99, 1), TomographyError);
  // a handful of counts leaves bases empty in most resamples
  EXPECT_THROW(uncertainty(counts({1, 0}, {0, 1}, {1, 0}), 1.0, PureQubit::plus(), 200, 1), InsufficientData);
}

TEST(Json, FixedFieldNames) {
  TomographyResult t = reconstruct(normalize(counts({75, 25}, {50, 50}, {40, 60}), 1.0), PureQubit::plus());
  t.sigmas = uncertainty(counts({75, 25}, {50, 50}, {40, 60}), 1.0, PureQubit::plus(), 100, 1);
  auto j = nlohmann::json::parse(to_json(t, PureQubit::plus(), 1.0));
  for (const char* k : {"bloch", "rho_re", "rho_im", "fidelity", "purity", "f_max", "sigmas", "counts", "clipped"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["bloch"].size(), 3u);
  EXPECT_DOUBLE_EQ(j["counts"]["X"]["n_plus"].get<double>(), 75.0);
  EXPECT_DOUBLE_EQ(j["rho_re"][0][0].get<double>(), 0.4);
}

// Lossless weak-source runs in the three bases for the normalization tests.
struct BasisRuns {
  std::array<engine::RunResult, 3> runs;
  std::vector<BasisLog> logs() const {
    std::vector<BasisLog> v;
    for (size_t b = 0; b < 3; ++b) v.push_back({static_cast<Basis>(b), &runs[b].log});
    return v;
  }
};

BasisRuns basis_runs(ExperimentConfig c, int64_t windows, uint64_t seed) {
  BasisRuns r;
  const char* targets[3] = {"+", "R", "H"};
  for (size_t b = 0; b < 3; ++b) {
    c.analyzer_target = targets[b];
    r.runs[b] = engine::run(c, windows, seed + b);
  }
  return r;
}

ExperimentConfig weak_source() {
  ExperimentConfig c;
  c.p = 0.002;
  c.mu = 0.02;
  c.eta_i = c.eta_s = 1;
  c.mem_efficiency = 0;
  c.mem_transmission = 1;
  c.V_src = 1;
  c.pump_shape = PumpShape::cw;
  for (auto& d : c.detectors) d = {1.0, 0.0, 0.0};
  return c;
}

TEST(Normalization, EqualEfficienciesGiveUnitRatio) {
  ExperimentConfig c = weak_source();
  BasisRuns r = basis_runs(c, 300000, 10);
  NormalizationResult n = normalization_factor(r.logs(), c.input_state(), analysis::Offsets::uniform(0), 15, 0.486, 1.4);
  EXPECT_NEAR(n.ratio, 1.0, std::max(0.03, 3 * n.sigma));
}

TEST(Normalization, RecoversInjectedEfficiencyRatio) {
  ExperimentConfig c = weak_source();
  c.detectors[2].efficiency = 0.75;
  c.detectors[3].efficiency = 0.6;
  BasisRuns r = basis_runs(c, 1000000, 20);
  NormalizationResult n = normalization_factor(r.logs(), c.input_state(), analysis::Offsets::uniform(0), 15, 0.486, 1.4);
  EXPECT_NEAR(n.ratio, 0.8, 0.03);
  EXPECT_LT(n.sigma, 0.01);
  // normalized counts restore the teleported state
  RawCounts raw;
  for (size_t b = 0; b < 3; ++b)
    raw.bases[b] = centre_threefolds(r.runs[b].log, analysis::Offsets::uniform(0), analysis::HistParams{}, 0);
  TomographyResult t = reconstruct(normalize(raw, n.ratio), c.input_state());
  EXPECT_NEAR(t.bloch.x, -1.0, 0.1);
  EXPECT_NEAR(t.bloch.y, 0.0, 0.1);
  EXPECT_NEAR(t.bloch.z, 0.0, 0.1);
}

TEST(Normalization, UnbalancedSourceFlagged) {
  ExperimentConfig c = weak_source();
  c.hh_weight = 0.7;
  BasisRuns r = basis_runs(c, 300000, 30);
  EXPECT_THROW(normalization_factor(r.logs(), c.input_state(), analysis::Offsets::uniform(0), 15, 0.486, 1.4),
               NormalizationError);
}

TEST(Normalization, PolarInputNeedsVisibilityMethod) {
  ExperimentConfig c = weak_source();
  BasisRuns r = basis_runs(c, 1000, 40);
  EXPECT_THROW(normalization_factor(r.logs(), PureQubit::H(), analysis::Offsets::uniform(0), 15, 0.486, 1.4),
               NormalizationError);
  EXPECT_THROW(normalization_factor({}, PureQubit::plus(), analysis::Offsets::uniform(0), 15, 0.486, 1.4),
               InsufficientData);
}

TEST(Scenario, TeleportedMinusStateAtHighRate) {
  ExperimentConfig c = weak_source();
  c.detectors[3].efficiency = 0.8;
  // without jitter the neighbouring bins hold only accidental heralds
  c.fidelity_half_width_bins = 0;
  scenarios::StateTomography st = scenarios::tomograph_state(c, 300000, 5);
  EXPECT_EQ(st.ratio_method, "off_diagonal");
  EXPECT_NEAR(st.ratio, 0.8, 0.03);
  EXPECT_GT(st.result.fidelity, 0.95);
  EXPECT_GT(st.result.sigmas.fidelity, 0.0);
  c.wcs_pol = "H";
  st = scenarios::tomograph_state(c, 300000, 6);
  EXPECT_EQ(st.ratio_method, "visibility");
  EXPECT_NEAR(st.ratio, 0.8, 0.03);
  EXPECT_GT(st.result.fidelity, 0.95);
}

}  // namespace
}  // namespace qtele::tomography
