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

#include "qtele/analysis.hpp"
#include "qtele/rng.hpp"

namespace qtele::analysis {
namespace {

EventLog make_log(std::vector<DetectionRecord> recs) {
  std::vector<Truth> tags(recs.size(), Truth::dark);
  sort_records(recs, tags);
  return EventLog(LogHeader{}, std::move(recs));
}

DetectionRecord rec(int det, double t_ns) { return {static_cast<uint8_t>(det), std::llround(t_ns * 1000.0), 0}; }

TEST(Threefold, SingleEventLandsInCentreBin) {
  EventLog log = make_log({rec(1, 1000), rec(2, 1000), rec(3, 1050)});
  auto [h3, h4] = build_threefold_histograms(log, Offsets::uniform(50));
  EXPECT_EQ(h3.total(), 1u);
  EXPECT_EQ(h3.at(h3.half, h3.half), 1u);
  EXPECT_EQ(h4.total(), 0u);
  Slice s = slice(h3, SliceAxis::row, 0.0);
  EXPECT_EQ(s.counts[h3.half], 1u);
  uint64_t rest = 0;
  for (auto c : s.counts) rest += c;
  EXPECT_EQ(rest, 1u);
}

TEST(Threefold, EmptyLogGivesEmptyHistograms) {
  auto [h3, h4] = build_threefold_histograms(EventLog{}, Offsets::uniform(0));
  EXPECT_EQ(h3.total() + h4.total(), 0u);
  EXPECT_EQ(h3.size(), 2 * 31 + 1);
}

TEST(Threefold, BinEdgesAreCentredOnZero) {
  const double w = 0.486;
  // delays of d1 = t3 - t1 and d2 = t3 - t2
  EventLog log = make_log({rec(1, 100.0 - 0.242), rec(2, 100.0 - 0.243), rec(3, 100.0)});
  Histogram2D h = build_threefold_histogram(log, 3, Offsets::uniform(0));
  EXPECT_EQ(h.at(h.half, h.half + 1), 1u);
  EXPECT_DOUBLE_EQ(h.delay(h.half + 1), w);
}

TEST(Threefold, CountConservationAndRange) {
  Rng rng(1);
  std::vector<DetectionRecord> recs;
  uint64_t in_range = 0;
  for (int i = 0; i < 2000; ++i) {
    double t = 1000.0 * i;
    double d1 = (rng.uniform() - 0.5) * 40, d2 = (rng.uniform() - 0.5) * 40;
    recs.push_back(rec(3, t));
    recs.push_back(rec(1, t - d1));
    recs.push_back(rec(2, t - d2));
    auto inside = [](double d) { return std::floor(d / 0.486 + 0.5) >= -31 && std::floor(d / 0.486 + 0.5) <= 31; };
    // recorded delays are rounded to picoseconds
    double r1 = (std::llround(t * 1000) - std::llround((t - d1) * 1000)) / 1000.0;
    double r2 = (std::llround(t * 1000) - std::llround((t - d2) * 1000)) / 1000.0;
    in_range += inside(r1) && inside(r2);
  }
  Histogram2D h = build_threefold_histogram(make_log(recs), 3, Offsets::uniform(0));
  EXPECT_EQ(h.total(), in_range);
}

TEST(Threefold, ShiftByWholeBinsShiftsHistogram) {
  Rng rng(2);
  std::vector<DetectionRecord> a, b;
  const int64_t w = 486;
  for (int i = 0; i < 3000; ++i) {
    int64_t t = 1000000LL * i;
    int64_t t1 = t - static_cast<int64_t>(rng.uniform() * 8000), t2 = t - static_cast<int64_t>(rng.uniform() * 8000);
    a.insert(a.end(), {{3, t, 0}, {1, t1, 0}, {2, t2, 0}});
    // analyzer records two bins later
    b.insert(b.end(), {{3, t + 2 * w, 0}, {1, t1, 0}, {2, t2, 0}});
  }
  HistParams hp{0.486, 15.0};
  Histogram2D ha = build_threefold_histogram(make_log(a), 3, Offsets::uniform(0), hp);
  Histogram2D hb = build_threefold_histogram(make_log(b), 3, Offsets::uniform(0), hp);
  for (int r = 0; r + 2 < ha.size(); ++r)
    for (int c = 0; c + 2 < ha.size(); ++c) ASSERT_EQ(ha.at(r, c), hb.at(r + 2, c + 2));
}

TEST(Slice, OutOfRangeCentreRejected) {
  Histogram2D h(HistParams{}, 3);
  EXPECT_THROW(slice(h, SliceAxis::col, 20.0), AnalysisError);
  EXPECT_NO_THROW(slice(h, SliceAxis::col, 14.9));
}

TEST(Slice, FwhmOfTriangle) {
  Slice s;
  for (int k = -10; k <= 10; ++k) {
    s.delay_ns.push_back(k * 0.5);
    s.counts.push_back(static_cast<uint64_t>(std::max(0, 100 - 20 * std::abs(k)) + 10));
  }
  EXPECT_NEAR(slice_level(s, 3.0, 5.0), 10.0, 1e-12);
  // peak 100 over baseline 10, half height reached 2.5 bins out
  EXPECT_NEAR(fwhm(s, 10.0), 2.5, 1e-9);
}

TEST(Ratio, CentreOverArms) {
  Histogram2D h(HistParams{}, 3);
  const int c = h.half;
  for (int k = 0; k < h.size(); ++k) {
    h.at(c, k) = 25;
    h.at(k, c) = 25;
  }
  h.at(c, c) = 100;
  RatioResult r = centre_to_arm_ratio(h, 1.4);
  EXPECT_DOUBLE_EQ(r.ratio, 4.0);
  EXPECT_DOUBLE_EQ(r.arm_mean, 25.0);
  EXPECT_GT(r.sigma, 0.0);
  BandProfile b = band_profile(h, 1.4);
  EXPECT_DOUBLE_EQ(b.row_band, 25.0);
  EXPECT_DOUBLE_EQ(b.background, 0.0);
}

// Twofold peak at true_ns with Gaussian spread plus a flat background.
std::vector<DetectionRecord> twofold_data(double true_ns, uint64_t seed, double sigma = 0.3) {
  Rng rng(seed);
  std::vector<DetectionRecord> recs;
  for (int i = 0; i < 4000; ++i) {
    double t = 1000.0 * i;
    int a = 3 + (i & 1), b = 1 + ((i >> 1) & 1);
    recs.push_back(rec(b, t));
    recs.push_back(rec(a, t + true_ns + sigma * rng.normal()));
    recs.push_back(rec(a, t + true_ns + (rng.uniform() - 0.5) * 20));
  }
  return recs;
}

TEST(Calibration, RecoversInjectedShift) {
  EventLog log = make_log(twofold_data(50.7, 3));
  Offsets off = calibrate_offsets(log, 50.0);
  for (int a = 3; a <= 4; ++a)
    for (int b = 1; b <= 2; ++b) EXPECT_NEAR(off.get(a, b), 50.7, 0.05) << a << b;
  Offsets zero = calibrate_offsets(make_log(twofold_data(0.0, 4)), 0.0);
  EXPECT_NEAR(zero.get(3, 1), 0.0, 0.05);
}

TEST(Calibration, JitterFreeLatticeData) {
  // every delay is a whole number of 0.486 ns slots; accidentals sit on the
  // lattice points next to the peak and must not pull the centroid
  Rng rng(6);
  std::vector<DetectionRecord> recs;
  for (int i = 0; i < 4000; ++i) {
    double t = 1000.0 * i;
    int a = 3 + (i & 1), b = 1 + ((i >> 1) & 1);
    recs.push_back(rec(b, t));
    if ((i >> 2) & 1) recs.push_back(rec(a, t + 50.0));
    for (int k = 0; k < 3; ++k) recs.push_back(rec(a, t + 50.0 + 0.486 * std::floor(rng.uniform() * 21 - 10)));
  }
  Offsets off = calibrate_offsets(make_log(recs), 50.0);
  for (int a = 3; a <= 4; ++a)
    for (int b = 1; b <= 2; ++b) EXPECT_NEAR(off.get(a, b), 50.0, 0.1) << a << b;
}

TEST(Calibration, WeakPeakIsAnError) {
  Rng rng(5);
  std::vector<DetectionRecord> recs;
  for (int i = 0; i < 400; ++i) {
    recs.push_back(rec(1 + (i & 1), 1000.0 * i));
    recs.push_back(rec(3 + ((i >> 1) & 1), 1000.0 * i + 50 + (rng.uniform() - 0.5) * 10));
  }
  EXPECT_THROW(calibrate_offsets(make_log(recs), 50.0), CalibrationError);
}

TEST(Twofolds, WindowIsInclusive) {
  EventLog log = make_log({rec(1, 100.0), rec(3, 100.5), rec(3, 99.5), rec(3, 100.501)});
  EXPECT_EQ(count_twofolds(log, 3, 1, 0, 500), 2u);
  EXPECT_EQ(count_twofolds(log, 3, 1, 500, 1), 2u);
}

TEST(Gsi, PeakOverDisplacedWindows) {
  // true pairs at zero delay and uncorrelated BSM clicks one period away
  std::vector<DetectionRecord> recs;
  for (int i = 0; i < 1000; ++i) {
    double t = 1000.0 * i;
    recs.push_back(rec(3, t));
    recs.push_back(rec(1, t));
    if (i % 50 == 0) recs.push_back(rec(2, t + 100.1));
    if (i % 25 == 0) recs.push_back(rec(2, t - 99.9));
  }
  GsiEstimate g = estimate_gsi(make_log(recs), 0.486, Peak::transmitted, 50, 100);
  EXPECT_EQ(g.peak_counts, 1000u);
  EXPECT_DOUBLE_EQ(g.reference_counts, 30.0);
  EXPECT_NEAR(g.g, 1000.0 / 30.0, 1e-12);
  EXPECT_THROW(estimate_gsi(make_log({rec(3, 0), rec(1, 0)}), 0.486, Peak::transmitted, 50, 100), AnalysisError);
  EXPECT_THROW(estimate_gsi(make_log(recs), 150, Peak::transmitted, 50, 100), AnalysisError);
}

std::vector<VisibilityCounts> curves(double phi, double V, double ratio4, int n = 16, double span = M_PI / 2) {
  std::vector<VisibilityCounts> out;
  const double sign[4] = {1, -1, -1, 1};
  for (int i = 0; i < n; ++i) {
    double th = span * i / n;
    VisibilityCounts vc{th, {}};
    for (int k = 0; k < 4; ++k) {
      double phase = sign[k] * M_PI / 2 - phi;
      double eff = (k == 1 || k == 3) ? ratio4 : 1.0;
      vc.counts[k] = static_cast<uint64_t>(std::llround(1e7 * eff * (1 + V * std::cos(4 * th - phase))));
    }
    out.push_back(vc);
  }
  return out;
}

TEST(Visibility, NoiselessCurvesRecoveredExactly) {
  VisibilityFit f = fit_visibility_curves(curves(0.2, 0.93, 1.0));
  EXPECT_NEAR(f.phi, 0.2, 1e-6);
  EXPECT_NEAR(f.visibility, 0.93, 1e-6);
  for (const auto& c : f.curves) EXPECT_NEAR(c.V, 0.93, 1e-6);
  EXPECT_NEAR(efficiency_ratio_from_visibility(fit_visibility_curves(curves(0.0, 0.9, 0.8))), 0.8, 1e-6);
}

TEST(Visibility, TooFewAnglesOrShortSpanRejected) {
  EXPECT_THROW(fit_visibility_curves(curves(0, 1, 1, 7)), AnalysisError);
  EXPECT_THROW(fit_visibility_curves(curves(0, 1, 1, 16, M_PI / 4)), AnalysisError);
}

}  // namespace
}  // namespace qtele::analysis
