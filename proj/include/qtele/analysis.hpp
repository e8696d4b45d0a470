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

#ifndef QTELE_ANALYSIS_HPP
#define QTELE_ANALYSIS_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtele/event_log.hpp"

namespace qtele::analysis {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Delay offsets in ns, indexed [analyzer detector - 3][BSM detector - 1].
// A threefold delay is t_analyzer - t_bsm - offset.
struct Offsets {
  std::array<std::array<double, 2>, 2> ns{};
  static Offsets uniform(double ns);
  double get(int analyzer_det, int bsm_det) const { return ns.at(analyzer_det - 3).at(bsm_det - 1); }
  void set(int analyzer_det, int bsm_det, double v) { ns.at(analyzer_det - 3).at(bsm_det - 1) = v; }
};

struct HistParams {
  double bin_ns = 0.486;
  double range_ns = 15.0;
};

// Square histogram of threefold delays; rows index delta t_{j1}, columns delta t_{j2}.
// Bin k covers [(k - 1/2) w, (k + 1/2) w) so the centre bin holds zero delay.
struct Histogram2D {
  double bin_ns = 0.486;
  int half = 0;  // bins on each side of the centre
  int detector = 3;
  std::vector<uint64_t> counts;

  Histogram2D() = default;
  Histogram2D(const HistParams& p, int detector);
  int size() const { return 2 * half + 1; }
  uint64_t at(int row, int col) const { return counts[static_cast<size_t>(row) * size() + col]; }
  uint64_t& at(int row, int col) { return counts[static_cast<size_t>(row) * size() + col]; }
  double delay(int idx) const { return (idx - half) * bin_ns; }
  uint64_t total() const;
};

// Visits every threefold (analyzer record, D1 record, D2 record) whose two
// delays fall within +-(range + bin/2). Arguments are record positions and delays in ns.
using ThreefoldVisitor = std::function<void(size_t, size_t, size_t, double, double)>;
void for_each_threefold(const EventLog& log, int analyzer_det, const Offsets& off, double range_ns, double bin_ns,
                        const ThreefoldVisitor& visit);

Histogram2D build_threefold_histogram(const EventLog& log, int analyzer_det, const Offsets& off,
                                      const HistParams& p = {});
std::pair<Histogram2D, Histogram2D> build_threefold_histograms(const EventLog& log, const Offsets& off,
                                                               const HistParams& p = {});

enum class SliceAxis { row, col };  // row: fixed delta t_{j1}; col: fixed delta t_{j2}
struct Slice {
  std::vector<double> delay_ns;
  std::vector<uint64_t> counts;
};
Slice slice(const Histogram2D& h, SliceAxis which, double centre_ns);

// Counts of the centre row within +-half_width columns of zero delay.
uint64_t centre_counts(const Histogram2D& h, int half_width_bins);

// Centre bin over the mean of the arm bins: centre row and column with
// 5 tau <= |other delay| <= range.
struct RatioResult {
  double centre;
  double arm_mean;
  double ratio;
  double sigma;
};
RatioResult centre_to_arm_ratio(const Histogram2D& h, double tau_ns);

// Mean counts along the centre row and the centre column away from the centre.
struct BandProfile {
  double row_band;
  double col_band;
  double background;
};
BandProfile band_profile(const Histogram2D& h, double tau_ns);

// Width of a slice peak above a baseline, linear interpolation between bins.
double fwhm(const Slice& s, double baseline);
// Mean slice level for min_abs <= |delay| <= max_abs.
double slice_level(const Slice& s, double min_abs_ns, double max_abs_ns);

// Twofolds with t_a - t_b in [centre - half, centre + half].
uint64_t count_twofolds(const EventLog& log, int det_a, int det_b, int64_t centre_ps, int64_t half_width_ps);

struct PeakFit {
  double centre_ns = 0;
  double sigma_ns = 0;
  double amplitude = 0;
  double background = 0;
  double significance = 0;
  bool gaussian = false;  // false: centroid fallback
};
// Gaussian plus constant fit of the twofold delay distribution around expected_ns.
PeakFit fit_twofold_peak(const EventLog& log, int det_a, int det_b, double expected_ns, double search_half_ns,
                         double bin_ns = 0.05);

class CalibrationError : public AnalysisError {
 public:
  using AnalysisError::AnalysisError;
};
// Offsets that centre each (analyzer, BSM) twofold peak near expected_ns at zero.
Offsets calibrate_offsets(const EventLog& log, double expected_ns, double search_half_ns = 5.0);

enum class Peak { transmitted, stored };
struct GsiEstimate {
  double g;
  double sigma;
  uint64_t peak_counts;
  double reference_counts;  // mean over the displaced windows
};
// Reference windows sit at +-1..+-displaced pump periods from the peak.
GsiEstimate estimate_gsi(const EventLog& log, double window_ns, Peak peak, double storage_ns, double period_ns,
                         int displaced = 1);

struct VisibilityCounts {
  double angle_rad;
  std::array<uint64_t, 4> counts;  // (D1,D3), (D1,D4), (D2,D3), (D2,D4)
};
struct CurveFit {
  double A, B, phase, V;  // A + B cos(4 theta - phase)
};
struct VisibilityFit {
  std::array<CurveFit, 4> curves;
  double phi;         // entanglement phase from the common offset
  double visibility;  // mean of the four curves
  double rms_residual;
};
VisibilityFit fit_visibility_curves(const std::vector<VisibilityCounts>& data);
// D4/D3 efficiency ratio from the fitted curve maxima.
double efficiency_ratio_from_visibility(const VisibilityFit& fit);

}  // namespace qtele::analysis

#endif  // QTELE_ANALYSIS_HPP
