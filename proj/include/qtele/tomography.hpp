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

#ifndef QTELE_TOMOGRAPHY_HPP
#define QTELE_TOMOGRAPHY_HPP

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qtele/analysis.hpp"
#include "qtele/event_log.hpp"
#include "qtele/quantum_core.hpp"

namespace qtele::tomography {

class TomographyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class InsufficientData : public TomographyError {
 public:
  using TomographyError::TomographyError;
};
class NormalizationError : public TomographyError {
 public:
  using TomographyError::TomographyError;
};

// Measurement axes; D3 projects on the positive state (H, +, R).
enum class Basis { X = 0, Y = 1, Z = 2 };
const char* basis_name(Basis b);
// Analyzer target state of D3 for a basis.
PureQubit basis_state(Basis b);

struct BasisCounts {
  double n_plus = 0;   // D3
  double n_minus = 0;  // D4
};

// Threefold counts as recorded, D4 not yet corrected for efficiency.
struct RawCounts {
  std::array<BasisCounts, 3> bases{};  // indexed by Basis
};

// Counts after the D4 efficiency correction. Only normalize() creates them,
// so a second correction cannot be applied by construction.
class NormalizedCounts {
 public:
  const std::array<BasisCounts, 3>& bases() const { return bases_; }
  double ratio() const { return ratio_; }

 private:
  NormalizedCounts() = default;
  friend NormalizedCounts normalize(const RawCounts& raw, double ratio);
  std::array<BasisCounts, 3> bases_{};
  double ratio_ = 1.0;
};

// ratio = eta_D4 / eta_D3; D4 counts are divided by it.
NormalizedCounts normalize(const RawCounts& raw, double ratio);
NormalizedCounts normalize(const NormalizedCounts&, double) = delete;

// Centre-row threefolds (|column| <= half_width bins) of one basis run.
BasisCounts centre_threefolds(const EventLog& log, const analysis::Offsets& off, const analysis::HistParams& hp,
                              int half_width_bins);

struct NormalizationResult {
  double ratio = 1.0;  // eta_D4 / eta_D3
  double sigma = 0.0;
  std::array<double, 3> per_basis{};   // NaN for bases without a log
  std::array<double, 3> per_sigma{};
  std::array<uint64_t, 3> n3{}, n4{};  // off-diagonal totals
};

struct BasisLog {
  Basis basis;
  const EventLog* log;
};

// D4/D3 efficiency ratio from off-diagonal threefolds, which herald signals
// correlated with H or V only. In the Z basis the two arms are weighted by
// the input populations, which is corrected for; inputs closer than 2% to
// H or V make that correction unusable and throw. Per-basis estimates that
// disagree by more than 4 sigma indicate an unbalanced source and throw.
NormalizationResult normalization_factor(const std::vector<BasisLog>& logs, const PureQubit& input,
                                         const analysis::Offsets& off, double range_ns, double bin_ns,
                                         double tau_ns);

struct Sigmas {
  std::array<double, 3> bloch{};
  double fidelity = 0, purity = 0, f_max = 0;
};

struct TomographyResult {
  BlochVector bloch;
  DensityMatrix rho;
  double fidelity = 0;
  double purity = 0;
  double f_max = 0;
  bool clipped = false;
  std::array<BasisCounts, 3> counts{};
  Sigmas sigmas;
};

// Linear inversion; |r| > 1 is scaled back to the unit sphere and flagged.
TomographyResult reconstruct(const NormalizedCounts& counts, const PureQubit& input);

// Poisson resampling of the raw counts (mean = observed), renormalized with
// the same ratio and reconstructed; returns the sample standard deviations.
Sigmas uncertainty(const RawCounts& raw, double ratio, const PureQubit& input, int n_resamples, uint64_t seed);

std::string to_json(const TomographyResult& r, const PureQubit& input, double ratio);

}  // namespace qtele::tomography

#endif  // QTELE_TOMOGRAPHY_HPP
