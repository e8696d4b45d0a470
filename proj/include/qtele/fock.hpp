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

#ifndef QTELE_FOCK_HPP
#define QTELE_FOCK_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qtele/quantum_core.hpp"
#include "qtele/rng.hpp"

namespace qtele::fock {

enum class Spatial : uint8_t { idler, wcs, bs_out_1, bs_out_2, signal, aux };
enum class Pol : uint8_t { H = 0, V = 1 };

struct ModeLabel {
  Spatial spatial = Spatial::aux;
  Pol pol = Pol::H;
  int bin = 0;
  int tag = 0;
  bool operator==(const ModeLabel&) const = default;
};

// Photon numbers of up to 16 modes packed into 4-bit fields.
using Occupation = uint64_t;
constexpr int kMaxModes = 16;
constexpr int kMaxPerMode = 15;

inline int occ_get(Occupation o, int m) { return static_cast<int>((o >> (4 * m)) & 0xFu); }
inline Occupation occ_set(Occupation o, int m, int k) {
  return (o & ~(Occupation{0xF} << (4 * m))) | (Occupation(k) << (4 * m));
}
int occ_total(Occupation o);

struct Term {
  Occupation occ;
  cplx amp;
};

// Polynomial in creation operators; the state it represents is poly |0>.
class Poly {
 public:
  std::vector<Term> terms;

  static Poly one();
  static Poly linear(const std::vector<std::pair<int, cplx>>& comb);
  Poly operator*(const Poly& o) const;
  Poly operator+(const Poly& o) const;
  Poly scaled(cplx c) const;
  Poly pow(int n) const;
  void compress(double tol = 0.0);
};

// images[m] lists the modes (with coefficients) that creation operator m maps to;
// an empty entry leaves the mode unchanged.
using ModeMap = std::vector<std::vector<std::pair<int, cplx>>>;
Poly substitute(const Poly& p, const ModeMap& images);

class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NullConditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fock-basis amplitudes over labeled modes.
class FewPhotonState {
 public:
  FewPhotonState() = default;
  FewPhotonState(std::vector<ModeLabel> modes, int n_max);

  // Terms with more than n_max photons are dropped.
  static FewPhotonState from_poly(std::vector<ModeLabel> modes, const Poly& p, int n_max);
  Poly to_poly() const;

  const std::vector<ModeLabel>& modes() const { return modes_; }
  const std::vector<Term>& terms() const { return terms_; }
  int n_max() const { return n_max_; }
  int find_mode(const ModeLabel& m) const;
  double norm2() const;

 private:
  std::vector<ModeLabel> modes_;
  std::vector<Term> terms_;
  int n_max_ = 4;
};

// Incoherent mixture of pure branches with weights summing to one.
struct FewPhotonEnsemble {
  std::vector<std::pair<double, FewPhotonState>> members;
};

struct SourceParams {
  double p = 0.0;
  double phi = 0.0;
  double V_src = 1.0;
  double mu = 0.0;
  PureQubit wcs_pol = PureQubit::minus();
  double overlap = 1.0;  // amplitude overlap between the WCS and idler temporal modes
  int n_max = 4;
};

// Pair source and WCS in bins 0 (idler mode) and 1 (orthogonal part of the WCS mode).
FewPhotonEnsemble source_state(const SourceParams& sp);

// The single-pair x single-WCS-photon branch, normalized.
FewPhotonState pair_wcs_branch(const PureQubit& wcs_pol, double overlap = 1.0, double phi = 0.0);

FewPhotonState beamsplitter_transform(const FewPhotonState& s);

struct ClickPattern {
  std::optional<int> d1_bin;  // D1 sits behind an H polarizer on output 1
  std::optional<int> d2_bin;  // D2 sits behind a V polarizer on output 2
};

// Probability that D1/D2 click exactly in the given bins (unit efficiency by default).
double click_probability(const FewPhotonState& s, const ClickPattern& pat, double eta1 = 1.0,
                         double eta2 = 1.0);
double click_probability(const FewPhotonEnsemble& e, const ClickPattern& pat, double eta1 = 1.0,
                         double eta2 = 1.0);
// Same, restricted to terms that carry at least one signal photon.
double herald_with_signal_probability(const FewPhotonEnsemble& e, const ClickPattern& pat);

struct ConditionalSignal {
  double prob;
  DensityMatrix rho;
};
// rho is the one-photon polarization state of the signal given the pattern
// (normalized first-order correlation, identical to the pure conditional state
// when a single signal photon is present).
ConditionalSignal conditional_signal_state(const FewPhotonState& s, const ClickPattern& pat);
ConditionalSignal conditional_signal_state(const FewPhotonEnsemble& e, const ClickPattern& pat);

// Ideal Bell-state-measurement map for phase phi and the unitary that undoes it.
Unitary2 correction_unitary(double phi);

double overlap_amplitude(double delta_t_ns, double tau_i_ns, double xi_max = 1.0);

struct HomParams {
  double tau_i = 1.4;
  double p = 0.0025;
  double mu = 0.0035;
  double eta_i = 0.13;
  double eta_herald = 0.05;
  double eta_det = 1.0;
  double xi_max = 1.0;
};

struct HomScan {
  std::vector<double> coincidence;
  double p_far = 0;
  double p_zero = 0;
  double visibility = 0;
};

// Heralded coincidence probability behind a polarizer-free beam splitter.
double hom_coincidence(double overlap, const HomParams& hp);
HomScan hom_scan(const std::vector<double>& delta_t, const HomParams& hp);

// Probability that both outputs click when k photons enter port a and j enter
// port b in one common mode, plus r photons in port b in an orthogonal mode.
double bs_coincidence(int k, int j, int r, double eta_det);

// --- per-group sampler used by the Monte Carlo engine ---

struct PairBundle {
  int n_pairs = 1;
  double phase = 0.0;
  double hh_weight = 0.5;  // |HH> weight of the pair state
  int idlers_to_bs = 0;
  int idlers_lost = 0;
  int signals_stored = 0;
  int signals_transmitted = 0;
  int signals_lost = 0;
};

struct WcsBundle {
  int photons = 1;
  PureQubit pol;
};

struct BsmSettings {
  double eta_d1 = 1.0;
  double eta_d2 = 1.0;
  bool polarizers = true;
  bool idler_plate = false;
  Unitary2 idler_plate_u = Unitary2::identity();
};

enum class Branch : uint8_t { stored, transmitted };

struct SignalOutcome {
  int bundle;  // index into the pair bundle list
  Branch branch;
  int n_target;  // photons leaving the analyzer towards D3
  int n_orth;    // towards D4
};

struct GroupOutcome {
  bool d1 = false;
  bool d2 = false;
  std::vector<SignalOutcome> signals;
};

// Samples the D1/D2 response of one temporal-mode group and the analyzer
// outcome of every signal photon attached to it. The analyzer unitary maps the
// D3 target state onto |H>.
GroupOutcome sample_group(const std::vector<PairBundle>& pairs, const std::vector<WcsBundle>& wcs,
                          const BsmSettings& bsm, const Unitary2& analyzer, Rng& rng);

}  // namespace qtele::fock

#endif  // QTELE_FOCK_HPP
