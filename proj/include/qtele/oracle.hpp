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

#ifndef QTELE_ORACLE_HPP
#define QTELE_ORACLE_HPP

#include <string>

namespace qtele::oracle {

enum class P02Form { approximate, exact_prefactor };

struct NoiseBudget {
  double p = 0, mu = 0, eta_i = 0, eta_s = 0;
  double P11 = 0;  // pair + single WCS photon, idler transmitted
  double P20 = 0;  // two WCS photons, idler lost
  double P02 = 0;  // two idlers, no WCS photon
  double F = 0;
  double P = 0;
  double F_max = 0;
  bool snr_holds = false;
  double snr_margin_1 = 0;  // eta_i / (mu/4)
  double snr_margin_2 = 0;  // (mu/4) / (p eta_i / 8)
};

NoiseBudget noise_probabilities(double p, double mu, double eta_i, double eta_s,
                                P02Form form = P02Form::approximate);
double predicted_fidelity(const NoiseBudget& b);
double predicted_purity(const NoiseBudget& b);
// Fills F, P, F_max and the SNR fields.
NoiseBudget evaluate(double p, double mu, double eta_i, double eta_s, double snr_threshold = 10.0,
                     P02Form form = P02Form::approximate);

struct SnrCondition {
  bool holds;
  double margin_1;
  double margin_2;
};
SnrCondition snr_condition(double p, double mu, double eta_i, double threshold = 10.0);

double gsi_ideal(double p);

struct FibreCheck {
  double F_with;
  double F_without;
  double delta;        // |F_with - F_without| with the idler-loss factor (1 - eta_i) held fixed
  double delta_exact;  // full substitution mu -> eta mu, eta_i -> eta eta_i
};
FibreCheck fibre_invariance_check(const NoiseBudget& b, double eta_fibre);
FibreCheck fibre_invariance_check(const NoiseBudget& b, double eta_idler_arm, double eta_wcs_arm);

double fibre_transmission(double km, double db_per_km);

std::string to_json(const NoiseBudget& b);

}  // namespace qtele::oracle

#endif  // QTELE_ORACLE_HPP
