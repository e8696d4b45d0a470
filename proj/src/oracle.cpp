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

#include "qtele/oracle.hpp"

#include <cmath>
#include <limits>
#include "json.hpp"

#include "qtele/quantum_core.hpp"

namespace qtele::oracle {

namespace {

void check_unit(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError(std::string(name) + " outside [0, 1]");
}

NoiseBudget raw_budget(double p, double mu, double eta_i, double eta_s, double idler_loss,
                       P02Form form) {
  NoiseBudget b;
  b.p = p;
  b.mu = mu;
  b.eta_i = eta_i;
  b.eta_s = eta_s;
  b.P11 = p * mu * eta_i * eta_s / 8.0;
  b.P20 = p * mu * mu * idler_loss * eta_s / 32.0;
  double pre = form == P02Form::exact_prefactor ? (1.0 - mu - mu * mu / 2.0) : 1.0;
  b.P02 = pre * p * p * eta_i * eta_i * eta_s / 16.0;
  return b;
}

}  // namespace

NoiseBudget noise_probabilities(double p, double mu, double eta_i, double eta_s, P02Form form) {
  check_unit(p, "p");
  check_unit(mu, "mu");
  check_unit(eta_i, "eta_i");
  check_unit(eta_s, "eta_s");
  return raw_budget(p, mu, eta_i, eta_s, 1.0 - eta_i, form);
}

double predicted_fidelity(const NoiseBudget& b) {
  double den = b.P11 + 2.0 * (b.P20 + b.P02);
  if (!(den > 0.0)) throw DomainError("predicted_fidelity: zero denominator");
  return (b.P11 + b.P20 + b.P02) / den;
}

double predicted_purity(const NoiseBudget& b) { return purity_from_fidelity_model(predicted_fidelity(b)); }

SnrCondition snr_condition(double p, double mu, double eta_i, double threshold) {
  const double inf = std::numeric_limits<double>::infinity();
  double m1 = mu > 0 ? eta_i / (mu / 4.0) : inf;
  double den2 = p * eta_i / 8.0;
  double m2 = den2 > 0 ? (mu / 4.0) / den2 : inf;
  return {m1 >= threshold && m2 >= threshold, m1, m2};
}

NoiseBudget evaluate(double p, double mu, double eta_i, double eta_s, double snr_threshold,
                     P02Form form) {
  NoiseBudget b = noise_probabilities(p, mu, eta_i, eta_s, form);
  b.F = predicted_fidelity(b);
  b.P = predicted_purity(b);
  b.F_max = f_max_from_purity(b.P);
  auto s = snr_condition(p, mu, eta_i, snr_threshold);
  b.snr_holds = s.holds;
  b.snr_margin_1 = s.margin_1;
  b.snr_margin_2 = s.margin_2;
  return b;
}

double gsi_ideal(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("gsi_ideal: p must be in (0, 1]");
  return 1.0 + 1.0 / p;
}

FibreCheck fibre_invariance_check(const NoiseBudget& b, double eta_idler_arm, double eta_wcs_arm) {
  if (!(eta_idler_arm > 0 && eta_idler_arm <= 1 && eta_wcs_arm > 0 && eta_wcs_arm <= 1))
    throw DomainError("fibre transmission outside (0, 1]");
  NoiseBudget base = raw_budget(b.p, b.mu, b.eta_i, b.eta_s, 1.0 - b.eta_i, P02Form::approximate);
  NoiseBudget held = raw_budget(b.p, eta_wcs_arm * b.mu, eta_idler_arm * b.eta_i, b.eta_s,
                                1.0 - b.eta_i, P02Form::approximate);
  NoiseBudget exact = raw_budget(b.p, eta_wcs_arm * b.mu, eta_idler_arm * b.eta_i, b.eta_s,
                                 1.0 - eta_idler_arm * b.eta_i, P02Form::approximate);
  FibreCheck r;
  r.F_without = predicted_fidelity(base);
  r.F_with = predicted_fidelity(held);
  r.delta = std::abs(r.F_with - r.F_without);
  r.delta_exact = std::abs(predicted_fidelity(exact) - r.F_without);
  return r;
}

FibreCheck fibre_invariance_check(const NoiseBudget& b, double eta_fibre) {
  return fibre_invariance_check(b, eta_fibre, eta_fibre);
}

double fibre_transmission(double km, double db_per_km) {
  if (km < 0 || db_per_km < 0) throw DomainError("negative fibre length or attenuation");
  return std::pow(10.0, -km * db_per_km / 10.0);
}

std::string to_json(const NoiseBudget& b) {
  nlohmann::ordered_json j;
  j["inputs"] = {{"p", b.p}, {"mu", b.mu}, {"eta_i", b.eta_i}, {"eta_s", b.eta_s}};
  j["P11"] = b.P11;
  j["P20"] = b.P20;
  j["P02"] = b.P02;
  j["fidelity"] = b.F;
  j["purity"] = b.P;
  j["f_max"] = b.F_max;
  j["snr"] = {{"holds", b.snr_holds}, {"margin_1", b.snr_margin_1}, {"margin_2", b.snr_margin_2}};
  return j.dump(2);
}

}  // namespace qtele::oracle
