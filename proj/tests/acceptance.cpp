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

// Acceptance suite: prints one PASS/FAIL line per criterion. Exit status is 0
// once every criterion was evaluated; --strict turns any FAIL into status 1.

#include "CLI11.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "qtele/oracle.hpp"
#include "qtele/rng.hpp"
#include "qtele/scenarios.hpp"

using namespace qtele;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // informational, printed below the verdict
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void no_darks_no_jitter(ExperimentConfig& c) {
  for (auto& d : c.detectors) d.dark_rate_hz = d.jitter_sigma_ns = 0;
}

// Lossless, noiseless apparatus with weak sources and a CW pump.
ExperimentConfig ideal() {
  ExperimentConfig c;
  c.p = 1e-4;
  c.mu = 0.02;
  c.eta_i = c.eta_s = 1;
  c.mem_efficiency = 0;
  c.mem_transmission = 1;
  c.V_src = 1;
  c.pump_shape = PumpShape::cw;
  for (auto& d : c.detectors) d = {1.0, 0.0, 0.0};
  return c;
}

// Measured-value configuration reduced to the terms the noise budget keeps:
// no darks, no jitter, perfect source visibility, only the stored peak.
ExperimentConfig oracle_like() {
  ExperimentConfig c;
  c.pump_shape = PumpShape::flat_top;
  c.mem_transmission = 0;
  c.xi_max = 1;
  c.V_src = 1;
  no_darks_no_jitter(c);
  c.gates = {{49, 51}};
  c.fidelity_half_width_bins = 0;
  return c;
}

struct Tomo {
  tomography::TomographyResult r;
  int64_t windows;
};

// Three-basis tomography of the centre bin of the stored peak, equal
// analyzer efficiencies so no renormalization is applied.
Tomo stored_peak_tomography(ExperimentConfig c, int64_t windows, uint64_t seed) {
  analysis::HistParams hp{c.bin_ns, 1.5};
  tomography::RawCounts raw;
  for (int b = 0; b < 3; ++b) {
    c.analyzer_target = b == 0 ? "+" : b == 1 ? "R" : "H";
    engine::RunResult run = engine::run(c, windows, stream_key(seed, b, 41));
    raw.bases[b] = tomography::centre_threefolds(run.log, analysis::Offsets::uniform(c.mem_storage_ns), hp,
                                                 c.fidelity_half_width_bins);
  }
  Tomo t{tomography::reconstruct(tomography::normalize(raw, 1.0), c.input_state()), windows};
  t.r.sigmas = tomography::uncertainty(raw, 1.0, c.input_state(), 400, seed);
  return t;
}

Outcome criterion1() {
  Outcome o;
  const int reps = 10000;
  oracle::NoiseBudget b;
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) b = oracle::evaluate(0.01, 0.011, 0.13, 6.3e-3);
  const double ms = seconds_since(t0) * 1e3 / reps;
  const OracleInputs in = oracle_inputs(ExperimentConfig{});
  const oracle::NoiseBudget fromcfg = oracle::evaluate(in.p, in.mu, in.eta_i, in.eta_s);
  o.pass = b.F >= 0.925 && b.F <= 0.935 && b.P >= 0.865 && b.P <= 0.880 && ms < 1.0 &&
           std::abs(fromcfg.F - b.F) < 1e-12;
  o.detail = fmt("F=%.4f in [0.925,0.935], P=%.4f in [0.865,0.880], %.2g ms per evaluation", b.F, b.P, ms);
  o.notes.push_back(fmt("default config maps to p=%g mu=%g eta_i=%g eta_s=%g, F=%.4f", in.p, in.mu, in.eta_i,
                        in.eta_s, fromcfg.F));
  return o;
}

Outcome criterion2() {
  Outcome o;
  ExperimentConfig c = oracle_like();
  const int64_t windows = 2500000000;
  auto t0 = std::chrono::steady_clock::now();
  Tomo t = stored_peak_tomography(c, windows, 2);
  const double secs = seconds_since(t0);
  const OracleInputs in = oracle_inputs(c);
  const oracle::NoiseBudget b = oracle::evaluate(in.p, in.mu, in.eta_i, in.eta_s);
  const double dF = t.r.fidelity - b.F, dP = t.r.purity - b.P;
  o.pass = std::abs(dF) <= 0.02 && std::abs(dP) <= 0.03 && secs <= 300;
  o.detail = fmt("F=%.4f+-%.4f vs %.4f (|d|=%.4f<=0.02), P=%.4f+-%.4f vs %.4f (|d|=%.4f<=0.03), %.3g windows/basis, "
                 "%.0f s",
                 t.r.fidelity, t.r.sigmas.fidelity, b.F, std::abs(dF), t.r.purity, t.r.sigmas.purity, b.P,
                 std::abs(dP), static_cast<double>(windows), secs);
  return o;
}

Outcome criterion3() {
  Outcome o;
  ExperimentConfig c = ideal();
  scenarios::TeleportOutput t = scenarios::teleport(c, 20000000, 3);
  c.analyzer_target = "H";
  scenarios::TeleportOutput z = scenarios::teleport(c, 4000000, 4);
  const bool peak = std::abs(t.r3.ratio - 4.0) <= 0.4, dip = t.r4.ratio <= 0.1;
  // in the H/V basis D3 keeps only the column band and D4 only the row band
  const bool bands = z.b3.col_band > 10 * std::max(z.b3.row_band, 0.5) &&
                     z.b4.row_band > 10 * std::max(z.b4.col_band, 0.5);
  o.pass = peak && dip && bands;
  o.detail = fmt("D3 centre/arm=%.2f+-%.2f (4+-0.4), D4 centre/arm=%.3f (<=0.1), H/V bands D3 col/row=%.1f/%.1f "
                 "D4 row/col=%.1f/%.1f",
                 t.r3.ratio, t.r3.sigma, t.r4.ratio, z.b3.col_band, z.b3.row_band, z.b4.row_band, z.b4.col_band);
  return o;
}

Outcome criterion4() {
  Outcome o;
  ExperimentConfig c = ideal();
  for (auto& d : c.detectors) d.jitter_sigma_ns = 0.212;
  scenarios::TeleportOutput t = scenarios::teleport(c, 20000000, 5);
  const double tau = c.tau_i_ns;
  const double base = analysis::slice_level(t.s3, 5 * tau, c.range_ns);
  const double w = analysis::fwhm(t.s3, base);
  o.pass = w >= 2.0 * 0.7 && w <= 2.0 * 1.3;
  o.detail = fmt("centre-row FWHM=%.2f ns, expected 2 ns +-30%% [1.4,2.6]", w);
  o.notes.push_back(fmt("one 0.486 ns slot per temporal mode: the peak is one bin convolved with two %.3f ns "
                        "jitters, the coherence time enters only the HOM overlap",
                        0.212));
  return o;
}

Outcome criterion5() {
  Outcome o;
  ExperimentConfig c;
  c.pump_shape = PumpShape::flat_top;
  no_darks_no_jitter(c);
  scenarios::GsiOutput g = scenarios::gsi(c, 10000000, 5);
  const bool centre = std::abs(g.transmitted.g - 101.0) <= 10.0;

  bool above = true;
  for (double p = 0.001; p < 0.5; p += 0.001) above = above && oracle::gsi_ideal(p) > 2.0;
  std::string sims;
  for (double p : {0.2, 0.49}) {
    ExperimentConfig h = c;
    h.p = p;
    h.pair_statistics = PairStatistics::thermal;
    h.max_pairs = 4;
    scenarios::GsiOutput gh = scenarios::gsi(h, 200000, 6);
    above = above && gh.transmitted.g - 3 * gh.transmitted.sigma > 2.0;
    sims += fmt(" p=%.2f: %.2f+-%.2f", p, gh.transmitted.g, gh.transmitted.sigma);
  }
  o.pass = centre && above;
  o.detail = fmt("g_si(p=0.01)=%.1f+-%.1f (101+-10); ideal law > 2 on p<0.5; thermal simulation%s", g.transmitted.g,
                 g.transmitted.sigma, sims.c_str());

  ExperimentConfig j;
  j.pump_shape = PumpShape::flat_top;
  for (auto& d : j.detectors) d.dark_rate_hz = 0;
  scenarios::GsiOutput gj = scenarios::gsi(j, 10000000, 7);
  o.notes.push_back(fmt("evaluated with flat-top pump and no jitter; with 0.212 ns jitter g_si=%.1f+-%.1f",
                        gj.transmitted.g, gj.transmitted.sigma));
  if (g.stored) o.notes.push_back(fmt("stored peak g_si=%.1f+-%.1f", g.stored->g, g.stored->sigma));
  const double p = 0.49;
  o.notes.push_back(fmt("two-term pair law at p=0.49 gives (1+3p)/(p(1+1.5p)^2)=%.2f", (1 + 3 * p) /
                                                                                         (p * std::pow(1 + 1.5 * p, 2))));
  return o;
}

Outcome criterion6() {
  Outcome o;
  const std::vector<double> delays = {-8, -7, 0, 7, 8};
  std::string limit;
  double v_low = 0;
  // p falls faster than mu so the heralded two-idler term vanishes too
  for (double s : {1.0, 1e-1, 1e-2}) {
    fock::HomParams hp;
    hp.p = 1e-6 * s * s;
    hp.mu = 1e-3 * s;
    v_low = fock::hom_scan(delays, hp).visibility;
    limit += fmt(" %.4f", v_low);
  }
  fock::HomParams hp;
  hp.p = 0.0025;
  hp.mu = 0.0035;
  scenarios::HomOutput h = scenarios::hom(hp, delays, 100000000, 8);
  const double ve = h.engine.visibility, vm = h.mc_visibility;
  o.pass = v_low > 0.999 && ve >= 0.81 && std::abs(vm - ve) <= 0.02;
  o.detail = fmt("V(p,mu -> 0):%s (>0.999); engine V=%.4f (>=0.81); simulated V=%.4f+-%.4f (|d|=%.4f<=0.02)",
                 limit.c_str(), ve, vm, h.mc_sigma, std::abs(vm - ve));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const double eta = oracle::fibre_transmission(12.4, 0.35);
  const oracle::NoiseBudget b = oracle::evaluate(0.01, 0.011, 0.13, 6.3e-3);
  const oracle::FibreCheck fc = oracle::fibre_invariance_check(b, eta);

  ExperimentConfig c = oracle_like();
  c.wcs_pol = "+";
  Tomo bare = stored_peak_tomography(c, 1000000000, 70);
  c.fibre_idler_km = c.fibre_wcs_km = 12.4;
  Tomo spool = stored_peak_tomography(c, 4000000000, 71);
  const double d = spool.r.fidelity - bare.r.fidelity;
  const double s = std::hypot(spool.r.sigmas.fidelity, bare.r.sigmas.fidelity);
  o.pass = fc.delta <= 1e-12 && std::abs(d) < s;
  o.detail = fmt("oracle delta=%.1e (<=1e-12); F(12.4 km)=%.4f+-%.4f, F(0 km)=%.4f+-%.4f, |d|=%.4f < 1 sigma=%.4f",
                 fc.delta, spool.r.fidelity, spool.r.sigmas.fidelity, bare.r.fidelity, bare.r.sigmas.fidelity,
                 std::abs(d), s);
  o.notes.push_back(fmt("fibre transmission %.4f per arm; substituting it into the idler-loss factor as well moves "
                        "F by %.1e",
                        eta, fc.delta_exact));
  return o;
}

tomography::RawCounts sample_counts(const std::array<double, 3>& r, double n, Rng& rng) {
  tomography::RawCounts raw;
  for (int k = 0; k < 3; ++k) {
    raw.bases[k].n_plus = static_cast<double>(rng.poisson(n * (1 + r[k]) / 2));
    raw.bases[k].n_minus = static_cast<double>(rng.poisson(n * (1 - r[k]) / 2));
  }
  return raw;
}

Outcome criterion8() {
  Outcome o;
  Rng rng(8);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    // uniform direction, length in [0, 1]
    const double z = 2 * rng.uniform() - 1, ph = 2 * std::numbers::pi * rng.uniform(), len = rng.uniform();
    const double s = std::sqrt(1 - z * z);
    const std::array<double, 3> r{len * s * std::cos(ph), len * s * std::sin(ph), len * z};
    auto res = tomography::reconstruct(tomography::normalize(sample_counts(r, 1e5, rng), 1.0), PureQubit::plus());
    const std::array<double, 3> got{res.bloch.x, res.bloch.y, res.bloch.z};
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(got[k] - r[k]));
  }
  const std::array<double, 3> r{0.3, -0.2, 0.5};
  double ratio = 0;
  auto lo = tomography::uncertainty(sample_counts(r, 1e4, rng), 1.0, PureQubit::plus(), 4000, 81);
  auto hi = tomography::uncertainty(sample_counts(r, 1e6, rng), 1.0, PureQubit::plus(), 4000, 82);
  for (int k = 0; k < 3; ++k) ratio += lo.bloch[k] / hi.bloch[k] / 3;
  o.pass = worst <= 0.02 && std::abs(ratio / 10.0 - 1.0) <= 0.1;
  o.detail = fmt("max Bloch error over 20 states at 1e5/basis=%.4f (<=0.02); sigma(1e4)/sigma(1e6)=%.3f (10+-10%%)",
                 worst, ratio);
  return o;
}

Outcome criterion9(int64_t windows) {
  Outcome o;
  ExperimentConfig c;
  auto t0 = std::chrono::steady_clock::now();
  scenarios::Campaign cp = scenarios::campaign(c, {"H", "-", "R", "+"}, windows, 9);
  const double secs = seconds_since(t0);
  const double sig = (cp.F_avg - 2.0 / 3.0) / cp.sigma;
  // compatibility with the reported 0.89 +- 0.04 at two combined standard deviations
  const double comb = std::hypot(cp.sigma, 0.04);
  const bool compatible = std::abs(cp.F_avg - 0.89) <= 2 * comb;
  o.pass = sig >= 5 && compatible;
  o.detail = fmt("F_avg=%.4f+-%.4f, %.1f sigma above 2/3 (>=5), |F_avg-0.89|=%.3f (<=%.3f)", cp.F_avg, cp.sigma, sig,
                 std::abs(cp.F_avg - 0.89), 2 * comb);
  std::string per;
  for (const auto& s : cp.states)
    per += fmt(" %s:%.3f+-%.3f", s.label.c_str(), s.result.fidelity, s.result.sigmas.fidelity);
  o.notes.push_back(fmt("F_e=%.4f F_p=%.4f,%s; %.3g windows per basis, %.0f s", cp.F_equatorial, cp.F_polar,
                        per.c_str(), static_cast<double>(windows), secs));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qtele acceptance suite"};
  bool strict = false;
  std::vector<int> only;
  int64_t campaign_windows = 1000000000;
  app.add_flag("--strict", strict, "exit with status 1 if any criterion fails");
  app.add_option("--only", only, "criteria to run")->check(CLI::Range(1, 9));
  app.add_option("--campaign-windows", campaign_windows, "pump windows per basis for the campaign")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle reproduction", criterion1},
      {"simulator matches oracle", criterion2},
      {"histogram topology", criterion3},
      {"peak width", criterion4},
      {"g_si", criterion5},
      {"HOM visibility", criterion6},
      {"fibre invariance", criterion7},
      {"tomography round trip", criterion8},
      {"classical bound", [&] { return criterion9(campaign_windows); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0, errors = 0, evaluated = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.detail = std::string("error: ") + e.what();
      ++errors;
    }
    ++evaluated;
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << criteria[i].first << "): " << o.detail
              << "\n";
    for (const auto& note : o.notes) std::cout << "     note: " << note << "\n";
    std::cout.flush();
  }
  std::cout << (evaluated - failed) << " of " << evaluated << " criteria met\n";
  if (errors > 0) return 2;
  return strict && failed > 0 ? 1 : 0;
}
