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

#include "qtele/tomography.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "qtele/rng.hpp"

namespace qtele::tomography {

const char* basis_name(Basis b) {
  switch (b) {
    case Basis::X:
      return "X";
    case Basis::Y:
      return "Y";
    case Basis::Z:
      return "Z";
  }
  return "?";
}

PureQubit basis_state(Basis b) {
  switch (b) {
    case Basis::X:
      return PureQubit::plus();
    case Basis::Y:
      return PureQubit::R();
    case Basis::Z:
      return PureQubit::H();
  }
  return PureQubit::H();
}

NormalizedCounts normalize(const RawCounts& raw, double ratio) {
  if (!(ratio > 0) || !std::isfinite(ratio)) throw NormalizationError("efficiency ratio must be positive");
  NormalizedCounts n;
  n.ratio_ = ratio;
  for (size_t i = 0; i < 3; ++i) n.bases_[i] = {raw.bases[i].n_plus, raw.bases[i].n_minus / ratio};
  return n;
}

BasisCounts centre_threefolds(const EventLog& log, const analysis::Offsets& off, const analysis::HistParams& hp,
                              int half_width_bins) {
  auto h3 = analysis::build_threefold_histogram(log, 3, off, hp);
  auto h4 = analysis::build_threefold_histogram(log, 4, off, hp);
  return {static_cast<double>(analysis::centre_counts(h3, half_width_bins)),
          static_cast<double>(analysis::centre_counts(h4, half_width_bins))};
}

NormalizationResult normalization_factor(const std::vector<BasisLog>& logs, const PureQubit& input,
                                         const analysis::Offsets& off, double range_ns, double bin_ns,
                                         double tau_ns) {
  const double ph = std::norm(input.h), pv = std::norm(input.v);
  if (ph <= 0.02 || ph >= 0.98)
    throw NormalizationError("input too close to H or V for the off-diagonal method; use the visibility-curve maxima");
  if (logs.empty()) throw InsufficientData("no basis logs for the efficiency normalization");
  NormalizationResult res;
  res.per_basis.fill(std::numeric_limits<double>::quiet_NaN());
  res.per_sigma.fill(std::numeric_limits<double>::quiet_NaN());
  double wsum = 0, wx = 0;
  for (const auto& bl : logs) {
    const size_t i = static_cast<size_t>(bl.basis);
    uint64_t n[2] = {0, 0};
    for (int det = 3; det <= 4; ++det)
      analysis::for_each_threefold(*bl.log, det, off, range_ns, bin_ns,
                                   [&](size_t, size_t, size_t, double d1, double d2) {
                                     if (std::abs(d1) > range_ns || std::abs(d2) > range_ns) return;
                                     if (std::abs(d1 - d2) <= 3.0 * tau_ns) return;
                                     ++n[det - 3];
                                   });
    res.n3[i] += n[0];
    res.n4[i] += n[1];
  }
  for (size_t i = 0; i < 3; ++i) {
    if (res.n3[i] == 0 || res.n4[i] == 0) continue;
    double r = static_cast<double>(res.n4[i]) / static_cast<double>(res.n3[i]);
    // Z basis: D3 (H) sees the arm weighted by |<V|psi>|^2, D4 the other one
    if (static_cast<Basis>(i) == Basis::Z) r *= pv / ph;
    double s = r * std::sqrt(1.0 / static_cast<double>(res.n3[i]) + 1.0 / static_cast<double>(res.n4[i]));
    res.per_basis[i] = r;
    res.per_sigma[i] = s;
    wsum += 1.0 / (s * s);
    wx += r / (s * s);
  }
  if (wsum == 0) throw InsufficientData("no off-diagonal threefolds on D3 and D4");
  res.ratio = wx / wsum;
  res.sigma = 1.0 / std::sqrt(wsum);
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = i + 1; j < 3; ++j) {
      if (std::isnan(res.per_basis[i]) || std::isnan(res.per_basis[j])) continue;
      double d = std::abs(res.per_basis[i] - res.per_basis[j]);
      if (d > 4.0 * std::hypot(res.per_sigma[i], res.per_sigma[j]))
        throw NormalizationError(std::string("efficiency ratio differs between bases ") +
                                 basis_name(static_cast<Basis>(i)) + " and " + basis_name(static_cast<Basis>(j)) +
                                 " by more than 4 sigma (unbalanced source)");
    }
  return res;
}

namespace {

struct Derived {
  BlochVector r;
  bool clipped;
};

Derived bloch_of(const std::array<BasisCounts, 3>& c) {
  double v[3];
  for (size_t i = 0; i < 3; ++i) {
    double tot = c[i].n_plus + c[i].n_minus;
    if (!(tot > 0)) throw InsufficientData(std::string("no counts in basis ") + basis_name(static_cast<Basis>(i)));
    v[i] = (c[i].n_plus - c[i].n_minus) / tot;
  }
  BlochVector r{v[0], v[1], v[2]};
  double n = r.norm();
  bool clipped = n > 1.0;
  if (clipped) r = {r.x / n, r.y / n, r.z / n};
  return {r, clipped};
}

}  // namespace

TomographyResult reconstruct(const NormalizedCounts& counts, const PureQubit& input) {
  Derived d = bloch_of(counts.bases());
  TomographyResult res;
  res.bloch = d.r;
  res.clipped = d.clipped;
  res.rho = density_from_bloch(d.r);
  res.fidelity = fidelity(res.rho, input);
  res.purity = purity(res.rho);
  res.f_max = f_max_from_purity(res.purity);
  res.counts = counts.bases();
  return res;
}

Sigmas uncertainty(const RawCounts& raw, double ratio, const PureQubit& input, int n_resamples, uint64_t seed) {
  if (n_resamples < 100) throw TomographyError("uncertainty needs at least 100 resamples");
  std::vector<std::array<double, 6>> samples;
  samples.reserve(static_cast<size_t>(n_resamples));
  for (int k = 0; k < n_resamples; ++k) {
    Rng rng(seed, static_cast<uint64_t>(k), 31);
    RawCounts rc;
    for (size_t i = 0; i < 3; ++i) {
      auto draw = [&](double mean) {
        return static_cast<double>(rng.poisson(mean));
      };
      rc.bases[i].n_plus = draw(raw.bases[i].n_plus);
      rc.bases[i].n_minus = draw(raw.bases[i].n_minus);
    }
    try {
      TomographyResult t = reconstruct(normalize(rc, ratio), input);
      samples.push_back({t.bloch.x, t.bloch.y, t.bloch.z, t.fidelity, t.purity, t.f_max});
    } catch (const InsufficientData&) {
      // an emptied basis carries no information for this resample
    }
  }
  if (samples.size() * 10 < static_cast<size_t>(n_resamples) * 9)
    throw InsufficientData("too few counts for resampled uncertainties");
  std::array<double, 6> mean{}, var{};
  for (const auto& s : samples)
    for (size_t j = 0; j < 6; ++j) mean[j] += s[j];
  for (double& m : mean) m /= static_cast<double>(samples.size());
  for (const auto& s : samples)
    for (size_t j = 0; j < 6; ++j) var[j] += (s[j] - mean[j]) * (s[j] - mean[j]);
  Sigmas out;
  const double dof = static_cast<double>(samples.size() - 1);
  for (size_t j = 0; j < 3; ++j) out.bloch[j] = std::sqrt(var[j] / dof);
  out.fidelity = std::sqrt(var[3] / dof);
  out.purity = std::sqrt(var[4] / dof);
  out.f_max = std::sqrt(var[5] / dof);
  return out;
}

std::string to_json(const TomographyResult& r, const PureQubit& input, double ratio) {
  nlohmann::ordered_json j;
  j["input"] = {{"h_re", input.h.real()}, {"h_im", input.h.imag()}, {"v_re", input.v.real()}, {"v_im", input.v.imag()}};
  j["bloch"] = {r.bloch.x, r.bloch.y, r.bloch.z};
  const auto& m = r.rho.matrix().m;
  j["rho_re"] = {{m[0][0].real(), m[0][1].real()}, {m[1][0].real(), m[1][1].real()}};
  j["rho_im"] = {{m[0][0].imag(), m[0][1].imag()}, {m[1][0].imag(), m[1][1].imag()}};
  j["fidelity"] = r.fidelity;
  j["purity"] = r.purity;
  j["f_max"] = r.f_max;
  j["sigmas"] = {{"bloch", r.sigmas.bloch},
                 {"fidelity", r.sigmas.fidelity},
                 {"purity", r.sigmas.purity},
                 {"f_max", r.sigmas.f_max}};
  nlohmann::ordered_json counts;
  for (size_t i = 0; i < 3; ++i)
    counts[basis_name(static_cast<Basis>(i))] = {{"n_plus", r.counts[i].n_plus}, {"n_minus", r.counts[i].n_minus}};
  j["counts"] = counts;
  j["efficiency_ratio"] = ratio;
  j["clipped"] = r.clipped;
  return j.dump(2);
}

}  // namespace qtele::tomography
