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

#include "qtele/fock.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <array>
#include <stdexcept>

namespace qtele::fock {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

double factorial(int n) {
  static const double table[16] = {1,       1,        2,         6,          24,         120,
                                   720,     5040,     40320,     362880,     3628800,    39916800,
                                   479001600, 6227020800.0, 87178291200.0, 1307674368000.0};
  return table[n];
}

double occ_factorial(Occupation o) {
  double f = 1.0;
  while (o) {
    f *= factorial(static_cast<int>(o & 0xFu));
    o >>= 4;
  }
  return f;
}

Occupation occ_add_checked(Occupation a, Occupation b) {
  Occupation r = 0;
  for (int m = 0; m < kMaxModes; ++m) {
    int k = occ_get(a, m) + occ_get(b, m);
    if (k > kMaxPerMode) throw TruncationError("more than 15 photons in one mode");
    r |= Occupation(k) << (4 * m);
  }
  return r;
}

bool has_overlap_with_overflow(Occupation a, Occupation b) {
  // fast path: no field can overflow if the sum of nibble maxima stays small
  return ((a | b) & 0x8888888888888888ULL) != 0;
}

int max_mode_index(const std::vector<ModeLabel>& modes) { return static_cast<int>(modes.size()); }

}  // namespace

int occ_total(Occupation o) {
  int t = 0;
  while (o) {
    t += static_cast<int>(o & 0xFu);
    o >>= 4;
  }
  return t;
}

Poly Poly::one() {
  Poly p;
  p.terms.push_back({0, 1.0});
  return p;
}

Poly Poly::linear(const std::vector<std::pair<int, cplx>>& comb) {
  Poly p;
  for (const auto& [m, c] : comb) {
    if (m < 0 || m >= kMaxModes) throw std::out_of_range("mode index out of range");
    p.terms.push_back({Occupation{1} << (4 * m), c});
  }
  p.compress();
  return p;
}

Poly Poly::operator*(const Poly& o) const {
  Poly r;
  r.terms.reserve(terms.size() * o.terms.size());
  for (const auto& a : terms)
    for (const auto& b : o.terms) {
      Occupation s = has_overlap_with_overflow(a.occ, b.occ) ? occ_add_checked(a.occ, b.occ)
                                                              : a.occ + b.occ;
      r.terms.push_back({s, a.amp * b.amp});
    }
  r.compress();
  return r;
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  r.terms.insert(r.terms.end(), o.terms.begin(), o.terms.end());
  r.compress();
  return r;
}

Poly Poly::scaled(cplx c) const {
  Poly r = *this;
  for (auto& t : r.terms) t.amp *= c;
  return r;
}

Poly Poly::pow(int n) const {
  Poly r = one();
  for (int i = 0; i < n; ++i) r = r * *this;
  return r;
}

void Poly::compress(double tol) {
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.occ < b.occ; });
  std::vector<Term> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    if (!out.empty() && out.back().occ == t.occ)
      out.back().amp += t.amp;
    else
      out.push_back(t);
  }
  std::erase_if(out, [tol](const Term& t) { return std::abs(t.amp) <= tol; });
  terms = std::move(out);
}

Poly substitute(const Poly& p, const ModeMap& images) {
  std::map<std::pair<int, int>, Poly> cache;
  auto power = [&](int m, int k) -> const Poly& {
    auto key = std::make_pair(m, k);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    Poly base = (m < static_cast<int>(images.size()) && !images[m].empty())
                    ? Poly::linear(images[m])
                    : Poly::linear({{m, 1.0}});
    return cache.emplace(key, base.pow(k)).first->second;
  };
  Poly r;
  for (const auto& t : p.terms) {
    Poly acc = Poly::one();
    acc.terms[0].amp = t.amp;
    for (int m = 0; m < kMaxModes; ++m) {
      int k = occ_get(t.occ, m);
      if (k) acc = acc * power(m, k);
    }
    r.terms.insert(r.terms.end(), acc.terms.begin(), acc.terms.end());
  }
  r.compress(1e-300);
  return r;
}

FewPhotonState::FewPhotonState(std::vector<ModeLabel> modes, int n_max)
    : modes_(std::move(modes)), n_max_(n_max) {
  if (max_mode_index(modes_) > kMaxModes) throw std::invalid_argument("too many modes");
}

FewPhotonState FewPhotonState::from_poly(std::vector<ModeLabel> modes, const Poly& p, int n_max) {
  FewPhotonState s(std::move(modes), n_max);
  for (const auto& t : p.terms) {
    if (occ_total(t.occ) > n_max) continue;
    s.terms_.push_back({t.occ, t.amp * std::sqrt(occ_factorial(t.occ))});
  }
  return s;
}

Poly FewPhotonState::to_poly() const {
  Poly p;
  for (const auto& t : terms_) p.terms.push_back({t.occ, t.amp / std::sqrt(occ_factorial(t.occ))});
  return p;
}

int FewPhotonState::find_mode(const ModeLabel& m) const {
  for (size_t i = 0; i < modes_.size(); ++i)
    if (modes_[i] == m) return static_cast<int>(i);
  return -1;
}

double FewPhotonState::norm2() const {
  double n = 0;
  for (const auto& t : terms_) n += std::norm(t.amp);
  return n;
}

namespace {

// Mode layout shared by source_state and pair_wcs_branch.
std::vector<ModeLabel> source_modes() {
  return {{Spatial::idler, Pol::H, 0, 0},  {Spatial::idler, Pol::V, 0, 0},
          {Spatial::signal, Pol::H, 0, 0}, {Spatial::signal, Pol::V, 0, 0},
          {Spatial::wcs, Pol::H, 0, 0},    {Spatial::wcs, Pol::V, 0, 0},
          {Spatial::wcs, Pol::H, 1, 0},    {Spatial::wcs, Pol::V, 1, 0}};
}

Poly pair_operator(double phi) {
  cplx e = std::polar(1.0, phi);
  Poly hh = Poly::linear({{0, 1.0}}) * Poly::linear({{2, 1.0}});
  Poly vv = Poly::linear({{1, 1.0}}) * Poly::linear({{3, 1.0}});
  return (hh + vv.scaled(e)).scaled(kInvSqrt2);
}

Poly wcs_operator(const PureQubit& pol, double overlap) {
  double xi = std::clamp(overlap, 0.0, 1.0);
  double xo = std::sqrt(std::max(0.0, 1.0 - xi * xi));
  return Poly::linear({{4, pol.h * xi}, {5, pol.v * xi}, {6, pol.h * xo}, {7, pol.v * xo}});
}

bool is_bs_input(Spatial s) { return s == Spatial::idler || s == Spatial::wcs; }

bool needs_bs(const FewPhotonState& s) {
  return std::any_of(s.modes().begin(), s.modes().end(),
                     [](const ModeLabel& m) { return is_bs_input(m.spatial); });
}

const FewPhotonState& transformed(const FewPhotonState& s, FewPhotonState& storage) {
  if (!needs_bs(s)) return s;
  storage = beamsplitter_transform(s);
  return storage;
}

double click_factor(int n, double eta, bool clicked) {
  double none = std::pow(1.0 - eta, n);
  return clicked ? 1.0 - none : none;
}

// P(pattern | occupation) for D1 = out1/H and D2 = out2/V.
double pattern_weight(const FewPhotonState& s, Occupation occ, const ClickPattern& pat, double eta1,
                      double eta2) {
  double w = 1.0;
  bool d1_seen = false, d2_seen = false;
  std::map<int, int> n1, n2;
  for (size_t m = 0; m < s.modes().size(); ++m) {
    const auto& lab = s.modes()[m];
    int k = occ_get(occ, static_cast<int>(m));
    if (lab.spatial == Spatial::bs_out_1 && lab.pol == Pol::H) n1[lab.bin] += k;
    if (lab.spatial == Spatial::bs_out_2 && lab.pol == Pol::V) n2[lab.bin] += k;
    if (lab.spatial == Spatial::bs_out_1 && lab.pol == Pol::H) n1.try_emplace(lab.bin, 0);
  }
  if (pat.d1_bin) n1.try_emplace(*pat.d1_bin, 0);
  if (pat.d2_bin) n2.try_emplace(*pat.d2_bin, 0);
  for (const auto& [bin, k] : n1) {
    bool c = pat.d1_bin && *pat.d1_bin == bin;
    d1_seen |= c;
    w *= click_factor(k, eta1, c);
  }
  for (const auto& [bin, k] : n2) {
    bool c = pat.d2_bin && *pat.d2_bin == bin;
    d2_seen |= c;
    w *= click_factor(k, eta2, c);
  }
  return w;
}

Occupation signal_mask(const FewPhotonState& s) {
  Occupation mask = 0;
  for (size_t m = 0; m < s.modes().size(); ++m)
    if (s.modes()[m].spatial == Spatial::signal) mask |= Occupation{0xF} << (4 * m);
  return mask;
}

// Unnormalized one-photon signal density weighted by P(pattern | environment).
Mat2 weighted_signal_g1(const FewPhotonState& s, const ClickPattern& pat, double eta1, double eta2,
                        bool require_signal, double* prob_out) {
  Occupation smask = signal_mask(s);
  std::map<Occupation, std::vector<Term>> groups;
  for (const auto& t : s.terms()) groups[t.occ & ~smask].push_back(t);
  Mat2 rho;
  double prob = 0.0;
  for (const auto& [env, terms] : groups) {
    double w = pattern_weight(s, env, pat, eta1, eta2);
    if (w == 0.0) continue;
    std::map<Occupation, cplx> amp;
    for (const auto& t : terms) amp[t.occ] += t.amp;
    for (const auto& [occ, a] : amp) {
      bool has_sig = (occ & smask) != 0;
      if (!require_signal || has_sig) prob += w * std::norm(a);
    }
    for (size_t ma = 0; ma < s.modes().size(); ++ma) {
      const auto& la = s.modes()[ma];
      if (la.spatial != Spatial::signal) continue;
      for (size_t mb = 0; mb < s.modes().size(); ++mb) {
        const auto& lb = s.modes()[mb];
        if (lb.spatial != Spatial::signal || lb.bin != la.bin || lb.tag != la.tag) continue;
        int ia = static_cast<int>(la.pol), ib = static_cast<int>(lb.pol);
        // <s_b^dag s_a>: s_a lowers mode ma, s_b^dag raises mb
        for (const auto& [occ, a] : amp) {
          int na = occ_get(occ, static_cast<int>(ma));
          if (na == 0) continue;
          Occupation lowered = occ_set(occ, static_cast<int>(ma), na - 1);
          int nb = occ_get(lowered, static_cast<int>(mb));
          Occupation raised = occ_set(lowered, static_cast<int>(mb), nb + 1);
          auto it = amp.find(raised);
          if (it == amp.end()) continue;
          rho.m[ia][ib] += w * std::conj(it->second) * a * std::sqrt(double(na)) * std::sqrt(double(nb + 1));
        }
      }
    }
  }
  if (prob_out) *prob_out = prob;
  return rho;
}

}  // namespace

FewPhotonEnsemble source_state(const SourceParams& sp) {
  if (sp.p < 0 || sp.p > 1 || sp.mu < 0 || sp.mu > 1) throw DomainError("source_state: p, mu outside [0, 1]");
  if (sp.V_src < 0 || sp.V_src > 1) throw DomainError("source_state: V_src outside [0, 1]");
  int needed = 0;
  if (sp.p > 0) needed = 4;
  if (sp.mu > 0) needed = std::max(needed, 2);
  if (sp.n_max < needed)
    throw TruncationError("N_max = " + std::to_string(sp.n_max) + " cannot hold the " +
                          std::to_string(needed) + "-photon terms of the source");
  double p0 = 1.0 - sp.p - 0.75 * sp.p * sp.p;
  double q0 = 1.0 - sp.mu - 0.5 * sp.mu * sp.mu;
  if (p0 < 0 || q0 < 0) throw DomainError("source_state: p or mu too large for the truncated law");
  FewPhotonEnsemble e;
  auto build = [&](double phi) {
    Poly X = pair_operator(phi);
    Poly pairs = Poly::one().scaled(std::sqrt(p0)) + X.scaled(std::sqrt(sp.p)) +
                 (X * X).scaled(sp.p / 2.0);
    Poly Y = wcs_operator(sp.wcs_pol, sp.overlap);
    Poly wcs = Poly::one().scaled(std::sqrt(q0)) + Y.scaled(std::sqrt(sp.mu)) +
               (Y * Y).scaled(sp.mu / 2.0);
    return FewPhotonState::from_poly(source_modes(), pairs * wcs, sp.n_max);
  };
  double w_keep = 0.5 * (1.0 + sp.V_src);
  e.members.emplace_back(w_keep, build(sp.phi));
  if (w_keep < 1.0) e.members.emplace_back(1.0 - w_keep, build(sp.phi + M_PI));
  return e;
}

FewPhotonState pair_wcs_branch(const PureQubit& wcs_pol, double overlap, double phi) {
  return FewPhotonState::from_poly(source_modes(), pair_operator(phi) * wcs_operator(wcs_pol, overlap), 4);
}

FewPhotonState beamsplitter_transform(const FewPhotonState& s) {
  std::vector<ModeLabel> out;
  ModeMap images(s.modes().size());
  auto index_of = [&](const ModeLabel& lab) {
    for (size_t i = 0; i < out.size(); ++i)
      if (out[i] == lab) return static_cast<int>(i);
    out.push_back(lab);
    if (out.size() > kMaxModes) throw std::invalid_argument("too many modes after beam splitter");
    return static_cast<int>(out.size() - 1);
  };
  // keep non-BS modes first, then allocate output modes
  std::vector<int> keep(s.modes().size(), -1);
  for (size_t m = 0; m < s.modes().size(); ++m)
    if (!is_bs_input(s.modes()[m].spatial)) keep[m] = index_of(s.modes()[m]);
  for (size_t m = 0; m < s.modes().size(); ++m) {
    const auto& lab = s.modes()[m];
    if (!is_bs_input(lab.spatial)) {
      images[m] = {{keep[m], 1.0}};
      continue;
    }
    int c = index_of({Spatial::bs_out_1, lab.pol, lab.bin, lab.tag});
    int d = index_of({Spatial::bs_out_2, lab.pol, lab.bin, lab.tag});
    double sign = lab.spatial == Spatial::idler ? 1.0 : -1.0;
    images[m] = {{c, kInvSqrt2}, {d, sign * kInvSqrt2}};
  }
  Poly p = substitute(s.to_poly(), images);
  return FewPhotonState::from_poly(out, p, s.n_max());
}

double click_probability(const FewPhotonState& s0, const ClickPattern& pat, double eta1, double eta2) {
  FewPhotonState storage;
  const FewPhotonState& s = transformed(s0, storage);
  double prob = 0;
  for (const auto& t : s.terms()) prob += std::norm(t.amp) * pattern_weight(s, t.occ, pat, eta1, eta2);
  return prob;
}

double click_probability(const FewPhotonEnsemble& e, const ClickPattern& pat, double eta1, double eta2) {
  double prob = 0;
  for (const auto& [w, s] : e.members) prob += w * click_probability(s, pat, eta1, eta2);
  return prob;
}

double herald_with_signal_probability(const FewPhotonEnsemble& e, const ClickPattern& pat) {
  double total = 0;
  for (const auto& [w, s0] : e.members) {
    FewPhotonState storage;
    const FewPhotonState& s = transformed(s0, storage);
    double prob = 0;
    weighted_signal_g1(s, pat, 1.0, 1.0, true, &prob);
    total += w * prob;
  }
  return total;
}

namespace {

ConditionalSignal finish_conditional(const Mat2& g1, double prob) {
  double tr = g1.trace().real();
  if (!(prob > 0) || !(tr > 1e-300)) throw NullConditionError("conditional signal state: zero-probability pattern");
  Mat2 rho = g1 * (1.0 / tr);
  rho.m[0][0] = rho.m[0][0].real();
  rho.m[1][1] = rho.m[1][1].real();
  rho.m[1][0] = std::conj(rho.m[0][1]);
  return {prob, DensityMatrix(rho)};
}

}  // namespace

ConditionalSignal conditional_signal_state(const FewPhotonState& s0, const ClickPattern& pat) {
  FewPhotonState storage;
  const FewPhotonState& s = transformed(s0, storage);
  Mat2 g1 = weighted_signal_g1(s, pat, 1.0, 1.0, false, nullptr);
  return finish_conditional(g1, click_probability(s, pat));
}

ConditionalSignal conditional_signal_state(const FewPhotonEnsemble& e, const ClickPattern& pat) {
  Mat2 g1;
  for (const auto& [w, s0] : e.members) {
    FewPhotonState storage;
    const FewPhotonState& s = transformed(s0, storage);
    g1 = g1 + weighted_signal_g1(s, pat, 1.0, 1.0, false, nullptr) * w;
  }
  return finish_conditional(g1, click_probability(e, pat));
}

Unitary2 correction_unitary(double phi) {
  // signal amplitudes in the (out1 H, out2 V) herald branch for inputs H and V
  auto teleported = [&](const PureQubit& in) {
    FewPhotonState s = beamsplitter_transform(pair_wcs_branch(in, 1.0, phi));
    int c = s.find_mode({Spatial::bs_out_1, Pol::H, 0, 0});
    int d = s.find_mode({Spatial::bs_out_2, Pol::V, 0, 0});
    int sh = s.find_mode({Spatial::signal, Pol::H, 0, 0});
    int sv = s.find_mode({Spatial::signal, Pol::V, 0, 0});
    std::array<cplx, 2> v{};
    for (const auto& t : s.terms()) {
      if (occ_get(t.occ, c) != 1 || occ_get(t.occ, d) != 1 || occ_total(t.occ) != 3) continue;
      if (occ_get(t.occ, sh) == 1) v[0] += t.amp;
      if (occ_get(t.occ, sv) == 1) v[1] += t.amp;
    }
    return v;
  };
  auto ch = teleported(PureQubit::H());
  auto cv = teleported(PureQubit::V());
  double n = std::sqrt(std::norm(ch[0]) + std::norm(ch[1]));
  Mat2 M;
  M.m[0][0] = ch[0] / n;
  M.m[1][0] = ch[1] / n;
  M.m[0][1] = cv[0] / n;
  M.m[1][1] = cv[1] / n;
  return M.adjoint();
}

double overlap_amplitude(double delta_t_ns, double tau_i_ns, double xi_max) {
  if (!(tau_i_ns > 0)) throw DomainError("tau_i must be positive");
  return xi_max * std::exp(-std::abs(delta_t_ns) / (2.0 * tau_i_ns));
}

double bs_coincidence(int k, int j, int r, double eta_det) {
  // modes: 0 port a (common mode), 1 port b (common mode), 2 port b (orthogonal mode)
  Poly st = Poly::linear({{0, 1.0}}).pow(k) * Poly::linear({{1, 1.0}}).pow(j) *
            Poly::linear({{2, 1.0}}).pow(r);
  ModeMap images(3);
  // outputs: 0 c (common), 1 d (common), 2 c (orthogonal), 3 d (orthogonal)
  images[0] = {{0, kInvSqrt2}, {1, kInvSqrt2}};
  images[1] = {{0, kInvSqrt2}, {1, -kInvSqrt2}};
  images[2] = {{2, kInvSqrt2}, {3, -kInvSqrt2}};
  Poly out = substitute(st, images);
  double norm = 0, coinc = 0;
  for (const auto& t : out.terms) {
    double w = std::norm(t.amp) * occ_factorial(t.occ);
    norm += w;
    int nc = occ_get(t.occ, 0) + occ_get(t.occ, 2);
    int nd = occ_get(t.occ, 1) + occ_get(t.occ, 3);
    coinc += w * click_factor(nc, eta_det, true) * click_factor(nd, eta_det, true);
  }
  return norm > 0 ? coinc / norm : 0.0;
}

namespace {

double binom_pmf(int n, int k, double q) {
  double c = factorial(n) / (factorial(k) * factorial(n - k));
  return c * std::pow(q, k) * std::pow(1.0 - q, n - k);
}

}  // namespace

double hom_coincidence(double overlap, const HomParams& hp) {
  const double P[3] = {0.0, hp.p, hp.p * hp.p};
  const double Q[3] = {1.0 - hp.mu - 0.5 * hp.mu * hp.mu, hp.mu, 0.5 * hp.mu * hp.mu};
  double w2 = overlap * overlap;
  double num = 0, den = 0;
  for (int n = 1; n <= 2; ++n) {
    double wn = P[n] * (1.0 - std::pow(1.0 - hp.eta_herald, n));
    den += wn;
    for (int k = 0; k <= n; ++k) {
      double pk = binom_pmf(n, k, hp.eta_i);
      for (int m = 0; m <= 2; ++m)
        for (int j = 0; j <= m; ++j)
          num += wn * pk * Q[m] * binom_pmf(m, j, w2) * bs_coincidence(k, j, m - j, hp.eta_det);
    }
  }
  return den > 0 ? num / den : 0.0;
}

HomScan hom_scan(const std::vector<double>& delta_t, const HomParams& hp) {
  HomScan r;
  for (double dt : delta_t) r.coincidence.push_back(hom_coincidence(overlap_amplitude(dt, hp.tau_i, hp.xi_max), hp));
  r.p_far = hom_coincidence(0.0, hp);
  r.p_zero = hom_coincidence(hp.xi_max, hp);
  r.visibility = r.p_far > 0 ? (r.p_far - r.p_zero) / r.p_far : 0.0;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// local bundle modes
constexpr int kA_H = 0, kA_V = 1, kSst_H = 2, kSst_V = 3, kStr_H = 4, kStr_V = 5;
constexpr int kL_H = 6, kL_V = 7, kSlo_H = 8, kSlo_V = 9;

template <class T>
size_t sample_index(const std::vector<T>& weights, double total, Rng& rng) {
  double u = rng.uniform() * total, c = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    c += weights[i];
    if (u < c) return i;
  }
  for (size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0) return i;
  return 0;
}

Poly local_bundle_state(const PairBundle& b, Rng& rng) {
  cplx e = std::polar(std::sqrt(1.0 - b.hh_weight), b.phase);
  Poly X = (Poly::linear({{0, 1.0}}) * Poly::linear({{2, 1.0}})).scaled(std::sqrt(b.hh_weight)) +
           (Poly::linear({{1, 1.0}}) * Poly::linear({{3, 1.0}})).scaled(e);
  Poly P = X.pow(b.n_pairs);
  ModeMap images(4);
  images[0] = {{kA_H, 1.0}, {kL_H, 1.0}};
  images[1] = {{kA_V, 1.0}, {kL_V, 1.0}};
  images[2] = {{kSst_H, 1.0}, {kStr_H, 1.0}, {kSlo_H, 1.0}};
  images[3] = {{kSst_V, 1.0}, {kStr_V, 1.0}, {kSlo_V, 1.0}};
  Poly s = substitute(P, images);
  std::erase_if(s.terms, [&](const Term& t) {
    auto g = [&](int m) { return occ_get(t.occ, m); };
    return g(kA_H) + g(kA_V) != b.idlers_to_bs || g(kL_H) + g(kL_V) != b.idlers_lost ||
           g(kSst_H) + g(kSst_V) != b.signals_stored || g(kStr_H) + g(kStr_V) != b.signals_transmitted ||
           g(kSlo_H) + g(kSlo_V) != b.signals_lost;
  });
  // measure and discard the lost photons in the H/V basis
  const Occupation lost_mask = (Occupation{0xFF} << (4 * kL_H)) | (Occupation{0xFF} << (4 * kSlo_H));
  if (b.idlers_lost + b.signals_lost > 0) {
    std::vector<Occupation> keys;
    std::vector<double> weights;
    for (const auto& t : s.terms) {
      Occupation k = t.occ & lost_mask;
      double w = std::norm(t.amp) * occ_factorial(t.occ);
      auto it = std::find(keys.begin(), keys.end(), k);
      if (it == keys.end()) {
        keys.push_back(k);
        weights.push_back(w);
      } else {
        weights[it - keys.begin()] += w;
      }
    }
    double tot = 0;
    for (double w : weights) tot += w;
    Occupation pick = keys[sample_index(weights, tot, rng)];
    std::erase_if(s.terms, [&](const Term& t) { return (t.occ & lost_mask) != pick; });
    for (auto& t : s.terms) t.occ &= ~lost_mask;
  }
  return s;
}

struct SignalSlot {
  int bundle;
  Branch branch;
  int mode_h;
  int mode_v;
};

double analyzer_target_prob(const Unitary2& u, Pol p) {
  return std::norm(u.m[0][static_cast<int>(p)]);
}

void fill_signal(GroupOutcome& out, int bundle, Branch br, int n, Pol p, const Unitary2& an, Rng& rng) {
  double pt = analyzer_target_prob(an, p);
  int nt = rng.binomial(n, pt);
  out.signals.push_back({bundle, br, nt, n - nt});
}

bool try_fast_path(const std::vector<PairBundle>& pairs, const std::vector<WcsBundle>& wcs,
                   const BsmSettings& bsm, const Unitary2& an, Rng& rng, GroupOutcome& out) {
  if (!bsm.polarizers || bsm.idler_plate) return false;
  if (pairs.empty() && wcs.size() == 1 && wcs[0].photons == 1) {
    double p1 = 0.5 * bsm.eta_d1 * std::norm(wcs[0].pol.h);
    double p2 = 0.5 * bsm.eta_d2 * std::norm(wcs[0].pol.v);
    double u = rng.uniform();
    out.d1 = u < p1;
    out.d2 = !out.d1 && u < p1 + p2;
    return true;
  }
  if (wcs.empty() && pairs.size() == 1 && pairs[0].n_pairs == 1) {
    const auto& b = pairs[0];
    const double w = b.hh_weight;
    Pol sig = Pol::H;
    if (b.idlers_to_bs == 1) {
      double p1 = 0.5 * w * bsm.eta_d1, p2 = 0.5 * (1.0 - w) * bsm.eta_d2;
      double u = rng.uniform();
      if (u < p1) {
        out.d1 = true;
        sig = Pol::H;
      } else if (u < p1 + p2) {
        out.d2 = true;
        sig = Pol::V;
      } else {
        double wh = w * (2.0 - bsm.eta_d1), wv = (1.0 - w) * (2.0 - bsm.eta_d2);
        sig = rng.uniform() * (wh + wv) < wh ? Pol::H : Pol::V;
      }
    } else {
      sig = rng.bernoulli(w) ? Pol::H : Pol::V;
    }
    if (b.signals_stored) fill_signal(out, 0, Branch::stored, 1, sig, an, rng);
    if (b.signals_transmitted) fill_signal(out, 0, Branch::transmitted, 1, sig, an, rng);
    return true;
  }
  return false;
}

}  // namespace

GroupOutcome sample_group(const std::vector<PairBundle>& pairs, const std::vector<WcsBundle>& wcs,
                          const BsmSettings& bsm, const Unitary2& analyzer, Rng& rng) {
  GroupOutcome out;
  if (try_fast_path(pairs, wcs, bsm, analyzer, rng, out)) return out;

  // group modes: 0 A_H, 1 A_V, 2 W_H, 3 W_V, then signal pairs
  std::vector<SignalSlot> slots;
  int next_mode = 4;
  Poly state = Poly::one();
  for (size_t bi = 0; bi < pairs.size(); ++bi) {
    const auto& b = pairs[bi];
    if (b.n_pairs <= 0) continue;
    Poly local = local_bundle_state(b, rng);
    ModeMap images(6);
    images[kA_H] = {{0, 1.0}};
    images[kA_V] = {{1, 1.0}};
    auto alloc = [&](Branch br, int mh, int mv) {
      if (next_mode + 2 > kMaxModes) throw TruncationError("too many signal modes in one group");
      slots.push_back({static_cast<int>(bi), br, next_mode, next_mode + 1});
      images[mh] = {{next_mode, 1.0}};
      images[mv] = {{next_mode + 1, 1.0}};
      next_mode += 2;
    };
    if (b.signals_stored) alloc(Branch::stored, kSst_H, kSst_V);
    if (b.signals_transmitted) alloc(Branch::transmitted, kStr_H, kStr_V);
    state = state * substitute(local, images);
  }
  for (const auto& w : wcs) {
    if (w.photons <= 0) continue;
    state = state * Poly::linear({{2, w.pol.h}, {3, w.pol.v}}).pow(w.photons);
  }
  if (bsm.idler_plate) {
    const auto& u = bsm.idler_plate_u;
    ModeMap images(2);
    images[0] = {{0, u.m[0][0]}, {1, u.m[1][0]}};
    images[1] = {{0, u.m[0][1]}, {1, u.m[1][1]}};
    state = substitute(state, images);
  }
  {
    ModeMap images(4);
    images[0] = {{0, kInvSqrt2}, {2, kInvSqrt2}};
    images[1] = {{1, kInvSqrt2}, {3, kInvSqrt2}};
    images[2] = {{0, kInvSqrt2}, {2, -kInvSqrt2}};
    images[3] = {{1, kInvSqrt2}, {3, -kInvSqrt2}};
    state = substitute(state, images);
  }
  // after the BS: 0 C_H, 1 C_V, 2 D_H, 3 D_V
  const Occupation env_mask = 0xFFFF;
  std::vector<Occupation> envs;
  std::vector<double> env_w;
  for (const auto& t : state.terms) {
    Occupation e = t.occ & env_mask;
    double w = std::norm(t.amp) * occ_factorial(t.occ);
    auto it = std::find(envs.begin(), envs.end(), e);
    if (it == envs.end()) {
      envs.push_back(e);
      env_w.push_back(w);
    } else {
      env_w[it - envs.begin()] += w;
    }
  }
  if (envs.empty()) return out;
  // joint weights over (env, d1, d2)
  std::vector<double> joint;
  joint.reserve(envs.size() * 4);
  double total = 0;
  for (size_t i = 0; i < envs.size(); ++i) {
    int n1 = occ_get(envs[i], 0) + (bsm.polarizers ? 0 : occ_get(envs[i], 1));
    int n2 = occ_get(envs[i], 3) + (bsm.polarizers ? 0 : occ_get(envs[i], 2));
    for (int c = 0; c < 4; ++c) {
      double w = env_w[i] * click_factor(n1, bsm.eta_d1, c & 1) * click_factor(n2, bsm.eta_d2, c & 2);
      joint.push_back(w);
      total += w;
    }
  }
  size_t pick = sample_index(joint, total, rng);
  Occupation env = envs[pick / 4];
  out.d1 = (pick % 4) & 1;
  out.d2 = (pick % 4) & 2;
  if (slots.empty()) return out;

  Poly sig;
  for (const auto& t : state.terms)
    if ((t.occ & env_mask) == env) sig.terms.push_back({t.occ & ~env_mask, t.amp});
  ModeMap images(next_mode);
  const auto& u = analyzer;
  for (const auto& sl : slots) {
    images[sl.mode_h] = {{sl.mode_h, u.m[0][0]}, {sl.mode_v, u.m[1][0]}};
    images[sl.mode_v] = {{sl.mode_h, u.m[0][1]}, {sl.mode_v, u.m[1][1]}};
  }
  sig = substitute(sig, images);
  std::vector<double> w;
  double tot = 0;
  for (const auto& t : sig.terms) {
    w.push_back(std::norm(t.amp) * occ_factorial(t.occ));
    tot += w.back();
  }
  if (!(tot > 0)) return out;
  Occupation occ = sig.terms[sample_index(w, tot, rng)].occ;
  for (const auto& sl : slots)
    out.signals.push_back({sl.bundle, sl.branch, occ_get(occ, sl.mode_h), occ_get(occ, sl.mode_v)});
  return out;
}

}  // namespace qtele::fock
