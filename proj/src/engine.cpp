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

#include "qtele/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "qtele/analysis.hpp"
#include "qtele/experiment.hpp"
#include "qtele/rng.hpp"

namespace qtele::engine {

namespace {

// RNG stream tags
constexpr uint64_t kScan = 1, kSlot = 2, kSurvivor = 3, kBundle = 4, kGroup = 5, kBsmDark = 6, kAnalyzerDark = 7;

using Interval = std::pair<int64_t, int64_t>;

void merge_intervals(std::vector<Interval>& v) {
  std::sort(v.begin(), v.end());
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.first <= out.back().second)
      out.back().second = std::max(out.back().second, iv.second);
    else
      out.push_back(iv);
  }
  v = std::move(out);
}

bool inside(const std::vector<Interval>& v, int64_t t) {
  auto it = std::upper_bound(v.begin(), v.end(), Interval{t, INT64_MAX});
  if (it == v.begin()) return false;
  --it;
  return t >= it->first && t <= it->second;
}

struct Content {
  int n = 0;         // pairs
  int idl_bs = 0;    // idlers reaching the beam splitter
  int stored = 0;    // signals reaching the analyzer after storage
  int trans = 0;     // signals reaching the analyzer without storage
  int wcs = 0;       // WCS photons reaching the beam splitter
  bool empty() const { return n == 0 && wcs == 0; }
};

struct Bundle {
  int64_t slot;
  fock::PairBundle pb;
  fock::WcsBundle wb;
};

// Photons sharing one temporal mode (one slot) at the beam splitter.
struct Group {
  uint64_t key;
  int64_t slot;
  std::vector<fock::PairBundle> pairs;
  std::vector<fock::WcsBundle> wcs;
};

class Simulator {
 public:
  Simulator(const ExperimentConfig& cfg, uint64_t seed, const RunOptions& opt)
      : cfg_(cfg), seed_(seed), w_(experiment::slot_ps(cfg)) {
    storage_ps_ = std::llround(cfg.mem_storage_ns * 1000.0);
    period_ps_ = std::llround(cfg.pump_period_ns * 1000.0);
    eta_idler_ = cfg.eta_i * cfg.eta_fibre_idler();
    lam_factor_ = cfg.wcs_enabled ? cfg.mu * cfg.eta_fibre_wcs() : 0.0;
    eta3_ = cfg.detectors[2].efficiency;
    eta4_ = cfg.detectors[3].efficiency;
    eta_max_ = std::max(eta3_, eta4_);
    double branch = cfg.mem_efficiency + cfg.mem_transmission;
    s_ = branch * cfg.eta_s * eta_max_;
    frac_stored_ = branch > 0 ? cfg.mem_efficiency / branch : 0.0;
    bsm_.eta_d1 = cfg.detectors[0].efficiency;
    bsm_.eta_d2 = cfg.detectors[1].efficiency;
    bsm_.polarizers = cfg.polarizers;
    bsm_.idler_plate = opt.idler_plate;
    bsm_.idler_plate_u = opt.idler_plate_u;
    analyzer_ = opt.analyzer ? *opt.analyzer : analyzer_unitary(cfg);
    wcs_pol_ = cfg.input_state();
    double sig_an = std::max(cfg.detectors[2].jitter_sigma_ns, cfg.detectors[3].jitter_sigma_ns);
    double sig_bsm = std::max(cfg.detectors[0].jitter_sigma_ns, cfg.detectors[1].jitter_sigma_ns);
    margin_ps_ = std::llround(6.0 * std::hypot(sig_an, sig_bsm) * 1000.0) + w_;
    init_laws();
  }

  RunResult run(int64_t first_window, int64_t n_windows) {
    auto t_start = std::chrono::steady_clock::now();
    k0_ = experiment::first_slot_of_window(cfg_, first_window);
    k1_ = experiment::first_slot_of_window(cfg_, first_window + n_windows);
    stats_.slots = k1_ - k0_;
    if (cfg_.acquisition == Acquisition::full) {
      full_ = true;
      process_segment(k0_, k1_);
      for (int det = 1; det <= 4; ++det) add_darks(det, k0_ * w_, k1_ * w_, Rng(seed_, det, kAnalyzerDark));
    } else {
      scan_survivors();
      build_regions();
      for (int det = 3; det <= 4; ++det) add_darks(det, k0_ * w_, k1_ * w_, Rng(seed_, det, kAnalyzerDark));
      for (size_t i = 0; i < core_.size(); ++i)
        for (int det = 1; det <= 2; ++det)
          add_darks(det, core_[i].first, core_[i].second + 1, Rng(seed_, i * 4 + det, kBsmDark));
      for (const auto& [lo, hi] : segments_) process_segment(lo, hi);
    }
    sort_records(records_, tags_);
    if (cfg_.drop_unheralded) drop_unheralded();
    LogHeader h;
    h.config_hash = hash_hex(config_hash(cfg_));
    h.seed = seed_;
    h.first_window = first_window;
    h.n_windows = n_windows;
    h.slot_ps = w_;
    h.acquisition = full_ ? "full" : "analyzer_triggered";
    RunResult r{EventLog(h, std::move(records_)), TruthTable{std::move(tags_)}, stats_};
    r.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return r;
  }

 private:
  const ExperimentConfig& cfg_;
  uint64_t seed_;
  int64_t w_, storage_ps_, period_ps_, margin_ps_;
  double eta_idler_, lam_factor_, eta3_, eta4_, eta_max_, s_, frac_stored_;
  fock::BsmSettings bsm_;
  Unitary2 analyzer_;
  PureQubit wcs_pol_;
  int64_t k0_ = 0, k1_ = 0;
  bool full_ = false;
  RunStats stats_;

  std::vector<std::pair<int64_t, Content>> survivors_;
  std::vector<Interval> core_;      // ps, closed intervals where BSM records are kept
  std::vector<Interval> segments_;  // slot index ranges [lo, hi)
  std::vector<DetectionRecord> records_;
  std::vector<Truth> tags_;

  // Slot law per pump phase. The envelope is periodic, so slots at the same
  // phase share pair law, WCS mean and the conditional weights.
  struct SlotLaw {
    bool ready = false;
    double g = 0, lam = 0, e = 1;  // envelope, WCS mean, exp(-lam)
    experiment::PairLaw law{};
    double q = 0;       // P(at least one signal reaches the analyzer)
    double a_cond = 0;  // P(pairs >= 1 | no signal reaches the analyzer)
    std::array<double, 5> w_surv{}, w_cond{};
  };
  std::vector<SlotLaw> laws_;  // indexed by k mod laws_.size(), which fixes the phase
  SlotLaw scratch_;

  SlotLaw make_law(double g) const {
    SlotLaw L;
    L.ready = true;
    L.g = g;
    L.lam = lam_factor_ * g;
    L.e = std::exp(-L.lam);
    L.law = experiment::pair_number_law(cfg_, g);
    double a = 0;
    for (int n = 1; n <= cfg_.max_pairs; ++n) {
      double none = std::pow(1.0 - s_, n);
      L.w_surv[n] = L.law[n] * (1.0 - none);
      L.w_cond[n] = L.law[n] * none;
      L.q += L.w_surv[n];
      a += L.w_cond[n];
    }
    L.a_cond = L.q < 1 ? a / (1.0 - L.q) : 0.0;
    return L;
  }

  void init_laws() {
    if (cfg_.pump_shape == PumpShape::cw) {
      laws_.assign(1, make_law(1.0));
      return;
    }
    const int64_t n = period_ps_ / std::gcd(w_, period_ps_);
    if (n <= (int64_t{1} << 21)) laws_.assign(static_cast<size_t>(n), SlotLaw{});
  }

  double phase_ns(int64_t k) const {
    int64_t t = (k * w_) % period_ps_;
    return static_cast<double>(t < 0 ? t + period_ps_ : t) / 1000.0;
  }

  const SlotLaw& law_at(int64_t k) {
    if (cfg_.pump_shape == PumpShape::cw) return laws_[0];
    if (laws_.empty()) return scratch_ = make_law(experiment::pump_envelope(cfg_, phase_ns(k)));
    const int64_t n = static_cast<int64_t>(laws_.size());
    int64_t i = k % n;
    SlotLaw& L = laws_[static_cast<size_t>(i < 0 ? i + n : i)];
    if (!L.ready) L = make_law(experiment::pump_envelope(cfg_, phase_ns(k)));
    return L;
  }

  static int pick(const double* w, int n, double total, Rng& rng) {
    double u = rng.uniform() * total;
    for (int i = 0; i < n; ++i) {
      u -= w[i];
      if (u < 0) return i;
    }
    for (int i = n - 1; i >= 0; --i)
      if (w[i] > 0) return i;
    return 0;
  }

  static int sample_wcs(double lam, double e, Rng& rng, bool at_least_one) {
    if (lam <= 0) return 0;
    double w[3] = {at_least_one ? 0.0 : e, lam * e, 1.0 - e - lam * e};
    if (w[2] < 0) w[2] = 0;
    return pick(w, 3, w[0] + w[1] + w[2], rng);
  }

  void split_survivors(Content& c, int k, Rng& rng) const {
    int st = rng.binomial(k, frac_stored_);
    c.stored = st;
    c.trans = k - st;
  }

  // Slot content with no signal reaching the analyzer (or unconditional in full mode).
  Content sample_slot(int64_t k) {
    Content c;
    const SlotLaw& L = law_at(k);
    if (L.g <= 0) return c;
    double a = full_ ? 1.0 - L.law[0] : L.a_cond;
    double p_empty = (1.0 - a) * L.e;
    // most slots are empty: decide that from the stream key alone
    const uint64_t key = stream_key(seed_, static_cast<uint64_t>(k), kSlot);
    if (to_unit(key) < p_empty) return c;
    Rng rng(key);
    double nonempty = 1.0 - p_empty;
    bool pairs = rng.uniform() * nonempty < a;
    if (pairs) {
      const std::array<double, 5>& w = full_ ? L.law : L.w_cond;
      double tot = 0;
      for (int n = 1; n <= cfg_.max_pairs; ++n) tot += w[n];
      double wp[5] = {0, w[1], w[2], w[3], w[4]};
      c.n = pick(wp, 5, tot, rng);
      c.idl_bs = rng.binomial(c.n, eta_idler_);
      if (full_) split_survivors(c, rng.binomial(c.n, s_), rng);
      c.wcs = sample_wcs(L.lam, L.e, rng, false);
    } else {
      c.wcs = sample_wcs(L.lam, L.e, rng, true);
    }
    return c;
  }

  // Slot content given at least one signal reaches the analyzer.
  Content sample_survivor_slot(int64_t k, const SlotLaw& L) {
    Rng rng(seed_, static_cast<uint64_t>(k), kSurvivor);
    Content c;
    c.n = pick(L.w_surv.data(), 5, L.q, rng);
    // survivors K ~ Binomial(n, s) conditioned on K >= 1
    double kw[5] = {0, 0, 0, 0, 0};
    double tot = 0;
    for (int j = 1; j <= c.n; ++j) {
      double binom = 1;
      for (int i = 0; i < j; ++i) binom = binom * (c.n - i) / (i + 1);
      kw[j] = binom * std::pow(s_, j) * std::pow(1.0 - s_, c.n - j);
      tot += kw[j];
    }
    int K = pick(kw, 5, tot, rng);
    split_survivors(c, K, rng);
    c.idl_bs = rng.binomial(c.n, eta_idler_);
    c.wcs = sample_wcs(L.lam, L.e, rng, false);
    return c;
  }

  void scan_survivors() {
    const double q_max = make_law(1.0).q;
    if (q_max <= 0) return;
    constexpr int64_t kBlock = int64_t{1} << 24;
    int64_t b0 = k0_ / kBlock, b1 = (k1_ + kBlock - 1) / kBlock;
    for (int64_t blk = b0; blk < b1; ++blk) {
      Rng rng(seed_, static_cast<uint64_t>(blk), kScan);
      int64_t lo = std::max(k0_, blk * kBlock), hi = std::min(k1_, (blk + 1) * kBlock);
      int64_t k = blk * kBlock + static_cast<int64_t>(rng.geometric(q_max));
      while (k < (blk + 1) * kBlock) {
        double u = rng.uniform();
        if (k >= lo && k < hi) {
          const SlotLaw& L = law_at(k);
          if (L.g > 0 && u * q_max < L.q) survivors_.emplace_back(k, sample_survivor_slot(k, L));
        }
        k += 1 + static_cast<int64_t>(rng.geometric(q_max));
      }
    }
    stats_.survivors = static_cast<int64_t>(survivors_.size());
  }

  void build_regions() {
    const auto gates = cfg_.effective_gates();
    std::vector<int64_t> cand;
    cand.reserve(survivors_.size() * 2);
    for (const auto& [k, c] : survivors_) {
      if (c.stored) cand.push_back(k * w_ + storage_ps_);
      if (c.trans) cand.push_back(k * w_);
    }
    // analyzer darks (sampled with the same streams as add_darks)
    for (int det = 3; det <= 4; ++det) {
      Rng rng(seed_, det, kAnalyzerDark);
      for (int64_t t : dark_times(det, k0_ * w_, k1_ * w_, rng)) cand.push_back(t);
    }
    core_.reserve(cand.size() * gates.size());
    for (int64_t t : cand)
      for (const auto& g : gates)
        core_.emplace_back(t - std::llround(g.hi_ns * 1000.0) - margin_ps_,
                           t - std::llround(g.lo_ns * 1000.0) + margin_ps_);
    merge_intervals(core_);
    stats_.core_intervals = static_cast<int64_t>(core_.size());
    auto floor_div = [&](int64_t a) { return a >= 0 ? a / w_ : -((-a + w_ - 1) / w_); };
    segments_.reserve(core_.size() + survivors_.size());
    for (const auto& [lo, hi] : core_) segments_.emplace_back(floor_div(lo), floor_div(hi) + 1);
    for (const auto& s : survivors_) segments_.emplace_back(s.first, s.first + 1);
    for (auto& s : segments_) {
      s.first = std::max(s.first, k0_);
      s.second = std::min(s.second, k1_);
    }
    std::erase_if(segments_, [](const Interval& s) { return s.second <= s.first; });
    merge_intervals(segments_);
  }

  std::vector<int64_t> dark_times(int det, int64_t t0, int64_t t1, Rng& rng) const {
    double rate = cfg_.detectors[det - 1].dark_rate_hz;
    std::vector<int64_t> out;
    if (rate <= 0 || t1 <= t0) return out;
    uint64_t n = rng.poisson(rate * static_cast<double>(t1 - t0) * 1e-12);
    for (uint64_t i = 0; i < n; ++i)
      out.push_back(t0 + static_cast<int64_t>(rng.uniform() * static_cast<double>(t1 - t0)));
    return out;
  }

  void add_darks(int det, int64_t t0, int64_t t1, Rng rng) {
    for (int64_t t : dark_times(det, t0, t1, rng)) emit(det, t, Truth::dark, rng, false);
  }

  void emit(int det, int64_t t_true, Truth tag, Rng& rng, bool jitter = true) {
    double sigma = cfg_.detectors[det - 1].jitter_sigma_ns;
    int64_t t = t_true;
    if (jitter && sigma > 0) t += std::llround(sigma * 1000.0 * rng.normal());
    if (!full_ && det <= 2 && !inside(core_, t)) return;
    int64_t win = t >= 0 ? t / period_ps_ : -((-t + period_ps_ - 1) / period_ps_);
    records_.push_back({static_cast<uint8_t>(det), t, win});
    tags_.push_back(tag);
  }

  void process_segment(int64_t lo, int64_t hi) {
    auto surv = std::lower_bound(survivors_.begin(), survivors_.end(), lo,
                                 [](const auto& s, int64_t v) { return s.first < v; });
    for (int64_t k = lo; k < hi; ++k) {
      Content c;
      if (surv != survivors_.end() && surv->first == k) {
        c = surv->second;
        ++surv;
      } else {
        c = sample_slot(k);
      }
      ++stats_.region_slots;
      if (c.empty()) continue;
      ++stats_.occupied_slots;
      add_slot(k, c);
    }
  }

  // Pairs and WCS photons of one slot share its temporal mode; the WCS
  // overlaps the idler mode with probability xi_max^2 and is otherwise
  // resolved as a distinguishable group of its own.
  void add_slot(int64_t k, const Content& c) {
    Group pair_group{static_cast<uint64_t>(2 * k), k, {}, {}};
    if (c.n > 0 && (c.idl_bs > 0 || c.stored + c.trans > 0)) {
      Rng rng(seed_, static_cast<uint64_t>(2 * k), kBundle);
      fock::PairBundle pb;
      pb.n_pairs = c.n;
      double t_s = static_cast<double>(k * w_) * 1e-12;
      pb.phase = cfg_.phi + cfg_.phi_drift_rad_per_s * t_s;
      if (rng.uniform() < 0.5 * (1.0 - cfg_.V_src)) pb.phase += M_PI;
      pb.hh_weight = cfg_.hh_weight;
      pb.idlers_to_bs = c.idl_bs;
      pb.idlers_lost = c.n - c.idl_bs;
      pb.signals_stored = c.stored;
      pb.signals_transmitted = c.trans;
      pb.signals_lost = c.n - c.stored - c.trans;
      pair_group.pairs.push_back(pb);
    }
    if (c.wcs > 0) {
      Rng rng(seed_, static_cast<uint64_t>(2 * k + 1), kBundle);
      fock::WcsBundle wb{c.wcs, wcs_pol_};
      bool shared = !pair_group.pairs.empty() && pair_group.pairs[0].idlers_to_bs > 0 &&
                    rng.uniform() < cfg_.xi_max * cfg_.xi_max;
      if (shared) {
        pair_group.wcs.push_back(wb);
      } else {
        resolve(Group{static_cast<uint64_t>(2 * k + 1), k, {}, {wb}});
      }
    }
    if (!pair_group.pairs.empty()) resolve(pair_group);
  }

  void resolve(const Group& g) {
    ++stats_.groups;
    Rng rng(seed_, g.key, kGroup);
    fock::GroupOutcome out = fock::sample_group(g.pairs, g.wcs, bsm_, analyzer_, rng);
    if (out.d1 || out.d2) {
      // every group photon sits at the slot time; the truth tag names the
      // photon behind each click, drawn without replacement
      int idlers = 0, n_bs = 0;
      for (const auto& p : g.pairs) idlers += p.idlers_to_bs;
      for (const auto& w : g.wcs) n_bs += w.photons;
      n_bs += idlers;
      int first = -1;
      for (int det = 1; det <= 2; ++det) {
        if (!(det == 1 ? out.d1 : out.d2)) continue;
        int idx = 0;
        if (first < 0 || n_bs < 2) {
          idx = std::min(n_bs - 1, static_cast<int>(rng.uniform() * n_bs));
          first = idx;
        } else {
          idx = std::min(n_bs - 2, static_cast<int>(rng.uniform() * (n_bs - 1)));
          if (idx >= first) ++idx;
        }
        emit(det, g.slot * w_, idx < idlers ? Truth::idler : Truth::wcs, rng);
      }
    }
    for (const auto& s : out.signals) {
      bool stored = s.branch == fock::Branch::stored;
      int64_t t = g.slot * w_ + (stored ? storage_ps_ : 0);
      Truth tag = stored ? Truth::signal_stored : Truth::signal_transmitted;
      double a3 = eta3_ / eta_max_, a4 = eta4_ / eta_max_;
      if (s.n_target > 0 && rng.uniform() < 1.0 - std::pow(1.0 - a3, s.n_target)) emit(3, t, tag, rng);
      if (s.n_orth > 0 && rng.uniform() < 1.0 - std::pow(1.0 - a4, s.n_orth)) emit(4, t, tag, rng);
    }
  }

  void drop_unheralded() {
    std::vector<int64_t> bsm;
    for (const auto& r : records_)
      if (r.detector <= 2) bsm.push_back(r.time_ps);
    const auto gates = cfg_.effective_gates();
    std::vector<DetectionRecord> keep;
    std::vector<Truth> keep_tags;
    for (size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      bool ok = r.detector <= 2;
      for (size_t gi = 0; !ok && gi < gates.size(); ++gi) {
        int64_t lo = r.time_ps - std::llround(gates[gi].hi_ns * 1000.0) - margin_ps_;
        int64_t hi = r.time_ps - std::llround(gates[gi].lo_ns * 1000.0) + margin_ps_;
        auto it = std::lower_bound(bsm.begin(), bsm.end(), lo);
        ok = it != bsm.end() && *it <= hi;
      }
      if (ok) {
        keep.push_back(r);
        keep_tags.push_back(tags_[i]);
      }
    }
    records_ = std::move(keep);
    tags_ = std::move(keep_tags);
  }
};

}  // namespace

Unitary2 analyzer_basis_unitary(const PureQubit& target) {
  const double q = M_PI / 4, e = M_PI / 8;
  if (target.same_ray(PureQubit::H())) return Unitary2::identity();
  if (target.same_ray(PureQubit::V())) return waveplate_unitary(PlateKind::HWP, q);
  if (target.same_ray(PureQubit::plus())) return waveplate_unitary(PlateKind::HWP, e);
  if (target.same_ray(PureQubit::minus())) return waveplate_unitary(PlateKind::HWP, -e);
  if (target.same_ray(PureQubit::R())) return waveplate_unitary(PlateKind::QWP, q);
  if (target.same_ray(PureQubit::L())) return waveplate_unitary(PlateKind::HWP, q) * waveplate_unitary(PlateKind::QWP, q);
  PureQubit o = target.orthogonal();
  Mat2 m;
  m.m[0][0] = std::conj(target.h);
  m.m[0][1] = std::conj(target.v);
  m.m[1][0] = std::conj(o.h);
  m.m[1][1] = std::conj(o.v);
  return m;
}

Unitary2 analyzer_unitary(const ExperimentConfig& cfg) {
  Unitary2 b = analyzer_basis_unitary(cfg.target_state());
  return cfg.apply_correction ? b * fock::correction_unitary(cfg.phi) : b;
}

RunResult run(const ExperimentConfig& cfg, int64_t n_windows, uint64_t seed, int64_t first_window,
              const RunOptions& opt) {
  validate(cfg);
  if (n_windows < 1) throw ConfigError("n_windows must be >= 1");
  if (first_window < 0) throw ConfigError("first_window must be >= 0");
  Simulator sim(cfg, seed, opt);
  return sim.run(first_window, n_windows);
}

std::vector<analysis::VisibilityCounts> run_visibility_scan(const ExperimentConfig& cfg_in, const std::vector<double>& angles,
                                                  int64_t n_windows, uint64_t seed) {
  ExperimentConfig cfg = cfg_in;
  cfg.wcs_enabled = false;
  cfg.gates = {{-cfg.range_ns, cfg.range_ns}};
  RunOptions opt;
  opt.idler_plate = true;
  opt.idler_plate_u = waveplate_unitary(PlateKind::HWP, M_PI / 8);
  const int64_t half = std::llround(cfg.bin_ns * 500.0);
  std::vector<analysis::VisibilityCounts> out;
  for (size_t i = 0; i < angles.size(); ++i) {
    opt.analyzer = waveplate_unitary(PlateKind::HWP, angles[i]) * waveplate_unitary(PlateKind::QWP, M_PI / 4);
    RunResult r = run(cfg, n_windows, stream_key(seed, i, 11), 0, opt);
    analysis::VisibilityCounts vc{angles[i], {}};
    int idx = 0;
    for (int a = 1; a <= 2; ++a)
      for (int b = 3; b <= 4; ++b)
        vc.counts[idx++] = analysis::count_twofolds(r.log, b, a, 0, half);
    out.push_back(vc);
  }
  return out;
}

std::vector<HomPoint> run_hom(const fock::HomParams& hp, const std::vector<double>& delays, uint64_t trials,
                              uint64_t seed) {
  // coincidence table for k idlers, j WCS photons in the idler mode, r outside
  double table[3][3][3];
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j)
      for (int r = 0; r + j < 3; ++r) table[k][j][r] = fock::bs_coincidence(k, j, r, hp.eta_det);
  const double h1 = hp.p * hp.eta_herald;
  const double h2 = hp.p * hp.p * (1.0 - std::pow(1.0 - hp.eta_herald, 2));
  const double p_two = h2 / (h1 + h2);
  const double q0 = 1.0 - hp.mu - 0.5 * hp.mu * hp.mu, q1 = hp.mu;
  std::vector<HomPoint> out;
  for (size_t i = 0; i < delays.size(); ++i) {
    double xi = fock::overlap_amplitude(delays[i], hp.tau_i, hp.xi_max);
    double xi2 = xi * xi;
    Rng rng(seed, i, 12);
    uint64_t coinc = 0;
    for (uint64_t t = 0; t < trials; ++t) {
      double u = rng.uniform();
      int m = u < q0 ? 0 : (u < q0 + q1 ? 1 : 2);
      if (m == 0) {
        // no WCS photon: only two-idler trials can click both outputs
        if (rng.uniform() >= p_two) continue;
        int k = rng.binomial(2, hp.eta_i);
        if (rng.uniform() < table[k][0][0]) ++coinc;
        continue;
      }
      int n = rng.uniform() < p_two ? 2 : 1;
      int k = rng.binomial(n, hp.eta_i);
      int j = rng.binomial(m, xi2);
      if (rng.uniform() < table[k][j][m - j]) ++coinc;
    }
    out.push_back({delays[i], trials, coinc});
  }
  return out;
}

}  // namespace qtele::engine
