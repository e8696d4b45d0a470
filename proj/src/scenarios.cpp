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

#include "qtele/scenarios.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qtele/rng.hpp"

namespace qtele::scenarios {

using nlohmann::ordered_json;

namespace {

std::string num(double d) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

bool is_polar(const PureQubit& s) {
  double ph = std::norm(s.h);
  return ph < 1e-9 || ph > 1.0 - 1e-9;
}

bool is_equatorial(const PureQubit& s) { return std::abs(std::norm(s.h) - 0.5) < 1e-9; }

const char* target_name(tomography::Basis b) {
  switch (b) {
    case tomography::Basis::X:
      return "+";
    case tomography::Basis::Y:
      return "R";
    case tomography::Basis::Z:
      return "H";
  }
  return "H";
}

}  // namespace

double analysis_peak_ns(const ExperimentConfig& cfg) { return cfg.mem_efficiency > 0 ? cfg.mem_storage_ns : 0.0; }

analysis::HistParams hist_params(const ExperimentConfig& cfg) {
  analysis::HistParams hp;
  hp.bin_ns = cfg.bin_ns;
  hp.range_ns = cfg.range_ns;
  return hp;
}

OffsetChoice choose_offsets(const ExperimentConfig& cfg, const EventLog& log) {
  const double peak = analysis_peak_ns(cfg);
  try {
    return {analysis::calibrate_offsets(log, peak), true};
  } catch (const analysis::CalibrationError&) {
    return {analysis::Offsets::uniform(peak), false};
  }
}

TeleportOutput teleport(const ExperimentConfig& cfg, int64_t windows, uint64_t seed) {
  engine::RunResult r = engine::run(cfg, windows, seed);
  TeleportOutput out;
  out.stats = r.stats;
  out.offsets = choose_offsets(cfg, r.log);
  auto [h3, h4] = analysis::build_threefold_histograms(r.log, out.offsets.offsets, hist_params(cfg));
  out.h3 = std::move(h3);
  out.h4 = std::move(h4);
  out.s3 = analysis::slice(out.h3, analysis::SliceAxis::row, 0.0);
  out.s4 = analysis::slice(out.h4, analysis::SliceAxis::row, 0.0);
  out.r3 = analysis::centre_to_arm_ratio(out.h3, cfg.tau_i_ns);
  out.r4 = analysis::centre_to_arm_ratio(out.h4, cfg.tau_i_ns);
  out.b3 = analysis::band_profile(out.h3, cfg.tau_i_ns);
  out.b4 = analysis::band_profile(out.h4, cfg.tau_i_ns);
  return out;
}

std::vector<double> default_angles() {
  std::vector<double> a;
  for (int i = 0; i < 16; ++i) a.push_back(i * M_PI / 32.0);
  return a;
}

VisibilityOutput visibility(const ExperimentConfig& cfg, const std::vector<double>& angles, int64_t windows_per_angle,
                            uint64_t seed) {
  VisibilityOutput out;
  out.data = engine::run_visibility_scan(cfg, angles, windows_per_angle, seed);
  out.fit = analysis::fit_visibility_curves(out.data);
  out.efficiency_ratio = analysis::efficiency_ratio_from_visibility(out.fit);
  return out;
}

StateTomography tomograph_state(const ExperimentConfig& cfg_in, int64_t windows, uint64_t seed, bool normalize) {
  StateTomography st;
  st.label = cfg_in.wcs_pol;
  st.input = cfg_in.input_state();
  std::array<engine::RunResult, 3> runs;
  for (size_t b = 0; b < 3; ++b) {
    ExperimentConfig cfg = cfg_in;
    cfg.analyzer_target = target_name(static_cast<tomography::Basis>(b));
    runs[b] = engine::run(cfg, windows, stream_key(seed, b, 21));
  }
  // one set of cable delays serves all bases
  const analysis::Offsets off = choose_offsets(cfg_in, runs[0].log).offsets;
  const auto hp = hist_params(cfg_in);
  for (size_t b = 0; b < 3; ++b)
    st.raw.bases[b] = tomography::centre_threefolds(runs[b].log, off, hp, cfg_in.fidelity_half_width_bins);

  st.ratio_method = "none";
  if (normalize && is_polar(st.input)) {
    const auto angles = default_angles();
    int64_t per_angle = std::max<int64_t>(1, windows / static_cast<int64_t>(angles.size()));
    VisibilityOutput v = visibility(cfg_in, angles, per_angle, stream_key(seed, 3, 21));
    st.ratio = v.efficiency_ratio;
    st.ratio_method = "visibility";
  } else if (normalize) {
    double range = cfg_in.normalization_range_ns;
    // triggered runs only hold BSM records inside the gates
    if (cfg_in.acquisition == Acquisition::analyzer_triggered) range = std::min(range, cfg_in.range_ns);
    std::vector<tomography::BasisLog> logs;
    for (size_t b = 0; b < 3; ++b) logs.push_back({static_cast<tomography::Basis>(b), &runs[b].log});
    auto nr = tomography::normalization_factor(logs, st.input, off, range, cfg_in.bin_ns, cfg_in.tau_i_ns);
    st.ratio = nr.ratio;
    st.ratio_sigma = nr.sigma;
    st.ratio_method = "off_diagonal";
  }
  st.result = tomography::reconstruct(tomography::normalize(st.raw, st.ratio), st.input);
  st.result.sigmas = tomography::uncertainty(st.raw, st.ratio, st.input, 200, stream_key(seed, 4, 21));
  return st;
}

Campaign campaign(const ExperimentConfig& cfg, const std::vector<std::string>& inputs, int64_t windows, uint64_t seed) {
  if (inputs.empty()) throw ConfigError("campaign needs at least one input state");
  Campaign c;
  double se = 0, ve = 0, sp = 0, vp = 0;
  int ne = 0, np = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    ExperimentConfig ci = cfg;
    ci.wcs_pol = inputs[i];
    validate(ci);
    StateTomography st = tomograph_state(ci, windows, stream_key(seed, i, 22));
    const double f = st.result.fidelity, s = st.result.sigmas.fidelity;
    if (is_polar(st.input)) {
      sp += f;
      vp += s * s;
      ++np;
    } else if (is_equatorial(st.input)) {
      se += f;
      ve += s * s;
      ++ne;
    } else {
      throw ConfigError("campaign inputs must be polar or equatorial states: " + inputs[i]);
    }
    c.states.push_back(std::move(st));
  }
  if (ne) c.F_equatorial = se / ne;
  if (np) c.F_polar = sp / np;
  const double we = np ? 2.0 / 3.0 : 1.0, wp = ne ? 1.0 / 3.0 : 1.0;
  c.F_avg = (ne ? we * c.F_equatorial : 0.0) + (np ? wp * c.F_polar : 0.0);
  double var = 0;
  if (ne) var += we * we * ve / (ne * ne);
  if (np) var += wp * wp * vp / (np * np);
  c.sigma = std::sqrt(var);
  return c;
}

GsiOutput gsi(const ExperimentConfig& cfg_in, int64_t windows, uint64_t seed, double window_ns, int displaced) {
  ExperimentConfig cfg = cfg_in;
  // signal-idler correlation only, the input beam is blocked
  cfg.wcs_enabled = false;
  if (!(window_ns > 0)) window_ns = cfg.bin_ns;
  const double h = 0.5 * window_ns + 1.0, T = cfg.pump_period_ns;
  std::vector<double> centres = {0.0};
  if (cfg.mem_efficiency > 0) centres.push_back(cfg.mem_storage_ns);
  cfg.gates.clear();
  for (double c : centres)
    for (int k = -displaced; k <= displaced; ++k) cfg.gates.push_back({c + k * T - h, c + k * T + h});
  engine::RunResult r = engine::run(cfg, windows, seed);
  GsiOutput out;
  out.ideal = oracle::gsi_ideal(cfg.p);
  out.transmitted = analysis::estimate_gsi(r.log, window_ns, analysis::Peak::transmitted, cfg.mem_storage_ns, T, displaced);
  if (cfg.mem_efficiency > 0)
    out.stored = analysis::estimate_gsi(r.log, window_ns, analysis::Peak::stored, cfg.mem_storage_ns, T, displaced);
  return out;
}

fock::HomParams hom_params(const ExperimentConfig& cfg) {
  fock::HomParams hp;
  hp.tau_i = cfg.tau_i_ns;
  hp.p = cfg.p;
  hp.mu = cfg.mu * cfg.eta_fibre_wcs();
  hp.eta_i = cfg.eta_i * cfg.eta_fibre_idler();
  hp.eta_det = cfg.detectors[0].efficiency;
  hp.xi_max = cfg.xi_max;
  return hp;
}

std::vector<double> default_delays() {
  std::vector<double> d;
  for (int i = -12; i <= 12; ++i) d.push_back(0.5 * i);
  return d;
}

HomOutput hom(const fock::HomParams& hp, const std::vector<double>& delays, uint64_t trials, uint64_t seed) {
  HomOutput out;
  out.engine = fock::hom_scan(delays, hp);
  out.mc = engine::run_hom(hp, delays, trials, seed);
  // dip depth from the zero-delay point against the points beyond four coherence times
  double c0 = -1, far = 0;
  int nfar = 0;
  for (const auto& pt : out.mc) {
    if (std::abs(pt.delta_t_ns) < 1e-12) c0 = static_cast<double>(pt.coincidences);
    if (std::abs(pt.delta_t_ns) >= 4.0 * hp.tau_i) {
      far += static_cast<double>(pt.coincidences);
      ++nfar;
    }
  }
  if (c0 < 0 || nfar == 0 || far == 0)
    throw analysis::AnalysisError("hom delays need zero and at least one delay beyond four coherence times");
  far /= nfar;
  out.mc_visibility = 1.0 - c0 / far;
  out.mc_sigma = (c0 / far) * std::sqrt((c0 > 0 ? 1.0 / c0 : 0.0) + 1.0 / (far * nfar));
  return out;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& param, const std::vector<double>& values_in) {
  const OracleInputs base = oracle_inputs(cfg);
  double OracleInputs::*field = nullptr;
  if (param == "p") field = &OracleInputs::p;
  else if (param == "mu") field = &OracleInputs::mu;
  else if (param == "eta_i") field = &OracleInputs::eta_i;
  else if (param == "eta_s") field = &OracleInputs::eta_s;
  else throw ConfigError("sweep parameter must be one of p, mu, eta_i, eta_s");
  std::vector<double> values = values_in;
  if (values.empty())
    for (double f : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0})
      if (base.*field * f <= 1.0) values.push_back(base.*field * f);
  std::vector<SweepRow> rows;
  for (double v : values) {
    if (!(v > 0 && v <= 1)) throw ConfigError("sweep values must lie in (0, 1]");
    OracleInputs in = base;
    in.*field = v;
    rows.push_back({in.p, in.mu, in.eta_i, in.eta_s, oracle::evaluate(in.p, in.mu, in.eta_i, in.eta_s)});
  }
  return rows;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"teleport", "tomography", "hom", "gsi", "visibility", "oracle", "sweep"};
  return names;
}

namespace {

class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw OutputError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }
  void file(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw OutputError("cannot open " + path.string() + " for writing");
    os << content;
    os.close();
    if (!os) throw OutputError("write failed for " + path.string());
    written_.push_back(name);
  }
  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

std::string hist_csv(const analysis::Histogram2D& h) {
  std::ostringstream os;
  // row r holds delta t_{j1} = (r - half_bins) * bin_ns, columns likewise for delta t_{j2}
  os << "# detector=D" << h.detector << " bin_ns=" << num(h.bin_ns) << " range_ns=" << num(h.half * h.bin_ns)
     << " half_bins=" << h.half << '\n';
  os << "row,col,count\n";
  for (int r = 0; r < h.size(); ++r)
    for (int c = 0; c < h.size(); ++c) os << r << ',' << c << ',' << h.at(r, c) << '\n';
  return os.str();
}

std::string slice_csv(const analysis::Slice& s) {
  std::ostringstream os;
  os << "delay_ns,count\n";
  for (size_t i = 0; i < s.counts.size(); ++i) os << num(s.delay_ns[i]) << ',' << s.counts[i] << '\n';
  return os.str();
}

ordered_json ratio_json(const analysis::RatioResult& r) {
  return {{"centre", r.centre}, {"arm_mean", r.arm_mean}, {"ratio", r.ratio}, {"sigma", r.sigma}};
}

ordered_json state_json(const StateTomography& st) {
  ordered_json j = ordered_json::parse(tomography::to_json(st.result, st.input, st.ratio));
  ordered_json out;
  out["label"] = st.label;
  out["ratio_method"] = st.ratio_method;
  out["ratio_sigma"] = st.ratio_sigma;
  out.update(j);
  return out;
}

ordered_json gsi_json(const analysis::GsiEstimate& g) {
  return {{"g", g.g}, {"sigma", g.sigma}, {"peak_counts", g.peak_counts}, {"reference_counts", g.reference_counts}};
}

}  // namespace

std::vector<std::string> run(const CliOptions& opt, const ExperimentConfig& cfg_in) {
  if (opt.trials < 1) throw ConfigError("--trials must be >= 1");
  ExperimentConfig cfg = cfg_in;
  if (opt.fibre_km) {
    if (!(*opt.fibre_km >= 0)) throw ConfigError("--fibre-km must be >= 0");
    cfg.fibre_idler_km = cfg.fibre_wcs_km = *opt.fibre_km;
  }
  validate(cfg);
  Writer w(opt.out);
  ordered_json summary;
  const std::string& s = opt.scenario;

  if (s == "teleport") {
    TeleportOutput t = teleport(cfg, opt.trials, opt.seed);
    w.file("hist2d_D3.csv", hist_csv(t.h3));
    w.file("hist2d_D4.csv", hist_csv(t.h4));
    w.file("slice_D3.csv", slice_csv(t.s3));
    w.file("slice_D4.csv", slice_csv(t.s4));
    summary["offsets_calibrated"] = t.offsets.calibrated;
    summary["offsets_ns"] = t.offsets.offsets.ns;
    summary["D3"] = ratio_json(t.r3);
    summary["D4"] = ratio_json(t.r4);
    summary["threefolds"] = {t.h3.total(), t.h4.total()};
  } else if (s == "tomography") {
    std::vector<std::string> inputs = opt.inputs;
    if (inputs.empty()) inputs.push_back(cfg.wcs_pol);
    Campaign c = campaign(cfg, inputs, opt.trials, opt.seed);
    ordered_json j;
    j["states"] = ordered_json::array();
    for (const auto& st : c.states) j["states"].push_back(state_json(st));
    j["F_equatorial"] = c.F_equatorial;
    j["F_polar"] = c.F_polar;
    j["F_average"] = c.F_avg;
    j["F_average_sigma"] = c.sigma;
    j["classical_bound"] = 2.0 / 3.0;
    w.file("tomography.json", j.dump(2) + "\n");
    summary["F_average"] = c.F_avg;
    summary["F_average_sigma"] = c.sigma;
  } else if (s == "hom") {
    const auto delays = opt.delays.empty() ? default_delays() : opt.delays;
    HomOutput h = hom(hom_params(cfg), delays, static_cast<uint64_t>(opt.trials), opt.seed);
    std::ostringstream os;
    os << "delay_ns,engine_probability,trials,coincidences,mc_probability\n";
    for (size_t i = 0; i < h.mc.size(); ++i)
      os << num(h.mc[i].delta_t_ns) << ',' << num(h.engine.coincidence[i]) << ',' << h.mc[i].trials << ','
         << h.mc[i].coincidences << ','
         << num(static_cast<double>(h.mc[i].coincidences) / static_cast<double>(h.mc[i].trials)) << '\n';
    w.file("hom.csv", os.str());
    summary["engine_visibility"] = h.engine.visibility;
    summary["mc_visibility"] = h.mc_visibility;
    summary["mc_sigma"] = h.mc_sigma;
  } else if (s == "gsi") {
    GsiOutput g = gsi(cfg, opt.trials, opt.seed);
    ordered_json j;
    j["ideal"] = g.ideal;
    j["transmitted"] = gsi_json(g.transmitted);
    if (g.stored) j["stored"] = gsi_json(*g.stored);
    w.file("gsi.json", j.dump(2) + "\n");
    summary["transmitted"] = g.transmitted.g;
  } else if (s == "visibility") {
    const auto angles = opt.angles.empty() ? default_angles() : opt.angles;
    VisibilityOutput v = visibility(cfg, angles, opt.trials, opt.seed);
    std::ostringstream os;
    os << "angle_rad,D1D3,D1D4,D2D3,D2D4\n";
    for (const auto& d : v.data)
      os << num(d.angle_rad) << ',' << d.counts[0] << ',' << d.counts[1] << ',' << d.counts[2] << ',' << d.counts[3]
         << '\n';
    w.file("visibility.csv", os.str());
    summary["phi"] = v.fit.phi;
    summary["visibility"] = v.fit.visibility;
    summary["efficiency_ratio"] = v.efficiency_ratio;
  } else if (s == "oracle") {
    const OracleInputs in = oracle_inputs(cfg);
    oracle::NoiseBudget b = oracle::evaluate(in.p, in.mu, in.eta_i, in.eta_s);
    ordered_json j = ordered_json::parse(oracle::to_json(b));
    if (opt.fibre_km) {
      // budget without the spools against the one with them
      ExperimentConfig bare = cfg;
      bare.fibre_idler_km = bare.fibre_wcs_km = 0;
      const OracleInputs b0 = oracle_inputs(bare);
      auto fc = oracle::fibre_invariance_check(oracle::evaluate(b0.p, b0.mu, b0.eta_i, b0.eta_s), cfg.eta_fibre_idler(),
                                               cfg.eta_fibre_wcs());
      j["fibre_check"] = {{"km", *opt.fibre_km},         {"F_with", fc.F_with},
                          {"F_without", fc.F_without},   {"delta", fc.delta},
                          {"delta_exact", fc.delta_exact}};
    }
    w.file("oracle.json", j.dump(2) + "\n");
    summary["F"] = b.F;
    summary["P"] = b.P;
  } else if (s == "sweep") {
    auto rows = sweep(cfg, opt.sweep_param, opt.sweep_values);
    std::ostringstream os;
    os << "p,mu,eta_i,eta_s,P11,P20,P02,F,P\n";
    for (const auto& r : rows)
      os << num(r.p) << ',' << num(r.mu) << ',' << num(r.eta_i) << ',' << num(r.eta_s) << ',' << num(r.budget.P11) << ','
         << num(r.budget.P20) << ',' << num(r.budget.P02) << ',' << num(r.budget.F) << ',' << num(r.budget.P) << '\n';
    w.file("sweep.csv", os.str());
    summary["rows"] = rows.size();
  } else {
    throw ConfigError("unknown scenario '" + s + "'");
  }

  ordered_json m;
  m["scenario"] = s;
  m["seed"] = opt.seed;
  m["trials"] = opt.trials;
  m["config_path"] = opt.config_path;
  m["config_hash"] = hash_hex(config_hash(cfg_in));
  m["effective_config_hash"] = hash_hex(config_hash(cfg));
  if (opt.fibre_km) m["fibre_km"] = *opt.fibre_km;
  m["config"] = to_toml(cfg);
  m["versions"] = {{"qtele", kVersion},
                   {"compiler", __VERSION__},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  auto files = w.written();
  files.push_back("run_manifest.json");
  m["files"] = files;
  m["summary"] = summary;
  w.file("run_manifest.json", m.dump(2) + "\n");
  return files;
}

}  // namespace qtele::scenarios
