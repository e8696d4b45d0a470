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

#include "qtele/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "qtele/oracle.hpp"

namespace qtele {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line_no) + ": " + msg);
}

double parse_number(const std::string& s, int line_no) {
  std::string t;
  for (char c : s)
    if (c != '_') t += c;
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    fail(line_no, "cannot parse value '" + s + "'");
  }
  if (used != t.size()) fail(line_no, "cannot parse value '" + s + "'");
  return v;
}

std::string parse_string(const std::string& s, int line_no) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') fail(line_no, "unterminated string");
  return s.substr(1, s.size() - 2);
}

std::vector<std::string> split_array(const std::string& body) {
  std::vector<std::string> out;
  std::string cur;
  bool in_str = false;
  for (char c : body) {
    if (c == '"') in_str = !in_str;
    if (c == ',' && !in_str) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

ConfigValue parse_value(const std::string& raw, int line_no) {
  std::string v = trim(raw);
  if (v.empty()) fail(line_no, "missing value");
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '"') return parse_string(v, line_no);
  if (v.front() == '[') {
    if (v.back() != ']') fail(line_no, "unterminated array");
    auto items = split_array(v.substr(1, v.size() - 2));
    if (!items.empty() && items[0].front() == '"') {
      std::vector<std::string> a;
      for (const auto& it : items) a.push_back(parse_string(it, line_no));
      return a;
    }
    std::vector<double> a;
    for (const auto& it : items) a.push_back(parse_number(it, line_no));
    return a;
  }
  return parse_number(v, line_no);
}

struct Field {
  std::string key;
  std::function<ConfigValue(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const ConfigValue&)> set;
};

template <class T>
const T& as(const ConfigValue& v, const std::string& key) {
  if (auto p = std::get_if<T>(&v)) return *p;
  throw ConfigError("config key '" + key + "' has the wrong type");
}

Field num(const std::string& key, double ExperimentConfig::*m) {
  return {key, [m](const ExperimentConfig& c) { return ConfigValue(c.*m); },
          [m, key](ExperimentConfig& c, const ConfigValue& v) { c.*m = as<double>(v, key); }};
}

Field flag(const std::string& key, bool ExperimentConfig::*m) {
  return {key, [m](const ExperimentConfig& c) { return ConfigValue(c.*m); },
          [m, key](ExperimentConfig& c, const ConfigValue& v) { c.*m = as<bool>(v, key); }};
}

Field str(const std::string& key, std::string ExperimentConfig::*m) {
  return {key, [m](const ExperimentConfig& c) { return ConfigValue(c.*m); },
          [m, key](ExperimentConfig& c, const ConfigValue& v) { c.*m = as<std::string>(v, key); }};
}

Field integer(const std::string& key, int ExperimentConfig::*m) {
  return {key, [m](const ExperimentConfig& c) { return ConfigValue(double(c.*m)); },
          [m, key](ExperimentConfig& c, const ConfigValue& v) {
            double d = as<double>(v, key);
            if (d != std::floor(d)) throw ConfigError("config key '" + key + "' must be an integer");
            c.*m = static_cast<int>(d);
          }};
}

template <class E>
Field enumeration(const std::string& key, E ExperimentConfig::*m, std::vector<std::pair<E, std::string>> names) {
  return {key,
          [m, names](const ExperimentConfig& c) {
            for (const auto& [e, n] : names)
              if (e == c.*m) return ConfigValue(n);
            return ConfigValue(std::string("?"));
          },
          [m, names, key](ExperimentConfig& c, const ConfigValue& v) {
            const auto& s = as<std::string>(v, key);
            for (const auto& [e, n] : names)
              if (n == s) {
                c.*m = e;
                return;
              }
            throw ConfigError("config key '" + key + "': unknown value '" + s + "'");
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v = {
        num("source.p", &ExperimentConfig::p),
        num("source.mu", &ExperimentConfig::mu),
        num("source.phi_rad", &ExperimentConfig::phi),
        num("source.phi_drift_rad_per_s", &ExperimentConfig::phi_drift_rad_per_s),
        num("source.visibility", &ExperimentConfig::V_src),
        num("source.hh_weight", &ExperimentConfig::hh_weight),
        num("source.tau_i_ns", &ExperimentConfig::tau_i_ns),
        num("source.xi_max", &ExperimentConfig::xi_max),
        enumeration("source.pair_statistics", &ExperimentConfig::pair_statistics,
                    {{PairStatistics::two_term, "two_term"}, {PairStatistics::thermal, "thermal"}}),
        integer("source.max_pairs", &ExperimentConfig::max_pairs),
        flag("source.wcs_enabled", &ExperimentConfig::wcs_enabled),
        num("paths.eta_i", &ExperimentConfig::eta_i),
        num("paths.eta_s", &ExperimentConfig::eta_s),
        num("memory.efficiency", &ExperimentConfig::mem_efficiency),
        num("memory.storage_ns", &ExperimentConfig::mem_storage_ns),
        num("memory.transmission", &ExperimentConfig::mem_transmission),
        enumeration("pump.shape", &ExperimentConfig::pump_shape,
                    {{PumpShape::gaussian, "gaussian"}, {PumpShape::flat_top, "flat_top"}, {PumpShape::cw, "cw"}}),
        num("pump.fwhm_ns", &ExperimentConfig::pump_fwhm_ns),
        num("pump.period_ns", &ExperimentConfig::pump_period_ns),
        num("fibre.idler_km", &ExperimentConfig::fibre_idler_km),
        num("fibre.wcs_km", &ExperimentConfig::fibre_wcs_km),
        num("fibre.attenuation_db_per_km", &ExperimentConfig::attenuation_db_per_km),
        str("input.wcs_pol", &ExperimentConfig::wcs_pol),
        str("analyzer.target", &ExperimentConfig::analyzer_target),
        flag("analyzer.apply_correction", &ExperimentConfig::apply_correction),
        flag("bsm.polarizers", &ExperimentConfig::polarizers),
        num("analysis.bin_ns", &ExperimentConfig::bin_ns),
        num("analysis.range_ns", &ExperimentConfig::range_ns),
        integer("analysis.fidelity_half_width_bins", &ExperimentConfig::fidelity_half_width_bins),
        num("analysis.normalization_range_ns", &ExperimentConfig::normalization_range_ns),
        enumeration("acquisition.mode", &ExperimentConfig::acquisition,
                    {{Acquisition::analyzer_triggered, "analyzer_triggered"}, {Acquisition::full, "full"}}),
        flag("acquisition.drop_unheralded", &ExperimentConfig::drop_unheralded),
    };
    v.push_back({"acquisition.gates_ns",
                 [](const ExperimentConfig& c) {
                   std::vector<double> a;
                   for (const auto& g : c.gates) {
                     a.push_back(g.lo_ns);
                     a.push_back(g.hi_ns);
                   }
                   return ConfigValue(a);
                 },
                 [](ExperimentConfig& c, const ConfigValue& val) {
                   const auto* a = std::get_if<std::vector<double>>(&val);
                   if (!a) {
                     // an empty array parses as a list of numbers, strings are an error
                     throw ConfigError("config key 'acquisition.gates_ns' must be a list of numbers");
                   }
                   if (a->size() % 2) throw ConfigError("acquisition.gates_ns needs lo/hi pairs");
                   c.gates.clear();
                   for (size_t i = 0; i < a->size(); i += 2) c.gates.push_back({(*a)[i], (*a)[i + 1]});
                 }});
    v.push_back({"run.seed", [](const ExperimentConfig& c) { return ConfigValue(double(c.seed)); },
                 [](ExperimentConfig& c, const ConfigValue& val) {
                   double d = as<double>(val, "run.seed");
                   if (d < 0 || d != std::floor(d) || d > 9.0e15)
                     throw ConfigError("run.seed must be a non-negative integer");
                   c.seed = static_cast<uint64_t>(d);
                 }});
    for (int k = 0; k < 4; ++k) {
      std::string base = "detectors.d" + std::to_string(k + 1) + ".";
      auto mk = [k, base](const std::string& name, double DetectorConfig::*m) -> Field {
        std::string key = base + name;
        return {key, [k, m](const ExperimentConfig& c) { return ConfigValue(c.detectors[k].*m); },
                [k, m, key](ExperimentConfig& c, const ConfigValue& val) { c.detectors[k].*m = as<double>(val, key); }};
      };
      v.push_back(mk("efficiency", &DetectorConfig::efficiency));
      v.push_back(mk("jitter_sigma_ns", &DetectorConfig::jitter_sigma_ns));
      v.push_back(mk("dark_rate_hz", &DetectorConfig::dark_rate_hz));
    }
    return v;
  }();
  return f;
}

void check_prob(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

void check_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(name) + " must be positive");
}

// Shortest text that parses back to the same double.
std::string format_number(double d) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

std::string format_value(const ConfigValue& v) {
  std::ostringstream os;
  if (auto d = std::get_if<double>(&v)) {
    os << format_number(*d);
  } else if (auto b = std::get_if<bool>(&v)) {
    os << (*b ? "true" : "false");
  } else if (auto s = std::get_if<std::string>(&v)) {
    os << '"' << *s << '"';
  } else if (auto a = std::get_if<std::vector<double>>(&v)) {
    os << '[';
    for (size_t i = 0; i < a->size(); ++i) os << (i ? ", " : "") << format_number((*a)[i]);
    os << ']';
  } else if (auto sa = std::get_if<std::vector<std::string>>(&v)) {
    os << '[';
    for (size_t i = 0; i < sa->size(); ++i) os << (i ? ", " : "") << '"' << (*sa)[i] << '"';
    os << ']';
  }
  return os.str();
}

}  // namespace

ConfigTable parse_config_text(const std::string& text) {
  ConfigTable t;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line_no, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail(line_no, "empty section name");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail(line_no, "empty key");
    std::string full = section.empty() ? key : section + "." + key;
    if (t.count(full)) fail(line_no, "duplicate key '" + full + "'");
    t[full] = parse_value(s.substr(eq + 1), line_no);
  }
  return t;
}

PureQubit ExperimentConfig::input_state() const { return PureQubit::from_name(wcs_pol); }
PureQubit ExperimentConfig::target_state() const { return PureQubit::from_name(analyzer_target); }

double ExperimentConfig::eta_fibre_idler() const {
  return oracle::fibre_transmission(fibre_idler_km, attenuation_db_per_km);
}
double ExperimentConfig::eta_fibre_wcs() const {
  return oracle::fibre_transmission(fibre_wcs_km, attenuation_db_per_km);
}

std::vector<GateInterval> ExperimentConfig::effective_gates() const {
  if (!gates.empty()) return gates;
  return {{-range_ns, range_ns}, {mem_storage_ns - range_ns, mem_storage_ns + range_ns}};
}

ExperimentConfig config_from_table(const ConfigTable& t) {
  ExperimentConfig c;
  for (const auto& [key, val] : t) {
    bool found = false;
    for (const auto& f : fields())
      if (f.key == key) {
        f.set(c, val);
        found = true;
        break;
      }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
  validate(c);
  return c;
}

ExperimentConfig parse_config(const std::string& text) { return config_from_table(parse_config_text(text)); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& c) {
  check_prob(c.p, "source.p");
  check_prob(c.mu, "source.mu");
  check_prob(c.V_src, "source.visibility");
  check_prob(c.hh_weight, "source.hh_weight");
  check_prob(c.xi_max, "source.xi_max");
  check_positive(c.tau_i_ns, "source.tau_i_ns");
  if (!std::isfinite(c.phi) || !std::isfinite(c.phi_drift_rad_per_s)) throw ConfigError("source phase must be finite");
  if (c.max_pairs < 1 || c.max_pairs > 4) throw ConfigError("source.max_pairs must be in 1..4");
  if (c.pair_statistics == PairStatistics::two_term && 0.75 * c.p * c.p + c.p > 1.0)
    throw ConfigError("source.p too large for the two-term pair law");
  check_prob(c.eta_i, "paths.eta_i");
  check_prob(c.eta_s, "paths.eta_s");
  check_prob(c.mem_efficiency, "memory.efficiency");
  check_prob(c.mem_transmission, "memory.transmission");
  if (c.mem_efficiency + c.mem_transmission > 1.0 + 1e-12)
    throw ConfigError("memory.efficiency + memory.transmission must not exceed 1");
  check_positive(c.mem_storage_ns, "memory.storage_ns");
  check_positive(c.pump_fwhm_ns, "pump.fwhm_ns");
  check_positive(c.pump_period_ns, "pump.period_ns");
  if (c.fibre_idler_km < 0 || c.fibre_wcs_km < 0 || c.attenuation_db_per_km < 0)
    throw ConfigError("fibre lengths and attenuation must be non-negative");
  for (int k = 0; k < 4; ++k) {
    const auto& d = c.detectors[k];
    std::string n = "detectors.d" + std::to_string(k + 1);
    check_prob(d.efficiency, (n + ".efficiency").c_str());
    if (!(d.jitter_sigma_ns >= 0)) throw ConfigError(n + ".jitter_sigma_ns must be >= 0");
    if (!(d.dark_rate_hz >= 0)) throw ConfigError(n + ".dark_rate_hz must be >= 0");
  }
  if (std::max(c.detectors[2].efficiency, c.detectors[3].efficiency) <= 0)
    throw ConfigError("at least one analyzer detector needs a non-zero efficiency");
  try {
    (void)c.input_state();
    (void)c.target_state();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  check_positive(c.bin_ns, "analysis.bin_ns");
  check_positive(c.range_ns, "analysis.range_ns");
  check_positive(c.normalization_range_ns, "analysis.normalization_range_ns");
  if (c.fidelity_half_width_bins < 0) throw ConfigError("analysis.fidelity_half_width_bins must be >= 0");
  for (const auto& g : c.gates)
    if (!(g.hi_ns > g.lo_ns)) throw ConfigError("acquisition.gates_ns: every interval needs lo < hi");
}

std::string to_toml(const ExperimentConfig& c) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    size_t dot = f.key.rfind('.');
    std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    os << f.key.substr(dot + 1) << " = " << format_value(f.get(c)) << '\n';
  }
  return os.str();
}

uint64_t config_hash(const ExperimentConfig& c) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_toml(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

OracleInputs oracle_inputs(const ExperimentConfig& c) {
  return {c.p, c.mu * c.eta_fibre_wcs(), c.eta_i * c.eta_fibre_idler(),
          c.mem_efficiency * c.eta_s * c.detectors[2].efficiency};
}

}  // namespace qtele
