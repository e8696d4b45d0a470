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

#include "qtele/event_log.hpp"

#include <algorithm>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qtele {

const char* truth_name(Truth t) {
  switch (t) {
    case Truth::idler: return "idler";
    case Truth::wcs: return "wcs";
    case Truth::signal_stored: return "signal_stored";
    case Truth::signal_transmitted: return "signal_transmitted";
    case Truth::dark: return "dark";
  }
  return "?";
}

EventLog::EventLog(LogHeader header, std::vector<DetectionRecord> records)
    : header_(std::move(header)), records_(std::move(records)) {
  for (size_t i = 1; i < records_.size(); ++i)
    if (records_[i].time_ps < records_[i - 1].time_ps) throw std::invalid_argument("EventLog: records not time-sorted");
  for (size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.detector < 1 || r.detector > 4) throw std::invalid_argument("EventLog: detector id outside 1..4");
    times_[r.detector - 1].push_back(r.time_ps);
    indices_[r.detector - 1].push_back(i);
  }
}

std::string format_ns(int64_t ps) {
  std::string sign = ps < 0 ? "-" : "";
  int64_t a = std::llabs(ps);
  std::string frac = std::to_string(a % 1000);
  frac.insert(0, 3 - frac.size(), '0');
  return sign + std::to_string(a / 1000) + "." + frac;
}

void EventLog::write(std::ostream& os) const {
  os << "# config_hash " << header_.config_hash << '\n';
  os << "# seed " << header_.seed << '\n';
  os << "# first_window " << header_.first_window << '\n';
  os << "# n_windows " << header_.n_windows << '\n';
  os << "# slot_ps " << header_.slot_ps << '\n';
  os << "# acquisition " << header_.acquisition << '\n';
  for (int d = 1; d <= 4; ++d) os << "# count_D" << d << ' ' << count(d) << '\n';
  for (const auto& r : records_)
    os << 'D' << int(r.detector) << ',' << format_ns(r.time_ps) << ',' << r.window << '\n';
}

namespace {

int64_t parse_ns(const std::string& s) {
  size_t dot = s.find('.');
  if (dot == std::string::npos || s.size() - dot != 4) throw std::runtime_error("malformed time '" + s + "'");
  bool neg = !s.empty() && s[0] == '-';
  int64_t whole = std::stoll(s.substr(neg ? 1 : 0, dot - (neg ? 1 : 0)));
  int64_t frac = std::stoll(s.substr(dot + 1));
  int64_t v = whole * 1000 + frac;
  return neg ? -v : v;
}

}  // namespace

EventLog EventLog::read(std::istream& is) {
  LogHeader h;
  std::vector<DetectionRecord> recs;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "config_hash") ls >> h.config_hash;
      else if (key == "seed") ls >> h.seed;
      else if (key == "first_window") ls >> h.first_window;
      else if (key == "n_windows") ls >> h.n_windows;
      else if (key == "slot_ps") ls >> h.slot_ps;
      else if (key == "acquisition") ls >> h.acquisition;
      continue;
    }
    size_t c1 = line.find(','), c2 = line.rfind(',');
    if (line[0] != 'D' || c1 == std::string::npos || c1 == c2) throw std::runtime_error("malformed record '" + line + "'");
    DetectionRecord r;
    r.detector = static_cast<uint8_t>(std::stoi(line.substr(1, c1 - 1)));
    r.time_ps = parse_ns(line.substr(c1 + 1, c2 - c1 - 1));
    r.window = std::stoll(line.substr(c2 + 1));
    recs.push_back(r);
  }
  return EventLog(std::move(h), std::move(recs));
}

void sort_records(std::vector<DetectionRecord>& recs, std::vector<Truth>& tags) {
  std::vector<size_t> idx(recs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (recs[a].time_ps != recs[b].time_ps) return recs[a].time_ps < recs[b].time_ps;
    return recs[a].detector < recs[b].detector;
  });
  std::vector<DetectionRecord> r2;
  std::vector<Truth> t2;
  r2.reserve(recs.size());
  t2.reserve(tags.size());
  for (size_t i : idx) {
    r2.push_back(recs[i]);
    if (!tags.empty()) t2.push_back(tags[i]);
  }
  recs = std::move(r2);
  tags = std::move(t2);
}

}  // namespace qtele
