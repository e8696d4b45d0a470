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

#ifndef QTELE_EVENT_LOG_HPP
#define QTELE_EVENT_LOG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qtele {

struct DetectionRecord {
  uint8_t detector;  // 1..4
  int64_t time_ps;
  int64_t window;
  bool operator==(const DetectionRecord&) const = default;
};

// Origin of a record. Kept outside EventLog so analysis code cannot read it.
enum class Truth : uint8_t { idler, wcs, signal_stored, signal_transmitted, dark };
const char* truth_name(Truth t);

struct TruthTable {
  std::vector<Truth> tags;  // parallel to EventLog::records()
};

struct LogHeader {
  std::string config_hash;
  uint64_t seed = 0;
  int64_t first_window = 0;
  int64_t n_windows = 0;
  int64_t slot_ps = 0;
  std::string acquisition;
};

class EventLog {
 public:
  EventLog() = default;
  EventLog(LogHeader header, std::vector<DetectionRecord> records);

  const LogHeader& header() const { return header_; }
  const std::vector<DetectionRecord>& records() const { return records_; }
  // Sorted record times of one detector (1..4).
  const std::vector<int64_t>& times(int detector) const { return times_.at(detector - 1); }
  // Positions in records() of the entries returned by times().
  const std::vector<size_t>& indices(int detector) const { return indices_.at(detector - 1); }
  size_t count(int detector) const { return times(detector).size(); }

  void write(std::ostream& os) const;
  static EventLog read(std::istream& is);

 private:
  LogHeader header_;
  std::vector<DetectionRecord> records_;
  std::vector<std::vector<int64_t>> times_ = std::vector<std::vector<int64_t>>(4);
  std::vector<std::vector<size_t>> indices_ = std::vector<std::vector<size_t>>(4);
};

// Sorts by (time, detector) and applies the same permutation to the truth tags.
void sort_records(std::vector<DetectionRecord>& recs, std::vector<Truth>& tags);

// Time in ns with picosecond resolution, e.g. 1234567 -> "1234.567".
std::string format_ns(int64_t ps);

}  // namespace qtele

#endif  // QTELE_EVENT_LOG_HPP
