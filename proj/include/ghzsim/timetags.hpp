#pragma once

// Timetag event streams: the JSON-lines file format, triple-coincidence
// extraction, and the synthetic stream sampler.
//
// File format (UTF-8, one JSON object per line): the first line is a header
// {"format_version":1, "setting":{...}, "window_length_ns":..,
//  "windows_per_attempt":.., "window_offsets_ns":[..], "attempt_period_ns":..,
//  "notes":".."}; every following line is one event:
//   {"kind":"ATTEMPT_START","time_ns":N}
//   {"kind":"DETECTION","time_ns":N,"channel":"t"|"r"}
//   {"kind":"ION_RESULT","time_ns":N,"outcome":"ddu"}
// Events are sorted by time_ns.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ghzsim/optics.hpp"
#include "ghzsim/protocol.hpp"

namespace ghzsim {

enum class EventKind { attempt_start, detection, ion_result };

struct TimetagEvent {
  EventKind kind = EventKind::attempt_start;
  uint64_t time_ns = 0;
  int channel = 0;         // DETECTION: 0 = t, 1 = r
  IonOutcome outcome{};    // ION_RESULT only
};

// Photon arrival windows, as offsets from ATTEMPT_START.
struct AttemptWindowing {
  uint64_t window_length_ns = 50000;
  std::vector<uint64_t> offsets_ns = {0, 50000, 100000};

  void validate() const;   // non-overlapping, ordered
};

struct StreamHeader {
  int format_version = 1;
  MeasurementSetting setting;
  AttemptWindowing windowing;
  uint64_t attempt_period_ns = 200000;
  std::string notes;
};

// Parse error with the 1-based line it occurred on.
class ParseError : public std::runtime_error {
 public:
  ParseError(size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Triple-coincidence counts per (ion outcome, port pattern) plus the
// bookkeeping totals the estimators need.
struct CountTable {
  std::array<std::array<uint64_t, 8>, 8> counts{};   // [outcome][pattern]
  uint64_t attempts = 0;
  uint64_t singles_t = 0;            // windows classified transmitted
  uint64_t singles_r = 0;            // windows classified reflected
  uint64_t ambiguous_windows = 0;    // both detectors clicked in one window
  uint64_t coincidence_no_ion = 0;   // triple coincidence without ION_RESULT
  uint64_t ion_no_coincidence = 0;   // ION_RESULT without triple coincidence
  MeasurementSetting setting;

  uint64_t total() const;
  uint64_t outcome_total(int outcome_index) const;
};

struct ParsedStream {
  StreamHeader header;
  std::vector<TimetagEvent> events;
};

ParsedStream parse_stream(std::istream& in);
ParsedStream parse_stream_file(const std::string& path);   // transparent gzip

void write_stream(std::ostream& out, const StreamHeader& header,
                  const std::vector<TimetagEvent>& events);

// Classify each attempt's windows as t, r or empty; count a triple coincidence
// when all three windows are non-empty and an ION_RESULT is present.
CountTable extract_coincidences(const ParsedStream& stream);
CountTable extract_coincidences(const std::vector<TimetagEvent>& events,
                                const StreamHeader& header);

// Forward sampler. Draws (ion outcome, port pattern) per attempt from the
// simulated joint distribution, thins each photon by its detection
// efficiency, and writes the event stream. ION_RESULT lines are emitted only
// for triple coincidences. Deterministic in `seed`.
struct SynthesisSpec {
  MeasurementSetting setting;
  DetectorModel det = DetectorModel::balanced();
  std::array<double, 3> photon_efficiency = {1.0, 1.0, 1.0};
  uint64_t attempts = 0;
  uint64_t seed = 0;
  AttemptWindowing windowing;
  uint64_t attempt_period_ns = 200000;
  double dark_rate_hz = 0.0;   // per detector, Poisson clicks per window
  std::string notes;
};

struct SynthesisResult {
  CountTable ground_truth;   // what the sampler actually emitted
};

SynthesisResult synthesize_stream(std::ostream& out, const ConditionalStateSet& states,
                                  const SynthesisSpec& spec);

// CSV form: comment lines with the totals, then "lmn,opq,count" rows.
void write_count_table_csv(std::ostream& out, const CountTable& table);
CountTable read_count_table_csv(std::istream& in);

} // namespace ghzsim
