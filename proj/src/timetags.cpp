#include "ghzsim/timetags.hpp"

#include <zlib.h>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ghzsim/rng.hpp"

namespace ghzsim {

void AttemptWindowing::validate() const {
  if (window_length_ns == 0) throw std::invalid_argument("window length must be positive");
  if (offsets_ns.empty()) throw std::invalid_argument("need at least one window");
  for (size_t i = 1; i < offsets_ns.size(); ++i)
    if (offsets_ns[i] < offsets_ns[i - 1] + window_length_ns)
      throw std::invalid_argument("windows must be ordered and non-overlapping");
}

uint64_t CountTable::total() const {
  uint64_t t = 0;
  for (const auto& row : counts)
    for (uint64_t c : row) t += c;
  return t;
}

uint64_t CountTable::outcome_total(int outcome_index) const {
  uint64_t t = 0;
  for (uint64_t c : counts[outcome_index]) t += c;
  return t;
}

namespace {

nlohmann::json setting_to_json(const MeasurementSetting& s) {
  return {{"phi_deg", s.phi_deg}, {"varphi_deg", s.varphi_deg}, {"label", s.label}};
}

MeasurementSetting setting_from_json(const nlohmann::json& j) {
  MeasurementSetting s;
  s.phi_deg = j.at("phi_deg").get<double>();
  s.varphi_deg = j.at("varphi_deg").get<double>();
  s.label = j.value("label", std::string());
  return s;
}

} // namespace

void write_stream(std::ostream& out, const StreamHeader& header,
                  const std::vector<TimetagEvent>& events) {
  header.windowing.validate();
  nlohmann::json h = {{"format_version", header.format_version},
                      {"setting", setting_to_json(header.setting)},
                      {"window_length_ns", header.windowing.window_length_ns},
                      {"windows_per_attempt", header.windowing.offsets_ns.size()},
                      {"window_offsets_ns", header.windowing.offsets_ns},
                      {"attempt_period_ns", header.attempt_period_ns},
                      {"notes", header.notes}};
  out << h.dump() << '\n';
  char buf[128];
  for (const TimetagEvent& e : events) {
    switch (e.kind) {
      case EventKind::attempt_start:
        std::snprintf(buf, sizeof buf, "{\"kind\":\"ATTEMPT_START\",\"time_ns\":%" PRIu64 "}",
                      e.time_ns);
        break;
      case EventKind::detection:
        std::snprintf(buf, sizeof buf,
                      "{\"kind\":\"DETECTION\",\"time_ns\":%" PRIu64 ",\"channel\":\"%c\"}",
                      e.time_ns, e.channel ? 'r' : 't');
        break;
      case EventKind::ion_result:
        std::snprintf(buf, sizeof buf,
                      "{\"kind\":\"ION_RESULT\",\"time_ns\":%" PRIu64 ",\"outcome\":\"%s\"}",
                      e.time_ns, e.outcome.str().c_str());
        break;
    }
    out << buf << '\n';
  }
}

ParsedStream parse_stream(std::istream& in) {
  ParsedStream out;
  std::string line;
  size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  ++line_no;
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("header is not valid JSON: ") + e.what());
  }
  try {
    if (!h.is_object() || !h.contains("format_version")) throw ParseError(line_no, "missing header");
    out.header.format_version = h.at("format_version").get<int>();
    if (out.header.format_version != 1)
      throw ParseError(line_no, "unsupported format_version " +
                                    std::to_string(out.header.format_version));
    out.header.setting = setting_from_json(h.at("setting"));
    out.header.windowing.window_length_ns = h.at("window_length_ns").get<uint64_t>();
    out.header.windowing.offsets_ns = h.at("window_offsets_ns").get<std::vector<uint64_t>>();
    if (h.at("windows_per_attempt").get<size_t>() != out.header.windowing.offsets_ns.size())
      throw ParseError(line_no, "windows_per_attempt disagrees with window_offsets_ns");
    out.header.attempt_period_ns = h.at("attempt_period_ns").get<uint64_t>();
    out.header.notes = h.value("notes", std::string());
    out.header.windowing.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("bad header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(line_no, std::string("bad header: ") + e.what());
  }

  uint64_t prev_time = 0;
  bool seen_attempt = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("not valid JSON: ") + e.what());
    }
    TimetagEvent ev;
    try {
      std::string kind = j.at("kind").get<std::string>();
      ev.time_ns = j.at("time_ns").get<uint64_t>();
      if (kind == "ATTEMPT_START") {
        ev.kind = EventKind::attempt_start;
      } else if (kind == "DETECTION") {
        ev.kind = EventKind::detection;
        std::string ch = j.at("channel").get<std::string>();
        if (ch == "t")
          ev.channel = 0;
        else if (ch == "r")
          ev.channel = 1;
        else
          throw ParseError(line_no, "channel must be t or r");
      } else if (kind == "ION_RESULT") {
        ev.kind = EventKind::ion_result;
        ev.outcome = IonOutcome::parse(j.at("outcome").get<std::string>());
      } else {
        throw ParseError(line_no, "unknown event kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("bad event: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, std::string("bad event: ") + e.what());
    }
    if (ev.time_ns < prev_time) throw ParseError(line_no, "events are not sorted by time_ns");
    prev_time = ev.time_ns;
    if (ev.kind == EventKind::attempt_start) seen_attempt = true;
    if (ev.kind == EventKind::ion_result && !seen_attempt)
      throw ParseError(line_no, "ION_RESULT before any ATTEMPT_START");
    out.events.push_back(ev);
  }
  return out;
}

ParsedStream parse_stream_file(const std::string& path) {
  std::string data;
  {
    // gzFile reads plain files transparently as well
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path);
    char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) data.append(buf, static_cast<size_t>(n));
    bool bad = n < 0;
    gzclose(f);
    if (bad) throw std::runtime_error("decompression failed for " + path);
  }
  std::istringstream in(data);
  return parse_stream(in);
}

namespace {

struct WindowState {
  bool has_t = false, has_r = false;
  uint64_t first_t = 0, first_r = 0;
};

// window classification and coincidence accounting for one finished attempt
void finish_attempt(CountTable& table, const std::vector<WindowState>& windows, bool have_ion,
                    const IonOutcome& ion) {
  int pattern = 0;
  bool all_filled = true;
  for (const WindowState& w : windows) {
    int channel;
    if (w.has_t && w.has_r) {
      ++table.ambiguous_windows;
      channel = (w.first_t <= w.first_r) ? 0 : 1;   // earliest click decides
    } else if (w.has_t) {
      channel = 0;
    } else if (w.has_r) {
      channel = 1;
    } else {
      all_filled = false;
      continue;
    }
    if (channel == 0)
      ++table.singles_t;
    else
      ++table.singles_r;
    pattern = (pattern << 1) | channel;
  }
  if (all_filled) {
    if (have_ion)
      ++table.counts[ion.index()][pattern];
    else
      ++table.coincidence_no_ion;
  } else if (have_ion) {
    ++table.ion_no_coincidence;
  }
}

} // namespace

CountTable extract_coincidences(const std::vector<TimetagEvent>& events,
                                const StreamHeader& header) {
  header.windowing.validate();
  CountTable table;
  table.setting = header.setting;
  const auto& offs = header.windowing.offsets_ns;
  const uint64_t wlen = header.windowing.window_length_ns;

  std::vector<WindowState> windows(offs.size());
  bool in_attempt = false;
  uint64_t attempt_t0 = 0;
  bool have_ion = false;
  IonOutcome ion;

  auto flush = [&]() {
    if (in_attempt) finish_attempt(table, windows, have_ion, ion);
    for (WindowState& w : windows) w = WindowState{};
    have_ion = false;
  };

  for (const TimetagEvent& e : events) {
    switch (e.kind) {
      case EventKind::attempt_start:
        flush();
        in_attempt = true;
        attempt_t0 = e.time_ns;
        ++table.attempts;
        break;
      case EventKind::detection: {
        if (!in_attempt) break;   // clicks before the first attempt are ignored
        uint64_t dt = e.time_ns - attempt_t0;
        for (size_t w = 0; w < offs.size(); ++w) {
          if (dt >= offs[w] && dt < offs[w] + wlen) {
            WindowState& ws = windows[w];
            if (e.channel == 0) {
              if (!ws.has_t) ws.first_t = e.time_ns;
              ws.has_t = true;
            } else {
              if (!ws.has_r) ws.first_r = e.time_ns;
              ws.has_r = true;
            }
            break;
          }
        }
        break;
      }
      case EventKind::ion_result:
        if (!in_attempt) break;
        if (have_ion) ++table.ion_no_coincidence;   // surplus readouts are tallied
        have_ion = true;
        ion = e.outcome;
        break;
    }
  }
  flush();
  return table;
}

CountTable extract_coincidences(const ParsedStream& stream) {
  return extract_coincidences(stream.events, stream.header);
}

SynthesisResult synthesize_stream(std::ostream& out, const ConditionalStateSet& states,
                                  const SynthesisSpec& spec) {
  if (spec.attempts == 0) throw std::invalid_argument("attempts must be positive");
  spec.windowing.validate();
  const size_t n_windows = spec.windowing.offsets_ns.size();
  if (n_windows != 3) throw std::invalid_argument("the sampler expects three windows per attempt");
  uint64_t span = spec.windowing.offsets_ns.back() + spec.windowing.window_length_ns;
  if (spec.attempt_period_ns <= span + 1000)
    throw std::invalid_argument("attempt period too short for the windows and readout");

  // per-outcome port distributions at this setting
  std::array<double, 8> branch_prob{};
  std::array<PortDistribution, 8> ports;
  for (int o = 0; o < 8; ++o) {
    const ConditionalBranch& br = states.branches[o];
    branch_prob[o] = br.probability;
    if (br.defined)
      ports[o] = port_distribution(*br.state, spec.setting, DetectorModel::balanced());
  }

  StreamHeader header;
  header.setting = spec.setting;
  header.windowing = spec.windowing;
  header.attempt_period_ns = spec.attempt_period_ns;
  header.notes = spec.notes;

  write_stream(out, header, {});   // header only; events appended below
  char buf[128];
  auto emit = [&](const TimetagEvent& e) {
    switch (e.kind) {
      case EventKind::attempt_start:
        std::snprintf(buf, sizeof buf, "{\"kind\":\"ATTEMPT_START\",\"time_ns\":%" PRIu64 "}",
                      e.time_ns);
        break;
      case EventKind::detection:
        std::snprintf(buf, sizeof buf,
                      "{\"kind\":\"DETECTION\",\"time_ns\":%" PRIu64 ",\"channel\":\"%c\"}",
                      e.time_ns, e.channel ? 'r' : 't');
        break;
      case EventKind::ion_result:
        std::snprintf(buf, sizeof buf,
                      "{\"kind\":\"ION_RESULT\",\"time_ns\":%" PRIu64 ",\"outcome\":\"%s\"}",
                      e.time_ns, e.outcome.str().c_str());
        break;
    }
    out << buf << '\n';
  };

  Rng rng(spec.seed);
  SynthesisResult result;
  result.ground_truth.setting = spec.setting;
  CountTable& gt = result.ground_truth;
  const double dark_mean =
      spec.dark_rate_hz * static_cast<double>(spec.windowing.window_length_ns) * 1e-9;

  for (uint64_t a = 0; a < spec.attempts; ++a) {
    uint64_t t0 = a * spec.attempt_period_ns;
    ++gt.attempts;
    emit({EventKind::attempt_start, t0, 0, {}});

    int outcome = static_cast<int>(rng.categorical(branch_prob));
    int pattern = static_cast<int>(rng.categorical(ports[outcome].born));

    std::vector<TimetagEvent> clicks;
    bool all_detected = true;
    for (int w = 0; w < 3; ++w) {
      bool refl = (pattern >> (2 - w)) & 1;
      double eta = spec.photon_efficiency[w] * (refl ? spec.det.eta_r : spec.det.eta_t);
      bool detected = rng.uniform() < eta;
      uint64_t jitter = rng.below(spec.windowing.window_length_ns);
      if (detected) {
        clicks.push_back({EventKind::detection, t0 + spec.windowing.offsets_ns[w] + jitter,
                          refl ? 1 : 0, {}});
        if (refl)
          ++gt.singles_r;
        else
          ++gt.singles_t;
      } else {
        all_detected = false;
      }
    }
    if (dark_mean > 0.0) {
      for (int w = 0; w < 3; ++w)
        for (int ch = 0; ch < 2; ++ch) {
          uint64_t n = rng.poisson(dark_mean);
          for (uint64_t k = 0; k < n; ++k)
            clicks.push_back({EventKind::detection,
                              t0 + spec.windowing.offsets_ns[w] +
                                  rng.below(spec.windowing.window_length_ns),
                              ch, {}});
        }
    }
    std::stable_sort(clicks.begin(), clicks.end(),
                     [](const TimetagEvent& x, const TimetagEvent& y) { return x.time_ns < y.time_ns; });
    for (const TimetagEvent& c : clicks) emit(c);

    if (all_detected) {
      IonOutcome ion = IonOutcome::from_index(outcome);
      emit({EventKind::ion_result, t0 + span + 500, 0, ion});
      ++gt.counts[outcome][pattern];
    }
  }
  return result;
}

void write_count_table_csv(std::ostream& out, const CountTable& table) {
  out << "# attempts=" << table.attempts << "\n";
  out << "# singles_t=" << table.singles_t << " singles_r=" << table.singles_r << "\n";
  out << "# ambiguous_windows=" << table.ambiguous_windows
      << " coincidence_no_ion=" << table.coincidence_no_ion
      << " ion_no_coincidence=" << table.ion_no_coincidence << "\n";
  out << "# setting phi_deg=" << table.setting.phi_deg << " varphi_deg=" << table.setting.varphi_deg
      << " label=" << table.setting.label << "\n";
  out << "lmn,opq,count\n";
  for (int o = 0; o < 8; ++o)
    for (int p = 0; p < 8; ++p)
      out << IonOutcome::from_index(o).str() << ',' << port_pattern_string(p) << ','
          << table.counts[o][p] << "\n";
}

CountTable read_count_table_csv(std::istream& in) {
  CountTable table;
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tok;
      while (ls >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        try {
          if (key == "attempts") table.attempts = std::stoull(val);
          else if (key == "singles_t") table.singles_t = std::stoull(val);
          else if (key == "singles_r") table.singles_r = std::stoull(val);
          else if (key == "ambiguous_windows") table.ambiguous_windows = std::stoull(val);
          else if (key == "coincidence_no_ion") table.coincidence_no_ion = std::stoull(val);
          else if (key == "ion_no_coincidence") table.ion_no_coincidence = std::stoull(val);
          else if (key == "phi_deg") table.setting.phi_deg = std::stod(val);
          else if (key == "varphi_deg") table.setting.varphi_deg = std::stod(val);
          else if (key == "label") table.setting.label = val;
        } catch (const std::exception&) {
          throw ParseError(line_no, "bad metadata value in '" + tok + "'");
        }
      }
      continue;
    }
    if (!header_seen) {
      if (line != "lmn,opq,count") throw ParseError(line_no, "expected column header lmn,opq,count");
      header_seen = true;
      continue;
    }
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ParseError(line_no, "expected lmn,opq,count");
    try {
      IonOutcome o = IonOutcome::parse(line.substr(0, c1));
      int p = port_pattern_index(line.substr(c1 + 1, c2 - c1 - 1));
      table.counts[o.index()][p] = std::stoull(line.substr(c2 + 1));
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!header_seen) throw ParseError(line_no ? line_no : 1, "missing column header");
  return table;
}

} // namespace ghzsim
