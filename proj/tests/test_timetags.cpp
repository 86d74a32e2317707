#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ghzsim/protocol.hpp"
#include "ghzsim/timetags.hpp"

using namespace ghzsim;

namespace {

StreamHeader test_header() {
  StreamHeader h;
  h.setting = {0.0, 45.0, "logical_plus"};
  h.windowing.window_length_ns = 100;
  h.windowing.offsets_ns = {0, 200, 400};
  h.attempt_period_ns = 2000;
  h.notes = "unit test";
  return h;
}

TimetagEvent start(uint64_t t) { return {EventKind::attempt_start, t, 0, {}}; }
TimetagEvent click(uint64_t t, int ch) { return {EventKind::detection, t, ch, {}}; }
TimetagEvent ion(uint64_t t, const std::string& o) {
  return {EventKind::ion_result, t, 0, IonOutcome::parse(o)};
}

std::string render(const StreamHeader& h, const std::vector<TimetagEvent>& ev) {
  std::ostringstream os;
  write_stream(os, h, ev);
  return os.str();
}

CountTable extract_text(const std::string& text) {
  std::istringstream in(text);
  return extract_coincidences(parse_stream(in));
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("streams round-trip through write and parse") {
  const StreamHeader h = test_header();
  const std::vector<TimetagEvent> events = {
      start(0), click(10, 0), click(250, 1), click(420, 0), ion(900, "dud"),
      start(2000), click(2005, 1),
  };
  const std::string text = render(h, events);

  std::istringstream in(text);
  const ParsedStream ps = parse_stream(in);
  CHECK(ps.header.setting.label == "logical_plus");
  CHECK(ps.header.setting.varphi_deg == 45.0);
  CHECK(ps.header.windowing.offsets_ns == std::vector<uint64_t>{0, 200, 400});
  CHECK(ps.header.attempt_period_ns == 2000);
  CHECK(ps.header.notes == "unit test");
  REQUIRE(ps.events.size() == events.size());
  for (size_t i = 0; i < events.size(); ++i) {
    CHECK(ps.events[i].kind == events[i].kind);
    CHECK(ps.events[i].time_ns == events[i].time_ns);
  }
  CHECK(ps.events[1].channel == 0);
  CHECK(ps.events[2].channel == 1);
  CHECK(ps.events[4].outcome == IonOutcome::parse("dud"));

  // a second write of the parsed stream is byte-identical
  CHECK(render(ps.header, ps.events) == text);
}

TEST_CASE("gzip-compressed streams parse transparently") {
  const StreamHeader h = test_header();
  const std::string text = render(h, {start(0), click(10, 0), ion(600, "ddd")});

  const auto plain = temp_file("ghzsim_tt_plain.jsonl");
  const auto gz = temp_file("ghzsim_tt_comp.jsonl.gz");
  {
    std::ofstream f(plain);
    f << text;
  }
  {
    gzFile g = gzopen(gz.string().c_str(), "wb");
    REQUIRE(g != nullptr);
    gzwrite(g, text.data(), static_cast<unsigned>(text.size()));
    gzclose(g);
  }
  const ParsedStream a = parse_stream_file(plain.string());
  const ParsedStream b = parse_stream_file(gz.string());
  CHECK(a.events.size() == 3);
  CHECK(b.events.size() == 3);
  CHECK(b.events[2].outcome == IonOutcome::parse("ddd"));
  std::filesystem::remove(plain);
  std::filesystem::remove(gz);

  CHECK_THROWS_AS(parse_stream_file("/nonexistent/stream.jsonl"), std::runtime_error);
}

TEST_CASE("parse errors carry the offending line number") {
  const StreamHeader h = test_header();
  const std::string good = render(h, {start(0), click(10, 0)});

  const auto expect_line = [](const std::string& text, size_t line) {
    std::istringstream in(text);
    try {
      parse_stream(in);
      FAIL_CHECK("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  };

  expect_line("", 1);
  expect_line("not json\n", 1);
  expect_line("{\"format_version\":2}\n", 1);
  expect_line("{\"no_version\":1}\n", 1);
  expect_line(good + "garbage\n", 4);
  expect_line(good + "{\"kind\":\"DETECTION\",\"time_ns\":20,\"channel\":\"x\"}\n", 4);
  expect_line(good + "{\"kind\":\"SOMETHING\",\"time_ns\":20}\n", 4);
  expect_line(good + "{\"kind\":\"DETECTION\",\"time_ns\":20}\n", 4);
  expect_line(good + "{\"kind\":\"ION_RESULT\",\"time_ns\":30,\"outcome\":\"dxu\"}\n", 4);
  // times must be sorted
  expect_line(good + "{\"kind\":\"DETECTION\",\"time_ns\":5,\"channel\":\"t\"}\n", 4);

  // an ion readout cannot precede the first attempt
  std::string early = render(h, {});
  early += "{\"kind\":\"ION_RESULT\",\"time_ns\":5,\"outcome\":\"ddd\"}\n";
  expect_line(early, 2);

  // header with overlapping windows
  StreamHeader bad = test_header();
  bad.windowing.offsets_ns = {0, 50, 400};
  CHECK_THROWS_AS(render(bad, {}), std::invalid_argument);
  std::string mangled = render(h, {});
  const size_t pos = mangled.find("\"window_offsets_ns\":[0,200,400]");
  REQUIRE(pos != std::string::npos);
  mangled.replace(pos, 31, "\"window_offsets_ns\":[0,200]");
  expect_line(mangled, 1);   // windows_per_attempt still says 3
  // blank lines are tolerated
  std::istringstream ok(good + "\n\n");
  CHECK_NOTHROW(parse_stream(ok));
}

TEST_CASE("coincidence extraction classifies windows and tallies the rest") {
  const StreamHeader h = test_header();   // windows [0,100), [200,300), [400,500)

  SUBCASE("a clean triple with a readout lands in the table") {
    // channels t, r, t -> pattern trt = 2; outcome dud = 2
    const CountTable t = extract_text(render(
        h, {start(0), click(50, 0), click(250, 1), click(499, 0), ion(900, "dud")}));
    CHECK(t.attempts == 1);
    CHECK(t.counts[2][2] == 1);
    CHECK(t.total() == 1);
    CHECK(t.singles_t == 2);
    CHECK(t.singles_r == 1);
    CHECK(t.ambiguous_windows == 0);
    CHECK(t.coincidence_no_ion == 0);
    CHECK(t.ion_no_coincidence == 0);
    CHECK(t.outcome_total(2) == 1);
  }

  SUBCASE("both detectors in one window: the earliest click decides") {
    const CountTable t = extract_text(render(
        h, {start(0), click(10, 0), click(20, 1), click(250, 1), click(450, 1), ion(900, "uuu")}));
    CHECK(t.ambiguous_windows == 1);
    CHECK(t.counts[7][port_pattern_index("trr")] == 1);

    const CountTable r = extract_text(render(
        h, {start(0), click(10, 1), click(20, 0), click(250, 1), click(450, 1), ion(900, "uuu")}));
    CHECK(r.counts[7][port_pattern_index("rrr")] == 1);
  }

  SUBCASE("a missing window downgrades the attempt") {
    const CountTable t =
        extract_text(render(h, {start(0), click(50, 0), click(250, 1), ion(900, "ddd")}));
    CHECK(t.total() == 0);
    CHECK(t.ion_no_coincidence == 1);
    CHECK(t.singles_t == 1);
    CHECK(t.singles_r == 1);
  }

  SUBCASE("a triple without a readout is tallied separately") {
    const CountTable t =
        extract_text(render(h, {start(0), click(50, 0), click(250, 0), click(450, 0)}));
    CHECK(t.total() == 0);
    CHECK(t.coincidence_no_ion == 1);
  }

  SUBCASE("clicks outside every window are ignored") {
    const CountTable t = extract_text(render(
        h, {start(0), click(150, 0), click(199, 1), click(550, 0), ion(900, "ddd")}));
    CHECK(t.singles_t + t.singles_r == 0);
    CHECK(t.ion_no_coincidence == 1);
  }

  SUBCASE("window boundaries are half-open") {
    // dt = 100 is outside [0, 100); dt = 200 is inside [200, 300)
    const CountTable t =
        extract_text(render(h, {start(1000), click(1100, 0), click(1200, 0)}));
    CHECK(t.singles_t == 1);
  }

  SUBCASE("surplus ion readouts are tallied, the last one wins") {
    const CountTable t = extract_text(render(
        h,
        {start(0), click(50, 0), click(250, 0), click(450, 0), ion(900, "ddd"), ion(901, "uuu")}));
    CHECK(t.ion_no_coincidence == 1);
    CHECK(t.counts[7][0] == 1);
  }

  SUBCASE("events before the first attempt are dropped") {
    std::string text = render(h, {});
    text += "{\"kind\":\"DETECTION\",\"time_ns\":5,\"channel\":\"t\"}\n";
    text += "{\"kind\":\"ATTEMPT_START\",\"time_ns\":100}\n";
    const CountTable t = extract_text(text);
    CHECK(t.attempts == 1);
    CHECK(t.singles_t == 0);
  }

  SUBCASE("attempts without any activity still count") {
    const CountTable t = extract_text(render(h, {start(0), start(2000), start(4000)}));
    CHECK(t.attempts == 3);
    CHECK(t.total() == 0);
    CHECK(t.ion_no_coincidence == 0);
  }
}

TEST_CASE("the sampler is deterministic in its seed") {
  const DensityMatrix bell = make_bell();
  const ConditionalStateSet states = ghz_projection_table(bell, bell, bell);

  SynthesisSpec spec;
  spec.setting = {5.625, 0.0, "parity_0225"};
  spec.det = DetectorModel::from_beta(1.25);
  spec.photon_efficiency = {0.9, 0.8, 1.0};
  spec.attempts = 500;
  spec.seed = 77;
  spec.windowing.window_length_ns = 100;
  spec.windowing.offsets_ns = {0, 200, 400};
  spec.attempt_period_ns = 2000;

  std::ostringstream a, b, c;
  const SynthesisResult ra = synthesize_stream(a, states, spec);
  const SynthesisResult rb = synthesize_stream(b, states, spec);
  CHECK(a.str() == b.str());
  spec.seed = 78;
  synthesize_stream(c, states, spec);
  CHECK(a.str() != c.str());
  CHECK(ra.ground_truth.counts == rb.ground_truth.counts);
}

TEST_CASE("extraction of a synthesized stream reproduces the ground truth") {
  const DensityMatrix pair = make_werner(0.9);
  const ConditionalStateSet states = ghz_projection_table(pair, pair, pair);

  SynthesisSpec spec;
  spec.det = DetectorModel::from_beta(1.25);
  spec.photon_efficiency = {0.95, 0.9, 0.85};
  spec.attempts = 2000;
  spec.seed = 20240913;
  spec.windowing.window_length_ns = 50000;
  spec.windowing.offsets_ns = {0, 50000, 100000};
  spec.attempt_period_ns = 200000;

  for (const MeasurementSetting& s :
       {MeasurementSetting{0.0, 45.0, "lp"}, MeasurementSetting{16.875, 0.0, "p3"}}) {
    spec.setting = s;
    std::ostringstream os;
    const SynthesisResult res = synthesize_stream(os, states, spec);
    const CountTable got = extract_text(os.str());
    CHECK(got.attempts == spec.attempts);
    CHECK(got.counts == res.ground_truth.counts);
    CHECK(got.singles_t == res.ground_truth.singles_t);
    CHECK(got.singles_r == res.ground_truth.singles_r);
    CHECK(got.ambiguous_windows == 0);
    CHECK(got.coincidence_no_ion == 0);
    // readouts are only written for triples
    CHECK(got.ion_no_coincidence == 0);
    CHECK(got.setting.label == s.label);
  }
}

TEST_CASE("ideal pairs at the logical setting only populate the two target patterns") {
  const DensityMatrix bell = make_bell();
  const ConditionalStateSet states = ghz_projection_table(bell, bell, bell);

  SynthesisSpec spec;
  spec.setting = {0.0, 45.0, "logical_plus"};
  spec.attempts = 1000;
  spec.seed = 5;
  std::ostringstream os;
  synthesize_stream(os, states, spec);
  const CountTable t = extract_text(os.str());
  CHECK(t.total() == spec.attempts);   // unit efficiency: every attempt is a triple

  for (int o = 0; o < 8; ++o) {
    const GhzLabel label = label_for_outcome(IonOutcome::from_index(o));
    const int lo = (label.j() << 1) | label.k();
    const int hi = 4 | ((1 - label.j()) << 1) | (1 - label.k());
    // at (0, +45) the D port transmits, so pattern bits are flipped photon bits
    for (int p = 0; p < 8; ++p) {
      const bool allowed = p == (~lo & 7) || p == (~hi & 7);
      if (!allowed) CHECK(t.counts[o][p] == 0);
    }
  }
}

TEST_CASE("dark counts perturb the stream but not the accounting") {
  const DensityMatrix bell = make_bell();
  const ConditionalStateSet states = ghz_projection_table(bell, bell, bell);

  SynthesisSpec spec;
  spec.setting = {0.0, 45.0, "logical_plus"};
  spec.attempts = 300;
  spec.seed = 9;
  spec.photon_efficiency = {0.5, 0.5, 0.5};
  spec.dark_rate_hz = 2000.0;   // 1e-4 per 50 us window

  std::ostringstream os;
  synthesize_stream(os, states, spec);
  const CountTable t = extract_text(os.str());
  CHECK(t.attempts == spec.attempts);
  // the stream still parses and stays time-sorted by construction
  CHECK(t.total() + t.ion_no_coincidence <= spec.attempts);
}

TEST_CASE("the sampler validates its configuration") {
  const DensityMatrix bell = make_bell();
  const ConditionalStateSet states = ghz_projection_table(bell, bell, bell);
  std::ostringstream os;

  SynthesisSpec spec;
  spec.setting = {0.0, 45.0, "lp"};
  spec.attempts = 0;
  CHECK_THROWS_AS(synthesize_stream(os, states, spec), std::invalid_argument);

  spec.attempts = 10;
  spec.windowing.offsets_ns = {0, 50000};
  CHECK_THROWS_AS(synthesize_stream(os, states, spec), std::invalid_argument);

  spec.windowing.offsets_ns = {0, 50000, 100000};
  spec.attempt_period_ns = 150000;   // no room for the readout after the last window
  CHECK_THROWS_AS(synthesize_stream(os, states, spec), std::invalid_argument);
}

TEST_CASE("count tables round-trip through CSV") {
  const StreamHeader h = test_header();
  CountTable t = extract_text(render(
      h, {start(0), click(50, 0), click(250, 1), click(450, 0), ion(900, "udd"),
          start(2000), click(2050, 1), ion(2900, "uuu")}));
  t.setting = {11.25, 0.0, "parity_0450"};

  std::ostringstream os;
  write_count_table_csv(os, t);
  std::istringstream in(os.str());
  const CountTable back = read_count_table_csv(in);
  CHECK(back.counts == t.counts);
  CHECK(back.attempts == t.attempts);
  CHECK(back.singles_t == t.singles_t);
  CHECK(back.singles_r == t.singles_r);
  CHECK(back.ambiguous_windows == t.ambiguous_windows);
  CHECK(back.coincidence_no_ion == t.coincidence_no_ion);
  CHECK(back.ion_no_coincidence == t.ion_no_coincidence);
  CHECK(back.setting.phi_deg == t.setting.phi_deg);
  CHECK(back.setting.label == "parity_0450");

  std::istringstream empty("");
  CHECK_THROWS_AS(read_count_table_csv(empty), ParseError);
  std::istringstream bad_head("lmn,opq\nddd,ttt,1\n");
  CHECK_THROWS_AS(read_count_table_csv(bad_head), ParseError);
  std::istringstream bad_row("lmn,opq,count\nddd,txt,1\n");
  CHECK_THROWS_AS(read_count_table_csv(bad_row), ParseError);
  std::istringstream bad_count("lmn,opq,count\nddd,ttt,many\n");
  CHECK_THROWS_AS(read_count_table_csv(bad_count), ParseError);
}
