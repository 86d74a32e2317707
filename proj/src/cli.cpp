#include "ghzsim/cli.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ghzsim/estimation.hpp"
#include "ghzsim/optics.hpp"
#include "ghzsim/protocol.hpp"
#include "ghzsim/rates.hpp"
#include "ghzsim/report.hpp"
#include "ghzsim/rng.hpp"
#include "ghzsim/timetags.hpp"

namespace ghzsim {

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;

struct CliError {
  int code;
  std::string message;
};

struct RunConfig {
  std::string source_kind = "ideal";
  double werner_p = 0.92;
  std::vector<std::string> pair_files;
  std::vector<MeasurementSetting> settings = default_settings();
  DetectorModel det = DetectorModel::balanced();
  std::array<double, 3> photon_efficiency = {1.0, 1.0, 1.0};
  std::uint64_t attempts = 100000;
  std::optional<std::uint64_t> seed;
  AttemptWindowing windowing{};
  std::uint64_t attempt_period_ns = 200000;
  double dark_rate_hz = 0.0;
  std::string out_dir = "out";
};

nlohmann::json load_json_file(const std::string& path, int parse_error_code) {
  std::ifstream in(path);
  if (!in) throw CliError{kConfigError, "cannot open " + path};
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw CliError{parse_error_code, path + ": " + e.what()};
  }
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    if (j.contains("source")) {
      const auto& s = j.at("source");
      cfg.source_kind = s.value("kind", "ideal");
      if (s.contains("p")) cfg.werner_p = s.at("p").get<double>();
      if (s.contains("files")) cfg.pair_files = s.at("files").get<std::vector<std::string>>();
    }
    if (j.contains("settings")) {
      cfg.settings.clear();
      size_t i = 0;
      for (const auto& e : j.at("settings")) {
        MeasurementSetting ms;
        ms.phi_deg = e.at("phi_deg").get<double>();
        ms.varphi_deg = e.at("varphi_deg").get<double>();
        ms.label = e.value("label", "setting" + std::to_string(i));
        cfg.settings.push_back(ms);
        ++i;
      }
    }
    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      if (d.contains("beta"))
        cfg.det = DetectorModel::from_beta(d.at("beta").get<double>());
      else
        cfg.det = DetectorModel::from_efficiencies(d.at("eta_t").get<double>(),
                                                   d.at("eta_r").get<double>());
    }
    if (j.contains("photon_efficiency")) {
      const auto eff = j.at("photon_efficiency").get<std::vector<double>>();
      if (eff.size() != 3) throw std::invalid_argument("photon_efficiency needs 3 entries");
      std::copy(eff.begin(), eff.end(), cfg.photon_efficiency.begin());
    }
    if (j.contains("attempts")) cfg.attempts = j.at("attempts").get<std::uint64_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("windowing")) {
      const auto& w = j.at("windowing");
      if (w.contains("window_length_ns"))
        cfg.windowing.window_length_ns = w.at("window_length_ns").get<std::uint64_t>();
      if (w.contains("offsets_ns"))
        cfg.windowing.offsets_ns = w.at("offsets_ns").get<std::vector<std::uint64_t>>();
    }
    if (j.contains("attempt_period_ns"))
      cfg.attempt_period_ns = j.at("attempt_period_ns").get<std::uint64_t>();
    if (j.contains("dark_rate_hz")) cfg.dark_rate_hz = j.at("dark_rate_hz").get<double>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    throw CliError{kConfigError, std::string("config: ") + e.what()};
  }
  return cfg;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["source"]["kind"] = cfg.source_kind;
  if (cfg.source_kind == "werner") j["source"]["p"] = cfg.werner_p;
  if (cfg.source_kind == "measured") j["source"]["files"] = cfg.pair_files;
  nlohmann::json settings = nlohmann::json::array();
  for (const auto& s : cfg.settings)
    settings.push_back(nlohmann::json{
        {"label", s.label}, {"phi_deg", s.phi_deg}, {"varphi_deg", s.varphi_deg}});
  j["settings"] = settings;
  j["detector"] = nlohmann::json{{"eta_t", cfg.det.eta_t}, {"eta_r", cfg.det.eta_r}};
  j["photon_efficiency"] = cfg.photon_efficiency;
  j["attempts"] = cfg.attempts;
  if (cfg.seed) j["seed"] = *cfg.seed;
  j["windowing"] = nlohmann::json{{"window_length_ns", cfg.windowing.window_length_ns},
                                  {"offsets_ns", cfg.windowing.offsets_ns}};
  j["attempt_period_ns"] = cfg.attempt_period_ns;
  j["dark_rate_hz"] = cfg.dark_rate_hz;
  j["out_dir"] = cfg.out_dir;
  return j;
}

void validate_labels(const std::vector<MeasurementSetting>& settings) {
  std::vector<std::string> seen;
  for (const auto& s : settings) {
    if (s.label.empty()) throw CliError{kConfigError, "every setting needs a label"};
    for (char c : s.label)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
        throw CliError{kConfigError, "setting label '" + s.label + "' is not filename-safe"};
    if (std::find(seen.begin(), seen.end(), s.label) != seen.end())
      throw CliError{kConfigError, "duplicate setting label '" + s.label + "'"};
    seen.push_back(s.label);
  }
}

ConditionalStateSet build_states(const RunConfig& cfg) {
  if (cfg.source_kind == "ideal") {
    const DensityMatrix bell = make_bell();
    return ghz_projection_table(bell, bell, bell);
  }
  if (cfg.source_kind == "werner") {
    if (!(cfg.werner_p >= 0.0 && cfg.werner_p <= 1.0))
      throw CliError{kConfigError, "werner p must be in [0, 1]"};
    const DensityMatrix w = make_werner(cfg.werner_p);
    return ghz_projection_table(w, w, w);
  }
  if (cfg.source_kind == "measured") {
    if (cfg.pair_files.size() != 3)
      throw CliError{kConfigError, "measured source needs exactly 3 matrix files"};
    std::vector<DensityMatrix> pairs;
    for (const auto& path : cfg.pair_files) {
      const nlohmann::json j = load_json_file(path, kDataError);
      try {
        pairs.push_back(make_ion_photon(j));
      } catch (const std::exception& e) {
        throw CliError{kDataError, path + ": " + e.what()};
      }
    }
    return ghz_projection_table(pairs[0], pairs[1], pairs[2]);
  }
  throw CliError{kConfigError, "unknown source kind '" + cfg.source_kind + "'"};
}

std::filesystem::path ensure_out_dir(const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw CliError{kConfigError, "cannot create output directory " + dir.string()};
  return dir;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{kDataError, "cannot open " + path.string() + " for writing"};
  out << content;
  out.flush();
  if (!out) throw CliError{kDataError, "write failed: " + path.string()};
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

int cmd_simulate(const RunConfig& cfg) {
  validate_labels(cfg.settings);
  const ConditionalStateSet states = build_states(cfg);
  const Predictions pred = predict(states, cfg.settings);
  const auto dir = ensure_out_dir(cfg.out_dir);
  write_json_file(dir / "conditional_states.json", conditional_set_to_json(states));
  write_json_file(dir / "predictions.json", predictions_to_json(pred));
  std::cout << "wrote " << (dir / "conditional_states.json").string() << " and "
            << (dir / "predictions.json").string() << "\n";
  for (const auto& p : pred.outcomes) {
    std::cout << "  " << p.outcome.str() << " -> " << p.label.str()
              << "  p=" << p.branch_probability;
    if (p.defined)
      std::cout << "  F=" << p.fidelity << "  C=" << p.contrast << "  bound=" << p.bound;
    std::cout << "\n";
  }
  return kOk;
}

int cmd_synthesize(const RunConfig& cfg) {
  if (!cfg.seed)
    throw CliError{kConfigError, "synthesize requires a seed (--seed or config \"seed\")"};
  if (cfg.attempts == 0) throw CliError{kConfigError, "attempts must be > 0"};
  if (cfg.settings.empty()) throw CliError{kConfigError, "no settings configured"};
  validate_labels(cfg.settings);
  try {
    cfg.windowing.validate();
  } catch (const std::exception& e) {
    throw CliError{kConfigError, e.what()};
  }
  if (cfg.windowing.offsets_ns.size() != 3)
    throw CliError{kConfigError, "the sampler expects three windows per attempt"};
  if (cfg.attempt_period_ns <=
      cfg.windowing.offsets_ns.back() + cfg.windowing.window_length_ns + 1000)
    throw CliError{kConfigError, "attempt period too short for the windows and readout"};
  for (double e : cfg.photon_efficiency)
    if (!(e >= 0.0 && e <= 1.0))
      throw CliError{kConfigError, "photon efficiencies must be in [0, 1]"};
  if (cfg.dark_rate_hz < 0.0) throw CliError{kConfigError, "dark rate must be nonnegative"};

  const ConditionalStateSet states = build_states(cfg);
  const auto dir = ensure_out_dir(cfg.out_dir);

  struct SettingJob {
    SynthesisSpec spec;
    std::filesystem::path stream_path;
    std::filesystem::path counts_path;
  };
  std::vector<SettingJob> jobs;
  for (size_t i = 0; i < cfg.settings.size(); ++i) {
    SettingJob job;
    job.spec.setting = cfg.settings[i];
    job.spec.det = cfg.det;
    job.spec.photon_efficiency = cfg.photon_efficiency;
    job.spec.attempts = cfg.attempts;
    job.spec.seed = splitmix64(splitmix64(*cfg.seed) ^ (i + 1));
    job.spec.windowing = cfg.windowing;
    job.spec.attempt_period_ns = cfg.attempt_period_ns;
    job.spec.dark_rate_hz = cfg.dark_rate_hz;
    job.stream_path = dir / ("timetags_" + cfg.settings[i].label + ".jsonl");
    job.counts_path = dir / ("counts_" + cfg.settings[i].label + ".csv");
    jobs.push_back(std::move(job));
  }

  std::vector<std::future<CountTable>> futures;
  futures.reserve(jobs.size());
  for (const SettingJob& job : jobs) {
    futures.push_back(std::async(std::launch::async, [&states, &job]() {
      std::ofstream out(job.stream_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + job.stream_path.string());
      const SynthesisResult res = synthesize_stream(out, states, job.spec);
      out.flush();
      if (!out) throw std::runtime_error("write failed: " + job.stream_path.string());
      std::ofstream csv(job.counts_path, std::ios::binary);
      if (!csv) throw std::runtime_error("cannot open " + job.counts_path.string());
      write_count_table_csv(csv, res.ground_truth);
      csv.flush();
      if (!csv) throw std::runtime_error("write failed: " + job.counts_path.string());
      return res.ground_truth;
    }));
  }
  std::vector<CountTable> truths;
  std::string failure;
  for (auto& f : futures) {
    try {
      truths.push_back(f.get());
    } catch (const std::exception& e) {
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw CliError{kDataError, failure};

  nlohmann::json run = config_to_json(cfg);
  nlohmann::json outputs = nlohmann::json::array();
  for (size_t i = 0; i < jobs.size(); ++i)
    outputs.push_back(nlohmann::json{{"setting", cfg.settings[i].label},
                                     {"stream", jobs[i].stream_path.filename().string()},
                                     {"counts", jobs[i].counts_path.filename().string()},
                                     {"stream_seed", jobs[i].spec.seed}});
  run["outputs"] = outputs;
  write_json_file(dir / "run.json", run);

  {
    std::ofstream log(dir / "run.log", std::ios::app);
    const std::time_t now = std::time(nullptr);
    char stamp[64];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    log << stamp << " synthesize attempts=" << cfg.attempts << " seed=" << *cfg.seed << "\n";
    for (size_t i = 0; i < jobs.size(); ++i)
      log << stamp << "   " << jobs[i].stream_path.filename().string()
          << " coincidences=" << truths[i].total() << "\n";
  }

  std::uint64_t total = 0;
  for (size_t i = 0; i < truths.size(); ++i) {
    std::cout << "  " << cfg.settings[i].label << ": " << truths[i].total()
              << " coincidences\n";
    total += truths[i].total();
  }
  std::cout << "synthesized " << jobs.size() << " settings x " << cfg.attempts
            << " attempts -> " << total << " coincidences in " << dir.string() << "\n";
  return kOk;
}

int cmd_analyze(const std::vector<std::string>& inputs, std::optional<double> beta,
                double beta_sigma, int resamples, std::uint64_t bootstrap_seed,
                const std::string& out_dir, const std::string& format) {
  if (inputs.empty()) throw CliError{kConfigError, "no input files"};
  std::vector<CountTable> tables;
  for (const auto& path : inputs) {
    if (!std::filesystem::exists(path)) throw CliError{kConfigError, "missing input " + path};
    try {
      if (path.ends_with(".csv")) {
        std::ifstream in(path);
        tables.push_back(read_count_table_csv(in));
      } else {
        tables.push_back(extract_coincidences(parse_stream_file(path)));
      }
    } catch (const std::exception& e) {
      throw CliError{kDataError, path + ": " + e.what()};
    }
  }
  AnalysisOptions opt;
  if (beta) opt.external_beta = Uncertain{*beta, beta_sigma};
  opt.bootstrap.resamples = resamples;
  opt.bootstrap.seed = bootstrap_seed;
  AnalysisReport report;
  try {
    report = analyze(tables, opt);
  } catch (const std::exception& e) {
    throw CliError{kDataError, e.what()};
  }
  if (!out_dir.empty()) {
    const auto dir = ensure_out_dir(out_dir);
    write_json_file(dir / "report.json", report_to_json(report));
    write_text_file(dir / "report.txt", report_to_text(report));
    write_text_file(dir / "report.csv", report_to_csv(report));
  }
  if (format == "json")
    std::cout << report_to_json(report).dump(2) << "\n";
  else if (format == "csv")
    std::cout << report_to_csv(report);
  else
    std::cout << report_to_text(report);
  return kOk;
}

int cmd_rates(const std::vector<int>& links, const std::vector<double>& probs,
              std::optional<int> cutoff, std::uint64_t trials, std::uint64_t seed,
              const std::string& out_file) {
  if (links.empty() || probs.empty())
    throw CliError{kConfigError, "need at least one link count and one probability"};
  std::ostringstream os;
  os << std::setprecision(12);
  os << "n,p,factory,direct,sequential";
  if (trials > 0) os << ",mc_mean,mc_sigma_mean";
  os << "\n";
  std::uint64_t row = 0;
  for (int n : links) {
    for (double p : probs) {
      LinkModel model{n, p, std::nullopt};
      try {
        model.validate();
      } catch (const std::exception& e) {
        throw CliError{kConfigError, e.what()};
      }
      os << n << ',' << p << ',' << expected_attempts_factory(model) << ','
         << expected_attempts_direct(model) << ',' << expected_attempts_sequential(model);
      if (trials > 0) {
        LinkModel mc = model;
        mc.memory_cutoff_rounds = cutoff;
        const RateSummary s =
            simulate_rates(mc, trials, splitmix64(splitmix64(seed) ^ (row + 1)));
        os << ',' << s.mean << ',' << s.stddev / std::sqrt(static_cast<double>(s.trials));
      }
      os << "\n";
      ++row;
    }
  }
  if (out_file.empty())
    std::cout << os.str();
  else
    write_text_file(out_file, os.str());
  return kOk;
}

int cmd_report(const std::string& analysis_path, const std::string& predictions_path,
               const std::string& format, const std::string& out_file) {
  const nlohmann::json aj = load_json_file(analysis_path, kDataError);
  AnalysisReport report;
  try {
    report = report_from_json(aj);
  } catch (const std::exception& e) {
    throw CliError{kDataError, analysis_path + ": " + e.what()};
  }
  std::string text;
  if (format == "json")
    text = report_to_json(report).dump(2) + "\n";
  else if (format == "csv")
    text = report_to_csv(report);
  else
    text = report_to_text(report);
  if (!predictions_path.empty()) {
    const nlohmann::json pj = load_json_file(predictions_path, kDataError);
    Predictions pred;
    try {
      pred = predictions_from_json(pj);
    } catch (const std::exception& e) {
      throw CliError{kDataError, predictions_path + ": " + e.what()};
    }
    if (format == "text" || format.empty()) text += "\n" + comparison_to_text(report, pred);
  }
  if (out_file.empty())
    std::cout << text;
  else
    write_text_file(out_file, text);
  return kOk;
}

} // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"three-photon GHZ factory node: simulation, synthetic timetags, estimation"};
  app.require_subcommand(1);

  // --- simulate
  auto* sim = app.add_subcommand("simulate",
                                 "compute conditional photon states and model predictions");
  std::string sim_config, sim_source, sim_out;
  double sim_wp = 0.92;
  std::vector<std::string> sim_pairs;
  auto* sim_opt_config = sim->add_option("--config", sim_config, "JSON run configuration");
  auto* sim_opt_source =
      sim->add_option("--source", sim_source, "state source: ideal | werner | measured");
  auto* sim_opt_wp = sim->add_option("--werner-p", sim_wp, "werner mixing parameter");
  auto* sim_opt_pairs =
      sim->add_option("--pair", sim_pairs, "ion-photon matrix JSON (three, for measured)");
  auto* sim_opt_out = sim->add_option("--out", sim_out, "output directory");

  // --- synthesize
  auto* syn = app.add_subcommand("synthesize", "sample timetag streams, one per setting");
  std::string syn_config, syn_source, syn_out;
  double syn_wp = 0.92, syn_beta = 1.0, syn_eta_t = 1.0, syn_eta_r = 1.0, syn_dark = 0.0;
  std::vector<std::string> syn_pairs;
  std::vector<double> syn_eff;
  std::uint64_t syn_attempts = 0, syn_seed = 0, syn_window = 0, syn_period = 0;
  auto* syn_opt_config = syn->add_option("--config", syn_config, "JSON run configuration");
  auto* syn_opt_source =
      syn->add_option("--source", syn_source, "state source: ideal | werner | measured");
  auto* syn_opt_wp = syn->add_option("--werner-p", syn_wp, "werner mixing parameter");
  auto* syn_opt_pairs =
      syn->add_option("--pair", syn_pairs, "ion-photon matrix JSON (three, for measured)");
  auto* syn_opt_attempts = syn->add_option("--attempts", syn_attempts, "attempts per setting");
  auto* syn_opt_seed = syn->add_option("--seed", syn_seed, "master RNG seed (required)");
  auto* syn_opt_beta =
      syn->add_option("--beta", syn_beta, "detector imbalance eta_r/eta_t (max scaled to 1)");
  auto* syn_opt_eta_t = syn->add_option("--eta-t", syn_eta_t, "transmitted-port efficiency");
  auto* syn_opt_eta_r = syn->add_option("--eta-r", syn_eta_r, "reflected-port efficiency");
  auto* syn_opt_eff = syn->add_option("--efficiency", syn_eff,
                                      "per-photon channel efficiencies (three values)");
  auto* syn_opt_dark = syn->add_option("--dark-rate-hz", syn_dark, "dark counts per detector");
  auto* syn_opt_window = syn->add_option("--window-ns", syn_window, "detection window length");
  auto* syn_opt_period = syn->add_option("--period-ns", syn_period, "attempt period");
  auto* syn_opt_out = syn->add_option("--out", syn_out, "output directory");

  // --- analyze
  auto* ana = app.add_subcommand("analyze", "extract coincidences and estimate the report");
  std::vector<std::string> ana_inputs;
  double ana_beta = 0.0, ana_beta_sigma = 0.0;
  int ana_resamples = 1000;
  std::uint64_t ana_bseed = 20240913;
  std::string ana_out, ana_format = "text";
  ana->add_option("--input", ana_inputs, "timetag .jsonl[.gz] or count-table .csv files")
      ->required();
  auto* ana_opt_beta =
      ana->add_option("--beta", ana_beta, "externally calibrated beta (skips estimation)");
  ana->add_option("--beta-sigma", ana_beta_sigma, "sigma of the external beta");
  ana->add_option("--resamples", ana_resamples, "bootstrap resamples");
  ana->add_option("--bootstrap-seed", ana_bseed, "bootstrap RNG seed");
  ana->add_option("--out", ana_out, "directory for report.json/.txt/.csv");
  ana->add_option("--format", ana_format, "stdout format: text | json | csv");

  // --- rates
  auto* rat = app.add_subcommand("rates", "expected attempts: closed forms and Monte Carlo");
  std::vector<int> rat_links{3};
  std::vector<double> rat_probs;
  int rat_cutoff = 0;
  std::uint64_t rat_trials = 0, rat_seed = 1;
  std::string rat_out;
  rat->add_option("--links", rat_links, "link counts n");
  rat->add_option("--prob", rat_probs, "per-attempt success probabilities p")->required();
  auto* rat_opt_cutoff =
      rat->add_option("--cutoff", rat_cutoff, "memory cutoff in rounds (Monte Carlo only)");
  rat->add_option("--trials", rat_trials, "Monte Carlo trials per row (0 = closed forms only)");
  rat->add_option("--seed", rat_seed, "Monte Carlo seed");
  rat->add_option("--out", rat_out, "CSV output file (default stdout)");

  // --- report
  auto* rep = app.add_subcommand("report", "render a saved analysis, optionally vs predictions");
  std::string rep_analysis, rep_pred, rep_format = "text", rep_out;
  rep->add_option("--analysis", rep_analysis, "report.json from analyze")->required();
  rep->add_option("--predictions", rep_pred, "predictions.json from simulate");
  rep->add_option("--format", rep_format, "text | json | csv");
  rep->add_option("--out", rep_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*sim || *syn) {
      const bool is_sim = static_cast<bool>(*sim);
      const std::string& config_path = is_sim ? sim_config : syn_config;
      RunConfig cfg;
      if ((is_sim ? sim_opt_config : syn_opt_config)->count())
        cfg = config_from_json(load_json_file(config_path, kConfigError));
      if (is_sim) {
        if (sim_opt_source->count()) cfg.source_kind = sim_source;
        if (sim_opt_wp->count()) {
          cfg.werner_p = sim_wp;
          if (!sim_opt_source->count() && cfg.source_kind == "ideal") cfg.source_kind = "werner";
        }
        if (sim_opt_pairs->count()) cfg.pair_files = sim_pairs;
        if (sim_opt_out->count()) cfg.out_dir = sim_out;
        return cmd_simulate(cfg);
      }
      if (syn_opt_source->count()) cfg.source_kind = syn_source;
      if (syn_opt_wp->count()) {
        cfg.werner_p = syn_wp;
        if (!syn_opt_source->count() && cfg.source_kind == "ideal") cfg.source_kind = "werner";
      }
      if (syn_opt_pairs->count()) cfg.pair_files = syn_pairs;
      if (syn_opt_attempts->count()) cfg.attempts = syn_attempts;
      if (syn_opt_seed->count()) cfg.seed = syn_seed;
      if (syn_opt_beta->count()) {
        if (syn_opt_eta_t->count() || syn_opt_eta_r->count())
          throw CliError{kConfigError, "--beta conflicts with --eta-t/--eta-r"};
        try {
          cfg.det = DetectorModel::from_beta(syn_beta);
        } catch (const std::exception& e) {
          throw CliError{kConfigError, e.what()};
        }
      } else if (syn_opt_eta_t->count() || syn_opt_eta_r->count()) {
        if (!(syn_opt_eta_t->count() && syn_opt_eta_r->count()))
          throw CliError{kConfigError, "--eta-t and --eta-r must be given together"};
        try {
          cfg.det = DetectorModel::from_efficiencies(syn_eta_t, syn_eta_r);
        } catch (const std::exception& e) {
          throw CliError{kConfigError, e.what()};
        }
      }
      if (syn_opt_eff->count()) {
        if (syn_eff.size() != 3)
          throw CliError{kConfigError, "--efficiency needs exactly three values"};
        std::copy(syn_eff.begin(), syn_eff.end(), cfg.photon_efficiency.begin());
      }
      if (syn_opt_dark->count()) cfg.dark_rate_hz = syn_dark;
      if (syn_opt_window->count()) cfg.windowing.window_length_ns = syn_window;
      if (syn_opt_period->count()) cfg.attempt_period_ns = syn_period;
      if (syn_opt_out->count()) cfg.out_dir = syn_out;
      return cmd_synthesize(cfg);
    }
    if (*ana) {
      std::optional<double> beta;
      if (ana_opt_beta->count()) beta = ana_beta;
      return cmd_analyze(ana_inputs, beta, ana_beta_sigma, ana_resamples, ana_bseed, ana_out,
                         ana_format);
    }
    if (*rat) {
      std::optional<int> cutoff;
      if (rat_opt_cutoff->count()) cutoff = rat_cutoff;
      return cmd_rates(rat_links, rat_probs, cutoff, rat_trials, rat_seed, rat_out);
    }
    if (*rep) return cmd_report(rep_analysis, rep_pred, rep_format, rep_out);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}

} // namespace ghzsim
