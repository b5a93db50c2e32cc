#include "spectrack/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectrack/detector.hpp"
#include "spectrack/error.hpp"
#include "spectrack/io.hpp"
#include "spectrack/sim/experiments.hpp"
#include "spectrack/spectra.hpp"
#include "spectrack/tracking.hpp"

namespace spectrack::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::size_t bins = kDefaultBins;
  double alpha = kDefaultAlpha;
  std::uint64_t seed = 1;
  std::string out;
  CLI::Option* bins_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

struct SpectrumArgs {
  std::string dump;
  std::uint32_t cls = 0;
};

struct TrackArgs {
  std::string config;
  std::size_t n = kDefaultTrainingPairs;
  std::string dumps;
  std::string export_dir;
};

struct DetectArgs {
  std::string csdd;
  std::string prev;
  std::string next;
  std::string id;
  std::string probe = "D0_test";
};

struct EvaluateArgs {
  std::string csdd;
  std::string manifest;
  std::string label = "all";
  std::string verdicts;
};

struct SimulateArgs {
  int rq = 2;
  std::string config;
  std::string format;
  std::string export_dir;
  std::string verdicts;
};

std::string pair_file(std::size_t row, char side) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "pair-%02zu_%c.dump", row, side);
  return buf;
}

sim::DumpSink export_sink(const std::string& dir) {
  if (dir.empty()) return {};
  fs::create_directories(dir);
  return [dir](const std::string& name, const ActivationDump& dump) {
    io::write_dump(dump, fs::path(dir) / (name + ".dump"));
  };
}

sim::SimConfig load_config(const std::string& path, const Globals& g) {
  sim::SimConfig config = path.empty() ? sim::default_sim_config() : sim::load_sim_config(path);
  if (g.bins_opt->count() > 0) config.bins = g.bins;
  if (g.seed_opt->count() > 0) config.seed = g.seed;
  config.alpha = g.alpha;
  config.validate();
  return config;
}

void require_out(const Globals& g, const char* command) {
  if (g.out.empty()) fail(ErrorKind::InvalidInput, std::string(command) + " needs --out");
}

void print_verdict(std::ostream& out, const DetectionVerdict& v) {
  out << "decision: " << to_string(v.decision) << "\n"
      << "D2M: " << io::format_real(v.mahalanobis_sq) << "\n"
      << "tau: " << io::format_real(v.threshold) << "\n"
      << "alpha: " << io::format_real(v.alpha) << "\n"
      << "probe: " << v.probe_dataset << "\n";
}

int cmd_spectrum(const SpectrumArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const ActivationDump dump = io::read_dump(a.dump);
  const Spectrum s = compute_spectrum(dump, a.cls, g.bins);
  if (s.empty_class) err << "warning: class " << a.cls << " has no records; spectrum is uniform\n";
  for (std::size_t b = 0; b < s.bins.size(); ++b) out << (b ? "," : "") << io::format_real(s.bins[b]);
  out << "\n";
  return kExitOk;
}

int cmd_track(const TrackArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  require_out(g, "track");
  if (a.n < 2) fail(ErrorKind::InvalidInput, "--n must be at least 2");
  Csdd csdd;
  if (!a.dumps.empty()) {
    if (!a.config.empty()) fail(ErrorKind::InvalidInput, "--config and --dumps are mutually exclusive");
    std::vector<std::pair<ActivationDump, ActivationDump>> pairs;
    for (std::size_t i = 1; i <= a.n; ++i) {
      pairs.emplace_back(io::read_dump(fs::path(a.dumps) / pair_file(i, 'a')),
                         io::read_dump(fs::path(a.dumps) / pair_file(i, 'b')));
    }
    csdd = build_csdd_from_dumps(pairs, g.bins, "dump directory " + fs::path(a.dumps).filename().string());
  } else {
    sim::SimConfig config = load_config(a.config, g);
    config.csdd_pairs = a.n;
    csdd = sim::prepare_experiment(config, config.seed, export_sink(a.export_dir)).csdd;
  }
  io::save_csdd(csdd, g.out);
  out << "wrote " << csdd.rows() << "x" << csdd.num_classes() << " CSDD to " << g.out << "\n";
  if (csdd.provenance.find("warning:") != std::string::npos) err << "warning: some CSDD rows recorded warnings\n";
  return kExitOk;
}

int cmd_detect(const DetectArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Csdd csdd = io::load_csdd(a.csdd);
  if (g.bins_opt->count() > 0 && g.bins != csdd.num_bins) {
    fail(ErrorKind::ConfigMismatch, "--bins " + std::to_string(g.bins) + " differs from the CSDD's " +
                                        std::to_string(csdd.num_bins) + " bins");
  }
  const Detector detector(csdd);
  const DetectionVerdict v = detector.detect(io::read_dump(a.prev), io::read_dump(a.next), g.alpha, a.probe);
  for (const auto& w : v.warnings) err << "warning: " << w << "\n";
  print_verdict(out, v);
  if (!g.out.empty()) {
    const std::string id = a.id.empty() ? fs::path(a.next).stem().string() : a.id;
    const std::vector<io::VerdictRecord> records{{id, v}};
    io::write_report(records, g.out, io::report_format_for(g.out));
  }
  return v.decision == Decision::Poisoned ? kExitPoisoned : kExitOk;
}

GroundTruth parse_truth(const std::string& s) {
  if (s == "clean") return GroundTruth::Clean;
  if (s == "trojaned" || s == "poisoned") return GroundTruth::Trojaned;
  fail(ErrorKind::InvalidInput, "manifest truth must be 'clean' or 'trojaned', got '" + s + "'");
}

int cmd_evaluate(const EvaluateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  json doc;
  try {
    doc = json::parse(io::read_text_file(a.manifest));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::InvalidInput, std::string("manifest is not valid JSON: ") + e.what());
  }
  const json& entries = doc.is_object() && doc.contains("models") ? doc.at("models") : doc;
  if (!entries.is_array() || entries.empty()) fail(ErrorKind::InvalidInput, "manifest needs a non-empty model list");

  const fs::path base = fs::path(a.manifest).parent_path();
  auto resolve = [&base](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  const Detector detector(io::load_csdd(a.csdd));
  std::vector<LabeledVerdict> labeled;
  std::vector<io::VerdictRecord> records;
  for (const auto& e : entries) {
    std::string id, prev, next, truth;
    try {
      id = e.at("id").get<std::string>();
      prev = e.at("prev").get<std::string>();
      next = e.at("new").get<std::string>();
      truth = e.at("truth").get<std::string>();
    } catch (const json::exception& ex) {
      fail(ErrorKind::InvalidInput, std::string("manifest entry: ") + ex.what());
    }
    DetectionVerdict v = detector.detect(io::read_dump(resolve(prev)), io::read_dump(resolve(next)), g.alpha);
    for (const auto& w : v.warnings) err << "warning: " << id << ": " << w << "\n";
    labeled.push_back({v, parse_truth(truth)});
    records.push_back({id, std::move(v)});
  }
  const Evaluation ev = evaluate_detector(labeled);
  const std::vector<io::ConfusionRow> rows{{a.label, ev.counts}};
  const json meta = {{"alpha", g.alpha}, {"csdd", fs::path(a.csdd).filename().string()}, {"models", records.size()}};
  out << io::render_confusion_table(rows, io::ReportFormat::Csv);
  if (!g.out.empty()) io::write_report(rows, g.out, io::report_format_for(g.out), meta);
  if (!a.verdicts.empty()) io::write_report(records, a.verdicts, io::report_format_for(a.verdicts));
  return kExitOk;
}

void print_diagnostics(std::ostream& err, const sim::DetectionRun& run) {
  err << "reference accuracy: " << io::format_real(run.reference_accuracy) << "\n"
      << "clean update accuracy: " << io::format_real(run.clean_update_accuracy) << "\n";
  for (const auto& a : run.attacks) {
    err << a.attack << ": clean accuracy " << io::format_real(a.mean_clean_accuracy) << ", attack success "
        << io::format_real(a.mean_attack_success) << "\n";
  }
}

int cmd_simulate(const SimulateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const sim::SimConfig config = load_config(a.config, g);
  io::ReportFormat format = io::ReportFormat::Csv;
  if (!a.format.empty()) format = io::parse_report_format(a.format);
  else if (!g.out.empty()) format = io::report_format_for(g.out);
  if (a.rq == 1 && (!a.export_dir.empty() || !a.verdicts.empty())) {
    fail(ErrorKind::InvalidInput, "--export and --verdicts are only supported for --rq 2 and 3");
  }

  const json meta = sim::report_meta(config, a.rq);
  std::string report;
  if (a.rq == 1) {
    const auto run = sim::run_rq1(config);
    report = io::render_auc_table(run.rows, format, meta);
  } else {
    const auto sink = export_sink(a.export_dir);
    const auto run = a.rq == 2 ? sim::run_rq2(config, sink) : sim::run_rq3(config, sink);
    print_diagnostics(err, run);
    report = io::render_confusion_table(run.rows, format, meta);
    if (!a.verdicts.empty()) {
      std::vector<io::VerdictRecord> records;
      for (const auto& u : run.updates) records.push_back({u.model_id, u.verdict});
      io::write_report(records, a.verdicts, io::report_format_for(a.verdicts));
    }
  }
  if (g.out.empty()) out << report;
  else io::write_file_atomic(g.out, report);
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::ConfigMismatch:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pre-activation spectra tracking and update screening"};
  app.name("spectrack");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  g.bins_opt = app.add_option("--bins", g.bins, "Histogram bins per spectrum")->capture_default_str();
  app.add_option("--alpha", g.alpha, "Confidence level of the chi-square threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  g.seed_opt = app.add_option("--seed", g.seed, "Base seed for every random choice")->capture_default_str();
  app.add_option("--out", g.out, "Output file");

  SpectrumArgs spectrum;
  auto* sp = app.add_subcommand("spectrum", "Print one class spectrum of a dump as CSV");
  sp->add_option("--dump", spectrum.dump, "Dump file")->required();
  sp->add_option("--class", spectrum.cls, "Predicted class")->required();

  TrackArgs track;
  auto* tr = app.add_subcommand("track", "Build a CSDD from simulated or exported clean updates");
  tr->add_option("--config", track.config, "Simulation config (JSON)");
  tr->add_option("--n", track.n, "Training pairs")->capture_default_str();
  tr->add_option("--dumps", track.dumps, "Directory with pair-NN_a.dump / pair-NN_b.dump files");
  tr->add_option("--export", track.export_dir, "Write the simulated pair dumps here");

  DetectArgs detect;
  auto* de = app.add_subcommand("detect", "Judge one update against a CSDD");
  de->add_option("--csdd", detect.csdd, "CSDD file")->required();
  de->add_option("--prev", detect.prev, "Dump of the trusted model")->required();
  de->add_option("--new", detect.next, "Dump of the updated model")->required();
  de->add_option("--id", detect.id, "Model id in the verdict report");
  de->add_option("--probe", detect.probe, "Name of the clean dataset both dumps were taken on")->capture_default_str();

  EvaluateArgs evaluate;
  auto* ev = app.add_subcommand("evaluate", "Judge a manifest of labeled updates and report confusion counts");
  ev->add_option("--csdd", evaluate.csdd, "CSDD file")->required();
  ev->add_option("--manifest", evaluate.manifest, "JSON list of {id, prev, new, truth}")->required();
  ev->add_option("--label", evaluate.label, "Row label in the report")->capture_default_str();
  ev->add_option("--verdicts", evaluate.verdicts, "Also write per-model verdicts here");

  SimulateArgs simulate;
  auto* si = app.add_subcommand("simulate", "Run a desk-scale evaluation protocol");
  si->add_option("--rq", simulate.rq, "Protocol: 1 separability, 2 detection, 3 detection after an extra clean update")
      ->required()
      ->check(CLI::IsMember({1, 2, 3}));
  si->add_option("--config", simulate.config, "Simulation config (JSON); defaults apply when omitted");
  si->add_option("--format", simulate.format, "csv or json; defaults to the --out extension, else csv");
  si->add_option("--export", simulate.export_dir, "Write every probed dump here");
  si->add_option("--verdicts", simulate.verdicts, "Also write per-update verdicts here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*sp) return cmd_spectrum(spectrum, g, out, err);
    if (*tr) return cmd_track(track, g, out, err);
    if (*de) return cmd_detect(detect, g, out, err);
    if (*ev) return cmd_evaluate(evaluate, g, out, err);
    return cmd_simulate(simulate, g, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace spectrack::cli
