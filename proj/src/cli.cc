#include "kcs/cli.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kcs/config.h"
#include "kcs/features.h"
#include "kcs/harness.h"
#include "kcs/netsim.h"
#include "kcs/replay.h"
#include "kcs/trace.h"

namespace kcs {
namespace {

namespace fs = std::filesystem;

constexpr int kExitError = 1;
constexpr int kExitInvalidInput = 2;

std::string ShortestDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

KeystrokeTrace LoadValidTrace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  KeystrokeTrace trace = ParseTrace(in);
  const auto violations = ValidateTrace(trace);
  if (!violations.empty()) {
    std::string msg = path.string() + ": invalid trace:";
    for (const auto& v : violations) msg += " " + Describe(v);
    throw StructuralError(msg);
  }
  return trace;
}

Template LoadSingleTemplate(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  auto templates = TemplatesFromCsv(in);
  if (templates.size() != 1) {
    throw ParseError(path.string() + ": expected exactly one template, found " +
                         std::to_string(templates.size()),
                     0);
  }
  return templates.front();
}

void EmitOrWrite(const std::string& out_path, const std::string& text,
                 std::ostream& out) {
  if (out_path.empty() || out_path == "-") {
    out << text;
  } else {
    WriteFile(out_path, text);
  }
}

struct ExtractArgs {
  std::string trace;
  std::string out;
  std::optional<std::size_t> sample;
  std::uint64_t seed = 1;
  int sample_id = 1;
};

int CmdExtract(const ExtractArgs& a, std::ostream& out) {
  KeystrokeTrace trace = LoadValidTrace(a.trace);
  if (a.sample) trace = SelectSample(trace, *a.sample, a.seed);
  const Template t = TemplateFromTrace(trace, DefaultKeyboard(), a.sample_id);
  EmitOrWrite(a.out, TemplatesToCsv(std::span(&t, 1)), out);
  return 0;
}

struct DistanceArgs {
  std::string a;
  std::string b;
  std::string zscore;
};

int CmdDistance(const DistanceArgs& a, std::ostream& out) {
  const Template ta = LoadSingleTemplate(a.a);
  const Template tb = LoadSingleTemplate(a.b);
  double d = 0;
  if (a.zscore.empty()) {
    d = EuclideanDistance(ta, tb);
  } else {
    std::ifstream in(a.zscore);
    if (!in) throw Error("cannot open " + a.zscore);
    const ZScorePopulation pop = BuildPopulation(TemplatesFromCsv(in));
    d = NormalizedDistance(ta, tb, Normalization::kZScore, &pop);
  }
  out << ShortestDouble(d) << "\n";
  return 0;
}

struct SimulateArgs {
  std::string config;
  std::string trace;
  std::string out;
  std::uint64_t seed = 1;
  bool event_log = false;
};

nlohmann::ordered_json StatsToJson(const ChannelStats& s) {
  nlohmann::ordered_json j;
  j["avg_delay_ms"] = s.avg_delay_us / 1000.0;
  j["sd_delay_ms"] = s.sd_delay_us / 1000.0;
  j["jitter_ms"] = s.jitter_us / 1000.0;
  j["link_loss_pct"] = s.link_loss_pct;
  j["utilization"] = s.utilization;
  j["offered_packets"] = s.offered_packets;
  j["dropped_packets"] = s.dropped_packets;
  j["retransmissions"] = s.retransmissions;
  j["max_queue_len"] = s.max_queue_len;
  auto rates = nlohmann::ordered_json::array();
  for (const FlowRate& f : s.offered_bitrate) {
    rates.push_back({{"flow_id", f.flow_id}, {"offered_bps", f.offered_bps}});
  }
  j["offered_bitrate"] = rates;
  return j;
}

int CmdSimulate(const SimulateArgs& a, std::ostream& out) {
  const ExperimentSpec spec = LoadExperimentSpec(a.config);
  const KeystrokeTrace trace = LoadValidTrace(a.trace);
  std::optional<double> cbr;
  if (!spec.cbr_total_pps.empty()) cbr = spec.cbr_total_pps.front();
  ChannelConfig channel = spec.channel;
  channel.sources = BuildCrossTraffic(spec, cbr, a.seed);
  const auto packets =
      EventsToPackets(trace, spec.event_size_bytes, spec.warmup_us);
  const ChannelRun run = RunChannel(channel, packets, a.event_log);
  KeystrokeTrace received = ReconstructTrace(run.deliveries, trace);
  for (KeyEvent& e : received.events) e.timestamp_us -= spec.warmup_us;

  const fs::path dir(a.out);
  fs::create_directories(dir);
  WriteFile(dir / "received.csv", SerializeTrace(received));

  nlohmann::ordered_json j;
  j["experiment"] = spec.id;
  j["label"] = spec.label;
  j["seed"] = a.seed;
  j["event_size_bytes"] = spec.event_size_bytes;
  j["warmup_ms"] = spec.warmup_us / 1000.0;
  if (cbr) j["cbr_total_pps"] = *cbr;
  j["bottleneck_bps"] = channel.bottleneck_bps;
  j["queue_capacity_pkts"] = channel.queue_capacity_pkts;
  j["wire_overhead_bytes"] = channel.wire_overhead_bytes;
  j["stats"] = StatsToJson(run.stats);
  WriteFile(dir / "stats.json", j.dump(2) + "\n");
  if (a.event_log) WriteFile(dir / "events.csv", EventLogToCsv(run.log));
  out << "loss " << FormatFixed(run.stats.link_loss_pct, 3) << "% delay "
      << FormatFixed(run.stats.avg_delay_us / 1000.0, 3) << " ms jitter "
      << FormatFixed(run.stats.jitter_us / 1000.0, 3) << " ms\n";
  return 0;
}

struct SuiteArgs {
  std::string config_dir;
  std::string out;
  std::uint64_t seed = 1;
  std::optional<int> reps;
  std::string reference;
  std::string users_dir;
  int users = 10;
  int pairs = 40;
};

int CmdSuite(const SuiteArgs& a, std::ostream& out) {
  const auto specs = LoadExperimentDir(a.config_dir);
  std::vector<KeystrokeTrace> users;
  if (!a.users_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.users_dir)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) users.push_back(LoadValidTrace(f));
  } else {
    const auto profiles = DefaultProfiles(a.users, a.seed);
    users = SynthesizeUsers(profiles, DefaultText(), a.seed);
  }
  if (users.empty()) throw Error("no user traces");
  const KeystrokeTrace reference =
      a.reference.empty() ? users.front() : LoadValidTrace(a.reference);

  SuiteOptions options;
  options.base_seed = a.seed;
  options.baseline_pairs = a.pairs;
  options.repetitions = a.reps;
  const SuiteReport report = RunSuite(specs, reference, users, options);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const std::string csv = ReportCsv(report);
  WriteFile(dir / "report.csv", csv);
  WriteFile(dir / "report.json", ReportJson(report));
  out << csv;
  return 0;
}

struct SynthArgs {
  std::string profile;
  std::string text;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int CmdSynth(const SynthArgs& a, std::ostream& out) {
  ProfileFile pf;
  try {
    pf = ParseProfile(ReadFile(a.profile));
  } catch (const ConfigError& e) {
    throw ConfigError(a.profile + ": " + e.what());
  }
  std::string text = ReadFile(a.text);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.pop_back();
  }
  const auto trace = SynthTrace(pf.profile, KeyCodesFromText(text),
                                a.seed.value_or(pf.profile.seed),
                                DefaultKeyboard(), pf.user_id);
  EmitOrWrite(a.out, SerializeTrace(trace), out);
  return 0;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Keystroke timing distortion over a simulated remote-desktop channel",
               "kcs"};
  app.require_subcommand(1);

  ExtractArgs extract;
  auto* cmd_extract =
      app.add_subcommand("extract", "Build a template CSV from a trace file");
  cmd_extract->add_option("trace", extract.trace, "Trace file")->required();
  cmd_extract->add_option("--out", extract.out, "Output path (default stdout)");
  cmd_extract->add_option("--sample", extract.sample,
                          "Select a contiguous run of N keystrokes first");
  cmd_extract->add_option("--seed", extract.seed, "Sample seed")
      ->envname("KCS_SEED");
  cmd_extract->add_option("--sample-id", extract.sample_id,
                          "sample_id written to the template");

  DistanceArgs distance;
  auto* cmd_distance =
      app.add_subcommand("distance", "Euclidean distance between two templates");
  cmd_distance->add_option("template_a", distance.a)->required();
  cmd_distance->add_option("template_b", distance.b)->required();
  cmd_distance->add_option("--zscore", distance.zscore,
                           "Population template CSV for z-score scaling");

  SimulateArgs simulate;
  auto* cmd_simulate = app.add_subcommand(
      "simulate", "Replay a trace through one channel pass");
  cmd_simulate->add_option("config", simulate.config, "Experiment config")
      ->required();
  cmd_simulate->add_option("trace", simulate.trace, "Trace file")->required();
  cmd_simulate->add_option("--out", simulate.out, "Output directory")
      ->required();
  cmd_simulate->add_option("--seed", simulate.seed, "Cross-traffic seed")
      ->envname("KCS_SEED");
  cmd_simulate->add_flag("--event-log", simulate.event_log,
                         "Also write events.csv");

  SuiteArgs suite;
  auto* cmd_suite =
      app.add_subcommand("suite", "Run every experiment config in a directory");
  cmd_suite->add_option("config_dir", suite.config_dir)->required();
  cmd_suite->add_option("--out", suite.out, "Output directory")->required();
  cmd_suite->add_option("--seed", suite.seed, "Base seed")->envname("KCS_SEED");
  cmd_suite->add_option("--reps", suite.reps, "Override repetitions");
  cmd_suite->add_option("--reference", suite.reference,
                        "Reference trace (default: synthetic user 1)");
  cmd_suite->add_option("--users-dir", suite.users_dir,
                        "Directory of user traces for the inter-user baseline");
  cmd_suite->add_option("--users", suite.users, "Synthetic user count")
      ->check(CLI::Range(2, 1000));
  cmd_suite->add_option("--pairs", suite.pairs, "Baseline user pairs")
      ->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic trace");
  cmd_synth->add_option("profile", synth.profile, "Profile JSON")->required();
  cmd_synth->add_option("text", synth.text, "Text file to type")->required();
  cmd_synth->add_option("--seed", synth.seed, "Seed (default: profile seed)")
      ->envname("KCS_SEED");
  cmd_synth->add_option("--out", synth.out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*cmd_extract) return CmdExtract(extract, out);
    if (*cmd_distance) return CmdDistance(distance, out);
    if (*cmd_simulate) return CmdSimulate(simulate, out);
    if (*cmd_suite) return CmdSuite(suite, out);
    if (*cmd_synth) return CmdSynth(synth, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const StructuralError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace kcs
