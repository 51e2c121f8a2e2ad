#include "kcs/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "json.hpp"
#include "kcs/rng.h"

namespace kcs {
namespace {

double Mean(std::span<const double> xs) {
  if (xs.empty()) return 0;
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / xs.size();
}

double PopulationSd(std::span<const double> xs) {
  if (xs.size() < 2) return 0;
  const double m = Mean(xs);
  double sq = 0;
  for (double x : xs) sq += (x - m) * (x - m);
  return std::sqrt(sq / xs.size());
}

// Runs body(i) for i in [0, n) on up to hardware_concurrency threads.
template <typename Body>
void ParallelFor(std::size_t n, Body body) {
  const std::size_t workers = std::min<std::size_t>(
      n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::jthread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  threads.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t SampleSeed(const ExperimentSpec& spec, std::uint64_t base_seed,
                         int rep) {
  return spec.fixed_sample ? base_seed + 1 : base_seed + rep;
}

ExperimentResult Aggregate(const ExperimentSpec& spec,
                           std::vector<RepetitionResult> reps) {
  ExperimentResult r;
  r.id = spec.id;
  r.label = spec.label;
  r.normalization = spec.normalization;
  std::vector<double> dist, raw, loss, delay, jitter;
  for (const RepetitionResult& rep : reps) {
    dist.push_back(rep.distance);
    raw.push_back(rep.distance_raw);
    loss.push_back(rep.stats.link_loss_pct);
    delay.push_back(rep.stats.avg_delay_us / 1000.0);
    jitter.push_back(rep.stats.jitter_us / 1000.0);
  }
  r.avg_distance = Mean(dist);
  r.sd_distance = PopulationSd(dist);
  r.avg_distance_raw = Mean(raw);
  r.sd_distance_raw = PopulationSd(raw);
  r.avg_loss_pct = Mean(loss);
  r.avg_delay_ms = Mean(delay);
  r.avg_jitter_ms = Mean(jitter);
  r.per_repetition = std::move(reps);
  return r;
}

ExperimentResult RunSubRun(const ExperimentSpec& spec,
                           const KeystrokeTrace& reference,
                           std::uint64_t base_seed, std::optional<double> cbr_pps,
                           const ZScorePopulation* population,
                           const KeyboardMap& map) {
  std::vector<RepetitionResult> reps(spec.repetitions);
  ParallelFor(reps.size(), [&](std::size_t i) {
    const int rep = static_cast<int>(i) + 1;
    const std::uint64_t seed = base_seed + rep;
    const KeystrokeTrace sample =
        SelectSample(reference, spec.sample_size, SampleSeed(spec, base_seed, rep));
    const Template sent = TemplateFromTrace(sample, map, rep);

    ChannelConfig channel = spec.channel;
    channel.sources = BuildCrossTraffic(spec, cbr_pps, seed);
    const auto packets =
        EventsToPackets(sample, spec.event_size_bytes, spec.warmup_us);
    const ChannelRun run = RunChannel(channel, packets);
    const KeystrokeTrace received = ReconstructTrace(run.deliveries, sample);
    const Template got = TemplateFromTrace(received, map, rep);

    RepetitionResult& out = reps[i];
    out.seed = seed;
    out.cbr_total_pps = cbr_pps.value_or(0);
    out.distance = NormalizedDistance(sent, got, spec.normalization, population);
    out.distance_raw = EuclideanDistance(sent, got);
    out.stats = run.stats;
  });
  return Aggregate(spec, std::move(reps));
}

}  // namespace

std::vector<TrafficSourceSpec> BuildCrossTraffic(const ExperimentSpec& spec,
                                                std::optional<double> cbr_pps,
                                                std::uint64_t seed) {
  std::vector<TrafficSourceSpec> sources = spec.cross_traffic;
  if (cbr_pps) {
    TrafficSourceSpec cbr;
    cbr.kind = SourceKind::kCbr;
    cbr.rate_pps = *cbr_pps / 2;
    cbr.size_bytes = spec.cbr_size_bytes;
    sources.push_back(cbr);
    sources.push_back(cbr);
  }
  Rng rng(seed ^ 0xC0FFEE123456789ULL);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    TrafficSourceSpec& s = sources[i];
    s.start_us += static_cast<Micros>(
        rng.Below(static_cast<std::uint64_t>(InterArrivalUs(s.rate_pps))));
    s.phase_seed = Rng::Mix(s.phase_seed) ^ Rng::Mix(seed * 31 + i);
  }
  return sources;
}

std::string_view ToString(Normalization mode) {
  return mode == Normalization::kNone ? "none" : "zscore";
}

void CheckExperimentSpec(const ExperimentSpec& spec) {
  if (spec.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (spec.sample_size < 2) throw ConfigError("sample_size must be >= 2");
  if (spec.event_size_bytes < 1) {
    throw ConfigError("event_size_bytes must be >= 1");
  }
  if (spec.cbr_size_bytes < 1) throw ConfigError("cbr.size_bytes must be >= 1");
  if (spec.warmup_us < 0) throw ConfigError("warmup_ms must be >= 0");
  for (double c : spec.cbr_total_pps) {
    if (!(c > 0)) throw ConfigError("cbr.total_pps entries must be > 0");
  }
  CheckChannelConfig(spec.channel);
  for (std::size_t i = 0; i < spec.cross_traffic.size(); ++i) {
    CheckSource(spec.cross_traffic[i],
                "cross_traffic[" + std::to_string(i) + "]");
  }
}

ZScorePopulation BuildPopulation(std::span<const Template> templates) {
  ZScorePopulation pop;
  pop.size = templates.size();
  pop.scale.fill(1.0);
  if (templates.empty()) return pop;
  std::vector<TemplateVector> vs;
  for (const Template& t : templates) vs.push_back(t.Flatten());
  for (int d = 0; d < kTemplateSize; ++d) {
    std::vector<double> column;
    for (const auto& v : vs) column.push_back(v[d]);
    pop.mean[d] = Mean(column);
    const double sd = PopulationSd(column);
    pop.scale[d] = sd > 0 ? sd : 1.0;
  }
  return pop;
}

std::vector<Template> SampleTemplates(const ExperimentSpec& spec,
                                      const KeystrokeTrace& reference,
                                      std::uint64_t base_seed,
                                      const KeyboardMap& map) {
  std::vector<Template> out;
  for (int rep = 1; rep <= spec.repetitions; ++rep) {
    out.push_back(TemplateFromTrace(
        SelectSample(reference, spec.sample_size, SampleSeed(spec, base_seed, rep)),
        map, rep));
  }
  return out;
}

NormalizedPair NormalizeTemplates(const Template& reference,
                                  const Template& received, Normalization mode,
                                  const ZScorePopulation* population) {
  NormalizedPair out{reference.Flatten(), received.Flatten()};
  if (mode == Normalization::kNone) return out;
  if (population == nullptr || population->size == 0) {
    throw Error("zscore normalization requires a baseline population");
  }
  for (int d = 0; d < kTemplateSize; ++d) {
    out.reference[d] = (out.reference[d] - population->mean[d]) / population->scale[d];
    out.received[d] = (out.received[d] - population->mean[d]) / population->scale[d];
  }
  return out;
}

double NormalizedDistance(const Template& a, const Template& b,
                          Normalization mode,
                          const ZScorePopulation* population) {
  const NormalizedPair p = NormalizeTemplates(a, b, mode, population);
  return EuclideanDistance(p.reference, p.received);
}

ExperimentResult RunExperiment(const ExperimentSpec& spec,
                               const KeystrokeTrace& reference,
                               std::uint64_t base_seed,
                               const ZScorePopulation* population,
                               const KeyboardMap& map) {
  CheckExperimentSpec(spec);
  if (spec.normalization == Normalization::kZScore &&
      (population == nullptr || population->size == 0)) {
    throw Error("experiment " + std::to_string(spec.id) +
                ": zscore normalization requires a baseline population");
  }
  if (spec.cbr_total_pps.size() <= 1) {
    std::optional<double> cbr;
    if (!spec.cbr_total_pps.empty()) cbr = spec.cbr_total_pps.front();
    return RunSubRun(spec, reference, base_seed, cbr, population, map);
  }
  std::vector<ExperimentResult> subs;
  std::vector<RepetitionResult> pooled;
  for (double c : spec.cbr_total_pps) {
    ExperimentResult sub = RunSubRun(spec, reference, base_seed, c, population, map);
    sub.label = spec.label + " C=" + FormatFixed(c, 0);
    pooled.insert(pooled.end(), sub.per_repetition.begin(),
                  sub.per_repetition.end());
    subs.push_back(std::move(sub));
  }
  ExperimentResult result = Aggregate(spec, std::move(pooled));
  result.sub_runs = std::move(subs);
  return result;
}

BaselineResult InterUserBaseline(std::span<const KeystrokeTrace> traces,
                                 int pairs, std::uint64_t seed,
                                 std::size_t sample_size, Normalization mode,
                                 const ZScorePopulation* population,
                                 const KeyboardMap& map) {
  if (traces.size() < 2) throw Error("inter-user baseline needs at least 2 users");
  if (pairs < 1) throw Error("inter-user baseline needs at least 1 pair");
  Rng rng(seed);
  std::vector<double> distances;
  for (int k = 0; k < pairs; ++k) {
    const std::size_t u = rng.Below(traces.size());
    std::size_t v = rng.Below(traces.size() - 1);
    if (v >= u) ++v;
    const std::uint64_t sample_seed = seed + k + 1;
    const Template a =
        TemplateFromTrace(SelectSample(traces[u], sample_size, sample_seed), map);
    const Template b =
        TemplateFromTrace(SelectSample(traces[v], sample_size, sample_seed), map);
    distances.push_back(NormalizedDistance(a, b, mode, population));
  }
  return {Mean(distances), PopulationSd(distances), pairs};
}

double DistortionPct(double avg_distance, double baseline) {
  if (!(baseline > 0)) throw Error("degenerate baseline");
  return avg_distance / baseline * 100.0;
}

SuiteReport RunSuite(std::span<const ExperimentSpec> specs,
                     const KeystrokeTrace& reference,
                     std::span<const KeystrokeTrace> users,
                     const SuiteOptions& options, const KeyboardMap& map) {
  if (specs.empty()) throw Error("no experiments to run");
  std::vector<ExperimentSpec> run_specs(specs.begin(), specs.end());
  if (options.repetitions) {
    for (auto& s : run_specs) s.repetitions = *options.repetitions;
  }
  const auto exp1 = std::find_if(run_specs.begin(), run_specs.end(),
                                 [](const ExperimentSpec& s) { return s.id == 1; });
  const ExperimentSpec& population_spec =
      exp1 != run_specs.end() ? *exp1 : run_specs.front();

  SuiteReport report;
  report.base_seed = options.base_seed;
  report.normalization = population_spec.normalization;
  const ZScorePopulation population = BuildPopulation(
      SampleTemplates(population_spec, reference, options.base_seed, map));
  report.baseline = InterUserBaseline(
      users, options.baseline_pairs, options.base_seed,
      population_spec.sample_size, population_spec.normalization, &population,
      map);
  for (const ExperimentSpec& spec : run_specs) {
    try {
      ExperimentResult r =
          RunExperiment(spec, reference, options.base_seed, &population, map);
      report.experiments.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error("experiment " + std::to_string(spec.id) + " (" + spec.label +
                  "): " + e.what());
    }
  }
  ApplyBaseline(report);
  return report;
}

void ApplyBaseline(SuiteReport& report) {
  for (ExperimentResult& r : report.experiments) {
    r.distortion_pct = DistortionPct(r.avg_distance, report.baseline.mean_distance);
    for (ExperimentResult& sub : r.sub_runs) {
      sub.distortion_pct =
          DistortionPct(sub.avg_distance, report.baseline.mean_distance);
    }
  }
}

std::string ReportCsv(const SuiteReport& report) {
  std::string out =
      "experiment,avg_distance,sd_distance,avg_loss_pct,avg_delay_ms,"
      "avg_jitter_ms,distortion_pct\n";
  for (const ExperimentResult& r : report.experiments) {
    out += std::to_string(r.id) + ',' + FormatFixed(r.avg_distance, 6) + ',' +
           FormatFixed(r.sd_distance, 6) + ',' + FormatFixed(r.avg_loss_pct, 6) +
           ',' + FormatFixed(r.avg_delay_ms, 6) + ',' +
           FormatFixed(r.avg_jitter_ms, 6) + ',' +
           FormatFixed(r.distortion_pct, 6) + '\n';
  }
  out += "baseline," + FormatFixed(report.baseline.mean_distance, 6) + ',' +
         FormatFixed(report.baseline.sd_distance, 6) + ",0.000000,0.000000,"
         "0.000000,100.000000\n";
  return out;
}

namespace {

nlohmann::ordered_json StatsJson(const ChannelStats& s) {
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

nlohmann::ordered_json ExperimentJson(const ExperimentResult& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.id;
  j["label"] = r.label;
  j["normalization"] = std::string(ToString(r.normalization));
  j["avg_distance"] = r.avg_distance;
  j["sd_distance"] = r.sd_distance;
  j["avg_distance_raw_ms"] = r.avg_distance_raw;
  j["sd_distance_raw_ms"] = r.sd_distance_raw;
  j["avg_loss_pct"] = r.avg_loss_pct;
  j["avg_delay_ms"] = r.avg_delay_ms;
  j["avg_jitter_ms"] = r.avg_jitter_ms;
  j["distortion_pct"] = r.distortion_pct;
  auto reps = nlohmann::ordered_json::array();
  for (const RepetitionResult& rep : r.per_repetition) {
    nlohmann::ordered_json rj;
    rj["seed"] = rep.seed;
    if (rep.cbr_total_pps > 0) rj["cbr_total_pps"] = rep.cbr_total_pps;
    rj["distance"] = rep.distance;
    rj["distance_raw_ms"] = rep.distance_raw;
    rj["stats"] = StatsJson(rep.stats);
    reps.push_back(std::move(rj));
  }
  if (!r.sub_runs.empty()) {
    auto subs = nlohmann::ordered_json::array();
    for (const ExperimentResult& sub : r.sub_runs) {
      nlohmann::ordered_json sj = ExperimentJson(sub);
      sj.erase("per_repetition");
      subs.push_back(std::move(sj));
    }
    j["sub_runs"] = subs;
  }
  j["per_repetition"] = reps;
  return j;
}

}  // namespace

std::string ReportJson(const SuiteReport& report) {
  nlohmann::ordered_json j;
  j["base_seed"] = report.base_seed;
  j["normalization"] = std::string(ToString(report.normalization));
  j["baseline"] = {{"avg_distance", report.baseline.mean_distance},
                   {"sd_distance", report.baseline.sd_distance},
                   {"pairs", report.baseline.pairs}};
  auto exps = nlohmann::ordered_json::array();
  for (const ExperimentResult& r : report.experiments) {
    exps.push_back(ExperimentJson(r));
  }
  j["experiments"] = exps;
  return j.dump(2) + "\n";
}

std::vector<TypistProfile> DefaultProfiles(int count, std::uint64_t seed) {
  std::vector<TypistProfile> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(seed * 1000003ULL + i);
    TypistProfile p;
    p.mean_hold_us = 70000 + 60000 * rng.Uniform();
    p.sd_hold_us = p.mean_hold_us * (0.10 + 0.10 * rng.Uniform());
    const double base_gap = 150000 + 110000 * rng.Uniform();
    for (int c = 0; c < kAdjacencyClasses; ++c) {
      p.mean_gap_us_by_class[c] = base_gap * (0.8 + 0.45 * rng.Uniform());
      p.sd_gap_us_by_class[c] =
          p.mean_gap_us_by_class[c] * (0.15 + 0.10 * rng.Uniform());
    }
    p.seed = Rng::Mix(seed + i);
    out.push_back(p);
  }
  return out;
}

std::string_view DefaultText() {
  return "the morning train was late again, so she opened the laptop and "
         "started to answer the mail that had piled up over the weekend. "
         "most of it was routine: a meeting moved to thursday, a reminder "
         "about the quarterly budget, two questions about the new build "
         "server and a long thread about where the team should go for "
         "lunch on friday. she typed quickly, fixing small mistakes as she "
         "went, and by the time the train pulled into the city the inbox "
         "was almost empty. the last message asked for a short summary of "
         "the network tests from last month. she wrote that the link held "
         "up well under light load, that delays grew sharply once the "
         "queue filled, and that the remote sessions felt sluggish "
         "whenever someone started a large download. then she closed the "
         "lid, picked up her coffee and walked the last few blocks to the "
         "office, thinking about how much of the day would be spent "
         "waiting for screens to refresh.";
}

std::vector<KeystrokeTrace> SynthesizeUsers(std::span<const TypistProfile> profiles,
                                            std::string_view text,
                                            std::uint64_t seed,
                                            const KeyboardMap& map) {
  const std::vector<int> codes = KeyCodesFromText(text);
  std::vector<KeystrokeTrace> out;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    out.push_back(SynthTrace(profiles[i], codes, Rng::Mix(seed) + i, map,
                             static_cast<int>(i + 1)));
  }
  return out;
}

}  // namespace kcs
