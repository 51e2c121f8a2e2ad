#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kcs/features.h"
#include "kcs/netsim.h"
#include "kcs/replay.h"
#include "kcs/trace.h"

namespace kcs {

enum class Normalization { kNone, kZScore };

std::string_view ToString(Normalization mode);

// One experiment of the impairment matrix. Cross traffic is the listed
// sources plus, for every entry of cbr_total_pps, a sub-run with two CBR
// streams of cbr_total_pps / 2 each. Sub-runs are pooled into one result.
struct ExperimentSpec {
  int id = 1;
  std::string label;
  ChannelConfig channel;  // sources are filled in per repetition
  std::vector<TrafficSourceSpec> cross_traffic;
  std::vector<double> cbr_total_pps;
  int cbr_size_bytes = 1024;
  int repetitions = 40;
  std::size_t sample_size = 122;
  Normalization normalization = Normalization::kZScore;
  int event_size_bytes = kDefaultEventSizeBytes;
  // Keystrokes start this long after the cross traffic, so the queue is in
  // steady state when the sample is replayed.
  Micros warmup_us = 0;
  // Replay the same sample in every repetition instead of re-drawing it.
  bool fixed_sample = false;
};

void CheckExperimentSpec(const ExperimentSpec& spec);

// Cross traffic of one repetition: the configured sources, then the CBR
// pair when cbr_pps is set. Each source is shifted by a seeded offset
// within one inter-arrival so streams are not phase-locked, and ON/OFF
// sources get a per-seed phase seed.
std::vector<TrafficSourceSpec> BuildCrossTraffic(const ExperimentSpec& spec,
                                                 std::optional<double> cbr_pps,
                                                 std::uint64_t seed);

// Per-dimension location and scale of a template population. Zero spreads
// are stored as 1.
struct ZScorePopulation {
  TemplateVector mean{};
  TemplateVector scale{};
  std::size_t size = 0;
};

ZScorePopulation BuildPopulation(std::span<const Template> templates);

// Reference templates of the samples an experiment with this spec draws,
// i.e. the clean side of its repetitions.
std::vector<Template> SampleTemplates(const ExperimentSpec& spec,
                                      const KeystrokeTrace& reference,
                                      std::uint64_t base_seed,
                                      const KeyboardMap& map = DefaultKeyboard());

struct NormalizedPair {
  TemplateVector reference{};
  TemplateVector received{};
};

// kZScore without a population throws Error.
NormalizedPair NormalizeTemplates(const Template& reference,
                                  const Template& received, Normalization mode,
                                  const ZScorePopulation* population);

double NormalizedDistance(const Template& a, const Template& b,
                          Normalization mode,
                          const ZScorePopulation* population);

struct RepetitionResult {
  std::uint64_t seed = 0;
  double cbr_total_pps = 0;
  double distance = 0;      // in the spec's normalization mode
  double distance_raw = 0;  // always unnormalized, in ms
  ChannelStats stats;
};

struct ExperimentResult {
  int id = 0;
  std::string label;
  Normalization normalization = Normalization::kZScore;
  double avg_distance = 0;
  double sd_distance = 0;
  double avg_distance_raw = 0;
  double sd_distance_raw = 0;
  double avg_loss_pct = 0;
  double avg_delay_ms = 0;
  double avg_jitter_ms = 0;
  double distortion_pct = 0;  // set by RunSuite
  std::vector<RepetitionResult> per_repetition;
  std::vector<ExperimentResult> sub_runs;  // one per CBR rate when sweeping
};

// Repetition r (1-based) uses seed base_seed + r for sample choice, source
// phases and ON/OFF draws. Repetitions run concurrently and are aggregated
// in repetition order.
ExperimentResult RunExperiment(const ExperimentSpec& spec,
                               const KeystrokeTrace& reference,
                               std::uint64_t base_seed,
                               const ZScorePopulation* population = nullptr,
                               const KeyboardMap& map = DefaultKeyboard());

struct BaselineResult {
  double mean_distance = 0;
  double sd_distance = 0;
  int pairs = 0;
};

// Mean distance between clean templates of seeded random user pairs. Both
// users of a pair are sampled with the same sample seed.
BaselineResult InterUserBaseline(std::span<const KeystrokeTrace> traces,
                                 int pairs, std::uint64_t seed,
                                 std::size_t sample_size, Normalization mode,
                                 const ZScorePopulation* population,
                                 const KeyboardMap& map = DefaultKeyboard());

// avg_distance / baseline * 100; throws Error for a non-positive baseline.
double DistortionPct(double avg_distance, double baseline);

struct SuiteOptions {
  std::uint64_t base_seed = 1;
  int baseline_pairs = 40;
  std::optional<int> repetitions;  // overrides every spec when set
};

struct SuiteReport {
  std::vector<ExperimentResult> experiments;
  BaselineResult baseline;
  Normalization normalization = Normalization::kZScore;
  std::uint64_t base_seed = 0;
};

// Population for z-scoring comes from the samples of the experiment with
// id 1 (or the first spec), then the baseline, then every experiment.
SuiteReport RunSuite(std::span<const ExperimentSpec> specs,
                     const KeystrokeTrace& reference,
                     std::span<const KeystrokeTrace> users,
                     const SuiteOptions& options,
                     const KeyboardMap& map = DefaultKeyboard());

// Fills distortion_pct of every experiment from the report's baseline.
void ApplyBaseline(SuiteReport& report);

std::string ReportCsv(const SuiteReport& report);
std::string ReportJson(const SuiteReport& report);

// Synthetic stand-ins for dataset users.
std::vector<TypistProfile> DefaultProfiles(int count, std::uint64_t seed);
std::string_view DefaultText();
std::vector<KeystrokeTrace> SynthesizeUsers(std::span<const TypistProfile> profiles,
                                            std::string_view text,
                                            std::uint64_t seed,
                                            const KeyboardMap& map = DefaultKeyboard());

}  // namespace kcs
