#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kcs/config.h"
#include "kcs/features.h"
#include "kcs/harness.h"
#include "kcs/keyboard.h"
#include "kcs/netsim.h"
#include "kcs/replay.h"
#include "kcs/trace.h"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

std::vector<int> CodesFrom(const py::object& text) {
  if (py::isinstance<py::str>(text)) {
    return kcs::KeyCodesFromText(text.cast<std::string>());
  }
  return text.cast<std::vector<int>>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Keystroke timing distortion over a simulated remote-desktop channel";

  py::register_exception<kcs::Error>(m, "KcsError", PyExc_ValueError);

  py::enum_<kcs::KeyState>(m, "KeyState")
      .value("PRESSED", kcs::KeyState::kPressed)
      .value("RELEASED", kcs::KeyState::kReleased);

  py::class_<kcs::KeyEvent>(m, "KeyEvent")
      .def(py::init<>())
      .def(py::init([](int user, kcs::KeyState state, int code, kcs::Micros t) {
             return kcs::KeyEvent{user, state, code, t};
           }),
           "user_id"_a, "key_state"_a, "key_code"_a, "timestamp_us"_a)
      .def_readwrite("user_id", &kcs::KeyEvent::user_id)
      .def_readwrite("key_state", &kcs::KeyEvent::key_state)
      .def_readwrite("key_code", &kcs::KeyEvent::key_code)
      .def_readwrite("timestamp_us", &kcs::KeyEvent::timestamp_us)
      .def(py::self == py::self);

  py::class_<kcs::KeystrokeTrace>(m, "KeystrokeTrace")
      .def(py::init<>())
      .def_readwrite("user_id", &kcs::KeystrokeTrace::user_id)
      .def_readwrite("events", &kcs::KeystrokeTrace::events)
      .def("__len__", [](const kcs::KeystrokeTrace& t) { return t.events.size(); })
      .def(py::self == py::self);

  py::class_<kcs::Keystroke>(m, "Keystroke")
      .def(py::init([](int code, kcs::Micros press, kcs::Micros release) {
             return kcs::Keystroke{code, press, release};
           }),
           "key_code"_a, "press_us"_a, "release_us"_a)
      .def_readwrite("key_code", &kcs::Keystroke::key_code)
      .def_readwrite("press_us", &kcs::Keystroke::press_us)
      .def_readwrite("release_us", &kcs::Keystroke::release_us)
      .def(py::self == py::self)
      .def("__repr__", [](const kcs::Keystroke& k) {
        return "Keystroke(" + std::to_string(k.key_code) + ", " +
               std::to_string(k.press_us) + ", " + std::to_string(k.release_us) +
               ")";
      });

  py::class_<kcs::TypistProfile>(m, "TypistProfile")
      .def(py::init<>())
      .def_readwrite("mean_hold_us", &kcs::TypistProfile::mean_hold_us)
      .def_readwrite("sd_hold_us", &kcs::TypistProfile::sd_hold_us)
      .def_readwrite("mean_gap_us_by_class",
                     &kcs::TypistProfile::mean_gap_us_by_class)
      .def_readwrite("sd_gap_us_by_class", &kcs::TypistProfile::sd_gap_us_by_class)
      .def_readwrite("seed", &kcs::TypistProfile::seed);

  m.def("parse_trace", py::overload_cast<std::string_view>(&kcs::ParseTrace),
        "text"_a);
  m.def("serialize_trace", &kcs::SerializeTrace, "trace"_a);
  m.def(
      "validate_trace",
      [](const kcs::KeystrokeTrace& t) {
        std::vector<std::pair<std::string, std::size_t>> out;
        for (const auto& v : kcs::ValidateTrace(t)) {
          out.emplace_back(std::string(kcs::ToString(v.kind)), v.event_index);
        }
        return out;
      },
      "trace"_a);
  m.def("pair_events", &kcs::PairEvents, "trace"_a);
  m.def(
      "synth_trace",
      [](const kcs::TypistProfile& p, const py::object& text, std::uint64_t seed,
         int user_id) {
        return kcs::SynthTrace(p, CodesFrom(text), seed, kcs::DefaultKeyboard(),
                               user_id);
      },
      "profile"_a, "text"_a, "seed"_a, "user_id"_a = 0);
  m.def("select_sample", &kcs::SelectSample, "trace"_a, "n"_a, "seed"_a);

  m.def(
      "adjacency_class",
      [](int a, int b) { return kcs::DefaultKeyboard().AdjacencyClass(a, b); },
      "key_a"_a, "key_b"_a);

  py::class_<kcs::DigraphFeatures>(m, "DigraphFeatures")
      .def_readonly("key_a", &kcs::DigraphFeatures::key_a)
      .def_readonly("key_b", &kcs::DigraphFeatures::key_b)
      .def_readonly("pr_us", &kcs::DigraphFeatures::pr_us)
      .def_readonly("pp_us", &kcs::DigraphFeatures::pp_us)
      .def_readonly("rr_us", &kcs::DigraphFeatures::rr_us)
      .def_readonly("rp_signed_us", &kcs::DigraphFeatures::rp_signed_us)
      .def_readonly("rp_abs_us", &kcs::DigraphFeatures::rp_abs_us)
      .def_readonly("adjacency_class", &kcs::DigraphFeatures::adjacency_class);

  py::class_<kcs::Template>(m, "Template")
      .def(py::init<>())
      .def_readwrite("values_ms", &kcs::Template::values_ms)
      .def_readwrite("counts", &kcs::Template::counts)
      .def_readwrite("user_id", &kcs::Template::user_id)
      .def_readwrite("sample_id", &kcs::Template::sample_id)
      .def("flatten", &kcs::Template::Flatten);

  m.def(
      "extract_digraph_features",
      [](const std::vector<kcs::Keystroke>& keys) {
        return kcs::ExtractDigraphFeatures(keys, kcs::DefaultKeyboard());
      },
      "sample"_a);
  m.def(
      "build_template",
      [](const std::vector<kcs::DigraphFeatures>& f, int user, int sample) {
        return kcs::BuildTemplate(f, user, sample);
      },
      "features"_a, "user_id"_a = 0, "sample_id"_a = 1);
  m.def(
      "template_from_trace",
      [](const kcs::KeystrokeTrace& t, int sample_id) {
        return kcs::TemplateFromTrace(t, kcs::DefaultKeyboard(), sample_id);
      },
      "trace"_a, "sample_id"_a = 1);
  m.def("euclidean_distance",
        py::overload_cast<const kcs::Template&, const kcs::Template&>(
            &kcs::EuclideanDistance),
        "a"_a, "b"_a);
  m.def(
      "templates_to_csv",
      [](const std::vector<kcs::Template>& ts) { return kcs::TemplatesToCsv(ts); },
      "templates"_a);

  py::enum_<kcs::SourceKind>(m, "SourceKind")
      .value("CBR", kcs::SourceKind::kCbr)
      .value("ONOFF", kcs::SourceKind::kOnOff);

  py::class_<kcs::TrafficSourceSpec>(m, "TrafficSourceSpec")
      .def(py::init<>())
      .def_readwrite("kind", &kcs::TrafficSourceSpec::kind)
      .def_readwrite("rate_pps", &kcs::TrafficSourceSpec::rate_pps)
      .def_readwrite("size_bytes", &kcs::TrafficSourceSpec::size_bytes)
      .def_readwrite("on_ms", &kcs::TrafficSourceSpec::on_ms)
      .def_readwrite("off_ms", &kcs::TrafficSourceSpec::off_ms)
      .def_readwrite("start_us", &kcs::TrafficSourceSpec::start_us)
      .def_readwrite("stop_us", &kcs::TrafficSourceSpec::stop_us)
      .def_readwrite("phase_seed", &kcs::TrafficSourceSpec::phase_seed);

  py::class_<kcs::ChannelConfig>(m, "ChannelConfig")
      .def(py::init<>())
      .def_readwrite("bottleneck_bps", &kcs::ChannelConfig::bottleneck_bps)
      .def_readwrite("queue_capacity_pkts", &kcs::ChannelConfig::queue_capacity_pkts)
      .def_readwrite("base_propagation_us", &kcs::ChannelConfig::base_propagation_us)
      .def_readwrite("wire_overhead_bytes", &kcs::ChannelConfig::wire_overhead_bytes)
      .def_readwrite("sources", &kcs::ChannelConfig::sources)
      .def_readwrite("rto_initial_us", &kcs::ChannelConfig::rto_initial_us)
      .def_readwrite("rto_max_us", &kcs::ChannelConfig::rto_max_us)
      .def_readwrite("seed", &kcs::ChannelConfig::seed)
      .def_readwrite("tail_us", &kcs::ChannelConfig::tail_us);

  py::class_<kcs::Packet>(m, "Packet")
      .def(py::init<>())
      .def_readwrite("flow_id", &kcs::Packet::flow_id)
      .def_readwrite("seq", &kcs::Packet::seq)
      .def_readwrite("size_bytes", &kcs::Packet::size_bytes)
      .def_readwrite("inject_us", &kcs::Packet::inject_us)
      .def_readwrite("payload_ref", &kcs::Packet::payload_ref);

  py::class_<kcs::Delivery>(m, "Delivery")
      .def_readonly("seq", &kcs::Delivery::seq)
      .def_readonly("inject_us", &kcs::Delivery::inject_us)
      .def_readonly("deliver_us", &kcs::Delivery::deliver_us)
      .def_readonly("link_delay_us", &kcs::Delivery::link_delay_us)
      .def_readonly("retransmitted", &kcs::Delivery::retransmitted);

  py::class_<kcs::ChannelStats>(m, "ChannelStats")
      .def_readonly("avg_delay_us", &kcs::ChannelStats::avg_delay_us)
      .def_readonly("sd_delay_us", &kcs::ChannelStats::sd_delay_us)
      .def_readonly("jitter_us", &kcs::ChannelStats::jitter_us)
      .def_readonly("link_loss_pct", &kcs::ChannelStats::link_loss_pct)
      .def_readonly("utilization", &kcs::ChannelStats::utilization)
      .def_readonly("offered_packets", &kcs::ChannelStats::offered_packets)
      .def_readonly("dropped_packets", &kcs::ChannelStats::dropped_packets)
      .def_readonly("retransmissions", &kcs::ChannelStats::retransmissions)
      .def_readonly("max_queue_len", &kcs::ChannelStats::max_queue_len);

  py::class_<kcs::ChannelRun>(m, "ChannelRun")
      .def_readonly("deliveries", &kcs::ChannelRun::deliveries)
      .def_readonly("stats", &kcs::ChannelRun::stats)
      .def_property_readonly("event_log_csv", [](const kcs::ChannelRun& r) {
        return kcs::EventLogToCsv(r.log);
      });

  m.def("generate_cbr", &kcs::GenerateCbr, "spec"_a, "horizon_us"_a,
        "flow_id"_a = 1);
  m.def("generate_onoff", &kcs::GenerateOnOff, "spec"_a, "horizon_us"_a,
        "flow_id"_a = 1);
  m.def("offered_bitrate", &kcs::OfferedBitrate, "spec"_a);
  m.def(
      "run_channel",
      [](const kcs::ChannelConfig& c, const std::vector<kcs::Packet>& packets,
         bool record_log) { return kcs::RunChannel(c, packets, record_log); },
      "config"_a, "keystroke_packets"_a, "record_log"_a = false);

  m.def("events_to_packets", &kcs::EventsToPackets, "trace"_a,
        "event_size_bytes"_a = kcs::kDefaultEventSizeBytes, "offset_us"_a = 0);
  m.def(
      "reconstruct_trace",
      [](const std::vector<kcs::Delivery>& d, const kcs::KeystrokeTrace& t) {
        return kcs::ReconstructTrace(d, t);
      },
      "deliveries"_a, "original"_a);

  py::enum_<kcs::Normalization>(m, "Normalization")
      .value("NONE", kcs::Normalization::kNone)
      .value("ZSCORE", kcs::Normalization::kZScore);

  py::class_<kcs::ExperimentSpec>(m, "ExperimentSpec")
      .def(py::init<>())
      .def_readwrite("id", &kcs::ExperimentSpec::id)
      .def_readwrite("label", &kcs::ExperimentSpec::label)
      .def_readwrite("channel", &kcs::ExperimentSpec::channel)
      .def_readwrite("cross_traffic", &kcs::ExperimentSpec::cross_traffic)
      .def_readwrite("cbr_total_pps", &kcs::ExperimentSpec::cbr_total_pps)
      .def_readwrite("cbr_size_bytes", &kcs::ExperimentSpec::cbr_size_bytes)
      .def_readwrite("repetitions", &kcs::ExperimentSpec::repetitions)
      .def_readwrite("sample_size", &kcs::ExperimentSpec::sample_size)
      .def_readwrite("normalization", &kcs::ExperimentSpec::normalization)
      .def_readwrite("event_size_bytes", &kcs::ExperimentSpec::event_size_bytes)
      .def_readwrite("warmup_us", &kcs::ExperimentSpec::warmup_us)
      .def_readwrite("fixed_sample", &kcs::ExperimentSpec::fixed_sample);

  py::class_<kcs::ZScorePopulation>(m, "ZScorePopulation")
      .def_readonly("mean", &kcs::ZScorePopulation::mean)
      .def_readonly("scale", &kcs::ZScorePopulation::scale)
      .def_readonly("size", &kcs::ZScorePopulation::size);

  py::class_<kcs::ExperimentResult>(m, "ExperimentResult")
      .def_readonly("id", &kcs::ExperimentResult::id)
      .def_readonly("label", &kcs::ExperimentResult::label)
      .def_readonly("avg_distance", &kcs::ExperimentResult::avg_distance)
      .def_readonly("sd_distance", &kcs::ExperimentResult::sd_distance)
      .def_readonly("avg_distance_raw", &kcs::ExperimentResult::avg_distance_raw)
      .def_readonly("avg_loss_pct", &kcs::ExperimentResult::avg_loss_pct)
      .def_readonly("avg_delay_ms", &kcs::ExperimentResult::avg_delay_ms)
      .def_readonly("avg_jitter_ms", &kcs::ExperimentResult::avg_jitter_ms)
      .def_readonly("distortion_pct", &kcs::ExperimentResult::distortion_pct);

  py::class_<kcs::BaselineResult>(m, "BaselineResult")
      .def_readonly("mean_distance", &kcs::BaselineResult::mean_distance)
      .def_readonly("sd_distance", &kcs::BaselineResult::sd_distance)
      .def_readonly("pairs", &kcs::BaselineResult::pairs);

  m.def("parse_experiment_spec", &kcs::ParseExperimentSpec, "json_text"_a);
  m.def(
      "load_experiment_spec",
      [](const std::string& path) { return kcs::LoadExperimentSpec(path); },
      "path"_a);
  m.def(
      "build_population",
      [](const std::vector<kcs::Template>& ts) { return kcs::BuildPopulation(ts); },
      "templates"_a);
  m.def(
      "sample_templates",
      [](const kcs::ExperimentSpec& s, const kcs::KeystrokeTrace& ref,
         std::uint64_t seed) { return kcs::SampleTemplates(s, ref, seed); },
      "spec"_a, "reference"_a, "base_seed"_a);
  m.def(
      "run_experiment",
      [](const kcs::ExperimentSpec& s, const kcs::KeystrokeTrace& ref,
         std::uint64_t seed, const kcs::ZScorePopulation* pop) {
        py::gil_scoped_release release;
        return kcs::RunExperiment(s, ref, seed, pop);
      },
      "spec"_a, "reference"_a, "base_seed"_a, "population"_a = nullptr);
  m.def(
      "inter_user_baseline",
      [](const std::vector<kcs::KeystrokeTrace>& traces, int pairs,
         std::uint64_t seed, std::size_t sample_size, kcs::Normalization mode,
         const kcs::ZScorePopulation* pop) {
        return kcs::InterUserBaseline(traces, pairs, seed, sample_size, mode, pop);
      },
      "traces"_a, "pairs"_a, "seed"_a, "sample_size"_a = 122,
      "mode"_a = kcs::Normalization::kNone, "population"_a = nullptr);
  m.def("distortion_pct", &kcs::DistortionPct, "avg_distance"_a, "baseline"_a);
  m.def("default_profiles", &kcs::DefaultProfiles, "count"_a, "seed"_a);
  m.def("default_text", [] { return std::string(kcs::DefaultText()); });
  m.def(
      "synthesize_users",
      [](const std::vector<kcs::TypistProfile>& ps, const std::string& text,
         std::uint64_t seed) { return kcs::SynthesizeUsers(ps, text, seed); },
      "profiles"_a, "text"_a, "seed"_a);
}
