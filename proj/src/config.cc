#include "kcs/config.h"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace kcs {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& obj, std::string prefix)
      : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(Name("") + " must be an object");
  }

  void AllowOnly(std::initializer_list<std::string_view> keys) const {
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ConfigError("unknown field '" + Name(key) + "'");
      }
    }
  }

  bool Has(std::string_view key) const { return obj_.contains(key); }

  const json& At(std::string_view key) const {
    if (!obj_.contains(key)) {
      throw ConfigError("missing field '" + Name(key) + "'");
    }
    return obj_.at(std::string(key));
  }

  std::int64_t Int(std::string_view key, std::int64_t fallback) const {
    if (!Has(key)) return fallback;
    const json& v = At(key);
    if (!v.is_number_integer()) {
      throw ConfigError("field '" + Name(key) + "' must be an integer");
    }
    return v.get<std::int64_t>();
  }

  double Number(std::string_view key, double fallback) const {
    if (!Has(key)) return fallback;
    const json& v = At(key);
    if (!v.is_number()) {
      throw ConfigError("field '" + Name(key) + "' must be a number");
    }
    return v.get<double>();
  }

  bool Bool(std::string_view key, bool fallback) const {
    if (!Has(key)) return fallback;
    const json& v = At(key);
    if (!v.is_boolean()) {
      throw ConfigError("field '" + Name(key) + "' must be a boolean");
    }
    return v.get<bool>();
  }

  std::string String(std::string_view key, std::string fallback) const {
    if (!Has(key)) return fallback;
    const json& v = At(key);
    if (!v.is_string()) {
      throw ConfigError("field '" + Name(key) + "' must be a string");
    }
    return v.get<std::string>();
  }

  std::vector<double> Numbers(std::string_view key) const {
    const json& v = At(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) {
      throw ConfigError("field '" + Name(key) + "' must be a number or array");
    }
    std::vector<double> out;
    for (const json& x : v) {
      if (!x.is_number()) {
        throw ConfigError("field '" + Name(key) + "' must contain numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::string Name(std::string_view key) const {
    if (prefix_.empty()) return std::string(key);
    if (key.empty()) return prefix_;
    return prefix_ + "." + std::string(key);
  }

 private:
  const json& obj_;
  std::string prefix_;
};

json ParseJson(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

TrafficSourceSpec ParseSource(const json& j, const std::string& name) {
  Reader r(j, name);
  r.AllowOnly({"kind", "rate_pps", "rate_kbps", "size_bytes", "on_ms",
               "off_ms", "start_us", "stop_us", "phase_seed"});
  TrafficSourceSpec s;
  const std::string kind = r.String("kind", "cbr");
  if (kind == "cbr") {
    s.kind = SourceKind::kCbr;
  } else if (kind == "onoff") {
    s.kind = SourceKind::kOnOff;
  } else {
    throw ConfigError("field '" + r.Name("kind") + "' must be cbr or onoff");
  }
  s.size_bytes = static_cast<int>(r.Int("size_bytes", s.size_bytes));
  if (r.Has("rate_pps") == r.Has("rate_kbps")) {
    throw ConfigError("exactly one of '" + r.Name("rate_pps") + "' and '" +
                      r.Name("rate_kbps") + "' is required");
  }
  s.rate_pps = r.Has("rate_pps")
                   ? r.Number("rate_pps", 0)
                   : r.Number("rate_kbps", 0) * 1000.0 / (8.0 * s.size_bytes);
  s.on_ms = r.Number("on_ms", 0);
  s.off_ms = r.Number("off_ms", 0);
  s.start_us = r.Int("start_us", 0);
  s.stop_us = r.Int("stop_us", kForever);
  s.phase_seed = static_cast<std::uint64_t>(r.Int("phase_seed", 0));
  CheckSource(s, name);
  return s;
}

ChannelConfig ParseChannel(const json& j) {
  Reader r(j, "channel");
  r.AllowOnly({"bottleneck_bps", "queue_capacity_pkts", "base_propagation_us",
               "wire_overhead_bytes", "rto_initial_us", "rto_max_us",
               "tail_us", "seed"});
  ChannelConfig c;
  c.bottleneck_bps = r.Int("bottleneck_bps", c.bottleneck_bps);
  c.queue_capacity_pkts =
      static_cast<int>(r.Int("queue_capacity_pkts", c.queue_capacity_pkts));
  c.base_propagation_us = r.Int("base_propagation_us", c.base_propagation_us);
  c.wire_overhead_bytes =
      static_cast<int>(r.Int("wire_overhead_bytes", c.wire_overhead_bytes));
  c.rto_initial_us = r.Int("rto_initial_us", c.rto_initial_us);
  c.rto_max_us = r.Int("rto_max_us", c.rto_max_us);
  c.tail_us = r.Int("tail_us", c.tail_us);
  c.seed = static_cast<std::uint64_t>(r.Int("seed", 0));
  CheckChannelConfig(c);
  return c;
}

}  // namespace

ExperimentSpec ParseExperimentSpec(std::string_view json_text) {
  const json j = ParseJson(json_text);
  Reader r(j, "");
  r.AllowOnly({"id", "label", "repetitions", "sample_size", "normalization",
               "event_size_bytes", "warmup_ms", "fixed_sample", "channel",
               "cbr", "cross_traffic"});
  ExperimentSpec spec;
  spec.id = static_cast<int>(r.Int("id", spec.id));
  spec.label = r.String("label", "");
  spec.repetitions = static_cast<int>(r.Int("repetitions", spec.repetitions));
  const std::int64_t sample_size =
      r.Int("sample_size", static_cast<std::int64_t>(spec.sample_size));
  if (sample_size < 2) throw ConfigError("sample_size must be >= 2");
  spec.sample_size = static_cast<std::size_t>(sample_size);
  const std::string norm = r.String("normalization", "zscore");
  if (norm == "none") {
    spec.normalization = Normalization::kNone;
  } else if (norm == "zscore") {
    spec.normalization = Normalization::kZScore;
  } else {
    throw ConfigError("field 'normalization' must be none or zscore");
  }
  spec.event_size_bytes =
      static_cast<int>(r.Int("event_size_bytes", spec.event_size_bytes));
  spec.warmup_us = RoundMicros(r.Number("warmup_ms", 0) * 1000.0);
  spec.fixed_sample = r.Bool("fixed_sample", false);
  if (r.Has("channel")) spec.channel = ParseChannel(r.At("channel"));
  if (r.Has("cbr")) {
    Reader cbr(r.At("cbr"), "cbr");
    cbr.AllowOnly({"total_pps", "size_bytes"});
    spec.cbr_total_pps = cbr.Numbers("total_pps");
    spec.cbr_size_bytes = static_cast<int>(cbr.Int("size_bytes", 1024));
  }
  if (r.Has("cross_traffic")) {
    const json& list = r.At("cross_traffic");
    if (!list.is_array()) {
      throw ConfigError("field 'cross_traffic' must be an array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      spec.cross_traffic.push_back(
          ParseSource(list[i], "cross_traffic[" + std::to_string(i) + "]"));
    }
  }
  CheckExperimentSpec(spec);
  return spec;
}

ExperimentSpec LoadExperimentSpec(const std::filesystem::path& path) {
  try {
    return ParseExperimentSpec(ReadFile(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<ExperimentSpec> LoadExperimentDir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cfg") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .cfg files in " + dir.string());
  std::vector<ExperimentSpec> specs;
  for (const auto& f : files) specs.push_back(LoadExperimentSpec(f));
  return specs;
}

ProfileFile ParseProfile(std::string_view json_text) {
  const json j = ParseJson(json_text);
  Reader r(j, "");
  r.AllowOnly({"mean_hold_ms", "sd_hold_ms", "mean_gap_ms", "sd_gap_ms",
               "seed", "user_id"});
  ProfileFile out;
  TypistProfile& p = out.profile;
  p.mean_hold_us = r.Number("mean_hold_ms", 0) * 1000.0;
  p.sd_hold_us = r.Number("sd_hold_ms", 0) * 1000.0;
  auto per_class = [&](std::string_view key, double fallback) {
    std::array<double, kAdjacencyClasses> v;
    v.fill(fallback);
    if (!r.Has(key)) return v;
    const auto xs = r.Numbers(key);
    if (xs.size() == 1) {
      v.fill(xs[0] * 1000.0);
    } else if (xs.size() == kAdjacencyClasses) {
      for (int c = 0; c < kAdjacencyClasses; ++c) v[c] = xs[c] * 1000.0;
    } else {
      throw ConfigError("field '" + std::string(key) +
                        "' must have 1 or 5 entries");
    }
    return v;
  };
  if (!r.Has("mean_hold_ms")) throw ConfigError("missing field 'mean_hold_ms'");
  if (!r.Has("mean_gap_ms")) throw ConfigError("missing field 'mean_gap_ms'");
  p.mean_gap_us_by_class = per_class("mean_gap_ms", 0);
  p.sd_gap_us_by_class = per_class("sd_gap_ms", 0);
  p.seed = static_cast<std::uint64_t>(r.Int("seed", 0));
  out.user_id = static_cast<int>(r.Int("user_id", 1));
  try {
    CheckProfile(p);
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid profile: ") + e.what());
  }
  return out;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace kcs
