#include "kcs/features.h"

#include <cmath>
#include <cstdlib>
#include <string_view>

namespace kcs {
namespace {

constexpr std::string_view kCsvHeader =
    "user_id,sample_id,class,pr_ms,pp_ms,rr_ms,rp_ms,count";

Micros FeatureValue(const DigraphFeatures& d, int feature) {
  switch (feature) {
    case kPr:
      return d.pr_us;
    case kPp:
      return d.pp_us;
    case kRr:
      return d.rr_us;
    default:
      return d.rp_abs_us;
  }
}

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

double ParseDouble(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError("not a number: '" + s + "'", line);
  }
  return v;
}

int ParseInteger(const std::string& s, int line) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ParseError("not an integer: '" + s + "'", line);
  }
  return static_cast<int>(v);
}

}  // namespace

TemplateVector Template::Flatten() const {
  TemplateVector v{};
  for (int c = 0; c < kAdjacencyClasses; ++c) {
    for (int f = 0; f < kFeatureCount; ++f) {
      v[c * kFeatureCount + f] = values_ms[c][f];
    }
  }
  return v;
}

std::vector<DigraphFeatures> ExtractDigraphFeatures(
    std::span<const Keystroke> sample, const KeyboardMap& map) {
  if (sample.size() < 2) throw Error("need at least two keystrokes");
  std::vector<DigraphFeatures> out;
  out.reserve(sample.size() - 1);
  for (std::size_t i = 0; i + 1 < sample.size(); ++i) {
    const Keystroke& a = sample[i];
    const Keystroke& b = sample[i + 1];
    DigraphFeatures d;
    d.key_a = a.key_code;
    d.key_b = b.key_code;
    d.pr_us = a.release_us - a.press_us;
    d.pp_us = b.press_us - a.press_us;
    d.rr_us = b.release_us - a.release_us;
    d.rp_signed_us = b.press_us - a.release_us;
    d.rp_abs_us = std::abs(d.rp_signed_us);
    d.adjacency_class = map.AdjacencyClass(a.key_code, b.key_code);
    out.push_back(d);
  }
  return out;
}

Template BuildTemplate(std::span<const DigraphFeatures> features, int user_id,
                       int sample_id) {
  if (features.empty()) throw Error("cannot build a template from no digraphs");
  std::array<std::array<Micros, kFeatureCount>, kAdjacencyClasses> sums{};
  std::array<Micros, kFeatureCount> totals{};
  Template t;
  t.user_id = user_id;
  t.sample_id = sample_id;
  for (const DigraphFeatures& d : features) {
    const int c = d.adjacency_class - 1;
    ++t.counts[c];
    for (int f = 0; f < kFeatureCount; ++f) {
      sums[c][f] += FeatureValue(d, f);
      totals[f] += FeatureValue(d, f);
    }
  }
  const double n = static_cast<double>(features.size());
  for (int c = 0; c < kAdjacencyClasses; ++c) {
    for (int f = 0; f < kFeatureCount; ++f) {
      t.values_ms[c][f] =
          t.counts[c] > 0
              ? static_cast<double>(sums[c][f]) / (t.counts[c] * 1000.0)
              : static_cast<double>(totals[f]) / (n * 1000.0);
    }
  }
  return t;
}

Template TemplateFromTrace(const KeystrokeTrace& trace, const KeyboardMap& map,
                           int sample_id) {
  const auto keys = PairEvents(trace);
  const auto digraphs = ExtractDigraphFeatures(keys, map);
  return BuildTemplate(digraphs, trace.user_id, sample_id);
}

double EuclideanDistance(std::span<const double, kTemplateSize> a,
                         std::span<const double, kTemplateSize> b) {
  double sum = 0;
  for (int i = 0; i < kTemplateSize; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double EuclideanDistance(const Template& a, const Template& b) {
  const TemplateVector va = a.Flatten();
  const TemplateVector vb = b.Flatten();
  return EuclideanDistance(va, vb);
}

std::string TemplatesToCsv(std::span<const Template> templates) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const Template& t : templates) {
    for (int c = 0; c < kAdjacencyClasses; ++c) {
      out += std::to_string(t.user_id) + ',' + std::to_string(t.sample_id) +
             ',' + std::to_string(c + 1);
      for (int f = 0; f < kFeatureCount; ++f) {
        out += ',' + FormatFixed(t.values_ms[c][f], 6);
      }
      out += ',' + std::to_string(t.counts[c]) + '\n';
    }
  }
  return out;
}

std::vector<Template> TemplatesFromCsv(std::istream& in) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty template file", 0);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError("unexpected template header", 1);

  std::vector<Template> out;
  int row_in_template = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = Split(line);
    if (fields.size() != 8) {
      throw ParseError("expected 8 fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    const int user = ParseInteger(fields[0], line_no);
    const int sample = ParseInteger(fields[1], line_no);
    const int cls = ParseInteger(fields[2], line_no);
    if (row_in_template == 0) {
      out.emplace_back();
      out.back().user_id = user;
      out.back().sample_id = sample;
    } else if (user != out.back().user_id || sample != out.back().sample_id) {
      throw ParseError("template has fewer than 5 class rows", line_no);
    }
    if (cls != row_in_template + 1) {
      throw ParseError("expected class " + std::to_string(row_in_template + 1),
                       line_no);
    }
    Template& t = out.back();
    for (int f = 0; f < kFeatureCount; ++f) {
      t.values_ms[cls - 1][f] = ParseDouble(fields[3 + f], line_no);
    }
    t.counts[cls - 1] = ParseInteger(fields[7], line_no);
    row_in_template = (row_in_template + 1) % kAdjacencyClasses;
  }
  if (row_in_template != 0) {
    throw ParseError("template has fewer than 5 class rows", line_no);
  }
  return out;
}

}  // namespace kcs
