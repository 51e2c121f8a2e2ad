#include "kcs/trace.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include "kcs/rng.h"

namespace kcs {
namespace {

struct PairedIndices {
  std::size_t press;
  std::size_t release;
};

// FIFO matching per key code in event order. Unmatched events are reported
// through the out-params when given.
std::vector<PairedIndices> MatchPresses(
    const std::vector<KeyEvent>& events,
    std::vector<std::size_t>* unmatched_presses,
    std::vector<std::size_t>* unmatched_releases) {
  std::map<int, std::deque<std::size_t>> pending;
  std::vector<PairedIndices> pairs;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const KeyEvent& e = events[i];
    if (e.key_state == KeyState::kPressed) {
      pending[e.key_code].push_back(i);
      continue;
    }
    auto it = pending.find(e.key_code);
    if (it == pending.end() || it->second.empty()) {
      if (unmatched_releases) unmatched_releases->push_back(i);
      continue;
    }
    pairs.push_back({it->second.front(), i});
    it->second.pop_front();
  }
  if (unmatched_presses) {
    for (const auto& [code, queue] : pending) {
      unmatched_presses->insert(unmatched_presses->end(), queue.begin(),
                                queue.end());
    }
    std::sort(unmatched_presses->begin(), unmatched_presses->end());
  }
  std::sort(pairs.begin(), pairs.end(),
            [&](const PairedIndices& a, const PairedIndices& b) {
              const Micros ta = events[a.press].timestamp_us;
              const Micros tb = events[b.press].timestamp_us;
              return ta != tb ? ta < tb : a.press < b.press;
            });
  return pairs;
}

std::vector<PairedIndices> MatchOrThrow(const KeystrokeTrace& trace) {
  std::vector<std::size_t> presses, releases;
  auto pairs = MatchPresses(trace.events, &presses, &releases);
  if (!presses.empty()) {
    throw StructuralError("unmatched press at event " +
                          std::to_string(presses.front()));
  }
  if (!releases.empty()) {
    throw StructuralError("unmatched release at event " +
                          std::to_string(releases.front()));
  }
  return pairs;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

int ParseInt(std::string_view field, const char* name, int line) {
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() ||
      field.empty()) {
    throw ParseError(std::string(name) + " is not an integer: '" +
                         std::string(field) + "'",
                     line);
  }
  return value;
}

bool IsDigits(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

// Exact decimal milliseconds to microseconds; the fourth fractional digit
// decides rounding (values are non-negative, so half-up is away from zero).
Micros ParseMillis(std::string_view field, int line) {
  const std::size_t dot = field.find('.');
  const std::string_view whole = field.substr(0, dot);
  const std::string_view frac =
      dot == std::string_view::npos ? std::string_view{} : field.substr(dot + 1);
  if (whole.empty() || !IsDigits(whole) || !IsDigits(frac) ||
      (dot != std::string_view::npos && frac.empty())) {
    throw ParseError("timestamp_ms is not a non-negative decimal: '" +
                         std::string(field) + "'",
                     line);
  }
  if (whole.size() > 12) throw ParseError("timestamp_ms out of range", line);
  Micros us = 0;
  for (char c : whole) us = us * 10 + (c - '0');
  us *= kMicrosPerMilli;
  Micros frac_us = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    frac_us = frac_us * 10 + (i < frac.size() ? frac[i] - '0' : 0);
  }
  if (frac.size() > 3 && frac[3] >= '5') ++frac_us;
  return us + frac_us;
}

std::string FormatMillis(Micros us) {
  std::string out = std::to_string(us / kMicrosPerMilli);
  Micros rem = us % kMicrosPerMilli;
  if (rem == 0) return out;
  std::string digits = std::to_string(rem);
  digits.insert(0, 3 - digits.size(), '0');
  while (digits.back() == '0') digits.pop_back();
  return out + "." + digits;
}

}  // namespace

std::string_view ToString(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kUnmatchedPress:
      return "UnmatchedPress";
    case ViolationKind::kUnmatchedRelease:
      return "UnmatchedRelease";
    case ViolationKind::kNonMonotone:
      return "NonMonotone";
    case ViolationKind::kMixedUser:
      return "MixedUser";
  }
  return "Unknown";
}

std::string Describe(const Violation& v) {
  return std::string(ToString(v.kind)) + "@" + std::to_string(v.event_index);
}

void CheckProfile(const TypistProfile& p) {
  auto positive = [](double x) { return std::isfinite(x) && x > 0; };
  auto non_negative = [](double x) { return std::isfinite(x) && x >= 0; };
  if (!positive(p.mean_hold_us)) throw Error("mean_hold must be > 0");
  if (!non_negative(p.sd_hold_us)) throw Error("sd_hold must be >= 0");
  for (int c = 0; c < kAdjacencyClasses; ++c) {
    if (!positive(p.mean_gap_us_by_class[c])) {
      throw Error("mean_gap for class " + std::to_string(c + 1) +
                  " must be > 0");
    }
    if (!non_negative(p.sd_gap_us_by_class[c])) {
      throw Error("sd_gap for class " + std::to_string(c + 1) +
                  " must be >= 0");
    }
  }
}

KeystrokeTrace ParseTrace(std::istream& in) {
  KeystrokeTrace trace;
  bool have_user = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = SplitFields(line);
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    KeyEvent e;
    e.user_id = ParseInt(fields[0], "user_id", line_no);
    const int state = ParseInt(fields[1], "key_state", line_no);
    if (state != 0 && state != 1) {
      throw ParseError("key_state must be 0 or 1", line_no);
    }
    e.key_state = static_cast<KeyState>(state);
    e.key_code = ParseInt(fields[2], "key_code", line_no);
    e.timestamp_us = ParseMillis(fields[3], line_no);
    if (!have_user) {
      trace.user_id = e.user_id;
      have_user = true;
    } else if (e.user_id != trace.user_id) {
      throw StructuralError("mixed user ids " + std::to_string(trace.user_id) +
                            " and " + std::to_string(e.user_id) +
                            " at line " + std::to_string(line_no));
    }
    trace.events.push_back(e);
  }
  std::stable_sort(trace.events.begin(), trace.events.end(),
                   [](const KeyEvent& a, const KeyEvent& b) {
                     return a.timestamp_us < b.timestamp_us;
                   });
  return trace;
}

KeystrokeTrace ParseTrace(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ParseTrace(in);
}

std::string SerializeTrace(const KeystrokeTrace& trace) {
  std::string out;
  for (const KeyEvent& e : trace.events) {
    out += std::to_string(e.user_id);
    out += ',';
    out += std::to_string(static_cast<int>(e.key_state));
    out += ',';
    out += std::to_string(e.key_code);
    out += ',';
    out += FormatMillis(e.timestamp_us);
    out += '\n';
  }
  return out;
}

std::vector<Violation> ValidateTrace(const KeystrokeTrace& trace) {
  std::vector<Violation> out;
  const auto& events = trace.events;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].user_id != trace.user_id) {
      out.push_back({ViolationKind::kMixedUser, i});
    }
    if (i > 0 && events[i].timestamp_us < events[i - 1].timestamp_us) {
      out.push_back({ViolationKind::kNonMonotone, i});
    }
  }
  std::vector<std::size_t> presses, releases;
  MatchPresses(events, &presses, &releases);
  for (std::size_t i : presses) out.push_back({ViolationKind::kUnmatchedPress, i});
  for (std::size_t i : releases) {
    out.push_back({ViolationKind::kUnmatchedRelease, i});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Violation& a, const Violation& b) {
                     return a.event_index < b.event_index;
                   });
  return out;
}

std::vector<Keystroke> PairEvents(const KeystrokeTrace& trace) {
  std::vector<Keystroke> keys;
  for (const auto& p : MatchOrThrow(trace)) {
    const KeyEvent& press = trace.events[p.press];
    keys.push_back({press.key_code, press.timestamp_us,
                    trace.events[p.release].timestamp_us});
  }
  return keys;
}

KeystrokeTrace EventsFromKeystrokes(int user_id,
                                    const std::vector<Keystroke>& keys) {
  KeystrokeTrace trace{user_id, {}};
  trace.events.reserve(keys.size() * 2);
  for (const Keystroke& k : keys) {
    trace.events.push_back({user_id, KeyState::kPressed, k.key_code, k.press_us});
    trace.events.push_back(
        {user_id, KeyState::kReleased, k.key_code, k.release_us});
  }
  std::stable_sort(trace.events.begin(), trace.events.end(),
                   [](const KeyEvent& a, const KeyEvent& b) {
                     return a.timestamp_us < b.timestamp_us;
                   });
  return trace;
}

KeystrokeTrace SynthTrace(const TypistProfile& profile,
                          const std::vector<int>& key_codes,
                          std::uint64_t seed, const KeyboardMap& map,
                          int user_id) {
  if (key_codes.empty()) throw Error("synthetic text must be non-empty");
  CheckProfile(profile);
  Rng rng(seed);
  auto draw_ms = [&](double mean_us, double sd_us) -> Micros {
    const double us = std::max(rng.Normal(mean_us, sd_us), 1000.0);
    return std::max<Micros>(1, std::llround(us / 1000.0)) * kMicrosPerMilli;
  };

  const std::size_t n = key_codes.size();
  std::vector<Keystroke> keys(n);
  Micros press = 0;
  for (std::size_t i = 0; i < n; ++i) {
    keys[i].key_code = key_codes[i];
    keys[i].press_us = press;
    keys[i].release_us = press + draw_ms(profile.mean_hold_us, profile.sd_hold_us);
    if (i + 1 < n) {
      const int cls = map.AdjacencyClass(key_codes[i], key_codes[i + 1]) - 1;
      press += draw_ms(profile.mean_gap_us_by_class[cls],
                       profile.sd_gap_us_by_class[cls]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (keys[j].key_code == keys[i].key_code) {
        keys[i].release_us = std::min(keys[i].release_us, keys[j].press_us);
        break;
      }
    }
  }
  KeystrokeTrace trace = EventsFromKeystrokes(user_id, keys);
  for (std::size_t i = 1; i < trace.events.size(); ++i) {
    Micros& t = trace.events[i].timestamp_us;
    t = std::max(t, trace.events[i - 1].timestamp_us + kMinEventSpacingUs);
  }
  return trace;
}

std::vector<int> KeyCodesFromText(std::string_view text) {
  std::vector<int> codes;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 128) codes.push_back(u);
  }
  return codes;
}

KeystrokeTrace SelectSample(const KeystrokeTrace& trace, std::size_t n,
                            std::uint64_t seed) {
  const auto pairs = MatchOrThrow(trace);
  if (pairs.size() < n) {
    throw Error("trace has " + std::to_string(pairs.size()) +
                " keystrokes, sample needs " + std::to_string(n));
  }
  KeystrokeTrace sample{trace.user_id, {}};
  if (n == 0) return sample;
  Rng rng(seed);
  const std::size_t start = rng.Below(pairs.size() - n + 1);
  std::vector<std::size_t> indices;
  indices.reserve(2 * n);
  for (std::size_t k = start; k < start + n; ++k) {
    indices.push_back(pairs[k].press);
    indices.push_back(pairs[k].release);
  }
  std::sort(indices.begin(), indices.end());
  Micros origin = trace.events[indices.front()].timestamp_us;
  for (std::size_t i : indices) {
    origin = std::min(origin, trace.events[i].timestamp_us);
  }
  for (std::size_t i : indices) {
    KeyEvent e = trace.events[i];
    e.timestamp_us -= origin;
    sample.events.push_back(e);
  }
  return sample;
}

}  // namespace kcs
