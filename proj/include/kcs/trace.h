#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "kcs/common.h"
#include "kcs/keyboard.h"

namespace kcs {

enum class KeyState : int { kPressed = 0, kReleased = 1 };

struct KeyEvent {
  int user_id = 0;
  KeyState key_state = KeyState::kPressed;
  int key_code = 0;
  Micros timestamp_us = 0;
  bool operator==(const KeyEvent&) const = default;
};

struct KeystrokeTrace {
  int user_id = 0;
  std::vector<KeyEvent> events;
  bool operator==(const KeystrokeTrace&) const = default;
};

struct Keystroke {
  int key_code = 0;
  Micros press_us = 0;
  Micros release_us = 0;
  bool operator==(const Keystroke&) const = default;
};

enum class ViolationKind {
  kUnmatchedPress,
  kUnmatchedRelease,
  kNonMonotone,
  kMixedUser,
};

struct Violation {
  ViolationKind kind;
  std::size_t event_index;
  bool operator==(const Violation&) const = default;
};

std::string_view ToString(ViolationKind kind);
std::string Describe(const Violation& v);

// Timing statistics of one synthetic typist. Gap statistics are
// press-to-press intervals, indexed by adjacency class - 1.
struct TypistProfile {
  double mean_hold_us = 0;
  double sd_hold_us = 0;
  std::array<double, kAdjacencyClasses> mean_gap_us_by_class{};
  std::array<double, kAdjacencyClasses> sd_gap_us_by_class{};
  std::uint64_t seed = 0;
};

// Throws Error naming the first invalid field.
void CheckProfile(const TypistProfile& profile);

// Records are "user_id,key_state,key_code,timestamp_ms" per line. Times are
// converted to microseconds (half away from zero) and events are stably
// sorted by time. Blank lines are skipped.
KeystrokeTrace ParseTrace(std::istream& in);
KeystrokeTrace ParseTrace(std::string_view text);

// Inverse of ParseTrace; milliseconds are written with the minimum number
// of fractional digits that represent the microsecond value exactly.
std::string SerializeTrace(const KeystrokeTrace& trace);

std::vector<Violation> ValidateTrace(const KeystrokeTrace& trace);

// Per key code, each press is matched with the earliest release not already
// claimed by an earlier press. Result is ordered by press time (then by
// press event order). Throws StructuralError on an unmatched event.
std::vector<Keystroke> PairEvents(const KeystrokeTrace& trace);

// Builds the event list for keystrokes, stably sorted by time.
KeystrokeTrace EventsFromKeystrokes(int user_id,
                                    const std::vector<Keystroke>& keys);

// Minimum spacing between consecutive synthetic events, about two keyboard
// scan periods.
constexpr Micros kMinEventSpacingUs = 2 * kMicrosPerMilli;

// Hold times ~ N(mean_hold, sd_hold) and press-to-press gaps ~
// N(mean_gap[class], sd_gap[class]), both truncated below at 1 ms. Times are
// quantized to whole milliseconds and an event closer than
// kMinEventSpacingUs to its predecessor is moved later to that spacing.
// A key is released no later than its next press.
KeystrokeTrace SynthTrace(const TypistProfile& profile,
                          const std::vector<int>& key_codes,
                          std::uint64_t seed, const KeyboardMap& map,
                          int user_id = 0);

// ASCII text to key codes; characters outside 0..127 are dropped.
std::vector<int> KeyCodesFromText(std::string_view text);

// Contiguous run of n keystrokes starting at a seeded uniform index, with
// timestamps re-based so the first event is at 0. Throws Error if the
// trace has fewer than n keystrokes.
KeystrokeTrace SelectSample(const KeystrokeTrace& trace, std::size_t n,
                            std::uint64_t seed);

}  // namespace kcs
