#include "kcs/common.h"

#include <cmath>
#include <cstdio>

namespace kcs {

Micros RoundMicros(double us) { return static_cast<Micros>(std::llround(us)); }

std::string FormatFixed(double value, int decimals) {
  if (value == 0.0) value = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string out(buf);
  if (out.find_first_not_of("-0.") == std::string::npos && out[0] == '-') {
    out.erase(0, 1);
  }
  return out;
}

}  // namespace kcs
