#include "kcs/keyboard.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <string_view>

namespace kcs {
namespace {

struct Row {
  std::string_view plain;
  std::string_view shifted;
  int first_column;
};

// Columns are offset so that keys stacked diagonally on a staggered
// keyboard (Q over A over Z) share a column.
constexpr Row kRows[] = {
    {"`1234567890-=", "~!@#$%^&*()_+", 0},
    {"qwertyuiop[]\\", "QWERTYUIOP{}|", 1},
    {"asdfghjkl;'", "ASDFGHJKL:\"", 1},
    {"zxcvbnm,./", "ZXCVBNM<>?", 1},
};

}  // namespace

KeyboardMap KeyboardMap::Qwerty(AdjacencyBounds bounds) {
  KeyboardMap map;
  map.bounds_ = bounds;
  for (int r = 0; r < 4; ++r) {
    const Row& row = kRows[r];
    for (std::size_t i = 0; i < row.plain.size(); ++i) {
      const KeyPosition pos{r, row.first_column + static_cast<int>(i)};
      map.coords_[static_cast<unsigned char>(row.plain[i])] = pos;
      map.coords_[static_cast<unsigned char>(row.shifted[i])] = pos;
    }
  }
  return map;
}

std::optional<KeyPosition> KeyboardMap::Position(int key_code) const {
  if (key_code < 0 || key_code >= static_cast<int>(coords_.size())) {
    return std::nullopt;
  }
  return coords_[key_code];
}

int KeyboardMap::AdjacencyClass(int key_a, int key_b) const {
  if (key_a == key_b) return 1;
  const auto a = Position(key_a);
  const auto b = Position(key_b);
  if (!a || !b) return 5;
  const int d = std::max(std::abs(a->row - b->row),
                         std::abs(a->column - b->column));
  if (d == 0) return 1;
  if (d <= bounds_.class2_max) return 2;
  if (d <= bounds_.class3_max) return 3;
  if (d <= bounds_.class4_max) return 4;
  return 5;
}

const KeyboardMap& DefaultKeyboard() {
  static const KeyboardMap map = KeyboardMap::Qwerty();
  return map;
}

}  // namespace kcs
