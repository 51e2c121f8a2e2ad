#pragma once

#include <array>
#include <optional>

namespace kcs {

struct KeyPosition {
  int row = 0;
  int column = 0;
  bool operator==(const KeyPosition&) const = default;
};

// Chebyshev-distance cut points separating adjacency classes 2..5.
// Distance 0 is class 1 (same physical key).
struct AdjacencyBounds {
  int class2_max = 1;
  int class3_max = 2;
  int class4_max = 4;
};

constexpr int kAdjacencyClasses = 5;

// Grid positions of the printable keys of a US QWERTY layout, indexed by
// ASCII code. Upper- and lower-case letters and shifted symbols share the
// physical key of their unshifted form. Codes without an entry (space,
// enter, modifiers, arrows, anything >= 128) are off-grid.
class KeyboardMap {
 public:
  static KeyboardMap Qwerty(AdjacencyBounds bounds = {});

  std::optional<KeyPosition> Position(int key_code) const;
  const AdjacencyBounds& bounds() const { return bounds_; }

  // 1 for the same key, 2..4 by grid distance, 5 for far or off-grid pairs.
  // Symmetric in its arguments.
  int AdjacencyClass(int key_a, int key_b) const;

 private:
  std::array<std::optional<KeyPosition>, 128> coords_{};
  AdjacencyBounds bounds_;
};

// Shared immutable QWERTY map with default bounds.
const KeyboardMap& DefaultKeyboard();

}  // namespace kcs
