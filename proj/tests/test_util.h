#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kcs/trace.h"

namespace kcs::testing {

inline std::filesystem::path SourcePath(const std::string& rel) {
  return std::filesystem::path(KCS_SOURCE_DIR) / rel;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("kcs_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// Keystrokes with arbitrary rollover: press gaps can be shorter than the
// hold, and a key can repeat. No two events share a timestamp.
inline std::vector<Keystroke> RandomKeystrokes(std::mt19937_64& gen,
                                               std::size_t n) {
  static const std::string kKeys =
      "abcdefghijklmnopqrstuvwxyz0123456789 ,.;'[]-=/\\`ABCXYZ!@#\n\t";
  std::uniform_int_distribution<std::size_t> key(0, kKeys.size() - 1);
  std::uniform_int_distribution<Micros> gap(1, 400000);
  std::uniform_int_distribution<Micros> hold(1, 300000);
  std::vector<Keystroke> out;
  Micros t = std::uniform_int_distribution<Micros>(0, 1000000)(gen);
  for (std::size_t i = 0; i < n; ++i) {
    Keystroke k;
    k.key_code = static_cast<unsigned char>(kKeys[key(gen)]);
    // Odd press times and even release times keep every timestamp distinct.
    k.press_us = 2 * t + 1;
    k.release_us = 2 * (t + hold(gen));
    // A key must be released before it is pressed again.
    auto busy = [&](int code) {
      for (const Keystroke& prev : out) {
        if (prev.key_code == code && prev.release_us > k.press_us) return true;
      }
      return false;
    };
    for (int code = 128; busy(k.key_code); ++code) k.key_code = code;
    out.push_back(k);
    t += gap(gen);
  }
  return out;
}

}  // namespace kcs::testing
