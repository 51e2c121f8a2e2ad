#pragma once

#include <array>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "kcs/common.h"
#include "kcs/keyboard.h"
#include "kcs/trace.h"

namespace kcs {

// Timing features of one digraph (k_i, k_{i+1}).
struct DigraphFeatures {
  int key_a = 0;
  int key_b = 0;
  Micros pr_us = 0;         // hold time of key_a
  Micros pp_us = 0;         // press(b) - press(a)
  Micros rr_us = 0;         // release(b) - release(a), signed
  Micros rp_signed_us = 0;  // press(b) - release(a), negative under rollover
  Micros rp_abs_us = 0;
  int adjacency_class = 5;
};

enum Feature : int { kPr = 0, kPp = 1, kRr = 2, kRp = 3 };
constexpr int kFeatureCount = 4;
constexpr int kTemplateSize = kAdjacencyClasses * kFeatureCount;

using TemplateVector = std::array<double, kTemplateSize>;

// Per adjacency class mean of each feature, in milliseconds. Row-major
// flattening (class-major, features PR, PP, RR, |RP|) gives the
// 20-dimensional vector compared by EuclideanDistance.
struct Template {
  std::array<std::array<double, kFeatureCount>, kAdjacencyClasses> values_ms{};
  std::array<int, kAdjacencyClasses> counts{};
  int user_id = 0;
  int sample_id = 0;

  TemplateVector Flatten() const;
  bool operator==(const Template&) const = default;
};

// Throws Error if fewer than two keystrokes.
std::vector<DigraphFeatures> ExtractDigraphFeatures(
    std::span<const Keystroke> sample, const KeyboardMap& map);

// Classes without digraphs take the mean of that feature over all
// digraphs. Throws Error on empty input.
Template BuildTemplate(std::span<const DigraphFeatures> features, int user_id,
                       int sample_id);

// Pair, extract and average in one step.
Template TemplateFromTrace(const KeystrokeTrace& trace, const KeyboardMap& map,
                           int sample_id = 1);

double EuclideanDistance(std::span<const double, kTemplateSize> a,
                         std::span<const double, kTemplateSize> b);
double EuclideanDistance(const Template& a, const Template& b);

// CSV with header user_id,sample_id,class,pr_ms,pp_ms,rr_ms,rp_ms,count and
// five rows per template, values to 6 decimals.
std::string TemplatesToCsv(std::span<const Template> templates);
std::vector<Template> TemplatesFromCsv(std::istream& in);

}  // namespace kcs
