#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spikefab/common.hpp"

namespace spikefab {

// Yin-Yang geometry, fixed here once: unit square, big circle of radius 0.5
// around (0.5, 0.5), dot radius 0.1 around (0.25, 0.5) and (0.75, 0.5).
// Outside the dots, yin is the right lobe plus the lower half outside the
// left lobe; yang is the rest.
inline constexpr double kBigRadius = 0.5;
inline constexpr double kDotRadius = 0.1;
inline constexpr double kCenterX = 0.5;
inline constexpr double kCenterY = 0.5;
inline constexpr double kRightDotX = 0.75;
inline constexpr double kLeftDotX = 0.25;

inline constexpr int kLabelYin = 0;
inline constexpr int kLabelYang = 1;
inline constexpr int kLabelDot = 2;
inline constexpr int kNumClasses = 3;
inline constexpr int kNumInputs = 5;  // x, y, 1-x, 1-y, bias

struct RawPoint {
  double x = 0.0;
  double y = 0.0;
  int label = 0;
};

struct Sample {
  RawPoint raw;
  std::array<int, kNumInputs> spike_steps{};  // bias entry is always 0

  bool operator==(const Sample& o) const {
    return raw.x == o.raw.x && raw.y == o.raw.y && raw.label == o.raw.label &&
           spike_steps == o.spike_steps;
  }
};

// Throws std::domain_error for points outside the big circle.
int classify_point(double x, double y);

// Rejection-samples n uniform points inside the big circle. With balanced
// set, per-class counts differ by at most one.
std::vector<RawPoint> generate(int n, std::mt19937& rng, bool balanced);

// Coordinates (x, y, 1-x, 1-y) map to round-half-up(t_min + c*(t_max-t_min));
// the fifth entry is the bias spike at step 0.
std::array<int, kNumInputs> encode(const RawPoint& p, int t_min, int t_max);

// Drops every sample whose encoded spike steps collide with a differently
// labelled sample. Same-label duplicates are kept.
std::vector<Sample> remove_ambiguous(std::vector<Sample> samples);

// Line-delimited records: `x y label s0 s1 s2 s3 s4`.
void save_samples(const std::vector<Sample>& samples, const std::string& path);
std::vector<Sample> load_samples(const std::string& path);

// generate + encode + remove_ambiguous with a dedicated stream seed.
std::vector<Sample> make_dataset(int n, std::uint64_t seed, bool balanced,
                                 int t_min, int t_max);

}  // namespace spikefab
