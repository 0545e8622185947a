#include "spikefab/yinyang.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "spikefab/rng.hpp"

namespace spikefab {

namespace {

double dist(double x, double y, double cx, double cy) {
  return std::hypot(x - cx, y - cy);
}

}  // namespace

int classify_point(double x, double y) {
  if (dist(x, y, kCenterX, kCenterY) > kBigRadius)
    throw std::domain_error("point outside the big circle");
  const double d_right = dist(x, y, kRightDotX, kCenterY);
  const double d_left = dist(x, y, kLeftDotX, kCenterY);
  if (std::min(d_right, d_left) <= kDotRadius) return kLabelDot;
  const bool yin =
      d_right <= 0.5 * kBigRadius || (d_left > 0.5 * kBigRadius && y <= 0.5);
  return yin ? kLabelYin : kLabelYang;
}

std::vector<RawPoint> generate(int n, std::mt19937& rng, bool balanced) {
  if (n < 1) throw ConfigError("dataset size must be >= 1");
  std::array<int, kNumClasses> target{};
  if (balanced) {
    const int base = n / kNumClasses;
    const int rem = n % kNumClasses;
    for (int c = 0; c < kNumClasses; ++c) target[c] = base + (c < rem ? 1 : 0);
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::array<int, kNumClasses> counts{};
  std::vector<RawPoint> points;
  points.reserve(n);
  while (static_cast<int>(points.size()) < n) {
    const double x = uni(rng);
    const double y = uni(rng);
    if (dist(x, y, kCenterX, kCenterY) > kBigRadius) continue;
    const int label = classify_point(x, y);
    if (balanced && counts[label] >= target[label]) continue;
    ++counts[label];
    points.push_back({x, y, label});
  }
  return points;
}

std::array<int, kNumInputs> encode(const RawPoint& p, int t_min, int t_max) {
  const double span = t_max - t_min;
  const std::array<double, 4> coords{p.x, p.y, 1.0 - p.x, 1.0 - p.y};
  std::array<int, kNumInputs> steps{};
  for (int c = 0; c < 4; ++c)
    steps[c] = static_cast<int>(std::floor(t_min + coords[c] * span + 0.5));
  steps[4] = 0;
  return steps;
}

std::vector<Sample> remove_ambiguous(std::vector<Sample> samples) {
  std::map<std::array<int, kNumInputs>, int> label_of;  // -2 = conflicting
  for (const Sample& s : samples) {
    auto [it, inserted] = label_of.try_emplace(s.spike_steps, s.raw.label);
    if (!inserted && it->second != s.raw.label) it->second = -2;
  }
  std::vector<Sample> kept;
  kept.reserve(samples.size());
  for (Sample& s : samples)
    if (label_of.at(s.spike_steps) != -2) kept.push_back(std::move(s));
  return kept;
}

void save_samples(const std::vector<Sample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  char buf[160];
  for (const Sample& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d %d %d %d %d %d\n", s.raw.x,
                  s.raw.y, s.raw.label, s.spike_steps[0], s.spike_steps[1],
                  s.spike_steps[2], s.spike_steps[3], s.spike_steps[4]);
    out << buf;
  }
  if (!out) throw ParseError("failed writing " + path);
}

std::vector<Sample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<Sample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    Sample s;
    if (!(ss >> s.raw.x >> s.raw.y >> s.raw.label >> s.spike_steps[0] >>
          s.spike_steps[1] >> s.spike_steps[2] >> s.spike_steps[3] >>
          s.spike_steps[4]))
      throw ParseError(path + ": parse error at line " + std::to_string(line_no));
    std::string extra;
    if (ss >> extra)
      throw ParseError(path + ": trailing tokens at line " + std::to_string(line_no));
    if (s.raw.label < 0 || s.raw.label >= kNumClasses)
      throw ParseError(path + ": bad label at line " + std::to_string(line_no));
    samples.push_back(s);
  }
  return samples;
}

std::vector<Sample> make_dataset(int n, std::uint64_t seed, bool balanced,
                                 int t_min, int t_max) {
  auto rng = make_rng(seed, "yinyang");
  std::vector<Sample> samples;
  samples.reserve(n);
  for (const RawPoint& p : generate(n, rng, balanced))
    samples.push_back({p, encode(p, t_min, t_max)});
  return remove_ambiguous(std::move(samples));
}

}  // namespace spikefab
