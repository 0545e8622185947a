#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spikefab/config.hpp"
#include "spikefab/engine.hpp"
#include "spikefab/reference.hpp"

namespace spikefab {

struct MetricsRow {
  int epoch = 0;
  std::string split;  // "train" or "test"
  double loss = 0.0;
  double accuracy = 0.0;
  double ms_per_batch = 0.0;
  std::uint64_t guards = 0;
  std::uint64_t silent = 0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,split,loss,accuracy,ms_per_batch,guards,silent";

std::string format_metrics_row(const MetricsRow& row);

// Line-delimited `layer row col value` weight files; values survive the
// round trip bit-exactly.
void save_weights(const std::string& path, std::span<const WeightMatrix> w);
std::vector<WeightMatrix> load_weights(const std::string& path);

std::unique_ptr<Engine> make_engine(const RunConfig& cfg,
                                    std::vector<WeightMatrix> weights);

// Train and test sets, loaded from the configured paths or generated from
// the configured seeds.
std::pair<std::vector<Sample>, std::vector<Sample>> prepare_datasets(
    const RunConfig& cfg);

struct EvalResult {
  double mean_loss = 0.0;
  double accuracy = 0.0;
  std::uint64_t silent = 0;
};
EvalResult evaluate_dataset(std::span<const Sample> samples,
                            std::span<const WeightMatrix> weights,
                            const RunConfig& cfg);

struct TrainResult {
  std::vector<MetricsRow> metrics;
  std::vector<WeightMatrix> final_weights;
  std::string metrics_path;
  std::string weights_path;
};

// One seed: init, epoch loop with per-epoch lr decay, per-epoch train/test
// metrics, final weights. Files land in cfg.out_dir as
// metrics_seed<seed>.csv / weights_seed<seed>.txt.
TrainResult train_one_seed(const RunConfig& cfg, std::uint64_t seed,
                           std::span<const Sample> train_set,
                           std::span<const Sample> test_set,
                           bool write_files = true);

// All configured seeds; returns one result per seed.
std::vector<TrainResult> train(const RunConfig& cfg);

struct CompareReport {
  int samples_compared = 0;
  std::uint64_t raster_mismatches = 0;
  std::uint64_t first_step_mismatches = 0;
  double max_abs_dv = 0.0;
  double max_abs_di = 0.0;
  double max_abs_dlambda = 0.0;
  double max_abs_dmu = 0.0;
  double max_abs_dgrad = 0.0;
  double max_abs_dweights = 0.0;

  bool identical() const {
    return raster_mismatches == 0 && first_step_mismatches == 0 &&
           max_abs_dv == 0.0 && max_abs_di == 0.0 && max_abs_dlambda == 0.0 &&
           max_abs_dmu == 0.0 && max_abs_dgrad == 0.0 && max_abs_dweights == 0.0;
  }
};

// Runs the fabric and the reference engine over the same batches with state
// recording and reports the largest deviations. perturb != 0 shifts one
// engine's initial weights (negative control).
CompareReport compare_engines(const RunConfig& cfg, std::uint64_t seed,
                              int min_samples, float perturb = 0.0f);

std::string format_compare_report(const CompareReport& r);

struct ProfileReport {
  int ticks_per_sample = 0;
  int batches = 0;
  double ms_per_batch_mean = 0.0;
  double ms_per_batch_min = 0.0;
  double ms_per_batch_max = 0.0;
};

ProfileReport profile_run(const RunConfig& cfg, int n_batches);

}  // namespace spikefab
