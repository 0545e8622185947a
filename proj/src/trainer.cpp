#include "spikefab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "spikefab/fabric.hpp"
#include "spikefab/rng.hpp"

namespace spikefab {

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string format_metrics_row(const MetricsRow& row) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%d,%s,%.9g,%.6f,%.3f,%llu,%llu", row.epoch,
                row.split.c_str(), row.loss, row.accuracy, row.ms_per_batch,
                static_cast<unsigned long long>(row.guards),
                static_cast<unsigned long long>(row.silent));
  return buf;
}

void save_weights(const std::string& path, std::span<const WeightMatrix> w) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  char buf[96];
  for (std::size_t l = 0; l < w.size(); ++l)
    for (int j = 0; j < w[l].n_out; ++j)
      for (int k = 0; k < w[l].n_in; ++k) {
        std::snprintf(buf, sizeof buf, "%zu %d %d %.9g\n", l, j, k, w[l].at(j, k));
        out << buf;
      }
  if (!out) throw ParseError("failed writing " + path);
}

std::vector<WeightMatrix> load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  struct Entry {
    int layer, row, col;
    float value;
  };
  std::vector<Entry> entries;
  int max_layer = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    Entry e;
    if (!(ss >> e.layer >> e.row >> e.col >> e.value) || e.layer < 0 ||
        e.row < 0 || e.col < 0)
      throw ParseError(path + ": parse error at line " + std::to_string(line_no));
    max_layer = std::max(max_layer, e.layer);
    entries.push_back(e);
  }
  if (max_layer < 0) throw ParseError(path + ": no weights found");
  std::vector<int> rows(max_layer + 1, 0), cols(max_layer + 1, 0);
  for (const Entry& e : entries) {
    rows[e.layer] = std::max(rows[e.layer], e.row + 1);
    cols[e.layer] = std::max(cols[e.layer], e.col + 1);
  }
  std::vector<WeightMatrix> w;
  for (int l = 0; l <= max_layer; ++l) w.emplace_back(rows[l], cols[l]);
  for (const Entry& e : entries) w[e.layer].at(e.row, e.col) = e.value;
  return w;
}

std::unique_ptr<Engine> make_engine(const RunConfig& cfg,
                                    std::vector<WeightMatrix> weights) {
  if (cfg.engine == "fabric")
    return std::make_unique<FabricEngine>(cfg, std::move(weights));
  return std::make_unique<ReferenceEngine>(cfg, std::move(weights));
}

std::pair<std::vector<Sample>, std::vector<Sample>> prepare_datasets(
    const RunConfig& cfg) {
  const DataConfig& d = cfg.data;
  std::vector<Sample> train =
      d.train_path.empty()
          ? make_dataset(d.train_n, d.train_seed, d.balanced, d.t_min, d.t_max)
          : load_samples(d.train_path);
  std::vector<Sample> test =
      d.test_path.empty()
          ? make_dataset(d.test_n, d.test_seed, d.balanced, d.t_min, d.t_max)
          : load_samples(d.test_path);
  return {std::move(train), std::move(test)};
}

EvalResult evaluate_dataset(std::span<const Sample> samples,
                            std::span<const WeightMatrix> weights,
                            const RunConfig& cfg) {
  const LayerParams params = cfg.layer_params();
  const LossConfig loss_cfg = cfg.loss_config();
  EvalResult r;
  if (samples.empty()) return r;
  int correct = 0;
  for (const Sample& s : samples) {
    const ForwardOutcome out = dense_forward(s, weights, params, loss_cfg);
    r.mean_loss += out.loss;
    r.silent += static_cast<std::uint64_t>(out.silent);
    if (out.prediction == s.raw.label) ++correct;
  }
  r.mean_loss /= static_cast<double>(samples.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  return r;
}

TrainResult train_one_seed(const RunConfig& cfg, std::uint64_t seed,
                           std::span<const Sample> train_set,
                           std::span<const Sample> test_set, bool write_files) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("empty training set");

  auto engine = make_engine(cfg, init_network_weights(cfg, seed));
  AdamState adam = AdamState::make(cfg.optim, engine->weights());

  std::ofstream trace;
  if (!cfg.trace_path.empty()) {
    trace.open(cfg.trace_path);
    if (!trace) throw ConfigError("cannot open trace file " + cfg.trace_path);
    if (auto* fab = dynamic_cast<FabricEngine*>(engine.get()))
      fab->set_trace(&trace);
  }

  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  int batches_done = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      auto rng = make_rng(seed, "shuffle", static_cast<std::uint64_t>(epoch));
      std::shuffle(order.begin(), order.end(), rng);
    }
    std::uint64_t guards = 0;
    std::uint64_t silent_train = 0;
    double batch_ms_total = 0.0;
    int batches_this_epoch = 0;
    std::vector<Sample> batch;
    for (std::size_t pos = 0; pos < order.size();
         pos += static_cast<std::size_t>(cfg.batch_size)) {
      if (cfg.max_batches > 0 && batches_done >= cfg.max_batches) break;
      const std::size_t end =
          std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = pos; i < end; ++i) batch.push_back(train_set[order[i]]);
      const double t0 = now_ms();
      const BatchStats stats = engine->train_batch(batch, adam);
      batch_ms_total += now_ms() - t0;
      ++batches_this_epoch;
      ++batches_done;
      guards += stats.guard_hits;
      for (const SampleStats& s : stats.samples)
        silent_train += static_cast<std::uint64_t>(s.silent_outputs);
    }
    epoch_decay(adam);

    const double ms_per_batch =
        batches_this_epoch > 0 ? batch_ms_total / batches_this_epoch : 0.0;
    const EvalResult on_train = evaluate_dataset(train_set, engine->weights(), cfg);
    const EvalResult on_test = evaluate_dataset(test_set, engine->weights(), cfg);
    result.metrics.push_back({epoch, "train", on_train.mean_loss,
                              on_train.accuracy, ms_per_batch, guards,
                              silent_train});
    result.metrics.push_back({epoch, "test", on_test.mean_loss, on_test.accuracy,
                              ms_per_batch, 0, on_test.silent});
    if (cfg.max_batches > 0 && batches_done >= cfg.max_batches) break;
  }

  result.final_weights = engine->weights();
  if (write_files) {
    std::filesystem::create_directories(cfg.out_dir);
    result.metrics_path =
        cfg.out_dir + "/metrics_seed" + std::to_string(seed) + ".csv";
    result.weights_path =
        cfg.out_dir + "/weights_seed" + std::to_string(seed) + ".txt";
    std::ofstream mf(result.metrics_path);
    if (!mf) throw ConfigError("cannot open " + result.metrics_path);
    mf << kMetricsHeader << '\n';
    for (const MetricsRow& row : result.metrics)
      mf << format_metrics_row(row) << '\n';
    save_weights(result.weights_path, result.final_weights);
  }
  return result;
}

std::vector<TrainResult> train(const RunConfig& cfg) {
  cfg.validate();
  auto [train_set, test_set] = prepare_datasets(cfg);
  std::vector<TrainResult> results;
  for (std::uint64_t seed : cfg.seeds)
    results.push_back(train_one_seed(cfg, seed, train_set, test_set));
  return results;
}

namespace {

void accumulate_diff(double& slot, std::span<const float> a,
                     std::span<const float> b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    slot = std::max(slot, std::fabs(static_cast<double>(a[i]) - b[i]));
}

}  // namespace

CompareReport compare_engines(const RunConfig& cfg, std::uint64_t seed,
                              int min_samples, float perturb) {
  RunConfig fab_cfg = cfg;
  fab_cfg.engine = "fabric";
  RunConfig ref_cfg = cfg;
  ref_cfg.engine = "reference";

  auto weights = init_network_weights(cfg, seed);
  auto perturbed = weights;
  if (perturb != 0.0f)
    for (auto& layer : perturbed)
      for (float& x : layer.w) x += perturb;

  FabricEngine fabric(fab_cfg, std::move(perturbed));
  ReferenceEngine reference(ref_cfg, std::move(weights));
  fabric.set_recording(true);
  reference.set_recording(true);
  AdamState adam_fab = AdamState::make(cfg.optim, fabric.weights());
  AdamState adam_ref = AdamState::make(cfg.optim, reference.weights());

  auto [train_set, test_set] = prepare_datasets(cfg);
  (void)test_set;
  if (train_set.empty()) throw ConfigError("empty dataset");

  CompareReport report;
  std::size_t pos = 0;
  while (report.samples_compared < min_samples) {
    std::vector<Sample> batch;
    for (int i = 0; i < cfg.batch_size; ++i) {
      batch.push_back(train_set[pos % train_set.size()]);
      ++pos;
    }
    fabric.train_batch(batch, adam_fab);
    reference.train_batch(batch, adam_ref);
    const BatchRecording& fr = fabric.recording();
    const BatchRecording& rr = reference.recording();
    for (std::size_t s = 0; s < fr.samples.size(); ++s) {
      const SampleRec& a = fr.samples[s];
      const SampleRec& b = rr.samples[s];
      for (std::size_t l = 0; l < a.layers.size(); ++l) {
        const LayerRec& la = a.layers[l];
        const LayerRec& lb = b.layers[l];
        for (std::size_t i = 0; i < la.raster.size(); ++i)
          if (la.raster[i] != lb.raster[i]) ++report.raster_mismatches;
        accumulate_diff(report.max_abs_dv, la.v_trace, lb.v_trace);
        accumulate_diff(report.max_abs_di, la.i_trace, lb.i_trace);
        accumulate_diff(report.max_abs_dlambda, la.lambda_trace, lb.lambda_trace);
        accumulate_diff(report.max_abs_dmu, la.mu_trace, lb.mu_trace);
        accumulate_diff(report.max_abs_dgrad, la.grad, lb.grad);
      }
      for (std::size_t k = 0; k < a.first_steps.size(); ++k)
        if (a.first_steps[k] != b.first_steps[k]) ++report.first_step_mismatches;
      ++report.samples_compared;
    }
    for (std::size_t l = 0; l < fr.post_weights.size(); ++l)
      accumulate_diff(report.max_abs_dweights, fr.post_weights[l].w,
                      rr.post_weights[l].w);
  }
  return report;
}

std::string format_compare_report(const CompareReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "samples:          %d\n"
                "raster mismatches: %llu\n"
                "first-spike mismatches: %llu\n"
                "max |dV|:       %.9g\n"
                "max |dI|:       %.9g\n"
                "max |dlambda|:  %.9g\n"
                "max |dmu|:      %.9g\n"
                "max |dgrad|:    %.9g\n"
                "max |dweights|: %.9g\n",
                r.samples_compared,
                static_cast<unsigned long long>(r.raster_mismatches),
                static_cast<unsigned long long>(r.first_step_mismatches),
                r.max_abs_dv, r.max_abs_di, r.max_abs_dlambda, r.max_abs_dmu,
                r.max_abs_dgrad, r.max_abs_dweights);
  return buf;
}

ProfileReport profile_run(const RunConfig& cfg, int n_batches) {
  if (n_batches < 1) throw ConfigError("profile needs >= 1 batches");
  auto [train_set, test_set] = prepare_datasets(cfg);
  (void)test_set;
  RunConfig run_cfg = cfg;
  run_cfg.engine = "fabric";
  FabricEngine engine(run_cfg, init_network_weights(cfg, cfg.seeds.front()));
  AdamState adam = AdamState::make(cfg.optim, engine.weights());

  ProfileReport report;
  report.batches = n_batches;
  report.ms_per_batch_min = std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double total = 0.0;
  for (int b = 0; b < n_batches; ++b) {
    std::vector<Sample> batch;
    for (int i = 0; i < cfg.batch_size; ++i) {
      batch.push_back(train_set[pos % train_set.size()]);
      ++pos;
    }
    const double t0 = now_ms();
    const BatchStats stats = engine.train_batch(batch, adam);
    const double ms = now_ms() - t0;
    report.ticks_per_sample = stats.ticks_per_sample;
    total += ms;
    report.ms_per_batch_min = std::min(report.ms_per_batch_min, ms);
    report.ms_per_batch_max = std::max(report.ms_per_batch_max, ms);
  }
  report.ms_per_batch_mean = total / n_batches;
  return report;
}

}  // namespace spikefab
