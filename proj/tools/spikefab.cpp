#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spikefab/config.hpp"
#include "spikefab/gradcheck.hpp"
#include "spikefab/trainer.hpp"
#include "spikefab/yinyang.hpp"

namespace {

using namespace spikefab;

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : RunConfig::from_json_file(path);
}

int cmd_generate(const std::string& config_path, std::string out_train,
                 std::string out_test) {
  RunConfig cfg = load_config(config_path);
  if (out_train.empty()) out_train = cfg.out_dir + "/train.txt";
  if (out_test.empty()) out_test = cfg.out_dir + "/test.txt";
  const DataConfig& d = cfg.data;
  const auto train =
      make_dataset(d.train_n, d.train_seed, d.balanced, d.t_min, d.t_max);
  const auto test =
      make_dataset(d.test_n, d.test_seed, d.balanced, d.t_min, d.t_max);
  save_samples(train, out_train);
  save_samples(test, out_test);
  std::printf("wrote %zu train samples to %s (from %d generated)\n",
              train.size(), out_train.c_str(), d.train_n);
  std::printf("wrote %zu test samples to %s (from %d generated)\n", test.size(),
              out_test.c_str(), d.test_n);
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const auto results = train(cfg);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const TrainResult& r = results[i];
    const MetricsRow* last_test = nullptr;
    for (const MetricsRow& row : r.metrics)
      if (row.split == "test") last_test = &row;
    std::printf("seed %llu: final test accuracy %.4f, loss %.4f -> %s\n",
                static_cast<unsigned long long>(cfg.seeds[i]),
                last_test ? last_test->accuracy : 0.0,
                last_test ? last_test->loss : 0.0, r.metrics_path.c_str());
  }
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& weights_path,
                 const std::string& dataset_path) {
  RunConfig cfg = load_config(config_path);
  const auto weights = load_weights(weights_path);
  const auto samples = load_samples(dataset_path);
  const EvalResult r = evaluate_dataset(samples, weights, cfg);
  std::printf("samples %zu accuracy %.6f mean_loss %.6f silent %llu\n",
              samples.size(), r.accuracy, r.mean_loss,
              static_cast<unsigned long long>(r.silent));
  return 0;
}

int cmd_compare(const std::string& config_path, std::uint64_t seed, int samples,
                float perturb) {
  RunConfig cfg = load_config(config_path);
  const CompareReport report = compare_engines(cfg, seed, samples, perturb);
  std::fputs(format_compare_report(report).c_str(), stdout);
  if (!report.identical()) {
    std::puts("comparison FAILED: engines deviate");
    return 2;
  }
  std::puts("comparison OK: engines bit-identical");
  return 0;
}

int cmd_gradcheck(const std::string& config_path, const GradCheckConfig& gc,
                  bool verbose) {
  RunConfig cfg = load_config(config_path);
  const GradCheckResult r = gradient_oracle_check(gc, cfg);
  std::fputs(format_gradcheck_report(r, verbose).c_str(), stdout);
  if (!r.conclusive || !r.pass()) return 3;
  return 0;
}

int cmd_profile(const std::string& config_path, int batches) {
  RunConfig cfg = load_config(config_path);
  const ProfileReport r = profile_run(cfg, batches);
  std::printf("ticks_per_sample %d\n", r.ticks_per_sample);
  std::printf("batches %d ms_per_batch mean %.3f min %.3f max %.3f\n",
              r.batches, r.ms_per_batch_mean, r.ms_per_batch_min,
              r.ms_per_batch_max);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikefab: event-driven spiking network training fabric"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config,-c", config_path, "JSON config file")
      ->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("generate-data", "generate Yin-Yang datasets");
  std::string out_train, out_test;
  gen->add_option("--out-train", out_train, "train set path");
  gen->add_option("--out-test", out_test, "test set path");

  auto* tr = app.add_subcommand("train", "train the network");
  std::string engine, out_dir, trace_path, variant;
  std::vector<std::uint64_t> seeds;
  int epochs = -1, batch_size = -1, workers = -1, max_batches = -1;
  tr->add_option("--engine", engine, "fabric | reference");
  tr->add_option("--seed", seeds, "override the config's seed list");
  tr->add_option("--epochs", epochs, "");
  tr->add_option("--batch-size", batch_size, "");
  tr->add_option("--workers", workers, "fabric worker threads");
  tr->add_option("--max-batches", max_batches, "stop after N batches");
  tr->add_option("--out-dir", out_dir, "");
  tr->add_option("--trace", trace_path, "event trace output file");
  tr->add_option("--adjoint-variant", variant,
                 "exponential_euler | as_printed");

  auto* ev = app.add_subcommand("evaluate", "accuracy/loss of saved weights");
  std::string weights_path, dataset_path;
  ev->add_option("--weights", weights_path, "")->required();
  ev->add_option("--dataset", dataset_path, "")->required();

  auto* cmp = app.add_subcommand("compare", "fabric vs reference engine");
  std::uint64_t cmp_seed = 1;
  int cmp_samples = 100;
  float cmp_perturb = 0.0f;
  cmp->add_option("--seed", cmp_seed, "");
  cmp->add_option("--samples", cmp_samples, "minimum samples to compare");
  cmp->add_option("--perturb", cmp_perturb,
                  "shift fabric initial weights (negative control)");

  auto* gc_cmd = app.add_subcommand("grad-check", "adjoint vs FD oracle sweep");
  GradCheckConfig gc;
  std::vector<int> gc_dims;
  bool gc_verbose = false;
  gc_cmd->add_option("--dims", gc_dims, "tiny network dims, e.g. 1 1");
  gc_cmd->add_option("--label", gc.label, "");
  gc_cmd->add_option("--input-step", gc.input_step, "");
  gc_cmd->add_option("--lo", gc.sweep_lo, "sweep lower bound");
  gc_cmd->add_option("--hi", gc.sweep_hi, "sweep upper bound");
  gc_cmd->add_option("--n", gc.sweep_n, "sweep size");
  gc_cmd->add_option("--fixed-weight", gc.fixed_weight, "non-swept weights");
  gc_cmd->add_flag("--verbose,-v", gc_verbose, "per-point detail");

  auto* prof = app.add_subcommand("profile", "tick and wall-time report");
  int prof_batches = 10;
  prof->add_option("--batches", prof_batches, "");

  auto* pc = app.add_subcommand("print-config", "dump the effective config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(config_path, out_train, out_test);
    if (tr->parsed()) {
      RunConfig cfg = load_config(config_path);
      if (!engine.empty()) cfg.engine = engine;
      if (!seeds.empty()) cfg.seeds = seeds;
      if (epochs >= 0) cfg.epochs = epochs;
      if (batch_size >= 0) cfg.batch_size = batch_size;
      if (workers >= 0) cfg.workers = workers;
      if (max_batches >= 0) cfg.max_batches = max_batches;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (!trace_path.empty()) cfg.trace_path = trace_path;
      if (!variant.empty())
        cfg.adjoint_variant = variant == "as_printed"
                                  ? AdjointVariant::as_printed
                                  : AdjointVariant::exponential_euler;
      cfg.validate();
      return cmd_train(cfg);
    }
    if (ev->parsed()) return cmd_evaluate(config_path, weights_path, dataset_path);
    if (cmp->parsed())
      return cmd_compare(config_path, cmp_seed, cmp_samples, cmp_perturb);
    if (gc_cmd->parsed()) {
      if (!gc_dims.empty()) gc.dims = gc_dims;
      return cmd_gradcheck(config_path, gc, gc_verbose);
    }
    if (prof->parsed()) return cmd_profile(config_path, prof_batches);
    if (pc->parsed()) {
      std::cout << load_config(config_path).to_json().dump(2) << '\n';
      return 0;
    }
  } catch (const spikefab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
