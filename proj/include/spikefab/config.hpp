#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spikefab/layer.hpp"
#include "spikefab/loss.hpp"
#include "spikefab/optim.hpp"

namespace spikefab {

struct DataConfig {
  std::string train_path;  // when empty, generate
  std::string test_path;
  int train_n = 5000;
  int test_n = 1000;
  std::uint64_t train_seed = 901;
  std::uint64_t test_seed = 902;
  bool balanced = true;
  int t_min = 2;
  int t_max = 27;
};

struct RunConfig {
  std::vector<int> net_dims{5, 120, 3};
  int total_steps = 28;  // T
  float dt = 1.0f;
  float tau_s = 5.0f;
  float tau_m = 20.0f;
  AdjointVariant adjoint_variant = AdjointVariant::exponential_euler;
  float singularity_eps = 1e-6f;

  double loss_tau0 = 1.5;
  double loss_tau1 = 100.0;
  double loss_alpha = 0.01;
  int reg_sign = 1;

  AdamConfig optim;
  std::vector<std::array<float, 2>> init_scales{{3.2f, 3.2f}, {5.2f, 2.8f}};

  int batch_size = 22;
  int epochs = 40;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string engine = "fabric";  // or "reference"
  int workers = 1;
  bool shuffle = true;
  int max_batches = 0;  // 0 = no limit; handy for short runs

  DataConfig data;
  std::string out_dir = "out";
  bool record_states = false;
  std::string trace_path;

  int n_weight_layers() const { return static_cast<int>(net_dims.size()) - 1; }
  LayerParams layer_params() const {
    return LayerParams::make(tau_s, tau_m, dt);
  }
  LossConfig loss_config() const {
    return {loss_tau0, loss_tau1, loss_alpha, reg_sign,
            static_cast<double>(dt), net_dims.back(), total_steps};
  }

  void validate() const;  // throws ConfigError

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_json_file(const std::string& path);
  nlohmann::json to_json() const;
};

// Fresh per-layer weights for one training seed; layer l draws from the
// stream (seed, "weights", l) with the configured (s_mu, s_sigma) scales.
std::vector<WeightMatrix> init_network_weights(const RunConfig& cfg,
                                               std::uint64_t seed);

}  // namespace spikefab
