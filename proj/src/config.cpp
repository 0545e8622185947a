#include "spikefab/config.hpp"

#include <fstream>

#include "spikefab/rng.hpp"

namespace spikefab {

namespace {

AdjointVariant variant_from_string(const std::string& s) {
  if (s == "exponential_euler") return AdjointVariant::exponential_euler;
  if (s == "as_printed") return AdjointVariant::as_printed;
  throw ConfigError("unknown adjoint_variant: " + s);
}

std::string variant_to_string(AdjointVariant v) {
  return v == AdjointVariant::exponential_euler ? "exponential_euler"
                                                : "as_printed";
}

GradReduction reduction_from_string(const std::string& s) {
  if (s == "sum") return GradReduction::sum;
  if (s == "mean") return GradReduction::mean;
  throw ConfigError("unknown grad_reduction: " + s);
}

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
  if (net_dims.size() < 2)
    throw ConfigError("net_dims needs at least input and output sizes");
  for (int d : net_dims)
    if (d < 1) throw ConfigError("net_dims entries must be >= 1");
  if (total_steps < 1) throw ConfigError("T must be >= 1");
  if (!(dt > 0.0f)) throw ConfigError("dt must be positive");
  if (!(tau_s > 0.0f) || !(tau_m > 0.0f))
    throw ConfigError("time constants must be positive");
  if (!(loss_tau0 > 0.0) || !(loss_tau1 > 0.0))
    throw ConfigError("loss time constants must be positive");
  if (reg_sign != 1 && reg_sign != -1)
    throw ConfigError("reg_sign must be +1 or -1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (engine != "fabric" && engine != "reference")
    throw ConfigError("engine must be 'fabric' or 'reference'");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (static_cast<int>(init_scales.size()) != n_weight_layers())
    throw ConfigError("init_scales needs one (s_mu, s_sigma) pair per weight layer");
  if (!(optim.lr > 0.0f)) throw ConfigError("lr must be positive");
  if (!(optim.gamma > 0.0f) || optim.gamma > 1.0f)
    throw ConfigError("gamma must be in (0, 1]");
  if (optim.weight_decay < 0.0f) throw ConfigError("weight_decay must be >= 0");
  if (optim.beta1 < 0.0f || optim.beta1 >= 1.0f || optim.beta2 < 0.0f ||
      optim.beta2 >= 1.0f)
    throw ConfigError("betas must be in [0, 1)");
  if (!(optim.eps > 0.0f)) throw ConfigError("eps must be positive");
  if (data.t_min < 0 || data.t_min >= data.t_max || data.t_max > total_steps - 1)
    throw ConfigError("need 0 <= t_min < t_max <= T-1");
  if (data.train_n < 1 || data.test_n < 1)
    throw ConfigError("dataset sizes must be >= 1");
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  get_if(j, "net_dims", c.net_dims);
  get_if(j, "T", c.total_steps);
  get_if(j, "dt", c.dt);
  get_if(j, "tau_s", c.tau_s);
  get_if(j, "tau_m", c.tau_m);
  if (j.contains("adjoint_variant"))
    c.adjoint_variant = variant_from_string(j.at("adjoint_variant"));
  get_if(j, "singularity_eps", c.singularity_eps);
  if (j.contains("loss")) {
    const auto& jl = j.at("loss");
    get_if(jl, "tau0", c.loss_tau0);
    get_if(jl, "tau1", c.loss_tau1);
    get_if(jl, "alpha", c.loss_alpha);
    get_if(jl, "reg_sign", c.reg_sign);
  }
  if (j.contains("optim")) {
    const auto& jo = j.at("optim");
    get_if(jo, "lr", c.optim.lr);
    get_if(jo, "gamma", c.optim.gamma);
    get_if(jo, "weight_decay", c.optim.weight_decay);
    get_if(jo, "beta1", c.optim.beta1);
    get_if(jo, "beta2", c.optim.beta2);
    get_if(jo, "eps", c.optim.eps);
    get_if(jo, "decoupled_wd", c.optim.decoupled_wd);
    if (jo.contains("grad_reduction"))
      c.optim.reduction = reduction_from_string(jo.at("grad_reduction"));
  }
  if (j.contains("init_scales")) {
    c.init_scales.clear();
    for (const auto& pair : j.at("init_scales"))
      c.init_scales.push_back({pair.at(0).get<float>(), pair.at(1).get<float>()});
  }
  get_if(j, "batch_size", c.batch_size);
  get_if(j, "epochs", c.epochs);
  get_if(j, "seeds", c.seeds);
  get_if(j, "engine", c.engine);
  get_if(j, "workers", c.workers);
  get_if(j, "shuffle", c.shuffle);
  get_if(j, "max_batches", c.max_batches);
  if (j.contains("data")) {
    const auto& jd = j.at("data");
    get_if(jd, "train_path", c.data.train_path);
    get_if(jd, "test_path", c.data.test_path);
    get_if(jd, "train_n", c.data.train_n);
    get_if(jd, "test_n", c.data.test_n);
    get_if(jd, "train_seed", c.data.train_seed);
    get_if(jd, "test_seed", c.data.test_seed);
    get_if(jd, "balanced", c.data.balanced);
    get_if(jd, "t_min", c.data.t_min);
    get_if(jd, "t_max", c.data.t_max);
  }
  get_if(j, "out_dir", c.out_dir);
  get_if(j, "record_states", c.record_states);
  get_if(j, "trace_path", c.trace_path);
  c.validate();
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["net_dims"] = net_dims;
  j["T"] = total_steps;
  j["dt"] = dt;
  j["tau_s"] = tau_s;
  j["tau_m"] = tau_m;
  j["adjoint_variant"] = variant_to_string(adjoint_variant);
  j["singularity_eps"] = singularity_eps;
  j["loss"] = {{"tau0", loss_tau0},
               {"tau1", loss_tau1},
               {"alpha", loss_alpha},
               {"reg_sign", reg_sign}};
  j["optim"] = {
      {"lr", optim.lr},
      {"gamma", optim.gamma},
      {"weight_decay", optim.weight_decay},
      {"beta1", optim.beta1},
      {"beta2", optim.beta2},
      {"eps", optim.eps},
      {"decoupled_wd", optim.decoupled_wd},
      {"grad_reduction", optim.reduction == GradReduction::sum ? "sum" : "mean"}};
  j["init_scales"] = nlohmann::json::array();
  for (const auto& s : init_scales) j["init_scales"].push_back({s[0], s[1]});
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["seeds"] = seeds;
  j["engine"] = engine;
  j["workers"] = workers;
  j["shuffle"] = shuffle;
  j["max_batches"] = max_batches;
  j["data"] = {{"train_path", data.train_path}, {"test_path", data.test_path},
               {"train_n", data.train_n},       {"test_n", data.test_n},
               {"train_seed", data.train_seed}, {"test_seed", data.test_seed},
               {"balanced", data.balanced},     {"t_min", data.t_min},
               {"t_max", data.t_max}};
  j["out_dir"] = out_dir;
  j["record_states"] = record_states;
  j["trace_path"] = trace_path;
  return j;
}

std::vector<WeightMatrix> init_network_weights(const RunConfig& cfg,
                                               std::uint64_t seed) {
  std::vector<WeightMatrix> weights;
  for (int l = 0; l < cfg.n_weight_layers(); ++l) {
    auto rng = make_rng(seed, "weights", static_cast<std::uint64_t>(l));
    weights.push_back(init_weights(cfg.net_dims[l], cfg.net_dims[l + 1],
                                   cfg.init_scales[l][0], cfg.init_scales[l][1],
                                   rng));
  }
  return weights;
}

}  // namespace spikefab
