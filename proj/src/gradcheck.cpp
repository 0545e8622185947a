#include "spikefab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "spikefab/reference.hpp"

namespace spikefab {

namespace {

// Independent double-precision simulation of the same dynamics on a
// fine_factor-times finer grid. Only the loss needs the interpolated
// first-spike times; propagation stays grid-aligned.
struct FineOutcome {
  std::vector<double> first_time;  // physical units; <0 when silent
  std::vector<int> layer_spike_counts;
};

FineOutcome simulate_fine(const std::vector<int>& dims,
                          const std::vector<std::vector<double>>& weights,
                          const RunConfig& base, int input_step, int factor) {
  const int n_layers = static_cast<int>(dims.size()) - 1;
  const double dt_f = static_cast<double>(base.dt) / factor;
  const double ai = std::exp(-dt_f / base.tau_s);
  const double av = std::exp(-dt_f / base.tau_m);
  const int q_total = base.total_steps * factor;
  const int input_q = input_step * factor;

  std::vector<std::vector<double>> cur(n_layers), vol(n_layers), prev_v(n_layers);
  std::vector<std::vector<int>> spikes_now(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    cur[l].assign(dims[l + 1], 0.0);
    vol[l].assign(dims[l + 1], 0.0);
  }
  FineOutcome out;
  out.first_time.assign(dims.back(), -1.0);
  out.layer_spike_counts.assign(n_layers, 0);

  std::vector<int> input_spike{0};
  for (int q = 0; q < q_total; ++q) {
    for (int l = n_layers - 1; l >= 0; --l) {
      const std::vector<int>& presyn =
          l == 0 ? (q == input_q ? input_spike : std::vector<int>{})
                 : spikes_now[l - 1];
      std::vector<int> emitted;
      const int n = dims[l + 1];
      const int n_pre = dims[l];
      for (int j = 0; j < n; ++j) {
        double c = ai * cur[l][j];
        for (int k : presyn) c += weights[l][j * n_pre + k];
        const double v_old = vol[l][j];
        const double leak = v_old >= 1.0 ? 0.0 : av * v_old;
        const double v_new = leak + (1.0 - av) * c;
        cur[l][j] = c;
        vol[l][j] = v_new;
        if (v_new >= 1.0) {
          emitted.push_back(j);
          ++out.layer_spike_counts[l];
          if (l == n_layers - 1 && out.first_time[j] < 0.0)
            out.first_time[j] =
                dt_f * (q + (1.0 - v_old) / (v_new - v_old));
        }
      }
      spikes_now[l] = std::move(emitted);
    }
  }
  return out;
}

double loss_from_times(const std::vector<double>& times, int label,
                       const RunConfig& base) {
  const double t_max = base.total_steps * static_cast<double>(base.dt);
  std::vector<double> z(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k] < 0.0 ? t_max : times[k];
    z[k] = -t / base.loss_tau0;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double denom = 0.0;
  for (double zk : z) denom += std::exp(zk - zmax);
  const double ce = -(z[label] - zmax - std::log(denom));
  const double tl = times[label] < 0.0 ? t_max : times[label];
  const double reg = -base.reg_sign * base.loss_alpha *
                     (std::exp(tl / base.loss_tau1) - 1.0);
  return ce + reg;
}

std::vector<std::vector<double>> build_weights_double(
    const std::vector<int>& dims, double swept, double fixed) {
  std::vector<std::vector<double>> w;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    w.emplace_back(static_cast<std::size_t>(dims[l]) * dims[l + 1], fixed);
    if (l == 0) w.back()[0] = swept;
  }
  return w;
}

std::vector<WeightMatrix> build_weights_f32(const std::vector<int>& dims,
                                            double swept, double fixed) {
  std::vector<WeightMatrix> w;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    WeightMatrix m(dims[l + 1], dims[l]);
    std::fill(m.w.begin(), m.w.end(), static_cast<float>(fixed));
    if (l == 0) m.w[0] = static_cast<float>(swept);
    w.push_back(std::move(m));
  }
  return w;
}

}  // namespace

GradCheckResult gradient_oracle_check(const GradCheckConfig& gc,
                                      const RunConfig& base) {
  if (gc.dims.size() < 2) throw ConfigError("grad-check dims need >= 2 entries");
  if (gc.dims[0] != 1)
    throw ConfigError("grad-check sweeps a single input weight; dims[0] must be 1");
  if (gc.label >= gc.dims.back())
    throw ConfigError("grad-check label outside the output layer");
  if (gc.sweep_n < 2 || !(gc.sweep_lo < gc.sweep_hi))
    throw ConfigError("bad grad-check sweep range");
  if (gc.input_step < 0 || gc.input_step >= base.total_steps)
    throw ConfigError("grad-check input_step outside [0, T-1]");

  RunConfig tiny = base;
  tiny.net_dims = gc.dims;
  tiny.batch_size = 1;
  tiny.engine = "reference";
  tiny.init_scales.assign(tiny.n_weight_layers(), {1.0f, 1.0f});
  tiny.validate();

  Sample sample;
  sample.raw.label = gc.label;
  sample.spike_steps = {gc.input_step, 0, 0, 0, 0};

  GradCheckResult result;
  result.tol = 0.10;
  bool any_output_spike = false;

  for (int i = 0; i < gc.sweep_n; ++i) {
    GradCheckPoint pt;
    pt.w = gc.sweep_lo + i * (gc.sweep_hi - gc.sweep_lo) / (gc.sweep_n - 1);

    // Implementation route: coarse adjoint gradient of the swept weight.
    ReferenceEngine engine(tiny, build_weights_f32(gc.dims, pt.w, gc.fixed_weight));
    SampleRec rec;
    const auto sg = engine.sample_gradients(sample, &rec);
    pt.g_adjoint = sg.grads.layers[0][0];

    // Oracle route: fine-grid finite difference.
    const auto fine_lo = simulate_fine(
        gc.dims, build_weights_double(gc.dims, pt.w - gc.fd_h, gc.fixed_weight),
        base, gc.input_step, gc.fine_factor);
    const auto fine_mid = simulate_fine(
        gc.dims, build_weights_double(gc.dims, pt.w, gc.fixed_weight), base,
        gc.input_step, gc.fine_factor);
    const auto fine_hi = simulate_fine(
        gc.dims, build_weights_double(gc.dims, pt.w + gc.fd_h, gc.fixed_weight),
        base, gc.input_step, gc.fine_factor);
    pt.g_fd = (loss_from_times(fine_hi.first_time, gc.label, base) -
               loss_from_times(fine_lo.first_time, gc.label, base)) /
              (2.0 * gc.fd_h);

    const bool coarse_output_spiked =
        rec.first_steps[gc.label] != FirstSpikeRecord::kNone;
    const bool fine_output_spiked = fine_mid.first_time[gc.label] >= 0.0;
    if (coarse_output_spiked || fine_output_spiked) any_output_spike = true;

    double min_spike_margin = std::numeric_limits<double>::infinity();
    std::vector<int> coarse_counts(rec.layers.size(), 0);
    for (std::size_t l = 0; l < rec.layers.size(); ++l) {
      const LayerRec& lr = rec.layers[l];
      for (std::size_t idx = 0; idx < lr.raster.size(); ++idx)
        if (lr.raster[idx]) {
          ++coarse_counts[l];
          min_spike_margin =
              std::min(min_spike_margin,
                       std::fabs(static_cast<double>(lr.i_trace[idx]) -
                                 lr.v_trace[idx]));
        }
    }

    if (!coarse_output_spiked || !fine_output_spiked) {
      pt.excluded = true;
      pt.reason = "silent output";
    } else if (sg.guard_hits > 0) {
      pt.excluded = true;
      pt.reason = "singularity guard hit";
    } else if (min_spike_margin < gc.graze_margin) {
      pt.excluded = true;
      pt.reason = "threshold grazing";
    } else if (fine_lo.layer_spike_counts != fine_hi.layer_spike_counts ||
               fine_lo.layer_spike_counts != fine_mid.layer_spike_counts) {
      pt.excluded = true;
      pt.reason = "spike birth/death across FD interval";
    } else if (coarse_counts != fine_mid.layer_spike_counts) {
      pt.excluded = true;
      pt.reason = "coarse/fine spike count mismatch";
    }

    if (!pt.excluded) {
      ++result.n_included;
      pt.sign_ok = pt.g_adjoint * pt.g_fd > 0.0 ||
                   (std::fabs(pt.g_adjoint) <= 1e-12 && std::fabs(pt.g_fd) <= 1e-12);
      if (pt.sign_ok) ++result.n_sign_ok;
      pt.rel_err = std::fabs(pt.g_adjoint - pt.g_fd) /
                   std::max(std::fabs(pt.g_fd), 1e-12);
      if (pt.rel_err <= result.tol) ++result.n_within_tol;
    }
    result.points.push_back(std::move(pt));
  }
  result.conclusive = any_output_spike;
  return result;
}

std::string format_gradcheck_report(const GradCheckResult& r, bool verbose) {
  std::ostringstream out;
  char buf[160];
  if (verbose) {
    for (const GradCheckPoint& p : r.points) {
      if (p.excluded) {
        std::snprintf(buf, sizeof buf, "w=%-8.4f adj=% .6e fd=% .6e  excluded (%s)\n",
                      p.w, p.g_adjoint, p.g_fd, p.reason.c_str());
      } else {
        std::snprintf(buf, sizeof buf,
                      "w=%-8.4f adj=% .6e fd=% .6e  rel_err=%.4f sign=%s\n", p.w,
                      p.g_adjoint, p.g_fd, p.rel_err, p.sign_ok ? "ok" : "FLIP");
      }
      out << buf;
    }
  }
  std::snprintf(buf, sizeof buf,
                "swept=%zu included=%d sign_ok=%d within_%.0f%%=%d (%.1f%%) %s\n",
                r.points.size(), r.n_included, r.n_sign_ok, r.tol * 100.0,
                r.n_within_tol, r.included_fraction_within_tol() * 100.0,
                !r.conclusive ? "INCONCLUSIVE (silent everywhere)"
                : r.pass()    ? "PASS"
                              : "FAIL");
  out << buf;
  return out.str();
}

}  // namespace spikefab
