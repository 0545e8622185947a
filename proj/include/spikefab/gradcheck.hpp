#pragma once

#include <string>
#include <vector>

#include "spikefab/config.hpp"

namespace spikefab {

// Tiny-network sweep comparing the adjoint gradient of one weight against a
// central finite difference of the loss, where the spike times entering the
// loss come from a simulation on a fine_factor-times finer grid with linear
// interpolation of the threshold crossing.
struct GradCheckConfig {
  std::vector<int> dims{1, 1};
  int label = 0;
  int input_step = 2;  // coarse step of the single input spike
  double sweep_lo = 7.0;
  double sweep_hi = 19.0;
  int sweep_n = 50;
  double fixed_weight = 15.0;  // all weights except the swept [0][0] entry
  int fine_factor = 100;
  double fd_h = 1e-3;
  double graze_margin = 0.1;  // coarse |I-V| at a spike below this: excluded
};

struct GradCheckPoint {
  double w = 0.0;
  double g_adjoint = 0.0;
  double g_fd = 0.0;
  bool excluded = false;
  std::string reason;
  bool sign_ok = false;
  double rel_err = 0.0;
};

struct GradCheckResult {
  std::vector<GradCheckPoint> points;
  int n_included = 0;
  int n_sign_ok = 0;
  int n_within_tol = 0;
  double tol = 0.10;
  bool conclusive = false;  // false when the output stayed silent everywhere

  double included_fraction_within_tol() const {
    return n_included == 0 ? 0.0
                           : static_cast<double>(n_within_tol) / n_included;
  }
  bool pass() const {
    return conclusive && n_included > 0 && n_sign_ok == n_included &&
           included_fraction_within_tol() >= 0.95;
  }
};

// base supplies T, dt, time constants, loss parameters, adjoint variant and
// the singularity guard; gc supplies the tiny network and the sweep.
GradCheckResult gradient_oracle_check(const GradCheckConfig& gc,
                                      const RunConfig& base);

std::string format_gradcheck_report(const GradCheckResult& r, bool verbose);

}  // namespace spikefab
