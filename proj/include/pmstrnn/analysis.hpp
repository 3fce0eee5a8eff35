// analysis.hpp
// activation recording plus the statistics used to characterize trained
// dynamics: PCA reduction, per-quadrant map traces, a periodicity score, a
// settling ratio, and a trajectory-cloud distance.

#pragma once

#include <array>
#include <vector>

#include "pmstrnn/network.hpp"

namespace pmstrnn {

struct ActivationTrace {
  int h = 0, w = 0;  // grid shape when each row is one flattened map, else 0
  std::vector<std::vector<double>> rows;  // one flattened vector per step
  size_t steps() const { return rows.size(); }
  int dim() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
};

ActivationTrace fm_trace(const std::vector<NetworkState>& states, int level, int index);
ActivationTrace cm_trace(const std::vector<NetworkState>& states, int level, int index);

// all FMs (or CMs) of one layer side by side in one row per step
ActivationTrace layer_fm_trace(const std::vector<NetworkState>& states, int level);
ActivationTrace layer_cm_trace(const std::vector<NetworkState>& states, int level);

ActivationTrace concat_steps(const ActivationTrace& a, const ActivationTrace& b);

// quadrant order follows the cartesian numbering on the image: index 0 = upper
// right (Q1), 1 = upper left (Q2), 2 = lower left (Q3), 3 = lower right (Q4)
std::array<ActivationTrace, 4> quadrant_split(const ActivationTrace& t);
ActivationTrace quadrant_join(const std::array<ActivationTrace, 4>& q);

struct PcaResult {
  std::vector<double> mean;
  std::vector<std::vector<double>> components;  // k orthonormal rows
  std::vector<double> explained;  // sample variances (n-1 divisor), non-increasing
  std::vector<std::vector<double>> projected;   // steps x k
  bool degenerate = false;                      // constant trace
};

PcaResult pca(const ActivationTrace& trace, int k);

// circular autocorrelation of the trace at lag cycle_len, summed over
// dimensions and clamped to [0, 1]. 1 = perfectly periodic at that cycle
// length, near 0 for drifting or settling traces. Needs at least two cycles.
double cyclicity(const std::vector<std::vector<double>>& projected, int cycle_len);

// mean step displacement in the last quarter over the first quarter; small
// values mean the trajectory settles toward a point. Needs >= 10 steps.
double convergence(const std::vector<std::vector<double>>& projected);

// symmetric mean nearest-neighbor distance between two point clouds
double trajectory_distance(const std::vector<std::vector<double>>& a,
                           const std::vector<std::vector<double>>& b);

}  // namespace pmstrnn
