// params.hpp
// learnable tensors for every pathway, plus allocation/init and a flat view
// used by the optimizer, serialization and the finite-difference checks

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pmstrnn/arch.hpp"
#include "pmstrnn/grid.hpp"

namespace pmstrnn {

struct LayerParams {
  std::vector<std::vector<Kernel>> k_ff;   // [p][q], empty at the top level
  std::vector<std::vector<Kernel>> k_cf;   // [p][n]
  std::vector<Kernel> k_if;                // [p], level 1 only
  std::vector<std::vector<Kernel>> k_fc;   // [m][r] (level 1: r = 0, the frame)
  std::vector<std::vector<MapGrid>> w_cc;  // [m][n]
  std::vector<std::vector<MapGrid>> w_fc;  // [m][q], empty at the top level
  std::vector<double> b_fm;                // [p]
  std::vector<double> b_cm;                // [m]
};

struct NetworkParams {
  std::vector<LayerParams> layers;
  std::vector<Kernel> k_fo;  // [q], level-1 FMs into the output frame
  double b_o = 0.0;
};

// all tensors allocated to the architecture's shapes, zero filled
NetworkParams zero_params(const ArchitectureSpec& arch);

// uniform [-s, s] with s = 1/sqrt(fan_in of the tensor's pathway); biases zero
NetworkParams init_params(const ArchitectureSpec& arch, std::uint64_t seed);

// named flat views in a fixed declared order; biases appear as one vector per
// level. b_o is not listed, callers that need every scalar add it themselves.
// Order is part of the checkpoint format.
struct TensorRef {
  std::string name;
  std::vector<double>* data;
};
std::vector<TensorRef> tensor_refs(NetworkParams& p);

void params_add_scaled(NetworkParams& acc, const NetworkParams& g, double s);
void params_scale(NetworkParams& p, double s);
bool params_all_finite(const NetworkParams& p);
double params_max_abs_diff(const NetworkParams& a, const NetworkParams& b);

// step-0 internal states of every map; what training and the recognizer
// optimize per sequence
struct IntentionState {
  std::vector<std::vector<MapGrid>> fm;  // [layer][p]
  std::vector<std::vector<MapGrid>> cm;  // [layer][m]
};

IntentionState zero_intention(const ArchitectureSpec& arch);
void intention_add_scaled(IntentionState& acc, const IntentionState& g, double s);
void intention_scale(IntentionState& s, double f);
bool intention_all_finite(const IntentionState& s);
std::vector<TensorRef> intention_refs(IntentionState& s);

}  // namespace pmstrnn
