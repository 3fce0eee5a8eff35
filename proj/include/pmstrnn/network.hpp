// network.hpp
// leaky-integrator map dynamics and rollouts.
//
// per step t, with alpha = 1 - 1/tau and beta = 1/tau of the map's level:
//   fm_in_t = alpha * fm_in_{t-1} + beta * (sum_q conv(upper_fm_act) +
//             sum_n conv(cm_act) + [level 1] conv(frame) + bias)
//   cm_in_t = alpha * cm_in_{t-1} + beta * (sum_n cm_act .* w_cc +
//             sum_q upper_fm_act .* w_fc + sum_r conv(lower_fm_act) + bias)
// all cross terms read activations from step t-1; the frame is the one fed
// at step t. Output: out_pre_t = sum_q conv(fm1_act_t) + b_o.
// term accumulation order (matters only for bit reproducibility) is the order
// listed above.

#pragma once

#include <vector>

#include "pmstrnn/arch.hpp"
#include "pmstrnn/params.hpp"

namespace pmstrnn {

struct LayerState {
  std::vector<MapGrid> fm_in, fm_act;  // internal state and activation
  std::vector<MapGrid> cm_in, cm_act;
};

struct NetworkState {
  std::vector<LayerState> layers;
  const LayerState& layer(int level) const { return layers[level - 1]; }
  LayerState& layer(int level) { return layers[level - 1]; }
};

NetworkState state_from_intention(const ArchitectureSpec& arch, const IntentionState& s);
IntentionState intention_from_state(const NetworkState& s);

// one update of every map at a single level; input is non-null only at level 1
void fm_step(const ArchitectureSpec& arch, const NetworkParams& params, int level,
             const NetworkState& prev, const MapGrid* input, LayerState& next);
void cm_step(const ArchitectureSpec& arch, const NetworkParams& params, int level,
             const NetworkState& prev, const MapGrid* input, LayerState& next);

// full state update; input may be null when level 1 takes no frame
void step(const ArchitectureSpec& arch, const NetworkParams& params,
          const NetworkState& prev, const MapGrid* input, NetworkState& next);

void output_step(const ArchitectureSpec& arch, const NetworkParams& params,
                 const NetworkState& s, MapGrid& pre, MapGrid& act);

enum class Mode { open, closed };

struct Rollout {
  std::vector<MapGrid> outputs;      // activated predictions, steps 1..S
  std::vector<MapGrid> outputs_pre;  // pre-activation outputs
  std::vector<NetworkState> trace;   // states 0..S when recorded (0 = intention)
};

// open mode feeds frames[t-1] at step t (S <= frames.size()); closed mode
// feeds frames[0] at step 1 and the previous output afterwards, so only the
// first frame is consumed. Throws NumericError naming the step if states
// go non-finite.
Rollout rollout(const ArchitectureSpec& arch, const NetworkParams& params,
                const IntentionState& intention, Mode mode,
                const std::vector<MapGrid>& frames, int steps,
                bool record_trace = false);

// mean squared error over all cells of all frame pairs
double mse(const MapGrid& a, const MapGrid& b);
double mse_frames(const std::vector<MapGrid>& a, const std::vector<MapGrid>& b);

}  // namespace pmstrnn
