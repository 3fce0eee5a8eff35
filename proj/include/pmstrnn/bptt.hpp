// bptt.hpp
// exact gradients of the one-step-ahead squared error through a rollout.
// outputs at steps 1..S are scored against frames 2..S+1 of the sequence
// (S = frames-1), and the loss is the mean over scored cells. Closed-loop
// mode also backpropagates through the output-to-input feedback path.

#pragma once

#include <vector>

#include "pmstrnn/network.hpp"

namespace pmstrnn {

struct BpttResult {
  double loss = 0.0;               // mean squared error over the S scored frames
  NetworkParams param_grads;       // allocated only when requested
  IntentionState intention_grads;  // gradient at the step-0 internal states
  std::vector<MapGrid> outputs;    // the rollout's activated predictions
};

// frames.size() >= 2; set want_param_grads=false when only the intention
// gradient is needed (recognition), which skips the kernel-gradient work
BpttResult bptt(const ArchitectureSpec& arch, const NetworkParams& params,
                const IntentionState& intention, Mode mode,
                const std::vector<MapGrid>& frames, bool want_param_grads = true);

}  // namespace pmstrnn
