// regression.hpp
// online intention inference against a frozen network. A sliding window of
// recent frames is replayed from a trainable start state; gradient steps on
// that state pull the replay toward what was actually seen, and one step past
// the window end is emitted as the next-frame prediction.

#pragma once

#include <vector>

#include "pmstrnn/arch.hpp"
#include "pmstrnn/grid.hpp"
#include "pmstrnn/params.hpp"

namespace pmstrnn {

struct RegressionConfig {
  int window = 30;            // max frames kept in the sliding window
  double rate = 0.1;          // gradient step size on the start state
  int iters_per_step = 30;    // gradient steps per incoming frame
  double early_stop = 1e-4;   // skip remaining iterations below this replay loss
  bool use_history_inputs = false;  // drive the replay with observed frames
                                    // instead of fed-back predictions
  bool record_states = false;       // keep the optimized state at every step
};

// one window optimization. Returns the best iterate by replay loss, so the
// result never scores worse than the guess.
struct WindowResult {
  IntentionState intention;
  double reconstruction_mse = 0.0;
  std::vector<double> iteration_loss;  // loss at the guess, then per iteration
  int resets = 0;                      // non-finite updates rolled back
};

WindowResult regress_window(const ArchitectureSpec& arch, const NetworkParams& params,
                            const std::vector<MapGrid>& history,
                            const IntentionState& guess, const RegressionConfig& cfg);

struct RecognitionTrace {
  // index t scores the prediction made after observing frame t for frame t+1
  std::vector<double> prediction_error;
  std::vector<double> window_loss;     // replay loss per emission
  std::vector<MapGrid> predictions;
  std::vector<std::vector<double>> iteration_loss;  // per step regression curve
  std::vector<IntentionState> states;  // filled when cfg.record_states
  IntentionState final_state;
  int resets = 0;
};

RecognitionTrace recognize_stream(const ArchitectureSpec& arch,
                                  const NetworkParams& params,
                                  const IntentionState& start,
                                  const std::vector<MapGrid>& frames,
                                  const RegressionConfig& cfg);

// baseline with no inference: the stream drives the network open loop from a
// fixed start state and each output is scored against the next frame.
RecognitionTrace entrainment_stream(const ArchitectureSpec& arch,
                                    const NetworkParams& params,
                                    const IntentionState& fixed,
                                    const std::vector<MapGrid>& frames);

// flattened euclidean distance between two internal states, used to match an
// inferred state against stored ones.
double intention_distance(const IntentionState& a, const IntentionState& b);

}  // namespace pmstrnn
