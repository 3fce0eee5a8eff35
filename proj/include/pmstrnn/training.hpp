// training.hpp
// full-batch gradient descent over a set of labelled sequences. Each sequence
// owns a trainable initial state (its intention); weights are shared.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pmstrnn/arch.hpp"
#include "pmstrnn/bptt.hpp"
#include "pmstrnn/params.hpp"

namespace pmstrnn {

struct VideoSequence {
  std::string label;
  std::vector<MapGrid> frames;
};

struct TrainingConfig {
  double learning_rate = 0.001;
  double momentum = 0.0;
  double closed_loop_stop = 0.01;  // stop when closed-loop MSE falls below this
  int max_epochs = 1000;
  int eval_every = 10;             // closed-loop eval cadence (epochs)
  std::uint64_t seed = 1;
  int threads = 0;                 // 0 = hardware count
};

struct EpochLog {
  int epoch = 0;
  double open_mse = 0.0;
  double closed_mse = 0.0;             // nan when not evaluated this epoch
  std::vector<double> closed_by_sequence;
  double wall_seconds = 0.0;  // elapsed since this training run started
};

struct TrainedModel {
  ArchitectureSpec arch;
  NetworkParams params;
  std::vector<std::string> labels;
  std::vector<IntentionState> intentions;  // parallel to labels
  std::vector<EpochLog> log;
  std::uint64_t seed = 0;
  bool reached_stop = false;
  int epochs_run = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// closed-loop regeneration error per sequence (first frame seeds the loop).
double closed_loop_mse(const ArchitectureSpec& arch, const NetworkParams& params,
                       const IntentionState& intention,
                       const std::vector<MapGrid>& frames);

TrainedModel train(const ArchitectureSpec& arch,
                   const std::vector<VideoSequence>& data,
                   const TrainingConfig& cfg,
                   const EpochCallback& on_epoch = nullptr);

// resume weight/intention optimization on old_data + new_data. Sequences in
// new_data whose label already exists reuse the stored intention; genuinely
// new labels start from a zero intention. Epoch log is stage-local.
TrainedModel continue_training(const TrainedModel& base,
                               const std::vector<VideoSequence>& old_data,
                               const std::vector<VideoSequence>& new_data,
                               const TrainingConfig& cfg,
                               const EpochCallback& on_epoch = nullptr);

}  // namespace pmstrnn
