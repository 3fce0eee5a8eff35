#include "pmstrnn/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "pmstrnn/errors.hpp"
#include "pmstrnn/network.hpp"
#include "pmstrnn/parallel.hpp"

namespace pmstrnn {

namespace {

std::vector<MapGrid> closed_targets(const std::vector<MapGrid>& frames) {
  return std::vector<MapGrid>(frames.begin() + 1, frames.end());
}

struct StartState {
  NetworkParams params;
  std::vector<IntentionState> intentions;
};

TrainedModel run_training(const ArchitectureSpec& arch, StartState start,
                          const std::vector<VideoSequence>& data,
                          const TrainingConfig& cfg, const EpochCallback& on_epoch) {
  const int n = static_cast<int>(data.size());
  if (n == 0) throw ConfigError("training needs at least one sequence");
  for (const auto& s : data) {
    if (s.frames.size() < 2)
      throw ConfigError("sequence '" + s.label + "' is too short to train on");
  }
  if (cfg.learning_rate < 0.0) throw ConfigError("learning_rate must not be negative");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw ConfigError("momentum must be in [0, 1)");
  if (cfg.max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (cfg.eval_every < 1) throw ConfigError("eval_every must be at least 1");

  TrainedModel model;
  model.arch = arch;
  model.params = std::move(start.params);
  model.intentions = std::move(start.intentions);
  model.seed = cfg.seed;
  model.labels.reserve(n);
  for (const auto& s : data) model.labels.push_back(s.label);

  NetworkParams param_vel = zero_params(arch);
  std::vector<IntentionState> intent_vel;
  intent_vel.reserve(n);
  for (int i = 0; i < n; ++i) intent_vel.push_back(zero_intention(arch));

  std::vector<BpttResult> slot(n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto run_start = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    parallel_for(n, cfg.threads, [&](int i) {
      slot[i] = bptt(arch, model.params, model.intentions[i], Mode::open,
                     data[i].frames);
    });

    double open_sum = 0.0;
    for (int i = 0; i < n; ++i) open_sum += slot[i].loss;
    double open_mse = open_sum / n;
    if (!std::isfinite(open_mse))
      throw NumericError("training diverged: non-finite loss at epoch " +
                         std::to_string(epoch));

    // descend the mean-over-sequences loss, so the step size does not grow
    // with the number of sequences
    const double step = -cfg.learning_rate / n;
    params_scale(param_vel, cfg.momentum);
    for (int i = 0; i < n; ++i)
      params_add_scaled(param_vel, slot[i].param_grads, step);
    params_add_scaled(model.params, param_vel, 1.0);

    for (int i = 0; i < n; ++i) {
      intention_scale(intent_vel[i], cfg.momentum);
      intention_add_scaled(intent_vel[i], slot[i].intention_grads, step);
      intention_add_scaled(model.intentions[i], intent_vel[i], 1.0);
    }

    if (!params_all_finite(model.params))
      throw NumericError("training diverged: non-finite weights at epoch " +
                         std::to_string(epoch));
    for (int i = 0; i < n; ++i)
      if (!intention_all_finite(model.intentions[i]))
        throw NumericError("training diverged: non-finite initial state at epoch " +
                           std::to_string(epoch));

    EpochLog log;
    log.epoch = epoch;
    log.open_mse = open_mse;
    log.closed_mse = nan;

    bool last = (epoch == cfg.max_epochs);
    bool eval = (epoch == 1) || (epoch % cfg.eval_every == 0) || last;
    if (eval) {
      log.closed_by_sequence.resize(n, 0.0);
      parallel_for(n, cfg.threads, [&](int i) {
        log.closed_by_sequence[i] =
            closed_loop_mse(arch, model.params, model.intentions[i], data[i].frames);
      });
      double s = 0.0;
      for (double v : log.closed_by_sequence) s += v;
      log.closed_mse = s / n;
    }

    auto t1 = std::chrono::steady_clock::now();
    log.wall_seconds = std::chrono::duration<double>(t1 - run_start).count();
    model.log.push_back(log);
    model.epochs_run = epoch;
    if (on_epoch) on_epoch(log);

    if (eval && log.closed_mse < cfg.closed_loop_stop) {
      model.reached_stop = true;
      break;
    }
  }
  return model;
}

}  // namespace

double closed_loop_mse(const ArchitectureSpec& arch, const NetworkParams& params,
                       const IntentionState& intention,
                       const std::vector<MapGrid>& frames) {
  if (frames.size() < 2)
    throw ConfigError("closed-loop evaluation needs at least two frames");
  int steps = static_cast<int>(frames.size()) - 1;
  Rollout r = rollout(arch, params, intention, Mode::closed, frames, steps);
  return mse_frames(r.outputs, closed_targets(frames));
}

TrainedModel train(const ArchitectureSpec& arch,
                   const std::vector<VideoSequence>& data,
                   const TrainingConfig& cfg, const EpochCallback& on_epoch) {
  arch.validate();
  StartState start;
  start.params = init_params(arch, cfg.seed);
  start.intentions.reserve(data.size());
  for (size_t i = 0; i < data.size(); ++i)
    start.intentions.push_back(zero_intention(arch));
  return run_training(arch, std::move(start), data, cfg, on_epoch);
}

TrainedModel continue_training(const TrainedModel& base,
                               const std::vector<VideoSequence>& old_data,
                               const std::vector<VideoSequence>& new_data,
                               const TrainingConfig& cfg, const EpochCallback& on_epoch) {
  base.arch.validate();
  if (new_data.empty()) {
    TrainedModel out = base;
    out.log.clear();
    out.epochs_run = 0;
    return out;
  }
  std::vector<VideoSequence> all = old_data;
  all.insert(all.end(), new_data.begin(), new_data.end());

  StartState start;
  start.params = base.params;
  start.intentions.reserve(all.size());
  for (const auto& s : all) {
    int found = -1;
    for (size_t j = 0; j < base.labels.size(); ++j) {
      if (base.labels[j] == s.label) {
        found = static_cast<int>(j);
        break;
      }
    }
    if (found >= 0)
      start.intentions.push_back(base.intentions[found]);
    else
      start.intentions.push_back(zero_intention(base.arch));
  }
  return run_training(base.arch, std::move(start), all, cfg, on_epoch);
}

}  // namespace pmstrnn
