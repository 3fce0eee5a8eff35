#include "pmstrnn/regression.hpp"

#include <cmath>
#include <deque>

#include "pmstrnn/bptt.hpp"
#include "pmstrnn/errors.hpp"
#include "pmstrnn/network.hpp"

namespace pmstrnn {

namespace {

void check_config(const RegressionConfig& cfg) {
  if (cfg.window < 1) throw ConfigError("regression window must be at least 1");
  if (cfg.rate < 0.0) throw ConfigError("regression rate must not be negative");
  if (cfg.iters_per_step < 1)
    throw ConfigError("iters_per_step must be at least 1");
}

// advance the window start by one true frame so the oldest frame can drop out
IntentionState shift_start(const ArchitectureSpec& arch, const NetworkParams& params,
                           const IntentionState& z, const MapGrid& frame) {
  NetworkState st = state_from_intention(arch, z);
  NetworkState next = st;
  step(arch, params, st, &frame, next);
  return intention_from_state(next);
}

double replay_loss(const ArchitectureSpec& arch, const NetworkParams& params,
                   const IntentionState& z, Mode mode,
                   const std::vector<MapGrid>& history) {
  int steps = static_cast<int>(history.size()) - 1;
  Rollout r = rollout(arch, params, z, mode, history, steps);
  double acc = 0.0;
  for (int t = 0; t < steps; ++t) acc += mse(r.outputs[t], history[t + 1]);
  return acc / steps;
}

}  // namespace

WindowResult regress_window(const ArchitectureSpec& arch, const NetworkParams& params,
                            const std::vector<MapGrid>& history,
                            const IntentionState& guess, const RegressionConfig& cfg) {
  check_config(cfg);
  WindowResult out;
  out.intention = guess;
  if (history.size() < 2) {
    // nothing to score yet; the guess is returned untouched
    out.reconstruction_mse = 0.0;
    return out;
  }

  const Mode mode = cfg.use_history_inputs ? Mode::open : Mode::closed;
  IntentionState z = guess;
  IntentionState best = guess;
  double best_loss = 0.0;
  bool have_best = false;

  for (int it = 0; it < cfg.iters_per_step; ++it) {
    BpttResult res = bptt(arch, params, z, mode, history, false);
    out.iteration_loss.push_back(res.loss);
    if (!have_best || res.loss < best_loss) {
      best = z;
      best_loss = res.loss;
      have_best = true;
    }
    if (res.loss < cfg.early_stop) break;
    intention_add_scaled(z, res.intention_grads, -cfg.rate);
    if (!intention_all_finite(z)) {
      z = best;  // roll back the blown-up update and stop
      ++out.resets;
      break;
    }
  }

  // the final iterate was never scored inside the loop
  if (intention_all_finite(z)) {
    double final_loss = replay_loss(arch, params, z, mode, history);
    out.iteration_loss.push_back(final_loss);
    if (!have_best || final_loss < best_loss) {
      best = z;
      best_loss = final_loss;
    }
  }

  out.intention = best;
  out.reconstruction_mse = best_loss;
  return out;
}

RecognitionTrace recognize_stream(const ArchitectureSpec& arch,
                                  const NetworkParams& params,
                                  const IntentionState& start,
                                  const std::vector<MapGrid>& frames,
                                  const RegressionConfig& cfg) {
  check_config(cfg);
  if (frames.size() < 2)
    throw ConfigError("recognition needs at least two frames");

  const Mode mode = cfg.use_history_inputs ? Mode::open : Mode::closed;
  const int total = static_cast<int>(frames.size());

  RecognitionTrace trace;
  trace.prediction_error.reserve(total - 1);
  trace.window_loss.reserve(total - 1);
  trace.predictions.reserve(total - 1);
  trace.iteration_loss.reserve(total - 1);

  IntentionState z = start;
  std::deque<int> window;  // indices into frames

  for (int t = 0; t + 1 < total; ++t) {
    window.push_back(t);
    if (static_cast<int>(window.size()) > cfg.window) {
      z = shift_start(arch, params, z, frames[window.front()]);
      window.pop_front();
    }

    std::vector<MapGrid> hist;
    hist.reserve(window.size());
    for (int idx : window) hist.push_back(frames[idx]);

    WindowResult wr = regress_window(arch, params, hist, z, cfg);
    z = wr.intention;
    trace.resets += wr.resets;
    trace.iteration_loss.push_back(std::move(wr.iteration_loss));
    trace.window_loss.push_back(wr.reconstruction_mse);
    if (cfg.record_states) trace.states.push_back(z);

    // replay the window and take one more step past its end
    int steps = static_cast<int>(hist.size());
    Rollout r = rollout(arch, params, z, mode, hist, steps);
    trace.predictions.push_back(r.outputs.back());
    trace.prediction_error.push_back(mse(r.outputs.back(), frames[t + 1]));
  }

  trace.final_state = z;
  return trace;
}

RecognitionTrace entrainment_stream(const ArchitectureSpec& arch,
                                    const NetworkParams& params,
                                    const IntentionState& fixed,
                                    const std::vector<MapGrid>& frames) {
  if (frames.size() < 2)
    throw ConfigError("entrainment needs at least two frames");
  int steps = static_cast<int>(frames.size()) - 1;
  Rollout r = rollout(arch, params, fixed, Mode::open, frames, steps);
  RecognitionTrace trace;
  trace.prediction_error.resize(steps);
  trace.predictions.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    trace.prediction_error[t] = mse(r.outputs[t], frames[t + 1]);
    trace.predictions.push_back(r.outputs[t]);
  }
  trace.final_state = fixed;
  return trace;
}

double intention_distance(const IntentionState& a, const IntentionState& b) {
  double acc = 0.0;
  for (size_t l = 0; l < a.fm.size(); ++l) {
    for (size_t p = 0; p < a.fm[l].size(); ++p) {
      const auto& ga = a.fm[l][p];
      const auto& gb = b.fm[l][p];
      for (size_t i = 0; i < ga.v.size(); ++i) {
        double d = ga.v[i] - gb.v[i];
        acc += d * d;
      }
    }
    for (size_t m = 0; m < a.cm[l].size(); ++m) {
      const auto& ga = a.cm[l][m];
      const auto& gb = b.cm[l][m];
      for (size_t i = 0; i < ga.v.size(); ++i) {
        double d = ga.v[i] - gb.v[i];
        acc += d * d;
      }
    }
  }
  return std::sqrt(acc);
}

}  // namespace pmstrnn
