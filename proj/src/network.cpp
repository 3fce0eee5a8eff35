// network.cpp

#include "pmstrnn/network.hpp"

#include <cmath>
#include <string>

#include "pmstrnn/errors.hpp"

namespace pmstrnn {

NetworkState state_from_intention(const ArchitectureSpec& arch, const IntentionState& s) {
  NetworkState st;
  const int n = arch.num_layers();
  st.layers.resize(n);
  for (int l = 0; l < n; ++l) {
    LayerState& ls = st.layers[l];
    ls.fm_in = s.fm[l];
    ls.fm_act.resize(ls.fm_in.size());
    for (size_t p = 0; p < ls.fm_in.size(); ++p)
      scaled_tanh_map(ls.fm_in[p], ls.fm_act[p]);
    ls.cm_in = s.cm[l];
    ls.cm_act.resize(ls.cm_in.size());
    for (size_t m = 0; m < ls.cm_in.size(); ++m)
      scaled_tanh_map(ls.cm_in[m], ls.cm_act[m]);
  }
  return st;
}

IntentionState intention_from_state(const NetworkState& s) {
  IntentionState out;
  out.fm.resize(s.layers.size());
  out.cm.resize(s.layers.size());
  for (size_t l = 0; l < s.layers.size(); ++l) {
    out.fm[l] = s.layers[l].fm_in;
    out.cm[l] = s.layers[l].cm_in;
  }
  return out;
}

namespace {

inline void leaky_update(MapGrid& next_in, MapGrid& next_act, const MapGrid& prev_in,
                         const MapGrid& drive, double alpha, double beta) {
  const size_t n = prev_in.v.size();
  next_in.h = prev_in.h;
  next_in.w = prev_in.w;
  next_in.v.resize(n);
  for (size_t i = 0; i < n; ++i)
    next_in.v[i] = alpha * prev_in.v[i] + beta * drive.v[i];
  scaled_tanh_map(next_in, next_act);
}

}  // namespace

void fm_step(const ArchitectureSpec& arch, const NetworkParams& params, int level,
             const NetworkState& prev, const MapGrid* input, LayerState& next) {
  const LayerSpec& spec = arch.layer(level);
  const LayerParams& lp = params.layers[level - 1];
  const double beta = 1.0 / spec.tau;
  const double alpha = 1.0 - beta;
  const int top = arch.num_layers();
  next.fm_in.resize(spec.num_fm);
  next.fm_act.resize(spec.num_fm);
  MapGrid drive(spec.fm_h, spec.fm_w);
  for (int p = 0; p < spec.num_fm; ++p) {
    drive.fill(0.0);
    if (level < top) {
      const LayerState& up = prev.layer(level + 1);
      for (size_t q = 0; q < up.fm_act.size(); ++q)
        convolve_add(drive, up.fm_act[q], lp.k_ff[p][q]);
    }
    const LayerState& own = prev.layer(level);
    for (size_t m = 0; m < own.cm_act.size(); ++m)
      convolve_add(drive, own.cm_act[m], lp.k_cf[p][m]);
    if (level == 1 && input) convolve_add(drive, *input, lp.k_if[p]);
    const double b = lp.b_fm[p];
    for (double& x : drive.v) x += b;
    leaky_update(next.fm_in[p], next.fm_act[p], own.fm_in[p], drive, alpha, beta);
  }
}

void cm_step(const ArchitectureSpec& arch, const NetworkParams& params, int level,
             const NetworkState& prev, const MapGrid* input, LayerState& next) {
  const LayerSpec& spec = arch.layer(level);
  const LayerParams& lp = params.layers[level - 1];
  next.cm_in.resize(spec.num_cm);
  next.cm_act.resize(spec.num_cm);
  if (spec.num_cm == 0) return;
  const double beta = 1.0 / spec.tau;
  const double alpha = 1.0 - beta;
  const int top = arch.num_layers();
  const LayerState& own = prev.layer(level);
  MapGrid drive(spec.cm_h, spec.cm_w);
  for (int m = 0; m < spec.num_cm; ++m) {
    drive.fill(0.0);
    for (size_t n = 0; n < own.cm_act.size(); ++n)
      mul_add(drive, own.cm_act[n], lp.w_cc[m][n]);
    if (level < top) {
      const LayerState& up = prev.layer(level + 1);
      for (size_t q = 0; q < up.fm_act.size(); ++q)
        mul_add(drive, up.fm_act[q], lp.w_fc[m][q]);
    }
    if (level == 1) {
      if (input) convolve_add(drive, *input, lp.k_fc[m][0]);
    } else {
      const LayerState& below = prev.layer(level - 1);
      for (size_t r = 0; r < below.fm_act.size(); ++r)
        convolve_add(drive, below.fm_act[r], lp.k_fc[m][r]);
    }
    const double b = lp.b_cm[m];
    for (double& x : drive.v) x += b;
    leaky_update(next.cm_in[m], next.cm_act[m], own.cm_in[m], drive, alpha, beta);
  }
}

void step(const ArchitectureSpec& arch, const NetworkParams& params,
          const NetworkState& prev, const MapGrid* input, NetworkState& next) {
  const int n = arch.num_layers();
  next.layers.resize(n);
  for (int l = 1; l <= n; ++l) {
    fm_step(arch, params, l, prev, input, next.layers[l - 1]);
    cm_step(arch, params, l, prev, input, next.layers[l - 1]);
  }
}

void output_step(const ArchitectureSpec& arch, const NetworkParams& params,
                 const NetworkState& s, MapGrid& pre, MapGrid& act) {
  pre.h = arch.input_h;
  pre.w = arch.input_w;
  pre.v.assign(static_cast<size_t>(arch.input_h) * arch.input_w, 0.0);
  const LayerState& l1 = s.layer(1);
  for (size_t q = 0; q < l1.fm_act.size(); ++q)
    convolve_add(pre, l1.fm_act[q], params.k_fo[q]);
  for (double& x : pre.v) x += params.b_o;
  scaled_tanh_map(pre, act);
}

namespace {

bool state_finite(const NetworkState& s) {
  for (const LayerState& l : s.layers) {
    for (const MapGrid& g : l.fm_in)
      if (!all_finite(g)) return false;
    for (const MapGrid& g : l.cm_in)
      if (!all_finite(g)) return false;
  }
  return true;
}

}  // namespace

Rollout rollout(const ArchitectureSpec& arch, const NetworkParams& params,
                const IntentionState& intention, Mode mode,
                const std::vector<MapGrid>& frames, int steps, bool record_trace) {
  if (steps < 0) throw ConfigError("rollout steps must be >= 0");
  if (mode == Mode::open && steps > static_cast<int>(frames.size()))
    throw ConfigError("open-loop rollout needs one frame per step");
  if (mode == Mode::closed && steps > 0 && frames.empty())
    throw ConfigError("closed-loop rollout needs an initial frame");
  for (const MapGrid& f : frames)
    if (f.h != arch.input_h || f.w != arch.input_w)
      throw ConfigError("frame size does not match the architecture input");

  Rollout out;
  NetworkState cur = state_from_intention(arch, intention);
  if (record_trace) {
    out.trace.reserve(steps + 1);
    out.trace.push_back(cur);
  }
  out.outputs.reserve(steps);
  out.outputs_pre.reserve(steps);
  NetworkState next;
  for (int t = 1; t <= steps; ++t) {
    const MapGrid* input = nullptr;
    if (mode == Mode::open) {
      input = &frames[t - 1];
    } else {
      input = (t == 1) ? &frames[0] : &out.outputs[t - 2];
    }
    step(arch, params, cur, input, next);
    if (!state_finite(next))
      throw NumericError("non-finite state at rollout step " + std::to_string(t));
    MapGrid pre, act;
    output_step(arch, params, next, pre, act);
    if (!all_finite(pre))
      throw NumericError("non-finite output at rollout step " + std::to_string(t));
    out.outputs_pre.push_back(std::move(pre));
    out.outputs.push_back(std::move(act));
    std::swap(cur, next);
    if (record_trace) out.trace.push_back(cur);
  }
  return out;
}

double mse(const MapGrid& a, const MapGrid& b) {
  if (!a.same_shape(b)) throw ConfigError("mse shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    s += d * d;
  }
  return s / static_cast<double>(a.v.size());
}

double mse_frames(const std::vector<MapGrid>& a, const std::vector<MapGrid>& b) {
  if (a.size() != b.size()) throw ConfigError("mse_frames length mismatch");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += mse(a[i], b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace pmstrnn
