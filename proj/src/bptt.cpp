// bptt.cpp

#include "pmstrnn/bptt.hpp"

#include <cmath>
#include <string>

#include "pmstrnn/errors.hpp"

namespace pmstrnn {

namespace {

// adjoint buffers for the internal state of every map at one time step
struct StateGrad {
  std::vector<std::vector<MapGrid>> fm;  // [layer][p]
  std::vector<std::vector<MapGrid>> cm;  // [layer][m]

  static StateGrad zeros(const ArchitectureSpec& arch) {
    StateGrad g;
    const int n = arch.num_layers();
    g.fm.resize(n);
    g.cm.resize(n);
    for (int l = 1; l <= n; ++l) {
      const LayerSpec& spec = arch.layer(l);
      g.fm[l - 1].assign(spec.num_fm, MapGrid(spec.fm_h, spec.fm_w));
      if (spec.num_cm > 0)
        g.cm[l - 1].assign(spec.num_cm, MapGrid(spec.cm_h, spec.cm_w));
    }
    return g;
  }

  void clear() {
    for (auto& maps : fm)
      for (auto& g : maps) g.fill(0.0);
    for (auto& maps : cm)
      for (auto& g : maps) g.fill(0.0);
  }
};

inline void apply_prime_from_internal(MapGrid& g, const MapGrid& internal) {
  for (size_t i = 0; i < g.v.size(); ++i) g.v[i] *= scaled_tanh_prime(internal.v[i]);
}

}  // namespace

BpttResult bptt(const ArchitectureSpec& arch, const NetworkParams& params,
                const IntentionState& intention, Mode mode,
                const std::vector<MapGrid>& frames, bool want_param_grads) {
  const int T = static_cast<int>(frames.size());
  if (T < 2) throw ConfigError("bptt needs at least two frames");
  const int S = T - 1;
  const int top = arch.num_layers();

  Rollout roll = rollout(arch, params, intention, mode, frames, S, true);

  BpttResult res;
  res.outputs = roll.outputs;
  const double cells = static_cast<double>(arch.input_h) * arch.input_w;
  const double norm = 2.0 / (S * cells);
  for (int t = 1; t <= S; ++t) res.loss += mse(roll.outputs[t - 1], frames[t]);
  res.loss /= S;
  if (!std::isfinite(res.loss)) throw NumericError("non-finite loss in bptt");

  if (want_param_grads) res.param_grads = zero_params(arch);
  NetworkParams& pg = res.param_grads;

  // adjoints of the next step (t+1) and of the current step
  StateGrad g_next = StateGrad::zeros(arch);
  StateGrad g_cur = StateGrad::zeros(arch);
  MapGrid carried_gI(arch.input_h, arch.input_w);  // d loss / d input at step t+1
  bool have_carried = false;
  MapGrid g_out_pre(arch.input_h, arch.input_w);
  MapGrid scratch_fm, scratch_cm, scaled;

  // the input frame fed at step t (see rollout)
  auto input_at = [&](int t) -> const MapGrid& {
    if (mode == Mode::open) return frames[t - 1];
    return (t == 1) ? frames[0] : roll.outputs[t - 2];
  };

  for (int t = S; t >= 1; --t) {
    const NetworkState& st = roll.trace[t];
    const NetworkState& st_prev = roll.trace[t - 1];

    // output head: d loss / d out_act plus the feedback adjoint carried from
    // the step that consumed this output as its input
    {
      const MapGrid& out = roll.outputs[t - 1];
      const MapGrid& target = frames[t];
      g_out_pre.fill(0.0);
      for (size_t i = 0; i < out.v.size(); ++i)
        g_out_pre.v[i] = norm * (out.v[i] - target.v[i]);
      if (have_carried)
        for (size_t i = 0; i < out.v.size(); ++i) g_out_pre.v[i] += carried_gI.v[i];
      apply_prime_from_internal(g_out_pre, roll.outputs_pre[t - 1]);
      if (want_param_grads) {
        pg.b_o += grid_sum(g_out_pre);
        for (size_t q = 0; q < params.k_fo.size(); ++q)
          conv_kernel_grad_add(pg.k_fo[q], g_out_pre, st.layer(1).fm_act[q]);
      }
    }

    // state adjoints at step t; cross terms read the adjoints of step t+1
    for (int l = 1; l <= top; ++l) {
      const LayerSpec& spec = arch.layer(l);
      const double beta = 1.0 / spec.tau;
      const double alpha = 1.0 - beta;
      for (int p = 0; p < spec.num_fm; ++p) {
        MapGrid& g = g_cur.fm[l - 1][p];
        g.fill(0.0);
        if (l == 1) conv_input_grad_add(g, g_out_pre, params.k_fo[p]);
        if (l > 1) {
          const LayerSpec& below = arch.layer(l - 1);
          const LayerParams& lp_below = params.layers[l - 2];
          scratch_fm = MapGrid(spec.fm_h, spec.fm_w);
          for (int pp = 0; pp < below.num_fm; ++pp)
            conv_input_grad_add(scratch_fm, g_next.fm[l - 2][pp], lp_below.k_ff[pp][p]);
          for (int m = 0; m < below.num_cm; ++m)
            mul_add(scratch_fm, g_next.cm[l - 2][m], lp_below.w_fc[m][p]);
          add_scaled(g, scratch_fm, 1.0 / below.tau);
        }
        if (l < top) {
          const LayerSpec& above = arch.layer(l + 1);
          const LayerParams& lp_above = params.layers[l];
          if (above.num_cm > 0) {
            scratch_fm = MapGrid(spec.fm_h, spec.fm_w);
            for (int m = 0; m < above.num_cm; ++m)
              conv_input_grad_add(scratch_fm, g_next.cm[l][m], lp_above.k_fc[m][p]);
            add_scaled(g, scratch_fm, 1.0 / above.tau);
          }
        }
        apply_prime_from_internal(g, st.layer(l).fm_in[p]);
        add_scaled(g, g_next.fm[l - 1][p], alpha);
      }
      const LayerParams& lp = params.layers[l - 1];
      for (int m = 0; m < spec.num_cm; ++m) {
        MapGrid& g = g_cur.cm[l - 1][m];
        g.fill(0.0);
        scratch_cm = MapGrid(spec.cm_h, spec.cm_w);
        for (int p = 0; p < spec.num_fm; ++p)
          conv_input_grad_add(scratch_cm, g_next.fm[l - 1][p], lp.k_cf[p][m]);
        for (int mm = 0; mm < spec.num_cm; ++mm)
          mul_add(scratch_cm, g_next.cm[l - 1][mm], lp.w_cc[mm][m]);
        add_scaled(g, scratch_cm, beta);
        apply_prime_from_internal(g, st.layer(l).cm_in[m]);
        add_scaled(g, g_next.cm[l - 1][m], alpha);
      }
    }

    // parameter gradients of step t: drive terms scale by beta, sources are
    // the activations of step t-1 and the frame fed at step t
    if (want_param_grads) {
      const MapGrid& input = input_at(t);
      for (int l = 1; l <= top; ++l) {
        const LayerSpec& spec = arch.layer(l);
        const double beta = 1.0 / spec.tau;
        LayerParams& gl = pg.layers[l - 1];
        const LayerParams& lp = params.layers[l - 1];
        (void)lp;
        for (int p = 0; p < spec.num_fm; ++p) {
          scaled = g_cur.fm[l - 1][p];
          for (double& x : scaled.v) x *= beta;
          if (l < top) {
            const LayerState& up_prev = st_prev.layer(l + 1);
            for (size_t q = 0; q < up_prev.fm_act.size(); ++q)
              conv_kernel_grad_add(gl.k_ff[p][q], scaled, up_prev.fm_act[q]);
          }
          const LayerState& own_prev = st_prev.layer(l);
          for (size_t n = 0; n < own_prev.cm_act.size(); ++n)
            conv_kernel_grad_add(gl.k_cf[p][n], scaled, own_prev.cm_act[n]);
          if (l == 1) conv_kernel_grad_add(gl.k_if[p], scaled, input);
          gl.b_fm[p] += grid_sum(scaled);
        }
        for (int m = 0; m < spec.num_cm; ++m) {
          scaled = g_cur.cm[l - 1][m];
          for (double& x : scaled.v) x *= beta;
          const LayerState& own_prev = st_prev.layer(l);
          for (size_t n = 0; n < own_prev.cm_act.size(); ++n)
            mul_add(gl.w_cc[m][n], scaled, own_prev.cm_act[n]);
          if (l < top) {
            const LayerState& up_prev = st_prev.layer(l + 1);
            for (size_t q = 0; q < up_prev.fm_act.size(); ++q)
              mul_add(gl.w_fc[m][q], scaled, up_prev.fm_act[q]);
          }
          if (l == 1) {
            conv_kernel_grad_add(gl.k_fc[m][0], scaled, input);
          } else {
            const LayerState& below_prev = st_prev.layer(l - 1);
            for (size_t r = 0; r < below_prev.fm_act.size(); ++r)
              conv_kernel_grad_add(gl.k_fc[m][r], scaled, below_prev.fm_act[r]);
          }
          gl.b_cm[m] += grid_sum(scaled);
        }
      }
    }

    // feedback adjoint: in closed loop, the input of step t is the output of
    // step t-1 (except step 1, which is data in both modes)
    if (mode == Mode::closed && t > 1) {
      const LayerSpec& l1 = arch.layer(1);
      const double beta1 = 1.0 / l1.tau;
      carried_gI.fill(0.0);
      for (int p = 0; p < l1.num_fm; ++p)
        conv_input_grad_add(carried_gI, g_cur.fm[0][p], params.layers[0].k_if[p]);
      for (int m = 0; m < l1.num_cm; ++m)
        conv_input_grad_add(carried_gI, g_cur.cm[0][m], params.layers[0].k_fc[m][0]);
      for (double& x : carried_gI.v) x *= beta1;
      have_carried = true;
    } else {
      have_carried = false;
    }

    std::swap(g_next, g_cur);
  }

  // step 0: the same recursion lands on the intention state (no output here)
  res.intention_grads = zero_intention(arch);
  {
    const NetworkState& st0 = roll.trace[0];
    for (int l = 1; l <= top; ++l) {
      const LayerSpec& spec = arch.layer(l);
      const double alpha = 1.0 - 1.0 / spec.tau;
      for (int p = 0; p < spec.num_fm; ++p) {
        MapGrid& g = res.intention_grads.fm[l - 1][p];
        if (l > 1) {
          const LayerSpec& below = arch.layer(l - 1);
          const LayerParams& lp_below = params.layers[l - 2];
          scratch_fm = MapGrid(spec.fm_h, spec.fm_w);
          for (int pp = 0; pp < below.num_fm; ++pp)
            conv_input_grad_add(scratch_fm, g_next.fm[l - 2][pp], lp_below.k_ff[pp][p]);
          for (int m = 0; m < below.num_cm; ++m)
            mul_add(scratch_fm, g_next.cm[l - 2][m], lp_below.w_fc[m][p]);
          add_scaled(g, scratch_fm, 1.0 / below.tau);
        }
        if (l < top) {
          const LayerSpec& above = arch.layer(l + 1);
          const LayerParams& lp_above = params.layers[l];
          if (above.num_cm > 0) {
            scratch_fm = MapGrid(spec.fm_h, spec.fm_w);
            for (int m = 0; m < above.num_cm; ++m)
              conv_input_grad_add(scratch_fm, g_next.cm[l][m], lp_above.k_fc[m][p]);
            add_scaled(g, scratch_fm, 1.0 / above.tau);
          }
        }
        apply_prime_from_internal(g, st0.layer(l).fm_in[p]);
        add_scaled(g, g_next.fm[l - 1][p], alpha);
      }
      const LayerParams& lp = params.layers[l - 1];
      const double beta = 1.0 / spec.tau;
      for (int m = 0; m < spec.num_cm; ++m) {
        MapGrid& g = res.intention_grads.cm[l - 1][m];
        scratch_cm = MapGrid(spec.cm_h, spec.cm_w);
        for (int p = 0; p < spec.num_fm; ++p)
          conv_input_grad_add(scratch_cm, g_next.fm[l - 1][p], lp.k_cf[p][m]);
        for (int mm = 0; mm < spec.num_cm; ++mm)
          mul_add(scratch_cm, g_next.cm[l - 1][mm], lp.w_cc[mm][m]);
        add_scaled(g, scratch_cm, beta);
        apply_prime_from_internal(g, st0.layer(l).cm_in[m]);
        add_scaled(g, g_next.cm[l - 1][m], alpha);
      }
    }
  }
  return res;
}

}  // namespace pmstrnn
