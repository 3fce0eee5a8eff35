#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "micro.hpp"
#include "pmstrnn/errors.hpp"
#include "pmstrnn/network.hpp"

using namespace pmstrnn;
using testutil::micro_arch_2;
using testutil::micro_arch_scalar;
using testutil::random_frames;
using testutil::random_intention;

namespace {

double ref_sigma(double x) { return 1.7159 * std::tanh(2.0 * x / 3.0); }

// direct correlation with the documented padding rule, written from scratch
MapGrid ref_conv(const MapGrid& in, const Kernel& k, int oh, int ow) {
  int pad_h = oh + k.h - 1 - in.h;
  int pad_w = ow + k.w - 1 - in.w;
  int top = pad_h / 2, left = pad_w / 2;
  MapGrid out(oh, ow);
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j) {
      double s = 0.0;
      for (int a = 0; a < k.h; ++a)
        for (int b = 0; b < k.w; ++b) {
          int r = i + a - top, c = j + b - left;
          if (r >= 0 && r < in.h && c >= 0 && c < in.w)
            s += in.at(r, c) * k.at(a, b);
        }
      out.at(i, j) = s;
    }
  return out;
}

struct RefMaps {
  std::vector<MapGrid> in, act;
};

struct RefState {
  std::vector<RefMaps> fm, cm;  // indexed by level-1
};

RefState ref_init(const ArchitectureSpec& arch, const IntentionState& z) {
  RefState s;
  s.fm.resize(arch.num_layers());
  s.cm.resize(arch.num_layers());
  for (int l = 0; l < arch.num_layers(); ++l) {
    for (const MapGrid& g : z.fm[l]) {
      s.fm[l].in.push_back(g);
      MapGrid a(g.h, g.w);
      for (int i = 0; i < g.cells(); ++i) a.v[i] = ref_sigma(g.v[i]);
      s.fm[l].act.push_back(std::move(a));
    }
    for (const MapGrid& g : z.cm[l]) {
      s.cm[l].in.push_back(g);
      MapGrid a(g.h, g.w);
      for (int i = 0; i < g.cells(); ++i) a.v[i] = ref_sigma(g.v[i]);
      s.cm[l].act.push_back(std::move(a));
    }
  }
  return s;
}

// one update of the two-level fixture, all time constants assumed tau
RefState ref_step(const ArchitectureSpec& arch, const NetworkParams& p,
                  const RefState& prev, const MapGrid& frame) {
  RefState next = prev;
  for (int lv = 1; lv <= arch.num_layers(); ++lv) {
    const LayerSpec& spec = arch.layer(lv);
    const LayerParams& lp = p.layers[lv - 1];
    double alpha = 1.0 - 1.0 / spec.tau, beta = 1.0 / spec.tau;
    bool top = lv == arch.num_layers();
    for (int q = 0; q < spec.num_fm; ++q) {
      MapGrid drive(spec.fm_h, spec.fm_w);
      if (!top)
        for (size_t u = 0; u < prev.fm[lv].act.size(); ++u) {
          MapGrid c = ref_conv(prev.fm[lv].act[u], lp.k_ff[q][u], spec.fm_h, spec.fm_w);
          for (int i = 0; i < c.cells(); ++i) drive.v[i] += c.v[i];
        }
      for (size_t n = 0; n < prev.cm[lv - 1].act.size(); ++n) {
        MapGrid c = ref_conv(prev.cm[lv - 1].act[n], lp.k_cf[q][n], spec.fm_h, spec.fm_w);
        for (int i = 0; i < c.cells(); ++i) drive.v[i] += c.v[i];
      }
      if (lv == 1) {
        MapGrid c = ref_conv(frame, lp.k_if[q], spec.fm_h, spec.fm_w);
        for (int i = 0; i < c.cells(); ++i) drive.v[i] += c.v[i];
      }
      for (int i = 0; i < drive.cells(); ++i) {
        double d = drive.v[i] + lp.b_fm[q];
        next.fm[lv - 1].in[q].v[i] = alpha * prev.fm[lv - 1].in[q].v[i] + beta * d;
        next.fm[lv - 1].act[q].v[i] = ref_sigma(next.fm[lv - 1].in[q].v[i]);
      }
    }
    for (int m = 0; m < spec.num_cm; ++m) {
      MapGrid drive(spec.cm_h, spec.cm_w);
      for (size_t n = 0; n < prev.cm[lv - 1].act.size(); ++n)
        for (int i = 0; i < drive.cells(); ++i)
          drive.v[i] += lp.w_cc[m][n].v[i] * prev.cm[lv - 1].act[n].v[i];
      if (!top)
        for (size_t u = 0; u < prev.fm[lv].act.size(); ++u)
          for (int i = 0; i < drive.cells(); ++i)
            drive.v[i] += lp.w_fc[m][u].v[i] * prev.fm[lv].act[u].v[i];
      if (lv == 1) {
        MapGrid c = ref_conv(frame, lp.k_fc[m][0], spec.cm_h, spec.cm_w);
        for (int i = 0; i < c.cells(); ++i) drive.v[i] += c.v[i];
      } else {
        for (size_t r = 0; r < prev.fm[lv - 2].act.size(); ++r) {
          MapGrid c = ref_conv(prev.fm[lv - 2].act[r], lp.k_fc[m][r], spec.cm_h, spec.cm_w);
          for (int i = 0; i < c.cells(); ++i) drive.v[i] += c.v[i];
        }
      }
      for (int i = 0; i < drive.cells(); ++i) {
        double d = drive.v[i] + lp.b_cm[m];
        next.cm[lv - 1].in[m].v[i] = alpha * prev.cm[lv - 1].in[m].v[i] + beta * d;
        next.cm[lv - 1].act[m].v[i] = ref_sigma(next.cm[lv - 1].in[m].v[i]);
      }
    }
  }
  return next;
}

MapGrid ref_output(const ArchitectureSpec& arch, const NetworkParams& p,
                   const RefState& s) {
  MapGrid pre(arch.input_h, arch.input_w);
  for (size_t q = 0; q < s.fm[0].act.size(); ++q) {
    MapGrid c = ref_conv(s.fm[0].act[q], p.k_fo[q], arch.input_h, arch.input_w);
    for (int i = 0; i < c.cells(); ++i) pre.v[i] += c.v[i];
  }
  MapGrid act(pre.h, pre.w);
  for (int i = 0; i < pre.cells(); ++i) {
    pre.v[i] += p.b_o;
    act.v[i] = ref_sigma(pre.v[i]);
  }
  return act;
}

void check_close(const MapGrid& a, const MapGrid& b, double tol) {
  REQUIRE(a.same_shape(b));
  for (int i = 0; i < a.cells(); ++i)
    CHECK(std::abs(a.v[i] - b.v[i]) <= tol);
}

}  // namespace

TEST_CASE("dynamics match a from-scratch recurrence") {
  for (double tau : {1.0, 2.5}) {
    ArchitectureSpec arch = micro_arch_2();
    for (auto& l : arch.layers) l.tau = tau;
    NetworkParams params = init_params(arch, 7);
    IntentionState z = random_intention(arch, 11);
    auto frames = random_frames(arch, 4, 13);

    Rollout r = rollout(arch, params, z, Mode::open, frames, 3, true);

    RefState s = ref_init(arch, z);
    for (int t = 0; t < 3; ++t) {
      s = ref_step(arch, params, s, frames[t]);
      check_close(ref_output(arch, params, s), r.outputs[t], 1e-13);
      const NetworkState& got = r.trace[t + 1];
      for (int l = 0; l < arch.num_layers(); ++l) {
        for (size_t q = 0; q < s.fm[l].in.size(); ++q) {
          check_close(s.fm[l].in[q], got.layers[l].fm_in[q], 1e-13);
          check_close(s.fm[l].act[q], got.layers[l].fm_act[q], 1e-13);
        }
        for (size_t m = 0; m < s.cm[l].in.size(); ++m)
          check_close(s.cm[l].in[m], got.layers[l].cm_in[m], 1e-13);
      }
    }
  }
}

TEST_CASE("scalar network matches hand-computed values") {
  ArchitectureSpec arch = micro_arch_scalar();
  NetworkParams p = zero_params(arch);
  p.layers[0].k_cf[0][0].v[0] = 0.25;
  p.layers[0].k_if[0].v[0] = 0.5;
  p.layers[0].k_fc[0][0].v[0] = 0.3;
  p.layers[0].w_cc[0][0].v[0] = 0.2;
  p.layers[0].b_fm[0] = 0.1;
  p.layers[0].b_cm[0] = -0.05;
  p.k_fo[0].v[0] = 0.8;
  p.b_o = 0.05;

  IntentionState z = zero_intention(arch);
  z.fm[0][0].v[0] = 0.4;
  z.cm[0][0].v[0] = -0.3;
  MapGrid x(1, 1);
  x.v[0] = 0.6;

  Rollout r = rollout(arch, p, z, Mode::open, {x, x}, 1, true);

  double act_cm0 = ref_sigma(-0.3);
  double fm_drive = 0.25 * act_cm0 + 0.5 * 0.6 + 0.1;
  double fm_in1 = 0.5 * 0.4 + 0.5 * fm_drive;
  double cm_drive = 0.2 * act_cm0 + 0.3 * 0.6 - 0.05;
  double cm_in1 = 0.5 * -0.3 + 0.5 * cm_drive;
  double out = ref_sigma(0.8 * ref_sigma(fm_in1) + 0.05);

  CHECK(r.trace[1].layer(1).fm_in[0].v[0] == doctest::Approx(fm_in1).epsilon(1e-14));
  CHECK(r.trace[1].layer(1).cm_in[0].v[0] == doctest::Approx(cm_in1).epsilon(1e-14));
  CHECK(r.outputs[0].v[0] == doctest::Approx(out).epsilon(1e-14));
}

TEST_CASE("pathway tensors exist exactly where the wiring has them") {
  ArchitectureSpec arch = micro_arch_2();
  NetworkParams p = zero_params(arch);
  // top level: no upper feature maps to receive from
  CHECK(p.layers[1].k_ff.empty());
  CHECK(p.layers[1].w_fc.empty());
  // frame input reaches level 1 only
  CHECK(p.layers[0].k_if.size() == 2);
  CHECK(p.layers[1].k_if.empty());
  // level-1 context maps read the frame through a single kernel each
  REQUIRE(p.layers[0].k_fc.size() == 1);
  CHECK(p.layers[0].k_fc[0].size() == 1);
  // level-2 context maps read every level-1 feature map
  REQUIRE(p.layers[1].k_fc.size() == 1);
  CHECK(p.layers[1].k_fc[0].size() == 2);
  CHECK(p.k_fo.size() == 2);
}

TEST_CASE("activations stay inside the tanh range") {
  ArchitectureSpec arch = micro_arch_2();
  NetworkParams p = init_params(arch, 3);
  // exaggerate to push the maps hard
  for (auto& ref : tensor_refs(p))
    for (double& v : *ref.data) v *= 40.0;
  IntentionState z = random_intention(arch, 5, 2.0);
  auto frames = random_frames(arch, 1, 9);
  Rollout r = rollout(arch, p, z, Mode::closed, frames, 40, true);
  for (const MapGrid& o : r.outputs)
    for (double v : o.v) CHECK(std::abs(v) <= 1.7159);
  for (const NetworkState& s : r.trace)
    for (const LayerState& l : s.layers) {
      for (const MapGrid& g : l.fm_act)
        for (double v : g.v) CHECK(std::abs(v) <= 1.7159);
      for (const MapGrid& g : l.cm_act)
        for (double v : g.v) CHECK(std::abs(v) <= 1.7159);
    }
}

TEST_CASE("a huge time constant freezes its level") {
  ArchitectureSpec arch = micro_arch_2();
  arch.layers[1].tau = 1e9;
  NetworkParams p = init_params(arch, 21);
  IntentionState z = random_intention(arch, 23);
  auto frames = random_frames(arch, 2, 25);
  Rollout r = rollout(arch, p, z, Mode::open, frames, 1, true);
  const LayerState& before = r.trace[0].layer(2);
  const LayerState& after = r.trace[1].layer(2);
  for (size_t q = 0; q < before.fm_in.size(); ++q)
    for (int i = 0; i < before.fm_in[q].cells(); ++i)
      CHECK(std::abs(after.fm_in[q].v[i] - before.fm_in[q].v[i]) < 1e-6);
  // the fast level still moves
  const LayerState& l1a = r.trace[0].layer(1);
  const LayerState& l1b = r.trace[1].layer(1);
  double moved = 0.0;
  for (size_t q = 0; q < l1a.fm_in.size(); ++q)
    for (int i = 0; i < l1a.fm_in[q].cells(); ++i)
      moved += std::abs(l1b.fm_in[q].v[i] - l1a.fm_in[q].v[i]);
  CHECK(moved > 1e-3);
}

TEST_CASE("rollout modes and edge lengths") {
  ArchitectureSpec arch = micro_arch_2();
  NetworkParams p = init_params(arch, 31);
  IntentionState z = random_intention(arch, 33);
  auto frames = random_frames(arch, 5, 35);

  Rollout open = rollout(arch, p, z, Mode::open, frames, 4, false);
  Rollout closed = rollout(arch, p, z, Mode::closed, frames, 4, false);
  REQUIRE(open.outputs.size() == 4);
  REQUIRE(closed.outputs.size() == 4);
  // step 1 feeds frames[0] in both modes
  check_close(open.outputs[0], closed.outputs[0], 0.0);
  // afterwards closed mode feeds its own output back, so they diverge
  double diff = 0.0;
  for (int i = 0; i < open.outputs[1].cells(); ++i)
    diff += std::abs(open.outputs[1].v[i] - closed.outputs[1].v[i]);
  CHECK(diff > 1e-9);

  Rollout none = rollout(arch, p, z, Mode::closed, frames, 0, true);
  CHECK(none.outputs.empty());
  CHECK(none.trace.size() == 1);

  CHECK_THROWS_AS(rollout(arch, p, z, Mode::open, frames, 6, false), ConfigError);
  // closed mode needs only the seed frame
  Rollout longrun = rollout(arch, p, z, Mode::closed, {frames[0]}, 9, false);
  CHECK(longrun.outputs.size() == 9);
}

TEST_CASE("non-finite states raise a numeric error") {
  ArchitectureSpec arch = micro_arch_scalar();
  NetworkParams p = zero_params(arch);
  p.layers[0].b_fm[0] = 1e308;
  p.layers[0].k_cf[0][0].v[0] = 1e308;
  IntentionState z = zero_intention(arch);
  z.cm[0][0].v[0] = 1.0;
  MapGrid x(1, 1, 0.0);
  CHECK_THROWS_AS(rollout(arch, p, z, Mode::open, {x, x}, 2, false), NumericError);
}

TEST_CASE("identical seeds give identical networks and rollouts") {
  ArchitectureSpec arch = micro_arch_2();
  NetworkParams a = init_params(arch, 77);
  NetworkParams b = init_params(arch, 77);
  CHECK(params_max_abs_diff(a, b) == 0.0);
  NetworkParams c = init_params(arch, 78);
  CHECK(params_max_abs_diff(a, c) > 0.0);

  IntentionState z = random_intention(arch, 79);
  auto frames = random_frames(arch, 4, 81);
  Rollout r1 = rollout(arch, a, z, Mode::closed, frames, 3, false);
  Rollout r2 = rollout(arch, a, z, Mode::closed, frames, 3, false);
  for (size_t t = 0; t < r1.outputs.size(); ++t)
    CHECK(r1.outputs[t].v == r2.outputs[t].v);
}

TEST_CASE("state and intention views round trip") {
  ArchitectureSpec arch = micro_arch_2();
  IntentionState z = random_intention(arch, 91);
  NetworkState s = state_from_intention(arch, z);
  // activations are the squashed internal states
  for (int l = 0; l < arch.num_layers(); ++l)
    for (size_t q = 0; q < z.fm[l].size(); ++q)
      for (int i = 0; i < z.fm[l][q].cells(); ++i)
        CHECK(s.layers[l].fm_act[q].v[i] ==
              doctest::Approx(ref_sigma(z.fm[l][q].v[i])).epsilon(1e-14));
  IntentionState back = intention_from_state(s);
  for (int l = 0; l < arch.num_layers(); ++l) {
    for (size_t q = 0; q < z.fm[l].size(); ++q) CHECK(back.fm[l][q].v == z.fm[l][q].v);
    for (size_t m = 0; m < z.cm[l].size(); ++m) CHECK(back.cm[l][m].v == z.cm[l][m].v);
  }
}

TEST_CASE("mean squared error helpers") {
  MapGrid a(2, 2, 1.0), b(2, 2, 1.0);
  CHECK(mse(a, b) == 0.0);
  b.v[0] = 3.0;  // one cell off by 2
  CHECK(mse(a, b) == doctest::Approx(1.0));
  MapGrid c(2, 2, 0.0), d(2, 2, 2.0);
  // mean over every cell of every pair: (4 + 4*4)/8
  CHECK(mse_frames({a, c}, {b, d}) == doctest::Approx((4.0 + 16.0) / 8.0));
}
