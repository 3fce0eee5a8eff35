#include "pmstrnn/gradcheck.hpp"

#include <cmath>
#include <map>

#include "pmstrnn/bptt.hpp"
#include "pmstrnn/errors.hpp"
#include "pmstrnn/network.hpp"
#include "pmstrnn/rng.hpp"

namespace pmstrnn {

namespace {

double forward_loss(const ArchitectureSpec& arch, const NetworkParams& params,
                    const IntentionState& intention, Mode mode,
                    const std::vector<MapGrid>& frames) {
  int steps = static_cast<int>(frames.size()) - 1;
  Rollout r = rollout(arch, params, intention, mode, frames, steps);
  double acc = 0.0;
  for (int t = 0; t < steps; ++t) acc += mse(r.outputs[t], frames[t + 1]);
  return acc / steps;
}

std::string class_of(const std::string& tensor_name, bool intention) {
  std::string base = tensor_name.substr(0, tensor_name.find('['));
  return intention ? "intention." + base : base;
}

struct ClassAcc {
  std::map<std::string, double> worst;
  void update(const std::string& cls, double rel) {
    auto it = worst.find(cls);
    if (it == worst.end())
      worst[cls] = rel;
    else if (rel > it->second)
      it->second = rel;
  }
};

double rel_err(double analytic, double numeric) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

ArchitectureSpec micro_architecture(std::uint64_t seed, int variant) {
  Rng rng(mix_seed(seed, "microarch", static_cast<std::uint64_t>(variant)));
  auto pick = [&](std::initializer_list<int> opts) {
    std::vector<int> v(opts);
    return v[static_cast<size_t>(rng.next() % v.size())];
  };

  ArchitectureSpec arch;
  arch.input_h = 4;
  arch.input_w = 4;

  LayerSpec l2;
  l2.level = 2;
  l2.num_fm = pick({1, 2});
  l2.fm_h = l2.fm_w = pick({2, 3});
  l2.num_cm = pick({0, 1, 2});
  l2.cm_h = l2.cm_w = 2;

  LayerSpec l1;
  l1.level = 1;
  l1.num_fm = pick({1, 2});
  l1.fm_h = l1.fm_w = 3;
  l1.num_cm = pick({0, 1, 2});
  // upper-FM weights are elementwise, so level-1 CMs share level-2's FM shape
  l1.cm_h = l2.fm_h;
  l1.cm_w = l2.fm_w;

  double tau1 = 1.0 + rng.uniform(0.0, 1.5);
  double tau2 = tau1 + rng.uniform(0.0, 2.0);
  l1.tau = tau1;
  l2.tau = tau2;

  arch.layers = {l1, l2};
  arch.validate();
  return arch;
}

GradCheckReport gradcheck(const ArchitectureSpec* arch_in, std::uint64_t seed,
                          int trials, int frames, double fd_h) {
  if (trials < 1) throw ConfigError("gradcheck needs at least one trial");
  if (frames < 2) throw ConfigError("gradcheck needs at least two frames");

  GradCheckReport report;
  report.trials = trials;
  ClassAcc acc;

  for (int trial = 0; trial < trials; ++trial) {
    ArchitectureSpec arch =
        arch_in ? *arch_in : micro_architecture(seed, trial);
    NetworkParams params = init_params(arch, mix_seed(seed, "gc-params", trial));
    Rng rng(mix_seed(seed, "gc-data", trial));

    IntentionState intention = zero_intention(arch);
    for (auto& ref : intention_refs(intention))
      for (double& v : *ref.data) v = rng.uniform(-0.5, 0.5);

    std::vector<MapGrid> seq;
    for (int t = 0; t < frames; ++t) {
      MapGrid f(arch.input_h, arch.input_w);
      for (double& v : f.v) v = rng.uniform(-1.0, 1.0);
      seq.push_back(std::move(f));
    }

    for (Mode mode : {Mode::open, Mode::closed}) {
      BpttResult res = bptt(arch, params, intention, mode, seq);

      auto fd_probe = [&](double* slot, double analytic, const std::string& cls) {
        double keep = *slot;
        *slot = keep + fd_h;
        double up = forward_loss(arch, params, intention, mode, seq);
        *slot = keep - fd_h;
        double dn = forward_loss(arch, params, intention, mode, seq);
        *slot = keep;
        double numeric = (up - dn) / (2.0 * fd_h);
        double rel = rel_err(analytic, numeric);
        acc.update(cls, rel);
        if (rel > report.max_rel_err) {
          report.max_rel_err = rel;
          report.worst = cls;
        }
      };

      auto prefs = tensor_refs(params);
      auto grefs = tensor_refs(res.param_grads);
      for (size_t i = 0; i < prefs.size(); ++i) {
        std::string cls = class_of(prefs[i].name, false);
        for (size_t j = 0; j < prefs[i].data->size(); ++j)
          fd_probe(&(*prefs[i].data)[j], (*grefs[i].data)[j], cls);
      }
      fd_probe(&params.b_o, res.param_grads.b_o, "b_o");

      auto irefs = intention_refs(intention);
      auto igrefs = intention_refs(res.intention_grads);
      for (size_t i = 0; i < irefs.size(); ++i) {
        std::string cls = class_of(irefs[i].name, true);
        for (size_t j = 0; j < irefs[i].data->size(); ++j)
          fd_probe(&(*irefs[i].data)[j], (*igrefs[i].data)[j], cls);
      }
    }
  }

  for (const auto& kv : acc.worst) report.classes.push_back({kv.first, kv.second});
  return report;
}

}  // namespace pmstrnn
