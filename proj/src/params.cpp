// params.cpp

#include "pmstrnn/params.hpp"

#include <cmath>

#include "pmstrnn/errors.hpp"
#include "pmstrnn/rng.hpp"

namespace pmstrnn {

NetworkParams zero_params(const ArchitectureSpec& arch) {
  arch.validate();
  const int n = arch.num_layers();
  NetworkParams p;
  p.layers.resize(n);
  for (int l = 1; l <= n; ++l) {
    const LayerSpec& spec = arch.layer(l);
    LayerParams& lp = p.layers[l - 1];
    if (l < n) {
      const KernelShape ks = k_ff_shape(arch, l);
      lp.k_ff.assign(spec.num_fm,
                     std::vector<Kernel>(arch.layer(l + 1).num_fm, Kernel(ks.h, ks.w)));
    }
    if (spec.num_cm > 0) {
      const KernelShape ks = k_cf_shape(arch, l);
      lp.k_cf.assign(spec.num_fm, std::vector<Kernel>(spec.num_cm, Kernel(ks.h, ks.w)));
    }
    if (l == 1) {
      const KernelShape ks = k_if_shape(arch);
      lp.k_if.assign(spec.num_fm, Kernel(ks.h, ks.w));
    }
    if (spec.num_cm > 0) {
      const KernelShape ks = k_fc_shape(arch, l);
      const int sources = (l == 1) ? 1 : arch.layer(l - 1).num_fm;
      lp.k_fc.assign(spec.num_cm, std::vector<Kernel>(sources, Kernel(ks.h, ks.w)));
      lp.w_cc.assign(spec.num_cm,
                     std::vector<MapGrid>(spec.num_cm, MapGrid(spec.cm_h, spec.cm_w)));
      if (l < n) {
        const LayerSpec& up = arch.layer(l + 1);
        lp.w_fc.assign(spec.num_cm,
                       std::vector<MapGrid>(up.num_fm, MapGrid(up.fm_h, up.fm_w)));
      }
      lp.b_cm.assign(spec.num_cm, 0.0);
    }
    lp.b_fm.assign(spec.num_fm, 0.0);
  }
  const KernelShape ko = k_fo_shape(arch);
  p.k_fo.assign(arch.layer(1).num_fm, Kernel(ko.h, ko.w));
  p.b_o = 0.0;
  return p;
}

namespace {

void fill_uniform(std::vector<Kernel>& ks, double s, Rng& rng) {
  for (Kernel& k : ks)
    for (double& x : k.v) x = rng.uniform(-s, s);
}

}  // namespace

NetworkParams init_params(const ArchitectureSpec& arch, std::uint64_t seed) {
  NetworkParams p = zero_params(arch);
  Rng rng(mix_seed(seed, "params"));
  const int n = arch.num_layers();
  for (int l = 1; l <= n; ++l) {
    const LayerSpec& spec = arch.layer(l);
    LayerParams& lp = p.layers[l - 1];
    if (!lp.k_ff.empty()) {
      const KernelShape ks = k_ff_shape(arch, l);
      const double s = 1.0 / std::sqrt(double(arch.layer(l + 1).num_fm) * ks.h * ks.w);
      for (auto& row : lp.k_ff) fill_uniform(row, s, rng);
    }
    if (!lp.k_cf.empty()) {
      const KernelShape ks = k_cf_shape(arch, l);
      const double s = 1.0 / std::sqrt(double(spec.num_cm) * ks.h * ks.w);
      for (auto& row : lp.k_cf) fill_uniform(row, s, rng);
    }
    if (!lp.k_if.empty()) {
      const KernelShape ks = k_if_shape(arch);
      const double s = 1.0 / std::sqrt(double(ks.h) * ks.w);
      fill_uniform(lp.k_if, s, rng);
    }
    if (!lp.k_fc.empty()) {
      const KernelShape ks = k_fc_shape(arch, l);
      const int sources = (l == 1) ? 1 : arch.layer(l - 1).num_fm;
      const double s = 1.0 / std::sqrt(double(sources) * ks.h * ks.w);
      for (auto& row : lp.k_fc) fill_uniform(row, s, rng);
    }
    if (!lp.w_cc.empty()) {
      const double s = 1.0 / std::sqrt(double(spec.num_cm));
      for (auto& row : lp.w_cc) fill_uniform(row, s, rng);
    }
    if (!lp.w_fc.empty()) {
      const double s = 1.0 / std::sqrt(double(arch.layer(l + 1).num_fm));
      for (auto& row : lp.w_fc) fill_uniform(row, s, rng);
    }
    // biases stay zero
  }
  const KernelShape ko = k_fo_shape(arch);
  const double s = 1.0 / std::sqrt(double(arch.layer(1).num_fm) * ko.h * ko.w);
  fill_uniform(p.k_fo, s, rng);
  return p;
}

std::vector<TensorRef> tensor_refs(NetworkParams& p) {
  std::vector<TensorRef> refs;
  for (size_t li = 0; li < p.layers.size(); ++li) {
    LayerParams& lp = p.layers[li];
    const std::string prefix = "L" + std::to_string(li + 1) + ".";
    auto add_rows = [&](const char* name, std::vector<std::vector<Kernel>>& rows) {
      for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j)
          refs.push_back({prefix + name + "[" + std::to_string(i) + "][" +
                              std::to_string(j) + "]",
                          &rows[i][j].v});
    };
    add_rows("k_ff", lp.k_ff);
    add_rows("k_cf", lp.k_cf);
    for (size_t i = 0; i < lp.k_if.size(); ++i)
      refs.push_back({prefix + "k_if[" + std::to_string(i) + "]", &lp.k_if[i].v});
    add_rows("k_fc", lp.k_fc);
    add_rows("w_cc", lp.w_cc);
    add_rows("w_fc", lp.w_fc);
    refs.push_back({prefix + "b_fm", &lp.b_fm});
    if (!lp.b_cm.empty()) refs.push_back({prefix + "b_cm", &lp.b_cm});
  }
  for (size_t i = 0; i < p.k_fo.size(); ++i)
    refs.push_back({"k_fo[" + std::to_string(i) + "]", &p.k_fo[i].v});
  return refs;  // b_o handled separately by callers that need every scalar
}

void params_add_scaled(NetworkParams& acc, const NetworkParams& g, double s) {
  auto ra = tensor_refs(acc);
  auto rg = tensor_refs(const_cast<NetworkParams&>(g));
  for (size_t i = 0; i < ra.size(); ++i) {
    std::vector<double>& a = *ra[i].data;
    const std::vector<double>& b = *rg[i].data;
    for (size_t j = 0; j < a.size(); ++j) a[j] += s * b[j];
  }
  acc.b_o += s * g.b_o;
}

void params_scale(NetworkParams& p, double s) {
  for (auto& r : tensor_refs(p))
    for (double& x : *r.data) x *= s;
  p.b_o *= s;
}

bool params_all_finite(const NetworkParams& p) {
  auto refs = tensor_refs(const_cast<NetworkParams&>(p));
  for (auto& r : refs)
    for (double x : *r.data)
      if (!std::isfinite(x)) return false;
  return std::isfinite(p.b_o);
}

double params_max_abs_diff(const NetworkParams& a, const NetworkParams& b) {
  auto ra = tensor_refs(const_cast<NetworkParams&>(a));
  auto rb = tensor_refs(const_cast<NetworkParams&>(b));
  double m = std::fabs(a.b_o - b.b_o);
  for (size_t i = 0; i < ra.size(); ++i) {
    const auto& x = *ra[i].data;
    const auto& y = *rb[i].data;
    for (size_t j = 0; j < x.size(); ++j) m = std::max(m, std::fabs(x[j] - y[j]));
  }
  return m;
}

IntentionState zero_intention(const ArchitectureSpec& arch) {
  IntentionState s;
  const int n = arch.num_layers();
  s.fm.resize(n);
  s.cm.resize(n);
  for (int l = 1; l <= n; ++l) {
    const LayerSpec& spec = arch.layer(l);
    s.fm[l - 1].assign(spec.num_fm, MapGrid(spec.fm_h, spec.fm_w));
    if (spec.num_cm > 0) s.cm[l - 1].assign(spec.num_cm, MapGrid(spec.cm_h, spec.cm_w));
  }
  return s;
}

void intention_add_scaled(IntentionState& acc, const IntentionState& g, double s) {
  for (size_t l = 0; l < acc.fm.size(); ++l) {
    for (size_t p = 0; p < acc.fm[l].size(); ++p) add_scaled(acc.fm[l][p], g.fm[l][p], s);
    for (size_t m = 0; m < acc.cm[l].size(); ++m) add_scaled(acc.cm[l][m], g.cm[l][m], s);
  }
}

void intention_scale(IntentionState& s, double f) {
  for (auto& maps : s.fm)
    for (auto& g : maps)
      for (double& x : g.v) x *= f;
  for (auto& maps : s.cm)
    for (auto& g : maps)
      for (double& x : g.v) x *= f;
}

bool intention_all_finite(const IntentionState& s) {
  for (const auto& maps : s.fm)
    for (const auto& g : maps)
      if (!all_finite(g)) return false;
  for (const auto& maps : s.cm)
    for (const auto& g : maps)
      if (!all_finite(g)) return false;
  return true;
}

std::vector<TensorRef> intention_refs(IntentionState& s) {
  std::vector<TensorRef> refs;
  for (size_t l = 0; l < s.fm.size(); ++l) {
    for (size_t p = 0; p < s.fm[l].size(); ++p)
      refs.push_back({"L" + std::to_string(l + 1) + ".fm0[" + std::to_string(p) + "]",
                      &s.fm[l][p].v});
    for (size_t m = 0; m < s.cm[l].size(); ++m)
      refs.push_back({"L" + std::to_string(l + 1) + ".cm0[" + std::to_string(m) + "]",
                      &s.cm[l][m].v});
  }
  return refs;
}

}  // namespace pmstrnn
