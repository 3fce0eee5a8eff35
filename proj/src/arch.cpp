// arch.cpp

#include "pmstrnn/arch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmstrnn/errors.hpp"

namespace pmstrnn {

int fitted_kernel(int in, int out) {
  if (in != out) return std::abs(in - out) + 1;
  return std::min(5, 2 * in - 1);
}

namespace {
KernelShape fit(int in_h, int in_w, int out_h, int out_w, int override_size) {
  if (override_size > 0) return {override_size, override_size};
  return {fitted_kernel(in_h, out_h), fitted_kernel(in_w, out_w)};
}
}  // namespace

KernelShape k_ff_shape(const ArchitectureSpec& a, int level) {
  const LayerSpec& lo = a.layer(level);
  const LayerSpec& hi = a.layer(level + 1);
  return fit(hi.fm_h, hi.fm_w, lo.fm_h, lo.fm_w, lo.k_ff);
}

KernelShape k_cf_shape(const ArchitectureSpec& a, int level) {
  const LayerSpec& l = a.layer(level);
  return fit(l.cm_h, l.cm_w, l.fm_h, l.fm_w, l.k_cf);
}

KernelShape k_if_shape(const ArchitectureSpec& a) {
  const LayerSpec& l = a.layer(1);
  return fit(a.input_h, a.input_w, l.fm_h, l.fm_w, l.k_if);
}

KernelShape k_fc_shape(const ArchitectureSpec& a, int level) {
  const LayerSpec& l = a.layer(level);
  if (level == 1) return fit(a.input_h, a.input_w, l.cm_h, l.cm_w, l.k_fc);
  const LayerSpec& below = a.layer(level - 1);
  return fit(below.fm_h, below.fm_w, l.cm_h, l.cm_w, l.k_fc);
}

KernelShape k_fo_shape(const ArchitectureSpec& a) {
  const LayerSpec& l = a.layer(1);
  return fit(l.fm_h, l.fm_w, a.input_h, a.input_w, a.k_fo);
}

void ArchitectureSpec::validate() const {
  if (layers.empty()) throw ConfigError("architecture needs at least one layer");
  if (input_h < 1 || input_w < 1) throw ConfigError("input size must be positive");
  const int n = num_layers();
  for (int i = 0; i < n; ++i) {
    const LayerSpec& l = layers[i];
    const std::string where = "layer " + std::to_string(i + 1) + ": ";
    if (l.level != i + 1) throw ConfigError(where + "levels must be consecutive from 1");
    if (l.tau < 1.0) throw ConfigError(where + "tau must be >= 1");
    if (i > 0 && l.tau < layers[i - 1].tau)
      throw ConfigError(where + "tau must be non-decreasing with level");
    if (l.num_fm < 1) throw ConfigError(where + "needs at least one FM");
    if (l.fm_h < 1 || l.fm_w < 1) throw ConfigError(where + "FM size must be positive");
    if (l.num_cm < 0) throw ConfigError(where + "negative CM count");
    if (l.num_cm > 0 && (l.cm_h < 1 || l.cm_w < 1))
      throw ConfigError(where + "CM size must be positive");
    // the upper-FM elementwise weights force CM shape == upper FM shape
    if (i + 1 < n && l.num_cm > 0) {
      const LayerSpec& up = layers[i + 1];
      if (l.cm_h != up.fm_h || l.cm_w != up.fm_w)
        throw ConfigError(where + "CM size must equal the FM size of the layer above " +
                          "(elementwise upper-FM weights)");
    }
    for (int k : {l.k_ff, l.k_cf, l.k_if, l.k_fc})
      if (k < 0) throw ConfigError(where + "negative kernel size");
  }
  if (k_fo < 0) throw ConfigError("negative output kernel size");
}

ArchitectureSpec default_architecture() {
  ArchitectureSpec a;
  a.input_h = 36;
  a.input_w = 36;
  a.layers = {
      {1, 2.0, 8, 16, 16, 2, 8, 8},
      {2, 4.0, 8, 8, 8, 2, 4, 4},
      {3, 8.0, 6, 4, 4, 2, 2, 2},
      {4, 16.0, 4, 2, 2, 2, 2, 2},
  };
  return a;
}

}  // namespace pmstrnn
