// arch.hpp
// network layout: per-level map counts/sizes/time constants plus the kernel
// size of each convolutional pathway. Level 1 is nearest the frame. FMs carry
// the top-down stream (upper FMs + same-level CMs + the frame at level 1);
// CMs carry the bottom-up stream (same-level CMs elementwise, upper FMs
// elementwise, lower FMs by kernel; at level 1 the "lower FM" is the frame).

#pragma once

#include <vector>

namespace pmstrnn {

struct LayerSpec {
  int level = 0;  // 1-based, consecutive
  double tau = 1.0;
  int num_fm = 0, fm_h = 0, fm_w = 0;
  int num_cm = 0, cm_h = 0, cm_w = 0;
  // kernel size overrides per incoming pathway, 0 = fit to the shape pair
  int k_ff = 0;  // upper FM -> FM
  int k_cf = 0;  // CM -> FM
  int k_if = 0;  // input frame -> FM, level 1 only
  int k_fc = 0;  // lower FM (frame at level 1) -> CM
};

struct KernelShape {
  int h = 0, w = 0;
};

struct ArchitectureSpec {
  int input_h = 36, input_w = 36;
  int k_fo = 0;  // level-1 FM -> output frame, 0 = fit
  std::vector<LayerSpec> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }
  const LayerSpec& layer(int level) const { return layers[level - 1]; }

  // throws ConfigError on inconsistent shapes or ordering
  void validate() const;
};

// default kernel size for one dimension of a pathway: |in-out|+1 when the
// sizes differ (full coverage without waste either way), a small same-pad
// kernel otherwise
int fitted_kernel(int in, int out);

KernelShape k_ff_shape(const ArchitectureSpec& a, int level);  // into FM of level
KernelShape k_cf_shape(const ArchitectureSpec& a, int level);
KernelShape k_if_shape(const ArchitectureSpec& a);
KernelShape k_fc_shape(const ArchitectureSpec& a, int level);  // into CM of level
KernelShape k_fo_shape(const ArchitectureSpec& a);

// four levels, 36x36 frames, taus 2/4/8/16
ArchitectureSpec default_architecture();

}  // namespace pmstrnn
