// grid.hpp
// dense 2-D double grids plus the stride-1 correlation used on every map
// pathway. The correlation targets an explicit output shape: the input is
// virtually zero-padded (or cropped, when the total pad comes out negative)
// so the kernel sweep yields exactly out_h x out_w values. The asymmetric
// extra row/column always lands at the bottom/right.

#pragma once

#include <vector>

namespace pmstrnn {

struct MapGrid {
  int h = 0, w = 0;
  std::vector<double> v;  // row major

  MapGrid() = default;
  MapGrid(int h_, int w_, double fill = 0.0);

  double& at(int r, int c) { return v[static_cast<size_t>(r) * w + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * w + c]; }
  int cells() const { return h * w; }
  bool same_shape(const MapGrid& o) const { return h == o.h && w == o.w; }
  void fill(double x);
};

// kernels share the grid representation; taps are indexed [row][col]
using Kernel = MapGrid;

struct ConvOffsets {
  int top = 0, left = 0;
};

// pad offsets implied by an (input, kernel, output) shape triple; negative
// values mean the sweep starts inside the input (crop)
ConvOffsets conv_offsets(int in_h, int in_w, int kh, int kw, int out_h, int out_w);

// acc[i][j] += sum_ab in[i+a-top][j+b-left] * k[a][b], zeros outside the input
void convolve_add(MapGrid& acc, const MapGrid& in, const Kernel& k);
MapGrid convolve(const MapGrid& in, const Kernel& k, int out_h, int out_w);

// adjoint of convolve with respect to the input
void conv_input_grad_add(MapGrid& gin, const MapGrid& gout, const Kernel& k);

// adjoint of convolve with respect to the kernel taps
void conv_kernel_grad_add(Kernel& gk, const MapGrid& gout, const MapGrid& in);

// acc += a .* b (shape-checked)
void mul_add(MapGrid& acc, const MapGrid& a, const MapGrid& b);
MapGrid elementwise_mul(const MapGrid& a, const MapGrid& b);

void add_scaled(MapGrid& acc, const MapGrid& a, double s);  // acc += s * a
double grid_sum(const MapGrid& a);
double max_abs(const MapGrid& a);
bool all_finite(const MapGrid& a);

// activation used on every map and on the output frame:
// 1.7159 * tanh(2x/3), so f(1) is almost exactly 1
double scaled_tanh(double x);
double scaled_tanh_prime(double x);
void scaled_tanh_map(const MapGrid& in, MapGrid& out);

}  // namespace pmstrnn
