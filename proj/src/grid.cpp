// grid.cpp

#include "pmstrnn/grid.hpp"

#include <algorithm>
#include <cmath>

#include "pmstrnn/errors.hpp"

namespace pmstrnn {

namespace {
constexpr double kTanhGain = 1.7159;
constexpr double kTanhSlope = 2.0 / 3.0;
}  // namespace

MapGrid::MapGrid(int h_, int w_, double fill_) : h(h_), w(w_) {
  if (h_ <= 0 || w_ <= 0) throw ConfigError("MapGrid dimensions must be positive");
  v.assign(static_cast<size_t>(h_) * w_, fill_);
}

void MapGrid::fill(double x) { std::fill(v.begin(), v.end(), x); }

ConvOffsets conv_offsets(int in_h, int in_w, int kh, int kw, int out_h, int out_w) {
  // total play between the padded input and the kernel sweep; integer division
  // truncates toward zero, which puts the odd row/col at the bottom/right for
  // padding and cropping alike
  const int ph = out_h + kh - 1 - in_h;
  const int pw = out_w + kw - 1 - in_w;
  return {ph / 2, pw / 2};
}

void convolve_add(MapGrid& acc, const MapGrid& in, const Kernel& k) {
  const auto [pt, pl] = conv_offsets(in.h, in.w, k.h, k.w, acc.h, acc.w);
  for (int i = 0; i < acc.h; ++i) {
    const int a0 = std::max(0, pt - i);
    const int a1 = std::min(k.h, in.h + pt - i);
    double* out_row = &acc.v[static_cast<size_t>(i) * acc.w];
    for (int a = a0; a < a1; ++a) {
      const int r = i + a - pt;
      const double* in_row = &in.v[static_cast<size_t>(r) * in.w];
      const double* k_row = &k.v[static_cast<size_t>(a) * k.w];
      for (int j = 0; j < acc.w; ++j) {
        const int b0 = std::max(0, pl - j);
        const int b1 = std::min(k.w, in.w + pl - j);
        const double* ip = in_row + (j - pl);
        double s = 0.0;
        for (int b = b0; b < b1; ++b) s += ip[b] * k_row[b];
        out_row[j] += s;
      }
    }
  }
}

MapGrid convolve(const MapGrid& in, const Kernel& k, int out_h, int out_w) {
  MapGrid out(out_h, out_w);
  convolve_add(out, in, k);
  return out;
}

void conv_input_grad_add(MapGrid& gin, const MapGrid& gout, const Kernel& k) {
  const auto [pt, pl] = conv_offsets(gin.h, gin.w, k.h, k.w, gout.h, gout.w);
  for (int r = 0; r < gin.h; ++r) {
    const int a0 = std::max(0, r + pt - gout.h + 1);
    const int a1 = std::min(k.h, r + pt + 1);
    double* gin_row = &gin.v[static_cast<size_t>(r) * gin.w];
    for (int a = a0; a < a1; ++a) {
      const int i = r - a + pt;
      const double* go_row = &gout.v[static_cast<size_t>(i) * gout.w];
      const double* k_row = &k.v[static_cast<size_t>(a) * k.w];
      for (int c = 0; c < gin.w; ++c) {
        const int b0 = std::max(0, c + pl - gout.w + 1);
        const int b1 = std::min(k.w, c + pl + 1);
        double s = 0.0;
        for (int b = b0; b < b1; ++b) s += go_row[c - b + pl] * k_row[b];
        gin_row[c] += s;
      }
    }
  }
}

void conv_kernel_grad_add(Kernel& gk, const MapGrid& gout, const MapGrid& in) {
  const auto [pt, pl] = conv_offsets(in.h, in.w, gk.h, gk.w, gout.h, gout.w);
  for (int a = 0; a < gk.h; ++a) {
    const int i0 = std::max(0, pt - a);
    const int i1 = std::min(gout.h, in.h + pt - a);
    double* gk_row = &gk.v[static_cast<size_t>(a) * gk.w];
    for (int b = 0; b < gk.w; ++b) {
      double s = 0.0;
      for (int i = i0; i < i1; ++i) {
        const int j0 = std::max(0, pl - b);
        const int j1 = std::min(gout.w, in.w + pl - b);
        const double* go_row = &gout.v[static_cast<size_t>(i) * gout.w];
        const double* in_row = &in.v[static_cast<size_t>(i + a - pt) * in.w] + (b - pl);
        for (int j = j0; j < j1; ++j) s += go_row[j] * in_row[j];
      }
      gk_row[b] += s;
    }
  }
}

void mul_add(MapGrid& acc, const MapGrid& a, const MapGrid& b) {
  if (!acc.same_shape(a) || !acc.same_shape(b))
    throw ConfigError("elementwise product shape mismatch");
  const size_t n = acc.v.size();
  for (size_t i = 0; i < n; ++i) acc.v[i] += a.v[i] * b.v[i];
}

MapGrid elementwise_mul(const MapGrid& a, const MapGrid& b) {
  MapGrid out(a.h, a.w);
  mul_add(out, a, b);
  return out;
}

void add_scaled(MapGrid& acc, const MapGrid& a, double s) {
  if (!acc.same_shape(a)) throw ConfigError("add_scaled shape mismatch");
  const size_t n = acc.v.size();
  for (size_t i = 0; i < n; ++i) acc.v[i] += s * a.v[i];
}

double grid_sum(const MapGrid& a) {
  double s = 0.0;
  for (double x : a.v) s += x;
  return s;
}

double max_abs(const MapGrid& a) {
  double m = 0.0;
  for (double x : a.v) m = std::max(m, std::fabs(x));
  return m;
}

bool all_finite(const MapGrid& a) {
  for (double x : a.v)
    if (!std::isfinite(x)) return false;
  return true;
}

double scaled_tanh(double x) { return kTanhGain * std::tanh(kTanhSlope * x); }

double scaled_tanh_prime(double x) {
  const double t = std::tanh(kTanhSlope * x);
  return kTanhGain * kTanhSlope * (1.0 - t * t);
}

void scaled_tanh_map(const MapGrid& in, MapGrid& out) {
  out.h = in.h;
  out.w = in.w;
  out.v.resize(in.v.size());
  for (size_t i = 0; i < in.v.size(); ++i) out.v[i] = scaled_tanh(in.v[i]);
}

}  // namespace pmstrnn
