#include "pmstrnn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pmstrnn/errors.hpp"

namespace pmstrnn {

namespace {

std::vector<double> flatten(const MapGrid& g) { return g.v; }

ActivationTrace map_trace(const std::vector<NetworkState>& states, int level,
                          bool fm, int index) {
  if (states.empty()) throw ConfigError("empty state trace");
  ActivationTrace t;
  for (const NetworkState& s : states) {
    const auto& maps = fm ? s.layer(level).fm_act : s.layer(level).cm_act;
    if (index < 0 || index >= static_cast<int>(maps.size()))
      throw ConfigError("map index out of range for trace");
    if (t.rows.empty()) {
      t.h = maps[index].h;
      t.w = maps[index].w;
    }
    t.rows.push_back(flatten(maps[index]));
  }
  return t;
}

ActivationTrace layer_trace(const std::vector<NetworkState>& states, int level,
                            bool fm) {
  if (states.empty()) throw ConfigError("empty state trace");
  ActivationTrace t;
  for (const NetworkState& s : states) {
    const auto& maps = fm ? s.layer(level).fm_act : s.layer(level).cm_act;
    std::vector<double> row;
    for (const MapGrid& g : maps) row.insert(row.end(), g.v.begin(), g.v.end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

// cyclic jacobi eigendecomposition of a symmetric matrix; a is destroyed.
// vecs ends up row-major with column j holding the j-th eigenvector.
void jacobi_eig(std::vector<double>& a, int d, std::vector<double>& vals,
                std::vector<double>& vecs) {
  vecs.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) vecs[static_cast<size_t>(i) * d + i] = 1.0;
  auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * d + j]; };
  auto V = [&](int i, int j) -> double& { return vecs[static_cast<size_t>(i) * d + j]; };

  double fro = 0.0;
  for (double x : a) fro += x * x;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) off += 2.0 * A(i, j) * A(i, j);
    if (off <= 1e-24 * (fro + 1e-300)) break;
    for (int p = 0; p < d - 1; ++p) {
      for (int q = p + 1; q < d; ++q) {
        double apq = A(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double theta = 0.5 * (A(q, q) - A(p, p)) / apq;
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        for (int i = 0; i < d; ++i) {
          double aip = A(i, p), aiq = A(i, q);
          A(i, p) = c * aip - s * aiq;
          A(i, q) = s * aip + c * aiq;
        }
        for (int j = 0; j < d; ++j) {
          double apj = A(p, j), aqj = A(q, j);
          A(p, j) = c * apj - s * aqj;
          A(q, j) = s * apj + c * aqj;
        }
        for (int i = 0; i < d; ++i) {
          double vip = V(i, p), viq = V(i, q);
          V(i, p) = c * vip - s * viq;
          V(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  vals.resize(d);
  for (int i = 0; i < d; ++i) vals[i] = A(i, i);
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void fix_sign(std::vector<double>& comp, std::vector<std::vector<double>>& projected,
              int col) {
  int arg = 0;
  for (size_t i = 1; i < comp.size(); ++i)
    if (std::abs(comp[i]) > std::abs(comp[arg])) arg = static_cast<int>(i);
  if (comp[arg] < 0.0) {
    for (double& x : comp) x = -x;
    for (auto& row : projected) row[col] = -row[col];
  }
}

}  // namespace

ActivationTrace fm_trace(const std::vector<NetworkState>& states, int level, int index) {
  return map_trace(states, level, true, index);
}

ActivationTrace cm_trace(const std::vector<NetworkState>& states, int level, int index) {
  return map_trace(states, level, false, index);
}

ActivationTrace layer_fm_trace(const std::vector<NetworkState>& states, int level) {
  return layer_trace(states, level, true);
}

ActivationTrace layer_cm_trace(const std::vector<NetworkState>& states, int level) {
  return layer_trace(states, level, false);
}

ActivationTrace concat_steps(const ActivationTrace& a, const ActivationTrace& b) {
  if (a.dim() != b.dim())
    throw ConfigError("cannot concatenate traces of different dimensionality");
  ActivationTrace t;
  t.h = (a.h == b.h && a.w == b.w) ? a.h : 0;
  t.w = (a.h == b.h && a.w == b.w) ? a.w : 0;
  t.rows = a.rows;
  t.rows.insert(t.rows.end(), b.rows.begin(), b.rows.end());
  return t;
}

std::array<ActivationTrace, 4> quadrant_split(const ActivationTrace& t) {
  if (t.h <= 0 || t.w <= 0)
    throw ConfigError("quadrant split needs a single-map trace with known shape");
  if (t.h % 2 != 0 || t.w % 2 != 0)
    throw ConfigError("quadrant split needs even map dimensions");
  int hh = t.h / 2, hw = t.w / 2;
  // row range, col range per quadrant: Q1 UR, Q2 UL, Q3 LL, Q4 LR
  const int r0[4] = {0, 0, hh, hh};
  const int c0[4] = {hw, 0, 0, hw};
  std::array<ActivationTrace, 4> out;
  for (int q = 0; q < 4; ++q) {
    out[q].h = hh;
    out[q].w = hw;
    for (const auto& row : t.rows) {
      std::vector<double> sub;
      sub.reserve(static_cast<size_t>(hh) * hw);
      for (int r = 0; r < hh; ++r)
        for (int c = 0; c < hw; ++c)
          sub.push_back(row[static_cast<size_t>(r0[q] + r) * t.w + (c0[q] + c)]);
      out[q].rows.push_back(std::move(sub));
    }
  }
  return out;
}

ActivationTrace quadrant_join(const std::array<ActivationTrace, 4>& q) {
  int hh = q[0].h, hw = q[0].w;
  size_t steps = q[0].steps();
  for (const auto& t : q)
    if (t.h != hh || t.w != hw || t.steps() != steps)
      throw ConfigError("quadrant traces do not fit together");
  const int r0[4] = {0, 0, hh, hh};
  const int c0[4] = {hw, 0, 0, hw};
  ActivationTrace out;
  out.h = 2 * hh;
  out.w = 2 * hw;
  for (size_t s = 0; s < steps; ++s) {
    std::vector<double> row(static_cast<size_t>(out.h) * out.w, 0.0);
    for (int k = 0; k < 4; ++k)
      for (int r = 0; r < hh; ++r)
        for (int c = 0; c < hw; ++c)
          row[static_cast<size_t>(r0[k] + r) * out.w + (c0[k] + c)] =
              q[k].rows[s][static_cast<size_t>(r) * hw + c];
    out.rows.push_back(std::move(row));
  }
  return out;
}

PcaResult pca(const ActivationTrace& trace, int k) {
  int n = static_cast<int>(trace.steps());
  int d = trace.dim();
  if (k < 1) throw ConfigError("pca needs at least one component");
  if (n < k) throw ConfigError("pca needs at least as many steps as components");
  if (k > d) throw ConfigError("pca components exceed trace dimensionality");

  PcaResult res;
  res.mean.assign(d, 0.0);
  for (const auto& row : trace.rows)
    for (int j = 0; j < d; ++j) res.mean[j] += row[j];
  for (double& m : res.mean) m /= n;

  std::vector<std::vector<double>> x(n, std::vector<double>(d));
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      x[i][j] = trace.rows[i][j] - res.mean[j];
      total += x[i][j] * x[i][j];
    }

  res.projected.assign(n, std::vector<double>(k, 0.0));
  if (total <= 1e-18 || n < 2) {
    res.degenerate = true;
    for (int c = 0; c < k; ++c) {
      std::vector<double> comp(d, 0.0);
      comp[c] = 1.0;
      res.components.push_back(std::move(comp));
      res.explained.push_back(0.0);
    }
    return res;
  }

  std::vector<double> vals, vecs;
  std::vector<std::pair<double, int>> order;
  std::vector<std::vector<double>> comps;

  if (d <= n) {
    std::vector<double> cov(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) cov[static_cast<size_t>(a) * d + b] += x[i][a] * x[i][b];
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) {
        double v = cov[static_cast<size_t>(a) * d + b] / (n - 1);
        cov[static_cast<size_t>(a) * d + b] = v;
        cov[static_cast<size_t>(b) * d + a] = v;
      }
    jacobi_eig(cov, d, vals, vecs);
    for (int j = 0; j < d; ++j) order.push_back({vals[j], j});
    std::sort(order.begin(), order.end(), [](auto& a, auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (int c = 0; c < k; ++c) {
      int j = order[c].second;
      std::vector<double> comp(d);
      for (int i = 0; i < d; ++i) comp[i] = vecs[static_cast<size_t>(i) * d + j];
      double nn = norm2(comp);
      for (double& v : comp) v /= nn;
      comps.push_back(std::move(comp));
      res.explained.push_back(std::max(0.0, order[c].first));
    }
  } else {
    // wide traces go through the gram matrix of the rows
    std::vector<double> gram(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += x[i][a] * x[j][a];
        gram[static_cast<size_t>(i) * n + j] = s / (n - 1);
        gram[static_cast<size_t>(j) * n + i] = s / (n - 1);
      }
    jacobi_eig(gram, n, vals, vecs);
    for (int j = 0; j < n; ++j) order.push_back({vals[j], j});
    std::sort(order.begin(), order.end(), [](auto& a, auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    int used = 0;
    for (int c = 0; c < k; ++c) {
      int j = order[c].second;
      std::vector<double> comp(d, 0.0);
      for (int i = 0; i < n; ++i) {
        double u = vecs[static_cast<size_t>(i) * n + j];
        for (int a = 0; a < d; ++a) comp[a] += u * x[i][a];
      }
      double nn = norm2(comp);
      if (nn > 1e-12) {
        for (double& v : comp) v /= nn;
        res.explained.push_back(std::max(0.0, order[c].first));
      } else {
        // rank exhausted: fill with a unit vector orthogonalized against the rest
        comp.assign(d, 0.0);
        comp[used % d] = 1.0;
        for (const auto& prev : comps) {
          double dot = std::inner_product(comp.begin(), comp.end(), prev.begin(), 0.0);
          for (int a = 0; a < d; ++a) comp[a] -= dot * prev[a];
        }
        double n2 = norm2(comp);
        if (n2 > 1e-12)
          for (double& v : comp) v /= n2;
        res.explained.push_back(0.0);
      }
      ++used;
      comps.push_back(std::move(comp));
    }
  }

  for (int i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c)
      res.projected[i][c] =
          std::inner_product(x[i].begin(), x[i].end(), comps[c].begin(), 0.0);
  for (int c = 0; c < k; ++c) fix_sign(comps[c], res.projected, c);
  res.components = std::move(comps);
  return res;
}

double cyclicity(const std::vector<std::vector<double>>& projected, int cycle_len) {
  int n = static_cast<int>(projected.size());
  if (cycle_len < 1) throw ConfigError("cycle length must be positive");
  if (n < 2 * cycle_len)
    throw ConfigError("trace too short for cyclicity: need two full cycles");
  int d = static_cast<int>(projected[0].size());

  std::vector<double> mean(d, 0.0);
  for (const auto& row : projected)
    for (int j = 0; j < d; ++j) mean[j] += row[j];
  for (double& m : mean) m /= n;

  // circular autocorrelation at lag cycle_len, summed over dimensions; a trace
  // that repeats every cycle_len steps scores 1, drift anti-correlates across
  // the wrap and clamps to 0
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    int k = (i + cycle_len) % n;
    for (int j = 0; j < d; ++j) {
      double c = projected[i][j] - mean[j];
      den += c * c;
      num += c * (projected[k][j] - mean[j]);
    }
  }
  if (den <= 0.0) return 0.0;
  double score = num / den;
  return score < 0.0 ? 0.0 : (score > 1.0 ? 1.0 : score);
}

double convergence(const std::vector<std::vector<double>>& projected) {
  int n = static_cast<int>(projected.size());
  if (n < 10) throw ConfigError("convergence ratio needs at least 10 steps");
  int nd = n - 1;
  auto disp = [&](int i) {
    double s = 0.0;
    for (size_t j = 0; j < projected[i].size(); ++j) {
      double dd = projected[i + 1][j] - projected[i][j];
      s += dd * dd;
    }
    return std::sqrt(s);
  };
  int q = n / 4;
  double first = 0.0, last = 0.0;
  for (int i = 0; i < q; ++i) first += disp(i);
  for (int i = nd - q; i < nd; ++i) last += disp(i);
  first /= q;
  last /= q;
  if (last == 0.0) return 0.0;
  if (first == 0.0) return std::numeric_limits<double>::infinity();
  return last / first;
}

double trajectory_distance(const std::vector<std::vector<double>>& a,
                           const std::vector<std::vector<double>>& b) {
  if (a.empty() || b.empty())
    throw ConfigError("trajectory distance needs non-empty trajectories");
  if (a[0].size() != b[0].size())
    throw ConfigError("trajectory dimensionality mismatch");
  auto one_way = [](const std::vector<std::vector<double>>& s,
                    const std::vector<std::vector<double>>& t) {
    double acc = 0.0;
    for (const auto& p : s) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : t) {
        double ss = 0.0;
        for (size_t j = 0; j < p.size(); ++j) {
          double d = p[j] - q[j];
          ss += d * d;
        }
        if (ss < best) best = ss;
      }
      acc += std::sqrt(best);
    }
    return acc / s.size();
  };
  return 0.5 * (one_way(a, b) + one_way(b, a));
}

}  // namespace pmstrnn
