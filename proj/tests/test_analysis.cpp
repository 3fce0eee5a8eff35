#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "micro.hpp"
#include "pmstrnn/analysis.hpp"
#include "pmstrnn/errors.hpp"

using namespace pmstrnn;

namespace {

ActivationTrace make_trace(const std::vector<std::vector<double>>& rows) {
  ActivationTrace t;
  t.rows = rows;
  return t;
}

// leading eigenpairs of the sample covariance by power iteration with
// deflation, written without reference to the library implementation
void power_pca(const std::vector<std::vector<double>>& rows, int k,
               std::vector<std::vector<double>>& comps, std::vector<double>& vals) {
  size_t n = rows.size(), d = rows[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (size_t j = 0; j < d; ++j) mean[j] += r[j] / n;
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows)
    for (size_t a = 0; a < d; ++a)
      for (size_t b = 0; b < d; ++b)
        cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / (n - 1);

  comps.clear();
  vals.clear();
  for (int c = 0; c < k; ++c) {
    std::vector<double> v(d, 0.0);
    v[c % d] = 1.0;
    v[(c + 1) % d] = 0.5;
    double lambda = 0.0;
    for (int it = 0; it < 3000; ++it) {
      std::vector<double> w(d, 0.0);
      for (size_t a = 0; a < d; ++a)
        for (size_t b = 0; b < d; ++b) w[a] += cov[a][b] * v[b];
      // project out the components found so far
      for (const auto& u : comps) {
        double dot = 0.0;
        for (size_t j = 0; j < d; ++j) dot += w[j] * u[j];
        for (size_t j = 0; j < d; ++j) w[j] -= dot * u[j];
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-300) break;
      for (size_t j = 0; j < d; ++j) v[j] = w[j] / norm;
      lambda = norm;
    }
    comps.push_back(v);
    vals.push_back(lambda);
  }
}

std::vector<std::vector<double>> wavy_rows(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> dir1(d), dir2(d);
  for (int j = 0; j < d; ++j) {
    dir1[j] = rng.uniform(-1.0, 1.0);
    dir2[j] = rng.uniform(-1.0, 1.0);
  }
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n; ++i) {
    std::vector<double> r(d);
    double a = 3.0 * std::sin(0.4 * i), b = 1.2 * std::cos(0.9 * i + 0.3);
    for (int j = 0; j < d; ++j)
      r[j] = a * dir1[j] + b * dir2[j] + 0.01 * rng.uniform(-1.0, 1.0);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

TEST_CASE("pca agrees with a power-iteration reference") {
  auto rows = wavy_rows(40, 7, 31337);
  PcaResult p = pca(make_trace(rows), 3);

  std::vector<std::vector<double>> ref_comps;
  std::vector<double> ref_vals;
  power_pca(rows, 3, ref_comps, ref_vals);

  REQUIRE(p.components.size() == 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(p.explained[c] == doctest::Approx(ref_vals[c]).epsilon(1e-6));
    double dot = 0.0;
    for (size_t j = 0; j < rows[0].size(); ++j)
      dot += p.components[c][j] * ref_comps[c][j];
    CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("pca components are orthonormal with non-increasing variances") {
  auto rows = wavy_rows(30, 9, 99);
  PcaResult p = pca(make_trace(rows), 4);
  for (size_t a = 0; a < p.components.size(); ++a)
    for (size_t b = 0; b <= a; ++b) {
      double dot = 0.0;
      for (size_t j = 0; j < p.components[a].size(); ++j)
        dot += p.components[a][j] * p.components[b][j];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
    }
  for (size_t c = 1; c < p.explained.size(); ++c)
    CHECK(p.explained[c] <= p.explained[c - 1] + 1e-12);
  CHECK(p.projected.size() == rows.size());
  CHECK(p.projected[0].size() == 4);
}

TEST_CASE("points on a line are explained by one component") {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 20; ++i)
    rows.push_back({1.0 + 2.0 * i, -0.5 * i, 3.0 + 0.25 * i});
  PcaResult p = pca(make_trace(rows), 2);
  CHECK(p.explained[1] <= 1e-10 * p.explained[0]);

  // projections reconstruct the data through the components
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) {
      double rec = p.mean[j];
      for (size_t c = 0; c < p.components.size(); ++c)
        rec += p.projected[i][c] * p.components[c][j];
      CHECK(rec == doctest::Approx(rows[i][j]).epsilon(1e-9));
    }
}

TEST_CASE("more samples than dimensions and the transposed route agree") {
  // d > n exercises the gram-matrix route
  auto wide = wavy_rows(6, 25, 555);
  PcaResult p = pca(make_trace(wide), 2);
  CHECK(p.components.size() == 2);
  double dot = 0.0, n0 = 0.0, n1 = 0.0;
  for (size_t j = 0; j < wide[0].size(); ++j) {
    dot += p.components[0][j] * p.components[1][j];
    n0 += p.components[0][j] * p.components[0][j];
    n1 += p.components[1][j] * p.components[1][j];
  }
  CHECK(n0 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(n1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(dot == doctest::Approx(0.0).epsilon(1e-9));

  std::vector<std::vector<double>> ref_comps;
  std::vector<double> ref_vals;
  power_pca(wide, 2, ref_comps, ref_vals);
  CHECK(p.explained[0] == doctest::Approx(ref_vals[0]).epsilon(1e-6));
}

TEST_CASE("a constant trace is reported as degenerate") {
  std::vector<std::vector<double>> rows(12, std::vector<double>{1.0, 2.0, 3.0});
  PcaResult p = pca(make_trace(rows), 2);
  CHECK(p.degenerate);
  for (const auto& proj : p.projected)
    for (double v : proj) CHECK(v == 0.0);
}

TEST_CASE("pca validates its arguments") {
  auto rows = wavy_rows(5, 4, 1);
  CHECK_THROWS_AS(pca(make_trace(rows), 0), ConfigError);
  CHECK_THROWS_AS(pca(make_trace(rows), 5), ConfigError);  // k > d
  auto few = wavy_rows(2, 6, 2);
  CHECK_THROWS_AS(pca(make_trace(few), 3), ConfigError);  // k > n
  CHECK_THROWS_AS(pca(ActivationTrace{}, 1), ConfigError);
}

TEST_CASE("quadrant split partitions a map and joins back exactly") {
  ActivationTrace t;
  t.h = t.w = 6;
  Rng rng(777);
  for (int s = 0; s < 5; ++s) {
    std::vector<double> row(36);
    for (double& v : row) v = rng.uniform(-1.0, 1.0);
    t.rows.push_back(std::move(row));
  }
  auto q = quadrant_split(t);
  int total = 0;
  for (const auto& part : q) {
    CHECK(part.steps() == 5);
    CHECK(part.dim() == 9);
    total += part.dim();
  }
  CHECK(total == 36);
  // upper-right quadrant is rows 0..2, cols 3..5
  CHECK(q[0].rows[2][0] == t.rows[2][0 * 6 + 3]);
  // upper-left quadrant is rows 0..2, cols 0..2
  CHECK(q[1].rows[1][2] == t.rows[1][0 * 6 + 2]);
  ActivationTrace back = quadrant_join(q);
  CHECK(back.rows == t.rows);
  CHECK(back.h == 6);
  CHECK(back.w == 6);

  ActivationTrace flat;
  flat.rows = t.rows;  // no grid shape attached
  CHECK_THROWS_AS(quadrant_split(flat), ConfigError);
}

TEST_CASE("cyclicity separates periodic from drifting traces") {
  std::vector<std::vector<double>> sine, ramp, noisy_sine;
  Rng rng(888);
  for (int i = 0; i < 64; ++i) {
    double u = 2.0 * 3.14159265358979 * (i % 16) / 16.0;
    sine.push_back({std::sin(u), std::cos(u)});
    ramp.push_back({0.1 * i, -0.05 * i});
    noisy_sine.push_back({std::sin(u) + 0.05 * rng.uniform(-1, 1),
                          std::cos(u) + 0.05 * rng.uniform(-1, 1)});
  }
  CHECK(cyclicity(sine, 16) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cyclicity(ramp, 16) < 0.15);
  CHECK(cyclicity(noisy_sine, 16) > 0.9);
  // a settling trace scores low
  std::vector<std::vector<double>> settle;
  for (int i = 0; i < 64; ++i) {
    double decay = std::exp(-0.15 * i);
    settle.push_back({decay * std::sin(0.7 * i), decay * std::cos(0.7 * i)});
  }
  CHECK(cyclicity(settle, 16) < 0.5);
  CHECK_THROWS_AS(cyclicity(sine, 40), ConfigError);  // fewer than two cycles
  CHECK_THROWS_AS(cyclicity(sine, 0), ConfigError);
}

TEST_CASE("convergence compares late to early movement") {
  std::vector<std::vector<double>> spiral_in, spiral_out, circle;
  for (int i = 0; i < 40; ++i) {
    double r_in = std::exp(-0.12 * i), r_out = std::exp(0.05 * i);
    double a = 0.8 * i;
    spiral_in.push_back({r_in * std::cos(a), r_in * std::sin(a)});
    spiral_out.push_back({r_out * std::cos(a), r_out * std::sin(a)});
    circle.push_back({std::cos(a), std::sin(a)});
  }
  CHECK(convergence(spiral_in) < 0.5);
  CHECK(convergence(spiral_out) > 1.0);
  CHECK(convergence(circle) == doctest::Approx(1.0).epsilon(0.05));
  // a frozen trajectory has zero late movement
  std::vector<std::vector<double>> frozen;
  for (int i = 0; i < 40; ++i)
    frozen.push_back({i < 8 ? 1.0 * i : 8.0, 0.0});
  CHECK(convergence(frozen) == 0.0);
  CHECK_THROWS_AS(convergence({{1.0}, {2.0}}), ConfigError);  // too short
}

TEST_CASE("trajectory distance is symmetric and detects offsets") {
  std::vector<std::vector<double>> a, b, c;
  for (int i = 0; i < 25; ++i) {
    double u = 0.25 * i;
    a.push_back({std::cos(u), std::sin(u)});
    b.push_back({std::cos(u + 0.5), std::sin(u + 0.5)});  // same circle, shifted
    c.push_back({std::cos(u) + 4.0, std::sin(u)});        // translated circle
  }
  CHECK(trajectory_distance(a, a) == 0.0);
  CHECK(trajectory_distance(a, b) == doctest::Approx(trajectory_distance(b, a)));
  CHECK(trajectory_distance(a, b) < 0.2);   // clouds overlap on the same orbit
  CHECK(trajectory_distance(a, c) > 2.0);   // clearly separated clouds
  CHECK_THROWS_AS(trajectory_distance(a, {}), ConfigError);
}

TEST_CASE("traces can be recorded from a live network") {
  using testutil::micro_arch_2;
  using testutil::random_frames;
  using testutil::random_intention;
  ArchitectureSpec arch = micro_arch_2();
  NetworkParams p = init_params(arch, 41);
  IntentionState z = random_intention(arch, 42);
  auto frames = random_frames(arch, 6, 43);
  Rollout r = rollout(arch, p, z, Mode::closed, frames, 5, true);
  std::vector<NetworkState> states(r.trace.begin() + 1, r.trace.end());

  ActivationTrace one = fm_trace(states, 1, 0);
  CHECK(one.steps() == 5);
  CHECK(one.dim() == 9);
  CHECK(one.h == 3);
  CHECK(one.rows[2][4] == states[2].layer(1).fm_act[0].v[4]);

  ActivationTrace whole = layer_fm_trace(states, 1);
  CHECK(whole.dim() == 18);  // two 3x3 maps side by side
  CHECK(whole.h == 0);       // concatenation has no single grid shape
  CHECK(whole.rows[1][9] == states[1].layer(1).fm_act[1].v[0]);

  ActivationTrace cm = layer_cm_trace(states, 2);
  CHECK(cm.dim() == 4);

  ActivationTrace glued = concat_steps(one, fm_trace(states, 1, 1));
  CHECK(glued.steps() == 10);
  CHECK_THROWS_AS(concat_steps(one, whole), ConfigError);
}
