#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "micro.hpp"
#include "pmstrnn/errors.hpp"
#include "pmstrnn/training.hpp"

using namespace pmstrnn;
using testutil::micro_arch_2;
using testutil::random_frames;

namespace {

// a smooth low-amplitude periodic clip the micro net can actually learn
std::vector<MapGrid> wave_frames(const ArchitectureSpec& arch, int n, double phase) {
  std::vector<MapGrid> out;
  for (int t = 0; t < n; ++t) {
    MapGrid f(arch.input_h, arch.input_w);
    for (int r = 0; r < f.h; ++r)
      for (int c = 0; c < f.w; ++c)
        f.at(r, c) = 0.6 * std::sin(2.0 * 3.14159265358979 * t / 8.0 + phase +
                                    0.7 * r - 0.4 * c);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<VideoSequence> two_waves(const ArchitectureSpec& arch) {
  return {{"a", wave_frames(arch, 12, 0.0)}, {"b", wave_frames(arch, 12, 1.5)}};
}

}  // namespace

TEST_CASE("a zero learning rate changes nothing") {
  ArchitectureSpec arch = micro_arch_2();
  auto data = two_waves(arch);
  TrainingConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 3;
  cfg.eval_every = 1;
  cfg.seed = 5;
  TrainedModel m = train(arch, data, cfg);
  CHECK(params_max_abs_diff(m.params, init_params(arch, 5)) == 0.0);
  for (const IntentionState& z : m.intentions)
    for (auto& layer : z.fm)
      for (auto& g : layer)
        for (double v : g.v) CHECK(v == 0.0);
  CHECK(m.epochs_run == 3);
  CHECK(m.log.size() == 3);
}

TEST_CASE("config validation") {
  ArchitectureSpec arch = micro_arch_2();
  auto data = two_waves(arch);
  TrainingConfig cfg;
  cfg.learning_rate = -0.1;
  CHECK_THROWS_AS(train(arch, data, cfg), ConfigError);
  cfg = TrainingConfig{};
  cfg.max_epochs = 0;
  CHECK_THROWS_AS(train(arch, data, cfg), ConfigError);
  cfg = TrainingConfig{};
  CHECK_THROWS_AS(train(arch, {}, cfg), ConfigError);
  std::vector<VideoSequence> one_frame = {{"x", random_frames(arch, 1, 1)}};
  CHECK_THROWS_AS(train(arch, one_frame, cfg), ConfigError);
}

TEST_CASE("training reduces the open-loop error") {
  ArchitectureSpec arch = micro_arch_2();
  auto data = two_waves(arch);
  TrainingConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.momentum = 0.9;
  cfg.max_epochs = 120;
  cfg.eval_every = 40;
  cfg.closed_loop_stop = 1e-9;  // never reached here
  cfg.seed = 7;
  TrainedModel m = train(arch, data, cfg);
  REQUIRE(m.log.size() == 120);
  CHECK(m.log.back().open_mse < 0.5 * m.log.front().open_mse);
  // closed-loop numbers exist on the evaluated epochs only
  CHECK(std::isnan(m.log[1].closed_mse));
  CHECK_FALSE(std::isnan(m.log[39].closed_mse));
  CHECK(m.log[39].closed_by_sequence.size() == 2);
  // wall clock is cumulative
  CHECK(m.log.back().wall_seconds >= m.log.front().wall_seconds);
}

TEST_CASE("closed-loop error of an epoch matches the standalone helper") {
  ArchitectureSpec arch = micro_arch_2();
  auto data = two_waves(arch);
  TrainingConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.max_epochs = 4;
  cfg.eval_every = 4;
  cfg.seed = 11;
  TrainedModel m = train(arch, data, cfg);
  const EpochLog& last = m.log.back();
  REQUIRE(last.closed_by_sequence.size() == 2);
  for (size_t i = 0; i < data.size(); ++i)
    CHECK(last.closed_by_sequence[i] ==
          doctest::Approx(closed_loop_mse(arch, m.params, m.intentions[i],
                                          data[i].frames))
              .epsilon(1e-12));
}

TEST_CASE("divergence aborts with a numeric error") {
  ArchitectureSpec arch = micro_arch_2();
  auto data = two_waves(arch);
  TrainingConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.max_epochs = 5;
  cfg.seed = 13;
  TrainedModel base = train(arch, data, cfg);
  base.params.b_o = std::numeric_limits<double>::quiet_NaN();
  std::vector<VideoSequence> fresh = {{"c", wave_frames(arch, 12, 3.0)}};
  CHECK_THROWS_AS(continue_training(base, data, fresh, cfg), NumericError);
}

TEST_CASE("continuing keeps known intentions and seeds new ones at zero") {
  ArchitectureSpec arch = micro_arch_2();
  auto data = two_waves(arch);
  TrainingConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.max_epochs = 5;
  cfg.seed = 17;
  TrainedModel base = train(arch, data, cfg);

  std::vector<VideoSequence> fresh = {{"c", wave_frames(arch, 12, 3.0)}};
  TrainingConfig frozen = cfg;
  frozen.learning_rate = 0.0;
  frozen.max_epochs = 2;
  TrainedModel next = continue_training(base, data, fresh, frozen);

  REQUIRE(next.labels.size() == 3);
  CHECK(next.labels[0] == "a");
  CHECK(next.labels[1] == "b");
  CHECK(next.labels[2] == "c");
  CHECK(params_max_abs_diff(next.params, base.params) == 0.0);
  for (int i = 0; i < 2; ++i) {
    auto ra = intention_refs(next.intentions[i]);
    auto rb = intention_refs(base.intentions[i]);
    for (size_t r = 0; r < ra.size(); ++r) CHECK(*ra[r].data == *rb[r].data);
  }
  for (auto& ref : intention_refs(next.intentions[2]))
    for (double v : *ref.data) CHECK(v == 0.0);
  // the stage log starts fresh
  CHECK(next.log.size() == 2);
  CHECK(next.epochs_run == 2);
}

TEST_CASE("continuing with nothing new returns the model unchanged") {
  ArchitectureSpec arch = micro_arch_2();
  auto data = two_waves(arch);
  TrainingConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.max_epochs = 4;
  cfg.seed = 19;
  TrainedModel base = train(arch, data, cfg);
  TrainedModel same = continue_training(base, data, {}, cfg);
  CHECK(params_max_abs_diff(same.params, base.params) == 0.0);
  CHECK(same.labels == base.labels);
  CHECK(same.epochs_run == 0);
  CHECK(same.log.empty());
}

TEST_CASE("training is reproducible and thread-count independent") {
  ArchitectureSpec arch = micro_arch_2();
  auto data = two_waves(arch);
  TrainingConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.momentum = 0.5;
  cfg.max_epochs = 6;
  cfg.eval_every = 3;
  cfg.seed = 23;

  TrainedModel m1 = train(arch, data, cfg);
  TrainedModel m2 = train(arch, data, cfg);
  CHECK(params_max_abs_diff(m1.params, m2.params) == 0.0);
  REQUIRE(m1.log.size() == m2.log.size());
  for (size_t i = 0; i < m1.log.size(); ++i) {
    CHECK(m1.log[i].open_mse == m2.log[i].open_mse);
    bool n1 = std::isnan(m1.log[i].closed_mse), n2 = std::isnan(m2.log[i].closed_mse);
    CHECK(n1 == n2);
    if (!n1) CHECK(m1.log[i].closed_mse == m2.log[i].closed_mse);
  }

  TrainingConfig threaded = cfg;
  threaded.threads = 3;
  TrainedModel m3 = train(arch, data, threaded);
  CHECK(params_max_abs_diff(m1.params, m3.params) == 0.0);
}

TEST_CASE("the stop threshold ends training early") {
  ArchitectureSpec arch = micro_arch_2();
  auto data = two_waves(arch);
  TrainingConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 50;
  cfg.eval_every = 1;
  cfg.closed_loop_stop = 1e9;  // anything passes
  TrainedModel m = train(arch, data, cfg);
  CHECK(m.reached_stop);
  CHECK(m.epochs_run == 1);
}
