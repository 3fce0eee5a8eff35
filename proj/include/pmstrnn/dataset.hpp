// dataset.hpp
// synthetic full-body movement clips. Limb motions are cyclic sub-primitives
// (three arm kinds, three leg kinds) composed into six whole-body primitives;
// a stick figure with capsule limbs is rendered to 36x36 grayscale in [-1,1].
// The figure layout keeps each limb inside its own image quadrant: left arm
// upper left, right arm upper right, left leg lower left, right leg lower
// right, with only the static head/torso crossing the midlines.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pmstrnn/grid.hpp"
#include "pmstrnn/training.hpp"

namespace pmstrnn {

enum class ArmKind { A1, A2, A3 };  // lateral swing, overhead raise, full circle
enum class LegKind { L1, L2, L3 };  // alternating raises, standing, knee bends
enum class Side { left, right };

struct SyntaxEntry {
  ArmKind arm_left;
  ArmKind arm_right;
  bool anti = false;  // anti-phase: right arm runs half a cycle ahead
  LegKind leg;
};

// the six built-in whole-body primitives P1..P6
const std::array<SyntaxEntry, 6>& primitive_table();
int primitive_index(const std::string& name);   // "P1".."P6"
std::string primitive_name(int index);

struct SubjectParams {
  double speed_scale = 1.0;
  double limb_scale = 1.0;
  double height_scale = 1.0;
  std::uint64_t seed = 0;
};

// subject 0 is the unscaled prototype; higher indices are sampled variations
SubjectParams subject_params(std::uint64_t dataset_seed, int index);

struct ArmPose {
  double shoulder = 0.0;  // from straight down, positive away from the torso
  double elbow = 0.0;     // forearm bend, positive continues outward
};
struct LegPose {
  double hip = 0.0;   // from straight down, positive outward
  double knee = 0.0;  // shank bend, positive outward
};
struct Pose {
  ArmPose arm_l, arm_r;
  LegPose leg_l, leg_r;
};

// u is the position in the cycle, wrapped to [0,1)
ArmPose arm_sub(ArmKind kind, double phase_offset, double u);
LegPose leg_sub(LegKind kind, Side side, double u);
Pose compose_frame(const SyntaxEntry& entry, double u);

MapGrid render(const Pose& pose, const SubjectParams& subject);

struct PlanEntry {
  int primitive = 0;  // index into primitive_table
  int cycles = 1;
};

constexpr int kStepsPerCycleDefault = 17;

// frames advance the cycle position by speed_scale/steps_per_cycle; each plan
// entry restarts at u = 0 and lasts cycles * round(steps_per_cycle/speed) frames
VideoSequence generate(const std::vector<PlanEntry>& plan, int steps_per_cycle,
                       const SubjectParams& subject, const std::string& label);

// container format: one sequence per file, f32 frames, plus a json manifest
struct StoredSequence {
  std::string label;
  SubjectParams subject;
  std::vector<PlanEntry> plan;
  int steps_per_cycle = kStepsPerCycleDefault;
  std::vector<MapGrid> frames;
};

void save_sequence(const std::string& path, const StoredSequence& seq);
StoredSequence load_sequence(const std::string& path);

}  // namespace pmstrnn
