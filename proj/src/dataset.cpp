#include "pmstrnn/dataset.hpp"

#include <cmath>

#include "pmstrnn/binio.hpp"
#include "pmstrnn/errors.hpp"
#include "pmstrnn/rng.hpp"

namespace pmstrnn {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap01(double u) { return u - std::floor(u); }

// smooth 0..1..0 bump with period 1, zero at u = 0
double bump(double u) { return 0.5 - 0.5 * std::cos(2.0 * kPi * u); }

double deg(double d) { return d * kPi / 180.0; }

double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// figure layout constants. The arm anchors and segment lengths are chosen so
// that a fully extended arm of the largest subject still stays inside its
// 18x18 image quadrant, which keeps every limb's pixels out of the other
// quadrants for all poses.
constexpr double kCanvas = 36.0;
constexpr double kCx = 18.0;
constexpr double kShoulderX = 9.0;   // left; right mirrored
constexpr double kShoulderY = 9.0;
constexpr double kHipDx = 4.5;
constexpr double kPelvisY = 19.8;    // scaled by height
constexpr double kUpperArm = 3.6;    // scaled by limb
constexpr double kForeArm = 3.4;
constexpr double kThigh = 4.2;
constexpr double kShank = 4.0;
constexpr double kLimbHalfWidth = 0.75;
constexpr double kTorsoHalfWidth = 0.9;
constexpr double kBarHalfWidth = 0.8;
constexpr double kHeadRadius = 2.1;  // scaled by height
constexpr double kHeadY = 3.2;
constexpr double kNeckY = 5.2;
constexpr double kFeather = 0.55;

struct Capsule {
  double x0, y0, x1, y1, r;  // r is the half width; x0==x1,y0==y1 gives a disc
};

double capsule_distance(const Capsule& c, double px, double py) {
  double vx = c.x1 - c.x0, vy = c.y1 - c.y0;
  double wx = px - c.x0, wy = py - c.y0;
  double vv = vx * vx + vy * vy;
  double t = vv > 0.0 ? clampd((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
  double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

const std::array<SyntaxEntry, 6>& primitive_table() {
  static const std::array<SyntaxEntry, 6> table = {{
      {ArmKind::A2, ArmKind::A1, false, LegKind::L1},  // P1
      {ArmKind::A1, ArmKind::A2, true, LegKind::L2},   // P2
      {ArmKind::A3, ArmKind::A3, false, LegKind::L1},  // P3
      {ArmKind::A3, ArmKind::A3, true, LegKind::L2},   // P4
      {ArmKind::A1, ArmKind::A1, false, LegKind::L3},  // P5
      {ArmKind::A2, ArmKind::A2, true, LegKind::L3},   // P6
  }};
  return table;
}

int primitive_index(const std::string& name) {
  if (name.size() == 2 && name[0] == 'P' && name[1] >= '1' && name[1] <= '6')
    return name[1] - '1';
  throw ConfigError("unknown primitive name: " + name);
}

std::string primitive_name(int index) {
  if (index < 0 || index > 5)
    throw ConfigError("primitive index out of range: " + std::to_string(index));
  return "P" + std::to_string(index + 1);
}

SubjectParams subject_params(std::uint64_t dataset_seed, int index) {
  if (index < 0) throw ConfigError("subject index must not be negative");
  SubjectParams s;
  s.seed = mix_seed(dataset_seed, "subject", static_cast<std::uint64_t>(index));
  if (index == 0) return s;  // prototype subject, unscaled
  Rng rng(s.seed);
  s.speed_scale = rng.uniform(0.85, 1.15);
  s.limb_scale = rng.uniform(0.88, 1.12);
  s.height_scale = rng.uniform(0.97, 1.03);
  return s;
}

ArmPose arm_sub(ArmKind kind, double phase_offset, double u) {
  double t = wrap01(u + phase_offset);
  ArmPose a;
  switch (kind) {
    case ArmKind::A1:  // lateral swing up to horizontal
      a.shoulder = deg(20.0) + deg(70.0) * bump(t);
      a.elbow = deg(10.0) + deg(20.0) * bump(t);
      break;
    case ArmKind::A2:  // raise toward overhead
      a.shoulder = deg(15.0) + deg(140.0) * bump(t);
      a.elbow = deg(12.0);
      break;
    case ArmKind::A3:  // full circular sweep
      a.shoulder = 2.0 * kPi * t;
      a.elbow = deg(8.0);
      break;
  }
  return a;
}

LegPose leg_sub(LegKind kind, Side side, double u) {
  LegPose l;
  switch (kind) {
    case LegKind::L1: {  // raises alternating between the two legs
      double t = wrap01(u + (side == Side::right ? 0.5 : 0.0));
      l.hip = deg(40.0) * bump(t);
      l.knee = 0.5 * l.hip;
      break;
    }
    case LegKind::L2:  // standing still
      break;
    case LegKind::L3:  // both knees bend together
      l.knee = deg(50.0) * bump(wrap01(u));
      break;
  }
  return l;
}

Pose compose_frame(const SyntaxEntry& entry, double u) {
  Pose p;
  p.arm_l = arm_sub(entry.arm_left, 0.0, u);
  p.arm_r = arm_sub(entry.arm_right, entry.anti ? 0.5 : 0.0, u);
  p.leg_l = leg_sub(entry.leg, Side::left, u);
  p.leg_r = leg_sub(entry.leg, Side::right, u);

  p.arm_l.elbow = clampd(p.arm_l.elbow, 0.0, deg(45.0));
  p.arm_r.elbow = clampd(p.arm_r.elbow, 0.0, deg(45.0));
  for (LegPose* lp : {&p.leg_l, &p.leg_r}) {
    lp->hip = clampd(lp->hip, 0.0, deg(80.0));
    lp->knee = clampd(lp->knee, 0.0, deg(80.0));
  }
  return p;
}

MapGrid render(const Pose& pose, const SubjectParams& subject) {
  const double limb = subject.limb_scale;
  const double height = subject.height_scale;
  const double pelvis_y = kPelvisY * height;
  const double wl = kLimbHalfWidth * limb;

  std::vector<Capsule> shapes;
  shapes.reserve(12);
  shapes.push_back({kCx, kHeadY, kCx, kHeadY, kHeadRadius * height});
  shapes.push_back({kCx, kNeckY, kCx, pelvis_y, kTorsoHalfWidth});
  shapes.push_back({kShoulderX, kShoulderY, kCanvas - kShoulderX, kShoulderY, kBarHalfWidth});
  shapes.push_back({kCx - kHipDx, pelvis_y, kCx + kHipDx, pelvis_y, kBarHalfWidth});

  // arm/leg direction for angle a measured from straight down, outward positive
  auto add_limb = [&](double ax, double ay, double a0, double len0, double a1,
                      double len1, double sign) {
    double mx = ax + sign * std::sin(a0) * len0;
    double my = ay + std::cos(a0) * len0;
    double ex = mx + sign * std::sin(a0 + a1) * len1;
    double ey = my + std::cos(a0 + a1) * len1;
    shapes.push_back({ax, ay, mx, my, wl});
    shapes.push_back({mx, my, ex, ey, wl});
  };

  add_limb(kShoulderX, kShoulderY, pose.arm_l.shoulder, kUpperArm * limb,
           pose.arm_l.elbow, kForeArm * limb, -1.0);
  add_limb(kCanvas - kShoulderX, kShoulderY, pose.arm_r.shoulder, kUpperArm * limb,
           pose.arm_r.elbow, kForeArm * limb, 1.0);
  add_limb(kCx - kHipDx, pelvis_y, pose.leg_l.hip, kThigh * limb, pose.leg_l.knee,
           kShank * limb, -1.0);
  add_limb(kCx + kHipDx, pelvis_y, pose.leg_r.hip, kThigh * limb, pose.leg_r.knee,
           kShank * limb, 1.0);

  MapGrid frame(36, 36);
  for (int r = 0; r < 36; ++r) {
    for (int c = 0; c < 36; ++c) {
      double px = c + 0.5, py = r + 0.5;
      double cov = 0.0;
      for (const Capsule& s : shapes) {
        double d = capsule_distance(s, px, py);
        double v = clampd((s.r + 0.5 * kFeather - d) / kFeather, 0.0, 1.0);
        if (v > cov) cov = v;
      }
      // quantized so stored files and in-memory frames agree exactly
      frame.at(r, c) = static_cast<double>(static_cast<float>(-1.0 + 2.0 * cov));
    }
  }
  return frame;
}

VideoSequence generate(const std::vector<PlanEntry>& plan, int steps_per_cycle,
                       const SubjectParams& subject, const std::string& label) {
  if (plan.empty()) throw ConfigError("empty sequence plan");
  if (steps_per_cycle < 2) throw ConfigError("steps_per_cycle must be at least 2");
  if (subject.speed_scale <= 0.0) throw ConfigError("speed_scale must be positive");

  VideoSequence seq;
  seq.label = label;
  for (const PlanEntry& e : plan) {
    if (e.primitive < 0 || e.primitive > 5)
      throw ConfigError("plan primitive index out of range");
    if (e.cycles < 1) throw ConfigError("plan cycles must be at least 1");
    const SyntaxEntry& entry = primitive_table()[e.primitive];
    int per_cycle = static_cast<int>(
        std::llround(steps_per_cycle / subject.speed_scale));
    int n = e.cycles * per_cycle;
    for (int k = 0; k < n; ++k) {
      double u = wrap01(k * subject.speed_scale / steps_per_cycle);
      seq.frames.push_back(render(compose_frame(entry, u), subject));
    }
  }
  return seq;
}

void save_sequence(const std::string& path, const StoredSequence& seq) {
  ByteWriter payload;
  payload.u32(1);  // version
  payload.str(seq.label);
  payload.u32(static_cast<std::uint32_t>(seq.frames.size()));
  int h = seq.frames.empty() ? 36 : seq.frames[0].h;
  int w = seq.frames.empty() ? 36 : seq.frames[0].w;
  payload.u32(static_cast<std::uint32_t>(h));
  payload.u32(static_cast<std::uint32_t>(w));
  payload.f64(seq.subject.speed_scale);
  payload.f64(seq.subject.limb_scale);
  payload.f64(seq.subject.height_scale);
  payload.u64(seq.subject.seed);
  payload.u32(static_cast<std::uint32_t>(seq.steps_per_cycle));
  payload.u32(static_cast<std::uint32_t>(seq.plan.size()));
  for (const PlanEntry& e : seq.plan) {
    payload.u32(static_cast<std::uint32_t>(e.primitive));
    payload.u32(static_cast<std::uint32_t>(e.cycles));
  }
  for (const MapGrid& f : seq.frames) {
    if (f.h != h || f.w != w) throw ConfigError("inconsistent frame shapes");
    for (double v : f.v) payload.f32(static_cast<float>(v));
  }

  ByteWriter out;
  out.raw("PMVS", 4);
  out.raw(payload.bytes().data(), payload.bytes().size());
  out.u32(crc32(payload.bytes().data(), payload.bytes().size()));
  write_file(path, out.bytes());
}

StoredSequence load_sequence(const std::string& path) {
  auto bytes = read_file(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "PMVS", 4) != 0)
    throw FormatError("not a sequence container: " + path);
  size_t payload_len = bytes.size() - 8;
  std::uint32_t want = crc32(bytes.data() + 4, payload_len);
  ByteReader tail(bytes.data() + 4 + payload_len, 4);
  if (tail.u32() != want)
    throw FormatError("sequence container checksum mismatch: " + path);

  ByteReader r(bytes.data() + 4, payload_len);
  std::uint32_t version = r.u32();
  if (version != 1)
    throw FormatError("unsupported sequence container version " +
                      std::to_string(version) + ": " + path);
  StoredSequence seq;
  seq.label = r.str();
  std::uint32_t t = r.u32();
  std::uint32_t h = r.u32();
  std::uint32_t w = r.u32();
  if (h == 0 || w == 0 || h > 4096 || w > 4096)
    throw FormatError("implausible frame shape in " + path);
  seq.subject.speed_scale = r.f64();
  seq.subject.limb_scale = r.f64();
  seq.subject.height_scale = r.f64();
  seq.subject.seed = r.u64();
  seq.steps_per_cycle = static_cast<int>(r.u32());
  std::uint32_t plan_n = r.u32();
  for (std::uint32_t i = 0; i < plan_n; ++i) {
    PlanEntry e;
    e.primitive = static_cast<int>(r.u32());
    e.cycles = static_cast<int>(r.u32());
    seq.plan.push_back(e);
  }
  seq.frames.reserve(t);
  for (std::uint32_t i = 0; i < t; ++i) {
    MapGrid f(static_cast<int>(h), static_cast<int>(w));
    for (double& v : f.v) v = static_cast<double>(r.f32());
    seq.frames.push_back(std::move(f));
  }
  if (r.remaining() != 0)
    throw FormatError("trailing bytes in sequence container: " + path);
  return seq;
}

}  // namespace pmstrnn
