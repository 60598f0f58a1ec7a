#include "pbpa/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "pbpa/rng.hpp"

namespace pbpa {

// ---------------------------------------------------------------------------
// config and class table

void GenConfig::validate() const {
  const int table = static_cast<int>(class_table().size());
  if (classes < 2 || classes > table)
    throw ContractError("gen config: classes must be in [2, " + std::to_string(table) + "]");
  if (canvas < 32) throw ContractError("gen config: canvas must be >= 32");
  if (min_persons < 1 || max_persons < min_persons) throw ContractError("gen config: bad person range");
  if (max_persons > 3) throw ContractError("gen config: at most 3 persons");
  if (max_objects < 1 || max_objects > 4) throw ContractError("gen config: objects must be in [1,4]");
  if (distractor_max < 0 || distractor_max > max_objects)
    throw ContractError("gen config: distractor_max out of range");
  if (part_ratio <= 0.0 || contact_ratio <= 0.0) throw ContractError("gen config: ratios must be positive");
  if (act_prob < 0.0 || act_prob > 1.0 || second_act_prob < 0.0 || second_act_prob > 1.0)
    throw ContractError("gen config: probabilities must be in [0,1]");
}

std::uint64_t GenConfig::digest() const {
  // FNV-1a over the canonical field serialization
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  char buf[64];
  auto mixd = [&](const char* k, double v) {
    std::snprintf(buf, sizeof(buf), "%s=%.17g;", k, v);
    mix(buf);
  };
  auto mixi = [&](const char* k, int v) {
    std::snprintf(buf, sizeof(buf), "%s=%d;", k, v);
    mix(buf);
  };
  mixi("classes", classes);
  mixi("canvas", canvas);
  mixi("min_persons", min_persons);
  mixi("max_persons", max_persons);
  mixi("max_objects", max_objects);
  mixi("distractor_max", distractor_max);
  mixd("part_ratio", part_ratio);
  mixd("contact_ratio", contact_ratio);
  mixd("act_prob", act_prob);
  mixd("second_act_prob", second_act_prob);
  return h;
}

int ClassSpec::pair_index() const { return pbpa::pair_index(std::min(part_a, part_b), std::max(part_a, part_b)); }

const std::vector<ClassSpec>& class_table() {
  static const std::vector<ClassSpec> table = {
      {"touch-neck-l", kLWrist, kNeck, ClassSpec::kPoseContact},
      {"touch-neck-r", kRWrist, kNeck, ClassSpec::kPoseContact},
      {"hand-on-hip-l", kLWrist, kPelvis, ClassSpec::kPoseContact},
      {"hand-on-hip-r", kRWrist, kPelvis, ClassSpec::kPoseContact},
      {"touch-knee-l", kLKnee, kLWrist, ClassSpec::kPoseContact},
      {"touch-knee-r", kRKnee, kRWrist, ClassSpec::kPoseContact},
      {"crouch-lean-l", kLKnee, kLElbow, ClassSpec::kPoseContact},
      {"crouch-lean-r", kRKnee, kRElbow, ClassSpec::kPoseContact},
      {"carry-box", kLWrist, kRWrist, ClassSpec::kObjectTouch},
      {"hold-on-lap", kLKnee, kRKnee, ClassSpec::kObjectTouch},
      {"stand-on-box", kLAnkle, kRAnkle, ClassSpec::kObjectTouch},
      {"cradle-arm", kRWrist, kRElbow, ClassSpec::kObjectTouch},
  };
  return table;
}

// ---------------------------------------------------------------------------
// predicates

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double torso_length(const Keypoints& kp) { return dist(kp.pts[kNeck], kp.pts[kPelvis]); }

}  // namespace

std::vector<std::uint8_t> evaluate_person_labels(const PersonInstance& person,
                                                 const std::vector<BoundingBox>& objects, const GenConfig& cfg) {
  const auto& table = class_table();
  const Keypoints& kp = person.keypoints;
  const double torso = torso_length(kp);
  const PartLayout layout = part_boxes_from_keypoints(kp, cfg.part_ratio);

  std::vector<std::uint8_t> labels(static_cast<size_t>(cfg.classes), 0);
  for (int c = 0; c < cfg.classes; ++c) {
    const ClassSpec& spec = table[static_cast<size_t>(c)];
    bool hit = false;
    if (spec.kind == ClassSpec::kPoseContact) {
      if (kp.visible[static_cast<size_t>(spec.part_a)] && kp.visible[static_cast<size_t>(spec.part_b)])
        hit = dist(kp.pts[static_cast<size_t>(spec.part_a)], kp.pts[static_cast<size_t>(spec.part_b)]) <=
              cfg.contact_ratio * torso;
    } else {
      const BoundingBox& ba = layout.parts[static_cast<size_t>(spec.part_a)];
      const BoundingBox& bb = layout.parts[static_cast<size_t>(spec.part_b)];
      for (const BoundingBox& obj : objects) {
        if (ba.intersects(obj) && bb.intersects(obj)) {
          hit = true;
          break;
        }
      }
    }
    labels[static_cast<size_t>(c)] = hit ? 1 : 0;
  }
  return labels;
}

// ---------------------------------------------------------------------------
// skeleton posing

namespace {

struct BodyFrame {
  Point2 pelvis, neck;
  Point2 up;     // unit, pelvis -> neck
  Point2 right;  // unit, person's right (+x when upright)
  double t = 0;  // torso length

  Point2 at(double along_right, double below_pelvis) const {
    return {pelvis.x + along_right * right.x - below_pelvis * up.x,
            pelvis.y + along_right * right.y - below_pelvis * up.y};
  }
  Point2 shoulder(int side) const {
    return {neck.x + side * 0.22 * t * right.x, neck.y + side * 0.22 * t * right.y};
  }
  Point2 hip(int side) const {
    return {pelvis.x + side * 0.14 * t * right.x, pelvis.y + side * 0.14 * t * right.y};
  }
};

constexpr double kUpperArm = 0.55, kForeArm = 0.50, kThigh = 0.62, kShin = 0.58;

Point2 add(const Point2& a, const Point2& b) { return {a.x + b.x, a.y + b.y}; }
Point2 sub(const Point2& a, const Point2& b) { return {a.x - b.x, a.y - b.y}; }
Point2 scale(const Point2& a, double s) { return {a.x * s, a.y * s}; }
double norm(const Point2& a) { return std::hypot(a.x, a.y); }

Point2 toward(const Point2& from, const Point2& to, double length) {
  const Point2 d = sub(to, from);
  const double n = norm(d);
  if (n < 1e-9) return {from.x + length, from.y};
  return add(from, scale(d, length / n));
}

// Two-link reach: place the middle joint so the chain root->joint->target has
// segment lengths l1, l2. Unreachable targets are pulled/pushed onto the
// reachable annulus first. bend picks the elbow/knee side.
struct TwoLink {
  Point2 joint, end;
};

TwoLink solve_two_link(const Point2& root, Point2 target, double l1, double l2, int bend) {
  double d = norm(sub(target, root));
  const double dmin = std::abs(l1 - l2) + 1e-6, dmax = l1 + l2 - 1e-6;
  if (d < dmin) target = toward(root, d < 1e-9 ? Point2{root.x + 1, root.y} : target, dmin);
  if (d > dmax) target = toward(root, target, dmax);
  d = norm(sub(target, root));
  const double a = (d * d + l1 * l1 - l2 * l2) / (2.0 * d);
  const double h2 = std::max(0.0, l1 * l1 - a * a);
  const double h = std::sqrt(h2);
  const Point2 dir = scale(sub(target, root), 1.0 / d);
  const Point2 mid = add(root, scale(dir, a));
  const Point2 perp{-dir.y, dir.x};
  TwoLink out;
  out.joint = add(mid, scale(perp, bend * h));
  out.end = target;
  return out;
}

// One limb posture: either freely sampled or driven to a target.
struct ArmPose {
  Point2 elbow, wrist;
};
struct LegPose {
  Point2 knee, ankle;
};

ArmPose free_arm(const BodyFrame& f, int side, Rng& rng) {
  // wrists kept clear of pelvis and neck so pose classes stay intentional
  const double a1 = rng.uniform(0.30, 1.10);
  const double a2 = a1 + rng.uniform(-0.10, 1.00);
  const Point2 down{-f.up.x, -f.up.y};
  auto rot = [&](const Point2& v, double ang) {
    const double c = std::cos(ang), s = std::sin(ang);
    return Point2{v.x * c - v.y * s * side, v.x * s * side + v.y * c};
  };
  ArmPose arm;
  const Point2 s0 = f.shoulder(side);
  const Point2 d1 = rot(down, a1);
  arm.elbow = add(s0, scale(d1, kUpperArm * f.t));
  const Point2 d2 = rot(down, a2);
  arm.wrist = add(arm.elbow, scale(d2, kForeArm * f.t));
  return arm;
}

LegPose free_leg(const BodyFrame& f, int side, Rng& rng) {
  const double a1 = rng.uniform(-0.05, 0.30);
  const double a2 = rng.uniform(-0.10, 0.25);
  const Point2 down{-f.up.x, -f.up.y};
  auto rot = [&](const Point2& v, double ang) {
    const double c = std::cos(ang), s = std::sin(ang);
    return Point2{v.x * c - v.y * s * side, v.x * s * side + v.y * c};
  };
  LegPose leg;
  const Point2 h0 = f.hip(side);
  leg.knee = add(h0, scale(rot(down, a1), kThigh * f.t));
  leg.ankle = add(leg.knee, scale(rot(down, a2), kShin * f.t));
  return leg;
}

ArmPose arm_to_target(const BodyFrame& f, int side, const Point2& target) {
  const TwoLink tl = solve_two_link(f.shoulder(side), target, kUpperArm * f.t, kForeArm * f.t, side);
  return {tl.joint, tl.end};
}

Point2 disk_jitter(const Point2& p, double radius, Rng& rng) {
  const double ang = rng.uniform(0.0, 6.283185307179586);
  const double rad = radius * std::sqrt(rng.uniform());
  return {p.x + rad * std::cos(ang), p.y + rad * std::sin(ang)};
}

// Activities a person can perform at once must not share a limb.
struct Resources {
  bool left_arm = false, right_arm = false, left_leg = false, right_leg = false;
};

Resources class_resources(int cls) {
  Resources r;
  switch (cls) {
    case 0: r.left_arm = true; break;                        // touch-neck-l
    case 1: r.right_arm = true; break;                       // touch-neck-r
    case 2: r.left_arm = true; break;                        // hand-on-hip-l
    case 3: r.right_arm = true; break;                       // hand-on-hip-r
    case 4: r.left_arm = r.left_leg = true; break;           // touch-knee-l
    case 5: r.right_arm = r.right_leg = true; break;         // touch-knee-r
    case 6: r.left_arm = r.left_leg = true; break;           // crouch-lean-l
    case 7: r.right_arm = r.right_leg = true; break;         // crouch-lean-r
    case 8: r.left_arm = r.right_arm = true; break;          // carry-box
    case 9: r.left_leg = r.right_leg = true; break;          // hold-on-lap
    case 10: r.left_leg = r.right_leg = true; break;         // stand-on-box
    case 11: r.right_arm = true; break;                      // cradle-arm
    default: break;
  }
  return r;
}

bool compatible(const Resources& a, const Resources& b) {
  return !((a.left_arm && b.left_arm) || (a.right_arm && b.right_arm) || (a.left_leg && b.left_leg) ||
           (a.right_leg && b.right_leg));
}

struct PosedPerson {
  Keypoints kp;
  std::vector<BoundingBox> activity_objects;  // objects this person's activities need
};

// Side convention: left limbs are the person's -right direction.
constexpr int kLeft = -1, kRight = 1;

BoundingBox clip_box(BoundingBox b, int canvas) {
  if (b.empty) return b;
  const double r0 = std::max(0.0, b.r), c0 = std::max(0.0, b.c);
  const double r1 = std::min(static_cast<double>(canvas), b.r2());
  const double c1 = std::min(static_cast<double>(canvas), b.c2());
  if (r1 - r0 < 1.0 || c1 - c0 < 1.0) return BoundingBox::empty_box();
  return BoundingBox{r0, c0, r1 - r0, c1 - c0};
}

BoundingBox box_around(const Point2& center, double h, double w) {
  return BoundingBox{center.y - h / 2.0, center.x - w / 2.0, h, w};
}

PosedPerson pose_person(const BodyFrame& f, const std::vector<int>& activities, const GenConfig& cfg, Rng& rng) {
  PosedPerson out;
  Keypoints& kp = out.kp;
  kp.pts[kNeck] = f.neck;
  kp.pts[kPelvis] = f.pelvis;

  // free limbs first, activity limbs overwrite below
  ArmPose arms[2] = {free_arm(f, kLeft, rng), free_arm(f, kRight, rng)};
  LegPose legs[2] = {free_leg(f, kLeft, rng), free_leg(f, kRight, rng)};
  auto arm = [&arms](int side) -> ArmPose& { return arms[side == kLeft ? 0 : 1]; };
  auto leg = [&legs](int side) -> LegPose& { return legs[side == kLeft ? 0 : 1]; };

  const double contact = cfg.contact_ratio * f.t;
  const Point2 down{-f.up.x, -f.up.y};

  for (int cls : activities) {
    const ClassSpec& spec = class_table()[static_cast<size_t>(cls)];
    switch (cls) {
      case 0:
      case 1: {  // wrist to neck
        const int side = cls == 0 ? kLeft : kRight;
        const Point2 target = disk_jitter(f.neck, 0.25 * contact, rng);
        arm(side) = arm_to_target(f, side, target);
        break;
      }
      case 2:
      case 3: {  // wrist to pelvis, biased toward the acting side
        const int side = cls == 2 ? kLeft : kRight;
        const Point2 base = f.at(side * 0.10 * f.t, -0.03 * f.t);
        arm(side) = arm_to_target(f, side, disk_jitter(base, 0.25 * contact, rng));
        break;
      }
      case 4:
      case 5: {  // raise the knee, bring the wrist onto it
        const int side = cls == 4 ? kLeft : kRight;
        const Point2 knee_goal = f.at(side * 0.40 * f.t, -0.30 * f.t);
        LegPose& lg = leg(side);
        lg.knee = toward(f.hip(side), knee_goal, kThigh * f.t);
        lg.ankle = add(lg.knee, scale(down, kShin * f.t));
        arm(side) = arm_to_target(f, side, disk_jitter(lg.knee, 0.25 * contact, rng));
        break;
      }
      case 6:
      case 7: {  // elbow meets raised knee
        const int side = cls == 6 ? kLeft : kRight;
        const Point2 meet = f.at(side * 0.35 * f.t, -0.35 * f.t);
        const Point2 elbow = toward(f.shoulder(side), meet, kUpperArm * f.t);
        LegPose& lg = leg(side);
        lg.knee = toward(f.hip(side), disk_jitter(elbow, 0.20 * contact, rng), kThigh * f.t);
        lg.ankle = add(lg.knee, scale(down, kShin * f.t));
        ArmPose& am = arm(side);
        am.elbow = elbow;
        am.wrist = add(elbow, scale(down, kForeArm * f.t));
        break;
      }
      case 8: {  // carry a box at the side, both wrists on it
        const int side = rng.bernoulli(0.5) ? kRight : kLeft;
        const double w = f.t * rng.uniform(0.45, 0.70);
        const double h = f.t * rng.uniform(0.35, 0.55);
        const Point2 center = f.at(side * (0.45 * f.t + w / 2.0), -rng.uniform(0.05, 0.30) * f.t);
        const Point2 near_target{center.x - side * w / 2.0, center.y};
        const Point2 top_target{center.x, center.y - h / 2.0};
        arm(side) = arm_to_target(f, side, near_target);
        arm(-side) = arm_to_target(f, -side, top_target);
        out.activity_objects.push_back(box_around(center, h, w));
        break;
      }
      case 9: {  // sit, object resting on both knees
        for (int side : {kLeft, kRight}) {
          LegPose& lg = leg(side);
          lg.knee = toward(f.hip(side), f.at(side * 0.20 * f.t, -0.55 * f.t), kThigh * f.t);
          lg.ankle = add(lg.knee, scale(down, kShin * f.t));
        }
        const Point2 mid{(leg(kLeft).knee.x + leg(kRight).knee.x) / 2.0,
                         (leg(kLeft).knee.y + leg(kRight).knee.y) / 2.0};
        const double span = norm(sub(leg(kRight).knee, leg(kLeft).knee));
        const double w = span + f.t * rng.uniform(0.30, 0.45);
        const double h = f.t * rng.uniform(0.28, 0.40);
        out.activity_objects.push_back(box_around({mid.x, mid.y - 0.05 * f.t}, h, w));
        break;
      }
      case 10: {  // both ankles on a platform
        const Point2 la = leg(kLeft).ankle, ra = leg(kRight).ankle;
        const Point2 mid{(la.x + ra.x) / 2.0, (la.y + ra.y) / 2.0};
        const double span = std::abs(ra.x - la.x);
        const double w = span + f.t * rng.uniform(0.50, 0.80);
        const double h = f.t * rng.uniform(0.25, 0.40);
        out.activity_objects.push_back(box_around({mid.x, mid.y + 0.05 * f.t + h / 2.0}, h, w));
        break;
      }
      case 11: {  // horizontal right forearm, object cradled on it
        const int side = kRight;
        ArmPose& am = arm(side);
        const Point2 hang = add(scale(f.right, side * 0.25), scale(down, 0.80));
        am.elbow = add(f.shoulder(side), scale(hang, kUpperArm * f.t / norm(hang)));
        am.wrist = add(am.elbow, scale(f.right, side * kForeArm * f.t));
        const Point2 mid{(am.elbow.x + am.wrist.x) / 2.0, (am.elbow.y + am.wrist.y) / 2.0};
        const double w = f.t * rng.uniform(0.40, 0.55);
        const double h = f.t * rng.uniform(0.28, 0.40);
        out.activity_objects.push_back(box_around({mid.x, mid.y - 0.02 * f.t}, h, w));
        break;
      }
      default:
        throw GenerationError("class " + std::string(spec.name) + ": no posing rule");
    }
  }

  kp.pts[kLWrist] = arm(kLeft).wrist;
  kp.pts[kRWrist] = arm(kRight).wrist;
  kp.pts[kLElbow] = arm(kLeft).elbow;
  kp.pts[kRElbow] = arm(kRight).elbow;
  kp.pts[kLKnee] = leg(kLeft).knee;
  kp.pts[kRKnee] = leg(kRight).knee;
  kp.pts[kLAnkle] = leg(kLeft).ankle;
  kp.pts[kRAnkle] = leg(kRight).ankle;
  return out;
}

// ---------------------------------------------------------------------------
// rendering

struct Painter {
  Tensor* img;
  int canvas;

  void blend(int r, int c, double cr, double cg, double cb, double alpha = 1.0) {
    if (r < 0 || r >= canvas || c < 0 || c >= canvas) return;
    double* px = img->data();
    const std::size_t n = static_cast<size_t>(canvas) * canvas;
    const std::size_t at = static_cast<size_t>(r) * canvas + c;
    px[at] = std::clamp(px[at] * (1 - alpha) + cr * alpha, 0.0, 1.0);
    px[n + at] = std::clamp(px[n + at] * (1 - alpha) + cg * alpha, 0.0, 1.0);
    px[2 * n + at] = std::clamp(px[2 * n + at] * (1 - alpha) + cb * alpha, 0.0, 1.0);
  }

  void fill_rect(const BoundingBox& b, double cr, double cg, double cb) {
    if (b.empty) return;
    for (int r = static_cast<int>(std::floor(b.r)); r < static_cast<int>(std::ceil(b.r2())); ++r)
      for (int c = static_cast<int>(std::floor(b.c)); c < static_cast<int>(std::ceil(b.c2())); ++c)
        blend(r, c, cr, cg, cb);
  }

  void checker_rect(const BoundingBox& b, double cr, double cg, double cb, double ar, double ag, double ab) {
    if (b.empty) return;
    for (int r = static_cast<int>(std::floor(b.r)); r < static_cast<int>(std::ceil(b.r2())); ++r)
      for (int c = static_cast<int>(std::floor(b.c)); c < static_cast<int>(std::ceil(b.c2())); ++c) {
        const bool alt = ((r + c) & 1) != 0;
        blend(r, c, alt ? ar : cr, alt ? ag : cg, alt ? ab : cb);
      }
  }

  void thick_line(const Point2& a, const Point2& b, double width, double cr, double cg, double cb) {
    const double len = std::max(1.0, norm(sub(b, a)));
    const int steps = static_cast<int>(len * 2) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const double x = a.x + (b.x - a.x) * t;
      const double y = a.y + (b.y - a.y) * t;
      const int half = static_cast<int>(width / 2.0);
      for (int dr = -half; dr <= half; ++dr)
        for (int dc = -half; dc <= half; ++dc)
          blend(static_cast<int>(std::llround(y)) + dr, static_cast<int>(std::llround(x)) + dc, cr, cg, cb);
    }
  }
};

struct Rgb {
  double r, g, b;
};

// fixed, well-separated palette for the 10 parts (index = PartId)
const Rgb kPartPalette[kNumParts] = {
    {0.10, 0.75, 0.95},  // l.ankle  cyan
    {0.05, 0.35, 0.90},  // r.ankle  blue
    {0.20, 0.85, 0.25},  // l.knee   green
    {0.05, 0.50, 0.15},  // r.knee   dark green
    {0.95, 0.90, 0.15},  // l.wrist  yellow
    {0.95, 0.55, 0.10},  // r.wrist  orange
    {0.85, 0.20, 0.75},  // l.elbow  magenta
    {0.55, 0.10, 0.85},  // r.elbow  purple
    {0.90, 0.15, 0.15},  // neck     red
    {0.60, 0.40, 0.15},  // pelvis   brown
};

const Rgb kObjectColor{0.80, 0.62, 0.20};
const Rgb kObjectAlt{0.55, 0.38, 0.10};

void render_scene(Scene& scene, const GenConfig& cfg, Rng& rng) {
  const int canvas = cfg.canvas;
  scene.image = Tensor({3, canvas, canvas});
  Painter paint{&scene.image, canvas};

  // background: muted base + 8px tiles + a little clutter
  const double base_r = rng.uniform(0.10, 0.30), base_g = rng.uniform(0.10, 0.30), base_b = rng.uniform(0.10, 0.30);
  for (int tr = 0; tr < (canvas + 7) / 8; ++tr)
    for (int tc = 0; tc < (canvas + 7) / 8; ++tc) {
      const double jr = rng.uniform(-0.05, 0.05), jg = rng.uniform(-0.05, 0.05), jb = rng.uniform(-0.05, 0.05);
      for (int r = tr * 8; r < std::min(canvas, tr * 8 + 8); ++r)
        for (int c = tc * 8; c < std::min(canvas, tc * 8 + 8); ++c)
          paint.blend(r, c, base_r + jr, base_g + jg, base_b + jb);
    }
  const int clutter = rng.uniform_int(0, 3);
  for (int i = 0; i < clutter; ++i) {
    BoundingBox b;
    b.r = rng.uniform(0, canvas * 0.9);
    b.c = rng.uniform(0, canvas * 0.9);
    b.h = rng.uniform(3, canvas * 0.25);
    b.w = rng.uniform(3, canvas * 0.25);
    paint.fill_rect(clip_box(b, canvas), rng.uniform(0.05, 0.40), rng.uniform(0.05, 0.40), rng.uniform(0.05, 0.40));
  }

  // objects under the persons
  for (const BoundingBox& obj : scene.objects)
    paint.checker_rect(obj, kObjectColor.r, kObjectColor.g, kObjectColor.b, kObjectAlt.r, kObjectAlt.g, kObjectAlt.b);

  for (std::size_t pi = 0; pi < scene.persons.size(); ++pi) {
    const Keypoints& kp = scene.persons[pi].keypoints;
    const double t = torso_length(kp);
    const double body_r = 0.40 + rng.uniform(-0.06, 0.06);
    const double body_g = 0.34 + rng.uniform(-0.06, 0.06);
    const double body_b = 0.28 + rng.uniform(-0.06, 0.06);

    const double limb_w = std::max(2.0, t * 0.12);
    paint.thick_line(kp.pts[kNeck], kp.pts[kPelvis], limb_w + 1, body_r, body_g, body_b);
    paint.thick_line(kp.pts[kNeck], kp.pts[kLElbow], limb_w, body_r, body_g, body_b);
    paint.thick_line(kp.pts[kLElbow], kp.pts[kLWrist], limb_w, body_r, body_g, body_b);
    paint.thick_line(kp.pts[kNeck], kp.pts[kRElbow], limb_w, body_r, body_g, body_b);
    paint.thick_line(kp.pts[kRElbow], kp.pts[kRWrist], limb_w, body_r, body_g, body_b);
    paint.thick_line(kp.pts[kPelvis], kp.pts[kLKnee], limb_w, body_r, body_g, body_b);
    paint.thick_line(kp.pts[kLKnee], kp.pts[kLAnkle], limb_w, body_r, body_g, body_b);
    paint.thick_line(kp.pts[kPelvis], kp.pts[kRKnee], limb_w, body_r, body_g, body_b);
    paint.thick_line(kp.pts[kRKnee], kp.pts[kRAnkle], limb_w, body_r, body_g, body_b);

    // part blobs
    const double blob = std::max(3.0, 0.28 * t);
    for (int p = 0; p < kNumParts; ++p) {
      const Rgb& col = kPartPalette[p];
      paint.fill_rect(box_around(kp.pts[static_cast<size_t>(p)], blob, blob), col.r, col.g, col.b);
    }

    // distinct texture at predicate-involved parts: white-checker highlight
    const std::vector<std::uint8_t> labels = evaluate_person_labels(scene.persons[pi], scene.objects, cfg);
    for (int c = 0; c < cfg.classes; ++c) {
      if (!labels[static_cast<size_t>(c)]) continue;
      const ClassSpec& spec = class_table()[static_cast<size_t>(c)];
      for (int part : {spec.part_a, spec.part_b}) {
        const Rgb& col = kPartPalette[part];
        paint.checker_rect(box_around(kp.pts[static_cast<size_t>(part)], blob, blob), col.r, col.g, col.b, 0.98, 0.98,
                           0.98);
      }
    }
  }

  // mild sensor noise
  double* px = scene.image.data();
  for (std::size_t i = 0; i < scene.image.size(); ++i)
    px[i] = std::clamp(px[i] + rng.uniform(-0.02, 0.02), 0.0, 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// scene assembly

Scene generate_scene(std::uint64_t seed, const GenConfig& cfg) {
  cfg.validate();
  Rng rng(seed * 0x0123456789abcdefull + 0x5bd1e995u);
  const int canvas = cfg.canvas;

  Scene scene;
  const int n_persons = rng.uniform_int(cfg.min_persons, cfg.max_persons);

  // horizontal bands keep persons mostly apart
  std::vector<int> band(static_cast<size_t>(n_persons));
  for (int i = 0; i < n_persons; ++i) band[static_cast<size_t>(i)] = i;
  for (int i = n_persons - 1; i > 0; --i) std::swap(band[static_cast<size_t>(i)], band[static_cast<size_t>(rng.uniform_int(0, i))]);

  std::vector<std::vector<int>> person_acts;
  for (int p = 0; p < n_persons; ++p) {
    // choose activities
    std::vector<int> acts;
    if (rng.bernoulli(cfg.act_prob)) {
      const int first = rng.uniform_int(0, cfg.classes - 1);
      acts.push_back(first);
      if (rng.bernoulli(cfg.second_act_prob)) {
        const int second = rng.uniform_int(0, cfg.classes - 1);
        if (second != first && compatible(class_resources(first), class_resources(second))) acts.push_back(second);
      }
    }
    person_acts.push_back(acts);

    const double t = canvas * (n_persons == 1 ? rng.uniform(0.20, 0.28) : rng.uniform(0.17, 0.24));
    const double reach = 1.25 * t;  // worst-case limb extent plus part-box slack

    PosedPerson posed;
    bool placed = false;
    for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
      BodyFrame f;
      f.t = t;
      const double tilt = rng.uniform(-0.12, 0.12);
      f.up = {std::sin(tilt), -std::cos(tilt)};
      f.right = {-f.up.y, f.up.x};
      // prefer the person's band, but never squeeze below the reach margin
      const double band_w = static_cast<double>(canvas) / n_persons;
      double x_lo = std::max(band[static_cast<size_t>(p)] * band_w + 0.2 * band_w, reach);
      double x_hi = std::min((band[static_cast<size_t>(p)] + 1) * band_w - 0.2 * band_w, canvas - reach);
      if (x_lo >= x_hi) {
        x_lo = reach;
        x_hi = canvas - reach;
      }
      f.pelvis = {rng.uniform(x_lo, x_hi), rng.uniform(1.35 * t, canvas - 1.55 * t)};
      f.neck = {f.pelvis.x + t * f.up.x, f.pelvis.y + t * f.up.y};

      posed = pose_person(f, acts, cfg, rng);

      // the whole figure (plus part boxes) must fit the canvas
      const double margin = 0.30 * t;
      bool ok = true;
      for (const Point2& pt : posed.kp.pts)
        if (pt.x < margin || pt.x > canvas - margin || pt.y < margin || pt.y > canvas - margin) ok = false;
      if (!ok) continue;
      placed = true;
    }
    if (!placed) {
      const std::string cname = acts.empty() ? std::string("(none)") : std::string(class_table()[static_cast<size_t>(acts[0])].name);
      throw GenerationError("class " + cname + ": could not place a satisfying pose on canvas " +
                            std::to_string(canvas));
    }

    PersonInstance inst;
    inst.keypoints = posed.kp;
    // person box: part boxes plus a small margin
    const PartLayout layout = part_boxes_from_keypoints(posed.kp, cfg.part_ratio);
    BoundingBox pb = layout.parts[0];
    for (int q = 1; q < kNumParts; ++q) pb = union_box(pb, layout.parts[static_cast<size_t>(q)]);
    pb.r -= 1;
    pb.c -= 1;
    pb.h += 2;
    pb.w += 2;
    inst.box = clip_box(pb, canvas);
    scene.persons.push_back(inst);

    for (const BoundingBox& obj : posed.activity_objects)
      if (static_cast<int>(scene.objects.size()) < cfg.max_objects) scene.objects.push_back(clip_box(obj, canvas));
  }

  // distractor objects
  const int room = cfg.max_objects - static_cast<int>(scene.objects.size());
  const int extra = std::min(room, rng.uniform_int(0, cfg.distractor_max));
  for (int i = 0; i < extra; ++i) {
    BoundingBox b;
    b.h = rng.uniform(canvas * 0.08, canvas * 0.22);
    b.w = rng.uniform(canvas * 0.08, canvas * 0.22);
    b.r = rng.uniform(0.0, canvas - b.h);
    b.c = rng.uniform(0.0, canvas - b.w);
    const BoundingBox clipped = clip_box(b, canvas);
    if (!clipped.empty) scene.objects.push_back(clipped);
  }
  // drop empty boxes that clipping may have produced
  scene.objects.erase(std::remove_if(scene.objects.begin(), scene.objects.end(),
                                     [](const BoundingBox& b) { return b.empty; }),
                      scene.objects.end());

  // labels are evaluated from the final geometry; image label = OR over persons
  scene.labels.assign(static_cast<size_t>(cfg.classes), 0);
  for (std::size_t p = 0; p < scene.persons.size(); ++p) {
    const auto person_labels = evaluate_person_labels(scene.persons[p], scene.objects, cfg);
    for (int c = 0; c < cfg.classes; ++c) {
      if (!person_labels[static_cast<size_t>(c)]) continue;
      if (!scene.labels[static_cast<size_t>(c)]) {
        scene.labels[static_cast<size_t>(c)] = 1;
        PlantedPair pp;
        pp.cls = c;
        pp.person = static_cast<int>(p);  // lowest satisfying person
        pp.pair = class_table()[static_cast<size_t>(c)].pair_index();
        scene.planted.push_back(pp);
      }
    }
  }

  render_scene(scene, cfg, rng);
  return scene;
}

std::vector<Scene> generate_scenes(std::uint64_t seed, int n, const GenConfig& cfg) {
  if (n < 1) throw ContractError("generate_scenes: n must be >= 1");
  std::vector<Scene> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(generate_scene(seed + static_cast<std::uint64_t>(i), cfg));
  return out;
}

// ---------------------------------------------------------------------------
// dataset file io

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (static_cast<std::size_t>(is.gcount()) != sizeof(T)) throw IoError(std::string("dataset: truncated ") + what);
  return v;
}

void put_box(std::ostream& os, const BoundingBox& b) {
  put<std::uint8_t>(os, b.empty ? 1 : 0);
  put<double>(os, b.r);
  put<double>(os, b.c);
  put<double>(os, b.h);
  put<double>(os, b.w);
}

BoundingBox get_box(std::istream& is) {
  BoundingBox b;
  b.empty = get<std::uint8_t>(is, "box flag") != 0;
  b.r = get<double>(is, "box r");
  b.c = get<double>(is, "box c");
  b.h = get<double>(is, "box h");
  b.w = get<double>(is, "box w");
  return b;
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("dataset: cannot open for writing: " + path);
  os.write("PBPD", 4);
  put<std::uint32_t>(os, kDatasetVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.scenes.size()));
  put<std::uint32_t>(os, ds.classes);
  put<std::uint32_t>(os, ds.canvas);
  for (std::uint32_t c = 0; c < ds.classes; ++c) put<std::uint32_t>(os, ds.class_pairs[c]);
  put<std::uint64_t>(os, ds.digest);

  for (const Scene& s : ds.scenes) {
    os.write(reinterpret_cast<const char*>(s.image.data()),
             static_cast<std::streamsize>(s.image.size() * sizeof(double)));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(s.persons.size()));
    for (const PersonInstance& p : s.persons) {
      put_box(os, p.box);
      for (int q = 0; q < kNumParts; ++q) {
        put<double>(os, p.keypoints.pts[static_cast<size_t>(q)].x);
        put<double>(os, p.keypoints.pts[static_cast<size_t>(q)].y);
        put<std::uint8_t>(os, p.keypoints.visible[static_cast<size_t>(q)] ? 1 : 0);
      }
    }
    put<std::uint8_t>(os, static_cast<std::uint8_t>(s.objects.size()));
    for (const BoundingBox& b : s.objects) put_box(os, b);
    for (std::uint32_t c = 0; c < ds.classes; ++c) put<std::uint8_t>(os, s.labels[c]);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(s.planted.size()));
    for (const PlantedPair& pp : s.planted) {
      put<std::uint8_t>(os, static_cast<std::uint8_t>(pp.cls));
      put<std::uint8_t>(os, static_cast<std::uint8_t>(pp.person));
      put<std::uint8_t>(os, static_cast<std::uint8_t>(pp.pair));
    }
  }
  if (!os) throw IoError("dataset: write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("dataset: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, "PBPD", 4) != 0) throw IoError("dataset: bad magic in " + path);
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kDatasetVersion) throw IoError("dataset: unsupported version " + std::to_string(version));

  Dataset ds;
  const auto count = get<std::uint32_t>(is, "scene count");
  ds.classes = get<std::uint32_t>(is, "class count");
  ds.canvas = get<std::uint32_t>(is, "canvas");
  ds.class_pairs.resize(ds.classes);
  for (std::uint32_t c = 0; c < ds.classes; ++c) ds.class_pairs[c] = get<std::uint32_t>(is, "class pair");
  ds.digest = get<std::uint64_t>(is, "digest");

  ds.scenes.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Scene& s = ds.scenes[i];
    s.image = Tensor({3, static_cast<int>(ds.canvas), static_cast<int>(ds.canvas)});
    is.read(reinterpret_cast<char*>(s.image.data()), static_cast<std::streamsize>(s.image.size() * sizeof(double)));
    if (static_cast<std::size_t>(is.gcount()) != s.image.size() * sizeof(double))
      throw IoError("dataset: truncated image");
    const int np = get<std::uint8_t>(is, "person count");
    s.persons.resize(static_cast<size_t>(np));
    for (PersonInstance& p : s.persons) {
      p.box = get_box(is);
      for (int q = 0; q < kNumParts; ++q) {
        p.keypoints.pts[static_cast<size_t>(q)].x = get<double>(is, "kp x");
        p.keypoints.pts[static_cast<size_t>(q)].y = get<double>(is, "kp y");
        p.keypoints.visible[static_cast<size_t>(q)] = get<std::uint8_t>(is, "kp vis") != 0;
      }
    }
    const int no = get<std::uint8_t>(is, "object count");
    s.objects.resize(static_cast<size_t>(no));
    for (BoundingBox& b : s.objects) b = get_box(is);
    s.labels.resize(ds.classes);
    for (std::uint32_t c = 0; c < ds.classes; ++c) s.labels[c] = get<std::uint8_t>(is, "label");
    const int npl = get<std::uint8_t>(is, "planted count");
    s.planted.resize(static_cast<size_t>(npl));
    for (PlantedPair& pp : s.planted) {
      pp.cls = get<std::uint8_t>(is, "planted class");
      pp.person = get<std::uint8_t>(is, "planted person");
      pp.pair = get<std::uint8_t>(is, "planted pair");
    }
  }
  return ds;
}

Dataset generate_dataset(std::uint64_t seed, int n, const GenConfig& cfg, const std::string& path) {
  cfg.validate();
  Dataset ds;
  ds.classes = static_cast<std::uint32_t>(cfg.classes);
  ds.canvas = static_cast<std::uint32_t>(cfg.canvas);
  for (int c = 0; c < cfg.classes; ++c)
    ds.class_pairs.push_back(static_cast<std::uint32_t>(class_table()[static_cast<size_t>(c)].pair_index()));
  ds.digest = cfg.digest();
  ds.scenes = generate_scenes(seed, n, cfg);
  write_dataset(path, ds);
  return ds;
}

}  // namespace pbpa
