#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbpa/geometry.hpp"
#include "pbpa/tensor.hpp"

namespace pbpa {

// Generator knobs. All fields flow through the run config; the digest over
// them is stamped into dataset files and checkpoints so a train/test pair
// from different generator settings is rejected instead of silently mixed.
struct GenConfig {
  int classes = 12;          // first `classes` rows of the class table
  int canvas = 64;           // square image side, pixels
  int min_persons = 1;
  int max_persons = 3;
  int max_objects = 4;
  int distractor_max = 2;    // extra objects beyond activity-bound ones
  double part_ratio = 0.5;   // part-box side as a fraction of torso length
  double contact_ratio = 0.35;  // pose-contact threshold as torso fraction
  double act_prob = 0.8;     // person performs at least one activity
  double second_act_prob = 0.4;  // attempt a compatible second activity

  void validate() const;
  std::uint64_t digest() const;
};

// One synthetic class: a bound body-part pair plus a geometric predicate.
// kPoseContact: the two keypoints lie within contact_ratio * torso.
// kObjectTouch: both part boxes intersect one common object box.
struct ClassSpec {
  const char* name;
  int part_a;
  int part_b;
  enum Kind { kPoseContact, kObjectTouch } kind;
  int pair_index() const;
};

const std::vector<ClassSpec>& class_table();  // 12 entries

struct PersonInstance {
  Keypoints keypoints;
  BoundingBox box;
};

struct PlantedPair {
  int cls = 0;     // class index
  int person = 0;  // acting person
  int pair = 0;    // bound pair index in the 45-pair enumeration
};

struct Scene {
  Tensor image;  // [3, canvas, canvas]
  std::vector<PersonInstance> persons;
  std::vector<BoundingBox> objects;
  std::vector<std::uint8_t> labels;  // multi-hot over classes
  std::vector<PlantedPair> planted;  // one entry per positive label
};

// Pure predicate evaluation from stored geometry; generation and the
// label-consistency tests share this path.
std::vector<std::uint8_t> evaluate_person_labels(const PersonInstance& person,
                                                 const std::vector<BoundingBox>& objects, const GenConfig& cfg);

// Deterministic scene from (seed, cfg).
Scene generate_scene(std::uint64_t seed, const GenConfig& cfg);

// n scenes from seeds seed .. seed+n-1.
std::vector<Scene> generate_scenes(std::uint64_t seed, int n, const GenConfig& cfg);

// DatasetFile: magic "PBPD", u32 version, u32 scene count, u32 class count,
// u32 canvas, per-class u32 bound pair index, u64 gen-config digest, then the
// little-endian scene records. Round-trips bit-exactly.
inline constexpr std::uint32_t kDatasetVersion = 1;

struct Dataset {
  std::uint32_t classes = 0;
  std::uint32_t canvas = 0;
  std::vector<std::uint32_t> class_pairs;
  std::uint64_t digest = 0;
  std::vector<Scene> scenes;
};

void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);
Dataset generate_dataset(std::uint64_t seed, int n, const GenConfig& cfg, const std::string& path);

}  // namespace pbpa
