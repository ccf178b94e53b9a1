#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sweepsfm/geometry.hpp"
#include "sweepsfm/image.hpp"

namespace sweepsfm {

/// Deterministic uniform generator (mt19937_64 with a fixed bit mapping so
/// streams are reproducible independent of the standard library's
/// distribution implementations).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// -1 or +1.
  double sign() { return uniform() < 0.5 ? -1.0 : 1.0; }

 private:
  uint64_t next();
  uint64_t state_;
};

struct Texture {
  enum class Kind { kChecker, kNoise, kFlat };
  Kind kind = Kind::kChecker;
  double scale = 0.5;     // cell size (checker) / feature size (noise), meters
  double albedo_a = 0.9;
  double albedo_b = 0.15;
  uint64_t seed = 0;      // noise lattice seed
};

struct Primitive {
  enum class Kind { kPlane, kSphere };
  Kind kind = Kind::kPlane;
  Pose pose;                 // local-to-world; plane is z=0 in local frame
  Eigen::Vector2d extent{1.0, 1.0};  // plane half-sizes; spheres use extent.x as radius
  Texture texture;
};

/// Lambertian scene with a fixed world-space light, so shading is
/// view-independent and photo-consistency holds exactly.
struct SceneSpec {
  std::vector<Primitive> primitives;
  Eigen::Vector3d light_dir{0.3, -0.4, -0.86};  // direction toward the light
  double ambient = 0.3;
};

struct RenderResult {
  Image image;
  DepthMap depth;
};

/// Ray-casts the scene through pixel centers of K from `cam` (world-to-camera).
/// Depth is camera-frame z of the nearest hit; pixels whose ray misses every
/// primitive are invalid.
RenderResult render(const SceneSpec& spec, const CameraIntrinsics& K, const Pose& cam);

/// Depth channel only (cheaper; used for ground truth at feature resolution).
DepthMap render_depth(const SceneSpec& spec, const CameraIntrinsics& K, const Pose& cam);

struct PerturbResult {
  Pose pose;
  DepthMap depth;
};

/// Deterministic initialization noise: per-axis Euler/translation offsets of
/// exactly the given magnitudes with seed-chosen signs, and per-pixel
/// multiplicative depth noise uniform in [1 - depth_noise, 1 + depth_noise].
PerturbResult perturb(const Pose& pose, const DepthMap& depth,
                      const Eigen::Vector3d& rot_noise, const Eigen::Vector3d& trans_noise,
                      double depth_noise, uint64_t seed);

/// Parses the key=value scene description (see README for the schema).
SceneSpec parse_scene_spec(std::istream& in);
std::string write_scene_spec(const SceneSpec& spec);

/// Built-in scene layouts: "plane", "box", "spheres", "patch" (30% textureless
/// rectangle), "random" (seed-varied mix). Throws on unknown names.
SceneSpec preset_scene(const std::string& name, uint64_t seed);

/// n camera poses (world-to-camera) with lateral/forward baselines around
/// `baseline` and a few degrees of rotation; frame 0 is the identity.
std::vector<Pose> preset_cameras(int n, uint64_t seed, double baseline);

}  // namespace sweepsfm
