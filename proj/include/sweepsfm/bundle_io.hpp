#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sweepsfm/geometry.hpp"
#include "sweepsfm/image.hpp"
#include "sweepsfm/refiner.hpp"

namespace sweepsfm {

/// On-disk scene: images, shared intrinsics, initial poses/depths and
/// (optionally) ground truth. See README for the directory layout.
struct Bundle {
  CameraIntrinsics intrinsics;
  std::vector<Image> images;
  std::vector<Pose> init_poses;
  std::vector<DepthMap> init_depths;  // feature resolution
  std::optional<std::vector<Pose>> gt_poses;
  std::optional<std::vector<DepthMap>> gt_depths;
};

// ---- primitive formats ----------------------------------------------------

/// Grayscale PFM, scale -1.0 (little-endian), rows bottom-to-top. Invalid
/// depths are stored as 0.
DepthMap load_pfm(const std::filesystem::path& path);
void save_pfm(const DepthMap& depth, const std::filesystem::path& path);

/// 16-bit grayscale PNG holding millimeters; 0 marks invalid pixels.
DepthMap load_depth_png16(const std::filesystem::path& path);
void save_depth_png16(const DepthMap& depth, const std::filesystem::path& path);

/// Binary PGM (P5) / PPM (P6), maxval 255.
Image load_pnm(const std::filesystem::path& path);
void save_pnm(const Image& image, const std::filesystem::path& path);

/// One pose per line, "qw qx qy qz tx ty tz", world-to-camera. Quaternions
/// deviating from unit norm by more than 1e-3 are rejected.
std::vector<Pose> load_pose_file(const std::filesystem::path& path);
void save_pose_file(const std::vector<Pose>& poses, const std::filesystem::path& path);

CameraIntrinsics load_intrinsics(const std::filesystem::path& path, int width, int height);
void save_intrinsics(const CameraIntrinsics& k, const std::filesystem::path& path);

/// ASCII PLY, XYZ + uchar RGB.
void write_ply(const std::filesystem::path& path, const std::vector<Eigen::Vector3d>& points,
               const std::vector<std::array<uint8_t, 3>>& colors);

/// Unprojects every valid depth pixel through `k` (at depth resolution) into
/// the world frame of the given world-to-camera pose; `image`, when present
/// and larger than the depth map, is sampled at the matching block centers
/// for the gray color.
void depth_to_points(const DepthMap& depth, const CameraIntrinsics& k, const Pose& pose,
                     const Image* image, std::vector<Eigen::Vector3d>& points,
                     std::vector<std::array<uint8_t, 3>>& colors);

/// Shortest-round-trip decimal for doubles; all text formats use this.
std::string fmt_double(double v);

// ---- bundles and results --------------------------------------------------

Bundle load_bundle(const std::filesystem::path& dir);

/// Writes poses.txt, depth/%04d.pfm and cloud.ply.
void save_results(const SceneState& state, const std::filesystem::path& dir);

/// Reads a results directory back (poses + refined depths).
void load_results(const std::filesystem::path& dir, std::vector<Pose>& poses,
                  std::vector<DepthMap>& depths);

}  // namespace sweepsfm
