#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sweepsfm {

// Points closer than this to the camera plane are treated as behind the camera.
inline constexpr double kZEps = 1e-6;

/// Pinhole calibration. Pixel centers sit at integer coordinates; the valid
/// image domain is [0, width) x [0, height).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  CameraIntrinsics() = default;
  CameraIntrinsics(double fx, double fy, double cx, double cy, int width, int height);

  /// Intrinsics of the quarter-resolution feature grid. Feature cell (x, y)
  /// aggregates the 4x4 image block centered at full-resolution coordinate
  /// (4x + 1.5, 4y + 1.5), hence the 1.5-pixel shift of the principal point.
  CameraIntrinsics quarter() const;
};

/// Continuous pixel position; `valid` is false for points behind the camera
/// or (for warps) outside the image domain.
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
  bool valid = false;
};

/// Rigid SE(3) motion x_out = R * x_in + t. Rotation is kept as a unit
/// quaternion; per-frame poses in this codebase are world-to-camera.
class Pose {
 public:
  Pose() : q_(Eigen::Quaterniond::Identity()), t_(Eigen::Vector3d::Zero()) {}
  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t);
  /// Validates orthonormality (R^T R = I and det = +1 within 1e-9).
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& t);

  static Pose identity() { return Pose(); }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Eigen::Matrix3d rotation() const { return q_.toRotationMatrix(); }
  const Eigen::Vector3d& translation() const { return t_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return q_ * p + t_; }
  Pose inverse() const;
  Pose with_translation(const Eigen::Vector3d& t) const { return Pose(q_, t); }

 private:
  Eigen::Quaterniond q_;
  Eigen::Vector3d t_;
};

/// a after b: compose(a, b).apply(p) == a.apply(b.apply(p)).
Pose compose(const Pose& a, const Pose& b);

/// Motion mapping target-camera coordinates to source-camera coordinates,
/// given world-to-camera poses of both: relative(t, s) = s * t^-1.
Pose relative(const Pose& target, const Pose& source);

/// Pinhole projection of a camera-frame point. Invalid when z <= kZEps.
PixelCoord project(const CameraIntrinsics& K, const Eigen::Vector3d& p);

/// Camera-frame point at pixel (u, v) and depth d (= K^-1 [u v 1]^T * d).
/// Throws for non-positive depth.
Eigen::Vector3d unproject(const CameraIntrinsics& K, double u, double v, double depth);

/// Projects pixel (u, v) at hypothesis depth `depth` through `rel` into the
/// source view. Invalid when the transformed point is behind the source
/// camera or projects outside [0, width) x [0, height).
PixelCoord warp_coord(const CameraIntrinsics& K, double u, double v, double depth,
                      const Pose& rel);

/// Rotation from intrinsic Z-Y-X Euler angles e = (ex, ey, ez):
/// R = Rz(ez) * Ry(ey) * Rx(ex).
Eigen::Matrix3d euler_zyx_to_rotation(const Eigen::Vector3d& e);

/// Inverse of euler_zyx_to_rotation (gimbal-lock pitch clamped to +-pi/2).
Eigen::Vector3d rotation_to_euler_zyx(const Eigen::Matrix3d& r);

/// Rotation angle of R in radians, in [0, pi].
double rotation_angle(const Eigen::Matrix3d& r);

}  // namespace sweepsfm
