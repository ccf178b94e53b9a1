#include "sweepsfm/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace sweepsfm {

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double cx_, double cy_,
                                   int width_, int height_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("CameraIntrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("CameraIntrinsics: image size must be positive");
  }
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    throw std::invalid_argument("CameraIntrinsics: principal point outside image");
  }
}

CameraIntrinsics CameraIntrinsics::quarter() const {
  return CameraIntrinsics(fx / 4.0, fy / 4.0, (cx - 1.5) / 4.0, (cy - 1.5) / 4.0,
                          width / 4, height / 4);
}

Pose::Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) : q_(q), t_(t) {
  const double n = q_.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("Pose: quaternion must be nonzero and finite");
  }
  // Keep already-unit quaternions bit-exact; renormalize only real drift.
  if (std::abs(n - 1.0) > 1e-12) {
    q_.coeffs() /= n;
  }
}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& t)
    : q_(Eigen::Quaterniond::Identity()), t_(t) {
  const Eigen::Matrix3d rtr = rotation.transpose() * rotation;
  if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw std::invalid_argument("Pose: matrix is not a rotation");
  }
  q_ = Eigen::Quaterniond(rotation);
  q_.normalize();
}

Pose Pose::inverse() const {
  const Eigen::Quaterniond qi = q_.conjugate();
  return Pose(qi, qi * (-t_));
}

Pose compose(const Pose& a, const Pose& b) {
  Eigen::Quaterniond q = a.quaternion() * b.quaternion();
  q.normalize();
  return Pose(q, a.quaternion() * b.translation() + a.translation());
}

Pose relative(const Pose& target, const Pose& source) {
  return compose(source, target.inverse());
}

PixelCoord project(const CameraIntrinsics& K, const Eigen::Vector3d& p) {
  if (!(p.z() > kZEps)) {
    return {};
  }
  PixelCoord out;
  out.u = K.fx * p.x() / p.z() + K.cx;
  out.v = K.fy * p.y() / p.z() + K.cy;
  out.valid = true;
  return out;
}

Eigen::Vector3d unproject(const CameraIntrinsics& K, double u, double v, double depth) {
  if (!(depth > 0.0)) {
    throw std::invalid_argument("unproject: depth must be positive");
  }
  return {(u - K.cx) / K.fx * depth, (v - K.cy) / K.fy * depth, depth};
}

PixelCoord warp_coord(const CameraIntrinsics& K, double u, double v, double depth,
                      const Pose& rel) {
  const Eigen::Vector3d p = rel.apply(unproject(K, u, v, depth));
  PixelCoord out = project(K, p);
  if (out.valid &&
      (out.u < 0.0 || out.u >= K.width || out.v < 0.0 || out.v >= K.height)) {
    out.valid = false;
  }
  return out;
}

Eigen::Matrix3d euler_zyx_to_rotation(const Eigen::Vector3d& e) {
  return (Eigen::AngleAxisd(e.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(e.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(e.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

Eigen::Vector3d rotation_to_euler_zyx(const Eigen::Matrix3d& r) {
  const double sy = -r(2, 0);
  const double ey = std::asin(std::clamp(sy, -1.0, 1.0));
  double ex, ez;
  if (std::abs(sy) < 1.0 - 1e-12) {
    ex = std::atan2(r(2, 1), r(2, 2));
    ez = std::atan2(r(1, 0), r(0, 0));
  } else {
    ex = std::atan2(-r(1, 2), r(1, 1));
    ez = 0.0;
  }
  return {ex, ey, ez};
}

double rotation_angle(const Eigen::Matrix3d& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace sweepsfm
