#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace crossview {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

// World units are millimetres. Pixel coordinates are continuous with the
// origin at the centre of the top-left pixel, x to the right, y down.

/// Calibrated pinhole camera. The extrinsics map world to camera frame:
/// X_cam = R * X_world + t.
class CameraParams {
 public:
  CameraParams(int id, const Mat3& intrinsics, const Mat3& rotation, const Vec3& translation,
               int width, int height);

  int id() const { return id_; }
  const Mat3& intrinsics() const { return intrinsics_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  int width() const { return width_; }
  int height() const { return height_; }

  /// Camera centre in world coordinates, -R^T t.
  Vec3 center() const { return -rotation_.transpose() * translation_; }
  Vec3 to_camera(const Vec3& world) const { return rotation_ * world + translation_; }
  double depth(const Vec3& world) const { return rotation_.row(2).dot(world) + translation_.z(); }
  Mat34 projection_matrix() const;
  double mean_focal() const { return 0.5 * (intrinsics_(0, 0) + intrinsics_(1, 1)); }
  const Mat3& inverse_intrinsics() const { return inverse_intrinsics_; }

  /// True when the pixel lies inside [-0.5, width-0.5] x [-0.5, height-0.5].
  bool contains(const Vec2& pixel) const;

 private:
  int id_;
  Mat3 intrinsics_;
  Mat3 rotation_;
  Vec3 translation_;
  int width_;
  int height_;
  Mat3 inverse_intrinsics_;
};

struct Ray3D {
  Vec3 origin;
  Vec3 direction;  // unit length

  Vec3 at(double lambda) const { return origin + lambda * direction; }
  double distance_to(const Vec3& point) const;
};

/// Line a*x + b*y + c = 0 with a^2 + b^2 = 1.
struct EpipolarLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double signed_distance(const Vec2& pixel) const { return a * pixel.x() + b * pixel.y() + c; }
  double distance(const Vec2& pixel) const;
};

inline constexpr double kMinDepth = 1e-6;
inline constexpr double kMinBaseline = 1e-6;
inline constexpr double kMaxConditionNumber = 1e12;

/// Throws DegenerateDepth when the camera-frame depth is <= 1e-6 mm.
Vec2 project(const Vec3& point, const CameraParams& camera);

/// Non-throwing variant; empty for points at or behind the image plane.
std::optional<Vec2> try_project(const Vec3& point, const CameraParams& camera);

Ray3D back_project_ray(const Vec2& pixel, const CameraParams& camera);

/// F with y_v^T F y_u = 0 for corresponding homogeneous pixels, scaled to unit
/// Frobenius norm. Throws CoincidentCameras for baselines <= 1e-6 mm.
Mat3 fundamental_matrix(const CameraParams& cam_u, const CameraParams& cam_v);

/// Line in view v on which the correspondence of `pixel_u` must lie.
EpipolarLine epipolar_line(const Vec2& pixel_u, const CameraParams& cam_u,
                           const CameraParams& cam_v);

/// Empty when pixel_u is the epipole (F * y_u vanishes).
std::optional<EpipolarLine> epipolar_line(const Mat3& fundamental, const Vec2& pixel_u);

struct Observation {
  CameraParams camera;
  Vec2 pixel;
};

struct Triangulation {
  Vec3 point = Vec3::Zero();
  double residual_px = 0.0;          // RMS reprojection error over used observations
  std::vector<std::size_t> used;     // indices of observations kept in the solve
};

/// Linear (DLT) triangulation from >= 2 observations. Observations whose
/// camera sees the solution behind it are dropped and the solve repeated.
/// Throws IllConditioned on near-parallel rays or when fewer than two
/// observations remain.
Triangulation triangulate(std::span<const Observation> observations);

/// Standard look-at construction: camera at `eye` looking at `target`, with
/// `up` mapping to image -y.
CameraParams look_at_camera(int id, const Vec3& eye, const Vec3& target, const Vec3& up,
                            double focal, int width, int height);

}  // namespace crossview
