#include "crossview/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "crossview/error.hpp"

namespace crossview {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace

CameraParams::CameraParams(int id, const Mat3& intrinsics, const Mat3& rotation,
                           const Vec3& translation, int width, int height)
    : id_(id),
      intrinsics_(intrinsics),
      rotation_(rotation),
      translation_(translation),
      width_(width),
      height_(height) {
  const double orthonormality = (rotation_.transpose() * rotation_ - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(orthonormality <= 1e-9) || !(std::abs(rotation_.determinant() - 1.0) <= 1e-9)) {
    throw Error(ErrorCode::kInvalidArgument,
                "camera " + std::to_string(id) + ": rotation is not a proper orthonormal matrix");
  }
  if (!(intrinsics_(0, 0) > 0.0) || !(intrinsics_(1, 1) > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "camera " + std::to_string(id) + ": focal lengths must be positive");
  }
  if (intrinsics_(1, 0) != 0.0 || intrinsics_(2, 0) != 0.0 || intrinsics_(2, 1) != 0.0 ||
      intrinsics_(2, 2) != 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "camera " + std::to_string(id) + ": intrinsics must be upper triangular with K(2,2)=1");
  }
  if (width_ <= 0 || height_ <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "camera " + std::to_string(id) + ": image dimensions must be positive");
  }
  if (!translation_.allFinite() || !intrinsics_.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "camera " + std::to_string(id) + ": non-finite parameters");
  }
  inverse_intrinsics_ = intrinsics_.inverse();
}

Mat34 CameraParams::projection_matrix() const {
  Mat34 rt;
  rt.leftCols<3>() = rotation_;
  rt.col(3) = translation_;
  return intrinsics_ * rt;
}

bool CameraParams::contains(const Vec2& pixel) const {
  return pixel.x() >= -0.5 && pixel.x() <= width_ - 0.5 && pixel.y() >= -0.5 &&
         pixel.y() <= height_ - 0.5;
}

double Ray3D::distance_to(const Vec3& point) const {
  return direction.cross(point - origin).norm();
}

double EpipolarLine::distance(const Vec2& pixel) const {
  return std::abs(signed_distance(pixel));
}

std::optional<Vec2> try_project(const Vec3& point, const CameraParams& camera) {
  const Vec3 cam = camera.to_camera(point);
  if (!(cam.z() > kMinDepth)) return std::nullopt;
  const Vec3 h = camera.intrinsics() * cam;
  return Vec2(h.x() / h.z(), h.y() / h.z());
}

Vec2 project(const Vec3& point, const CameraParams& camera) {
  auto pixel = try_project(point, camera);
  if (!pixel) {
    throw Error(ErrorCode::kDegenerateDepth,
                "point is at or behind the image plane of camera " + std::to_string(camera.id()));
  }
  return *pixel;
}

Ray3D back_project_ray(const Vec2& pixel, const CameraParams& camera) {
  const Vec3 cam_dir = camera.inverse_intrinsics() * Vec3(pixel.x(), pixel.y(), 1.0);
  return Ray3D{camera.center(), (camera.rotation().transpose() * cam_dir).normalized()};
}

Mat3 fundamental_matrix(const CameraParams& cam_u, const CameraParams& cam_v) {
  if ((cam_u.center() - cam_v.center()).norm() <= kMinBaseline) {
    throw Error(ErrorCode::kCoincidentCameras,
                "cameras " + std::to_string(cam_u.id()) + " and " + std::to_string(cam_v.id()) +
                    " share a centre");
  }
  // Relative pose u -> v: X_v = R X_u + t.
  const Mat3 rel_rotation = cam_v.rotation() * cam_u.rotation().transpose();
  const Vec3 rel_translation = cam_v.translation() - rel_rotation * cam_u.translation();
  const Mat3 essential = skew(rel_translation) * rel_rotation;
  Mat3 f = cam_v.inverse_intrinsics().transpose() * essential * cam_u.inverse_intrinsics();
  return f / f.norm();
}

std::optional<EpipolarLine> epipolar_line(const Mat3& fundamental, const Vec2& pixel_u) {
  const Vec3 l = fundamental * Vec3(pixel_u.x(), pixel_u.y(), 1.0);
  const double n = std::hypot(l.x(), l.y());
  if (!(n > 1e-300)) return std::nullopt;
  return EpipolarLine{l.x() / n, l.y() / n, l.z() / n};
}

EpipolarLine epipolar_line(const Vec2& pixel_u, const CameraParams& cam_u,
                           const CameraParams& cam_v) {
  auto line = epipolar_line(fundamental_matrix(cam_u, cam_v), pixel_u);
  if (!line) {
    throw Error(ErrorCode::kDegenerateDepth, "pixel coincides with the epipole; no epipolar line");
  }
  return *line;
}

namespace {

// Solves the homogeneous DLT system for the given subset. World coordinates
// are shifted and scaled by the camera-centre spread so the system is
// well-scaled regardless of the rig size.
Vec3 solve_dlt(std::span<const Observation> obs, const std::vector<std::size_t>& subset) {
  Vec3 mean = Vec3::Zero();
  for (std::size_t k : subset) mean += obs[k].camera.center();
  mean /= static_cast<double>(subset.size());
  double scale = 0.0;
  for (std::size_t k : subset) scale += (obs[k].camera.center() - mean).norm();
  scale /= static_cast<double>(subset.size());
  if (!(scale > kMinBaseline)) scale = 1.0;

  Eigen::Matrix4d denormalize = Eigen::Matrix4d::Identity();
  denormalize.topLeftCorner<3, 3>() *= scale;
  denormalize.topRightCorner<3, 1>() = mean;

  Eigen::MatrixXd design(2 * subset.size(), 4);
  Eigen::Index row = 0;
  for (std::size_t k : subset) {
    const Eigen::Matrix<double, 3, 4> p = obs[k].camera.projection_matrix() * denormalize;
    const Vec2& x = obs[k].pixel;
    Eigen::RowVector4d r1 = x.x() * p.row(2) - p.row(0);
    Eigen::RowVector4d r2 = x.y() * p.row(2) - p.row(1);
    design.row(row++) = r1 / r1.norm();
    design.row(row++) = r2 / r2.norm();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // Normal-matrix (A^T A) condition number over the three non-null directions.
  const double ratio = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();
  if (!(ratio * ratio <= kMaxConditionNumber)) {
    throw Error(ErrorCode::kIllConditioned, "triangulation rays are (nearly) parallel");
  }
  const Eigen::Vector4d h = svd.matrixV().col(3);
  if (!(std::abs(h(3)) > 1e-12 * h.head<3>().norm())) {
    throw Error(ErrorCode::kIllConditioned, "triangulated point is at infinity");
  }
  return scale * (h.head<3>() / h(3)) + mean;
}

}  // namespace

Triangulation triangulate(std::span<const Observation> observations) {
  if (observations.size() < 2) {
    throw Error(ErrorCode::kIllConditioned, "triangulation needs at least two observations");
  }
  std::vector<std::size_t> subset(observations.size());
  for (std::size_t k = 0; k < subset.size(); ++k) subset[k] = k;

  Vec3 point;
  for (;;) {
    point = solve_dlt(observations, subset);
    std::vector<std::size_t> in_front;
    for (std::size_t k : subset) {
      if (observations[k].camera.depth(point) > kMinDepth) in_front.push_back(k);
    }
    if (in_front.size() == subset.size()) break;
    if (in_front.size() < 2) {
      throw Error(ErrorCode::kIllConditioned,
                  "fewer than two observations see the triangulated point in front of the camera");
    }
    subset = std::move(in_front);
  }

  double sq = 0.0;
  for (std::size_t k : subset) {
    sq += (project(point, observations[k].camera) - observations[k].pixel).squaredNorm();
  }
  return Triangulation{point, std::sqrt(sq / static_cast<double>(subset.size())), std::move(subset)};
}

CameraParams look_at_camera(int id, const Vec3& eye, const Vec3& target, const Vec3& up,
                            double focal, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 rotation;
  rotation.row(0) = right;
  rotation.row(1) = down;
  rotation.row(2) = forward;
  Mat3 k = Mat3::Identity();
  k(0, 0) = focal;
  k(1, 1) = focal;
  k(0, 2) = 0.5 * (width - 1);
  k(1, 2) = 0.5 * (height - 1);
  return CameraParams(id, k, rotation, -rotation * eye, width, height);
}

}  // namespace crossview
