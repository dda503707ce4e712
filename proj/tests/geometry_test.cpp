#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "crossview/geometry.hpp"
#include "support.hpp"

namespace crossview {
namespace {

using testing::error_code_of;
using testing::random_camera;
using testing::random_point;
using testing::ring_rig;

TEST(Camera, RejectsInvalidParameters) {
  Mat3 k = Mat3::Identity();
  k(0, 0) = k(1, 1) = 500.0;
  const Mat3 r = Mat3::Identity();
  EXPECT_EQ(error_code_of([&] { CameraParams(0, k, 2.0 * r, Vec3::Zero(), 10, 10); }), ErrorCode::kInvalidArgument);
  Mat3 reflection = r;
  reflection(2, 2) = -1.0;
  EXPECT_EQ(error_code_of([&] { CameraParams(0, k, reflection, Vec3::Zero(), 10, 10); }), ErrorCode::kInvalidArgument);
  Mat3 bad_k = k;
  bad_k(0, 0) = -1.0;
  EXPECT_EQ(error_code_of([&] { CameraParams(0, bad_k, r, Vec3::Zero(), 10, 10); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { CameraParams(0, k, r, Vec3::Zero(), 0, 10); }), ErrorCode::kInvalidArgument);
}

TEST(Camera, CentreAndDepth) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const CameraParams cam = random_camera(rng, i);
    EXPECT_NEAR(cam.depth(cam.center()), 0.0, 1e-9);
    EXPECT_LT(cam.to_camera(cam.center()).norm(), 1e-9);
  }
}

TEST(Projection, RoundTripThroughRay) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const CameraParams cam = random_camera(rng, 0);
    const Vec3 p = random_point(rng);
    const Vec2 pixel = project(p, cam);
    const Ray3D ray = back_project_ray(pixel, cam);
    EXPECT_NEAR(ray.direction.norm(), 1.0, 1e-12);
    EXPECT_LT(ray.distance_to(p), 1e-9);
    EXPECT_GT(ray.direction.dot(p - ray.origin), 0.0);
    EXPECT_LT((project(ray.at(1234.5), cam) - pixel).norm(), 1e-9);
  }
}

TEST(Projection, BehindCameraIsDegenerate) {
  const CameraParams cam = ring_rig().front();
  const Vec3 behind = cam.center() + (cam.center() - Vec3(0.0, 0.0, 1000.0));
  EXPECT_FALSE(try_project(behind, cam).has_value());
  EXPECT_EQ(error_code_of([&] { project(behind, cam); }), ErrorCode::kDegenerateDepth);
  EXPECT_EQ(error_code_of([&] { project(cam.center(), cam); }), ErrorCode::kDegenerateDepth);
}

TEST(Projection, LookAtTargetHitsPrincipalPoint) {
  const CameraParams cam = look_at_camera(3, Vec3(1000.0, -2500.0, 1700.0), Vec3(10.0, 20.0, 900.0), Vec3::UnitZ(),
                                          500.0, 640, 480);
  const Vec2 pixel = project(Vec3(10.0, 20.0, 900.0), cam);
  EXPECT_NEAR(pixel.x(), 319.5, 1e-9);
  EXPECT_NEAR(pixel.y(), 239.5, 1e-9);
  // Up in the world maps to up (-y) in the image.
  EXPECT_LT(project(Vec3(10.0, 20.0, 1000.0), cam).y(), pixel.y());
}

TEST(Fundamental, RankTwoAndEpipolarConstraint) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const CameraParams u = random_camera(rng, 0);
    const CameraParams v = random_camera(rng, 1);
    const Mat3 f = fundamental_matrix(u, v);
    EXPECT_NEAR(f.norm(), 1.0, 1e-12);
    const Eigen::JacobiSVD<Mat3> svd(f);
    EXPECT_LT(svd.singularValues()(2), 1e-12 * svd.singularValues()(0));
    const Vec3 p = random_point(rng);
    const Vec2 xu = project(p, u);
    const Vec2 xv = project(p, v);
    const Vec3 hu(xu.x(), xu.y(), 1.0);
    const Vec3 hv(xv.x(), xv.y(), 1.0);
    const Vec3 l = f * hu;
    EXPECT_LT(std::abs(hv.dot(l)) / std::hypot(l.x(), l.y()), 1e-6);
  }
}

TEST(Fundamental, CoincidentCamerasRejected) {
  const CameraParams cam = ring_rig().front();
  EXPECT_EQ(error_code_of([&] { fundamental_matrix(cam, cam); }), ErrorCode::kCoincidentCameras);
}

TEST(Epipolar, CorrespondenceLiesOnLine) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const CameraParams u = random_camera(rng, 0);
    const CameraParams v = random_camera(rng, 1);
    const Vec3 p = random_point(rng);
    const EpipolarLine line = epipolar_line(project(p, u), u, v);
    EXPECT_NEAR(line.a * line.a + line.b * line.b, 1.0, 1e-12);
    EXPECT_LT(line.distance(project(p, v)), 1e-6);
    // Every point of the ray projects onto the same line.
    const Ray3D ray = back_project_ray(project(p, u), u);
    if (auto q = try_project(ray.at(testing::uniform(rng, 100.0, 8000.0)), v)) {
      EXPECT_LT(line.distance(*q), 1e-6);
    }
  }
}

TEST(Epipolar, EpipoleHasNoLine) {
  const auto rig = ring_rig();
  // Camera 2 sits opposite camera 0; its centre projects to camera 0's epipole.
  const Vec2 epipole = project(rig[2].center(), rig[0]);
  EXPECT_EQ(error_code_of([&] { epipolar_line(epipole, rig[0], rig[2]); }), ErrorCode::kDegenerateDepth);
  EXPECT_FALSE(epipolar_line(fundamental_matrix(rig[0], rig[2]), epipole).has_value());
}

TEST(Triangulation, NoiselessPointsRecovered) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int views = 2 + trial % 4;
    const Vec3 p = random_point(rng);
    std::vector<Observation> obs;
    while (static_cast<int>(obs.size()) < views) {
      const CameraParams cam = random_camera(rng, static_cast<int>(obs.size()));
      if (cam.depth(p) > 100.0) obs.push_back({cam, project(p, cam)});
    }
    const Triangulation t = triangulate(obs);
    EXPECT_LT((t.point - p).norm(), 1e-6) << "views=" << views;
    EXPECT_LT(t.residual_px, 1e-6);
    EXPECT_EQ(t.used.size(), obs.size());
  }
}

TEST(Triangulation, TwoViewMinimalCase) {
  const auto rig = ring_rig();
  const Vec3 p(120.0, -80.0, 1300.0);
  const std::vector<Observation> obs{{rig[0], project(p, rig[0])}, {rig[1], project(p, rig[1])}};
  EXPECT_LT((triangulate(obs).point - p).norm(), 1e-6);
}

TEST(Triangulation, PixelNoiseMonteCarlo) {
  const auto rig = ring_rig();
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> spread(-500.0, 500.0);
  double sum = 0.0, sum_sq = 0.0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    const Vec3 p(spread(rng), spread(rng), 1000.0 + spread(rng));
    std::vector<Observation> obs;
    for (const CameraParams& cam : rig) obs.push_back({cam, project(p, cam) + Vec2(noise(rng), noise(rng))});
    const double e = (triangulate(obs).point - p).norm();
    sum += e;
    sum_sq += e * e;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(std::max(0.0, sum_sq / trials - mean * mean));
  std::printf("1 px noise, 4-camera ring r=3000: error %.3f +/- %.3f mm\n", mean, sd);
  EXPECT_LT(mean, 10.0);
}

TEST(Triangulation, ParallelRaysAreIllConditioned) {
  const auto rig = ring_rig();
  // Two cameras on the same line of sight see the point along one ray.
  const Vec3 target(0.0, 0.0, 1000.0);
  const CameraParams near = look_at_camera(0, Vec3(2000.0, 0.0, 1000.0), target, Vec3::UnitZ(), 400.0, 320, 320);
  const CameraParams far = look_at_camera(1, Vec3(4000.0, 0.0, 1000.0), target, Vec3::UnitZ(), 400.0, 320, 320);
  const std::vector<Observation> obs{{near, project(target, near)}, {far, project(target, far)}};
  EXPECT_EQ(error_code_of([&] { triangulate(obs); }), ErrorCode::kIllConditioned);
  const std::vector<Observation> one{{rig[0], Vec2(160.0, 160.0)}};
  EXPECT_EQ(error_code_of([&] { triangulate(one); }), ErrorCode::kIllConditioned);
}

TEST(Triangulation, DropsObservationsBehindCamera) {
  const auto rig = ring_rig();
  const Vec3 p(50.0, 60.0, 1100.0);
  std::vector<Observation> obs;
  for (const CameraParams& cam : rig) obs.push_back({cam, project(p, cam)});
  // A camera facing away from the scene, with an arbitrary pixel.
  const CameraParams away = look_at_camera(9, Vec3(0.0, 6000.0, 1000.0), Vec3(0.0, 9000.0, 1000.0), Vec3::UnitZ(),
                                           400.0, 320, 320);
  obs.push_back({away, Vec2(100.0, 200.0)});
  const Triangulation t = triangulate(obs);
  EXPECT_LT(away.depth(t.point), 0.0);
  EXPECT_EQ(t.used.size(), rig.size());
  EXPECT_LT((t.point - p).norm(), 1e-6);
}

}  // namespace
}  // namespace crossview
