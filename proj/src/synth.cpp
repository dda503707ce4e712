#include "crossview/synth.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Geometry>

#include "crossview/error.hpp"

namespace crossview {

namespace {

struct Stance {
  std::string_view joint;
  Vec3 direction;    // body frame: +x left, +y forward, +z up
  double cone_deg;
};

// Neutral standing direction of each limb (parent -> child).
const Stance kStances[] = {
    {"r_hip", Vec3(-1.0, 0.0, 0.0), 10.0},     {"l_hip", Vec3(1.0, 0.0, 0.0), 10.0},
    {"r_knee", Vec3(0.0, 0.15, -1.0), 25.0},   {"l_knee", Vec3(0.0, 0.15, -1.0), 25.0},
    {"r_ankle", Vec3(0.0, -0.15, -1.0), 25.0}, {"l_ankle", Vec3(0.0, -0.15, -1.0), 25.0},
    {"spine", Vec3(0.0, 0.0, 1.0), 15.0},      {"neck", Vec3(0.0, 0.0, 1.0), 15.0},
    {"head", Vec3(0.0, 0.3, 1.0), 20.0},       {"head_top", Vec3(0.0, 0.0, 1.0), 20.0},
    {"l_shoulder", Vec3(1.0, 0.0, 0.1), 15.0}, {"r_shoulder", Vec3(-1.0, 0.0, 0.1), 15.0},
    {"l_elbow", Vec3(0.3, 0.0, -1.0), 60.0},   {"r_elbow", Vec3(-0.3, 0.0, -1.0), 60.0},
    {"l_wrist", Vec3(0.0, 0.5, -1.0), 75.0},   {"r_wrist", Vec3(0.0, 0.5, -1.0), 75.0},
};

constexpr double kDefaultConeDeg = 45.0;

// Unit vector uniformly distributed on the spherical cap around `axis`.
Vec3 sample_in_cone(const Vec3& axis, double cone_deg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cos_max = std::cos(cone_deg * std::numbers::pi / 180.0);
  const double cos_t = 1.0 - unit(rng) * (1.0 - cos_max);
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  const double phi = 2.0 * std::numbers::pi * unit(rng);
  const Vec3 w = axis.normalized();
  const Vec3 helper = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = w.cross(helper).normalized();
  const Vec3 v = w.cross(u);
  return cos_t * w + sin_t * (std::cos(phi) * u + std::sin(phi) * v);
}

}  // namespace

void NoiseModel::validate() const {
  auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!probability(drop_probability) || !probability(distractor_probability)) {
    throw Error(ErrorCode::kConfig, "noise probabilities must lie in [0, 1]");
  }
  if (!(jitter_px >= 0.0)) throw Error(ErrorCode::kConfig, "jitter sigma must be >= 0");
  if (!(distractor_amplitude >= 0.0)) throw Error(ErrorCode::kConfig, "distractor amplitude must be >= 0");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t frame, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ frame) ^ stream);
}

Pose3D sample_pose(const LimbPriors& priors, const BodyGraph& graph, std::uint64_t seed, const Vec3& anchor,
                   double root_spread) {
  priors.validate(graph);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double yaw = 2.0 * std::numbers::pi * unit(rng);
  const Mat3 heading = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();

  const auto m = static_cast<std::size_t>(graph.joints());
  Pose3D pose;
  pose.joints.assign(m, Vec3::Zero());
  pose.confidence.assign(m, 1.0);
  std::vector<Vec3> body_dir(m, Vec3::UnitZ());

  const double jx = (2.0 * unit(rng) - 1.0) * root_spread;
  const double jy = (2.0 * unit(rng) - 1.0) * root_spread;
  const double jz = (2.0 * unit(rng) - 1.0) * root_spread / 3.0;
  pose.joints[static_cast<std::size_t>(graph.root())] = anchor + Vec3(jx, jy, jz);

  for (int joint : graph.topological_order()) {
    if (joint == graph.root()) continue;
    const auto j = static_cast<std::size_t>(joint);
    const int parent = graph.parent(joint);
    Vec3 axis = parent == graph.root() ? Vec3::UnitZ() : body_dir[static_cast<std::size_t>(parent)];
    double cone = kDefaultConeDeg;
    for (const Stance& s : kStances) {
      if (s.joint == graph.name(joint)) {
        axis = s.direction;
        cone = s.cone_deg;
        break;
      }
    }
    const Vec3 dir = sample_in_cone(axis, cone, rng);
    body_dir[j] = dir;
    const double mean = priors.lengths[static_cast<std::size_t>(graph.edge_of(joint))];
    const double half = 0.5 * priors.epsilon;
    const double lo = std::max(mean - half, std::min(1.0, mean));
    const double length = lo + (mean + half - lo) * unit(rng);
    pose.joints[j] = pose.joints[static_cast<std::size_t>(parent)] + heading * (length * dir);
  }
  return pose;
}

std::vector<CameraParams> generate_rig(int num_cameras, double radius, const Vec3& target, int width,
                                       int height, double focal) {
  if (num_cameras < 2) throw Error(ErrorCode::kInvalidArgument, "a rig needs at least two cameras");
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rig radius must be positive");
  std::vector<CameraParams> cameras;
  cameras.reserve(static_cast<std::size_t>(num_cameras));
  for (int i = 0; i < num_cameras; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / num_cameras;
    const Vec3 eye = target + radius * Vec3(std::cos(angle), std::sin(angle), 0.0);
    cameras.push_back(look_at_camera(i, eye, target, Vec3::UnitZ(), focal, width, height));
  }
  return cameras;
}

std::vector<CameraParams> generate_rig(const RigConfig& config) {
  return generate_rig(config.cameras, config.radius, config.target, config.width, config.height, config.focal);
}

GridDims heatmap_dims(const CameraParams& camera, double stride) {
  return GridDims{static_cast<int>(std::ceil(camera.height() / stride)),
                  static_cast<int>(std::ceil(camera.width() / stride))};
}

std::pair<HeatmapSet, SceneTruth> render_views(const Pose3D& pose, std::span<const CameraParams> cameras,
                                               const RenderSettings& render, const NoiseModel& noise) {
  noise.validate();
  if (!(render.sigma_px > 0.0)) throw Error(ErrorCode::kInvalidArgument, "render sigma must be positive");
  const int joints = pose.size();
  std::vector<bool> eligible(static_cast<std::size_t>(joints), noise.drop_joints.empty());
  for (int j : noise.drop_joints) {
    if (j < 0 || j >= joints) throw Error(ErrorCode::kConfig, "drop joint index out of range");
    eligible[static_cast<std::size_t>(j)] = true;
  }

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SceneTruth truth;
  truth.pose = pose;
  std::vector<Heatmap> maps;
  std::vector<CameraParams> camera_list(cameras.begin(), cameras.end());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t v = 0; v < cameras.size(); ++v) {
    const CameraParams& cam = cameras[v];
    const GridDims dims = heatmap_dims(cam, render.stride);
    std::vector<Vec2> projections(static_cast<std::size_t>(joints), Vec2(nan, nan));
    std::vector<bool> occluded(static_cast<std::size_t>(joints), false);
    for (int j = 0; j < joints; ++j) {
      const auto js = static_cast<std::size_t>(j);
      const double n1 = gauss(rng);
      const double n2 = gauss(rng);
      const double u_drop = unit(rng);
      const double u_distract = unit(rng);
      const double dx = unit(rng);
      const double dy = unit(rng);

      Heatmap map(dims, render.stride, j, static_cast<int>(v));
      const auto projection = try_project(pose.joints[js], cam);
      if (projection) {
        projections[js] = *projection;
        const Vec2 center = *projection + noise.jitter_px * Vec2(n1, n2);
        const Vec2 one[] = {center};
        map = std::move(render_gaussian(one, render.sigma_px, dims, render.stride).front());
      }
      if (eligible[js] && u_drop < noise.drop_probability) {
        std::fill(map.values().begin(), map.values().end(), 0.0f);
        occluded[js] = true;
      }
      if (u_distract < noise.distractor_probability) {
        const Vec2 spot(-0.5 + dx * cam.width(), -0.5 + dy * cam.height());
        add_gaussian(map, spot, render.sigma_px, noise.distractor_amplitude);
      }
      map.set_labels(j, static_cast<int>(v));
      maps.push_back(std::move(map));
    }
    truth.projections.push_back(std::move(projections));
    truth.occluded.push_back(std::move(occluded));
  }
  return {HeatmapSet(std::move(camera_list), joints, std::move(maps)), std::move(truth)};
}

SyntheticFrame generate_frame(const CorpusSpec& spec, const BodyGraph& graph, const LimbPriors& priors,
                              std::span<const CameraParams> cameras, int index) {
  const auto frame = static_cast<std::uint64_t>(index);
  const Pose3D pose = sample_pose(priors, graph, derive_seed(spec.seed, frame, 0), spec.rig.target);
  NoiseModel noise = spec.noise;
  noise.seed = derive_seed(spec.seed, frame, 1);
  auto [heatmaps, truth] = render_views(pose, cameras, spec.render, noise);
  return SyntheticFrame{std::move(heatmaps), std::move(truth)};
}

}  // namespace crossview
