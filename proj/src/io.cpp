#include "crossview/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "crossview/error.hpp"

namespace crossview::io {

using nlohmann::json;

namespace {

constexpr int kVersion = 1;

[[noreturn]] void data_error(const std::string& message) { throw Error(ErrorCode::kData, message); }

json parse_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    data_error(path.string() + ": " + e.what());
  }
}

void expect_format(const json& doc, const char* format, const fs::path& path) {
  if (!doc.is_object() || doc.value("format", std::string()) != format) {
    data_error(path.string() + ": expected a '" + std::string(format) + "' document");
  }
}

template <typename F>
auto guarded(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    data_error(path.string() + ": " + e.what());
  }
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  v = to_little(v);
  char bytes[4];
  std::memcpy(bytes, &v, 4);
  out.append(bytes, 4);
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v;
  std::memcpy(&v, in.data() + offset, 4);
  return to_little(v);
}

float get_f32(const std::string& in, std::size_t offset) { return std::bit_cast<float>(get_u32(in, offset)); }

json mat_to_json(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

Mat3 mat_from_json(const json& a) {
  if (!a.is_array() || a.size() != 9) data_error("expected 9 matrix entries");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = a.at(static_cast<std::size_t>(r * 3 + c)).get<double>();
  }
  return m;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& a) {
  if (!a.is_array() || a.size() != 3) data_error("expected a 3-vector");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

fs::path sibling_data_path(const fs::path& manifest) {
  fs::path data = manifest;
  data.replace_extension(".bin");
  return data;
}

json noise_to_json(const NoiseModel& n) {
  return json{{"jitter_px", n.jitter_px},
              {"drop_probability", n.drop_probability},
              {"distractor_probability", n.distractor_probability},
              {"distractor_amplitude", n.distractor_amplitude},
              {"drop_joints", n.drop_joints},
              {"seed", n.seed}};
}

NoiseModel noise_from_json(const json& j) {
  NoiseModel n;
  n.jitter_px = j.value("jitter_px", 0.0);
  n.drop_probability = j.value("drop_probability", 0.0);
  n.distractor_probability = j.value("distractor_probability", 0.0);
  n.distractor_amplitude = j.value("distractor_amplitude", n.distractor_amplitude);
  n.drop_joints = j.value("drop_joints", std::vector<int>{});
  n.seed = j.value("seed", std::uint64_t{0});
  return n;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) data_error("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) data_error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) data_error("write failed for '" + path.string() + "'");
}

void write_cameras(const fs::path& path, const std::vector<CameraParams>& cameras) {
  json list = json::array();
  for (const CameraParams& c : cameras) {
    list.push_back({{"id", c.id()},
                    {"intrinsics", mat_to_json(c.intrinsics())},
                    {"rotation", mat_to_json(c.rotation())},
                    {"translation", vec3_to_json(c.translation())},
                    {"width", c.width()},
                    {"height", c.height()}});
  }
  write_text(path, json{{"format", "crossview-cameras"}, {"version", kVersion}, {"cameras", list}}.dump(2) + "\n");
}

std::vector<CameraParams> read_cameras(const fs::path& path) {
  const json doc = parse_json(path);
  expect_format(doc, "crossview-cameras", path);
  return guarded(path, [&] {
    std::vector<CameraParams> cameras;
    for (const json& c : doc.at("cameras")) {
      try {
        cameras.emplace_back(c.at("id").get<int>(), mat_from_json(c.at("intrinsics")),
                             mat_from_json(c.at("rotation")), vec3_from_json(c.at("translation")),
                             c.at("width").get<int>(), c.at("height").get<int>());
      } catch (const Error& e) {
        data_error(path.string() + ": " + e.what());
      }
    }
    if (cameras.empty()) data_error(path.string() + ": no cameras");
    return cameras;
  });
}

void write_heatmaps(const fs::path& manifest, const HeatmapSet& set) {
  const fs::path data = sibling_data_path(manifest);
  json dims = json::array();
  json ids = json::array();
  std::size_t total = 0;
  for (int v = 0; v < set.views(); ++v) {
    dims.push_back({set.dims(v).rows, set.dims(v).cols});
    ids.push_back(set.camera(v).id());
    total += set.dims(v).cells() * static_cast<std::size_t>(set.joints());
  }
  std::string bytes;
  bytes.reserve(total * 4);
  for (int v = 0; v < set.views(); ++v) {
    for (int j = 0; j < set.joints(); ++j) {
      for (float value : set.map(v, j).values()) put_f32(bytes, value);
    }
  }
  write_text(data, bytes);
  const json doc{{"format", "crossview-heatmaps"},
                 {"version", kVersion},
                 {"views", set.views()},
                 {"joints", set.joints()},
                 {"camera_ids", ids},
                 {"dims", dims},
                 {"stride", set.stride()},
                 {"dtype", "float32"},
                 {"byte_order", "little"},
                 {"layout", "view,joint,row,col"},
                 {"data", data.filename().string()}};
  write_text(manifest, doc.dump(2) + "\n");
}

HeatmapSet read_heatmaps(const fs::path& manifest, const std::vector<CameraParams>& cameras) {
  const json doc = parse_json(manifest);
  expect_format(doc, "crossview-heatmaps", manifest);
  return guarded(manifest, [&] {
    if (doc.at("dtype").get<std::string>() != "float32" || doc.at("byte_order").get<std::string>() != "little") {
      data_error(manifest.string() + ": only little-endian float32 heatmaps are supported");
    }
    const int views = doc.at("views").get<int>();
    const int joints = doc.at("joints").get<int>();
    const double stride = doc.at("stride").get<double>();
    const auto ids = doc.at("camera_ids").get<std::vector<int>>();
    const json& dims = doc.at("dims");
    if (views <= 0 || joints <= 0 || static_cast<int>(ids.size()) != views || static_cast<int>(dims.size()) != views) {
      data_error(manifest.string() + ": inconsistent view/joint counts");
    }
    std::vector<CameraParams> ordered;
    for (int id : ids) {
      auto it = std::find_if(cameras.begin(), cameras.end(), [&](const CameraParams& c) { return c.id() == id; });
      if (it == cameras.end()) data_error(manifest.string() + ": no camera with id " + std::to_string(id));
      ordered.push_back(*it);
    }
    const std::string bytes = read_text(manifest.parent_path() / doc.at("data").get<std::string>());
    std::size_t expected = 0;
    for (const json& d : dims) {
      expected += static_cast<std::size_t>(d.at(0).get<int>()) * static_cast<std::size_t>(d.at(1).get<int>()) *
                  static_cast<std::size_t>(joints) * 4;
    }
    if (bytes.size() != expected) {
      data_error(manifest.string() + ": data file holds " + std::to_string(bytes.size()) + " bytes, expected " +
                 std::to_string(expected));
    }
    std::vector<Heatmap> maps;
    std::size_t offset = 0;
    for (int v = 0; v < views; ++v) {
      const GridDims gd{dims[static_cast<std::size_t>(v)].at(0).get<int>(), dims[static_cast<std::size_t>(v)].at(1).get<int>()};
      for (int j = 0; j < joints; ++j) {
        Heatmap map(gd, stride, j, v);
        for (float& value : map.values()) {
          value = get_f32(bytes, offset);
          offset += 4;
        }
        maps.push_back(std::move(map));
      }
    }
    return HeatmapSet(std::move(ordered), joints, std::move(maps));
  });
}

void write_fusion_weights(const fs::path& manifest, const FusionWeights& weights) {
  const fs::path data = sibling_data_path(manifest);
  std::string bytes;
  bytes.reserve(weights.nonzeros() * 12);
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    for (const auto& e : weights.row(i)) {
      put_u32(bytes, static_cast<std::uint32_t>(i));
      put_u32(bytes, e.col);
      put_f32(bytes, static_cast<float>(e.weight));
    }
  }
  write_text(data, bytes);
  const json doc{{"format", "crossview-fusion-weights"},
                 {"version", kVersion},
                 {"target_view", weights.target_view()},
                 {"source_view", weights.source_view()},
                 {"target_dims", {weights.target_dims().rows, weights.target_dims().cols}},
                 {"source_dims", {weights.source_dims().rows, weights.source_dims().cols}},
                 {"stride", weights.stride()},
                 {"kernel_sigma", weights.kernel_sigma()},
                 {"nonzeros", weights.nonzeros()},
                 {"record", "row:u32,col:u32,weight:f32"},
                 {"byte_order", "little"},
                 {"data", data.filename().string()}};
  write_text(manifest, doc.dump(2) + "\n");
}

FusionWeights read_fusion_weights(const fs::path& manifest) {
  const json doc = parse_json(manifest);
  expect_format(doc, "crossview-fusion-weights", manifest);
  return guarded(manifest, [&] {
    const GridDims target{doc.at("target_dims").at(0).get<int>(), doc.at("target_dims").at(1).get<int>()};
    const GridDims source{doc.at("source_dims").at(0).get<int>(), doc.at("source_dims").at(1).get<int>()};
    FusionWeights weights(doc.at("target_view").get<int>(), doc.at("source_view").get<int>(), target, source,
                          doc.at("stride").get<double>(), doc.at("kernel_sigma").get<double>());
    const std::string bytes = read_text(manifest.parent_path() / doc.at("data").get<std::string>());
    const auto nonzeros = doc.at("nonzeros").get<std::size_t>();
    if (bytes.size() != nonzeros * 12) data_error(manifest.string() + ": triplet file size mismatch");
    std::vector<FusionWeights::Entry> row;
    std::size_t current = 0;
    for (std::size_t k = 0; k < nonzeros; ++k) {
      const std::uint32_t r = get_u32(bytes, k * 12);
      const std::uint32_t c = get_u32(bytes, k * 12 + 4);
      const float w = get_f32(bytes, k * 12 + 8);
      if (r < current || r >= target.cells()) data_error(manifest.string() + ": triplets must be sorted by row");
      while (current < r) {
        weights.push_row(row);
        row.clear();
        ++current;
      }
      row.push_back({c, static_cast<double>(w)});
    }
    while (!weights.complete()) {
      weights.push_row(row);
      row.clear();
    }
    return weights;
  });
}

BodyModel default_body_model() { return BodyModel{BodyGraph::human17(), human17_limb_priors()}; }

void write_body_model(const fs::path& path, const BodyModel& model) {
  json joints = json::array();
  for (int j = 0; j < model.graph.joints(); ++j) {
    json entry{{"name", model.graph.name(j)}};
    const int p = model.graph.parent(j);
    if (p < 0) {
      entry["parent"] = nullptr;
    } else {
      entry["parent"] = model.graph.name(p);
      entry["limb_length"] = model.priors.lengths[static_cast<std::size_t>(model.graph.edge_of(j))];
    }
    joints.push_back(entry);
  }
  write_text(path, json{{"format", "crossview-body"},
                        {"version", kVersion},
                        {"epsilon", model.priors.epsilon},
                        {"joints", joints}}
                           .dump(2) + "\n");
}

BodyModel read_body_model(const fs::path& path) {
  const json doc = parse_json(path);
  expect_format(doc, "crossview-body", path);
  return guarded(path, [&] {
    std::vector<std::string> names;
    for (const json& j : doc.at("joints")) names.push_back(j.at("name").get<std::string>());
    std::vector<int> parents;
    std::vector<double> lengths(names.size(), 0.0);
    for (std::size_t k = 0; k < names.size(); ++k) {
      const json& j = doc.at("joints")[k];
      if (j.at("parent").is_null()) {
        parents.push_back(-1);
        continue;
      }
      const auto parent = j.at("parent").get<std::string>();
      auto it = std::find(names.begin(), names.end(), parent);
      if (it == names.end()) data_error(path.string() + ": unknown parent '" + parent + "'");
      parents.push_back(static_cast<int>(it - names.begin()));
      lengths[k] = j.at("limb_length").get<double>();
    }
    try {
      BodyGraph graph(names, parents);
      LimbPriors priors;
      priors.epsilon = doc.value("epsilon", kDefaultLimbTolerance);
      for (const Edge& e : graph.edges()) priors.lengths.push_back(lengths[static_cast<std::size_t>(e.child)]);
      priors.validate(graph);
      return BodyModel{std::move(graph), std::move(priors)};
    } catch (const Error& e) {
      data_error(path.string() + ": " + e.what());
    }
  });
}

void write_pose(const fs::path& path, const BodyGraph& graph, const Pose3D& pose, const PoseFileHeader& header) {
  if (pose.size() != graph.joints()) throw Error(ErrorCode::kJointCountMismatch, "pose and body graph differ in size");
  std::ostringstream out;
  out << "# crossview-pose " << kVersion << "\n";
  out << "# method " << header.method << "\n";
  out << "# iterations " << header.iterations << "\n";
  out << "# bins " << header.bins << "\n";
  out << "# score " << std::setprecision(17) << header.score << "\n";
  if (!header.stage_mpjpe.empty()) {
    out << "# stage_mpjpe";
    for (double e : header.stage_mpjpe) out << ' ' << std::setprecision(17) << e;
    out << "\n";
  }
  char line[256];
  for (int j = 0; j < graph.joints(); ++j) {
    const Vec3& p = pose.joints[static_cast<std::size_t>(j)];
    std::snprintf(line, sizeof(line), "%s %.6f %.6f %.6f\n", graph.name(j).c_str(), p.x(), p.y(), p.z());
    out << line;
  }
  write_text(path, out.str());
}

Pose3D read_pose(const fs::path& path, const BodyGraph& graph, PoseFileHeader* header) {
  std::istringstream in(read_text(path));
  Pose3D pose;
  pose.joints.assign(static_cast<std::size_t>(graph.joints()), Vec3::Zero());
  pose.confidence.assign(static_cast<std::size_t>(graph.joints()), 1.0);
  std::vector<bool> seen(static_cast<std::size_t>(graph.joints()), false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string hash, key;
      fields >> hash >> key;
      if (header == nullptr) continue;
      if (key == "method") fields >> header->method;
      else if (key == "iterations") fields >> header->iterations;
      else if (key == "bins") fields >> header->bins;
      else if (key == "score") fields >> header->score;
      else if (key == "stage_mpjpe") {
        double e;
        while (fields >> e) header->stage_mpjpe.push_back(e);
      }
      continue;
    }
    std::string name;
    double x, y, z;
    if (!(fields >> name >> x >> y >> z)) data_error(path.string() + ": malformed joint line '" + line + "'");
    const int j = graph.find(name);
    if (j < 0) data_error(path.string() + ": unknown joint '" + name + "'");
    pose.joints[static_cast<std::size_t>(j)] = Vec3(x, y, z);
    seen[static_cast<std::size_t>(j)] = true;
  }
  for (int j = 0; j < graph.joints(); ++j) {
    if (!seen[static_cast<std::size_t>(j)]) data_error(path.string() + ": missing joint '" + graph.name(j) + "'");
  }
  return pose;
}

void write_truth(const fs::path& path, const BodyGraph& graph, const SceneTruth& truth) {
  json pose = json::array();
  for (const Vec3& p : truth.pose.joints) pose.push_back(vec3_to_json(p));
  json projections = json::array();
  for (const auto& view : truth.projections) {
    json list = json::array();
    for (const Vec2& p : view) {
      if (p.allFinite()) list.push_back({p.x(), p.y()});
      else list.push_back(nullptr);
    }
    projections.push_back(list);
  }
  write_text(path, json{{"format", "crossview-truth"},
                        {"version", kVersion},
                        {"joints", graph.names()},
                        {"pose", pose},
                        {"projections", projections},
                        {"occluded", truth.occluded}}
                           .dump(2) + "\n");
}

SceneTruth read_truth(const fs::path& path, const BodyGraph& graph) {
  const json doc = parse_json(path);
  expect_format(doc, "crossview-truth", path);
  return guarded(path, [&] {
    if (doc.at("joints").get<std::vector<std::string>>() != graph.names()) {
      data_error(path.string() + ": joint names differ from the body model");
    }
    SceneTruth truth;
    for (const json& p : doc.at("pose")) {
      truth.pose.joints.push_back(vec3_from_json(p));
      truth.pose.confidence.push_back(1.0);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const json& view : doc.at("projections")) {
      std::vector<Vec2> list;
      for (const json& p : view) list.push_back(p.is_null() ? Vec2(nan, nan) : Vec2(p.at(0).get<double>(), p.at(1).get<double>()));
      truth.projections.push_back(std::move(list));
    }
    truth.occluded = doc.at("occluded").get<std::vector<std::vector<bool>>>();
    return truth;
  });
}

CorpusManifest write_synthetic_corpus(const fs::path& root, const CorpusSpec& spec, const BodyModel& body) {
  if (spec.frames <= 0) throw Error(ErrorCode::kConfig, "corpus needs at least one frame");
  fs::create_directories(root / "frames");
  const std::vector<CameraParams> cameras = generate_rig(spec.rig);
  CorpusManifest manifest;
  manifest.root = root;
  manifest.seed = spec.seed;
  manifest.render = spec.render;
  manifest.noise = spec.noise;
  write_cameras(root / manifest.cameras, cameras);
  write_body_model(root / manifest.body, body);

  json frames = json::array();
  for (int f = 0; f < spec.frames; ++f) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "frames/%06d", f);
    const CorpusFrame entry{f, fs::path(std::string(stem) + ".heatmaps.json"), fs::path(std::string(stem) + ".truth.json")};
    const SyntheticFrame frame = generate_frame(spec, body.graph, body.priors, cameras, f);
    write_heatmaps(root / entry.heatmaps, frame.heatmaps);
    write_truth(root / entry.truth, body.graph, frame.truth);
    frames.push_back({{"index", f}, {"heatmaps", entry.heatmaps.generic_string()}, {"truth", entry.truth.generic_string()}});
    manifest.frames.push_back(entry);
  }
  const json doc{{"format", "crossview-corpus"},
                 {"version", kVersion},
                 {"seed", spec.seed},
                 {"cameras", manifest.cameras.generic_string()},
                 {"body", manifest.body.generic_string()},
                 {"rig",
                  {{"cameras", spec.rig.cameras},
                   {"radius", spec.rig.radius},
                   {"target", vec3_to_json(spec.rig.target)},
                   {"width", spec.rig.width},
                   {"height", spec.rig.height},
                   {"focal", spec.rig.focal}}},
                 {"render", {{"sigma_px", spec.render.sigma_px}, {"stride", spec.render.stride}}},
                 {"noise", noise_to_json(spec.noise)},
                 {"frames", frames}};
  write_text(root / "corpus.json", doc.dump(2) + "\n");
  return manifest;
}

CorpusManifest read_corpus(const fs::path& root) {
  const fs::path path = root / "corpus.json";
  const json doc = parse_json(path);
  expect_format(doc, "crossview-corpus", path);
  return guarded(path, [&] {
    CorpusManifest manifest;
    manifest.root = root;
    manifest.cameras = doc.value("cameras", std::string("cameras.json"));
    manifest.body = doc.value("body", std::string("body.json"));
    manifest.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("render")) {
      manifest.render.sigma_px = doc["render"].value("sigma_px", manifest.render.sigma_px);
      manifest.render.stride = doc["render"].value("stride", manifest.render.stride);
    }
    if (doc.contains("noise")) manifest.noise = noise_from_json(doc["noise"]);
    for (const json& f : doc.at("frames")) {
      manifest.frames.push_back(
          {f.at("index").get<int>(), fs::path(f.at("heatmaps").get<std::string>()), fs::path(f.at("truth").get<std::string>())});
    }
    return manifest;
  });
}

}  // namespace crossview::io
