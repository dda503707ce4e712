#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crossview/fusion.hpp"
#include "crossview/heatmap.hpp"
#include "crossview/inference.hpp"
#include "crossview/skeleton.hpp"
#include "crossview/synth.hpp"

// File formats. Every structured file is JSON with a "format" tag and a
// "version"; binary payloads are little-endian. Failures to read or parse
// raise Error(kData).

namespace crossview::io {

namespace fs = std::filesystem;

/// {"format": "crossview-cameras", "cameras": [{"id", "intrinsics"[9],
/// "rotation"[9], "translation"[3], "width", "height"}]} with row-major
/// matrices, translation in mm.
void write_cameras(const fs::path& path, const std::vector<CameraParams>& cameras);
std::vector<CameraParams> read_cameras(const fs::path& path);

/// Manifest (views, joints, per-view dims, stride, dtype, byte order, data
/// file) plus a flat float32 little-endian file in (view, joint, row, col)
/// order. The data file sits next to the manifest.
void write_heatmaps(const fs::path& manifest, const HeatmapSet& set);
/// Cameras are matched to views by the ids recorded in the manifest.
HeatmapSet read_heatmaps(const fs::path& manifest, const std::vector<CameraParams>& cameras);

/// Manifest (view pair, dims, stride, sigma) plus 12-byte triplets
/// (row u32, col u32, weight f32). Weights are narrowed to float32 on disk.
void write_fusion_weights(const fs::path& manifest, const FusionWeights& weights);
FusionWeights read_fusion_weights(const fs::path& manifest);

struct BodyModel {
  BodyGraph graph;
  LimbPriors priors;
};

/// {"format": "crossview-body", "epsilon": 150, "joints": [{"name",
/// "parent" (name or null), "limb_length" (mm, non-root)}]}.
void write_body_model(const fs::path& path, const BodyModel& model);
BodyModel read_body_model(const fs::path& path);
BodyModel default_body_model();

struct PoseFileHeader {
  std::string method;
  int iterations = 0;
  int bins = 0;
  double score = 0.0;
  std::vector<double> stage_mpjpe;  // empty when no truth was supplied
};

/// Text file: '#'-prefixed "key value..." metadata lines, then one
/// "name x y z" line per joint (mm).
void write_pose(const fs::path& path, const BodyGraph& graph, const Pose3D& pose, const PoseFileHeader& header);
/// Joint lines are matched to the graph by name.
Pose3D read_pose(const fs::path& path, const BodyGraph& graph, PoseFileHeader* header = nullptr);

void write_truth(const fs::path& path, const BodyGraph& graph, const SceneTruth& truth);
SceneTruth read_truth(const fs::path& path, const BodyGraph& graph);

struct CorpusFrame {
  int index = 0;
  fs::path heatmaps;  // manifest path, relative to the corpus root
  fs::path truth;
};

struct CorpusManifest {
  fs::path root;
  fs::path cameras = "cameras.json";
  fs::path body = "body.json";
  std::uint64_t seed = 0;
  RenderSettings render;
  NoiseModel noise;
  std::vector<CorpusFrame> frames;
};

/// Generates `spec.frames` synthetic frames under `root` (cameras.json,
/// body.json, frames/NNNNNN.{heatmaps.json,heatmaps.bin,truth.json},
/// corpus.json).
CorpusManifest write_synthetic_corpus(const fs::path& root, const CorpusSpec& spec, const BodyModel& body);
CorpusManifest read_corpus(const fs::path& root);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace crossview::io
