#include "crossview/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>

#include "crossview/error.hpp"

namespace crossview {

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kWeighted: return "weighted";
    case FusionMode::kLineSum: return "line-sum";
    case FusionMode::kLineMax: return "line-max";
    case FusionMode::kIdentity: return "identity";
  }
  return "unknown";
}

FusionMode parse_fusion_mode(std::string_view text) {
  std::string s(text);
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "weighted") return FusionMode::kWeighted;
  if (s == "line-sum") return FusionMode::kLineSum;
  if (s == "line-max") return FusionMode::kLineMax;
  if (s == "identity") return FusionMode::kIdentity;
  throw Error(ErrorCode::kConfig, "unknown fusion mode '" + std::string(text) + "'");
}

FusionWeights::FusionWeights(int target_view, int source_view, GridDims target_dims,
                             GridDims source_dims, double stride, double kernel_sigma)
    : target_view_(target_view),
      source_view_(source_view),
      target_dims_(target_dims),
      source_dims_(source_dims),
      stride_(stride),
      kernel_sigma_(kernel_sigma) {
  if (!(kernel_sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kernel sigma must be positive");
  row_offsets_.reserve(target_dims.cells() + 1);
}

void FusionWeights::push_row(std::span<const Entry> entries) {
  if (complete()) throw Error(ErrorCode::kDimensionMismatch, "fusion weights already have every row");
  for (const Entry& e : entries) {
    if (e.col >= source_dims_.cells() || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::kData, "fusion weight entry out of range or non-finite");
    }
  }
  entries_.insert(entries_.end(), entries.begin(), entries.end());
  row_offsets_.push_back(entries_.size());
}

namespace {

Vec2 cell_center(GridDims dims, double stride, std::size_t linear) {
  const auto cols = static_cast<std::size_t>(dims.cols);
  const double offset = 0.5 * (stride - 1.0);
  return Vec2(static_cast<double>(linear % cols) * stride + offset,
              static_cast<double>(linear / cols) * stride + offset);
}

// Cell index range [lo, hi] whose centres fall inside the pixel interval.
std::pair<int, int> cells_in_interval(double p0, double p1, double stride, int count) {
  const double offset = 0.5 * (stride - 1.0);
  const double lo = std::min(p0, p1);
  const double hi = std::max(p0, p1);
  const double first = std::ceil((lo - offset) / stride);
  const double last = std::floor((hi - offset) / stride);
  const int a = static_cast<int>(std::clamp(first, -1.0, static_cast<double>(count)));
  const int b = static_cast<int>(std::clamp(last, -1.0, static_cast<double>(count)));
  return {std::max(a, 0), std::min(b, count - 1)};
}

}  // namespace

FusionWeights build_epipolar_weights(const CameraParams& cam_target, const CameraParams& cam_source,
                                     GridDims target_dims, GridDims source_dims, double stride,
                                     double kernel_sigma, int target_view, int source_view) {
  FusionWeights weights(target_view, source_view, target_dims, source_dims, stride, kernel_sigma);
  const Mat3 f = fundamental_matrix(cam_target, cam_source);
  const double radius = weights.support_radius();
  const double inv = 1.0 / (2.0 * kernel_sigma * kernel_sigma);
  const double offset = 0.5 * (stride - 1.0);

  std::vector<FusionWeights::Entry> row;
  for (std::size_t i = 0; i < target_dims.cells(); ++i) {
    row.clear();
    const auto line = epipolar_line(f, cell_center(target_dims, stride, i));
    if (line) {
      const auto [a, b, c] = *line;
      auto consider = [&](int r, int col) {
        const double x = col * stride + offset;
        const double y = r * stride + offset;
        const double d = std::abs(a * x + b * y + c);
        if (d <= radius) {
          row.push_back({static_cast<std::uint32_t>(r * source_dims.cols + col), std::exp(-d * d * inv)});
        }
      };
      if (std::abs(b) >= std::abs(a)) {
        for (int col = 0; col < source_dims.cols; ++col) {
          const double x = col * stride + offset;
          const auto [r0, r1] = cells_in_interval((-c - a * x - radius) / b, (-c - a * x + radius) / b,
                                                  stride, source_dims.rows);
          for (int r = r0; r <= r1; ++r) consider(r, col);
        }
      } else {
        for (int r = 0; r < source_dims.rows; ++r) {
          const double y = r * stride + offset;
          const auto [c0, c1] = cells_in_interval((-c - b * y - radius) / a, (-c - b * y + radius) / a,
                                                  stride, source_dims.cols);
          for (int col = c0; col <= c1; ++col) consider(r, col);
        }
      }
      std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.col < y.col; });
      double sum = 0.0;
      for (const auto& e : row) sum += e.weight;
      if (sum > 0.0) {
        for (auto& e : row) e.weight /= sum;
      } else {
        row.clear();
      }
    }
    weights.push_row(row);
  }
  return weights;
}

WeightBank build_weight_bank(const HeatmapSet& set, double kernel_sigma) {
  WeightBank bank;
  for (int u = 0; u < set.views(); ++u) {
    for (int v = 0; v < set.views(); ++v) {
      if (u == v) continue;
      bank.emplace(std::make_pair(u, v),
                   build_epipolar_weights(set.camera(u), set.camera(v), set.dims(u), set.dims(v),
                                          set.stride(), kernel_sigma, u, v));
    }
  }
  return bank;
}

namespace {

const FusionWeights& lookup(const WeightBank& bank, const HeatmapSet& set, int u, int v) {
  auto it = bank.find({u, v});
  if (it == bank.end()) {
    throw Error(ErrorCode::kMissingWeights,
                "no fusion weights for target view " + std::to_string(u) + " / source view " + std::to_string(v));
  }
  const FusionWeights& w = it->second;
  if (w.target_dims() != set.dims(u) || w.source_dims() != set.dims(v) || !w.complete()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "fusion weights for views (" + std::to_string(u) + ", " + std::to_string(v) +
                    ") do not match the heatmap dimensions");
  }
  return w;
}

// [cell][joint] copy of one view so the joint loop is contiguous.
std::vector<float> interleave(const HeatmapSet& set, int view) {
  const int joints = set.joints();
  const std::size_t cells = set.dims(view).cells();
  std::vector<float> out(cells * static_cast<std::size_t>(joints));
  for (int k = 0; k < joints; ++k) {
    const auto values = set.map(view, k).values();
    for (std::size_t j = 0; j < cells; ++j) out[j * static_cast<std::size_t>(joints) + static_cast<std::size_t>(k)] = values[j];
  }
  return out;
}

}  // namespace

HeatmapSet fuse_heatmaps(const HeatmapSet& set, const WeightBank& weights, FusionMode mode) {
  HeatmapSet out = set;
  if (mode == FusionMode::kIdentity || set.views() < 2) return out;

  const auto joints = static_cast<std::size_t>(set.joints());
  std::vector<std::vector<float>> sources(static_cast<std::size_t>(set.views()));
  for (int v = 0; v < set.views(); ++v) sources[static_cast<std::size_t>(v)] = interleave(set, v);

  std::vector<double> acc;
  std::vector<double> line_acc(joints);
  for (int u = 0; u < set.views(); ++u) {
    const std::size_t cells = set.dims(u).cells();
    acc.assign(cells * joints, 0.0);
    for (int v = 0; v < set.views(); ++v) {
      if (v == u) continue;
      const FusionWeights& w = lookup(weights, set, u, v);
      const std::vector<float>& src = sources[static_cast<std::size_t>(v)];
      for (std::size_t i = 0; i < cells; ++i) {
        const auto row = w.row(i);
        if (row.empty()) continue;
        double* a = acc.data() + i * joints;
        switch (mode) {
          case FusionMode::kWeighted:
            for (const auto& e : row) {
              const float* s = src.data() + static_cast<std::size_t>(e.col) * joints;
              for (std::size_t k = 0; k < joints; ++k) a[k] += e.weight * s[k];
            }
            break;
          case FusionMode::kLineSum:
            for (const auto& e : row) {
              const float* s = src.data() + static_cast<std::size_t>(e.col) * joints;
              for (std::size_t k = 0; k < joints; ++k) a[k] += s[k];
            }
            break;
          case FusionMode::kLineMax: {
            std::fill(line_acc.begin(), line_acc.end(), -std::numeric_limits<double>::infinity());
            for (const auto& e : row) {
              const float* s = src.data() + static_cast<std::size_t>(e.col) * joints;
              for (std::size_t k = 0; k < joints; ++k) line_acc[k] = std::max(line_acc[k], static_cast<double>(s[k]));
            }
            for (std::size_t k = 0; k < joints; ++k) a[k] += line_acc[k];
            break;
          }
          case FusionMode::kIdentity:
            break;
        }
      }
    }
    for (std::size_t k = 0; k < joints; ++k) {
      const auto in = set.map(u, static_cast<int>(k)).values();
      auto dst = out.map(u, static_cast<int>(k)).values();
      for (std::size_t i = 0; i < cells; ++i) {
        dst[i] = static_cast<float>(static_cast<double>(in[i]) + acc[i * joints + k]);
      }
    }
  }
  return out;
}

namespace {

struct Sample {
  std::span<const float> input;
  std::span<const float> source;
  std::span<const float> target;
};

std::vector<Sample> collect_samples(std::span<const FusionTrainingPair> pairs, const FusionWeights& w) {
  const int u = w.target_view();
  const int v = w.source_view();
  std::vector<Sample> samples;
  for (const auto& pair : pairs) {
    if (pair.input.joints() != pair.target.joints() || pair.input.views() != pair.target.views()) {
      throw Error(ErrorCode::kDimensionMismatch, "training input and target sets differ in shape");
    }
    if (u >= pair.input.views() || v >= pair.input.views()) {
      throw Error(ErrorCode::kDimensionMismatch, "training set lacks the weights' view pair");
    }
    if (pair.input.dims(u) != w.target_dims() || pair.input.dims(v) != w.source_dims() ||
        pair.target.dims(u) != w.target_dims()) {
      throw Error(ErrorCode::kDimensionMismatch, "training heatmaps do not match weight dimensions");
    }
    for (int k = 0; k < pair.input.joints(); ++k) {
      samples.push_back({pair.input.map(u, k).values(), pair.input.map(v, k).values(),
                         pair.target.map(u, k).values()});
    }
  }
  return samples;
}

}  // namespace

FusionWeights fit_fusion_weights(std::span<const FusionTrainingPair> pairs, const FusionWeights& support,
                                 double ridge_lambda) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one training pair is required");
  if (!(ridge_lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "ridge lambda must be >= 0");
  if (!support.complete()) throw Error(ErrorCode::kInvalidArgument, "support mask is incomplete");
  const std::vector<Sample> samples = collect_samples(pairs, support);
  const auto n = static_cast<Eigen::Index>(samples.size());

  FusionWeights fitted(support.target_view(), support.source_view(), support.target_dims(),
                       support.source_dims(), support.stride(), support.kernel_sigma());
  std::vector<FusionWeights::Entry> row;
  for (std::size_t i = 0; i < support.rows(); ++i) {
    const auto mask = support.row(i);
    row.assign(mask.begin(), mask.end());
    if (!row.empty()) {
      const auto k = static_cast<Eigen::Index>(row.size());
      Eigen::MatrixXd design(n, k);
      Eigen::VectorXd rhs(n);
      for (Eigen::Index s = 0; s < n; ++s) {
        const Sample& sample = samples[static_cast<std::size_t>(s)];
        for (Eigen::Index e = 0; e < k; ++e) design(s, e) = sample.source[row[static_cast<std::size_t>(e)].col];
        rhs(s) = static_cast<double>(sample.target[i]) - static_cast<double>(sample.input[i]);
      }
      Eigen::MatrixXd normal = design.transpose() * design;
      normal.diagonal().array() += ridge_lambda;
      const Eigen::VectorXd b = design.transpose() * rhs;
      Eigen::VectorXd solution;
      if (ridge_lambda > 0.0) {
        solution = normal.llt().solve(b);
      } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
        if (qr.rank() < k) {
          throw Error(ErrorCode::kSingularSystem,
                      "row " + std::to_string(i) + ": normal matrix is singular (rank " +
                          std::to_string(qr.rank()) + " < " + std::to_string(k) + ")");
        }
        solution = qr.solve(b);
      }
      for (Eigen::Index e = 0; e < k; ++e) row[static_cast<std::size_t>(e)].weight = solution(e);
    }
    fitted.push_row(row);
  }
  return fitted;
}

double fusion_training_error(std::span<const FusionTrainingPair> pairs, const FusionWeights& weights) {
  const std::vector<Sample> samples = collect_samples(pairs, weights);
  double total = 0.0;
  for (const Sample& s : samples) {
    for (std::size_t i = 0; i < weights.rows(); ++i) {
      double pred = s.input[i];
      for (const auto& e : weights.row(i)) pred += e.weight * s.source[e.col];
      const double r = static_cast<double>(s.target[i]) - pred;
      total += r * r;
    }
  }
  return total;
}

}  // namespace crossview
