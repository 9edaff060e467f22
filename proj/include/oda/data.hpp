#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "oda/divergence.hpp"

namespace oda {

using Label = int;

struct Sample {
  Vector x;
  std::optional<Label> label;
};

struct Interval {
  double min = 0.0;
  double max = 0.0;
};

// Observations plus the metadata the learner derives its default
// parameters from. `labels` is either empty (unlabeled) or parallel to
// `points`.
struct Dataset {
  std::vector<Vector> points;
  std::vector<Label> labels;
  std::size_t dim = 0;
  std::vector<Interval> bounding_box;
  std::vector<Label> class_set;

  std::size_t size() const noexcept { return points.size(); }
  bool labeled() const noexcept { return !labels.empty(); }

  /// Length of the largest edge of the bounding box.
  double extent() const;

  Sample sample(std::size_t i) const;

  /// Rebuilds dim, bounding_box and class_set from points/labels and
  /// validates the shape.
  void refresh();

  static Dataset from(std::vector<Vector> points, std::vector<Label> labels = {});
};

Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

// Synthetic generators; pure functions of their arguments.

/// Two concentric rings, radius 1 (label 0) and 0.5 (label 1), Gaussian
/// radial noise with the given standard deviation.
Dataset gen_circles(std::size_t n = 1500, double noise = 0.05, std::uint64_t seed = 0);

/// Two interleaved half circles, isotropic Gaussian noise.
Dataset gen_moons(std::size_t n = 1500, double noise = 0.1, std::uint64_t seed = 0);

struct BlobCenter {
  Vector center;
  Label label = 0;
};

/// Four clusters, three classes: the two class-0 clusters sit on opposite
/// corners of a square so a classifier must grow past one prototype per class.
std::vector<BlobCenter> default_blob_centers();
inline constexpr double kDefaultBlobSpread = 0.75;

/// Gaussian mixture, points split evenly over centers (remainder to the
/// first ones); `spread` is the per-coordinate standard deviation.
Dataset gen_blobs(std::size_t n, const std::vector<BlobCenter>& centers, double spread,
                  std::uint64_t seed);
inline Dataset gen_blobs(std::size_t n = 1500, std::uint64_t seed = 0) {
  return gen_blobs(n, default_blob_centers(), kDefaultBlobSpread, seed);
}

struct CsvOptions {
  /// 0-based column index of the label; -1 means the last column.
  std::optional<int> label_column;
  /// Shift every column whose minimum is nonpositive so its minimum becomes
  /// 1e-6 (needed by the generalized I-divergence).
  bool positive_shift = false;
  /// Min-max scale each feature to [0, 1] before any positive shift.
  bool minmax_scale = false;
  /// Reject (and count) rows with non-numeric cells instead of failing.
  bool skip_bad_rows = false;
};

struct CsvResult {
  Dataset data;
  std::size_t rejected_rows = 0;
  bool had_header = false;
};

CsvResult load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
void write_csv(const std::filesystem::path& path, const Dataset& data);

inline constexpr double kPositiveShiftFloor = 1e-6;
void apply_positive_shift(Dataset& data);
void apply_minmax_scale(Dataset& data);

/// Seeded uniform draw of `n` rows without replacement (all rows if n >= size).
Dataset subsample(const Dataset& data, std::size_t n, std::uint64_t seed);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified k-fold split: test folds are disjoint, cover every index, and
/// each class is spread over the folds within one sample.
std::vector<Fold> kfold(const Dataset& data, std::size_t k, std::uint64_t seed);

// Infinite i.i.d. source: uniform draws with replacement.
class SampleStream {
 public:
  SampleStream(const Dataset& data, std::uint64_t seed);
  /// Restricts draws to the given rows of `data`.
  SampleStream(const Dataset& data, std::vector<std::size_t> rows, std::uint64_t seed);

  Sample next();
  std::size_t next_index();

 private:
  const Dataset* data_;
  std::vector<std::size_t> rows_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<std::size_t> pick_;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

}  // namespace oda
