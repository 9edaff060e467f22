#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "oda/annealing.hpp"
#include "oda/data.hpp"
#include "oda/divergence.hpp"
#include "oda/report.hpp"

namespace oda {

enum class BaselineKind { SVQ, KMeans, BatchDA };

std::string_view to_string(BaselineKind kind);
std::optional<BaselineKind> parse_baseline_kind(std::string_view name);

// Codebook shared by the reference algorithms. `labels` is empty for
// clustering, otherwise parallel to `codebook`.
struct BaselineModel {
  BaselineKind kind = BaselineKind::KMeans;
  Divergence divergence{DivergenceKind::SquaredEuclidean, 1};
  std::vector<Vector> codebook;
  std::vector<Label> labels;
  std::vector<std::uint64_t> update_counts;  // v(h, t), sVQ only
  /// Soft-assignment priors (batch DA only).
  std::vector<double> rho;
  /// Temperature the batch DA run stopped at.
  std::optional<double> temperature;

  bool is_classifier() const noexcept { return !labels.empty(); }
  Quantization quantize(std::span<const double> x) const;
  /// Label of the nearest codevector; NotClassifier when unlabeled.
  Label predict(std::span<const double> x) const;
  void validate() const;
};

using StepSizeFn = std::function<double(std::uint64_t)>;

/// alpha(v) = 1 / (a + b v)
StepSizeFn harmonic_step(double a = 1.0, double b = 1.0);

/// One stochastic VQ update: only the winner moves,
///   mu_h <- mu_h + alpha(v_h) M (x - mu_h),
/// with M = I (squared Euclidean) or diag(1/mu_h) (generalized I-divergence,
/// coordinates projected back to >= 1e-12). For a labeled codebook and a
/// labeled sample the winner is the nearest codevector of the sample's class.
void svq_step(BaselineModel& model, std::span<const double> x, const StepSizeFn& step,
              std::optional<Label> label = std::nullopt);

struct SvqOptions {
  std::uint64_t samples = 10000;
  std::uint64_t record_every = 1000;
  StepSizeFn step = harmonic_step(1.0, 0.9);
  const Dataset* eval = nullptr;
};

/// Runs svq_step on `samples` draws from `source`, recording a trace.
RunReport svq_fit(BaselineModel& model, const SampleSource& source, const SvqOptions& options);

/// Initial sVQ codebook: `copies[c]` jittered replicas (offset `jitter`) of
/// each seed, labeled like the seed.
BaselineModel svq_init(const Divergence& div, std::span<const Sample> seeds,
                       std::span<const std::size_t> copies, double jitter, std::uint64_t seed);

struct KMeansResult {
  BaselineModel model;
  std::vector<double> distortion_trace;  // after every assignment step
  std::size_t iterations = 0;
  RunReport report;
};

/// Lloyd's algorithm under d_phi with farthest-point seeding from a random
/// start. An emptied cluster is reseeded at the point of largest distortion.
KMeansResult kmeans_fit(const Dataset& data, const Divergence& div, std::size_t k,
                        std::uint64_t seed, std::size_t max_iter = 300);

struct BatchDaOptions {
  std::size_t max_iter_per_level = 500;
};

struct BatchDaResult {
  BaselineModel model;
  RunReport report;
};

/// Offline deterministic annealing: at each temperature alternate Gibbs
/// memberships over the whole dataset and weighted-mean centroids until the
/// largest move is below eps_c, then merge / prune / cool / perturb exactly
/// like the online learner.
BatchDaResult batch_da_fit(const Dataset& data, const OdaConfig& config,
                           const BatchDaOptions& options = {});

}  // namespace oda
