#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oda/annealing.hpp"
#include "oda/data.hpp"
#include "oda/persistence.hpp"
#include "oda/report.hpp"

namespace oda {

struct DatasetSpec {
  std::string source = "blobs";  // blobs | circles | moons | csv
  std::string name;              // display name; keys the reference table
  std::size_t n = 1500;
  double noise = 0.05;
  double spread = kDefaultBlobSpread;
  std::uint64_t seed = 0;
  std::string path;
  std::optional<int> label_column = -1;  // -1 = last, nullopt = unlabeled
  bool positive_shift = false;
  bool minmax_scale = false;
  std::optional<std::size_t> subsample;
};

// Experiment document. Every key is optional; see README for the schema.
struct ExperimentConfig {
  DatasetSpec dataset;
  std::string algo = "oda";  // oda | svq | kmeans | batch-da
  bool classification = true;
  DivergenceKind divergence = DivergenceKind::SquaredEuclidean;
  std::size_t folds = 5;  // 1 = train and evaluate on the full dataset
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  std::string seeding = "class-mean";  // class-mean | outside
  /// Explicit OdaConfig fields overriding the extent-scaled defaults.
  nlohmann::json oda_overrides = nlohmann::json::object();
  std::size_t svq_record_every = 1000;
  std::size_t kmeans_max_iter = 300;
  std::optional<std::filesystem::path> output_dir;
  bool timing = false;

  nlohmann::json to_json() const;
};

/// Throws ConfigError with the JSON path of the offending field.
ExperimentConfig parse_experiment(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path);

Dataset materialize(const DatasetSpec& spec);

/// Extent-scaled defaults with `overrides` applied (field names as in
/// OdaConfig). ConfigError names "oda.<field>" on bad input.
OdaConfig resolve_oda_config(const Divergence& div, double extent,
                             const nlohmann::json& overrides);

/// One seed per class placed beyond the upper corner of the bounding box.
std::vector<Sample> outside_seeds(const Dataset& data, bool classification);

struct MetricSummary {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;  // unbiased (n - 1); 0 for a single value
};

MetricSummary summarize(std::vector<double> values);

struct TrainedModel {
  AnyModel model;
  RunReport report;
};

/// Trains `config.algo` on `train` (scoring levels on `eval` when given).
/// sVQ and k-means first run ODA on the same data to obtain K.
TrainedModel train(const ExperimentConfig& config, const Dataset& train, const Dataset* eval,
                   std::uint64_t seed);

struct ExperimentResult {
  std::vector<RunReport> folds;
  nlohmann::json aggregate;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Published 5-fold accuracies (F1 for Credit Card) of the comparison
/// classifiers, keyed by dataset name; null when unknown.
nlohmann::json reference_scores(const std::string& dataset_name);

}  // namespace oda
