#include "oda/metrics.hpp"

#include <algorithm>
#include <limits>

#include "oda/annealing.hpp"
#include "oda/baselines.hpp"
#include "oda/error.hpp"

namespace oda {

double average_distortion(const Divergence& div, std::span<const Vector> codebook,
                          const Dataset& data) {
  if (codebook.empty()) throw Error(ErrorCode::NotInitialized, "empty codebook");
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "no points to score");
  double total = 0.0;
  for (const auto& x : data.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& mu : codebook) best = std::min(best, div(x, mu));
    total += best;
  }
  return total / static_cast<double>(data.size());
}

double accuracy(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::DimensionMismatch, "truth and predictions differ in length");
  }
  if (truth.empty()) throw Error(ErrorCode::EmptyDataset, "no labels to score");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double f1_macro(std::span<const Label> truth, std::span<const Label> predicted,
                std::span<const Label> classes) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::DimensionMismatch, "truth and predictions differ in length");
  }
  if (classes.empty()) throw Error(ErrorCode::InvalidArgument, "f1 needs at least one class");
  double sum = 0.0;
  for (Label c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool is_c = truth[i] == c;
      const bool said_c = predicted[i] == c;
      tp += is_c && said_c;
      fp += !is_c && said_c;
      fn += is_c && !said_c;
    }
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return sum / static_cast<double>(classes.size());
}

std::vector<Label> predict_all(const OdaModel& model, const Dataset& data) {
  std::vector<Label> out;
  out.reserve(data.size());
  for (const auto& x : data.points) out.push_back(model.predict(x));
  return out;
}

std::vector<Label> predict_all(const BaselineModel& model, const Dataset& data) {
  std::vector<Label> out;
  out.reserve(data.size());
  for (const auto& x : data.points) out.push_back(model.predict(x));
  return out;
}

namespace {

void require_labels(const Dataset& data) {
  if (!data.labeled()) throw Error(ErrorCode::InvalidArgument, "dataset has no labels");
}

}  // namespace

double metric_distortion(const OdaModel& model, const Dataset& data) {
  std::vector<Vector> mus;
  mus.reserve(model.size());
  for (const auto& cv : model.codebook()) mus.push_back(cv.mu);
  return average_distortion(model.config().divergence, mus, data);
}

double metric_accuracy(const OdaModel& model, const Dataset& data) {
  if (!model.is_classifier()) throw Error(ErrorCode::NotClassifier, "clustering model");
  require_labels(data);
  return accuracy(data.labels, predict_all(model, data));
}

double metric_f1(const OdaModel& model, const Dataset& data) {
  if (!model.is_classifier()) throw Error(ErrorCode::NotClassifier, "clustering model");
  require_labels(data);
  return f1_macro(data.labels, predict_all(model, data), data.class_set);
}

double metric_distortion(const BaselineModel& model, const Dataset& data) {
  return average_distortion(model.divergence, model.codebook, data);
}

double metric_accuracy(const BaselineModel& model, const Dataset& data) {
  if (!model.is_classifier()) throw Error(ErrorCode::NotClassifier, "clustering model");
  require_labels(data);
  return accuracy(data.labels, predict_all(model, data));
}

double metric_f1(const BaselineModel& model, const Dataset& data) {
  if (!model.is_classifier()) throw Error(ErrorCode::NotClassifier, "clustering model");
  require_labels(data);
  return f1_macro(data.labels, predict_all(model, data), data.class_set);
}

}  // namespace oda
