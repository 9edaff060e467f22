#include "oda/divergence.hpp"

#include <cmath>

#include "oda/error.hpp"

namespace oda {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::EmptySeeds: return "EmptySeeds";
    case ErrorCode::DuplicateClassSeed: return "DuplicateClassSeed";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::NotInitialized: return "NotInitialized";
    case ErrorCode::ScheduleExhausted: return "ScheduleExhausted";
    case ErrorCode::NotClassifier: return "NotClassifier";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

std::string_view to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::SquaredEuclidean: return "euclidean";
    case DivergenceKind::GeneralizedI: return "i-divergence";
  }
  return "unknown";
}

std::optional<DivergenceKind> parse_divergence(std::string_view name) {
  if (name == "euclidean") return DivergenceKind::SquaredEuclidean;
  if (name == "i-divergence") return DivergenceKind::GeneralizedI;
  return std::nullopt;
}

Divergence::Divergence(DivergenceKind kind, std::size_t dimension)
    : kind_(kind), dimension_(dimension) {
  if (dimension == 0) {
    throw Error(ErrorCode::InvalidArgument, "divergence dimension must be positive");
  }
}

double Divergence::evaluate(std::span<const double> x, std::span<const double> mu) const {
  if (x.size() != dimension_ || mu.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch,
                "divergence expects vectors of length " + std::to_string(dimension_));
  }
  double acc = 0.0;
  if (kind_ == DivergenceKind::SquaredEuclidean) {
    for (std::size_t k = 0; k < dimension_; ++k) {
      const double diff = x[k] - mu[k];
      acc += diff * diff;
    }
    return acc;
  }
  for (std::size_t k = 0; k < dimension_; ++k) {
    if (!(x[k] > 0.0) || !(mu[k] > 0.0)) {
      throw Error(ErrorCode::DomainViolation,
                  "generalized I-divergence requires strictly positive coordinates");
    }
    acc += x[k] * (std::log(x[k]) - std::log(mu[k])) - (x[k] - mu[k]);
  }
  // Rounding can leave a tiny negative residue when x ~ mu.
  return acc < 0.0 ? 0.0 : acc;
}

bool Divergence::in_domain(std::span<const double> x) const {
  if (x.size() != dimension_) return false;
  for (double v : x) {
    if (!std::isfinite(v)) return false;
    if (kind_ == DivergenceKind::GeneralizedI && !(v > 0.0)) return false;
  }
  return true;
}

void Divergence::check_domain(std::span<const double> x) const {
  if (x.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected a vector of length " + std::to_string(dimension_) + ", got " +
                    std::to_string(x.size()));
  }
  if (!in_domain(x)) {
    throw Error(ErrorCode::DomainViolation,
                std::string("vector outside the domain of the ") +
                    std::string(to_string(kind_)) + " divergence");
  }
}

Vector Divergence::weighted_centroid(std::span<const Vector> points,
                                     std::span<const double> weights) const {
  if (points.size() != weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "points and weights differ in length");
  }
  Vector centroid(dimension_, 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dimension_) {
      throw Error(ErrorCode::DimensionMismatch, "centroid point has wrong dimension");
    }
    if (weights[i] < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "centroid weights must be nonnegative");
    }
    if (weights[i] == 0.0) continue;
    mass += weights[i];
    for (std::size_t k = 0; k < dimension_; ++k) centroid[k] += weights[i] * points[i][k];
  }
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::ZeroMass, "weighted centroid needs a positive total weight");
  }
  for (double& v : centroid) v /= mass;
  return centroid;
}

}  // namespace oda
