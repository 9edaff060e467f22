#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oda {

using Vector = std::vector<double>;

enum class DivergenceKind {
  SquaredEuclidean,
  GeneralizedI,
};

std::string_view to_string(DivergenceKind kind);
/// Accepts the config spellings "euclidean" and "i-divergence".
std::optional<DivergenceKind> parse_divergence(std::string_view name);

// A Bregman divergence d_phi(x, mu) on R^d.
//
//   SquaredEuclidean: phi(x) = <x, x>,     d = ||x - mu||^2
//   GeneralizedI:     phi(x) = <x, log x>, d = <x, log x - log mu> - <1, x - mu>
//
// The generalized I-divergence is only defined on the open positive orthant;
// nonpositive coordinates are rejected, never clamped.
class Divergence {
 public:
  Divergence(DivergenceKind kind, std::size_t dimension);

  DivergenceKind kind() const noexcept { return kind_; }
  std::size_t dimension() const noexcept { return dimension_; }

  double operator()(std::span<const double> x, std::span<const double> mu) const {
    return evaluate(x, mu);
  }
  double evaluate(std::span<const double> x, std::span<const double> mu) const;

  bool in_domain(std::span<const double> x) const;
  /// Throws DimensionMismatch / DomainViolation.
  void check_domain(std::span<const double> x) const;

  /// Minimizer of sum_i w_i d(x_i, mu). For any Bregman divergence this is the
  /// weighted arithmetic mean, regardless of kind.
  Vector weighted_centroid(std::span<const Vector> points,
                           std::span<const double> weights) const;

  bool operator==(const Divergence&) const = default;

 private:
  DivergenceKind kind_;
  std::size_t dimension_;
};

}  // namespace oda
