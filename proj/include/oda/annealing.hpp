#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "oda/data.hpp"
#include "oda/divergence.hpp"
#include "oda/report.hpp"

namespace oda {

// A prototype and its stochastic-approximation accumulators.
//   rho   ~ p(mu, c_mu)
//   sigma ~ E[X 1{mu}] so that mu = sigma / rho
struct Codevector {
  Vector mu;
  std::optional<Label> label;
  double rho = 1.0;
  Vector sigma;
  Vector prev_mu;
};

struct TemperatureSchedule {
  double t_max = 1.0;
  double t_min = 1e-3;
  double gamma = 0.8;
  double current = 1.0;

  /// True when gamma * current stays inside [t_min, t_max].
  bool can_lower() const noexcept;
  void lower();
  void validate() const;
};

// How the Gibbs membership treats codevectors of a foreign class when the
// sample's label is known.
enum class GibbsMode {
  // p(mu_i|x) ~ rho_i exp(-d(x, mu_i)/T) over every codevector; the class
  // indicator only gates the accumulator updates.
  AllCodevectors,
  // Class-conditioned distortion: foreign-class codevectors enter the
  // exponent with distortion 0.
  ClassMasked,
};

std::string_view to_string(GibbsMode mode);
std::optional<GibbsMode> parse_gibbs_mode(std::string_view name);

struct OdaConfig {
  explicit OdaConfig(Divergence div) : divergence(div) {}

  /// Default parameter set, scaled by the largest bounding-box edge
  /// `extent` and the dimension of `div`.
  static OdaConfig defaults(Divergence div, double extent);

  Divergence divergence;
  std::size_t k_max = 100;
  double t_max = 100.0;
  double t_min = 1e-3;
  double gamma = 0.8;
  double eps_c = 1e-4;
  double eps_n = 1e-3;
  double eps_r = 1e-7;
  double delta = 1e-2;
  // alpha_n = 1 / (step_a + step_b * n), n = 1, 2, ... within a level
  double step_a = 1.0;
  double step_b = 0.9;
  std::size_t max_obs_per_level = 10000;
  std::size_t check_every = 100;
  bool cross_class_split = true;
  GibbsMode gibbs_mode = GibbsMode::AllCodevectors;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Non-fatal advice (e.g. delta > eps_n).
  std::vector<std::string> warnings() const;
  TemperatureSchedule schedule() const;
};

double step_size(const OdaConfig& config, std::size_t n);

/// Normalized Gibbs weights p_i ~ prior_i * exp(-distortion_i / T), computed
/// in the log domain with a max-shift. Zero priors get zero weight; if every
/// prior is zero the result is uniform.
Vector gibbs_membership(std::span<const double> distortions, std::span<const double> priors,
                        double temperature);

/// rho += alpha (w - rho); sigma += alpha (w x - sigma); mu = sigma / rho
/// unless rho < rho_floor (then mu is frozen). `w` is the gated membership.
void sa_update(Codevector& cv, std::span<const double> x, double w, double alpha,
               double rho_floor);

/// Keep effective codevectors, drop idle ones, renormalize rho and reset
/// sigma = mu rho. The last codevector of each class (or the last one
/// overall in clustering) is never dropped.
void merge_and_prune(std::vector<Codevector>& codebook, const OdaConfig& config);

/// Replace every codevector with a symmetric pair mu +/- delta u (fresh
/// random unit u), plus one perturbed child per other class when
/// `cross_class_split` is on. rho is split evenly among the children. At most
/// k_max - K extra children are created, so the effective size never exceeds
/// k_max; parents beyond that budget are carried over unsplit.
void perturb_codebook(std::vector<Codevector>& codebook, const OdaConfig& config,
                      std::span<const Label> classes, std::mt19937_64& rng);

struct Quantization {
  std::size_t index = 0;
  double distortion = 0.0;
};

enum class AdvanceOutcome { Split, CapacityReached };
enum class LevelStatus { Running, Converged, ForcedAdvance };

class OdaModel {
 public:
  // Full serializable state; see persistence.hpp.
  struct State {
    OdaConfig config;
    TemperatureSchedule schedule;
    std::vector<Label> classes;
    std::vector<Codevector> codebook;
    std::size_t level = 0;
    std::size_t level_observations = 0;
    std::uint64_t total_observations = 0;
    std::string rng_state;
  };

  /// One seed per class (classification) or at least one unlabeled seed.
  static OdaModel init(OdaConfig config, std::span<const Sample> seeds);
  static OdaModel from_state(State state);
  State state() const;

  const OdaConfig& config() const noexcept { return config_; }
  const TemperatureSchedule& schedule() const noexcept { return schedule_; }
  double temperature() const noexcept { return schedule_.current; }
  const std::vector<Codevector>& codebook() const noexcept { return codebook_; }
  const std::vector<Label>& classes() const noexcept { return classes_; }
  bool is_classifier() const noexcept { return !classes_.empty(); }
  std::size_t size() const noexcept { return codebook_.size(); }
  std::size_t level() const noexcept { return level_; }
  std::size_t level_observations() const noexcept { return level_observations_; }
  std::uint64_t total_observations() const noexcept { return total_observations_; }
  const std::vector<LevelRecord>& history() const noexcept { return history_; }
  std::vector<LevelRecord>& history() noexcept { return history_; }

  Vector membership(std::span<const double> x, std::optional<Label> label = {}) const;
  void observe(std::span<const double> x, std::optional<Label> label = {});

  LevelStatus level_status() const;
  bool converged() const { return level_status() != LevelStatus::Running; }
  /// prev_mu <- mu for every codevector.
  void snapshot();

  AdvanceOutcome advance_level();
  void consolidate();
  /// Copy with merge_and_prune applied.
  OdaModel effective() const;

  Label predict(std::span<const double> x) const;
  Quantization quantize(std::span<const double> x) const;

 private:
  OdaModel(OdaConfig config, TemperatureSchedule schedule);
  void check_sample(std::span<const double> x, std::optional<Label> label) const;
  void membership_into(std::span<const double> x, std::optional<Label> label,
                       Vector& out) const;

  OdaConfig config_;
  TemperatureSchedule schedule_;
  std::vector<Label> classes_;
  std::vector<Codevector> codebook_;
  std::size_t level_ = 0;
  std::size_t level_observations_ = 0;
  std::uint64_t total_observations_ = 0;
  std::mt19937_64 rng_;
  std::vector<LevelRecord> history_;
  mutable Vector scratch_;
};

using SampleSource = std::function<Sample()>;

struct FitOptions {
  /// Scores each level (distortion, accuracy, F1) when set.
  const Dataset* eval = nullptr;
  /// Called after every level is recorded.
  std::function<void(const OdaModel&, const LevelRecord&)> on_level;
};

/// Observe samples until the level converges (or is force-advanced).
LevelStatus run_level(OdaModel& model, const SampleSource& source);

/// Anneal down to t_min, then consolidate. Once the codebook holds k_max
/// codevectors the levels keep cooling without splitting. Levels are
/// appended to model.history().
RunReport fit(OdaModel& model, const SampleSource& source, const FitOptions& options = {});

/// One seed per class at the class mean (classification), or the overall
/// mean (clustering / unlabeled data).
std::vector<Sample> class_mean_seeds(const Dataset& data, bool classification);

}  // namespace oda
