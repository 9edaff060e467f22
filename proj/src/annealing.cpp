#include "oda/annealing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "oda/error.hpp"
#include "oda/metrics.hpp"

namespace oda {

namespace {

void config_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::ConfigError, field + ": " + message);
}

bool same_class(const Codevector& a, const Codevector& b) { return a.label == b.label; }

}  // namespace

// ---------------------------------------------------------------------------
// TemperatureSchedule

bool TemperatureSchedule::can_lower() const noexcept {
  // Relative slack so that t_max * gamma^k == t_min counts as reachable.
  return gamma * current >= t_min * (1.0 - 1e-12);
}

void TemperatureSchedule::lower() {
  if (!can_lower()) {
    throw Error(ErrorCode::ScheduleExhausted,
                "temperature " + std::to_string(current) + " cannot be lowered below t_min " +
                    std::to_string(t_min));
  }
  current *= gamma;
}

void TemperatureSchedule::validate() const {
  if (!(t_min > 0.0)) config_error("t_min", "must be positive");
  if (!(t_max > t_min)) config_error("t_max", "must exceed t_min");
  if (!(gamma > 0.0 && gamma < 1.0)) config_error("gamma", "must lie in (0, 1)");
  if (!(current >= t_min * (1.0 - 1e-12) && current <= t_max * (1.0 + 1e-12))) {
    config_error("temperature", "must lie in [t_min, t_max]");
  }
}

// ---------------------------------------------------------------------------
// OdaConfig

std::string_view to_string(GibbsMode mode) {
  return mode == GibbsMode::AllCodevectors ? "all" : "class-masked";
}

std::optional<GibbsMode> parse_gibbs_mode(std::string_view name) {
  if (name == "all") return GibbsMode::AllCodevectors;
  if (name == "class-masked") return GibbsMode::ClassMasked;
  return std::nullopt;
}

OdaConfig OdaConfig::defaults(Divergence div, double extent) {
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw Error(ErrorCode::InvalidArgument, "data extent must be positive and finite");
  }
  OdaConfig c(div);
  const double scale = extent * static_cast<double>(div.dimension());
  c.t_max = 100.0 * scale;
  c.t_min = 0.001 * scale;
  c.gamma = 0.8;
  c.eps_c = 0.0001 * scale;
  c.eps_n = 0.001 * scale;
  c.eps_r = 1e-7;
  c.delta = 0.01 * scale;
  c.step_a = 1.0;
  c.step_b = 0.9;
  c.k_max = 100;
  return c;
}

void OdaConfig::validate() const {
  if (k_max < 1) config_error("k_max", "must be positive");
  schedule().validate();
  if (!(eps_c > 0.0)) config_error("eps_c", "must be positive");
  if (!(eps_n > 0.0)) config_error("eps_n", "must be positive");
  if (!(eps_r > 0.0 && eps_r < 1.0)) config_error("eps_r", "must lie in (0, 1)");
  if (!(delta > 0.0)) config_error("delta", "must be positive");
  if (!(step_a > 0.0)) config_error("step_a", "must be positive");
  if (!(step_b > 0.0)) config_error("step_b", "must be positive");
  if (max_obs_per_level < 1) config_error("max_obs_per_level", "must be positive");
  if (check_every < 1) config_error("check_every", "must be positive");
}

std::vector<std::string> OdaConfig::warnings() const {
  std::vector<std::string> out;
  if (delta > eps_n) {
    out.push_back("delta (" + std::to_string(delta) + ") exceeds eps_n (" +
                  std::to_string(eps_n) + "); perturbed pairs may be slow to re-merge");
  }
  if (eps_r > 1e-3) out.push_back("eps_r is not small; idle removal may prune live codevectors");
  return out;
}

TemperatureSchedule OdaConfig::schedule() const {
  return TemperatureSchedule{t_max, t_min, gamma, t_max};
}

double step_size(const OdaConfig& config, std::size_t n) {
  return 1.0 / (config.step_a + config.step_b * static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Codebook mechanics

Vector gibbs_membership(std::span<const double> distortions, std::span<const double> priors,
                        double temperature) {
  const std::size_t k = distortions.size();
  if (priors.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "distortions and priors differ in length");
  }
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  Vector p(k);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double top = kNegInf;
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = priors[i] > 0.0 ? std::log(priors[i]) - distortions[i] / temperature : kNegInf;
    top = std::max(top, p[i]);
  }
  if (top == kNegInf) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(k));
    return p;
  }
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

void sa_update(Codevector& cv, std::span<const double> x, double w, double alpha,
               double rho_floor) {
  cv.rho += alpha * (w - cv.rho);
  const std::size_t d = x.size();
  for (std::size_t k = 0; k < d; ++k) cv.sigma[k] += alpha * (w * x[k] - cv.sigma[k]);
  if (cv.rho >= rho_floor) {
    for (std::size_t k = 0; k < d; ++k) cv.mu[k] = cv.sigma[k] / cv.rho;
  }
}

void merge_and_prune(std::vector<Codevector>& codebook, const OdaConfig& config) {
  const Divergence& div = config.divergence;

  // (1) keep effective codevectors: the lower index survives and absorbs rho
  std::vector<Codevector> kept;
  kept.reserve(codebook.size());
  for (auto& cv : codebook) {
    bool merged = false;
    for (auto& survivor : kept) {
      if (same_class(survivor, cv) && div(cv.mu, survivor.mu) < config.eps_n) {
        survivor.rho += cv.rho;
        merged = true;
        break;
      }
    }
    if (!merged) kept.push_back(std::move(cv));
  }

  // (2) idle removal, protecting the strongest member of each class
  std::map<std::optional<Label>, std::size_t> strongest;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    auto [it, inserted] = strongest.try_emplace(kept[i].label, i);
    if (!inserted && kept[i].rho > kept[it->second].rho) it->second = i;
  }
  std::vector<Codevector> alive;
  alive.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i].rho >= config.eps_r || strongest.at(kept[i].label) == i) {
      alive.push_back(std::move(kept[i]));
    }
  }

  // (3) renormalize
  double total = 0.0;
  for (const auto& cv : alive) total += cv.rho;
  for (auto& cv : alive) {
    cv.rho = total > 0.0 ? cv.rho / total : 1.0 / static_cast<double>(alive.size());
    cv.sigma = cv.mu;
    for (double& v : cv.sigma) v *= cv.rho;
    cv.prev_mu = cv.mu;
  }
  codebook = std::move(alive);
}

namespace {

Vector random_unit(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector u(d);
  for (;;) {
    double norm2 = 0.0;
    for (double& v : u) {
      v = gauss(rng);
      norm2 += v * v;
    }
    if (norm2 > 1e-24) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& v : u) v *= inv;
      return u;
    }
  }
}

// Perturbation offset delta*u, shrunk when needed so that mu +/- offset stays
// at or above mu/2 coordinate-wise (generalized I-divergence domain).
Vector perturbation(const Codevector& cv, const OdaConfig& config, std::mt19937_64& rng) {
  Vector u = random_unit(cv.mu.size(), rng);
  double scale = config.delta;
  if (config.divergence.kind() == DivergenceKind::GeneralizedI) {
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (u[k] != 0.0) scale = std::min(scale, 0.5 * cv.mu[k] / std::abs(u[k]));
    }
  }
  for (double& v : u) v *= scale;
  return u;
}

Codevector child(const Codevector& parent, const Vector& offset, double sign,
                 std::optional<Label> label, double rho) {
  Codevector c;
  c.mu = parent.mu;
  for (std::size_t k = 0; k < c.mu.size(); ++k) c.mu[k] += sign * offset[k];
  c.label = label;
  c.rho = rho;
  c.sigma = c.mu;
  for (double& v : c.sigma) v *= rho;
  c.prev_mu = c.mu;
  return c;
}

}  // namespace

void perturb_codebook(std::vector<Codevector>& codebook, const OdaConfig& config,
                      std::span<const Label> classes, std::mt19937_64& rng) {
  // Every child beyond its parent can become one more effective codevector,
  // so the extra children are capped at k_max - K. Same-class pairs are
  // granted first (codebook order), then foreign-class children.
  std::size_t extra = config.k_max > codebook.size() ? config.k_max - codebook.size() : 0;
  const bool cross = config.cross_class_split && classes.size() > 1;

  std::vector<bool> split(codebook.size(), false);
  for (std::size_t i = 0; i < codebook.size() && extra > 0; ++i, --extra) split[i] = true;
  std::vector<std::vector<Label>> others(codebook.size());
  for (std::size_t i = 0; i < codebook.size() && cross; ++i) {
    if (!codebook[i].label) continue;
    for (Label c : classes) {
      if (c != *codebook[i].label && extra > 0) {
        others[i].push_back(c);
        --extra;
      }
    }
  }

  std::vector<Codevector> next;
  next.reserve(config.k_max);
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    const auto& parent = codebook[i];
    if (!split[i]) {
      next.push_back(parent);
      continue;
    }
    const double share = parent.rho / static_cast<double>(2 + others[i].size());
    const Vector offset = perturbation(parent, config, rng);
    next.push_back(child(parent, offset, +1.0, parent.label, share));
    next.push_back(child(parent, offset, -1.0, parent.label, share));
    for (Label c : others[i]) {
      next.push_back(child(parent, perturbation(parent, config, rng), +1.0, c, share));
    }
  }
  codebook = std::move(next);
}

// ---------------------------------------------------------------------------
// OdaModel

OdaModel::OdaModel(OdaConfig config, TemperatureSchedule schedule)
    : config_(std::move(config)), schedule_(schedule), rng_(config_.seed) {}

OdaModel OdaModel::init(OdaConfig config, std::span<const Sample> seeds) {
  config.validate();
  if (seeds.empty()) throw Error(ErrorCode::EmptySeeds, "init needs at least one seed");
  const bool labeled = seeds.front().label.has_value();
  for (const auto& s : seeds) {
    if (s.label.has_value() != labeled) {
      throw Error(ErrorCode::InvalidArgument, "seeds must be all labeled or all unlabeled");
    }
    config.divergence.check_domain(s.x);
  }

  OdaModel model(config, config.schedule());
  if (labeled) {
    for (const auto& s : seeds) {
      if (std::find(model.classes_.begin(), model.classes_.end(), *s.label) !=
          model.classes_.end()) {
        throw Error(ErrorCode::DuplicateClassSeed,
                    "more than one seed for class " + std::to_string(*s.label));
      }
      model.classes_.push_back(*s.label);
    }
    std::sort(model.classes_.begin(), model.classes_.end());
  }
  for (const auto& s : seeds) {
    Codevector cv;
    cv.mu = s.x;
    cv.label = s.label;
    cv.rho = 1.0;
    cv.sigma = cv.mu;
    cv.prev_mu = cv.mu;
    model.codebook_.push_back(std::move(cv));
  }
  return model;
}

OdaModel OdaModel::from_state(State state) {
  state.config.validate();
  state.schedule.validate();
  if (state.codebook.empty()) throw Error(ErrorCode::NotInitialized, "model has no codevectors");
  const std::size_t d = state.config.divergence.dimension();
  for (const auto& cv : state.codebook) {
    if (cv.mu.size() != d || cv.sigma.size() != d || cv.prev_mu.size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "codevector dimension mismatch");
    }
    if (cv.label.has_value() != !state.classes.empty()) {
      throw Error(ErrorCode::FormatError, "codevector labels inconsistent with class set");
    }
    if (cv.label && !std::binary_search(state.classes.begin(), state.classes.end(), *cv.label)) {
      throw Error(ErrorCode::UnknownLabel, "codevector label not in class set");
    }
  }
  OdaModel model(state.config, state.schedule);
  model.classes_ = std::move(state.classes);
  model.codebook_ = std::move(state.codebook);
  model.level_ = state.level;
  model.level_observations_ = state.level_observations;
  model.total_observations_ = state.total_observations;
  if (!state.rng_state.empty()) {
    std::istringstream in(state.rng_state);
    in >> model.rng_;
    if (!in) throw Error(ErrorCode::FormatError, "unreadable rng state");
  }
  return model;
}

OdaModel::State OdaModel::state() const {
  std::ostringstream rng;
  rng << rng_;
  return State{config_,     schedule_,          classes_,           codebook_,
               level_,      level_observations_, total_observations_, rng.str()};
}

void OdaModel::check_sample(std::span<const double> x, std::optional<Label> label) const {
  config_.divergence.check_domain(x);
  if (is_classifier()) {
    if (!label) throw Error(ErrorCode::UnknownLabel, "classification model needs a label");
    if (!std::binary_search(classes_.begin(), classes_.end(), *label)) {
      throw Error(ErrorCode::UnknownLabel, "label " + std::to_string(*label) + " is not a class");
    }
  }
}

void OdaModel::membership_into(std::span<const double> x, std::optional<Label> label,
                               Vector& out) const {
  const std::size_t k = codebook_.size();
  Vector distortion(k);
  Vector prior(k);
  const bool masked =
      is_classifier() && label && config_.gibbs_mode == GibbsMode::ClassMasked;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& cv = codebook_[i];
    distortion[i] = (masked && cv.label != label) ? 0.0 : config_.divergence(x, cv.mu);
    prior[i] = cv.rho;
  }
  out = gibbs_membership(distortion, prior, schedule_.current);
}

Vector OdaModel::membership(std::span<const double> x, std::optional<Label> label) const {
  check_sample(x, label);
  Vector p;
  membership_into(x, label, p);
  return p;
}

void OdaModel::observe(std::span<const double> x, std::optional<Label> label) {
  if (codebook_.empty()) throw Error(ErrorCode::NotInitialized, "model has no codevectors");
  check_sample(x, label);
  membership_into(x, label, scratch_);
  ++level_observations_;
  ++total_observations_;
  const double alpha = step_size(config_, level_observations_);
  for (std::size_t i = 0; i < codebook_.size(); ++i) {
    auto& cv = codebook_[i];
    const double gate = (!is_classifier() || cv.label == label) ? 1.0 : 0.0;
    sa_update(cv, x, gate * scratch_[i], alpha, config_.eps_r);
  }
}

LevelStatus OdaModel::level_status() const {
  bool settled = true;
  for (const auto& cv : codebook_) {
    if (!(config_.divergence(cv.mu, cv.prev_mu) < config_.eps_c)) {
      settled = false;
      break;
    }
  }
  if (settled) return LevelStatus::Converged;
  if (level_observations_ >= config_.max_obs_per_level) return LevelStatus::ForcedAdvance;
  return LevelStatus::Running;
}

void OdaModel::snapshot() {
  for (auto& cv : codebook_) cv.prev_mu = cv.mu;
}

void OdaModel::consolidate() { merge_and_prune(codebook_, config_); }

AdvanceOutcome OdaModel::advance_level() {
  if (!schedule_.can_lower()) {
    throw Error(ErrorCode::ScheduleExhausted, "temperature schedule exhausted");
  }
  consolidate();
  schedule_.lower();
  ++level_;
  level_observations_ = 0;
  if (codebook_.size() >= config_.k_max) {
    snapshot();
    return AdvanceOutcome::CapacityReached;
  }
  perturb_codebook(codebook_, config_, classes_, rng_);
  snapshot();
  return AdvanceOutcome::Split;
}

OdaModel OdaModel::effective() const {
  OdaModel copy = *this;
  copy.history_.clear();
  copy.consolidate();
  return copy;
}

Label OdaModel::predict(std::span<const double> x) const {
  if (!is_classifier()) throw Error(ErrorCode::NotClassifier, "model was trained for clustering");
  config_.divergence.check_domain(x);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  double best_score = kNegInf;
  double best_distortion = std::numeric_limits<double>::infinity();
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < codebook_.size(); ++i) {
    const auto& cv = codebook_[i];
    const double d = config_.divergence(x, cv.mu);
    const double score = cv.rho > 0.0 ? std::log(cv.rho) - d / schedule_.current : kNegInf;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
    if (d < best_distortion) {
      best_distortion = d;
      nearest = i;
    }
  }
  if (best_score == kNegInf) best = nearest;
  return *codebook_[best].label;
}

Quantization OdaModel::quantize(std::span<const double> x) const {
  config_.divergence.check_domain(x);
  Quantization q{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < codebook_.size(); ++i) {
    const double d = config_.divergence(x, codebook_[i].mu);
    if (d < q.distortion) q = {i, d};
  }
  return q;
}

// ---------------------------------------------------------------------------
// Training loop

LevelStatus run_level(OdaModel& model, const SampleSource& source) {
  const std::size_t every = model.config().check_every;
  for (;;) {
    const Sample s = source();
    model.observe(s.x, model.is_classifier() ? s.label : std::nullopt);
    const std::size_t n = model.level_observations();
    if (n >= model.config().max_obs_per_level) {
      const LevelStatus status = model.level_status();
      model.snapshot();
      return status == LevelStatus::Converged ? status : LevelStatus::ForcedAdvance;
    }
    if (n % every == 0) {
      if (model.level_status() == LevelStatus::Converged) {
        model.snapshot();
        return LevelStatus::Converged;
      }
      model.snapshot();
    }
  }
}

namespace {

LevelRecord score_level(const OdaModel& model, LevelStatus status, double wall_ms,
                        const Dataset* eval) {
  const OdaModel eff = model.effective();
  LevelRecord r;
  r.level = model.level();
  r.temperature = model.temperature();
  r.k_effective = eff.size();
  r.samples_seen = model.total_observations();
  r.level_observations = model.level_observations();
  r.wall_time_ms = wall_ms;
  r.forced_advance = status == LevelStatus::ForcedAdvance;
  if (eval != nullptr && eval->size() > 0) {
    r.avg_distortion = metric_distortion(eff, *eval);
    if (eff.is_classifier() && eval->labeled()) {
      const auto predicted = predict_all(eff, *eval);
      r.accuracy = accuracy(eval->labels, predicted);
      r.f1_macro = f1_macro(eval->labels, predicted, eval->class_set);
    }
  }
  return r;
}

}  // namespace

RunReport fit(OdaModel& model, const SampleSource& source, const FitOptions& options) {
  using Clock = std::chrono::steady_clock;
  RunReport report;
  report.algorithm = "oda";
  report.rng_seed = model.config().seed;

  for (;;) {
    const auto start = Clock::now();
    const LevelStatus status = run_level(model, source);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    LevelRecord record = score_level(model, status, ms, options.eval);
    model.history().push_back(record);
    report.levels.push_back(record);
    if (options.on_level) options.on_level(model, record);

    if (!model.schedule().can_lower()) break;
    model.advance_level();
  }
  model.consolidate();

  const auto& last = report.levels.back();
  report.final_k = model.size();
  report.samples_seen = model.total_observations();
  report.final_distortion = last.avg_distortion;
  report.final_accuracy = last.accuracy;
  report.final_f1 = last.f1_macro;
  return report;
}

std::vector<Sample> class_mean_seeds(const Dataset& data, bool classification) {
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "cannot seed from an empty dataset");
  std::map<std::optional<Label>, std::pair<Vector, std::size_t>> sums;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::optional<Label> key;
    if (classification && data.labeled()) key = data.labels[i];
    auto& [sum, count] = sums[key];
    if (sum.empty()) sum.assign(data.dim, 0.0);
    for (std::size_t k = 0; k < data.dim; ++k) sum[k] += data.points[i][k];
    ++count;
  }
  std::vector<Sample> seeds;
  for (auto& [label, acc] : sums) {
    auto& [sum, count] = acc;
    for (double& v : sum) v /= static_cast<double>(count);
    seeds.push_back({std::move(sum), label});
  }
  return seeds;
}

}  // namespace oda
