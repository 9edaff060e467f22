#include "oda/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "oda/error.hpp"
#include "oda/metrics.hpp"

namespace oda {

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::SVQ: return "svq";
    case BaselineKind::KMeans: return "kmeans";
    case BaselineKind::BatchDA: return "batch-da";
  }
  return "unknown";
}

std::optional<BaselineKind> parse_baseline_kind(std::string_view name) {
  if (name == "svq") return BaselineKind::SVQ;
  if (name == "kmeans") return BaselineKind::KMeans;
  if (name == "batch-da") return BaselineKind::BatchDA;
  return std::nullopt;
}

Quantization BaselineModel::quantize(std::span<const double> x) const {
  if (codebook.empty()) throw Error(ErrorCode::NotInitialized, "empty codebook");
  divergence.check_domain(x);
  Quantization q{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    const double d = divergence(x, codebook[i]);
    if (d < q.distortion) q = {i, d};
  }
  return q;
}

Label BaselineModel::predict(std::span<const double> x) const {
  if (!is_classifier()) throw Error(ErrorCode::NotClassifier, "baseline model has no labels");
  return labels[quantize(x).index];
}

void BaselineModel::validate() const {
  if (codebook.empty()) throw Error(ErrorCode::NotInitialized, "empty codebook");
  for (const auto& mu : codebook) divergence.check_domain(mu);
  if (!labels.empty() && labels.size() != codebook.size()) {
    throw Error(ErrorCode::FormatError, "labels and codebook differ in length");
  }
  if (!update_counts.empty() && update_counts.size() != codebook.size()) {
    throw Error(ErrorCode::FormatError, "update counts and codebook differ in length");
  }
  if (!rho.empty() && rho.size() != codebook.size()) {
    throw Error(ErrorCode::FormatError, "rho and codebook differ in length");
  }
}

// ---------------------------------------------------------------------------
// Stochastic VQ

StepSizeFn harmonic_step(double a, double b) {
  return [a, b](std::uint64_t v) { return 1.0 / (a + b * static_cast<double>(v)); };
}

void svq_step(BaselineModel& model, std::span<const double> x, const StepSizeFn& step,
              std::optional<Label> label) {
  if (model.codebook.empty()) throw Error(ErrorCode::NotInitialized, "empty codebook");
  model.divergence.check_domain(x);
  if (model.update_counts.size() != model.codebook.size()) {
    model.update_counts.assign(model.codebook.size(), 0);
  }
  const bool restrict = model.is_classifier() && label.has_value();
  std::size_t winner = model.codebook.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h < model.codebook.size(); ++h) {
    if (restrict && model.labels[h] != *label) continue;
    const double d = model.divergence(x, model.codebook[h]);
    if (d < best) {
      best = d;
      winner = h;
    }
  }
  if (winner == model.codebook.size()) {
    throw Error(ErrorCode::UnknownLabel, "no codevector carries label " + std::to_string(*label));
  }

  auto& mu = model.codebook[winner];
  const double alpha = step(model.update_counts[winner]);
  if (model.divergence.kind() == DivergenceKind::SquaredEuclidean) {
    for (std::size_t k = 0; k < mu.size(); ++k) mu[k] += alpha * (x[k] - mu[k]);
  } else {
    for (std::size_t k = 0; k < mu.size(); ++k) {
      mu[k] = std::max(1e-12, mu[k] + alpha * (x[k] - mu[k]) / mu[k]);
    }
  }
  ++model.update_counts[winner];
}

RunReport svq_fit(BaselineModel& model, const SampleSource& source, const SvqOptions& options) {
  using Clock = std::chrono::steady_clock;
  RunReport report;
  report.algorithm = "svq";
  const std::uint64_t every = std::max<std::uint64_t>(1, options.record_every);
  auto start = Clock::now();
  for (std::uint64_t t = 1; t <= options.samples; ++t) {
    const Sample s = source();
    svq_step(model, s.x, options.step, model.is_classifier() ? s.label : std::nullopt);
    if (t % every == 0 || t == options.samples) {
      LevelRecord r;
      r.level = report.levels.size();
      r.k_effective = model.codebook.size();
      r.samples_seen = t;
      r.level_observations = t - (report.levels.empty() ? 0 : report.levels.back().samples_seen);
      r.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      start = Clock::now();
      if (options.eval != nullptr) {
        r.avg_distortion = metric_distortion(model, *options.eval);
        if (model.is_classifier() && options.eval->labeled()) {
          const auto predicted = predict_all(model, *options.eval);
          r.accuracy = accuracy(options.eval->labels, predicted);
          r.f1_macro = f1_macro(options.eval->labels, predicted, options.eval->class_set);
        }
      }
      report.levels.push_back(r);
    }
  }
  report.final_k = model.codebook.size();
  report.samples_seen = options.samples;
  if (!report.levels.empty()) {
    report.final_distortion = report.levels.back().avg_distortion;
    report.final_accuracy = report.levels.back().accuracy;
    report.final_f1 = report.levels.back().f1_macro;
  }
  return report;
}

BaselineModel svq_init(const Divergence& div, std::span<const Sample> seeds,
                       std::span<const std::size_t> copies, double jitter, std::uint64_t seed) {
  if (seeds.empty()) throw Error(ErrorCode::EmptySeeds, "svq_init needs seeds");
  if (copies.size() != seeds.size()) {
    throw Error(ErrorCode::InvalidArgument, "one copy count per seed expected");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  BaselineModel model;
  model.kind = BaselineKind::SVQ;
  model.divergence = div;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    div.check_domain(seeds[s].x);
    for (std::size_t c = 0; c < std::max<std::size_t>(1, copies[s]); ++c) {
      Vector mu = seeds[s].x;
      if (c > 0) {
        for (double& v : mu) {
          const double moved = v + jitter * gauss(rng);
          v = div.kind() == DivergenceKind::GeneralizedI ? std::max(moved, 0.5 * v) : moved;
        }
      }
      model.codebook.push_back(std::move(mu));
      if (seeds[s].label) model.labels.push_back(*seeds[s].label);
    }
  }
  if (!model.labels.empty() && model.labels.size() != model.codebook.size()) {
    throw Error(ErrorCode::InvalidArgument, "seeds must be all labeled or all unlabeled");
  }
  model.update_counts.assign(model.codebook.size(), 0);
  return model;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

std::vector<Vector> farthest_point_seeds(const Dataset& data, const Divergence& div,
                                         std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::vector<Vector> centers{data.points[pick(rng)]};
  std::vector<double> nearest(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) nearest[i] = div(data.points[i], centers[0]);
  while (centers.size() < k) {
    const auto far = static_cast<std::size_t>(
        std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
    centers.push_back(data.points[far]);
    for (std::size_t i = 0; i < data.size(); ++i) {
      nearest[i] = std::min(nearest[i], div(data.points[i], centers.back()));
    }
  }
  return centers;
}

}  // namespace

KMeansResult kmeans_fit(const Dataset& data, const Divergence& div, std::size_t k,
                        std::uint64_t seed, std::size_t max_iter) {
  using Clock = std::chrono::steady_clock;
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (data.size() < k) {
    throw Error(ErrorCode::TooFewSamples, "k-means needs at least k points");
  }
  for (const auto& x : data.points) div.check_domain(x);

  KMeansResult result;
  result.report.algorithm = "kmeans";
  result.report.rng_seed = seed;
  auto& model = result.model;
  model.kind = BaselineKind::KMeans;
  model.divergence = div;
  model.codebook = farthest_point_seeds(data, div, k, seed);

  const std::size_t n = data.size();
  std::vector<std::size_t> assign(n, k);
  std::vector<double> cost(n, 0.0);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(1, max_iter); ++iter) {
    const auto start = Clock::now();
    bool changed = false;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t h = 0; h < k; ++h) {
        const double d = div(data.points[i], model.codebook[h]);
        if (d < best_d) {
          best_d = d;
          best = h;
        }
      }
      changed |= assign[i] != best;
      assign[i] = best;
      cost[i] = best_d;
      total += best_d;
    }
    result.distortion_trace.push_back(total / static_cast<double>(n));
    result.iterations = iter + 1;

    LevelRecord r;
    r.level = iter;
    r.k_effective = k;
    r.samples_seen = static_cast<std::uint64_t>(n) * (iter + 1);
    r.level_observations = n;
    r.avg_distortion = result.distortion_trace.back();
    if (!changed) {
      r.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      result.report.levels.push_back(r);
      break;
    }

    std::vector<Vector> sums(k, Vector(data.dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t d = 0; d < data.dim; ++d) sums[assign[i]][d] += data.points[i][d];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t h = 0; h < k; ++h) {
      if (counts[h] > 0) {
        for (std::size_t d = 0; d < data.dim; ++d) {
          model.codebook[h][d] = sums[h][d] / static_cast<double>(counts[h]);
        }
        continue;
      }
      // Empty cluster: move it onto the worst-served point not yet used.
      std::size_t far = 0;
      double far_cost = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && cost[i] > far_cost) {
          far_cost = cost[i];
          far = i;
        }
      }
      taken[far] = true;
      cost[far] = 0.0;
      model.codebook[h] = data.points[far];
    }
    r.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result.report.levels.push_back(r);
  }
  result.report.final_k = k;
  result.report.samples_seen = result.report.levels.back().samples_seen;
  result.report.final_distortion = result.distortion_trace.back();
  return result;
}

// ---------------------------------------------------------------------------
// Batch deterministic annealing

BatchDaResult batch_da_fit(const Dataset& data, const OdaConfig& config,
                           const BatchDaOptions& options) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "batch DA needs data");
  const Divergence& div = config.divergence;
  for (const auto& x : data.points) div.check_domain(x);

  const std::size_t n = data.size();
  const std::size_t d = data.dim;
  std::mt19937_64 rng(config.seed);
  TemperatureSchedule schedule = config.schedule();

  std::vector<Codevector> codebook;
  {
    const auto seeds = class_mean_seeds(data, false);
    Codevector cv;
    cv.mu = seeds.front().x;
    cv.rho = 1.0;
    cv.sigma = cv.mu;
    cv.prev_mu = cv.mu;
    codebook.push_back(std::move(cv));
  }

  BatchDaResult result;
  result.report.algorithm = "batch-da";
  result.report.rng_seed = config.seed;
  std::uint64_t presentations = 0;
  std::size_t level = 0;
  Vector dist;
  Vector prior;
  for (;;) {
    const auto start = Clock::now();
    std::size_t iters = 0;
    double max_move = std::numeric_limits<double>::infinity();
    while (max_move >= config.eps_c && iters < options.max_iter_per_level) {
      const std::size_t k = codebook.size();
      std::vector<double> mass(k, 0.0);
      std::vector<Vector> moment(k, Vector(d, 0.0));
      dist.resize(k);
      prior.resize(k);
      for (std::size_t i = 0; i < k; ++i) prior[i] = codebook[i].rho;
      for (const auto& x : data.points) {
        for (std::size_t i = 0; i < k; ++i) dist[i] = div(x, codebook[i].mu);
        const Vector p = gibbs_membership(dist, prior, schedule.current);
        for (std::size_t i = 0; i < k; ++i) {
          mass[i] += p[i];
          for (std::size_t c = 0; c < d; ++c) moment[i][c] += p[i] * x[c];
        }
      }
      presentations += n;
      ++iters;
      max_move = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        auto& cv = codebook[i];
        cv.rho = mass[i] / static_cast<double>(n);
        for (std::size_t c = 0; c < d; ++c) cv.sigma[c] = moment[i][c] / static_cast<double>(n);
        if (cv.rho >= config.eps_r) {
          Vector next(d);
          for (std::size_t c = 0; c < d; ++c) next[c] = cv.sigma[c] / cv.rho;
          max_move = std::max(max_move, div(next, cv.mu));
          cv.mu = std::move(next);
        }
      }
    }

    std::vector<Codevector> effective = codebook;
    merge_and_prune(effective, config);
    std::vector<Vector> mus;
    for (const auto& cv : effective) mus.push_back(cv.mu);
    LevelRecord r;
    r.level = level;
    r.temperature = schedule.current;
    r.k_effective = effective.size();
    r.samples_seen = presentations;
    r.level_observations = static_cast<std::uint64_t>(iters) * n;
    r.avg_distortion = average_distortion(div, mus, data);
    r.forced_advance = max_move >= config.eps_c;
    r.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result.report.levels.push_back(r);

    if (!schedule.can_lower()) break;
    merge_and_prune(codebook, config);
    schedule.lower();
    ++level;
    if (codebook.size() < config.k_max) perturb_codebook(codebook, config, {}, rng);
  }
  merge_and_prune(codebook, config);

  auto& model = result.model;
  model.kind = BaselineKind::BatchDA;
  model.divergence = div;
  model.temperature = schedule.current;
  for (const auto& cv : codebook) {
    model.codebook.push_back(cv.mu);
    model.rho.push_back(cv.rho);
  }
  result.report.final_k = model.codebook.size();
  result.report.samples_seen = presentations;
  result.report.final_distortion = result.report.levels.back().avg_distortion;
  return result;
}

}  // namespace oda
