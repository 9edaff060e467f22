#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "oda/annealing.hpp"
#include "oda/baselines.hpp"
#include "oda/error.hpp"
#include "oda/metrics.hpp"

using namespace oda;

namespace {

const Divergence kSq2(DivergenceKind::SquaredEuclidean, 2);

BaselineModel codebook_of(std::vector<Vector> mus, std::vector<Label> labels = {},
                          Divergence div = kSq2) {
  BaselineModel m;
  m.kind = BaselineKind::SVQ;
  m.divergence = div;
  m.codebook = std::move(mus);
  m.labels = std::move(labels);
  return m;
}

StepSizeFn constant(double a) {
  return [a](std::uint64_t) { return a; };
}

Dataset three_clusters(std::uint64_t seed) {
  const std::vector<BlobCenter> centers{{{0, 0}, 0}, {{4, 0}, 0}, {{2, 3}, 0}};
  Dataset d = gen_blobs(600, centers, 0.1, seed);
  d.labels.clear();
  d.refresh();
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// stochastic VQ

TEST_CASE("sVQ moves only the winner") {
  BaselineModel m = codebook_of({{0, 0}, {4, 0}});
  svq_step(m, Vector{1, 0}, constant(0.5));
  CHECK(m.codebook[0] == Vector{0.5, 0});
  CHECK(m.codebook[1] == Vector{4, 0});
  CHECK(m.update_counts == std::vector<std::uint64_t>{1, 0});
}

TEST_CASE("sVQ ties go to the lower index") {
  BaselineModel m = codebook_of({{0, 0}, {4, 0}});
  svq_step(m, Vector{2, 0}, constant(0.5));
  CHECK(m.codebook[0] == Vector{1, 0});
  CHECK(m.codebook[1] == Vector{4, 0});
}

TEST_CASE("sVQ on a point mass converges to it") {
  BaselineModel m = codebook_of({{0.9, 0.9}, {-3, 5}});
  const Vector x0{0.1, 0.2};
  SvqOptions opts;
  opts.samples = 5000;
  const RunReport r = svq_fit(m, [&] { return Sample{x0, std::nullopt}; }, opts);
  CHECK(std::hypot(m.codebook[0][0] - x0[0], m.codebook[0][1] - x0[1]) <= 1e-3);
  CHECK(r.samples_seen == 5000);
  CHECK(r.levels.size() == 5);
}

TEST_CASE("a single codevector with step 1/(1+v) is the running mean") {
  BaselineModel m = codebook_of({{100, -100}});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector sum{0, 0};
  const StepSizeFn step = harmonic_step(1.0, 1.0);
  for (int n = 1; n <= 500; ++n) {
    const Vector x{u(rng), u(rng)};
    sum[0] += x[0];
    sum[1] += x[1];
    svq_step(m, x, step);
    CHECK(std::abs(m.codebook[0][0] - sum[0] / n) <= 1e-10);
    CHECK(std::abs(m.codebook[0][1] - sum[1] / n) <= 1e-10);
  }
}

TEST_CASE("sVQ under the I-divergence keeps codevectors positive") {
  const Divergence div(DivergenceKind::GeneralizedI, 3);
  BaselineModel m = codebook_of({{0.01, 0.02, 0.5}, {2, 2, 2}}, {}, div);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(1e-6, 10.0);
  for (int t = 0; t < 2000; ++t) {
    svq_step(m, Vector{u(rng), u(rng), u(rng)}, constant(0.9));
    for (const auto& mu : m.codebook) {
      for (double v : mu) CHECK(v >= 1e-12);
    }
  }
}

TEST_CASE("a labeled sample only moves codevectors of its class") {
  BaselineModel m = codebook_of({{0, 0}, {10, 10}}, {0, 1});
  svq_step(m, Vector{0.5, 0}, constant(0.5), 1);
  CHECK(m.codebook[0] == Vector{0, 0});
  CHECK(m.codebook[1] == Vector{5.25, 5});
  try {
    svq_step(m, Vector{0.5, 0}, constant(0.5), 5);
    FAIL("expected UnknownLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownLabel);
  }
  CHECK(m.predict(Vector{1, 1}) == 0);
}

TEST_CASE("sVQ initialization replicates seeds") {
  const std::vector<Sample> seeds{{{1, 1}, 0}, {{5, 5}, 1}};
  const std::vector<std::size_t> copies{3, 1};
  const BaselineModel m = svq_init(kSq2, seeds, copies, 0.01, 2);
  REQUIRE(m.codebook.size() == 4);
  CHECK(m.labels == std::vector<Label>{0, 0, 0, 1});
  CHECK(m.codebook[0] == Vector{1, 1});
  CHECK(m.codebook[1] != Vector{1, 1});
  CHECK(std::abs(m.codebook[1][0] - 1.0) < 0.1);
  CHECK_THROWS_AS(svq_init(kSq2, std::vector<Sample>{}, {}, 0.0, 0), Error);
}

TEST_CASE("a clustering sVQ model cannot predict") {
  const BaselineModel m = codebook_of({{0, 0}});
  CHECK_THROWS_AS(m.predict(Vector{0, 0}), Error);
}

// ---------------------------------------------------------------------------
// k-means

TEST_CASE("k-means with one center returns the mean") {
  const Dataset d = Dataset::from({{0, 0}, {2, 0}});
  const KMeansResult r = kmeans_fit(d, kSq2, 1, 0);
  CHECK(r.model.codebook[0] == Vector{1, 0});
  CHECK(r.distortion_trace.back() == doctest::Approx(1.0));
}

TEST_CASE("k-means puts one center on each corner") {
  const Dataset d = Dataset::from({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const KMeansResult r = kmeans_fit(d, kSq2, 4, 5);
  CHECK(r.distortion_trace.back() == 0.0);
  auto centers = r.model.codebook;
  std::sort(centers.begin(), centers.end());
  CHECK(centers == d.points);
}

TEST_CASE("k-means distortion never increases") {
  const Dataset d = gen_blobs(1000, 3);
  for (std::size_t k : {2u, 5u, 12u}) {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      const KMeansResult r = kmeans_fit(d, kSq2, k, seed);
      for (std::size_t i = 1; i < r.distortion_trace.size(); ++i) {
        CHECK(r.distortion_trace[i] <= r.distortion_trace[i - 1] + 1e-12);
      }
      CHECK(r.model.codebook.size() == k);
    }
  }
}

TEST_CASE("k-means errors") {
  const Dataset d = Dataset::from({{0, 0}, {1, 1}, {2, 2}});
  try {
    kmeans_fit(d, kSq2, 5, 0);
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSamples);
  }
  CHECK_THROWS_AS(kmeans_fit(d, kSq2, 0, 0), Error);
}

// ---------------------------------------------------------------------------
// batch deterministic annealing

TEST_CASE("batch DA above the first critical temperature is the data mean") {
  const Dataset d = gen_blobs(400, 2);
  OdaConfig c = OdaConfig::defaults(kSq2, d.extent());
  Vector mean{0, 0};
  for (const auto& p : d.points) {
    mean[0] += p[0] / static_cast<double>(d.size());
    mean[1] += p[1] / static_cast<double>(d.size());
  }
  // One level, one codevector: the first sweep lands on the mean.
  c.t_min = c.t_max * 0.9;
  const BatchDaResult one = batch_da_fit(d, c);
  REQUIRE(one.model.codebook.size() == 1);
  CHECK(std::abs(one.model.codebook[0][0] - mean[0]) <= 1e-12);
  CHECK(std::abs(one.model.codebook[0][1] - mean[1]) <= 1e-12);

  // A few levels: the perturbed pairs merge back within eps_n of the mean.
  c.t_min = c.t_max * 0.5;
  const BatchDaResult r = batch_da_fit(d, c);
  REQUIRE(r.model.codebook.size() == 1);
  CHECK(kSq2(r.model.codebook[0], mean) < c.eps_n);
}

TEST_CASE("batch DA centroids stay inside the data box") {
  const Dataset d = gen_blobs(300, 7);
  OdaConfig c = OdaConfig::defaults(kSq2, d.extent());
  c.k_max = 10;
  const BatchDaResult r = batch_da_fit(d, c);
  CHECK(r.model.codebook.size() <= c.k_max);
  for (const auto& mu : r.model.codebook) {
    for (std::size_t k = 0; k < d.dim; ++k) {
      CHECK(mu[k] >= d.bounding_box[k].min - 1e-9);
      CHECK(mu[k] <= d.bounding_box[k].max + 1e-9);
    }
  }
  double total = 0;
  for (double r0 : r.model.rho) total += r0;
  CHECK(total == doctest::Approx(1.0));
  for (std::size_t i = 1; i < r.report.levels.size(); ++i) {
    CHECK(*r.report.levels[i].temperature < *r.report.levels[i - 1].temperature);
  }
}

TEST_CASE("online and batch annealing agree on well separated clusters") {
  const Dataset d = three_clusters(11);
  OdaConfig c = OdaConfig::defaults(kSq2, d.extent());
  c.t_min = 0.1;
  c.seed = 4;
  const BatchDaResult batch = batch_da_fit(d, c);

  OdaModel m = OdaModel::init(c, class_mean_seeds(d, false));
  SampleStream s(d, 8);
  const RunReport online = fit(m, [&] { return s.next(); });

  const double k_batch = static_cast<double>(batch.model.codebook.size());
  const double k_online = static_cast<double>(m.size());
  CHECK(std::abs(k_batch - k_online) <= 1.0);
  const double j_batch = metric_distortion(batch.model, d);
  const double j_online = metric_distortion(m, d);
  CHECK(std::abs(j_online - j_batch) <= 0.1 * j_batch);
  // Every batch sweep presents the whole dataset.
  CHECK(batch.report.samples_seen > online.samples_seen);
}

TEST_CASE("batch DA errors") {
  OdaConfig c = OdaConfig::defaults(kSq2, 1.0);
  Dataset empty;
  empty.dim = 2;
  CHECK_THROWS_AS(batch_da_fit(empty, c), Error);
}

TEST_CASE("baseline kind names round trip") {
  for (auto k : {BaselineKind::SVQ, BaselineKind::KMeans, BaselineKind::BatchDA}) {
    CHECK(parse_baseline_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_baseline_kind("lvq").has_value());
}
