#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "oda/annealing.hpp"
#include "oda/baselines.hpp"
#include "oda/error.hpp"
#include "oda/persistence.hpp"

using namespace oda;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const Divergence kSq2(DivergenceKind::SquaredEuclidean, 2);

OdaModel trained(const Dataset& d, std::uint64_t seed) {
  OdaConfig c = OdaConfig::defaults(kSq2, d.extent());
  c.seed = seed;
  c.k_max = 16;
  OdaModel m = OdaModel::init(c, class_mean_seeds(d, true));
  SampleStream s(d, seed + 1);
  fit(m, [&] { return s.next(); });
  return m;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("oda_persist_" + name);
}

void check_same_state(const OdaModel& a, const OdaModel& b) {
  const auto sa = a.state();
  const auto sb = b.state();
  CHECK(config_to_json(sa.config) == config_to_json(sb.config));
  CHECK(sa.schedule.current == sb.schedule.current);
  CHECK(sa.classes == sb.classes);
  CHECK(sa.level == sb.level);
  CHECK(sa.level_observations == sb.level_observations);
  CHECK(sa.total_observations == sb.total_observations);
  CHECK(sa.rng_state == sb.rng_state);
  REQUIRE(sa.codebook.size() == sb.codebook.size());
  for (std::size_t i = 0; i < sa.codebook.size(); ++i) {
    CHECK(sa.codebook[i].mu == sb.codebook[i].mu);
    CHECK(sa.codebook[i].sigma == sb.codebook[i].sigma);
    CHECK(sa.codebook[i].rho == sb.codebook[i].rho);
    CHECK(sa.codebook[i].label == sb.codebook[i].label);
  }
}

}  // namespace

TEST_CASE("ODA model survives a save/load cycle value-exactly") {
  const Dataset d = gen_blobs(600, 3);
  const OdaModel m = trained(d, 5);
  const fs::path path = temp_file("oda.json");
  save_model(path, m);
  const AnyModel loaded = load_model(path);
  REQUIRE(std::holds_alternative<OdaModel>(loaded));
  const OdaModel& back = std::get<OdaModel>(loaded);
  check_same_state(m, back);

  const Dataset probe = gen_blobs(1000, 99);
  for (const auto& x : probe.points) {
    CHECK(m.predict(x) == back.predict(x));
    CHECK(m.quantize(x).distortion == back.quantize(x).distortion);
  }
}

TEST_CASE("config documents round trip") {
  OdaConfig c = OdaConfig::defaults(Divergence(DivergenceKind::GeneralizedI, 3), 0.1);
  c.gibbs_mode = GibbsMode::ClassMasked;
  c.cross_class_split = false;
  c.seed = 1234567890123ull;
  const OdaConfig back = config_from_json(config_to_json(c));
  CHECK(back.divergence.kind() == DivergenceKind::GeneralizedI);
  CHECK(back.divergence.dimension() == 3);
  CHECK(back.t_max == c.t_max);
  CHECK(back.eps_n == c.eps_n);
  CHECK(back.gibbs_mode == GibbsMode::ClassMasked);
  CHECK_FALSE(back.cross_class_split);
  CHECK(back.seed == c.seed);
}

TEST_CASE("baseline models round trip") {
  BaselineModel m;
  m.kind = BaselineKind::SVQ;
  m.divergence = kSq2;
  m.codebook = {{0.1, 1.0 / 3.0}, {2.5, -1e-300}};
  m.labels = {4, 9};
  m.update_counts = {7, 0};
  const json j = model_to_json(m);
  const AnyModel any = model_from_json(json::parse(j.dump()));
  REQUIRE(std::holds_alternative<BaselineModel>(any));
  const auto& back = std::get<BaselineModel>(any);
  CHECK(back.kind == BaselineKind::SVQ);
  CHECK(back.codebook == m.codebook);
  CHECK(back.labels == m.labels);
  CHECK(back.update_counts == m.update_counts);
  CHECK_FALSE(back.temperature.has_value());
}

TEST_CASE("training resumed from a checkpoint matches an uninterrupted run") {
  const Dataset d = gen_blobs(500, 4);
  OdaConfig c = OdaConfig::defaults(kSq2, d.extent());
  c.seed = 21;
  const auto seeds = class_mean_seeds(d, true);

  OdaModel straight = OdaModel::init(c, seeds);
  SampleStream s1(d, 77);
  const SampleSource src1 = [&] { return s1.next(); };

  OdaModel first = OdaModel::init(c, seeds);
  SampleStream s2(d, 77);
  const SampleSource src2 = [&] { return s2.next(); };

  for (int level = 0; level < 6; ++level) {
    run_level(straight, src1);
    straight.advance_level();
    run_level(first, src2);
    first.advance_level();
  }
  // Interrupt halfway through a level.
  for (int i = 0; i < 37; ++i) {
    const Sample a = s1.next();
    straight.observe(a.x, a.label);
    const Sample b = s2.next();
    first.observe(b.x, b.label);
  }
  OdaModel resumed = oda_model_from_json(json::parse(model_to_json(first).dump()));
  for (int level = 0; level < 6; ++level) {
    run_level(straight, src1);
    straight.advance_level();
    run_level(resumed, src2);
    resumed.advance_level();
  }
  check_same_state(straight, resumed);
}

TEST_CASE("malformed model documents are rejected") {
  const auto expect_format = [](const json& j) {
    try {
      model_from_json(j);
      FAIL("expected FormatError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FormatError);
    }
  };
  const Dataset d = gen_blobs(200, 1);
  const json good = model_to_json(trained(d, 1));

  json wrong_version = good;
  wrong_version["format_version"] = 2;
  expect_format(wrong_version);

  json no_codebook = good;
  no_codebook.erase("codebook");
  expect_format(no_codebook);

  json bad_type = good;
  bad_type["model_type"] = "svm";
  expect_format(bad_type);

  json bad_field = good;
  bad_field["codebook"][0]["rho"] = "heavy";
  expect_format(bad_field);

  expect_format(json::array());

  const fs::path path = temp_file("garbage.json");
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_model(path), Error);
  try {
    load_model(temp_file("does_not_exist.json"));
    FAIL("expected FileNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FileNotFound);
  }
}
