#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "oda/annealing.hpp"
#include "oda/error.hpp"
#include "oda/report.hpp"

using namespace oda;

namespace {

RunReport sample_report() {
  RunReport r;
  r.algorithm = "oda";
  r.rng_seed = 17;
  r.config = {{"gamma", 0.8}};
  for (std::size_t i = 0; i < 3; ++i) {
    LevelRecord l;
    l.level = i;
    l.temperature = 10.0 * std::pow(0.8, static_cast<double>(i));
    l.k_effective = i + 1;
    l.samples_seen = 100 * (i + 1);
    l.level_observations = 100;
    l.avg_distortion = 1.0 / 3.0 / static_cast<double>(i + 1);
    if (i > 0) l.accuracy = 0.5 + 0.1 * static_cast<double>(i);
    l.wall_time_ms = 12.5;
    l.forced_advance = i == 1;
    r.levels.push_back(l);
  }
  r.final_k = 3;
  r.samples_seen = 300;
  r.final_distortion = r.levels.back().avg_distortion;
  r.final_accuracy = 0.7;
  r.extra = {{"fold", 2}};
  return r;
}

}  // namespace

TEST_CASE("JSONL report round trip") {
  const RunReport r = sample_report();
  const std::string text = report_jsonl(r);
  std::istringstream in(text);
  const RunReport back = read_report_jsonl(in);
  CHECK(back.algorithm == "oda");
  CHECK(back.rng_seed == 17);
  CHECK(back.extra["fold"] == 2);
  REQUIRE(back.levels.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.levels[i].temperature == r.levels[i].temperature);
    CHECK(back.levels[i].avg_distortion == r.levels[i].avg_distortion);
    CHECK(back.levels[i].accuracy == r.levels[i].accuracy);
    CHECK(back.levels[i].forced_advance == r.levels[i].forced_advance);
  }
  CHECK_FALSE(back.levels[0].f1_macro.has_value());
  CHECK(back.final_accuracy == 0.7);
  CHECK(report_jsonl(back) == text);
}

TEST_CASE("wall time only appears when asked for") {
  const RunReport r = sample_report();
  CHECK(report_jsonl(r).find("wall_time_ms") == std::string::npos);
  ReportFormat timed;
  timed.include_timing = true;
  CHECK(report_jsonl(r, timed).find("wall_time_ms") != std::string::npos);
}

TEST_CASE("trace and timing CSV layout") {
  std::ostringstream trace;
  write_trace_csv(trace, sample_report());
  std::istringstream lines(trace.str());
  std::string first, header, row;
  std::getline(lines, first);
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(first.rfind("# format_version: 1", 0) == 0);
  CHECK(header == "samples_seen,temperature,k_effective,avg_distortion,accuracy,f1_macro,forced_advance");
  CHECK(row.rfind("100,10,1,", 0) == 0);
  CHECK(row.substr(row.size() - 3) == ",,0");

  std::ostringstream timing;
  write_timing_csv(timing, sample_report());
  CHECK(timing.str().find("level,wall_time_ms\n0,12.5\n") != std::string::npos);
}

TEST_CASE("malformed reports") {
  std::istringstream wrong_version(R"({"kind":"header","format_version":99})");
  CHECK_THROWS_AS(read_report_jsonl(wrong_version), Error);
  std::istringstream no_header(R"({"kind":"level","level":0,"k_effective":1,"samples_seen":1})");
  CHECK_THROWS_AS(read_report_jsonl(no_header), Error);
  std::istringstream garbage("not json\n");
  try {
    read_report_jsonl(garbage);
    FAIL("expected FormatError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
  }
}

TEST_CASE("a training trace has increasing samples and decreasing temperatures") {
  const Dataset d = gen_moons(400, 0.1, 1);
  OdaConfig c = OdaConfig::defaults(Divergence(DivergenceKind::SquaredEuclidean, 2), d.extent());
  c.k_max = 20;
  OdaModel m = OdaModel::init(c, class_mean_seeds(d, true));
  SampleStream s(d, 2);
  FitOptions opts;
  opts.eval = &d;
  const RunReport r = fit(m, [&] { return s.next(); }, opts);
  REQUIRE(r.levels.size() > 2);
  for (std::size_t i = 1; i < r.levels.size(); ++i) {
    CHECK(r.levels[i].samples_seen > r.levels[i - 1].samples_seen);
    CHECK(*r.levels[i].temperature < *r.levels[i - 1].temperature);
    CHECK(r.levels[i].accuracy.has_value());
  }
}
