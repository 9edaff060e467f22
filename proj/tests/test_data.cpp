#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "oda/data.hpp"
#include "oda/error.hpp"

using namespace oda;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("oda_test_" + name);
  std::ofstream(p) << text;
  return p;
}

std::map<Label, std::size_t> class_counts(const Dataset& d, std::span<const std::size_t> idx) {
  std::map<Label, std::size_t> counts;
  for (std::size_t i : idx) ++counts[d.labels[i]];
  return counts;
}

}  // namespace

TEST_CASE("circles without noise sit exactly on their radii") {
  const Dataset d = gen_circles(1500, 0.0, 4);
  REQUIRE(d.size() == 1500);
  CHECK(d.class_set == std::vector<Label>{0, 1});
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = std::hypot(d.points[i][0], d.points[i][1]);
    CHECK(r == doctest::Approx(d.labels[i] == 0 ? 1.0 : 0.5).epsilon(1e-12));
  }
}

TEST_CASE("generators are pure functions of their arguments") {
  CHECK(gen_circles(300, 0.05, 9).points == gen_circles(300, 0.05, 9).points);
  CHECK(gen_moons(300, 0.1, 9).points == gen_moons(300, 0.1, 9).points);
  CHECK(gen_blobs(300, 9).points == gen_blobs(300, 9).points);
  CHECK(gen_blobs(300, 9).points != gen_blobs(300, 10).points);
}

TEST_CASE("moons are class-balanced") {
  const Dataset d = gen_moons(1500, 0.1, 0);
  const auto n0 = std::count(d.labels.begin(), d.labels.end(), 0);
  const auto n1 = std::count(d.labels.begin(), d.labels.end(), 1);
  CHECK(std::abs(n0 - n1) <= 1);
  CHECK(n0 + n1 == 1500);
}

TEST_CASE("blobs with a single center and no spread collapse to one point") {
  const Dataset d = gen_blobs(50, {{{1.5, -2.0}, 3}}, 0.0, 1);
  for (const auto& p : d.points) CHECK(p == Vector{1.5, -2.0});
  CHECK(d.class_set == std::vector<Label>{3});
  CHECK(d.extent() == 0.0);
}

TEST_CASE("default blobs: four clusters, three classes") {
  const Dataset d = gen_blobs();
  CHECK(d.size() == 1500);
  CHECK(default_blob_centers().size() == 4);
  CHECK(d.class_set == std::vector<Label>{0, 1, 2});
  CHECK(d.extent() > 8.0);
}

TEST_CASE("bounding box encloses every point") {
  const Dataset d = gen_moons(400, 0.2, 2);
  for (const auto& p : d.points) {
    for (std::size_t k = 0; k < d.dim; ++k) {
      CHECK(p[k] >= d.bounding_box[k].min);
      CHECK(p[k] <= d.bounding_box[k].max);
    }
  }
}

TEST_CASE("load a handcrafted CSV") {
  const auto path = write_temp("small.csv", "1.5,2,0\n-3,4.25,1\n5e-1,0,1\n");
  CsvOptions opts;
  opts.label_column = -1;
  const CsvResult r = load_csv(path, opts);
  CHECK_FALSE(r.had_header);
  CHECK(r.data.points == std::vector<Vector>{{1.5, 2}, {-3, 4.25}, {0.5, 0}});
  CHECK(r.data.labels == std::vector<Label>{0, 1, 1});
  CHECK(r.data.bounding_box[0].min == -3.0);
  CHECK(r.data.bounding_box[1].max == 4.25);

  const CsvResult unlabeled = load_csv(path);
  CHECK(unlabeled.data.dim == 3);
  CHECK_FALSE(unlabeled.data.labeled());

  CsvOptions first;
  first.label_column = 0;
  const auto path2 = write_temp("first.csv", "2,1.0,1.0\n7,3.0,4.0\n");
  const CsvResult r2 = load_csv(path2, first);
  CHECK(r2.data.labels == std::vector<Label>{2, 7});
  CHECK(r2.data.points[1] == Vector{3.0, 4.0});
}

TEST_CASE("CSV header row is detected") {
  const auto path = write_temp("header.csv", "a,b,label\n1,2,0\r\n3,4,1\n\n");
  CsvOptions opts;
  opts.label_column = -1;
  const CsvResult r = load_csv(path, opts);
  CHECK(r.had_header);
  CHECK(r.data.size() == 2);
}

TEST_CASE("a text cell in a feature column names its line and column") {
  const auto path = write_temp("bad.csv", "x,y,c\n1,2,0\n3,oops,1\n");
  CsvOptions opts;
  opts.label_column = -1;
  try {
    load_csv(path, opts);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(e.line() == 3);
    CHECK(e.column() == 2);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  opts.skip_bad_rows = true;
  const CsvResult r = load_csv(path, opts);
  CHECK(r.rejected_rows == 1);
  CHECK(r.data.size() == 1);
}

TEST_CASE("ragged rows and missing files") {
  const auto path = write_temp("ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(load_csv(path), ParseError);
  try {
    load_csv("/nonexistent/file.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FileNotFound);
  }
  const auto empty = write_temp("empty.csv", "a,b\n");
  try {
    load_csv(empty);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("WBCD and PIMA files") {
  CsvOptions opts;
  opts.label_column = -1;
  const Dataset wbcd = load_csv(fs::path(ODA_DATA_DIR) / "wbcd.csv", opts).data;
  CHECK(wbcd.size() == 683);
  CHECK(wbcd.dim == 9);
  CHECK(wbcd.class_set == std::vector<Label>{0, 1});
  const Dataset pima = load_csv(fs::path(ODA_DATA_DIR) / "pima.csv", opts).data;
  CHECK(pima.size() == 532);
  CHECK(pima.dim == 7);
  CHECK(pima.class_set == std::vector<Label>{0, 1});
}

TEST_CASE("positive shift reaches the I-divergence domain") {
  Dataset d = gen_blobs(500, 1);
  const Dataset before = d;
  apply_positive_shift(d);
  for (const auto& p : d.points) {
    for (double v : p) CHECK(v >= kPositiveShiftFloor);
  }
  for (std::size_t k = 0; k < d.dim; ++k) {
    CHECK(d.bounding_box[k].min == doctest::Approx(kPositiveShiftFloor).epsilon(1e-6));
    // A pure translation: the edge lengths are kept.
    const double span = d.bounding_box[k].max - d.bounding_box[k].min;
    const double was = before.bounding_box[k].max - before.bounding_box[k].min;
    CHECK(span == doctest::Approx(was).epsilon(1e-12));
  }

  // Columns already positive are left alone.
  Dataset pos = Dataset::from({{1.0, -1.0}, {2.0, 3.0}});
  apply_positive_shift(pos);
  CHECK(pos.points[0][0] == 1.0);
  CHECK(pos.points[1][0] == 2.0);
  CHECK(pos.points[0][1] == doctest::Approx(1e-6));
}

TEST_CASE("min-max scaling maps features onto the unit interval") {
  Dataset d = gen_moons(300, 0.1, 5);
  apply_minmax_scale(d);
  for (std::size_t k = 0; k < d.dim; ++k) {
    CHECK(d.bounding_box[k].min == doctest::Approx(0.0));
    CHECK(d.bounding_box[k].max == doctest::Approx(1.0));
  }
}

TEST_CASE("kfold: 10 points, 5 folds") {
  const Dataset d = Dataset::from(std::vector<Vector>(10, Vector{0.0}));
  const auto folds = kfold(d, 5, 0);
  REQUIRE(folds.size() == 5);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    CHECK(f.test.size() == 2);
    CHECK(f.train.size() == 8);
    for (std::size_t i : f.test) CHECK(seen.insert(i).second);
    for (std::size_t i : f.train) {
      CHECK(std::find(f.test.begin(), f.test.end(), i) == f.test.end());
    }
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("kfold preserves an 80/20 class ratio within one sample") {
  std::vector<Vector> pts(103, Vector{1.0});
  std::vector<Label> lbl(103, 0);
  std::fill(lbl.begin() + 82, lbl.end(), 1);
  const Dataset d = Dataset::from(pts, lbl);
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto folds = kfold(d, 5, seed);
    std::set<std::size_t> seen;
    for (const auto& f : folds) {
      const auto counts = class_counts(d, f.test);
      const double expected0 = 82.0 / 5.0;
      const double expected1 = 21.0 / 5.0;
      CHECK(std::abs(static_cast<double>(counts.at(0)) - expected0) <= 1.0);
      CHECK(std::abs(static_cast<double>(counts.at(1)) - expected1) <= 1.0);
      seen.insert(f.test.begin(), f.test.end());
    }
    CHECK(seen.size() == d.size());
  }
}

TEST_CASE("kfold errors") {
  const Dataset d = Dataset::from({{1.0}, {2.0}, {3.0}});
  CHECK_THROWS_AS(kfold(d, 1, 0), Error);
  try {
    kfold(d, 5, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSamples);
  }
}

TEST_CASE("stream draws are reproducible") {
  const Dataset d = gen_blobs(100, 0);
  SampleStream a(d, 42), b(d, 42), c(d, 43);
  std::vector<std::size_t> da, db, dc;
  for (int i = 0; i < 100; ++i) {
    da.push_back(a.next_index());
    db.push_back(b.next_index());
    dc.push_back(c.next_index());
  }
  CHECK(da == db);
  CHECK(da != dc);
  SampleStream rows(d, {3, 7}, 1);
  for (int i = 0; i < 50; ++i) {
    const std::size_t r = rows.next_index();
    CHECK((r == 3 || r == 7));
  }
  const Sample s = SampleStream(d, {5}, 0).next();
  CHECK(s.x == d.points[5]);
  CHECK(s.label == d.labels[5]);
}

TEST_CASE("subsample and subset") {
  const Dataset d = gen_blobs(200, 0);
  const Dataset s = subsample(d, 50, 3);
  CHECK(s.size() == 50);
  CHECK(subsample(d, 50, 3).points == s.points);
  CHECK(subsample(d, 500, 3).size() == 200);
  const std::vector<std::size_t> idx{0, 199};
  const Dataset sub = subset(d, idx);
  CHECK(sub.points[1] == d.points[199]);
  CHECK(sub.labels[1] == d.labels[199]);
}

TEST_CASE("child seeds are distinct") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(mix_seed(7, i));
  CHECK(seeds.size() == 1000);
  CHECK(mix_seed(7, 0) != mix_seed(8, 0));
}

TEST_CASE("label vector must match the points") {
  CHECK_THROWS_AS(Dataset::from({{1.0}, {2.0}}, {0}), Error);
  CHECK_THROWS_AS(Dataset::from({{1.0}, {2.0, 3.0}}), Error);
}
