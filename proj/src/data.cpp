#include "oda/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "oda/error.hpp"

namespace oda {

double Dataset::extent() const {
  double edge = 0.0;
  for (const auto& iv : bounding_box) edge = std::max(edge, iv.max - iv.min);
  return edge;
}

Sample Dataset::sample(std::size_t i) const {
  Sample s{points.at(i), std::nullopt};
  if (labeled()) s.label = labels[i];
  return s;
}

void Dataset::refresh() {
  if (points.empty()) {
    dim = 0;
    bounding_box.clear();
    class_set.clear();
    return;
  }
  dim = points.front().size();
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dataset points have no coordinates");
  bounding_box.assign(dim, Interval{points.front()[0], points.front()[0]});
  for (std::size_t k = 0; k < dim; ++k) bounding_box[k] = {points.front()[k], points.front()[k]};
  for (const auto& p : points) {
    if (p.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "dataset points differ in dimension");
    }
    for (std::size_t k = 0; k < dim; ++k) {
      bounding_box[k].min = std::min(bounding_box[k].min, p[k]);
      bounding_box[k].max = std::max(bounding_box[k].max, p[k]);
    }
  }
  if (!labels.empty() && labels.size() != points.size()) {
    throw Error(ErrorCode::InvalidArgument, "labels and points differ in length");
  }
  class_set = labels;
  std::sort(class_set.begin(), class_set.end());
  class_set.erase(std::unique(class_set.begin(), class_set.end()), class_set.end());
}

Dataset Dataset::from(std::vector<Vector> points, std::vector<Label> labels) {
  Dataset d;
  d.points = std::move(points);
  d.labels = std::move(labels);
  d.refresh();
  return d;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<Vector> pts;
  std::vector<Label> lbl;
  pts.reserve(indices.size());
  for (std::size_t i : indices) {
    pts.push_back(data.points.at(i));
    if (data.labeled()) lbl.push_back(data.labels[i]);
  }
  return Dataset::from(std::move(pts), std::move(lbl));
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Generators

Dataset gen_circles(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "gen_circles needs n >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const std::size_t outer = (n + 1) / 2;
  std::vector<Vector> pts;
  std::vector<Label> lbl;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_outer = i < outer;
    const double t = angle(rng);
    const double r = (is_outer ? 1.0 : 0.5) + (noise > 0.0 ? noise * jitter(rng) : 0.0);
    pts.push_back({r * std::cos(t), r * std::sin(t)});
    lbl.push_back(is_outer ? 0 : 1);
  }
  return Dataset::from(std::move(pts), std::move(lbl));
}

Dataset gen_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "gen_moons needs n >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const std::size_t upper = (n + 1) / 2;
  std::vector<Vector> pts;
  std::vector<Label> lbl;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = angle(rng);
    Vector p = i < upper ? Vector{std::cos(t), std::sin(t)}
                         : Vector{1.0 - std::cos(t), 0.5 - std::sin(t)};
    if (noise > 0.0) {
      p[0] += noise * jitter(rng);
      p[1] += noise * jitter(rng);
    }
    pts.push_back(std::move(p));
    lbl.push_back(i < upper ? 0 : 1);
  }
  return Dataset::from(std::move(pts), std::move(lbl));
}

std::vector<BlobCenter> default_blob_centers() {
  return {
      {{-2.0, -2.0}, 0},
      {{2.0, 2.0}, 0},
      {{-2.0, 2.0}, 1},
      {{2.0, -2.0}, 2},
  };
}

Dataset gen_blobs(std::size_t n, const std::vector<BlobCenter>& centers, double spread,
                  std::uint64_t seed) {
  if (centers.empty()) throw Error(ErrorCode::InvalidArgument, "gen_blobs needs a center");
  if (n < 1) throw Error(ErrorCode::TooFewSamples, "gen_blobs needs n >= 1");
  if (spread < 0.0) throw Error(ErrorCode::InvalidArgument, "blob spread must be >= 0");
  const std::size_t d = centers.front().center.size();
  for (const auto& c : centers) {
    if (c.center.size() != d || d == 0) {
      throw Error(ErrorCode::DimensionMismatch, "blob centers differ in dimension");
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<Vector> pts;
  std::vector<Label> lbl;
  pts.reserve(n);
  const std::size_t per = n / centers.size();
  const std::size_t extra = n % centers.size();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const std::size_t count = per + (c < extra ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i) {
      Vector p = centers[c].center;
      if (spread > 0.0) {
        for (double& v : p) v += spread * jitter(rng);
      }
      pts.push_back(std::move(p));
      lbl.push_back(centers[c].label);
    }
  }
  return Dataset::from(std::move(pts), std::move(lbl));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::optional<double> parse_number(const std::string& cell) {
  const std::string s = trim(cell);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

CsvResult load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());

  CsvResult result;
  std::vector<Vector> pts;
  std::vector<Label> lbl;
  std::size_t columns = 0;
  std::size_t label_col = 0;
  bool has_label = false;

  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);

    if (first_row) {
      first_row = false;
      columns = cells.size();
      if (options.label_column) {
        const int lc = *options.label_column;
        if (lc < -1 || (lc >= 0 && static_cast<std::size_t>(lc) >= columns)) {
          throw Error(ErrorCode::InvalidArgument,
                      "label column " + std::to_string(lc) + " out of range for " +
                          std::to_string(columns) + " columns");
        }
        has_label = true;
        label_col = lc == -1 ? columns - 1 : static_cast<std::size_t>(lc);
        if (columns < 2) {
          throw Error(ErrorCode::InvalidArgument, "a labeled CSV needs at least 2 columns");
        }
      }
      const bool any_text = std::any_of(cells.begin(), cells.end(), [](const std::string& c) {
        return !parse_number(c).has_value();
      });
      if (any_text) {
        result.had_header = true;
        continue;
      }
    }

    if (cells.size() != columns) {
      if (options.skip_bad_rows) {
        ++result.rejected_rows;
        continue;
      }
      throw ParseError(line_no, std::min(cells.size(), columns) + 1,
                       path.string() + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(columns) + " columns, found " +
                           std::to_string(cells.size()));
    }

    Vector row;
    row.reserve(columns);
    std::optional<Label> label;
    bool bad = false;
    for (std::size_t c = 0; c < columns && !bad; ++c) {
      const auto v = parse_number(cells[c]);
      if (!v) {
        if (options.skip_bad_rows) {
          bad = true;
          break;
        }
        throw ParseError(line_no, c + 1,
                         path.string() + ":" + std::to_string(line_no) + ": column " +
                             std::to_string(c + 1) + " is not numeric: '" + trim(cells[c]) +
                             "'");
      }
      if (has_label && c == label_col) {
        if (std::floor(*v) != *v) {
          if (options.skip_bad_rows) {
            bad = true;
            break;
          }
          throw ParseError(line_no, c + 1,
                           path.string() + ":" + std::to_string(line_no) +
                               ": label is not an integer");
        }
        label = static_cast<Label>(*v);
      } else {
        row.push_back(*v);
      }
    }
    if (bad) {
      ++result.rejected_rows;
      continue;
    }
    pts.push_back(std::move(row));
    if (label) lbl.push_back(*label);
  }

  if (pts.empty()) throw Error(ErrorCode::EmptyDataset, path.string() + " has no data rows");
  result.data = Dataset::from(std::move(pts), std::move(lbl));
  if (options.minmax_scale) apply_minmax_scale(result.data);
  if (options.positive_shift) apply_positive_shift(result.data);
  return result;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  for (std::size_t k = 0; k < data.dim; ++k) out << (k ? "," : "") << 'x' << k;
  if (data.labeled()) out << ",label";
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < data.dim; ++k) out << (k ? "," : "") << data.points[i][k];
    if (data.labeled()) out << ',' << data.labels[i];
    out << '\n';
  }
}

void apply_positive_shift(Dataset& data) {
  for (std::size_t k = 0; k < data.dim; ++k) {
    const double lo = data.bounding_box[k].min;
    if (lo >= kPositiveShiftFloor) continue;
    const double shift = kPositiveShiftFloor - lo;
    for (auto& p : data.points) p[k] += shift;
  }
  data.refresh();
  // Guard against rounding pulling a shifted coordinate below the floor.
  for (auto& p : data.points) {
    for (double& v : p) v = std::max(v, kPositiveShiftFloor);
  }
  data.refresh();
}

void apply_minmax_scale(Dataset& data) {
  for (std::size_t k = 0; k < data.dim; ++k) {
    const auto [lo, hi] = data.bounding_box[k];
    const double span = hi - lo;
    for (auto& p : data.points) p[k] = span > 0.0 ? (p[k] - lo) / span : 0.0;
  }
  data.refresh();
}

Dataset subsample(const Dataset& data, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (n < idx.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
  }
  return subset(data, idx);
}

std::vector<Fold> kfold(const Dataset& data, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "kfold needs k >= 2");
  if (data.size() < k) {
    throw Error(ErrorCode::TooFewSamples, "kfold needs at least k samples, got " +
                                              std::to_string(data.size()));
  }
  std::mt19937_64 rng(seed);
  // Group indices by class (a single group when unlabeled), shuffle within
  // each group, then deal the concatenation round-robin.
  std::map<Label, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) {
    groups[data.labeled() ? data.labels[i] : 0].push_back(i);
  }
  std::vector<std::size_t> order;
  order.reserve(data.size());
  for (auto& [label, members] : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    order.insert(order.end(), members.begin(), members.end());
  }
  std::vector<std::vector<std::size_t>> tests(k);
  for (std::size_t pos = 0; pos < order.size(); ++pos) tests[pos % k].push_back(order[pos]);

  std::vector<Fold> folds(k);
  std::vector<std::size_t> owner(data.size());
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t i : tests[f]) owner[i] = f;
  }
  for (std::size_t f = 0; f < k; ++f) {
    folds[f].test = tests[f];
    std::sort(folds[f].test.begin(), folds[f].test.end());
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (owner[i] != f) folds[f].train.push_back(i);
    }
  }
  return folds;
}

SampleStream::SampleStream(const Dataset& data, std::uint64_t seed)
    : SampleStream(data,
                   [&] {
                     std::vector<std::size_t> all(data.size());
                     std::iota(all.begin(), all.end(), 0);
                     return all;
                   }(),
                   seed) {}

SampleStream::SampleStream(const Dataset& data, std::vector<std::size_t> rows,
                           std::uint64_t seed)
    : data_(&data), rows_(std::move(rows)), rng_(seed) {
  if (rows_.empty()) throw Error(ErrorCode::EmptyDataset, "sample stream over no rows");
  for (std::size_t r : rows_) {
    if (r >= data.size()) throw Error(ErrorCode::InvalidArgument, "stream row out of range");
  }
  pick_ = std::uniform_int_distribution<std::size_t>(0, rows_.size() - 1);
}

std::size_t SampleStream::next_index() { return rows_[pick_(rng_)]; }

Sample SampleStream::next() { return data_->sample(next_index()); }

}  // namespace oda
