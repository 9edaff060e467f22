#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace oda {

inline constexpr int kFormatVersion = 1;

// One row of a training trace. Annealing runs emit one record per
// temperature level; k-means one per Lloyd iteration; sVQ one per
// checkpoint (those leave `temperature` empty).
struct LevelRecord {
  std::size_t level = 0;
  std::optional<double> temperature;
  std::size_t k_effective = 0;
  std::uint64_t samples_seen = 0;  // cumulative sample presentations
  std::uint64_t level_observations = 0;
  std::optional<double> avg_distortion;
  std::optional<double> accuracy;
  std::optional<double> f1_macro;
  double wall_time_ms = 0.0;
  bool forced_advance = false;
};

struct RunReport {
  std::string algorithm;
  std::uint64_t rng_seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<LevelRecord> levels;

  std::size_t final_k = 0;
  std::uint64_t samples_seen = 0;
  std::optional<double> final_distortion;
  std::optional<double> final_accuracy;
  std::optional<double> final_f1;
  /// Free-form extras (fold index, dataset name, ...).
  nlohmann::json extra = nlohmann::json::object();
};

struct ReportFormat {
  /// Wall-clock times make reports machine dependent; they are only
  /// serialized when asked for.
  bool include_timing = false;
};

nlohmann::json to_json(const LevelRecord& record, const ReportFormat& format = {});
LevelRecord level_from_json(const nlohmann::json& j);

/// Line-delimited JSON: a header line, one line per level, a summary line.
void write_report_jsonl(std::ostream& out, const RunReport& report,
                        const ReportFormat& format = {});
std::string report_jsonl(const RunReport& report, const ReportFormat& format = {});
RunReport read_report_jsonl(std::istream& in);

/// Plot-ready trace: samples_seen,temperature,k_effective,avg_distortion,
/// accuracy,f1_macro,forced_advance. Empty cells for absent values.
void write_trace_csv(std::ostream& out, const RunReport& report);
/// level,wall_time_ms
void write_timing_csv(std::ostream& out, const RunReport& report);

}  // namespace oda
