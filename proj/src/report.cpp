#include "oda/report.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "oda/error.hpp"

namespace oda {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json to_json(const LevelRecord& r, const ReportFormat& format) {
  json j = {
      {"kind", "level"},
      {"level", r.level},
      {"temperature", optional_number(r.temperature)},
      {"k_effective", r.k_effective},
      {"samples_seen", r.samples_seen},
      {"level_observations", r.level_observations},
      {"avg_distortion", optional_number(r.avg_distortion)},
      {"accuracy", optional_number(r.accuracy)},
      {"f1_macro", optional_number(r.f1_macro)},
      {"forced_advance", r.forced_advance},
  };
  if (format.include_timing) j["wall_time_ms"] = r.wall_time_ms;
  return j;
}

LevelRecord level_from_json(const json& j) {
  LevelRecord r;
  r.level = j.at("level").get<std::size_t>();
  r.temperature = read_optional(j, "temperature");
  r.k_effective = j.at("k_effective").get<std::size_t>();
  r.samples_seen = j.at("samples_seen").get<std::uint64_t>();
  r.level_observations = j.value("level_observations", std::uint64_t{0});
  r.avg_distortion = read_optional(j, "avg_distortion");
  r.accuracy = read_optional(j, "accuracy");
  r.f1_macro = read_optional(j, "f1_macro");
  r.wall_time_ms = j.value("wall_time_ms", 0.0);
  r.forced_advance = j.value("forced_advance", false);
  return r;
}

void write_report_jsonl(std::ostream& out, const RunReport& report, const ReportFormat& format) {
  json header = {
      {"kind", "header"},
      {"format_version", kFormatVersion},
      {"algorithm", report.algorithm},
      {"rng_seed", report.rng_seed},
      {"config", report.config},
  };
  if (!report.extra.empty()) header["extra"] = report.extra;
  out << header.dump() << '\n';
  for (const auto& r : report.levels) out << to_json(r, format).dump() << '\n';
  json summary = {
      {"kind", "summary"},
      {"final_k", report.final_k},
      {"samples_seen", report.samples_seen},
      {"final_distortion", optional_number(report.final_distortion)},
      {"final_accuracy", optional_number(report.final_accuracy)},
      {"final_f1", optional_number(report.final_f1)},
      {"levels", report.levels.size()},
  };
  out << summary.dump() << '\n';
}

std::string report_jsonl(const RunReport& report, const ReportFormat& format) {
  std::ostringstream out;
  write_report_jsonl(out, report, format);
  return out.str();
}

RunReport read_report_jsonl(std::istream& in) {
  RunReport report;
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, std::string("bad report line: ") + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind == "header") {
      if (j.value("format_version", 0) != kFormatVersion) {
        throw Error(ErrorCode::FormatError, "unsupported report format_version");
      }
      report.algorithm = j.value("algorithm", "");
      report.rng_seed = j.value("rng_seed", std::uint64_t{0});
      report.config = j.value("config", json::object());
      report.extra = j.value("extra", json::object());
      seen_header = true;
    } else if (kind == "level") {
      report.levels.push_back(level_from_json(j));
    } else if (kind == "summary") {
      report.final_k = j.value("final_k", std::size_t{0});
      report.samples_seen = j.value("samples_seen", std::uint64_t{0});
      report.final_distortion = read_optional(j, "final_distortion");
      report.final_accuracy = read_optional(j, "final_accuracy");
      report.final_f1 = read_optional(j, "final_f1");
    }
  }
  if (!seen_header) throw Error(ErrorCode::FormatError, "report has no header line");
  return report;
}

namespace {

void cell(std::ostream& out, const std::optional<double>& v) {
  if (v) out << *v;
}

}  // namespace

void write_trace_csv(std::ostream& out, const RunReport& report) {
  out << "# format_version: " << kFormatVersion << ", algorithm: " << report.algorithm
      << ", rng_seed: " << report.rng_seed << '\n';
  out << "samples_seen,temperature,k_effective,avg_distortion,accuracy,f1_macro,forced_advance\n";
  out << std::setprecision(17);
  for (const auto& r : report.levels) {
    out << r.samples_seen << ',';
    cell(out, r.temperature);
    out << ',' << r.k_effective << ',';
    cell(out, r.avg_distortion);
    out << ',';
    cell(out, r.accuracy);
    out << ',';
    cell(out, r.f1_macro);
    out << ',' << (r.forced_advance ? 1 : 0) << '\n';
  }
}

void write_timing_csv(std::ostream& out, const RunReport& report) {
  out << "# format_version: " << kFormatVersion << '\n';
  out << "level,wall_time_ms\n";
  for (const auto& r : report.levels) out << r.level << ',' << r.wall_time_ms << '\n';
}

}  // namespace oda
