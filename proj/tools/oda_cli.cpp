// oda: train, evaluate and benchmark online deterministic annealing models.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "oda/annealing.hpp"
#include "oda/baselines.hpp"
#include "oda/data.hpp"
#include "oda/error.hpp"
#include "oda/experiment.hpp"
#include "oda/metrics.hpp"
#include "oda/persistence.hpp"
#include "oda/report.hpp"

namespace {

using namespace oda;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
      return kExitConfig;
    case ErrorCode::FileNotFound:
    case ErrorCode::ParseError:
    case ErrorCode::EmptyDataset:
    case ErrorCode::DomainViolation:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::TooFewSamples:
    case ErrorCode::UnknownLabel:
    case ErrorCode::FormatError:
      return kExitData;
    default:
      return kExitRuntime;
  }
}

// Flags shared by train and cluster.
struct TrainArgs {
  std::string data;
  std::string label_column = "last";
  bool positive_shift = false;
  bool minmax_scale = false;
  std::string algo = "oda";
  std::string divergence = "euclidean";
  std::string seeding = "class-mean";
  std::uint64_t seed = 0;
  std::string model_out;
  std::string report_out;
  std::string trace_out;
  bool timing = false;
  json oda = json::object();
};

void add_data_flags(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--data", a.data, "CSV file")->required();
  cmd->add_option("--label-column", a.label_column, "0-based index, 'last' or 'none'");
  cmd->add_flag("--positive-shift", a.positive_shift, "shift columns to a 1e-6 minimum");
  cmd->add_flag("--minmax-scale", a.minmax_scale, "scale features to [0, 1]");
}

// Registers one flag per OdaConfig field; only flags given on the command
// line end up in the overrides object.
void add_oda_flags(CLI::App* cmd, json& overrides) {
  const auto number = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<double>(flag, [&overrides, key](double v) { overrides[key] = v; },
                                     help);
  };
  const auto count = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<std::size_t>(
        flag, [&overrides, key](std::size_t v) { overrides[key] = v; }, help);
  };
  count("--k-max", "k_max", "codebook capacity");
  number("--t-max", "t_max", "initial temperature");
  number("--t-min", "t_min", "final temperature");
  number("--gamma", "gamma", "cooling factor in (0, 1)");
  number("--eps-c", "eps_c", "convergence threshold");
  number("--eps-n", "eps_n", "merge threshold");
  number("--eps-r", "eps_r", "idle threshold");
  number("--delta", "delta", "perturbation size");
  number("--step-a", "step_a", "step size alpha_n = 1/(a + b n)");
  number("--step-b", "step_b", "step size alpha_n = 1/(a + b n)");
  count("--max-obs-per-level", "max_obs_per_level", "forced advance after N observations");
  count("--check-every", "check_every", "observations between convergence checks");
  cmd->add_option_function<bool>(
      "--cross-class-split", [&overrides](bool v) { overrides["cross_class_split"] = v; },
      "spawn foreign-class children at each split (true/false)");
  cmd->add_option_function<std::string>(
      "--gibbs-mode", [&overrides](const std::string& v) { overrides["gibbs_mode"] = v; },
      "all | class-masked");
}

void add_train_flags(CLI::App* cmd, TrainArgs& a, bool classification) {
  add_data_flags(cmd, a);
  cmd->add_option("--algo", a.algo)
      ->check(classification ? CLI::IsMember({"oda", "svq"})
                             : CLI::IsMember({"oda", "svq", "kmeans", "batch-da"}));
  cmd->add_option("--divergence", a.divergence)
      ->check(CLI::IsMember({"euclidean", "i-divergence"}));
  cmd->add_option("--seeding", a.seeding)->check(CLI::IsMember({"class-mean", "outside"}));
  cmd->add_option("--seed", a.seed, "RNG seed");
  cmd->add_option("--model", a.model_out, "write the trained model (JSON)")->required();
  cmd->add_option("--report", a.report_out, "write the level report (JSONL)");
  cmd->add_option("--trace", a.trace_out, "write the plot trace (CSV)");
  cmd->add_flag("--timing", a.timing, "include wall times in the report");
  add_oda_flags(cmd, a.oda);
}

std::optional<int> parse_label_column(const std::string& s) {
  if (s == "none") return std::nullopt;
  if (s == "last") return -1;
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ConfigError, "--label-column: expected an index, 'last' or 'none'");
}

Dataset load_dataset(const std::string& path, const std::string& label_column, bool shift,
                     bool scale) {
  CsvOptions opts;
  opts.label_column = parse_label_column(label_column);
  opts.minmax_scale = scale;
  opts.positive_shift = shift;
  CsvResult r = load_csv(path, opts);
  if (r.rejected_rows > 0) std::cerr << "rejected rows: " << r.rejected_rows << '\n';
  return std::move(r.data);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path);
  out << text;
}

int run_train(const TrainArgs& a, bool classification) {
  ExperimentConfig cfg;
  cfg.dataset.source = "csv";
  cfg.dataset.path = a.data;
  cfg.algo = a.algo;
  cfg.classification = classification;
  cfg.divergence = *parse_divergence(a.divergence);
  cfg.seeding = a.seeding;
  cfg.master_seed = a.seed;
  cfg.oda_overrides = a.oda;
  const Dataset data = load_dataset(a.data, classification ? a.label_column : "none",
                                    a.positive_shift, a.minmax_scale);
  if (classification && !data.labeled()) {
    throw Error(ErrorCode::ConfigError, "train: classification needs a label column");
  }
  if (!a.oda.empty()) {
    for (const auto& w :
         resolve_oda_config(Divergence(cfg.divergence, data.dim), data.extent(), a.oda)
             .warnings()) {
      std::cerr << "warning: " << w << '\n';
    }
  }

  TrainedModel t = train(cfg, data, &data, a.seed);
  std::visit([&](const auto& m) { save_model(a.model_out, m); }, t.model);
  if (!a.report_out.empty()) {
    write_text(a.report_out, report_jsonl(t.report, ReportFormat{a.timing}));
  }
  if (!a.trace_out.empty()) {
    std::ofstream trace(a.trace_out);
    write_trace_csv(trace, t.report);
  }

  std::cout << "algorithm " << t.report.algorithm << ": K=" << t.report.final_k
            << " samples=" << t.report.samples_seen;
  if (t.report.final_distortion) std::cout << " distortion=" << *t.report.final_distortion;
  if (t.report.final_accuracy) std::cout << " train_accuracy=" << *t.report.final_accuracy;
  if (t.report.final_f1) std::cout << " train_f1=" << *t.report.final_f1;
  std::cout << '\n';
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string data;
  std::string label_column = "last";
  bool positive_shift = false;
  bool minmax_scale = false;
  std::string out;
};

int run_predict(const PredictArgs& a) {
  const AnyModel any = load_model(a.model);
  const Dataset data = load_dataset(a.data, a.label_column, a.positive_shift, a.minmax_scale);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw Error(ErrorCode::FileNotFound, "cannot write " + a.out);
    out = &file;
  }
  std::visit(
      [&](const auto& m) {
        const bool classify = m.is_classifier();
        *out << (classify ? "prediction,codevector,distortion\n" : "codevector,distortion\n");
        *out << std::setprecision(17);
        for (const auto& x : data.points) {
          const Quantization q = m.quantize(x);
          if (classify) *out << m.predict(x) << ',';
          *out << q.index << ',' << q.distortion << '\n';
        }
        std::cerr << "distortion " << metric_distortion(m, data) << '\n';
        if (classify && data.labeled()) {
          std::cerr << "accuracy " << metric_accuracy(m, data) << "\nf1_macro "
                    << metric_f1(m, data) << '\n';
        }
      },
      any);
  return 0;
}

struct BenchArgs {
  std::string config;
  std::string output_dir;
  std::optional<std::size_t> threads;
  bool timing = false;
};

int run_bench(const BenchArgs& a) {
  std::string path = a.config;
  if (const char* env = std::getenv("ODA_CONFIG"); env != nullptr && *env != '\0') path = env;
  if (path.empty()) throw Error(ErrorCode::ConfigError, "bench: pass --config or set ODA_CONFIG");
  ExperimentConfig cfg = load_experiment(path);
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  if (a.threads) cfg.threads = *a.threads;
  if (a.timing) cfg.timing = true;
  const ExperimentResult r = run_experiment(cfg);

  const auto line = [&](const char* name) {
    const json& block = r.aggregate.at(name);
    if (block.is_null()) return;
    std::cout << std::left << std::setw(16) << name << std::fixed << std::setprecision(4)
              << block.at("mean").get<double>() << " +/- " << block.at("std").get<double>()
              << '\n';
  };
  std::cout << cfg.algo << " on " << cfg.dataset.name << ", " << r.folds.size() << " fold(s)\n";
  for (const char* name : {"accuracy", "f1_macro", "avg_distortion", "final_k", "samples_seen"}) {
    line(name);
  }
  if (cfg.output_dir) std::cout << "outputs in " << cfg.output_dir->string() << '\n';
  return 0;
}

int run_inspect(const std::string& path) {
  const AnyModel any = load_model(path);
  std::cout << std::setprecision(6);
  if (const auto* m = std::get_if<OdaModel>(&any)) {
    const auto& c = m->config();
    std::cout << "model        oda\n"
              << "divergence   " << to_string(c.divergence.kind()) << " (d=" << c.divergence.dimension()
              << ")\n"
              << "mode         " << (m->is_classifier() ? "classification" : "clustering") << '\n'
              << "temperature  " << m->temperature() << "  [" << c.t_min << ", " << c.t_max
              << "], gamma " << c.gamma << '\n'
              << "level        " << m->level() << ", observations " << m->total_observations()
              << '\n'
              << "codevectors  " << m->size() << " (k_max " << c.k_max << ")\n";
    for (std::size_t i = 0; i < m->size(); ++i) {
      const auto& cv = m->codebook()[i];
      std::cout << "  [" << i << "]";
      if (cv.label) std::cout << " class " << *cv.label;
      std::cout << " rho " << cv.rho << " mu (";
      for (std::size_t k = 0; k < cv.mu.size(); ++k) std::cout << (k ? ", " : "") << cv.mu[k];
      std::cout << ")\n";
    }
  } else {
    const auto& b = std::get<BaselineModel>(any);
    std::cout << "model        " << to_string(b.kind) << '\n'
              << "divergence   " << to_string(b.divergence.kind()) << " (d="
              << b.divergence.dimension() << ")\n"
              << "codevectors  " << b.codebook.size() << '\n';
    for (std::size_t i = 0; i < b.codebook.size(); ++i) {
      std::cout << "  [" << i << "]";
      if (b.is_classifier()) std::cout << " class " << b.labels[i];
      std::cout << " mu (";
      for (std::size_t k = 0; k < b.codebook[i].size(); ++k) {
        std::cout << (k ? ", " : "") << b.codebook[i][k];
      }
      std::cout << ")\n";
    }
  }
  return 0;
}

struct GenArgs {
  std::string kind = "blobs";
  std::size_t n = 1500;
  std::optional<double> noise;
  double spread = kDefaultBlobSpread;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenArgs& a) {
  Dataset d;
  if (a.kind == "blobs") {
    d = gen_blobs(a.n, default_blob_centers(), a.spread, a.seed);
  } else if (a.kind == "circles") {
    d = gen_circles(a.n, a.noise.value_or(0.05), a.seed);
  } else {
    d = gen_moons(a.n, a.noise.value_or(0.1), a.seed);
  }
  write_csv(a.out, d);
  std::cout << "wrote " << d.size() << " rows to " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online deterministic annealing for clustering and classification"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset as CSV");
  gen_cmd->add_option("kind", gen.kind)->check(CLI::IsMember({"blobs", "circles", "moons"}));
  gen_cmd->add_option("--n", gen.n, "number of samples");
  gen_cmd->add_option("--noise", gen.noise, "noise level (circles, moons)");
  gen_cmd->add_option("--spread", gen.spread, "per-coordinate standard deviation (blobs)");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out)->required();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a classifier on a labeled CSV");
  add_train_flags(train_cmd, train_args, true);

  TrainArgs cluster_args;
  auto* cluster_cmd = app.add_subcommand("cluster", "cluster a CSV (labels ignored)");
  add_train_flags(cluster_cmd, cluster_args, false);

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "label or quantize a CSV with a saved model");
  pred_cmd->add_option("--model", pred.model)->required();
  pred_cmd->add_option("--data", pred.data)->required();
  pred_cmd->add_option("--label-column", pred.label_column, "0-based index, 'last' or 'none'");
  pred_cmd->add_flag("--positive-shift", pred.positive_shift);
  pred_cmd->add_flag("--minmax-scale", pred.minmax_scale);
  pred_cmd->add_option("--out", pred.out, "prediction CSV (default stdout)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "run a cross-validated experiment");
  bench_cmd->add_option("--config", bench.config, "experiment JSON (ODA_CONFIG overrides)");
  bench_cmd->add_option("--out", bench.output_dir, "output directory");
  bench_cmd->add_option("--threads", bench.threads, "fold worker threads (0 = all cores)");
  bench_cmd->add_flag("--timing", bench.timing, "also write per-level wall times");

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "pretty-print a model file");
  inspect_cmd->add_option("model", inspect_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*train_cmd) return run_train(train_args, true);
    if (*cluster_cmd) return run_train(cluster_args, false);
    if (*pred_cmd) return run_predict(pred);
    if (*bench_cmd) return run_bench(bench);
    if (*inspect_cmd) return run_inspect(inspect_path);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
