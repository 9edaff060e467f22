#include "oda/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "oda/baselines.hpp"
#include "oda/error.hpp"
#include "oda/metrics.hpp"
#include "oda/persistence.hpp"

namespace oda {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::ConfigError, path + ": " + message);
}

const json* field(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string read_string(const json& obj, const std::string& key, const std::string& path,
                        std::string fallback) {
  const json* v = field(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_string()) bad(path + key, "expected a string");
  return v->get<std::string>();
}

bool read_bool(const json& obj, const std::string& key, const std::string& path, bool fallback) {
  const json* v = field(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_boolean()) bad(path + key, "expected true or false");
  return v->get<bool>();
}

double read_number(const json& obj, const std::string& key, const std::string& path,
                   double fallback) {
  const json* v = field(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_number()) bad(path + key, "expected a number");
  const double d = v->get<double>();
  if (!std::isfinite(d)) bad(path + key, "must be finite");
  return d;
}

std::uint64_t read_count(const json& obj, const std::string& key, const std::string& path,
                         std::uint64_t fallback) {
  const json* v = field(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
    bad(path + key, "expected a nonnegative integer");
  }
  return v->get<std::uint64_t>();
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return it.key() == k; });
    if (!ok) bad(path + it.key(), "unknown field");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing

json ExperimentConfig::to_json() const {
  json ds = {
      {"source", dataset.source},
      {"name", dataset.name},
      {"n", dataset.n},
      {"noise", dataset.noise},
      {"spread", dataset.spread},
      {"seed", dataset.seed},
      {"positive_shift", dataset.positive_shift},
      {"minmax_scale", dataset.minmax_scale},
  };
  if (!dataset.path.empty()) ds["path"] = dataset.path;
  ds["label_column"] = dataset.label_column
                           ? (*dataset.label_column == -1 ? json("last") : json(*dataset.label_column))
                           : json(nullptr);
  ds["subsample"] = dataset.subsample ? json(*dataset.subsample) : json(nullptr);
  json j = {
      {"format_version", kFormatVersion},
      {"dataset", ds},
      {"algo", algo},
      {"mode", classification ? "classification" : "clustering"},
      {"divergence", std::string(to_string(divergence))},
      {"folds", folds},
      {"master_seed", master_seed},
      {"threads", threads},
      {"seeding", seeding},
      {"oda", oda_overrides},
      {"svq", {{"record_every", svq_record_every}}},
      {"kmeans", {{"max_iter", kmeans_max_iter}}},
      {"timing", timing},
  };
  if (output_dir) j["output_dir"] = output_dir->string();
  return j;
}

ExperimentConfig parse_experiment(const json& j) {
  if (!j.is_object()) bad("$", "experiment config must be a JSON object");
  reject_unknown(j, "", {"format_version", "dataset", "algo", "mode", "divergence", "folds",
                         "master_seed", "threads", "seeding", "oda", "svq", "kmeans",
                         "output_dir", "timing"});
  ExperimentConfig c;
  if (const json* v = field(j, "format_version")) {
    if (!v->is_number_integer() || v->get<int>() != kFormatVersion) {
      bad("format_version", "unsupported version");
    }
  }

  if (const json* ds = field(j, "dataset")) {
    if (!ds->is_object()) bad("dataset", "expected an object");
    const std::string p = "dataset.";
    reject_unknown(*ds, p, {"source", "name", "n", "noise", "spread", "seed", "path",
                            "label_column", "positive_shift", "minmax_scale", "subsample"});
    auto& d = c.dataset;
    d.source = read_string(*ds, "source", p, d.source);
    if (d.source != "blobs" && d.source != "circles" && d.source != "moons" && d.source != "csv") {
      bad(p + "source", "expected one of blobs, circles, moons, csv");
    }
    d.name = read_string(*ds, "name", p, d.source);
    d.n = read_count(*ds, "n", p, d.n);
    d.noise = read_number(*ds, "noise", p, d.noise);
    d.spread = read_number(*ds, "spread", p, d.spread);
    d.seed = read_count(*ds, "seed", p, d.seed);
    d.path = read_string(*ds, "path", p, d.path);
    d.positive_shift = read_bool(*ds, "positive_shift", p, d.positive_shift);
    d.minmax_scale = read_bool(*ds, "minmax_scale", p, d.minmax_scale);
    if (const json* lc = field(*ds, "label_column")) {
      if (lc->is_null()) {
        d.label_column.reset();
      } else if (lc->is_string() && lc->get<std::string>() == "last") {
        d.label_column = -1;
      } else if (lc->is_number_integer() && lc->get<int>() >= 0) {
        d.label_column = lc->get<int>();
      } else {
        bad(p + "label_column", "expected a 0-based index, \"last\", or null");
      }
    }
    if (const json* ss = field(*ds, "subsample"); ss != nullptr && !ss->is_null()) {
      d.subsample = read_count(*ds, "subsample", p, 0);
    }
    if (d.source == "csv" && d.path.empty()) bad(p + "path", "required when source is csv");
    if (d.source != "csv" && d.n < 2) bad(p + "n", "must be >= 2");
    if (d.noise < 0.0) bad(p + "noise", "must be >= 0");
    if (d.spread < 0.0) bad(p + "spread", "must be >= 0");
  }
  if (c.dataset.name.empty()) c.dataset.name = c.dataset.source;

  c.algo = read_string(j, "algo", "", c.algo);
  if (c.algo != "oda" && !parse_baseline_kind(c.algo)) {
    bad("algo", "expected one of oda, svq, kmeans, batch-da");
  }
  const std::string mode = read_string(j, "mode", "", "classification");
  if (mode != "classification" && mode != "clustering") {
    bad("mode", "expected classification or clustering");
  }
  c.classification = mode == "classification";
  if ((c.algo == "kmeans" || c.algo == "batch-da") && c.classification) {
    bad("mode", c.algo + " supports clustering only");
  }
  if (c.classification && !c.dataset.label_column && c.dataset.source == "csv") {
    bad("dataset.label_column", "classification needs a label column");
  }

  const auto div = parse_divergence(read_string(j, "divergence", "", "euclidean"));
  if (!div) bad("divergence", "expected euclidean or i-divergence");
  c.divergence = *div;

  c.folds = read_count(j, "folds", "", c.folds);
  if (c.folds < 1) bad("folds", "must be >= 1");
  c.master_seed = read_count(j, "master_seed", "", c.master_seed);
  c.threads = read_count(j, "threads", "", c.threads);
  c.seeding = read_string(j, "seeding", "", c.seeding);
  if (c.seeding != "class-mean" && c.seeding != "outside") {
    bad("seeding", "expected class-mean or outside");
  }
  c.timing = read_bool(j, "timing", "", c.timing);

  if (const json* o = field(j, "oda")) {
    if (!o->is_object()) bad("oda", "expected an object");
    c.oda_overrides = *o;
    // Validate eagerly against a throwaway extent so errors surface at load.
    resolve_oda_config(Divergence(c.divergence, 1), 1.0, c.oda_overrides);
  }
  if (const json* s = field(j, "svq")) {
    if (!s->is_object()) bad("svq", "expected an object");
    reject_unknown(*s, "svq.", {"record_every"});
    c.svq_record_every = read_count(*s, "record_every", "svq.", c.svq_record_every);
    if (c.svq_record_every < 1) bad("svq.record_every", "must be >= 1");
  }
  if (const json* k = field(j, "kmeans")) {
    if (!k->is_object()) bad("kmeans", "expected an object");
    reject_unknown(*k, "kmeans.", {"max_iter"});
    c.kmeans_max_iter = read_count(*k, "max_iter", "kmeans.", c.kmeans_max_iter);
    if (c.kmeans_max_iter < 1) bad("kmeans.max_iter", "must be >= 1");
  }
  if (const json* out = field(j, "output_dir"); out != nullptr && !out->is_null()) {
    if (!out->is_string()) bad("output_dir", "expected a string");
    c.output_dir = out->get<std::string>();
  }
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_experiment(j);
}

OdaConfig resolve_oda_config(const Divergence& div, double extent, const json& overrides) {
  OdaConfig c = OdaConfig::defaults(div, extent);
  const std::string p = "oda.";
  reject_unknown(overrides, p,
                 {"k_max", "t_max", "t_min", "gamma", "eps_c", "eps_n", "eps_r", "delta",
                  "step_a", "step_b", "max_obs_per_level", "check_every", "cross_class_split",
                  "gibbs_mode"});
  c.k_max = read_count(overrides, "k_max", p, c.k_max);
  c.t_max = read_number(overrides, "t_max", p, c.t_max);
  c.t_min = read_number(overrides, "t_min", p, c.t_min);
  c.gamma = read_number(overrides, "gamma", p, c.gamma);
  c.eps_c = read_number(overrides, "eps_c", p, c.eps_c);
  c.eps_n = read_number(overrides, "eps_n", p, c.eps_n);
  c.eps_r = read_number(overrides, "eps_r", p, c.eps_r);
  c.delta = read_number(overrides, "delta", p, c.delta);
  c.step_a = read_number(overrides, "step_a", p, c.step_a);
  c.step_b = read_number(overrides, "step_b", p, c.step_b);
  c.max_obs_per_level = read_count(overrides, "max_obs_per_level", p, c.max_obs_per_level);
  c.check_every = read_count(overrides, "check_every", p, c.check_every);
  c.cross_class_split = read_bool(overrides, "cross_class_split", p, c.cross_class_split);
  const auto mode = parse_gibbs_mode(
      read_string(overrides, "gibbs_mode", p, std::string(to_string(c.gibbs_mode))));
  if (!mode) bad(p + "gibbs_mode", "expected all or class-masked");
  c.gibbs_mode = *mode;
  try {
    c.validate();
  } catch (const Error& e) {
    bad(p.substr(0, p.size() - 1), e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Datasets and seeding

Dataset materialize(const DatasetSpec& spec) {
  Dataset data;
  if (spec.source == "blobs") {
    data = gen_blobs(spec.n, default_blob_centers(), spec.spread, spec.seed);
  } else if (spec.source == "circles") {
    data = gen_circles(spec.n, spec.noise, spec.seed);
  } else if (spec.source == "moons") {
    data = gen_moons(spec.n, spec.noise, spec.seed);
  } else {
    CsvOptions opts;
    opts.label_column = spec.label_column;
    data = load_csv(spec.path, opts).data;
  }
  if (spec.subsample) data = subsample(data, *spec.subsample, mix_seed(spec.seed, 7));
  if (spec.minmax_scale) apply_minmax_scale(data);
  if (spec.positive_shift) apply_positive_shift(data);
  return data;
}

std::vector<Sample> outside_seeds(const Dataset& data, bool classification) {
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "cannot seed from an empty dataset");
  const double extent = std::max(data.extent(), 1e-12);
  std::vector<std::optional<Label>> labels;
  if (classification && data.labeled()) {
    labels.assign(data.class_set.begin(), data.class_set.end());
  } else {
    labels.push_back(std::nullopt);
  }
  std::vector<Sample> seeds;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    Vector x(data.dim);
    for (std::size_t k = 0; k < data.dim; ++k) {
      x[k] = data.bounding_box[k].max + extent * (0.5 + 0.25 * static_cast<double>(c));
    }
    seeds.push_back({std::move(x), labels[c]});
  }
  return seeds;
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  const double n = static_cast<double>(s.values.size());
  s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / n;
  if (s.values.size() > 1) {
    double ss = 0.0;
    for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

json reference_scores(const std::string& name) {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) {
    return static_cast<char>(std::tolower(ch));
  });
  const auto row = [](double oda, double svm, double nn, double rf, const char* metric) {
    return json{{"metric", metric}, {"ODA", oda}, {"SVM", svm}, {"NN", nn}, {"RF", rf}};
  };
  if (key == "gaussian" || key == "blobs") return row(98.9, 79.5, 98.6, 98.7, "accuracy");
  if (key == "wbcd") return row(90.7, 85.6, 92.7, 94.6, "accuracy");
  if (key == "credit" || key == "creditcard") return row(95.6, 69.1, 58.9, 62.8, "f1");
  if (key == "pima") return row(70.5, 62.9, 76.3, 74.4, "accuracy");
  return nullptr;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

struct FoldData {
  Dataset train;
  Dataset test;
};

std::vector<Sample> make_seeds(const ExperimentConfig& cfg, const Dataset& train) {
  return cfg.seeding == "outside" ? outside_seeds(train, cfg.classification)
                                  : class_mean_seeds(train, cfg.classification);
}

struct OdaRun {
  OdaModel model;
  RunReport report;
};

OdaRun run_oda(const ExperimentConfig& cfg, const Dataset& data, const Dataset* eval,
               std::uint64_t seed) {
  const Divergence div(cfg.divergence, data.dim);
  OdaConfig oc = resolve_oda_config(div, data.extent(), cfg.oda_overrides);
  oc.seed = seed;
  if (!cfg.oda_overrides.contains("max_obs_per_level")) {
    oc.max_obs_per_level = cfg.dataset.source == "csv" ? 10 * data.size() : 10000;
  }

  Dataset train = data;
  if (!cfg.classification) train.labels.clear();
  OdaModel model = OdaModel::init(oc, make_seeds(cfg, train));
  SampleStream stream(train, mix_seed(seed, 1));
  FitOptions fo;
  fo.eval = eval;
  RunReport report = fit(model, [&] { return stream.next(); }, fo);
  report.config = config_to_json(oc);
  return {std::move(model), std::move(report)};
}

}  // namespace

TrainedModel train(const ExperimentConfig& cfg, const Dataset& data, const Dataset* eval,
                   std::uint64_t seed) {
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  if (cfg.divergence == DivergenceKind::GeneralizedI) {
    const Divergence div(cfg.divergence, data.dim);
    for (const auto& x : data.points) {
      if (!div.in_domain(x)) {
        throw Error(ErrorCode::DomainViolation,
                    "data has nonpositive coordinates; the i-divergence needs a positive shift");
      }
    }
  }
  if (cfg.algo == "oda") {
    OdaRun run = run_oda(cfg, data, eval, seed);
    return {std::move(run.model), std::move(run.report)};
  }

  const Divergence div(cfg.divergence, data.dim);
  if (cfg.algo == "batch-da") {
    OdaConfig oc = resolve_oda_config(div, data.extent(), cfg.oda_overrides);
    oc.seed = seed;
    auto result = batch_da_fit(data, oc);
    result.report.config = config_to_json(oc);
    if (eval != nullptr) result.report.final_distortion = metric_distortion(result.model, *eval);
    return {std::move(result.model), std::move(result.report)};
  }

  // sVQ and k-means take their codebook size from a completed ODA run.
  OdaRun oda = run_oda(cfg, data, nullptr, seed);
  if (cfg.algo == "kmeans") {
    auto result = kmeans_fit(data, div, oda.model.size(), seed, cfg.kmeans_max_iter);
    result.report.config = {{"k", oda.model.size()}, {"k_source", "oda"},
                            {"max_iter", cfg.kmeans_max_iter}};
    if (eval != nullptr) result.report.final_distortion = metric_distortion(result.model, *eval);
    return {std::move(result.model), std::move(result.report)};
  }

  std::vector<Sample> seeds = make_seeds(cfg, data);
  std::vector<std::size_t> copies;
  for (const auto& s : seeds) {
    std::size_t count = 0;
    for (const auto& cv : oda.model.codebook()) count += !s.label || cv.label == s.label;
    copies.push_back(std::max<std::size_t>(1, count));
  }
  BaselineModel model = svq_init(div, seeds, copies, oda.model.config().delta, seed);
  Dataset stream_data = data;
  if (!cfg.classification) stream_data.labels.clear();
  SampleStream stream(stream_data, mix_seed(seed, 1));
  SvqOptions so;
  so.samples = oda.report.samples_seen;
  so.record_every = cfg.svq_record_every;
  so.step = harmonic_step(oda.model.config().step_a, oda.model.config().step_b);
  so.eval = eval;
  RunReport report = svq_fit(model, [&] { return stream.next(); }, so);
  report.config = {{"k", model.codebook.size()}, {"k_source", "oda"}, {"samples", so.samples}};
  return {std::move(model), std::move(report)};
}

namespace {

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir = *cfg.output_dir;
  fs::create_directories(dir);
  const ReportFormat fmt{false};
  for (std::size_t f = 0; f < result.folds.size(); ++f) {
    const auto& r = result.folds[f];
    std::ofstream(dir / ("fold_" + std::to_string(f) + ".jsonl")) << report_jsonl(r, fmt);
    std::ofstream trace(dir / ("trace_fold_" + std::to_string(f) + ".csv"));
    write_trace_csv(trace, r);
    if (cfg.timing) {
      std::ofstream timing(dir / ("timing_fold_" + std::to_string(f) + ".csv"));
      write_timing_csv(timing, r);
    }
  }
  std::ofstream(dir / "aggregate.json") << result.aggregate.dump(2) << '\n';
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const Dataset data = materialize(cfg.dataset);
  if (cfg.classification && !data.labeled()) {
    throw Error(ErrorCode::ConfigError, "mode: classification requires a labeled dataset");
  }
  std::vector<FoldData> folds;
  if (cfg.folds == 1) {
    folds.push_back({data, data});
  } else {
    for (const auto& f : kfold(data, cfg.folds, mix_seed(cfg.master_seed, 0xF01D))) {
      folds.push_back({subset(data, f.train), subset(data, f.test)});
    }
  }

  ExperimentResult result;
  result.folds.resize(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());
  std::size_t next = 0;
  std::mutex lock;
  const auto worker = [&] {
    for (;;) {
      std::size_t f;
      {
        std::lock_guard<std::mutex> guard(lock);
        if (next >= folds.size()) return;
        f = next++;
      }
      try {
        const std::uint64_t seed = mix_seed(cfg.master_seed, f);
        RunReport r = train(cfg, folds[f].train, &folds[f].test, seed).report;
        r.rng_seed = seed;
        r.extra = {{"fold", f}, {"dataset", cfg.dataset.name}, {"train_size", folds[f].train.size()},
                   {"test_size", folds[f].test.size()}, {"master_seed", cfg.master_seed}};
        result.folds[f] = std::move(r);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(
      cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads, 1,
      folds.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> acc, f1, dist, k, samples;
  for (const auto& r : result.folds) {
    if (r.final_accuracy) acc.push_back(*r.final_accuracy);
    if (r.final_f1) f1.push_back(*r.final_f1);
    if (r.final_distortion) dist.push_back(*r.final_distortion);
    k.push_back(static_cast<double>(r.final_k));
    samples.push_back(static_cast<double>(r.samples_seen));
  }
  const auto block = [](const std::vector<double>& v) -> json {
    if (v.empty()) return nullptr;
    const auto s = summarize(v);
    return {{"mean", s.mean}, {"std", s.stddev}, {"values", s.values}};
  };
  result.aggregate = {
      {"format_version", kFormatVersion},
      {"kind", "aggregate"},
      {"std_estimator", "sample standard deviation (n - 1)"},
      {"config", cfg.to_json()},
      {"folds", result.folds.size()},
      {"accuracy", block(acc)},
      {"f1_macro", block(f1)},
      {"avg_distortion", block(dist)},
      {"final_k", block(k)},
      {"samples_seen", block(samples)},
      {"reference", reference_scores(cfg.dataset.name)},
  };
  if (cfg.output_dir) write_outputs(cfg, result);
  return result;
}

}  // namespace oda
