#include "oda/persistence.hpp"

#include <fstream>

#include "oda/error.hpp"

namespace oda {

using nlohmann::json;

namespace {

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed model document: ") + e.what());
  }
}

void check_version(const json& j, const char* expected_type) {
  if (!j.is_object()) throw Error(ErrorCode::FormatError, "model document is not an object");
  if (j.value("format_version", 0) != kFormatVersion) {
    throw Error(ErrorCode::FormatError, "unsupported model format_version");
  }
  if (expected_type != nullptr && j.value("model_type", "") != expected_type) {
    throw Error(ErrorCode::FormatError,
                std::string("expected model_type '") + expected_type + "'");
  }
}

Divergence divergence_from(const json& j) {
  const auto kind = parse_divergence(j.at("divergence").get<std::string>());
  if (!kind) throw Error(ErrorCode::FormatError, "unknown divergence");
  return Divergence(*kind, j.at("dimension").get<std::size_t>());
}

json label_json(const std::optional<Label>& label) { return label ? json(*label) : json(nullptr); }

}  // namespace

json config_to_json(const OdaConfig& c) {
  return {
      {"divergence", std::string(to_string(c.divergence.kind()))},
      {"dimension", c.divergence.dimension()},
      {"k_max", c.k_max},
      {"t_max", c.t_max},
      {"t_min", c.t_min},
      {"gamma", c.gamma},
      {"eps_c", c.eps_c},
      {"eps_n", c.eps_n},
      {"eps_r", c.eps_r},
      {"delta", c.delta},
      {"step_a", c.step_a},
      {"step_b", c.step_b},
      {"max_obs_per_level", c.max_obs_per_level},
      {"check_every", c.check_every},
      {"cross_class_split", c.cross_class_split},
      {"gibbs_mode", std::string(to_string(c.gibbs_mode))},
      {"seed", c.seed},
  };
}

OdaConfig config_from_json(const json& j) {
  return guarded([&] {
    OdaConfig c(divergence_from(j));
    c.k_max = j.at("k_max").get<std::size_t>();
    c.t_max = j.at("t_max").get<double>();
    c.t_min = j.at("t_min").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.eps_c = j.at("eps_c").get<double>();
    c.eps_n = j.at("eps_n").get<double>();
    c.eps_r = j.at("eps_r").get<double>();
    c.delta = j.at("delta").get<double>();
    c.step_a = j.at("step_a").get<double>();
    c.step_b = j.at("step_b").get<double>();
    c.max_obs_per_level = j.at("max_obs_per_level").get<std::size_t>();
    c.check_every = j.at("check_every").get<std::size_t>();
    c.cross_class_split = j.at("cross_class_split").get<bool>();
    const auto mode = parse_gibbs_mode(j.at("gibbs_mode").get<std::string>());
    if (!mode) throw Error(ErrorCode::FormatError, "unknown gibbs_mode");
    c.gibbs_mode = *mode;
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  });
}

json model_to_json(const OdaModel& model) {
  const auto s = model.state();
  json codebook = json::array();
  for (const auto& cv : s.codebook) {
    codebook.push_back({
        {"mu", cv.mu},
        {"class_label", label_json(cv.label)},
        {"rho", cv.rho},
        {"sigma", cv.sigma},
        {"prev_mu", cv.prev_mu},
    });
  }
  return {
      {"format_version", kFormatVersion},
      {"model_type", "oda"},
      {"config", config_to_json(s.config)},
      {"schedule",
       {{"t_max", s.schedule.t_max},
        {"t_min", s.schedule.t_min},
        {"gamma", s.schedule.gamma},
        {"current", s.schedule.current}}},
      {"classes", s.classes},
      {"level", s.level},
      {"level_observations", s.level_observations},
      {"total_observations", s.total_observations},
      {"rng_state", s.rng_state},
      {"codebook", codebook},
  };
}

OdaModel oda_model_from_json(const json& j) {
  check_version(j, "oda");
  return guarded([&] {
    const auto& sch = j.at("schedule");
    OdaModel::State s{
        config_from_json(j.at("config")),
        TemperatureSchedule{sch.at("t_max").get<double>(), sch.at("t_min").get<double>(),
                            sch.at("gamma").get<double>(), sch.at("current").get<double>()},
        j.at("classes").get<std::vector<Label>>(),
        {},
        j.at("level").get<std::size_t>(),
        j.at("level_observations").get<std::size_t>(),
        j.at("total_observations").get<std::uint64_t>(),
        j.value("rng_state", std::string{}),
    };
    for (const auto& cj : j.at("codebook")) {
      Codevector cv;
      cv.mu = cj.at("mu").get<Vector>();
      if (!cj.at("class_label").is_null()) cv.label = cj.at("class_label").get<Label>();
      cv.rho = cj.at("rho").get<double>();
      cv.sigma = cj.at("sigma").get<Vector>();
      cv.prev_mu = cj.value("prev_mu", cv.mu);
      s.codebook.push_back(std::move(cv));
    }
    return OdaModel::from_state(std::move(s));
  });
}

json model_to_json(const BaselineModel& m) {
  json j = {
      {"format_version", kFormatVersion},
      {"model_type", "baseline"},
      {"kind", std::string(to_string(m.kind))},
      {"divergence", std::string(to_string(m.divergence.kind()))},
      {"dimension", m.divergence.dimension()},
      {"codebook", m.codebook},
      {"labels", m.labels},
      {"update_counts", m.update_counts},
      {"rho", m.rho},
  };
  j["temperature"] = m.temperature ? json(*m.temperature) : json(nullptr);
  return j;
}

BaselineModel baseline_model_from_json(const json& j) {
  check_version(j, "baseline");
  return guarded([&] {
    BaselineModel m;
    const auto kind = parse_baseline_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::FormatError, "unknown baseline kind");
    m.kind = *kind;
    m.divergence = divergence_from(j);
    m.codebook = j.at("codebook").get<std::vector<Vector>>();
    m.labels = j.value("labels", std::vector<Label>{});
    m.update_counts = j.value("update_counts", std::vector<std::uint64_t>{});
    m.rho = j.value("rho", std::vector<double>{});
    if (j.contains("temperature") && !j.at("temperature").is_null()) {
      m.temperature = j.at("temperature").get<double>();
    }
    m.validate();
    return m;
  });
}

AnyModel model_from_json(const json& j) {
  check_version(j, nullptr);
  const std::string type = j.value("model_type", "");
  if (type == "oda") return oda_model_from_json(j);
  if (type == "baseline") return baseline_model_from_json(j);
  throw Error(ErrorCode::FormatError, "unknown model_type '" + type + "'");
}

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

void save_model(const std::filesystem::path& path, const OdaModel& model) {
  write_json(path, model_to_json(model));
}

void save_model(const std::filesystem::path& path, const BaselineModel& model) {
  write_json(path, model_to_json(model));
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace oda
