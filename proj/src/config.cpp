#include "aisr/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "aisr/dataset_io.hpp"
#include "aisr/errors.hpp"

namespace aisr::pipeline {

using nlohmann::json;

void PipelineConfig::validate() const {
  shapes.validate();
  if (shape_count < 0) throw ConfigError("config: shape count must be >= 0");
  if (solver.tol <= 0.0 || solver.max_iter <= 0) throw ConfigError("config: invalid solver options");
  if (!background.valid() || !object.valid()) throw ConfigError("config: invalid materials");
  if (frequencies_hz.empty()) throw ConfigError("config: frequency list must be non-empty");
  for (const double f : frequencies_hz)
    if (f <= 0.0) throw ConfigError("config: frequencies must be positive");
  aae.validate();
  fnn.validate();
  inn.validate();
  if (variant_epochs <= 0) throw ConfigError("config: variant epochs must be positive");
  if (angular_lo_deg >= angular_hi_deg) throw ConfigError("config: empty angular range");
  if (jobs < 0) throw ConfigError("config: jobs must be >= 0");
}

PipelineConfig default_config() {
  PipelineConfig cfg;
  cfg.aae.epochs = 200;
  cfg.aae.seed = 1;
  cfg.fnn.epochs = 300;
  cfg.fnn.seed = 2;
  cfg.inn.epochs = 300;
  cfg.inn.seed = 3;
  return cfg;
}

namespace {

json train_to_json(const models::TrainConfig& t) {
  return json{{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size},
              {"epochs", t.epochs},               {"kl_weight", t.kl_weight},
              {"beta1", t.beta1},                 {"beta2", t.beta2},
              {"adam_eps", t.adam_eps},           {"seed", t.seed}};
}

models::TrainConfig train_from_json(const json& js, const models::TrainConfig& base) {
  models::TrainConfig t = base;
  t.learning_rate = js.value("learning_rate", t.learning_rate);
  t.batch_size = js.value("batch_size", t.batch_size);
  t.epochs = js.value("epochs", t.epochs);
  t.kl_weight = js.value("kl_weight", t.kl_weight);
  t.beta1 = js.value("beta1", t.beta1);
  t.beta2 = js.value("beta2", t.beta2);
  t.adam_eps = js.value("adam_eps", t.adam_eps);
  t.seed = js.value("seed", t.seed);
  return t;
}

}  // namespace

std::string config_to_json(const PipelineConfig& cfg) {
  json js;
  js["shapes"] = {{"count", cfg.shape_count},
                  {"seed", cfg.shape_seed},
                  {"domain_size", cfg.shapes.domain_size},
                  {"harmonics_min", cfg.shapes.harmonics_min},
                  {"harmonics_max", cfg.shapes.harmonics_max},
                  {"order_max", cfg.shapes.order_max},
                  {"base_radius_min", cfg.shapes.base_radius_min},
                  {"base_radius_max", cfg.shapes.base_radius_max},
                  {"amplitude_cap", cfg.shapes.amplitude_cap},
                  {"fill_min", cfg.shapes.fill_min},
                  {"fill_max", cfg.shapes.fill_max}};
  js["solver"] = {{"tol", cfg.solver.tol}, {"max_iter", cfg.solver.max_iter}};
  js["materials"] = {{"background", {{"density", cfg.background.density},
                                     {"bulk_modulus", cfg.background.bulk_modulus}}},
                     {"object", {{"density", cfg.object.density},
                                 {"bulk_modulus", cfg.object.bulk_modulus}}}};
  js["frequencies_hz"] = cfg.frequencies_hz;
  js["split"] = {{"ratios", cfg.split_ratios}, {"seed", cfg.split_seed}};
  js["training"] = {{"aae", train_to_json(cfg.aae)},
                    {"fnn", train_to_json(cfg.fnn)},
                    {"inn", train_to_json(cfg.inn)},
                    {"variant_epochs", cfg.variant_epochs}};
  js["angular"] = {{"lo_deg", cfg.angular_lo_deg}, {"hi_deg", cfg.angular_hi_deg}};
  js["paths"] = {{"out_dir", cfg.out_dir}};
  js["jobs"] = cfg.jobs;
  return js.dump(2) + "\n";
}

void save_config(const std::string& path, const PipelineConfig& cfg) {
  io::atomic_write(path, config_to_json(cfg));
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json js;
  try {
    js = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  PipelineConfig cfg = default_config();
  if (js.contains("shapes")) {
    const auto& s = js["shapes"];
    cfg.shape_count = s.value("count", cfg.shape_count);
    cfg.shape_seed = s.value("seed", cfg.shape_seed);
    cfg.shapes.domain_size = s.value("domain_size", cfg.shapes.domain_size);
    cfg.shapes.harmonics_min = s.value("harmonics_min", cfg.shapes.harmonics_min);
    cfg.shapes.harmonics_max = s.value("harmonics_max", cfg.shapes.harmonics_max);
    cfg.shapes.order_max = s.value("order_max", cfg.shapes.order_max);
    cfg.shapes.base_radius_min = s.value("base_radius_min", cfg.shapes.base_radius_min);
    cfg.shapes.base_radius_max = s.value("base_radius_max", cfg.shapes.base_radius_max);
    cfg.shapes.amplitude_cap = s.value("amplitude_cap", cfg.shapes.amplitude_cap);
    cfg.shapes.fill_min = s.value("fill_min", cfg.shapes.fill_min);
    cfg.shapes.fill_max = s.value("fill_max", cfg.shapes.fill_max);
  }
  if (js.contains("solver")) {
    cfg.solver.tol = js["solver"].value("tol", cfg.solver.tol);
    cfg.solver.max_iter = js["solver"].value("max_iter", cfg.solver.max_iter);
  }
  if (js.contains("materials")) {
    const auto& m = js["materials"];
    if (m.contains("background")) {
      cfg.background.density = m["background"].value("density", cfg.background.density);
      cfg.background.bulk_modulus =
          m["background"].value("bulk_modulus", cfg.background.bulk_modulus);
    }
    if (m.contains("object")) {
      cfg.object.density = m["object"].value("density", cfg.object.density);
      cfg.object.bulk_modulus = m["object"].value("bulk_modulus", cfg.object.bulk_modulus);
    }
  }
  if (js.contains("frequencies_hz"))
    cfg.frequencies_hz = js["frequencies_hz"].get<std::vector<double>>();
  if (js.contains("split")) {
    if (js["split"].contains("ratios"))
      cfg.split_ratios = js["split"]["ratios"].get<std::array<double, 3>>();
    cfg.split_seed = js["split"].value("seed", cfg.split_seed);
  }
  if (js.contains("training")) {
    const auto& t = js["training"];
    if (t.contains("aae")) cfg.aae = train_from_json(t["aae"], cfg.aae);
    if (t.contains("fnn")) cfg.fnn = train_from_json(t["fnn"], cfg.fnn);
    if (t.contains("inn")) cfg.inn = train_from_json(t["inn"], cfg.inn);
    cfg.variant_epochs = t.value("variant_epochs", cfg.variant_epochs);
  }
  if (js.contains("angular")) {
    cfg.angular_lo_deg = js["angular"].value("lo_deg", cfg.angular_lo_deg);
    cfg.angular_hi_deg = js["angular"].value("hi_deg", cfg.angular_hi_deg);
  }
  if (js.contains("paths")) cfg.out_dir = js["paths"].value("out_dir", cfg.out_dir);
  cfg.jobs = js.value("jobs", cfg.jobs);
  cfg.validate();
  return cfg;
}

}  // namespace aisr::pipeline
