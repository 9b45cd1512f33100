#include "aisr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "aisr/errors.hpp"
#include "aisr/hash.hpp"
#include "aisr/metrics.hpp"
#include "aisr/mie.hpp"
#include "aisr/rng.hpp"
#include "aisr/scatter.hpp"

namespace aisr::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void require_dir(const std::string& dir) {
  if (!fs::exists(dir)) throw ConfigError("output directory does not exist: " + dir);
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir);
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw MissingArtifactError(what + " not found: " + path);
}

json stats_to_json(const models::Standardization& st) {
  return json{{"block_len", st.block_len}, {"mean", st.mean}, {"stddev", st.stddev}};
}

models::Standardization stats_from_json(const json& js) {
  models::Standardization st;
  st.block_len = js.at("block_len").get<int>();
  st.mean = js.at("mean").get<std::vector<double>>();
  st.stddev = js.at("stddev").get<std::vector<double>>();
  return st;
}

json train_meta(const models::TrainConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size},
              {"epochs", cfg.epochs},               {"kl_weight", cfg.kl_weight},
              {"seed", cfg.seed}};
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
  std::string text = header + "\n";
  for (const auto& r : rows) text += r + "\n";
  io::atomic_write(path, text);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Checkpoint adapters

void save_aae_model(const std::string& path, const models::AaeModel& aae,
                    const models::TrainConfig& cfg, std::uint64_t data_hash) {
  json meta;
  meta["train"] = train_meta(cfg);
  meta["data_hash"] = hex64(data_hash);
  io::save_checkpoint(path, "aae", {"encoder", "generator", "discriminator"},
                      {&aae.encoder, &aae.generator, &aae.discriminator}, meta);
}

models::AaeModel load_aae_model(const std::string& path) {
  require_file(path, "AAE checkpoint");
  io::Checkpoint ck = io::load_checkpoint(path, "aae");
  if (ck.nets.size() != 3) throw IoError(path + ": AAE checkpoint must hold three nets");
  models::AaeModel aae;
  aae.encoder = std::move(ck.nets[0]);
  aae.generator = std::move(ck.nets[1]);
  aae.discriminator = std::move(ck.nets[2]);
  return aae;
}

void save_fnn_model(const std::string& path, const models::FnnModel& fnn,
                    const models::TrainConfig& cfg, std::uint64_t data_hash) {
  json meta;
  meta["train"] = train_meta(cfg);
  meta["data_hash"] = hex64(data_hash);
  meta["stats"] = stats_to_json(fnn.stats);
  meta["output_indices"] = fnn.output_indices;
  io::save_checkpoint(path, "fnn", {"fnn"}, {&fnn.net}, meta);
}

models::FnnModel load_fnn_model(const std::string& path) {
  require_file(path, "FNN checkpoint");
  io::Checkpoint ck = io::load_checkpoint(path, "fnn");
  if (ck.nets.size() != 1) throw IoError(path + ": FNN checkpoint must hold one net");
  models::FnnModel fnn;
  fnn.net = std::move(ck.nets[0]);
  const json meta = json::parse(ck.meta_text);
  fnn.stats = stats_from_json(meta.at("stats"));
  fnn.output_indices = meta.at("output_indices").get<std::vector<int>>();
  return fnn;
}

void save_inn_model(const std::string& path, const models::InnModel& inn,
                    const models::TrainConfig& cfg, std::uint64_t gen_hash,
                    std::uint64_t fnn_hash) {
  json meta;
  meta["train"] = train_meta(cfg);
  meta["stats"] = stats_to_json(inn.stats);
  meta["input_indices"] = inn.input_indices;
  meta["decoder"] = {{"generator_hash", hex64(gen_hash)}, {"fnn_hash", hex64(fnn_hash)}};
  io::save_checkpoint(path, "inn", {"trunk", "mu_head", "log_var_head"},
                      {&inn.trunk, &inn.mu_head, &inn.log_var_head}, meta);
}

models::InnModel load_inn_model(const std::string& path) {
  require_file(path, "INN checkpoint");
  io::Checkpoint ck = io::load_checkpoint(path, "inn");
  if (ck.nets.size() != 3) throw IoError(path + ": INN checkpoint must hold three nets");
  models::InnModel inn;
  inn.trunk = std::move(ck.nets[0]);
  inn.mu_head = std::move(ck.nets[1]);
  inn.log_var_head = std::move(ck.nets[2]);
  const json meta = json::parse(ck.meta_text);
  inn.stats = stats_from_json(meta.at("stats"));
  inn.input_indices = meta.at("input_indices").get<std::vector<int>>();
  return inn;
}

// ---------------------------------------------------------------------------

models::FMat images_to_matrix(const std::vector<geometry::BinaryImage>& images,
                              const std::vector<int>& indices) {
  models::FMat m(models::kImageDim, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const auto& img = images.at(static_cast<std::size_t>(indices[c]));
    for (int r = 0; r < models::kImageDim; ++r)
      m(r, static_cast<Eigen::Index>(c)) = static_cast<float>(img.pixels[static_cast<std::size_t>(r)]);
  }
  return m;
}

models::FMat farfields_to_matrix(const std::vector<std::vector<float>>& records,
                                 const std::vector<int>& indices) {
  models::FMat m(models::kFarFieldDim, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const auto& rec = records.at(static_cast<std::size_t>(indices[c]));
    for (int r = 0; r < models::kFarFieldDim; ++r)
      m(r, static_cast<Eigen::Index>(c)) = rec[static_cast<std::size_t>(r)];
  }
  return m;
}

namespace {

struct Dataset {
  std::vector<geometry::BinaryImage> images;
  std::vector<std::vector<float>> farfields;
  io::Manifest manifest;
};

Dataset load_dataset(const PipelineConfig& cfg, bool need_farfields) {
  Dataset ds;
  const std::string manifest_path = join(cfg.out_dir, artifact::manifest);
  require_file(manifest_path, "manifest");
  ds.manifest = io::load_manifest(manifest_path);
  const std::string shapes_path = join(cfg.out_dir, artifact::shapes);
  require_file(shapes_path, "shape shard");
  ds.images = io::load_shapes(shapes_path, cfg.shapes.domain_size);
  if (need_farfields) {
    const std::string ff_path = join(cfg.out_dir, artifact::farfields);
    require_file(ff_path, "far-field shard");
    ds.farfields = io::load_farfields(ff_path);
    if (ds.farfields.size() != ds.images.size())
      throw IoError("far-field shard and shape shard record counts differ");
  }
  return ds;
}

}  // namespace

// ---------------------------------------------------------------------------

void run_gen(const PipelineConfig& cfg) {
  cfg.validate();
  require_dir(cfg.out_dir);
  std::vector<geometry::BinaryImage> images;
  images.reserve(static_cast<std::size_t>(cfg.shape_count));
  for (int i = 0; i < cfg.shape_count; ++i)
    images.push_back(
        geometry::sample_dataset_image(Rng::derive(cfg.shape_seed, static_cast<std::uint64_t>(i)),
                                       cfg.shapes));
  io::save_shapes(join(cfg.out_dir, artifact::shapes), images);

  io::Manifest manifest = io::build_manifest(cfg.shape_count, cfg.split_seed, cfg.split_ratios);
  manifest.dataset_id = "aisr-" + hex64(Rng::derive(cfg.shape_seed, 0xffee));
  manifest.shapes_shard = artifact::shapes;
  manifest.farfields_shard = artifact::farfields;
  manifest.generator_seed = cfg.shape_seed;
  json solver_js = {{"tol", cfg.solver.tol},
                    {"max_iter", cfg.solver.max_iter},
                    {"frequencies_hz", cfg.frequencies_hz},
                    {"background", {{"density", cfg.background.density},
                                    {"bulk_modulus", cfg.background.bulk_modulus}}},
                    {"object", {{"density", cfg.object.density},
                                {"bulk_modulus", cfg.object.bulk_modulus}}}};
  manifest.solver_settings = solver_js.dump();
  io::save_manifest(join(cfg.out_dir, artifact::manifest), manifest);
}

void run_simulate(const PipelineConfig& cfg) {
  cfg.validate();
  require_dir(cfg.out_dir);
  Dataset ds = load_dataset(cfg, false);
  const int n = static_cast<int>(ds.images.size());
  std::vector<std::vector<float>> records(static_cast<std::size_t>(n),
                                          std::vector<float>(models::kFarFieldDim, 0.0f));
  std::vector<int> failures;
  std::mutex failures_mutex;

  const unsigned hw = std::thread::hardware_concurrency();
  const int jobs = cfg.jobs > 0 ? cfg.jobs : std::max(1u, hw);
  std::atomic<int> next{0};
  std::atomic<int> done{0};

  auto worker = [&]() {
    scatter::Simulator sim(cfg.frequencies_hz, cfg.background, cfg.object, 64,
                           cfg.shapes.domain_size, cfg.solver);
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) break;
      try {
        const scatter::FarFieldSet set = sim.simulate(ds.images[static_cast<std::size_t>(i)]);
        auto& rec = records[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < set.values.size() && j < rec.size(); ++j)
          rec[j] = static_cast<float>(set.values[j]);
      } catch (const NumericError&) {
        std::lock_guard<std::mutex> lock(failures_mutex);
        failures.push_back(i);
      }
      const int d = done.fetch_add(1) + 1;
      if (d % 200 == 0) std::fprintf(stderr, "simulate: %d/%d\n", d, n);
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  io::save_farfields(join(cfg.out_dir, artifact::farfields), records);
  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    std::string text;
    for (const int i : failures) text += std::to_string(i) + "\n";
    io::atomic_write(join(cfg.out_dir, "simulate_failures.txt"), text);
    std::fprintf(stderr, "simulate: %zu samples failed\n", failures.size());
    if (failures.size() * 100 > static_cast<std::size_t>(n))
      throw NumericError("simulate: more than 1% of samples failed");
  }
}

void run_train_aae(const PipelineConfig& cfg) {
  cfg.validate();
  Dataset ds = load_dataset(cfg, false);
  const models::FMat train = images_to_matrix(ds.images, ds.manifest.train);
  auto [aae, hist] = models::train_aae(train, cfg.aae);
  const std::uint64_t data_hash = hash_file(join(cfg.out_dir, artifact::shapes));
  save_aae_model(join(cfg.out_dir, artifact::aae_ckpt), aae, cfg.aae, data_hash);
  std::vector<std::string> rows;
  for (std::size_t e = 0; e < hist.reconstruction.size(); ++e)
    rows.push_back(std::to_string(e) + "," + fmt(hist.reconstruction[e]) + "," +
                   fmt(hist.discriminator[e]) + "," + fmt(hist.adversarial[e]));
  write_csv(join(cfg.out_dir, artifact::aae_history), "epoch,reconstruction_bce,discriminator_bce,adversarial_bce", rows);
}

void run_train_fnn(const PipelineConfig& cfg) {
  cfg.validate();
  Dataset ds = load_dataset(cfg, true);
  const models::FMat x_train = images_to_matrix(ds.images, ds.manifest.train);
  const models::FMat f_train = farfields_to_matrix(ds.farfields, ds.manifest.train);
  const models::FMat x_val = images_to_matrix(ds.images, ds.manifest.val);
  const models::FMat f_val = farfields_to_matrix(ds.farfields, ds.manifest.val);
  const models::Standardization stats = models::compute_standardization(f_train);
  const std::vector<int> out_idx = models::full_farfield_indices();
  auto [fnn, hist] = models::train_fnn(x_train, f_train, x_val, f_val,
                                       models::fnn_widths(models::kFarFieldDim), out_idx, stats,
                                       cfg.fnn);
  const std::uint64_t data_hash = hash_file(join(cfg.out_dir, artifact::farfields));
  save_fnn_model(join(cfg.out_dir, artifact::fnn_ckpt), fnn, cfg.fnn, data_hash);
  std::vector<std::string> rows;
  for (std::size_t e = 0; e < hist.train_mse.size(); ++e)
    rows.push_back(std::to_string(e) + "," + fmt(hist.train_mse[e]) + "," + fmt(hist.val_mse[e]));
  write_csv(join(cfg.out_dir, artifact::fnn_history), "epoch,train_mse,val_mse", rows);
}

void run_train_inn(const PipelineConfig& cfg) {
  cfg.validate();
  Dataset ds = load_dataset(cfg, true);
  const models::AaeModel aae = load_aae_model(join(cfg.out_dir, artifact::aae_ckpt));
  const models::FnnModel fnn = load_fnn_model(join(cfg.out_dir, artifact::fnn_ckpt));
  const models::FMat f_train = farfields_to_matrix(ds.farfields, ds.manifest.train);
  const std::vector<int> in_idx = models::full_farfield_indices();
  auto [inn, hist] =
      models::train_inn(f_train, aae.generator, fnn, models::inn_trunk_widths(models::kFarFieldDim),
                        in_idx, fnn.stats, cfg.inn);
  save_inn_model(join(cfg.out_dir, artifact::inn_ckpt), inn, cfg.inn,
                 io::parameter_hash(aae.generator), io::parameter_hash(fnn.net));
  std::vector<std::string> rows;
  for (std::size_t e = 0; e < hist.total.size(); ++e)
    rows.push_back(std::to_string(e) + "," + fmt(hist.total[e]) + "," + fmt(hist.mae[e]) + "," +
                   fmt(hist.kl[e]));
  write_csv(join(cfg.out_dir, artifact::inn_history), "epoch,total,mae,kl", rows);
}

EvalSummary run_eval(const PipelineConfig& cfg) {
  cfg.validate();
  Dataset ds = load_dataset(cfg, true);
  const models::AaeModel aae = load_aae_model(join(cfg.out_dir, artifact::aae_ckpt));
  const models::FnnModel fnn = load_fnn_model(join(cfg.out_dir, artifact::fnn_ckpt));
  const models::InnModel inn = load_inn_model(join(cfg.out_dir, artifact::inn_ckpt));

  // Disjointness guard straight from the manifest.
  {
    std::vector<char> seen(ds.images.size(), 0);
    for (const int i : ds.manifest.train) seen.at(static_cast<std::size_t>(i)) |= 1;
    for (const int i : ds.manifest.test)
      if (seen.at(static_cast<std::size_t>(i)) & 1)
        throw ConfigError("eval: test split overlaps the train split");
  }

  const models::FMat x_test = images_to_matrix(ds.images, ds.manifest.test);
  const models::FMat f_test = farfields_to_matrix(ds.farfields, ds.manifest.test);

  const fs::path eval_dir = fs::path(cfg.out_dir) / "eval";
  fs::create_directories(eval_dir);

  const models::AaeEval aae_ev = models::evaluate_aae(aae, x_test);
  const std::vector<double> fnn_err = models::evaluate_fnn(fnn, x_test, f_test);
  const models::InnEval inn_ev = models::evaluate_inn(inn, aae.generator, fnn, f_test, x_test);

  std::vector<std::string> rows;
  for (std::size_t i = 0; i < aae_ev.ssim.size(); ++i)
    rows.push_back(std::to_string(i) + "," + fmt(aae_ev.ssim[i]) + "," + fmt(aae_ev.bce[i]));
  write_csv((eval_dir / "aae_metrics.csv").string(), "sample,ssim,bce", rows);

  rows.clear();
  for (std::size_t i = 0; i < fnn_err.size(); ++i)
    rows.push_back(std::to_string(i) + "," + fmt(fnn_err[i]));
  write_csv((eval_dir / "fnn_metrics.csv").string(), "sample,rel_err", rows);

  rows.clear();
  for (std::size_t i = 0; i < inn_ev.rel_err.size(); ++i)
    rows.push_back(std::to_string(i) + "," + fmt(inn_ev.rel_err[i]) + "," + fmt(inn_ev.ssim[i]) +
                   "," + fmt(inn_ev.bce[i]));
  write_csv((eval_dir / "inn_metrics.csv").string(), "sample,rel_err,ssim,bce", rows);

  // Far-field comparison tables for the first test samples (decoder
  // reconstruction vs target), one row per (frequency, angle).
  const int compare_count = std::min<int>(2, static_cast<int>(ds.manifest.test.size()));
  for (int s = 0; s < compare_count; ++s) {
    std::vector<double> target(models::kFarFieldDim);
    for (int r = 0; r < models::kFarFieldDim; ++r) target[static_cast<std::size_t>(r)] = f_test(r, s);
    const models::Inversion inv = models::invert(inn, aae.generator, target);
    const std::vector<double> pred = models::predict(fnn, inv.image_real);
    rows.clear();
    for (int r = 0; r < models::kFarFieldDim; ++r) {
      const int block = r / models::kAnglesPerFreq;
      const int m = r % models::kAnglesPerFreq;
      const double freq = block < static_cast<int>(cfg.frequencies_hz.size())
                              ? cfg.frequencies_hz[static_cast<std::size_t>(block)]
                              : 0.0;
      rows.push_back(fmt(freq) + "," + fmt(360.0 * m / models::kAnglesPerFreq) + "," +
                     fmt(target[static_cast<std::size_t>(r)]) + "," +
                     fmt(pred[static_cast<std::size_t>(r)]));
    }
    write_csv((eval_dir / ("farfield_compare_" + std::to_string(s) + ".csv")).string(),
              "freq_hz,angle_deg,target,predicted", rows);
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  EvalSummary summary;
  summary.aae_ssim_mean = mean_of(aae_ev.ssim);
  summary.aae_bce_mean = mean_of(aae_ev.bce);
  summary.fnn_rel_err_mean = mean_of(fnn_err);
  summary.inn_rel_err_mean = mean_of(inn_ev.rel_err);
  summary.inn_ssim_mean = mean_of(inn_ev.ssim);
  summary.inn_bce_mean = mean_of(inn_ev.bce);

  json js;
  js["aae"] = {{"ssim_mean", summary.aae_ssim_mean},
               {"bce_mean", summary.aae_bce_mean},
               {"ssim_median", metrics::aggregate(aae_ev.ssim, "test", "ssim").median},
               {"bce_median", metrics::aggregate(aae_ev.bce, "test", "bce").median}};
  js["fnn"] = {{"rel_err_mean", summary.fnn_rel_err_mean},
               {"rel_err_median", metrics::aggregate(fnn_err, "test", "rel_err").median}};
  js["inn"] = {{"rel_err_mean", summary.inn_rel_err_mean},
               {"ssim_mean", summary.inn_ssim_mean},
               {"bce_mean", summary.inn_bce_mean}};
  js["test_count"] = ds.manifest.test.size();
  io::atomic_write((eval_dir / "summary.json").string(), js.dump(2) + "\n");
  return summary;
}

std::vector<AblationRow> run_frequency_ablation(const PipelineConfig& cfg,
                                                const std::vector<int>& ks) {
  cfg.validate();
  Dataset ds = load_dataset(cfg, true);
  const models::AaeModel aae = load_aae_model(join(cfg.out_dir, artifact::aae_ckpt));
  const models::FnnModel fnn = load_fnn_model(join(cfg.out_dir, artifact::fnn_ckpt));

  const models::FMat f_train = farfields_to_matrix(ds.farfields, ds.manifest.train);
  const models::FMat f_test = farfields_to_matrix(ds.farfields, ds.manifest.test);
  const models::FMat x_test = images_to_matrix(ds.images, ds.manifest.test);

  std::vector<AblationRow> table;
  for (const int k : ks) {
    const models::SelectionMask mask =
        models::frequency_prefix_mask(k, models::kAnglesPerFreq,
                                      static_cast<int>(cfg.frequencies_hz.size()));
    // The frozen full FNN serves as decoder; the INN compares only the first
    // k frequency blocks of its output.
    models::TrainConfig tc = cfg.inn;
    tc.epochs = cfg.variant_epochs;
    tc.seed = Rng::derive(cfg.inn.seed, static_cast<std::uint64_t>(100 + k));
    const std::vector<int> widths = k == 1 ? models::inn_trunk_widths_single_freq()
                                           : models::inn_trunk_widths(87 * k);
    auto [inn_k, hist] = models::train_inn(f_train, aae.generator, fnn, widths,
                                           mask.indices, fnn.stats, tc);
    save_inn_model(join(cfg.out_dir, "inn_k" + std::to_string(k) + ".ckpt"), inn_k, tc,
                   io::parameter_hash(aae.generator), io::parameter_hash(fnn.net));
    const models::InnEval ev = models::evaluate_inn(inn_k, aae.generator, fnn, f_test, x_test);
    AblationRow row;
    row.k = k;
    auto mean_of = [](const std::vector<double>& v) {
      double s = 0.0;
      for (const double x : v) s += x;
      return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    row.bce_mean = mean_of(ev.bce);
    row.ssim_mean = mean_of(ev.ssim);
    row.rel_err_mean = mean_of(ev.rel_err);
    table.push_back(row);
    std::fprintf(stderr, "ablation k=%d: bce=%.4f ssim=%.4f rel_err=%.4f\n", k, row.bce_mean,
                 row.ssim_mean, row.rel_err_mean);
  }

  std::vector<std::string> rows;
  for (const auto& r : table)
    rows.push_back(std::to_string(r.k) + "," + fmt(r.bce_mean) + "," + fmt(r.ssim_mean) + "," +
                   fmt(r.rel_err_mean));
  write_csv(join(cfg.out_dir, artifact::ablate_table), "k,bce_mean,ssim_mean,rel_err_mean", rows);
  return table;
}

HalfplaneResult run_halfplane(const PipelineConfig& cfg) {
  cfg.validate();
  Dataset ds = load_dataset(cfg, true);
  const models::AaeModel aae = load_aae_model(join(cfg.out_dir, artifact::aae_ckpt));

  const models::FMat x_train = images_to_matrix(ds.images, ds.manifest.train);
  const models::FMat f_train = farfields_to_matrix(ds.farfields, ds.manifest.train);
  const models::FMat x_val = images_to_matrix(ds.images, ds.manifest.val);
  const models::FMat f_val = farfields_to_matrix(ds.farfields, ds.manifest.val);
  const models::FMat x_test = images_to_matrix(ds.images, ds.manifest.test);
  const models::FMat f_test = farfields_to_matrix(ds.farfields, ds.manifest.test);

  const int freq_count = static_cast<int>(cfg.frequencies_hz.size());
  const models::SelectionMask mask =
      models::angle_range_mask(cfg.angular_lo_deg, cfg.angular_hi_deg, models::kAnglesPerFreq,
                               freq_count);
  const bool identity = static_cast<int>(mask.indices.size()) == 87 * freq_count;
  const models::Standardization stats = models::compute_standardization(f_train);

  const fs::path half_dir = fs::path(cfg.out_dir) / "halfplane";
  fs::create_directories(half_dir);

  // Identity masks reuse the production architectures and schedules so the
  // run reproduces the main pipeline exactly.
  models::TrainConfig fnn_tc = cfg.fnn;
  models::TrainConfig inn_tc = cfg.inn;
  std::vector<int> fnn_w, inn_w;
  if (identity) {
    fnn_w = models::fnn_widths(static_cast<int>(mask.indices.size()));
    inn_w = models::inn_trunk_widths(static_cast<int>(mask.indices.size()));
  } else {
    fnn_tc.epochs = cfg.variant_epochs;
    inn_tc.epochs = cfg.variant_epochs;
    fnn_w = models::fnn_halfplane_widths(static_cast<int>(mask.indices.size()));
    inn_w = models::inn_trunk_widths_halfplane(static_cast<int>(mask.indices.size()));
  }

  auto [fnn_half, fnn_hist] =
      models::train_fnn(x_train, f_train, x_val, f_val, fnn_w, mask.indices, stats, fnn_tc);
  save_fnn_model((half_dir / "fnn_half.ckpt").string(), fnn_half, fnn_tc,
                 hash_file(join(cfg.out_dir, artifact::farfields)));

  auto [inn_half, inn_hist] = models::train_inn(f_train, aae.generator, fnn_half, inn_w,
                                                mask.indices, stats, inn_tc);
  save_inn_model((half_dir / "inn_half.ckpt").string(), inn_half, inn_tc,
                 io::parameter_hash(aae.generator), io::parameter_hash(fnn_half.net));

  const std::vector<double> fnn_err = models::evaluate_fnn(fnn_half, x_test, f_test);
  const models::InnEval ev = models::evaluate_inn(inn_half, aae.generator, fnn_half, f_test, x_test);

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };

  HalfplaneResult res;
  res.masked_input_width = static_cast<int>(mask.indices.size());
  res.fnn_rel_err_mean = mean_of(fnn_err);
  res.inn_ssim_mean = mean_of(ev.ssim);
  res.inn_bce_mean = mean_of(ev.bce);
  res.inn_rel_err_mean = mean_of(ev.rel_err);

  // Full-range reference from the main INN checkpoint, when present.
  const std::string full_inn = join(cfg.out_dir, artifact::inn_ckpt);
  if (fs::exists(full_inn)) {
    const models::InnModel inn = load_inn_model(full_inn);
    const models::FnnModel fnn = load_fnn_model(join(cfg.out_dir, artifact::fnn_ckpt));
    const models::InnEval full_ev = models::evaluate_inn(inn, aae.generator, fnn, f_test, x_test);
    res.full_ssim_mean = mean_of(full_ev.ssim);
  }

  write_csv(join(cfg.out_dir, artifact::halfplane_table),
            "masked_width,fnn_rel_err,inn_rel_err,inn_ssim,inn_bce,full_inn_ssim",
            {std::to_string(res.masked_input_width) + "," + fmt(res.fnn_rel_err_mean) + "," +
             fmt(res.inn_rel_err_mean) + "," + fmt(res.inn_ssim_mean) + "," +
             fmt(res.inn_bce_mean) + "," + fmt(res.full_ssim_mean)});
  return res;
}

// ---------------------------------------------------------------------------
// CLI wrappers

namespace {

int guarded(const char* what, const std::function<void()>& fn) {
  try {
    fn();
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s: config error: %s\n", what, e.what());
    return 2;
  } catch (const MissingArtifactError& e) {
    std::fprintf(stderr, "%s: missing dependency: %s\n", what, e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: failure: %s\n", what, e.what());
    return 4;
  }
}

}  // namespace

int cmd_gen(const PipelineConfig& cfg) {
  return guarded("gen", [&] { run_gen(cfg); });
}

int cmd_simulate(const PipelineConfig& cfg) {
  return guarded("simulate", [&] { run_simulate(cfg); });
}

int cmd_train(const std::string& stage, const PipelineConfig& cfg) {
  return guarded(("train " + stage).c_str(), [&] {
    if (stage == "aae")
      run_train_aae(cfg);
    else if (stage == "fnn")
      run_train_fnn(cfg);
    else if (stage == "inn")
      run_train_inn(cfg);
    else
      throw ConfigError("unknown training stage: " + stage);
  });
}

int cmd_eval(const PipelineConfig& cfg) {
  return guarded("eval", [&] { run_eval(cfg); });
}

int cmd_ablate_frequencies(const PipelineConfig& cfg) {
  return guarded("ablate-freq", [&] {
    std::vector<int> ks;
    for (int k = 1; k <= static_cast<int>(cfg.frequencies_hz.size()); ++k) ks.push_back(k);
    run_frequency_ablation(cfg, ks);
  });
}

int cmd_halfplane(const PipelineConfig& cfg) {
  return guarded("halfplane", [&] { run_halfplane(cfg); });
}

int cmd_mie(const MieCliOptions& opts) {
  return guarded("mie", [&] {
    require_dir(opts.out_dir);
    mie::MieProblem problem;
    problem.radius = opts.radius;
    problem.frequency = opts.frequency;
    problem.exterior = materials::water();
    const bool fluid = opts.material == "fluid";
    if (opts.material == "steel")
      problem.interior = materials::steel();
    else if (opts.material == "aluminum")
      problem.interior = materials::aluminum();
    else if (fluid)
      problem.interior = materials::steel_as_fluid();
    else
      throw ConfigError("mie: unknown material '" + opts.material + "'");

    const double k = problem.x3() / problem.radius;
    const int n_max = mie::default_n_max(problem.x3());
    const mie::MieCoefficients coeffs =
        fluid ? mie::fluid_cylinder_coefficients(problem.radius, problem.frequency,
                                                 problem.exterior,
                                                 std::get<FluidMaterial>(problem.interior), n_max)
              : mie::solve_coefficients_cramer(problem, n_max);

    const std::vector<double> angles = scatter::standard_angles();
    const std::vector<double> amps = mie::far_field_from_coefficients(coeffs, k, angles);
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < angles.size(); ++i)
      rows.push_back(fmt(angles[i] * 180.0 / M_PI) + "," + fmt(amps[i]));
    write_csv(join(opts.out_dir, "mie_farfield.csv"), "angle_deg,amplitude", rows);

    rows.clear();
    const double c3 = problem.exterior.sound_speed();
    for (int s = 0; s < opts.ka_steps; ++s) {
      const double ka =
          opts.ka_min + (opts.ka_max - opts.ka_min) * s / std::max(1, opts.ka_steps - 1);
      mie::MieProblem p = problem;
      p.frequency = ka * c3 / (2.0 * M_PI * p.radius);
      const int nm = mie::default_n_max(ka);
      const mie::MieCoefficients cs =
          fluid ? mie::fluid_cylinder_coefficients(p.radius, p.frequency, p.exterior,
                                                   std::get<FluidMaterial>(p.interior), nm)
                : mie::solve_coefficients_cramer(p, nm);
      rows.push_back(fmt(ka) + "," + fmt(mie::scattering_cross_section(cs, ka / p.radius)));
    }
    write_csv(join(opts.out_dir, "mie_scs.csv"), "ka,scs_m", rows);
  });
}

int cmd_invert(const PipelineConfig& cfg, const std::string& farfield_csv, const std::string& mode,
               std::uint64_t sample_seed) {
  return guarded("invert", [&] {
    require_file(farfield_csv, "far-field CSV");
    std::ifstream in(farfield_csv);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        try {
          values.push_back(std::stod(cell));
        } catch (...) {
          // header or label cell
        }
      }
    }
    if (values.size() != static_cast<std::size_t>(models::kFarFieldDim))
      throw ConfigError("invert: expected 435 far-field values, got " +
                        std::to_string(values.size()));

    const models::AaeModel aae = load_aae_model(join(cfg.out_dir, artifact::aae_ckpt));
    const models::InnModel inn = load_inn_model(join(cfg.out_dir, artifact::inn_ckpt));
    const models::InvertMode m =
        mode == "sample" ? models::InvertMode::sample : models::InvertMode::mean;
    const models::Inversion inv = models::invert(inn, aae.generator, values, m, sample_seed);

    std::vector<std::string> rows;
    for (int i = 0; i < 64; ++i) {
      std::string row;
      for (int j = 0; j < 64; ++j) {
        if (j) row += ",";
        row += inv.image_real[static_cast<std::size_t>(i) * 64 + j] >= 0.5f ? "1" : "0";
      }
      rows.push_back(row);
    }
    write_csv(join(cfg.out_dir, "inverted_shape.csv"), "# 64x64 thresholded shape", rows);

    rows.clear();
    for (int i = 0; i < 64; ++i) {
      std::string row;
      for (int j = 0; j < 64; ++j) {
        if (j) row += ",";
        row += fmt(inv.image_real[static_cast<std::size_t>(i) * 64 + j]);
      }
      rows.push_back(row);
    }
    write_csv(join(cfg.out_dir, "inverted_shape_raw.csv"), "# 64x64 generator output", rows);
  });
}

}  // namespace aisr::pipeline
