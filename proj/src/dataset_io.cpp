#include "aisr/dataset_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "aisr/errors.hpp"
#include "aisr/hash.hpp"
#include "aisr/rng.hpp"

namespace aisr::io {

using nlohmann::json;

namespace {

constexpr char kShardMagic[4] = {'A', 'I', 'S', 'D'};
constexpr std::uint16_t kShardVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::uint32_t payload_crc(const std::string& payload) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

void write_shard(const std::string& path, RecordKind kind, std::uint32_t count,
                 const std::string& payload) {
  std::string out;
  out.append(kShardMagic, 4);
  put_u16(out, kShardVersion);
  put_u16(out, static_cast<std::uint16_t>(kind));
  put_u32(out, count);
  out += payload;
  put_u32(out, payload_crc(payload));
  atomic_write(path, out);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

std::string read_shard(const std::string& path, RecordKind expected_kind, std::uint32_t& count) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16) throw IoError(path + ": truncated shard");
  if (std::memcmp(bytes.data(), kShardMagic, 4) != 0) throw IoError(path + ": bad shard magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint16_t version = get_u16(p + 4);
  if (version != kShardVersion)
    throw IoError(path + ": unknown shard version " + std::to_string(version));
  const std::uint16_t kind = get_u16(p + 6);
  if (kind != static_cast<std::uint16_t>(expected_kind))
    throw IoError(path + ": shard kind mismatch");
  count = get_u32(p + 8);
  const std::size_t payload_len = bytes.size() - 16;
  const std::string payload = bytes.substr(12, payload_len);
  const std::uint32_t stored = get_u32(p + 12 + payload_len);
  if (payload_crc(payload) != stored) throw IoError(path + ": payload CRC mismatch");
  return payload;
}

}  // namespace

void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp + " -> " + path + ": " + ec.message());
}

void save_shapes(const std::string& path, const std::vector<geometry::BinaryImage>& images) {
  std::string payload;
  payload.reserve(images.size() * static_cast<std::size_t>(kImagePixels));
  for (const auto& img : images) {
    if (static_cast<int>(img.pixels.size()) != kImagePixels)
      throw ShapeError("save_shapes: image is not 64x64");
    payload.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  }
  write_shard(path, RecordKind::shapes, static_cast<std::uint32_t>(images.size()), payload);
}

std::vector<geometry::BinaryImage> load_shapes(const std::string& path, double domain_size) {
  std::uint32_t count = 0;
  const std::string payload = read_shard(path, RecordKind::shapes, count);
  if (payload.size() != static_cast<std::size_t>(count) * kImagePixels)
    throw IoError(path + ": shape payload length mismatch");
  std::vector<geometry::BinaryImage> images(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& img = images[i];
    img.n = 64;
    img.domain_size = domain_size;
    img.pixels.resize(kImagePixels);
    std::memcpy(img.pixels.data(), payload.data() + static_cast<std::size_t>(i) * kImagePixels,
                kImagePixels);
    for (const auto px : img.pixels)
      if (px > 1) throw IoError(path + ": non-binary pixel value");
  }
  return images;
}

void save_farfields(const std::string& path, const std::vector<std::vector<float>>& records) {
  std::string payload;
  payload.reserve(records.size() * kFarFieldLen * 4);
  for (const auto& rec : records) {
    if (static_cast<int>(rec.size()) != kFarFieldLen)
      throw ShapeError("save_farfields: record length must be 435");
    for (const float v : rec) put_f32(payload, v);
  }
  write_shard(path, RecordKind::farfields, static_cast<std::uint32_t>(records.size()), payload);
}

std::vector<std::vector<float>> load_farfields(const std::string& path) {
  std::uint32_t count = 0;
  const std::string payload = read_shard(path, RecordKind::farfields, count);
  if (payload.size() != static_cast<std::size_t>(count) * kFarFieldLen * 4)
    throw IoError(path + ": far-field payload length mismatch");
  std::vector<std::vector<float>> records(count, std::vector<float>(kFarFieldLen));
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::uint32_t i = 0; i < count; ++i)
    for (int j = 0; j < kFarFieldLen; ++j)
      records[i][static_cast<std::size_t>(j)] =
          get_f32(p + (static_cast<std::size_t>(i) * kFarFieldLen + static_cast<std::size_t>(j)) * 4);
  return records;
}

// ---------------------------------------------------------------------------

nlohmann::json Checkpoint::meta() { return json::parse(meta_text); }

NetSpec spec_of(const std::string& name, const nn::Mlp<float>& net) {
  NetSpec spec;
  spec.name = name;
  spec.widths.push_back(net.input_dim());
  for (const auto& layer : net.layers) {
    spec.widths.push_back(static_cast<int>(layer.weights.rows()));
    spec.activations.push_back(nn::activation_name(layer.act));
  }
  spec.leaky_slope = net.layers.empty() ? 0.2f : net.layers.front().leaky_slope;
  return spec;
}

nn::Mlp<float> net_from_spec(const NetSpec& spec) {
  if (spec.widths.size() < 2 || spec.activations.size() + 1 != spec.widths.size())
    throw IoError("checkpoint net spec is inconsistent");
  nn::Mlp<float> net;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    nn::DenseLayer<float> layer;
    layer.weights = nn::MatX<float>::Zero(spec.widths[l + 1], spec.widths[l]);
    layer.bias = nn::VecX<float>::Zero(spec.widths[l + 1]);
    layer.act = nn::activation_from_name(spec.activations[l]);
    layer.leaky_slope = spec.leaky_slope;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::size_t expected_parameter_count(const std::vector<int>& widths) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += static_cast<std::size_t>(widths[l + 1]) * static_cast<std::size_t>(widths[l]) +
         static_cast<std::size_t>(widths[l + 1]);
  return n;
}

std::vector<float> flatten_parameters(const nn::Mlp<float>& net) {
  std::vector<float> out;
  out.reserve(net.parameter_count());
  for (const auto& layer : net.layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) out.push_back(layer.weights(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out.push_back(layer.bias(r));
  }
  return out;
}

std::uint64_t parameter_hash(const nn::Mlp<float>& net) {
  const std::vector<float> flat = flatten_parameters(net);
  return fnv1a64(flat.data(), flat.size() * sizeof(float));
}

void save_checkpoint(const std::string& path, const std::string& kind,
                     const std::vector<std::string>& names,
                     const std::vector<const nn::Mlp<float>*>& nets, const json& meta) {
  if (names.size() != nets.size()) throw ShapeError("save_checkpoint: names/nets mismatch");
  json header;
  header["magic"] = "AISC";
  header["version"] = 1;
  header["kind"] = kind;
  json specs = json::array();
  std::size_t param_count = 0;
  for (std::size_t i = 0; i < nets.size(); ++i) {
    const NetSpec spec = spec_of(names[i], *nets[i]);
    json js;
    js["name"] = spec.name;
    js["widths"] = spec.widths;
    js["activations"] = spec.activations;
    js["leaky_slope"] = spec.leaky_slope;
    specs.push_back(js);
    param_count += nets[i]->parameter_count();
  }
  header["nets"] = specs;
  header["parameter_count"] = param_count;
  header["meta"] = meta;

  const std::string header_text = header.dump();
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  for (const auto* net : nets) {
    const std::vector<float> flat = flatten_parameters(*net);
    for (const float v : flat) put_f32(out, v);
  }
  atomic_write(path, out);
}

Checkpoint load_checkpoint(const std::string& path, const std::string& expected_kind) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 4) throw IoError(path + ": truncated checkpoint");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t header_len = get_u32(p);
  if (bytes.size() < 4 + static_cast<std::size_t>(header_len))
    throw IoError(path + ": truncated checkpoint header");
  json header = json::parse(bytes.substr(4, header_len));
  if (header.value("magic", "") != std::string("AISC"))
    throw IoError(path + ": bad checkpoint magic");
  Checkpoint ck;
  ck.kind = header.at("kind").get<std::string>();
  if (!expected_kind.empty() && ck.kind != expected_kind)
    throw IoError(path + ": checkpoint kind '" + ck.kind + "', expected '" + expected_kind + "'");
  ck.meta_text = header.at("meta").dump();

  std::size_t declared = 0;
  for (const auto& js : header.at("nets")) {
    NetSpec spec;
    spec.name = js.at("name").get<std::string>();
    spec.widths = js.at("widths").get<std::vector<int>>();
    spec.activations = js.at("activations").get<std::vector<std::string>>();
    spec.leaky_slope = js.at("leaky_slope").get<float>();
    declared += expected_parameter_count(spec.widths);
    ck.specs.push_back(std::move(spec));
  }
  if (declared != header.at("parameter_count").get<std::size_t>())
    throw IoError(path + ": header parameter count disagrees with declared widths");
  const std::size_t block = bytes.size() - 4 - header_len;
  if (block != declared * 4) throw IoError(path + ": parameter block length mismatch");

  const auto* fblock = reinterpret_cast<const unsigned char*>(bytes.data()) + 4 + header_len;
  std::size_t offset = 0;
  for (const auto& spec : ck.specs) {
    nn::Mlp<float> net = net_from_spec(spec);
    for (auto& layer : net.layers) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
          layer.weights(r, c) = get_f32(fblock + offset * 4);
          ++offset;
        }
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
        layer.bias(r) = get_f32(fblock + offset * 4);
        ++offset;
      }
    }
    ck.nets.push_back(std::move(net));
  }
  return ck;
}

// ---------------------------------------------------------------------------

Manifest build_manifest(int record_count, std::uint64_t split_seed,
                        const std::array<double, 3>& ratios) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("build_manifest: split ratios must sum to 1");
  Manifest m;
  m.split_seed = split_seed;
  m.ratios = ratios;
  std::vector<int> idx(static_cast<std::size_t>(record_count));
  for (int i = 0; i < record_count; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(Rng::derive(split_seed, 0xdead));
  rng.shuffle(idx);
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * record_count));
  const auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * record_count));
  m.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  m.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
               idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  m.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
  json js;
  js["dataset_id"] = m.dataset_id;
  js["shapes_shard"] = m.shapes_shard;
  js["farfields_shard"] = m.farfields_shard;
  js["generator_seed"] = m.generator_seed;
  js["split_seed"] = m.split_seed;
  js["ratios"] = m.ratios;
  js["train"] = m.train;
  js["val"] = m.val;
  js["test"] = m.test;
  js["solver_settings"] = json::parse(m.solver_settings);
  atomic_write(path, js.dump(2) + "\n");
}

Manifest load_manifest(const std::string& path) {
  json js = json::parse(read_file(path));
  Manifest m;
  m.dataset_id = js.at("dataset_id").get<std::string>();
  m.shapes_shard = js.at("shapes_shard").get<std::string>();
  m.farfields_shard = js.at("farfields_shard").get<std::string>();
  m.generator_seed = js.at("generator_seed").get<std::uint64_t>();
  m.split_seed = js.at("split_seed").get<std::uint64_t>();
  m.ratios = js.at("ratios").get<std::array<double, 3>>();
  m.train = js.at("train").get<std::vector<int>>();
  m.val = js.at("val").get<std::vector<int>>();
  m.test = js.at("test").get<std::vector<int>>();
  m.solver_settings = js.at("solver_settings").dump();
  return m;
}

std::uint64_t hash_file_impl(const std::string& path) {
  const std::string bytes = read_file(path);
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace aisr::io

namespace aisr {
std::uint64_t hash_file(const std::string& path) { return io::hash_file_impl(path); }
}  // namespace aisr
