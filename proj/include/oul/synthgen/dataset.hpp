#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oul/core/error.hpp"
#include "oul/core/pgm.hpp"
#include "oul/core/raster.hpp"
#include "oul/core/rng.hpp"
#include "oul/synthgen/params.hpp"
#include "oul/synthgen/render.hpp"
#include "oul/synthgen/shape.hpp"

namespace oul::synth {

struct SyntheticSample {
  std::string id;
  BinaryMask gt;
  std::vector<BinaryMask> observers;
  GrayImage image_unperturbed;
  GrayImage image_perturbed;
};

enum class ImageVariant { Unperturbed, Perturbed };

inline const char* to_string(ImageVariant v) {
  return v == ImageVariant::Unperturbed ? "unperturbed" : "perturbed";
}

inline ImageVariant parse_variant(const std::string& s) {
  if (s == "unperturbed") return ImageVariant::Unperturbed;
  if (s == "perturbed") return ImageVariant::Perturbed;
  throw ConfigError("unknown image variant '" + s + "' (expected unperturbed|perturbed)");
}

inline const GrayImage& image_of(const SyntheticSample& s, ImageVariant v) {
  return v == ImageVariant::Unperturbed ? s.image_unperturbed : s.image_perturbed;
}

inline std::string sample_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%03d", index);
  return buf;
}

/// Generates sample `index` from its own substream of the dataset seed, so a
/// sample's bytes do not depend on which other samples are generated.
inline SyntheticSample generate_sample(const GenParams& params, int index) {
  validate(params);
  const Rng root(params.seed);
  const Rng stream = root.substream("sample", static_cast<std::uint64_t>(index));
  SyntheticSample s;
  s.id = sample_id(index);
  try {
    Rng gt_rng = stream.substream("gt");
    auto [spec, gt] = generate_gt(gt_rng, params);
    Rng obs_rng = stream.substream("observers");
    s.observers = generate_observers(spec, obs_rng, params);
    s.gt = std::move(gt);
    Rng u_rng = stream.substream("unperturbed");
    s.image_unperturbed = render_unperturbed(s.gt, u_rng, params);
    Rng p_rng = stream.substream("perturbed");
    s.image_perturbed = render_perturbed(s.gt, s.observers, p_rng, params);
  } catch (const GenerationError& e) {
    throw GenerationError("sample " + s.id + ": " + e.what());
  }
  return s;
}

inline std::vector<SyntheticSample> generate_samples(const GenParams& params) {
  std::vector<SyntheticSample> out;
  out.reserve(static_cast<std::size_t>(params.count));
  for (int i = 0; i < params.count; ++i) out.push_back(generate_sample(params, i));
  return out;
}

inline nlohmann::json to_json(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }

inline Range range_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("range must be a two-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json to_json(const GenParams& p) {
  return {{"image_size", p.image_size},
          {"count", p.count},
          {"observers", p.observers},
          {"gt_angle_jitter", p.gt_angle_jitter},
          {"gt_radius_range", to_json(p.gt_radius_range)},
          {"obs_angle_jitter", p.obs_angle_jitter},
          {"obs_radius_jitter", p.obs_radius_jitter},
          {"max_value_range", to_json(p.max_value_range)},
          {"blur_sigma_range", to_json(p.blur_sigma_range)},
          {"noise_factor", p.noise_factor},
          {"obs_intensity_range", to_json(p.obs_intensity_range)},
          {"decay_range", to_json(p.decay_range)},
          {"seed", p.seed}};
}

/// Reads parameters from JSON; absent keys keep the values in `base`.
inline GenParams gen_params_from_json(const nlohmann::json& j, GenParams base = {}) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  auto get_range = [&](const char* key, Range& field) {
    if (j.contains(key)) field = range_from_json(j.at(key));
  };
  get("image_size", base.image_size);
  get("count", base.count);
  get("observers", base.observers);
  get("gt_angle_jitter", base.gt_angle_jitter);
  get_range("gt_radius_range", base.gt_radius_range);
  get("obs_angle_jitter", base.obs_angle_jitter);
  get("obs_radius_jitter", base.obs_radius_jitter);
  get_range("max_value_range", base.max_value_range);
  get_range("blur_sigma_range", base.blur_sigma_range);
  get("noise_factor", base.noise_factor);
  get_range("obs_intensity_range", base.obs_intensity_range);
  get_range("decay_range", base.decay_range);
  get("seed", base.seed);
  validate(base);
  return base;
}

struct ManifestEntry {
  std::string id;
  std::string gt;
  std::vector<std::string> observers;
  std::string unperturbed;
  std::string perturbed;
};

/// Writes the dataset as PGM rasters plus manifest.json into `dir`.
/// Returns the manifest path.
inline std::filesystem::path write_dataset(const std::vector<SyntheticSample>& samples,
                                           const GenParams& params,
                                           const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& s : samples) {
    nlohmann::json e;
    e["id"] = s.id;
    e["gt"] = s.id + "_gt.pgm";
    write_pgm(s.gt, dir / e["gt"].get<std::string>());
    nlohmann::json obs = nlohmann::json::array();
    for (std::size_t k = 0; k < s.observers.size(); ++k) {
      const std::string name = s.id + "_obs" + std::to_string(k) + ".pgm";
      write_pgm(s.observers[k], dir / name);
      obs.push_back(name);
    }
    e["observers"] = obs;
    e["unperturbed"] = s.id + "_unperturbed.pgm";
    e["perturbed"] = s.id + "_perturbed.pgm";
    write_pgm(s.image_unperturbed, dir / e["unperturbed"].get<std::string>());
    write_pgm(s.image_perturbed, dir / e["perturbed"].get<std::string>());
    entries.push_back(std::move(e));
  }
  nlohmann::json manifest = {{"seed", params.seed},
                             {"rng", std::string(Rng::kAlgorithm)},
                             {"params", to_json(params)},
                             {"samples", entries}};
  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
  return path;
}

/// Generates `params.count` samples and writes them to `dir`.
inline std::filesystem::path generate_dataset(const GenParams& params,
                                              const std::filesystem::path& dir) {
  return write_dataset(generate_samples(params), params, dir);
}

struct Manifest {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  GenParams params;
  std::vector<ManifestEntry> entries;

  const ManifestEntry& entry(const std::string& id) const {
    for (const auto& e : entries)
      if (e.id == id) return e;
    throw ConfigError("sample id '" + id + "' not found in manifest");
  }
};

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  Manifest m;
  m.root = path.parent_path();
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.params = gen_params_from_json(j.at("params"));
    for (const auto& e : j.at("samples")) {
      ManifestEntry me;
      me.id = e.at("id").get<std::string>();
      me.gt = e.at("gt").get<std::string>();
      me.observers = e.at("observers").get<std::vector<std::string>>();
      me.unperturbed = e.at("unperturbed").get<std::string>();
      me.perturbed = e.at("perturbed").get<std::string>();
      m.entries.push_back(std::move(me));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

inline SyntheticSample load_sample(const Manifest& m, const ManifestEntry& e) {
  SyntheticSample s;
  s.id = e.id;
  s.gt = read_mask(m.root / e.gt);
  for (const auto& o : e.observers) s.observers.push_back(read_mask(m.root / o));
  s.image_unperturbed = read_pgm(m.root / e.unperturbed);
  s.image_perturbed = read_pgm(m.root / e.perturbed);
  for (const auto& o : s.observers) require_same_shape(s.gt, o, "sample " + s.id);
  require_same_shape(s.gt, s.image_unperturbed, "sample " + s.id);
  require_same_shape(s.gt, s.image_perturbed, "sample " + s.id);
  return s;
}

inline std::vector<SyntheticSample> load_dataset(const Manifest& m) {
  std::vector<SyntheticSample> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(load_sample(m, e));
  return out;
}

}  // namespace oul::synth
