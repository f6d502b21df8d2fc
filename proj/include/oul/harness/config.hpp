#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oul/core/error.hpp"
#include "oul/fusion/fusion.hpp"
#include "oul/metrics/metrics.hpp"
#include "oul/nn/train.hpp"
#include "oul/nn/unet.hpp"
#include "oul/synthgen/dataset.hpp"

namespace oul::harness {

struct SplitConfig {
  double train_fraction = 0.8;
  std::optional<std::uint64_t> seed;  ///< defaults to the experiment seed
};

/// Everything that determines a synthetic fusion experiment.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  synth::GenParams gen;
  bool gen_seed_explicit = false;
  nn::NetworkConfig network;
  nn::TrainConfig train;
  /// Per-method JSON patches applied on top of `train` (keys as in "train").
  std::map<std::string, nlohmann::json> train_overrides;
  std::vector<synth::ImageVariant> variants{synth::ImageVariant::Unperturbed,
                                            synth::ImageVariant::Perturbed};
  std::vector<fusion::FusionMethod> methods{fusion::kAllMethods.begin(), fusion::kAllMethods.end()};
  SplitConfig split;
  int t_mc = 20;
  metrics::WmeNormalization wme_normalization = metrics::WmeNormalization::DisagreementMass;
  /// Write one entropy PFM/PGM per held-out sample, method and variant.
  bool gallery = true;
  /// Write one checkpoint per method and variant.
  bool checkpoints = true;
};

inline nn::TrainConfig train_config_from_json(const nlohmann::json& j, nn::TrainConfig t) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("epochs", t.epochs);
  get("learning_rate", t.learning_rate);
  get("batch_size", t.batch_size);
  get("adam_beta1", t.adam_beta1);
  get("adam_beta2", t.adam_beta2);
  get("adam_eps", t.adam_eps);
  get("seed", t.seed);
  if (j.contains("fusion")) t.fusion = fusion::parse_method(j.at("fusion").get<std::string>());
  return t;
}

inline nlohmann::json to_json(const nn::TrainConfig& t) {
  return {{"epochs", t.epochs},           {"learning_rate", t.learning_rate},
          {"batch_size", t.batch_size},   {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},   {"adam_eps", t.adam_eps},
          {"seed", t.seed},               {"fusion", std::string(fusion::to_string(t.fusion))}};
}

inline nlohmann::json to_json(const nn::NetworkConfig& n) {
  return {{"depth", n.depth},
          {"base_filters", n.base_filters},
          {"dropout_p", n.dropout_p},
          {"in_channels", n.in_channels},
          {"out_classes", n.out_classes}};
}

inline nn::NetworkConfig network_config_from_json(const nlohmann::json& j, nn::NetworkConfig n) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("depth", n.depth);
  get("base_filters", n.base_filters);
  get("dropout_p", n.dropout_p);
  get("in_channels", n.in_channels);
  get("out_classes", n.out_classes);
  nn::validate(n);
  return n;
}

inline const char* to_string(metrics::WmeNormalization n) {
  return n == metrics::WmeNormalization::DisagreementMass ? "disagreement_mass" : "pixel_count";
}

inline metrics::WmeNormalization parse_wme_normalization(const std::string& s) {
  if (s == "disagreement_mass") return metrics::WmeNormalization::DisagreementMass;
  if (s == "pixel_count") return metrics::WmeNormalization::PixelCount;
  throw ConfigError("unknown wme_normalization '" + s + "' (disagreement_mass|pixel_count)");
}

/// Resolved seeds: the dataset, split, per-model training and MC streams all
/// derive from the experiment seed unless given explicitly.
inline std::uint64_t dataset_seed(const ExperimentConfig& c) {
  return c.gen_seed_explicit ? c.gen.seed : Rng(c.seed).substream("dataset").seed();
}
inline std::uint64_t split_seed(const ExperimentConfig& c) {
  return c.split.seed ? *c.split.seed : Rng(c.seed).substream("split").seed();
}
inline std::uint64_t model_seed(const ExperimentConfig& c, fusion::FusionMethod m,
                                synth::ImageVariant v) {
  return Rng(c.seed)
      .substream("train")
      .substream(fusion::to_string(m))
      .substream(synth::to_string(v))
      .seed();
}

/// Training configuration of one (method, variant) model, overrides applied.
inline nn::TrainConfig resolved_train_config(const ExperimentConfig& c, fusion::FusionMethod m,
                                             synth::ImageVariant v) {
  nn::TrainConfig t = c.train;
  t.seed = model_seed(c, m, v);
  if (auto it = c.train_overrides.find(std::string(fusion::to_string(m)));
      it != c.train_overrides.end())
    t = train_config_from_json(it->second, t);
  t.fusion = m;
  nn::validate(t);
  return t;
}

inline void validate(const ExperimentConfig& c) {
  synth::validate(c.gen);
  nn::validate(c.network);
  nn::validate(c.train);
  if (c.methods.empty()) throw ConfigError("methods must be nonempty");
  if (c.variants.empty()) throw ConfigError("variants must be nonempty");
  if (!(c.split.train_fraction > 0.0 && c.split.train_fraction < 1.0))
    throw ConfigError("split.train_fraction must lie in (0, 1)");
  if (c.t_mc < 1) throw ConfigError("t_mc must be >= 1");
  if (c.gen.image_size % (1 << c.network.depth))
    throw ConfigError("image_size must be divisible by 2^depth");
  for (const auto& [name, patch] : c.train_overrides) fusion::parse_method(name);
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("gen")) {
      c.gen = synth::gen_params_from_json(j.at("gen"), c.gen);
      c.gen_seed_explicit = j.at("gen").contains("seed");
    }
    if (j.contains("network")) c.network = network_config_from_json(j.at("network"), c.network);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
    if (j.contains("train_overrides"))
      for (const auto& [k, v] : j.at("train_overrides").items()) c.train_overrides[k] = v;
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) c.variants.push_back(synth::parse_variant(v.get<std::string>()));
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(fusion::parse_method(m.get<std::string>()));
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (s.contains("train_fraction")) c.split.train_fraction = s.at("train_fraction").get<double>();
      if (s.contains("seed")) c.split.seed = s.at("seed").get<std::uint64_t>();
    }
    if (j.contains("t_mc")) c.t_mc = j.at("t_mc").get<int>();
    if (j.contains("wme_normalization"))
      c.wme_normalization = parse_wme_normalization(j.at("wme_normalization").get<std::string>());
    if (j.contains("gallery")) c.gallery = j.at("gallery").get<bool>();
    if (j.contains("checkpoints")) c.checkpoints = j.at("checkpoints").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  validate(c);
  return c;
}

inline ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

/// Fully resolved configuration (every default and derived seed spelled out).
inline nlohmann::json resolved_json(const ExperimentConfig& c) {
  nlohmann::json methods = nlohmann::json::array(), variants = nlohmann::json::array();
  for (auto m : c.methods) methods.push_back(std::string(fusion::to_string(m)));
  for (auto v : c.variants) variants.push_back(synth::to_string(v));
  synth::GenParams gen = c.gen;
  gen.seed = dataset_seed(c);
  nlohmann::json models = nlohmann::json::object();
  for (auto v : c.variants)
    for (auto m : c.methods)
      models[std::string(fusion::to_string(m)) + "_" + synth::to_string(v)] =
          to_json(resolved_train_config(c, m, v));
  return {{"seed", c.seed},
          {"rng", std::string(Rng::kAlgorithm)},
          {"gen", synth::to_json(gen)},
          {"network", to_json(c.network)},
          {"models", models},
          {"variants", variants},
          {"methods", methods},
          {"split", {{"train_fraction", c.split.train_fraction}, {"seed", split_seed(c)}}},
          {"t_mc", c.t_mc},
          {"wme_normalization", to_string(c.wme_normalization)},
          {"entropy_log_base", 2},
          {"dice_threshold", 0.5}};
}

}  // namespace oul::harness
