#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "oul/core/error.hpp"
#include "oul/core/pfm.hpp"
#include "oul/core/pgm.hpp"
#include "oul/harness/config.hpp"
#include "oul/harness/split.hpp"
#include "oul/metrics/metrics.hpp"
#include "oul/nn/checkpoint.hpp"
#include "oul/nn/mc.hpp"
#include "oul/nn/train.hpp"
#include "oul/synthgen/dataset.hpp"

namespace oul::harness {

struct SampleRow {
  std::string method;
  std::string variant;
  metrics::MetricsReport report;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation (n - 1), 0 for n < 2
  double min = 0.0;
  double max = 0.0;
};

inline Stat describe(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

/// Linear-interpolated quantile of sorted data (type 7).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct SummaryRow {
  std::string method;
  std::string variant;
  std::size_t n = 0;
  Stat wme, me, dice;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;

  const SummaryRow& at(fusion::FusionMethod m, synth::ImageVariant v) const {
    for (const auto& r : rows)
      if (r.method == fusion::to_string(m) && r.variant == synth::to_string(v)) return r;
    throw ConfigError("no summary row for " + std::string(fusion::to_string(m)) + "/" +
                      synth::to_string(v));
  }
};

struct ModelRun {
  std::string method;
  std::string variant;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
  double final_loss = 0.0;
  std::vector<std::string> train_ids;
};

struct ExperimentResult {
  SummaryTable summary;
  std::vector<SampleRow> per_sample;
  std::vector<ModelRun> models;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

inline std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline SummaryTable summarize(const std::vector<SampleRow>& rows) {
  SummaryTable t;
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& r : rows)
    if (std::find(keys.begin(), keys.end(), std::pair{r.method, r.variant}) == keys.end())
      keys.emplace_back(r.method, r.variant);
  for (const auto& [m, v] : keys) {
    std::vector<double> w, e, d;
    for (const auto& r : rows)
      if (r.method == m && r.variant == v) {
        w.push_back(r.report.wme);
        e.push_back(r.report.me);
        d.push_back(r.report.dice);
      }
    t.rows.push_back({m, v, w.size(), describe(w), describe(e), describe(d)});
  }
  return t;
}

inline std::string summary_csv(const SummaryTable& t) {
  std::string s = "method,variant,n,wme_mean,wme_std,me_mean,me_std,dice_mean,dice_std\n";
  for (const auto& r : t.rows)
    s += r.method + "," + r.variant + "," + std::to_string(r.n) + "," + fmt6(r.wme.mean) + "," +
         fmt6(r.wme.std) + "," + fmt6(r.me.mean) + "," + fmt6(r.me.std) + "," +
         fmt6(r.dice.mean) + "," + fmt6(r.dice.std) + "\n";
  return s;
}

inline std::string per_sample_header() {
  return "sample_id,fusion,variant,wme,me,dice,n_pixels,disagreement_mass\n";
}

inline std::string per_sample_line(const SampleRow& r) {
  return r.report.sample_id + "," + r.method + "," + r.variant + "," + fmt6(r.report.wme) + "," +
         fmt6(r.report.me) + "," + fmt6(r.report.dice) + "," + std::to_string(r.report.n_pixels) +
         "," + fmt6(r.report.disagreement_mass) + "\n";
}

inline std::string per_sample_csv(const std::vector<SampleRow>& rows) {
  std::string s = per_sample_header();
  for (const auto& r : rows) s += per_sample_line(r);
  return s;
}

/// Five-number WME summary per (method, variant), the data behind a boxplot.
inline std::string boxplot_csv(const std::vector<SampleRow>& rows, const SummaryTable& t) {
  std::string s = "method,variant,metric,min,q1,median,q3,max\n";
  for (const auto& sr : t.rows) {
    std::vector<double> w;
    for (const auto& r : rows)
      if (r.method == sr.method && r.variant == sr.variant) w.push_back(r.report.wme);
    s += sr.method + "," + sr.variant + ",wme," + fmt6(quantile(w, 0.0)) + "," +
         fmt6(quantile(w, 0.25)) + "," + fmt6(quantile(w, 0.5)) + "," + fmt6(quantile(w, 0.75)) +
         "," + fmt6(quantile(w, 1.0)) + "\n";
  }
  return s;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << s;
  if (!out) throw IoError("write failed: " + p.string());
}

/// Entropy map as 8-bit grayscale, [0, 1] mapped linearly onto [0, 255].
inline GrayImage entropy_visualization(const ProbMap& h) {
  GrayImage g(h.width(), h.height());
  for (std::size_t i = 0; i < h.size(); ++i) g[i] = 255.0 * static_cast<double>(h[i]);
  return g;
}

/// Reproduces the fusion-method comparison: generate the dataset, split it,
/// then train, Monte Carlo predict and evaluate one model per method and image
/// variant. Outputs in `out_dir`:
///
///   data/                     dataset rasters and manifest.json
///   models/<m>_<v>.oulm       final-epoch checkpoints
///   logs/<m>_<v>.csv          per-epoch training loss
///   gallery/<m>_<v>/<id>_entropy.{pfm,pgm}, <id>_prob.pfm
///   per_sample.csv, summary.csv, boxplot.csv, provenance.json, timing.json
///
/// A file named INCOMPLETE exists in `out_dir` until every stage succeeded.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out_dir,
                                       std::ostream* progress = nullptr) {
  namespace fs = std::filesystem;
  validate(cfg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const fs::path marker = out_dir / "INCOMPLETE";
  write_text(marker, "run in progress or failed\n");
  for (const char* stale : {"summary.csv", "per_sample.csv", "boxplot.csv"}) fs::remove(out_dir / stale, ec);

  std::string stage = "generate";
  std::string current_sample;
  auto say = [&](const std::string& s) {
    if (progress) *progress << s << std::endl;
  };
  ExperimentResult result;
  try {
    synth::GenParams gen = cfg.gen;
    gen.seed = dataset_seed(cfg);
    say("generating " + std::to_string(gen.count) + " samples (" + std::to_string(gen.image_size) +
        "x" + std::to_string(gen.image_size) + ")");
    const auto manifest_path = synth::generate_dataset(gen, out_dir / "data");
    stage = "load";
    const auto manifest = synth::read_manifest(manifest_path);
    const auto samples = synth::load_dataset(manifest);

    stage = "split";
    std::vector<std::string> ids;
    for (const auto& s : samples) ids.push_back(s.id);
    std::tie(result.train_ids, result.test_ids) =
        train_test_split(ids, cfg.split.train_fraction, split_seed(cfg));
    const std::set<std::string> train_set(result.train_ids.begin(), result.train_ids.end());
    std::vector<synth::SyntheticSample> train_samples, test_samples;
    for (const auto& s : samples) (train_set.count(s.id) ? train_samples : test_samples).push_back(s);
    if (train_samples.empty() || test_samples.empty())
      throw ConfigError("split leaves an empty train or test set");

    fs::create_directories(out_dir / "models");
    fs::create_directories(out_dir / "logs");
    const Rng mc_root = Rng(cfg.seed).substream("mc");
    for (auto variant : cfg.variants) {
      for (auto method : cfg.methods) {
        const std::string tag = std::string(fusion::to_string(method)) + "_" + synth::to_string(variant);
        const auto tcfg = resolved_train_config(cfg, method, variant);
        stage = "train " + tag;
        current_sample.clear();
        Rng init = Rng(tcfg.seed).substream("init");
        auto net = nn::build_unet(cfg.network, init);
        say("training " + tag + " (" + std::to_string(tcfg.epochs) + " epochs, " +
            std::to_string(train_samples.size()) + " samples)");
        const auto log = nn::train(net, train_samples, variant, tcfg);
        ModelRun run{std::string(fusion::to_string(method)), synth::to_string(variant), log.seconds,
                     0.0, log.epoch_loss.back(), log.sample_ids};
        std::string loss_csv = "epoch,loss\n";
        for (std::size_t e = 0; e < log.epoch_loss.size(); ++e)
          loss_csv += std::to_string(e + 1) + "," + fmt6(log.epoch_loss[e]) + "\n";
        write_text(out_dir / "logs" / (tag + ".csv"), loss_csv);
        if (cfg.checkpoints) nn::save_model(net, out_dir / "models" / (tag + ".oulm"));

        stage = "predict " + tag;
        const auto t0 = std::chrono::steady_clock::now();
        const fs::path gallery = out_dir / "gallery" / tag;
        if (cfg.gallery) fs::create_directories(gallery);
        for (const auto& s : test_samples) {
          current_sample = s.id;
          const auto pred = nn::mc_predict(net, synth::image_of(s, variant), cfg.t_mc,
                                           mc_root.substream(s.id));
          result.per_sample.push_back({run.method, run.variant,
                                       metrics::evaluate_sample(pred, s, cfg.wme_normalization)});
          if (cfg.gallery) {
            write_pfm(pred.entropy, gallery / (s.id + "_entropy.pfm"));
            write_pgm(entropy_visualization(pred.entropy), gallery / (s.id + "_entropy.pgm"));
            write_pfm(pred.mean, gallery / (s.id + "_prob.pfm"));
          }
        }
        current_sample.clear();
        run.predict_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        say("  " + tag + ": train " + fmt6(run.train_seconds) + " s, final loss " +
            fmt6(run.final_loss));
        result.models.push_back(std::move(run));
      }
    }

    stage = "report";
    result.summary = summarize(result.per_sample);
    write_text(out_dir / "per_sample.csv", per_sample_csv(result.per_sample));
    write_text(out_dir / "summary.csv", summary_csv(result.summary));
    write_text(out_dir / "boxplot.csv", boxplot_csv(result.per_sample, result.summary));
    nlohmann::json prov = resolved_json(cfg);
    prov["split"]["train_ids"] = result.train_ids;
    prov["split"]["test_ids"] = result.test_ids;
    prov["notes"] = {
        "WME divides by the disagreement mass sum(Hhat) unless wme_normalization=pixel_count",
        "ME averages predictive entropy over the whole image",
        "Dice thresholds the MC mean foreground probability at 0.5"};
    write_text(out_dir / "provenance.json", prov.dump(2) + "\n");
    nlohmann::json timing = nlohmann::json::array();
    for (const auto& m : result.models)
      timing.push_back({{"model", m.method + "_" + m.variant},
                        {"train_seconds", m.train_seconds},
                        {"predict_seconds", m.predict_seconds}});
    write_text(out_dir / "timing.json", timing.dump(2) + "\n");
  } catch (const Error& e) {
    std::string where = "stage '" + stage + "'";
    if (!current_sample.empty()) where += ", sample " + current_sample;
    write_text(marker, "failed in " + where + ": " + e.what() + "\n");
    throw Error("experiment failed in " + where + ": " + e.what());
  }
  fs::remove(marker, ec);
  return result;
}

}  // namespace oul::harness
