// Command-line front end: dataset generation, label fusion, training,
// Monte Carlo prediction, evaluation and the full synthetic experiment.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "oul/oul.hpp"

namespace fs = std::filesystem;
using namespace oul;

namespace {

struct SynthArgs {
  std::string out;
  int count = 100;
  int size = 128;
  int observers = 5;
  std::uint64_t seed = 0;
};

struct FuseArgs {
  std::string data;
  std::string method;
  std::string sample;
  std::string out;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string data;
  std::string variant = "unperturbed";
  std::string fusion = "majority";
  int epochs = 100;
  double lr = 1e-3;
  int batch_size = 10;
  int depth = 2;
  int base_filters = 16;
  double dropout = 0.2;
  std::uint64_t seed = 0;
  std::string out;
};

struct PredictArgs {
  std::string model;
  std::string image;
  int t = 20;
  std::uint64_t seed = 0;
  std::string out_prob;
  std::string out_entropy;
};

struct EvaluateArgs {
  std::string pred_entropy;
  std::string pred_prob;
  std::string data;
  std::string sample;
  std::string fusion = "-";
  std::string variant = "-";
  std::string wme_norm = "disagreement_mass";
  std::string out;
  std::uint64_t seed = 0;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a) {
  synth::GenParams p;
  p.count = a.count;
  p.image_size = a.size;
  p.observers = a.observers;
  p.seed = a.seed;
  const auto manifest = synth::generate_dataset(p, a.out);
  std::cout << "wrote " << a.count << " samples, manifest " << manifest.string() << "\n";
}

void run_fuse(const FuseArgs& a) {
  const auto method = fusion::parse_method(a.method);
  if (method == fusion::FusionMethod::NoFusion)
    throw ConfigError("fuse: nofusion has no fused mask; pick majority|staple|union|intersection");
  const auto manifest = synth::read_manifest(a.data);
  const auto sample = synth::load_sample(manifest, manifest.entry(a.sample));
  if (method == fusion::FusionMethod::Staple) {
    const auto [mask, st] = fusion::staple(sample.observers);
    write_pgm(mask, a.out);
    const nlohmann::json side = {{"p", st.p},
                                 {"q", st.q},
                                 {"prior_f", st.prior_f},
                                 {"iterations", st.iterations},
                                 {"converged", st.converged}};
    fs::path sidecar = a.out;
    sidecar.replace_extension(".json");
    harness::write_text(sidecar, side.dump(2) + "\n");
  } else {
    write_pgm(fusion::fuse(sample.observers, method), a.out);
  }
}

void run_train(const TrainArgs& a) {
  const auto manifest = synth::read_manifest(a.data);
  const auto samples = synth::load_dataset(manifest);
  nn::NetworkConfig ncfg{a.depth, a.base_filters, a.dropout};
  nn::TrainConfig tcfg;
  tcfg.epochs = a.epochs;
  tcfg.learning_rate = a.lr;
  tcfg.batch_size = a.batch_size;
  tcfg.seed = a.seed;
  tcfg.fusion = fusion::parse_method(a.fusion);
  Rng init = Rng(a.seed).substream("init");
  auto net = nn::build_unet(ncfg, init);
  const auto log = nn::train(net, samples, synth::parse_variant(a.variant), tcfg,
                             [](int epoch, double loss) {
                               std::printf("epoch %d loss %.6f\n", epoch, loss);
                               std::fflush(stdout);
                             });
  nn::save_model(net, a.out);
  std::printf("trained %zu samples in %.1f s -> %s\n", samples.size(), log.seconds, a.out.c_str());
}

void run_predict(const PredictArgs& a) {
  auto net = nn::load_model(a.model);
  const auto image = read_pgm(a.image);
  const auto pred = nn::mc_predict(net, image, a.t, Rng(a.seed));
  write_pfm(pred.mean, a.out_prob);
  write_pfm(pred.entropy, a.out_entropy);
}

void run_evaluate(const EvaluateArgs& a) {
  const auto manifest = synth::read_manifest(a.data);
  const auto sample = synth::load_sample(manifest, manifest.entry(a.sample));
  const auto r = metrics::evaluate_maps(read_pfm(a.pred_prob), read_pfm(a.pred_entropy), sample,
                                        harness::parse_wme_normalization(a.wme_norm));
  const std::string csv = harness::per_sample_header() +
                          harness::per_sample_line({a.fusion, a.variant, r});
  harness::write_text(a.out, csv);
}

void run_experiment(const ExperimentArgs& a) {
  auto cfg = harness::read_experiment_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  const auto res = harness::run_experiment(cfg, a.out, &std::cout);
  std::cout << harness::summary_csv(res.summary);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observer-uncertainty toolkit: synthetic data, label fusion, MC dropout U-Net"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic dataset tools");
  synth_cmd->require_subcommand(1);
  auto* gen = synth_cmd->add_subcommand("generate", "Generate a synthetic dataset");
  gen->add_option("--out", sa.out, "Output directory")->required();
  gen->add_option("--count", sa.count, "Number of samples")->capture_default_str();
  gen->add_option("--size", sa.size, "Image side length")->capture_default_str();
  gen->add_option("--observers", sa.observers, "Observers per sample")->capture_default_str();
  gen->add_option("--seed", sa.seed, "Dataset seed")->capture_default_str();

  FuseArgs fa;
  auto* fuse = app.add_subcommand("fuse", "Fuse the observer masks of one sample");
  fuse->add_option("--data", fa.data, "Dataset manifest.json")->required();
  fuse->add_option("--method", fa.method, "majority|staple|union|intersection")->required();
  fuse->add_option("--sample", fa.sample, "Sample id from the manifest")->required();
  fuse->add_option("--out", fa.out, "Output mask (.pgm)")->required();
  fuse->add_option("--seed", fa.seed, "Unused; fusion is deterministic");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a segmenter on a dataset");
  train->add_option("--data", ta.data, "Dataset manifest.json")->required();
  train->add_option("--variant", ta.variant, "unperturbed|perturbed")->capture_default_str();
  train->add_option("--fusion", ta.fusion, "Label fusion method")->capture_default_str();
  train->add_option("--epochs", ta.epochs)->capture_default_str();
  train->add_option("--lr", ta.lr)->capture_default_str();
  train->add_option("--batch-size", ta.batch_size)->capture_default_str();
  train->add_option("--depth", ta.depth)->capture_default_str();
  train->add_option("--base-filters", ta.base_filters)->capture_default_str();
  train->add_option("--dropout", ta.dropout)->capture_default_str();
  train->add_option("--seed", ta.seed)->capture_default_str();
  train->add_option("--out", ta.out, "Checkpoint path (.oulm)")->required();

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Monte Carlo dropout prediction for one image");
  predict->add_option("--model", pa.model)->required();
  predict->add_option("--image", pa.image, "Input image (.pgm)")->required();
  predict->add_option("--t", pa.t, "Number of stochastic passes")->capture_default_str();
  predict->add_option("--seed", pa.seed)->capture_default_str();
  predict->add_option("--out-prob", pa.out_prob, "Mean foreground probability (.pfm)")->required();
  predict->add_option("--out-entropy", pa.out_entropy, "Predictive entropy (.pfm)")->required();

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Score a prediction against a sample");
  evaluate->add_option("--pred-entropy", ea.pred_entropy)->required();
  evaluate->add_option("--pred-prob", ea.pred_prob)->required();
  evaluate->add_option("--data", ea.data, "Dataset manifest.json")->required();
  evaluate->add_option("--sample", ea.sample)->required();
  evaluate->add_option("--fusion", ea.fusion, "Label written to the fusion column");
  evaluate->add_option("--variant", ea.variant, "Label written to the variant column");
  evaluate->add_option("--wme-normalization", ea.wme_norm, "disagreement_mass|pixel_count")
      ->capture_default_str();
  evaluate->add_option("--seed", ea.seed, "Unused; evaluation is deterministic");
  evaluate->add_option("--out", ea.out, "Report CSV")->required();

  ExperimentArgs xa;
  auto* experiment = app.add_subcommand("experiment", "Run an experiment");
  experiment->require_subcommand(1);
  auto* synthetic = experiment->add_subcommand("synthetic", "Synthetic multi-observer experiment");
  synthetic->add_option("--config", xa.config, "Experiment JSON")->required();
  synthetic->add_option("--out", xa.out, "Results directory")->required();
  synthetic->add_option("--seed", xa.seed, "Override the config seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) run_synth(sa);
    if (*fuse) run_fuse(fa);
    if (*train) run_train(ta);
    if (*predict) run_predict(pa);
    if (*evaluate) run_evaluate(ea);
    if (*synthetic) run_experiment(xa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
