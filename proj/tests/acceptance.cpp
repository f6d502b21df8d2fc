// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.
//
//   oul_acceptance [--work DIR] [--only 4,5,6,7]
//
// Criteria 1-3 and 8 train 10 models per experiment seed (64x64, 100 samples,
// 100 epochs, T=20) and take hours single-threaded; 4-7 take about a minute.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layer_grad_checks.hpp"
#include "metric_properties.hpp"
#include "oracles/staple_oracle.hpp"
#include "oul/oul.hpp"

namespace fs = std::filesystem;
using namespace oul;

namespace {

// Seeds of the three independent experiment repetitions; the first is the
// primary seed for the single-run criteria.
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

// Dataset mean of the per-sample mean pairwise observer Dice, 64x64 images:
// mean 0.90803, sd 0.00208 over 200 datasets of 100 samples
// (tests/oracles/observer_dice_interval.cpp). Interval is mean +/- 4 sd.
constexpr double kPairwiseDiceLo = 0.8997;
constexpr double kPairwiseDiceHi = 0.9164;

constexpr double kModelBudgetSeconds = 30 * 60;

struct Verdict {
  int id;
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void say(const std::string& s) {
  std::printf("%s\n", s.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------- criterion 4

BinaryMask mask_from_bits(const std::vector<int>& bits) {
  BinaryMask m(static_cast<int>(bits.size()), 1);
  for (std::size_t i = 0; i < bits.size(); ++i) m[i] = static_cast<std::uint8_t>(bits[i]);
  return m;
}

Verdict staple_correctness() {
  const auto t0 = Clock::now();
  Rng rng(404);
  int instances = 0, mismatches = 0;
  double worst = 0;
  while (instances < 200) {
    const int pixels = 1 + static_cast<int>(rng.below(8));
    const int raters = 2 + static_cast<int>(rng.below(3));
    std::vector<std::vector<int>> d(static_cast<std::size_t>(raters));
    int fg = 0;
    const double density = rng.uniform();
    for (auto& row : d)
      for (int i = 0; i < pixels; ++i) {
        row.push_back(rng.uniform() < density ? 1 : 0);
        fg += row.back();
      }
    if (fg == 0 || fg == pixels * raters) continue;  // outside STAPLE's precondition
    std::vector<BinaryMask> masks;
    for (const auto& row : d) masks.push_back(mask_from_bits(row));
    const auto [mask, st] = fusion::staple(masks);
    const auto ref = oracle::staple(d);
    bool ok = st.iterations == ref.iterations && st.converged == ref.converged;
    for (int i = 0; i < pixels; ++i) ok = ok && mask[static_cast<std::size_t>(i)] == ref.seg[i];
    for (int j = 0; j < raters; ++j) {
      worst = std::max({worst, std::abs(st.p[j] - ref.p[j]), std::abs(st.q[j] - ref.q[j])});
      ok = ok && std::abs(st.p[j] - ref.p[j]) <= 1e-9 && std::abs(st.q[j] - ref.q[j]) <= 1e-9;
    }
    mismatches += !ok;
    ++instances;
  }
  // Unanimity fixed point.
  const std::vector<BinaryMask> same(4, mask_from_bits({0, 1, 1, 0, 1, 0, 0, 1}));
  const auto [u_mask, u_st] = fusion::staple(same);
  bool unanimity = u_mask == same[0];
  for (std::size_t j = 0; j < same.size(); ++j)
    unanimity = unanimity && u_st.p[j] >= 1 - 1e-5 && u_st.q[j] >= 1 - 1e-5;
  const double secs = since(t0);
  const bool pass = mismatches == 0 && unanimity && secs <= 60;
  return {4, pass,
          std::to_string(instances) + " instances, " + std::to_string(mismatches) +
              " mismatches, max |dp|,|dq| " + fmt("%.2e", worst) + ", unanimity " +
              (unanimity ? "ok" : "broken") + ", " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------- criterion 5

Verdict gradient_correctness() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::ostringstream detail;
  for (const auto& [name, err] : test::layer_gradient_errors(505)) {
    say("  grad " + name + ": max rel error " + fmt("%.3e", err));
    pass = pass && err < 1e-4;
  }
  const auto res = test::toy_unet_grad_check(506);
  say("  grad toy U-Net (depth 1, 4 filters): max rel error " + fmt("%.3e", res.max_rel_error) +
      " over " + std::to_string(res.checked) + " parameters (" + std::to_string(res.skipped) +
      " skipped at ReLU/pool kinks)");
  pass = pass && res.max_rel_error < 1e-4 && res.checked >= 200;
  const double secs = since(t0);
  pass = pass && secs <= 120;
  detail << "every layer type and toy U-Net below 1e-4, " << fmt("%.2f", secs) << " s";
  return {5, pass, pass ? detail.str() : "see per-layer lines above"};
}

// ---------------------------------------------------------------- criterion 6

Verdict metric_laws() {
  bool pass = true;
  std::string detail;
  for (const auto& r : test::run_metric_properties(1000, 606)) {
    pass = pass && r.failures == 0 && r.cases >= 1000;
    if (!detail.empty()) detail += "; ";
    detail += r.name + " " + std::to_string(r.cases - r.failures) + "/" + std::to_string(r.cases);
  }
  return {6, pass, detail};
}

// ---------------------------------------------------------------- criterion 7

harness::ExperimentConfig experiment_config(std::uint64_t seed) {
  harness::ExperimentConfig c;
  c.seed = seed;
  c.gen.image_size = 64;
  c.gen.count = 100;
  c.methods.assign(fusion::kAllMethods.begin(), fusion::kAllMethods.end());
  c.variants = {synth::ImageVariant::Unperturbed, synth::ImageVariant::Perturbed};
  return c;
}

Verdict generator_statistics() {
  const auto cfg = experiment_config(kSeeds[0]);
  synth::GenParams gen = cfg.gen;
  gen.seed = harness::dataset_seed(cfg);
  const double limit = gen.center() - gen.base_radius() / 2.0;
  int violations = 0;
  double dice_sum = 0;
  for (int i = 0; i < gen.count; ++i) {
    const auto s = synth::generate_sample(gen, i);
    const auto hhat = metrics::expert_entropy(s.observers);
    for (int y = 0; y < hhat.height(); ++y)
      for (int x = 0; x < hhat.width() && x + 0.5 < limit; ++x)
        if (hhat(x, y) != 0.0f) {
          ++violations;
          x = hhat.width();
          y = hhat.height();
        }
    double pair = 0;
    int n = 0;
    for (std::size_t a = 0; a < s.observers.size(); ++a)
      for (std::size_t b = a + 1; b < s.observers.size(); ++b, ++n)
        pair += metrics::dice(s.observers[a], s.observers[b]);
    dice_sum += pair / n;
  }
  const double mean_dice = dice_sum / gen.count;
  const bool in_band = mean_dice >= kPairwiseDiceLo && mean_dice <= kPairwiseDiceHi;
  return {7, violations == 0 && in_band,
          "locality violations " + std::to_string(violations) + "/" + std::to_string(gen.count) +
              " samples; mean pairwise observer Dice " + fmt("%.5f", mean_dice) + " in [" +
              fmt("%.4f", kPairwiseDiceLo) + ", " + fmt("%.4f", kPairwiseDiceHi) + "]" +
              (in_band ? "" : " NO")};
}

// ------------------------------------------------------------ criteria 1-3, 8

struct Means {
  double wme = 0, me = 0, dice = 0;
};

using MeanTable = std::map<std::pair<std::string, std::string>, Means>;

MeanTable means_of(const harness::ExperimentResult& r) {
  MeanTable t;
  for (const auto& row : r.summary.rows)
    t[{row.method, row.variant}] = {row.wme.mean, row.me.mean, row.dice.mean};
  return t;
}

bool ordering_holds(const MeanTable& t, const std::string& v, std::string& why) {
  auto w = [&](const char* m) { return t.at({m, v}).wme; };
  const double nf = w("nofusion"), mv = w("majority"), st = w("staple"), un = w("union"),
               in = w("intersection");
  why = v + ": WME nofusion " + fmt("%.4f", nf) + ", majority " + fmt("%.4f", mv) + ", staple " +
        fmt("%.4f", st) + ", union " + fmt("%.4f", un) + ", intersection " + fmt("%.4f", in);
  return nf > mv && nf > st && std::min(mv, st) > std::max(un, in);
}

bool dice_parity(const MeanTable& t, const std::string& v, std::string& why) {
  auto d = [&](const char* m) { return t.at({m, v}).dice; };
  const double floor = v == "unperturbed" ? 0.90 : 0.85;
  const double nf = d("nofusion"), mv = d("majority"), un = d("union"), in = d("intersection");
  why = v + ": Dice nofusion " + fmt("%.4f", nf) + ", majority " + fmt("%.4f", mv) + ", staple " +
        fmt("%.4f", d("staple")) + ", union " + fmt("%.4f", un) + ", intersection " +
        fmt("%.4f", in);
  return std::abs(nf - mv) <= 0.03 && nf >= floor && mv >= floor && un <= mv - 0.03 &&
         in <= mv - 0.03;
}

bool me_ordering(const MeanTable& t, const std::string& v, std::string& why) {
  const double nf = t.at({"nofusion", v}).me, mv = t.at({"majority", v}).me;
  why = v + ": ME nofusion " + fmt("%.4f", nf) + ", majority " + fmt("%.4f", mv);
  return nf > mv;
}

harness::ExperimentResult run_seed(std::uint64_t seed, const fs::path& dir, double& max_model_s) {
  say("experiment seed " + std::to_string(seed) + " -> " + dir.string());
  const auto res = harness::run_experiment(experiment_config(seed), dir);
  for (const auto& m : res.models) {
    say("  model " + m.method + "_" + m.variant + ": train " + fmt("%.1f", m.train_seconds) +
        " s, predict " + fmt("%.1f", m.predict_seconds) + " s, final loss " +
        fmt("%.4f", m.final_loss));
    max_model_s = std::max(max_model_s, m.train_seconds + m.predict_seconds);
  }
  say(harness::summary_csv(res.summary));
  return res;
}

std::vector<Verdict> experiment_criteria(const fs::path& work, const std::set<int>& wanted) {
  std::vector<Verdict> out;
  const std::vector<std::string> variants = {"unperturbed", "perturbed"};
  double max_model_s = 0;
  std::vector<MeanTable> tables;
  int ordering_passes = 0, ordering_runs = 0;
  std::string ordering_detail;
  for (std::uint64_t seed : kSeeds) {
    const auto res = run_seed(seed, work / ("seed" + std::to_string(seed)), max_model_s);
    tables.push_back(means_of(res));
    bool ok = true;
    for (const auto& v : variants) {
      std::string why;
      const bool holds = ordering_holds(tables.back(), v, why);
      say("  seed " + std::to_string(seed) + " ordering " + (holds ? "holds" : "fails") + ": " + why);
      ok = ok && holds;
    }
    ++ordering_runs;
    ordering_passes += ok;
    ordering_detail += "seed " + std::to_string(seed) + (ok ? " holds; " : " fails; ");
    // Two of three seeds decide the criterion; the third run only matters
    // when the first two disagree.
    if (!wanted.count(1) || ordering_passes == 2 || ordering_runs - ordering_passes == 2) break;
  }
  const bool budget = max_model_s <= kModelBudgetSeconds;
  if (wanted.count(1))
    out.push_back({1, ordering_passes >= 2 && budget,
                   ordering_detail + "slowest model " + fmt("%.0f", max_model_s) + " s (budget " +
                       fmt("%.0f", kModelBudgetSeconds) + " s)"});

  const MeanTable& primary = tables.front();
  if (wanted.count(2)) {
    bool pass = true;
    std::string detail;
    for (const auto& v : variants) {
      std::string why;
      const bool ok = dice_parity(primary, v, why);
      pass = pass && ok;
      detail += why + (ok ? " ok; " : " FAILS; ");
    }
    out.push_back({2, pass, "seed " + std::to_string(kSeeds[0]) + " " + detail});
  }
  if (wanted.count(3)) {
    bool pass = true;
    std::string detail;
    for (const auto& v : variants) {
      std::string why;
      const bool ok = me_ordering(primary, v, why);
      pass = pass && ok;
      detail += why + (ok ? " ok; " : " FAILS; ");
    }
    out.push_back({3, pass, "seed " + std::to_string(kSeeds[0]) + " " + detail});
  }
  if (wanted.count(8)) {
    const fs::path first = work / ("seed" + std::to_string(kSeeds[0]));
    const fs::path again = work / ("seed" + std::to_string(kSeeds[0]) + "_rerun");
    double ignored = 0;
    run_seed(kSeeds[0], again, ignored);
    const auto a = oul::detail::read_file_bytes(first / "summary.csv");
    const auto b = oul::detail::read_file_bytes(again / "summary.csv");
    out.push_back({8, a == b,
                   "summary.csv " + std::string(a == b ? "byte-identical" : "DIFFERS") +
                       " across two runs of seed " + std::to_string(kSeeds[0]) + " (" +
                       std::to_string(a.size()) + " bytes)"});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory for experiment outputs")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  std::set<int> wanted(only.begin(), only.end());
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8};

  std::vector<Verdict> verdicts;
  auto guarded = [&](int id, auto&& fn) {
    if (!wanted.count(id)) return;
    try {
      verdicts.push_back(fn());
    } catch (const std::exception& e) {
      verdicts.push_back({id, false, std::string("error: ") + e.what()});
    }
    const auto& v = verdicts.back();
    say(std::string(v.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(v.id) + ": " +
        v.detail);
  };
  guarded(4, staple_correctness);
  guarded(5, gradient_correctness);
  guarded(6, metric_laws);
  guarded(7, generator_statistics);

  if (wanted.count(1) || wanted.count(2) || wanted.count(3) || wanted.count(8)) {
    const auto t0 = Clock::now();
    try {
      for (auto& v : experiment_criteria(work, wanted)) {
        say(std::string(v.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(v.id) + ": " +
            v.detail);
        verdicts.push_back(std::move(v));
      }
    } catch (const std::exception& e) {
      for (int id : {1, 2, 3, 8})
        if (wanted.count(id)) verdicts.push_back({id, false, std::string("error: ") + e.what()});
    }
    say("experiments took " + fmt("%.0f", since(t0)) + " s");
  }

  std::sort(verdicts.begin(), verdicts.end(),
            [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  say("\n== acceptance summary ==");
  bool all = true;
  for (const auto& v : verdicts) {
    say(std::string(v.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(v.id) + ": " +
        v.detail);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
