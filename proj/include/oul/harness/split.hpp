#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/rng.hpp"
#include "oul/metrics/metrics.hpp"

namespace oul::harness {

namespace detail {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace detail

/// Seeded shuffle followed by a cut: the first round(train_fraction * n)
/// ids train, the rest are held out. Both parts keep the input order.
inline std::pair<std::vector<std::string>, std::vector<std::string>> train_test_split(
    const std::vector<std::string>& ids, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(ids.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng = Rng(seed).substream("split");
  detail::shuffle(idx, rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
  std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> te(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(tr.begin(), tr.end());
  std::sort(te.begin(), te.end());
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (auto i : tr) out.first.push_back(ids[i]);
  for (auto i : te) out.second.push_back(ids[i]);
  return out;
}

/// Partitions ids into k folds whose sizes differ by at most one.
inline std::vector<std::vector<std::string>> kfold_split(const std::vector<std::string>& ids,
                                                         int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("kfold_split: k must be >= 2");
  if (static_cast<std::size_t>(k) > ids.size())
    throw ConfigError("kfold_split: k = " + std::to_string(k) + " exceeds " +
                      std::to_string(ids.size()) + " ids");
  std::vector<std::string> shuffled = ids;
  Rng rng = Rng(seed).substream("kfold");
  detail::shuffle(shuffled, rng);
  std::vector<std::vector<std::string>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < shuffled.size(); ++i)
    folds[i % static_cast<std::size_t>(k)].push_back(shuffled[i]);
  return folds;
}

struct QuartileGroups {
  std::vector<metrics::MetricsReport> below_median;
  std::vector<metrics::MetricsReport> above_median;
  double median_dice = 0.0;
};

/// Splits reports by Dice at the median; Dice equal to the median counts as
/// above.
inline QuartileGroups quartile_group(const std::vector<metrics::MetricsReport>& reports) {
  if (reports.size() < 2) throw ConfigError("quartile_group: needs at least 2 reports");
  std::vector<double> d;
  for (const auto& r : reports) d.push_back(r.dice);
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  QuartileGroups g;
  g.median_dice = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  for (const auto& r : reports)
    (r.dice >= g.median_dice ? g.above_median : g.below_median).push_back(r);
  return g;
}

}  // namespace oul::harness
