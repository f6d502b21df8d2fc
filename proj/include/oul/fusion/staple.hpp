#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/raster.hpp"
#include "oul/fusion/fusion.hpp"

namespace oul::fusion {

/// Binary STAPLE expectation-maximization state.
struct StapleState {
  std::vector<double> p;  ///< per-rater sensitivity
  std::vector<double> q;  ///< per-rater specificity
  ProbMap w;              ///< posterior foreground probability per pixel
  double prior_f = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct StapleOptions {
  int max_iters = 100;
  double tol = 1e-6;
  double init = 0.99;
  double clamp = 1e-6;
};

/// Posterior foreground weights for the given rater parameters.
inline std::vector<double> staple_e_step(std::span<const BinaryMask> masks,
                                         std::span<const double> p, std::span<const double> q,
                                         double prior_f) {
  const std::size_t n = masks[0].size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = prior_f, b = 1.0 - prior_f;
    for (std::size_t j = 0; j < masks.size(); ++j) {
      if (masks[j][i]) {
        a *= p[j];
        b *= 1.0 - q[j];
      } else {
        a *= 1.0 - p[j];
        b *= q[j];
      }
    }
    w[i] = a / (a + b);
  }
  return w;
}

/// Binary STAPLE with a fixed global prior equal to the mean rater
/// foreground fraction. Iterates E/M steps from p = q = init until
/// max_j(|dp_j| + |dq_j|) < tol or max_iters; the returned weights are the
/// E-step of the final parameters and the mask is W >= 0.5.
inline std::pair<BinaryMask, StapleState> staple(std::span<const BinaryMask> masks,
                                                 const StapleOptions& opt = {}) {
  detail::check_masks(masks, 2, "staple");
  const std::size_t k = masks.size();
  const std::size_t n = masks[0].size();
  if (n == 0) throw FusionError("staple: empty masks");

  std::size_t fg_total = 0;
  for (const auto& m : masks) fg_total += count_foreground(m);
  if (fg_total == 0 || fg_total == k * n)
    throw FusionError("staple: all raters uniformly empty or uniformly full");

  StapleState st;
  st.prior_f = static_cast<double>(fg_total) / static_cast<double>(k * n);
  st.p.assign(k, opt.init);
  st.q.assign(k, opt.init);
  const double lo = opt.clamp, hi = 1.0 - opt.clamp;

  std::vector<double> w;
  for (st.iterations = 0; st.iterations < opt.max_iters;) {
    w = staple_e_step(masks, st.p, st.q, st.prior_f);
    double sw = 0.0, s1w = 0.0;
    for (double v : w) {
      sw += v;
      s1w += 1.0 - v;
    }
    double delta = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double tp = 0.0, tn = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (masks[j][i])
          tp += w[i];
        else
          tn += 1.0 - w[i];
      }
      const double pj = std::clamp(sw > 0.0 ? tp / sw : st.p[j], lo, hi);
      const double qj = std::clamp(s1w > 0.0 ? tn / s1w : st.q[j], lo, hi);
      delta = std::max(delta, std::abs(pj - st.p[j]) + std::abs(qj - st.q[j]));
      st.p[j] = pj;
      st.q[j] = qj;
    }
    ++st.iterations;
    if (delta < opt.tol) {
      st.converged = true;
      break;
    }
  }
  w = staple_e_step(masks, st.p, st.q, st.prior_f);

  BinaryMask out(masks[0].width(), masks[0].height());
  st.w = ProbMap(masks[0].width(), masks[0].height());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = w[i] >= 0.5 ? 1 : 0;
    st.w[i] = static_cast<float>(w[i]);
  }
  return {std::move(out), std::move(st)};
}

}  // namespace oul::fusion
