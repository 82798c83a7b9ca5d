#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "robrel/bounds.hpp"
#include "robrel/common.hpp"
#include "robrel/lifetime.hpp"
#include "robrel/structure.hpp"

namespace robrel {

// Deterministic seeded simulation settings; identical seeds give identical
// streams regardless of batching.
struct McConfig {
  std::size_t samples = 1000000;
  std::uint64_t seed = 0;

  void validate() const {
    if (samples < 1000) throw ValidationError("Monte Carlo sample count must be >= 1000");
  }
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

// Reciprocal of a Gamma(a, rate b) variate.
inline double sample_inverse_gamma(double a, double b, std::mt19937_64& rng) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ValidationError("inverse-gamma parameters must be positive");
  std::gamma_distribution<double> gamma(a, 1.0 / b);
  double g = 0.0;
  while (g <= 0.0) g = gamma(rng);
  return 1.0 / g;
}

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth, int force_split, double& achieved) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = left + right - whole;
  if (depth <= 0) {
    achieved = std::max(achieved, std::abs(err));
    return left + right + err / 15.0;
  }
  // A narrow peak between the sampled nodes can fake convergence, so the
  // first few levels always split regardless of the error estimate.
  if (force_split <= 0 && std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, force_split - 1,
                              achieved) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, force_split - 1,
                              achieved);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 40, int force_split = 6) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double achieved = 0.0;
  const double result =
      adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth, force_split, achieved);
  if (achieved > std::max(tol * 16.0, 1e-12))
    throw NumericalError("quadrature did not converge; achieved error estimate " +
                         std::to_string(achieved) + " against tolerance " + std::to_string(tol));
  return result;
}

// Integral of g(lambda) against IG(a, b), via v = b / lambda (a unit-scale
// gamma integrand, taming the singularity at lambda = 0) and x = v / (1 + v).
inline double integrate_against_ig(const std::function<double(double)>& g, double a, double b,
                                   double tol) {
  const double log_norm = -std::lgamma(a);
  auto h = [&](double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double v = x / (1.0 - x);
    const double log_w = log_norm + (a - 1.0) * std::log(v) - v - 2.0 * std::log(1.0 - x);
    return g(b / v) * std::exp(log_w);
  };
  return adaptive_simpson(h, 0.0, 1.0, tol);
}

// Integral of f over (0, inf) via t = x / (1 - x).
inline double integrate_halfline(const std::function<double(double)>& f, double tol) {
  auto h = [&](double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double t = x / (1.0 - x);
    return f(t) / ((1.0 - x) * (1.0 - x));
  };
  return adaptive_simpson(h, 0.0, 1.0, tol);
}

}  // namespace detail

// IG(a, b) cdf by quadrature of the density; used for sampler checks.
inline double ig_cdf(double a, double b, double x, double tol = 1e-10) {
  if (x <= 0.0) return 0.0;
  auto f = [&](double u) {
    const double lambda = u * x;  // map (0,1) onto (0,x)
    return x * ig_density(a, b, lambda);
  };
  return detail::adaptive_simpson(f, 0.0, 1.0, tol);
}

// Quadrature counterpart of predictive_reliability: the lambda-integral of
// the conditional survival probability against the (prior or posterior) IG.
inline double quadrature_predictive_reliability(const IgParams& params, WeibullShape shape,
                                                double t, double t_now = 0.0,
                                                double tol = 1e-10) {
  if (t < t_now) throw ValidationError("t must not precede t_now");
  const double w = std::pow(t, shape.beta) - std::pow(t_now, shape.beta);
  return detail::integrate_against_ig([&](double lambda) { return std::exp(-w / lambda); },
                                      params.n + 1.0, params.ny, tol);
}

// Quadrature counterpart of one count_pmf entry: binomial mixture over the
// posterior of lambda, integrated numerically.
inline double quadrature_count_prob(const IgParams& post, WeibullShape shape, int n_at_risk,
                                    int l, double t_now, double t, double tol = 1e-10) {
  if (l < 0 || l > n_at_risk) throw ValidationError("count index out of range");
  if (t < t_now) throw ValidationError("t must not precede t_now");
  const double w = std::pow(t, shape.beta) - std::pow(t_now, shape.beta);
  const double coeff = static_cast<double>(detail::binomial(n_at_risk, l));
  auto g = [&](double lambda) {
    const double s = std::exp(-w / lambda);
    return coeff * std::pow(s, l) * std::pow(1.0 - s, n_at_risk - l);
  };
  return detail::integrate_against_ig(g, post.n + 1.0, post.ny, tol);
}

// Empirical count distribution: per lambda sample, survivors are binomial
// with the conditional survival probability.
inline CountDistribution mc_count_pmf(WeibullShape shape, const PosteriorParams& post,
                                      int n_at_risk, double t_now, double t,
                                      const McConfig& cfg) {
  cfg.validate();
  if (t < t_now) throw ValidationError("t must not precede t_now");
  CountDistribution dist;
  dist.t = t;
  dist.t_now = t_now;
  dist.pmf.assign(n_at_risk + 1, 0.0);
  if (n_at_risk == 0) {
    dist.pmf[0] = 1.0;
    return dist;
  }
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const double lambda = sample_inverse_gamma(post.n_post + 1.0, post.ny_post, rng);
    const double p = conditional_survival(shape, lambda, t_now, t);
    std::binomial_distribution<int> binom(n_at_risk, p);
    ++dist.pmf[binom(rng)];
  }
  for (double& p : dist.pmf) p /= static_cast<double>(cfg.samples);
  return dist;
}

// Simulated counterpart of system_reliability_point: sample per-type survivor
// counts, average the signature lookups (exchangeability lets the signature
// average over which components survive).
inline McEstimate mc_system_reliability(const SurvivalSignature& sig,
                                        const std::vector<ComponentInputs>& inputs, double t,
                                        const McConfig& cfg) {
  cfg.validate();
  const std::size_t K = inputs.size();
  std::vector<PosteriorParams> post;
  for (std::size_t k = 0; k < K; ++k) {
    detail::check_types(sig, k, inputs[k].obs.n_total);
    if (t < inputs[k].obs.t_now) throw ValidationError("t must not precede t_now");
    post.push_back(update_posterior(inputs[k].prior, inputs[k].shape, inputs[k].obs));
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<int> l(K);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      const int at_risk = inputs[k].obs.at_risk();
      if (at_risk == 0) {
        l[k] = 0;
        continue;
      }
      const double lambda = sample_inverse_gamma(post[k].n_post + 1.0, post[k].ny_post, rng);
      const double p =
          conditional_survival(inputs[k].shape, lambda, inputs[k].obs.t_now, t);
      std::binomial_distribution<int> binom(at_risk, p);
      l[k] = binom(rng);
    }
    const double phi = sig.value(l);
    sum += phi;
    sum_sq += phi * phi;
  }

  McEstimate est;
  est.samples = cfg.samples;
  est.seed = cfg.seed;
  est.value = sum / static_cast<double>(cfg.samples);
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(cfg.samples) - est.value * est.value);
  est.std_error = std::sqrt(var / static_cast<double>(cfg.samples));
  return est;
}

// Exhaustive evaluation over a dense n0 grid with y0 pinned per direction;
// validates the numeric optimizer.
inline double grid_bound_oracle(const SurvivalSignature& sig,
                                const std::vector<BoxInputs>& inputs, double t, Direction dir,
                                int points_per_axis, bool normalize = false) {
  const std::size_t K = inputs.size();
  if (K == 0) throw ValidationError("no component types");
  if (points_per_axis < 2) throw ValidationError("need at least 2 points per axis");
  double combos = 1.0;
  for (std::size_t k = 0; k < K; ++k) combos *= points_per_axis;
  if (combos > 2e7) throw ValidationError("grid oracle size infeasible");

  double norm = 1.0;
  if (normalize) {
    std::vector<int> l_max;
    for (const auto& in : inputs) l_max.push_back(in.obs.at_risk());
    norm = sig.value(l_max);
  }

  // Per-axis pmfs, cached once.
  std::vector<std::vector<CountDistribution>> axis(K);
  for (std::size_t k = 0; k < K; ++k) {
    detail::check_types(sig, k, inputs[k].obs.n_total);
    const auto& box = inputs[k].box;
    const double y0 = dir == Direction::Lower ? box.y0_lo : box.y0_hi;
    for (int i = 0; i < points_per_axis; ++i) {
      const double n0 =
          box.n0_lo + (box.n0_hi - box.n0_lo) * static_cast<double>(i) / (points_per_axis - 1);
      axis[k].push_back(
          count_pmf(inputs[k].shape, PriorParams(n0, y0), inputs[k].obs, t));
    }
  }

  std::vector<int> idx(K, 0);
  std::vector<CountDistribution> pmfs;
  for (std::size_t k = 0; k < K; ++k) pmfs.push_back(axis[k][0]);
  double best = 0.0;
  bool have = false;
  while (true) {
    for (std::size_t k = 0; k < K; ++k) pmfs[k] = axis[k][idx[k]];
    const double value = detail::signature_mix(sig, pmfs) / norm;
    if (!have || (dir == Direction::Lower ? value < best : value > best)) {
      best = value;
      have = true;
    }
    std::size_t k = K;
    bool done = true;
    while (k > 0) {
      --k;
      if (idx[k] + 1 < points_per_axis) {
        ++idx[k];
        done = false;
        break;
      }
      idx[k] = 0;
    }
    if (done) break;
  }
  return best;
}

}  // namespace robrel
