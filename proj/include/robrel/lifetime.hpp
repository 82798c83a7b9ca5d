#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "robrel/common.hpp"

namespace robrel {

// Fixed Weibull shape beta; the scale lambda carries the uncertainty.
struct WeibullShape {
  double beta = 1.0;

  explicit WeibullShape(double b) : beta(b) {
    if (!(b > 0.0)) throw ValidationError("Weibull shape must be positive");
  }
};

// Conjugate prior in the (n0, y0) parametrization of IG(n0 + 1, n0 * y0):
// n0 is the prior strength (pseudocount), y0 the prior guess for the scale.
struct PriorParams {
  double n0 = 1.0;
  double y0 = 1.0;

  PriorParams(double n0_, double y0_) : n0(n0_), y0(y0_) {
    if (!(n0 >= 1.0)) throw ValidationError("prior strength n0 must be >= 1");
    if (!(y0 > 0.0)) throw ValidationError("prior guess y0 must be positive");
  }
};

// Hyperparameter rectangle [n0_lo, n0_hi] x [y0_lo, y0_hi].
struct PriorBox {
  double n0_lo, n0_hi, y0_lo, y0_hi;

  PriorBox(double nlo, double nhi, double ylo, double yhi)
      : n0_lo(nlo), n0_hi(nhi), y0_lo(ylo), y0_hi(yhi) {
    if (!(1.0 <= n0_lo && n0_lo <= n0_hi))
      throw ValidationError("prior box requires 1 <= n0_lo <= n0_hi");
    if (!(0.0 < y0_lo && y0_lo <= y0_hi))
      throw ValidationError("prior box requires 0 < y0_lo <= y0_hi");
  }

  bool degenerate() const { return n0_lo == n0_hi && y0_lo == y0_hi; }
};

// Failure times of one component type observed up to the censoring horizon
// t_now; the remaining n_total - e components are right-censored at t_now.
// A failure time exactly equal to t_now counts as an observed failure, not
// as censored.
struct ObservationSet {
  std::vector<double> failure_times;
  double t_now = 0.0;
  int n_total = 0;

  int num_failures() const { return static_cast<int>(failure_times.size()); }
  int at_risk() const { return n_total - num_failures(); }

  void validate() const {
    if (n_total < 0) throw ValidationError("n_total must be nonnegative");
    if (t_now < 0.0) throw ValidationError("t_now must be nonnegative");
    if (num_failures() > n_total)
      throw ValidationError("more failure times than components");
    for (double t : failure_times) {
      if (!(t > 0.0)) throw ValidationError("failure times must be positive");
      // With no censored units t_now never enters the update, so a fully
      // observed sample may carry t_now = 0.
      if (at_risk() > 0 && t > t_now)
        throw ValidationError("failure time " + std::to_string(t) +
                              " exceeds censoring horizon " + std::to_string(t_now));
    }
  }

  static ObservationSet none(int n_total, double t_now = 0.0) {
    return ObservationSet{{}, t_now, n_total};
  }
};

// Updated parameters: the posterior for lambda is IG(n_post + 1, ny_post).
struct PosteriorParams {
  double n_post = 1.0;
  double ny_post = 1.0;

  double y_post() const { return ny_post / n_post; }
};

// Common (n, n*y) access for prior and posterior parameter records; the
// predictive formulas are identical in this parametrization.
struct IgParams {
  double n;
  double ny;

  IgParams(const PriorParams& p) : n(p.n0), ny(p.n0 * p.y0) {}
  IgParams(const PosteriorParams& p) : n(p.n_post), ny(p.ny_post) {}
  IgParams(double n_, double ny_) : n(n_), ny(ny_) {}

  double y() const { return ny / n; }
};

inline double weibull_cdf(WeibullShape shape, double lambda, double t) {
  if (!(lambda > 0.0)) throw ValidationError("Weibull scale must be positive");
  if (t < 0.0) throw ValidationError("time must be nonnegative");
  return -std::expm1(-std::pow(t, shape.beta) / lambda);
}

// P(T > t | T > t_now, lambda) for a component that survived to t_now.
inline double conditional_survival(WeibullShape shape, double lambda, double t_now, double t) {
  if (!(lambda > 0.0)) throw ValidationError("Weibull scale must be positive");
  if (t_now < 0.0) throw ValidationError("t_now must be nonnegative");
  if (t < t_now) throw ValidationError("t must not precede t_now");
  return std::exp(-(std::pow(t, shape.beta) - std::pow(t_now, shape.beta)) / lambda);
}

// E[T | lambda] = lambda^(1/beta) * Gamma(1 + 1/beta), and its inverse.
inline double mean_lifetime_from_scale(WeibullShape shape, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("Weibull scale must be positive");
  return std::exp(std::log(lambda) / shape.beta + std::lgamma(1.0 + 1.0 / shape.beta));
}

inline double scale_from_mean_lifetime(WeibullShape shape, double mean) {
  if (!(mean > 0.0)) throw ValidationError("mean lifetime must be positive");
  return std::exp(shape.beta * (std::log(mean) - std::lgamma(1.0 + 1.0 / shape.beta)));
}

// Conjugate update with right censoring:
//   n_post  = n0 + e
//   ny_post = n0*y0 + (n_total - e) * t_now^beta + sum_i t_i^beta
inline PosteriorParams update_posterior(const PriorParams& prior, WeibullShape shape,
                                        const ObservationSet& obs) {
  obs.validate();
  double tau = 0.0;
  for (double t : obs.failure_times) tau += std::pow(t, shape.beta);
  PosteriorParams post;
  post.n_post = prior.n0 + obs.num_failures();
  post.ny_post = prior.n0 * prior.y0 + obs.at_risk() * std::pow(obs.t_now, shape.beta) + tau;
  return post;
}

inline double ig_density(double a, double b, double lambda) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("inverse-gamma parameters must be positive");
  if (!(lambda > 0.0)) return 0.0;
  return std::exp(a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(lambda) - b / lambda);
}

struct IgMoments {
  double mean;
  std::optional<double> sd;  // undefined for n <= 1
};

// Exact moments of IG(n + 1, n*y): mean y, sd y / sqrt(n - 1).
inline IgMoments ig_moments(const IgParams& params) {
  IgMoments m;
  m.mean = params.y();
  if (params.n > 1.0) m.sd = m.mean / std::sqrt(params.n - 1.0);
  return m;
}

// Predictive density of a component lifetime with parameters integrated out:
//   beta t^(beta-1) (n+1) (ny)^(n+1) / (ny + t^beta)^(n+2)
inline double predictive_density(const IgParams& params, WeibullShape shape, double t) {
  if (t < 0.0) throw ValidationError("time must be nonnegative");
  if (t == 0.0) {
    if (shape.beta > 1.0) return 0.0;
    if (shape.beta == 1.0) return (params.n + 1.0) / params.ny;
    return std::numeric_limits<double>::infinity();
  }
  const double tb = std::pow(t, shape.beta);
  return std::exp(std::log(shape.beta) + (shape.beta - 1.0) * std::log(t) +
                  std::log(params.n + 1.0) + (params.n + 1.0) * std::log(params.ny) -
                  (params.n + 2.0) * std::log(params.ny + tb));
}

// Closed-form tail of the predictive density: (ny / (ny + t^beta))^(n+1).
inline double predictive_reliability(const IgParams& params, WeibullShape shape, double t) {
  if (t < 0.0) throw ValidationError("time must be nonnegative");
  const double tb = std::pow(t, shape.beta);
  return std::exp((params.n + 1.0) * (std::log(params.ny) - std::log(params.ny + tb)));
}

}  // namespace robrel
