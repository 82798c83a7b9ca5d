#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "robrel/common.hpp"
#include "robrel/lifetime.hpp"
#include "robrel/structure.hpp"

namespace robrel {

inline constexpr double kPmfSlack = 1e-9;

// Posterior predictive pmf of the number of still-functioning components of
// one type at time t, given survival to t_now.
struct CountDistribution {
  std::vector<double> pmf;  // index l = 0 .. n_total - e
  double t = 0.0;
  double t_now = 0.0;

  int at_risk() const { return static_cast<int>(pmf.size()) - 1; }

  double cmf(int l) const {
    if (l < 0 || l > at_risk())
      throw ValidationError("cmf index " + std::to_string(l) + " out of range 0.." +
                            std::to_string(at_risk()));
    double s = 0.0;
    for (int i = 0; i <= l; ++i) s += pmf[i];
    return std::clamp(s, 0.0, 1.0);
  }
};

inline double count_cmf(const CountDistribution& dist, int l) { return dist.cmf(l); }

namespace detail {

// Alternating-sum closed form of the posterior predictive pmf:
//   P(C_t = l) = C(m,l) sum_j (-1)^j C(m-l,j) (ny / (ny + (l+j) w))^(n+1)
// with m components at risk and w = t^beta - t_now^beta.
inline CountDistribution count_pmf_core(const IgParams& post, WeibullShape shape, int at_risk,
                                        double t_now, double t) {
  if (t < t_now) throw ValidationError("t must not precede t_now");
  const int m = at_risk;
  const double w = std::pow(t, shape.beta) - std::pow(t_now, shape.beta);
  const double exponent = post.n + 1.0;
  const double log_ny = std::log(post.ny);

  CountDistribution dist;
  dist.t = t;
  dist.t_now = t_now;
  dist.pmf.assign(m + 1, 0.0);

  double worst = 0.0;
  for (int l = 0; l <= m; ++l) {
    double p = 0.0;
    for (int j = 0; j <= m - l; ++j) {
      const double term = static_cast<double>(binomial(m, l)) *
                          static_cast<double>(binomial(m - l, j)) *
                          std::exp(exponent * (log_ny - std::log(post.ny + (l + j) * w)));
      p += (j % 2 == 0) ? term : -term;
      worst = std::max(worst, std::abs(term));
    }
    if (p < -kPmfSlack || p > 1.0 + kPmfSlack)
      throw NumericalError("predictive pmf entry " + std::to_string(p) + " at l=" +
                           std::to_string(l) + " outside [0,1]; worst term magnitude " +
                           std::to_string(worst));
    dist.pmf[l] = std::clamp(p, 0.0, 1.0);
  }

  double sum = 0.0;
  for (double p : dist.pmf) sum += p;
  if (std::abs(sum - 1.0) > kPmfSlack)
    throw NumericalError("predictive pmf sums to " + std::to_string(sum) +
                         "; worst term magnitude " + std::to_string(worst));
  for (double& p : dist.pmf) p /= sum;
  return dist;
}

}  // namespace detail

inline CountDistribution count_pmf(WeibullShape shape, const PriorParams& prior,
                                   const ObservationSet& obs, double t) {
  if (t < obs.t_now) throw ValidationError("t must not precede t_now");
  const PosteriorParams post = update_posterior(prior, shape, obs);
  return detail::count_pmf_core(post, shape, obs.at_risk(), obs.t_now, t);
}

// Fixed prior parameters and data for one component type.
struct ComponentInputs {
  WeibullShape shape;
  PriorParams prior;
  ObservationSet obs;
};

// Prior parameter box and data for one component type.
struct BoxInputs {
  WeibullShape shape;
  PriorBox box;
  ObservationSet obs;
};

namespace detail {

inline void check_types(const SurvivalSignature& sig, std::size_t k, int n_total) {
  if (sig.counts().size() <= k || sig.counts()[k] != n_total)
    throw ValidationError("signature dimensions do not match per-type inputs");
}

// Sum over l-vectors with l_k <= at-risk of Phi(l) * prod_k pmf_k(l_k);
// cells with Phi = 0 contribute nothing and are skipped.
inline double signature_mix(const SurvivalSignature& sig,
                            const std::vector<CountDistribution>& pmfs) {
  const std::size_t K = pmfs.size();
  std::vector<int> l(K, 0);
  double total = 0.0;
  while (true) {
    const Rational& phi = sig.at(l);
    if (phi.num != 0) {
      double prod = phi.value();
      for (std::size_t k = 0; k < K; ++k) prod *= pmfs[k].pmf[l[k]];
      total += prod;
    }
    std::size_t k = K;
    while (k > 0) {
      --k;
      if (l[k] < pmfs[k].at_risk()) {
        ++l[k];
        break;
      }
      l[k] = 0;
      if (k == 0) return total;
    }
  }
}

}  // namespace detail

// System reliability via the law of total probability over the signature,
// restricted to counts attainable after the observed failures.
inline double system_reliability_point(const SurvivalSignature& sig,
                                       const std::vector<ComponentInputs>& inputs, double t) {
  std::vector<CountDistribution> pmfs;
  pmfs.reserve(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    detail::check_types(sig, k, inputs[k].obs.n_total);
    if (t < inputs[k].obs.t_now) throw ValidationError("t must not precede t_now");
    pmfs.push_back(count_pmf(inputs[k].shape, inputs[k].prior, inputs[k].obs, t));
  }
  return detail::signature_mix(sig, pmfs);
}

enum class Direction { Lower, Upper };

struct BoundResult {
  double value = 0.0;
  std::vector<double> n0;  // argmin / argmax over the n0 box
  long evaluations = 0;
};

namespace detail {

// Objective R(t | n0 vector) with y0 pinned at the box edge given by the
// direction.  Per-type pmfs are memoized on the n0 coordinate, so coordinate
// moves only recompute one type.
class SystemObjective {
 public:
  SystemObjective(const SurvivalSignature& sig, const std::vector<BoxInputs>& inputs, double t,
                  Direction dir, bool normalize)
      : sig_(sig), inputs_(inputs), t_(t), dir_(dir) {
    caches_.resize(inputs.size());
    if (normalize) {
      // R(t_now | theta) = Phi at the full at-risk vector, independent of theta.
      std::vector<int> l_max;
      for (const auto& in : inputs) l_max.push_back(in.obs.at_risk());
      norm_ = sig.value(l_max);
      if (!(norm_ > 0.0))
        throw NumericalError("cannot normalize: reliability at t_now is zero");
    }
  }

  double pinned_y0(std::size_t k) const {
    return dir_ == Direction::Lower ? inputs_[k].box.y0_lo : inputs_[k].box.y0_hi;
  }

  double eval(std::span<const double> n0) {
    std::vector<const CountDistribution*> pmfs(inputs_.size());
    for (std::size_t k = 0; k < inputs_.size(); ++k) pmfs[k] = &pmf_for(k, n0[k]);
    ++evaluations_;
    std::vector<int> l(inputs_.size(), 0);
    double total = 0.0;
    while (true) {
      const Rational& phi = sig_.at(l);
      if (phi.num != 0) {
        double prod = phi.value();
        for (std::size_t k = 0; k < l.size(); ++k) prod *= pmfs[k]->pmf[l[k]];
        total += prod;
      }
      std::size_t k = l.size();
      bool done = true;
      while (k > 0) {
        --k;
        if (l[k] < pmfs[k]->at_risk()) {
          ++l[k];
          done = false;
          break;
        }
        l[k] = 0;
      }
      if (done) break;
    }
    return total / norm_;
  }

  long evaluations() const { return evaluations_; }

 private:
  const CountDistribution& pmf_for(std::size_t k, double n0) {
    auto& cache = caches_[k];
    auto it = cache.find(n0);
    if (it == cache.end()) {
      const auto& in = inputs_[k];
      it = cache.emplace(n0, count_pmf(in.shape, PriorParams(n0, pinned_y0(k)), in.obs, t_)).first;
    }
    return it->second;
  }

  const SurvivalSignature& sig_;
  const std::vector<BoxInputs>& inputs_;
  double t_;
  Direction dir_;
  double norm_ = 1.0;
  long evaluations_ = 0;
  std::vector<std::map<double, CountDistribution>> caches_;
};

// Shrinking-step coordinate descent within the n0 box, started from one seed.
template <typename Objective>
void coordinate_descent(Objective&& f, std::span<const double> lo, std::span<const double> hi,
                        Direction dir, std::vector<double>& x, double& fx) {
  const std::size_t K = x.size();
  const auto better = [dir](double a, double b) {
    return dir == Direction::Lower ? a < b : a > b;
  };
  std::vector<double> step(K);
  double max_width = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    step[k] = (hi[k] - lo[k]) / 4.0;
    max_width = std::max(max_width, hi[k] - lo[k]);
  }
  if (max_width == 0.0) return;
  const double tol = 1e-5 * max_width;

  std::vector<double> cand = x;
  while (*std::max_element(step.begin(), step.end()) > tol) {
    bool improved = false;
    for (std::size_t k = 0; k < K; ++k) {
      if (step[k] <= 0.0) continue;
      for (double s : {step[k], -step[k]}) {
        const double xk = std::clamp(x[k] + s, lo[k], hi[k]);
        if (xk == x[k]) continue;
        cand[k] = xk;
        const double fc = f(cand);
        if (better(fc, fx)) {
          x[k] = xk;
          fx = fc;
          improved = true;
        } else {
          cand[k] = x[k];
        }
      }
      cand[k] = x[k];
    }
    if (!improved)
      for (double& s : step) s *= 0.5;
  }
}

}  // namespace detail

// Lower/upper system reliability over the prior boxes (y0 pinned at the box
// edge by stochastic dominance, n0 searched by multi-start local descent
// seeded at all box corners plus the center and an optional warm start).
inline BoundResult optimize_bound(const SurvivalSignature& sig,
                                  const std::vector<BoxInputs>& inputs, double t, Direction dir,
                                  bool normalize = false,
                                  const std::vector<double>* warm_start = nullptr) {
  const std::size_t K = inputs.size();
  if (K == 0) throw ValidationError("no component types");
  for (std::size_t k = 0; k < K; ++k) {
    detail::check_types(sig, k, inputs[k].obs.n_total);
    if (t < inputs[k].obs.t_now) throw ValidationError("t must not precede t_now");
  }

  std::vector<double> lo(K), hi(K);
  for (std::size_t k = 0; k < K; ++k) {
    lo[k] = inputs[k].box.n0_lo;
    hi[k] = inputs[k].box.n0_hi;
  }

  detail::SystemObjective objective(sig, inputs, t, dir, normalize);
  auto f = [&objective](std::span<const double> x) { return objective.eval(x); };
  const auto better = [dir](double a, double b) {
    return dir == Direction::Lower ? a < b : a > b;
  };

  std::vector<std::vector<double>> seeds;
  for (std::size_t corner = 0; corner < (std::size_t{1} << K); ++corner) {
    std::vector<double> s(K);
    for (std::size_t k = 0; k < K; ++k) s[k] = (corner >> k) & 1 ? hi[k] : lo[k];
    seeds.push_back(std::move(s));
  }
  {
    std::vector<double> center(K);
    for (std::size_t k = 0; k < K; ++k) center[k] = 0.5 * (lo[k] + hi[k]);
    seeds.push_back(std::move(center));
  }
  if (warm_start && warm_start->size() == K) {
    std::vector<double> w = *warm_start;
    for (std::size_t k = 0; k < K; ++k) w[k] = std::clamp(w[k], lo[k], hi[k]);
    seeds.push_back(std::move(w));
  }

  BoundResult best;
  bool have_best = false;
  for (const auto& seed : seeds) {
    std::vector<double> x = seed;
    double fx = f(x);
    detail::coordinate_descent(f, lo, hi, dir, x, fx);
    if (!have_best || better(fx, best.value)) {
      best.value = fx;
      best.n0 = x;
      have_best = true;
    }
  }
  best.evaluations = objective.evaluations();
  return best;
}

enum class TimeScale { Elapsed, Prospective };

// Reliability envelope over a time grid, with optimizer diagnostics.
struct BoundsCurve {
  std::vector<double> t;
  std::vector<double> lower, upper;
  std::vector<std::vector<double>> argmin_n0, argmax_n0;  // per grid point
  bool normalized = false;
  double t_now = 0.0;
};

struct ImprecisionCurve {
  std::vector<double> t;  // elapsed or prospective per scale
  std::vector<double> delta;
  TimeScale scale = TimeScale::Elapsed;
};

inline std::vector<double> make_time_grid(double t_from, double t_to, int points) {
  if (points < 2 || t_to <= t_from) throw ValidationError("invalid time grid");
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = t_from + (t_to - t_from) * static_cast<double>(i) / (points - 1);
  return grid;
}

// Grid horizon heuristic: three times the largest upper mean-lifetime bound.
inline double default_horizon(const std::vector<BoxInputs>& inputs) {
  double t_now = 0.0, span = 0.0;
  for (const auto& in : inputs) {
    t_now = std::max(t_now, in.obs.t_now);
    span = std::max(span, mean_lifetime_from_scale(in.shape, in.box.y0_hi));
  }
  return t_now + 3.0 * span;
}

inline BoundsCurve reliability_bounds_curve(const SurvivalSignature& sig,
                                            const std::vector<BoxInputs>& inputs,
                                            std::span<const double> grid, bool normalize = false) {
  BoundsCurve curve;
  curve.normalized = normalize;
  for (const auto& in : inputs) curve.t_now = std::max(curve.t_now, in.obs.t_now);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < curve.t_now) throw ValidationError("grid point precedes t_now");
    if (i > 0 && grid[i] <= grid[i - 1]) throw ValidationError("time grid must be ascending");
  }

  std::vector<double> warm_lo, warm_hi;
  for (double t : grid) {
    const BoundResult lo = optimize_bound(sig, inputs, t, Direction::Lower, normalize,
                                          warm_lo.empty() ? nullptr : &warm_lo);
    const BoundResult hi = optimize_bound(sig, inputs, t, Direction::Upper, normalize,
                                          warm_hi.empty() ? nullptr : &warm_hi);
    curve.t.push_back(t);
    curve.lower.push_back(std::min(lo.value, hi.value));
    curve.upper.push_back(std::max(lo.value, hi.value));
    curve.argmin_n0.push_back(lo.n0);
    curve.argmax_n0.push_back(hi.n0);
    warm_lo = lo.n0;
    warm_hi = hi.n0;
  }
  return curve;
}

// Envelope of the single-component predictive reliability over one prior box;
// y0 sits at the box edge, n0 is searched in one dimension per grid point.
inline BoundsCurve component_predictive_bounds(WeibullShape shape, const PriorBox& box,
                                               const ObservationSet* obs,
                                               std::span<const double> grid) {
  const ObservationSet empty = ObservationSet::none(0);
  const ObservationSet& data = obs ? *obs : empty;
  data.validate();

  BoundsCurve curve;
  curve.t_now = data.t_now;

  const auto reliability = [&](double n0, double y0, double t) {
    const PosteriorParams post = update_posterior(PriorParams(n0, y0), shape, data);
    return predictive_reliability(post, shape, t);
  };

  for (double t : grid) {
    if (t < 0.0) throw ValidationError("grid point must be nonnegative");
    double best[2];  // lower, upper
    std::vector<double> arg(2);
    for (int d = 0; d < 2; ++d) {
      const Direction dir = d == 0 ? Direction::Lower : Direction::Upper;
      const double y0 = d == 0 ? box.y0_lo : box.y0_hi;
      auto f = [&](std::span<const double> x) { return reliability(x[0], y0, t); };
      const double lo = box.n0_lo, hi = box.n0_hi;
      double fbest = 0.0;
      std::vector<double> xbest;
      bool have = false;
      for (double seed : {lo, 0.5 * (lo + hi), hi}) {
        std::vector<double> x{seed};
        double fx = f(x);
        detail::coordinate_descent(f, std::span(&lo, 1), std::span(&hi, 1), dir, x, fx);
        if (!have || (dir == Direction::Lower ? fx < fbest : fx > fbest)) {
          fbest = fx;
          xbest = x;
          have = true;
        }
      }
      best[d] = fbest;
      arg[d] = xbest[0];
    }
    curve.t.push_back(t);
    curve.lower.push_back(std::min(best[0], best[1]));
    curve.upper.push_back(std::max(best[0], best[1]));
    curve.argmin_n0.push_back({arg[0]});
    curve.argmax_n0.push_back({arg[1]});
  }
  return curve;
}

inline ImprecisionCurve imprecision_curve(const BoundsCurve& curve, TimeScale scale) {
  ImprecisionCurve imp;
  imp.scale = scale;
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    imp.t.push_back(scale == TimeScale::Prospective ? curve.t[i] - curve.t_now : curve.t[i]);
    imp.delta.push_back(curve.upper[i] - curve.lower[i]);
  }
  return imp;
}

}  // namespace robrel
