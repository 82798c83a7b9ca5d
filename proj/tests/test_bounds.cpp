#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "brake_fixture.hpp"
#include "robrel/bounds.hpp"
#include "robrel/oracle.hpp"

using namespace robrel;

TEST_CASE("posterior predictive count pmf") {
  const WeibullShape beta(2.0);
  const PriorParams prior(2.0, 324.0 / M_PI);
  const ObservationSet obs{{1.0, 2.0}, 2.0, 4};

  SUBCASE("all-survive probability at a frozen point") {
    const auto dist = count_pmf(beta, prior, obs, 3.0);
    REQUIRE(dist.at_risk() == 2);
    // n_post = 4, ny_post = 219.26, w = 3^2 - 2^2 = 5:
    // P(C = 2) = (ny / (ny + 2w))^5
    CHECK(dist.pmf[2] == doctest::Approx(0.8001).epsilon(2e-4));
    double sum = 0.0;
    for (double p : dist.pmf) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("point mass on full survival at t = t_now") {
    const auto dist = count_pmf(beta, prior, obs, 2.0);
    CHECK(dist.pmf[2] == doctest::Approx(1.0));
    CHECK(dist.pmf[0] == doctest::Approx(0.0));
    CHECK(dist.pmf[1] == doctest::Approx(0.0));
  }

  SUBCASE("t before t_now is rejected") {
    CHECK_THROWS_AS((void)count_pmf(beta, prior, obs, 1.0), ValidationError);
  }

  SUBCASE("no components at risk gives the trivial distribution") {
    const auto dist = count_pmf(beta, prior, ObservationSet{{1.0, 2.0}, 2.0, 2}, 5.0);
    REQUIRE(dist.pmf.size() == 1);
    CHECK(dist.pmf[0] == doctest::Approx(1.0));
  }

  SUBCASE("matches quadrature entry by entry") {
    const auto post = update_posterior(prior, beta, obs);
    for (double t : {2.0, 3.0, 5.0, 9.0, 20.0}) {
      const auto dist = count_pmf(beta, prior, obs, t);
      for (int l = 0; l <= dist.at_risk(); ++l)
        CHECK(dist.pmf[l] ==
              doctest::Approx(quadrature_count_prob(post, beta, dist.at_risk(), l, 2.0, t))
                  .epsilon(1e-7));
    }
  }
}

TEST_CASE("count pmf across random configurations stays a distribution") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> beta_d(0.6, 3.5), y0_d(1.0, 300.0), n0_d(1.0, 10.0);
  std::uniform_int_distribution<int> m_d(1, 8);
  for (int rep = 0; rep < 200; ++rep) {
    const WeibullShape beta(beta_d(rng));
    const PriorParams prior(n0_d(rng), y0_d(rng));
    const int m = m_d(rng);
    const double t_now = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
    const double t = t_now + std::uniform_real_distribution<double>(0.0, 20.0)(rng);
    const auto dist = count_pmf(beta, prior, ObservationSet::none(m, t_now), t);
    double sum = 0.0;
    for (double p : dist.pmf) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("cumulative counts and the y0 dominance direction") {
  const WeibullShape beta(1.5);
  const ObservationSet obs = ObservationSet::none(5, 1.0);

  const auto dist = count_pmf(beta, PriorParams(3.0, 40.0), obs, 6.0);
  double prev = -1.0;
  for (int l = 0; l <= 5; ++l) {
    const double c = dist.cmf(l);
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(dist.cmf(5) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)dist.cmf(6), ValidationError);
  CHECK_THROWS_AS((void)dist.cmf(-1), ValidationError);

  // Larger y0 shifts survivor counts stochastically upward: the cmf at y0_hi
  // never exceeds the cmf at y0_lo.  Checked across random configurations.
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> beta_d(0.6, 3.5), y_d(5.0, 200.0), n0_d(1.0, 8.0);
  for (int rep = 0; rep < 100; ++rep) {
    const WeibullShape b(beta_d(rng));
    const double n0 = n0_d(rng);
    const double y_lo = y_d(rng);
    const double y_hi = y_lo * std::uniform_real_distribution<double>(1.0, 4.0)(rng);
    const double t_now = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    const double t = t_now + std::uniform_real_distribution<double>(0.1, 15.0)(rng);
    const auto lo = count_pmf(b, PriorParams(n0, y_lo), ObservationSet::none(4, t_now), t);
    const auto hi = count_pmf(b, PriorParams(n0, y_hi), ObservationSet::none(4, t_now), t);
    for (int l = 0; l < 4; ++l) CHECK(hi.cmf(l) <= lo.cmf(l) + 1e-12);
  }
}

TEST_CASE("system reliability at a fixed parameter point") {
  const SurvivalSignature sig = compute_survival_signature(brake::model());

  SUBCASE("equals the signature at the at-risk vector when t = t_now") {
    // Case 1 failure pattern leaves (1, 1, 2, 2) at risk; Phi there is 35/36.
    const double r = system_reliability_point(sig, brake::point_inputs(brake::case1(), 0.5), 8.0);
    CHECK(r == doctest::Approx(35.0 / 36.0).epsilon(1e-12));
  }

  SUBCASE("equals 1 at t = 0 with no observations") {
    const double r = system_reliability_point(sig, brake::point_inputs(brake::no_observations()), 0.0);
    CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("decreasing in t and inside [0, 1]") {
    const auto inputs = brake::point_inputs(brake::no_observations(), 0.5);
    double prev = 1.0;
    for (double t : {1.0, 3.0, 6.0, 10.0, 20.0, 40.0}) {
      const double r = system_reliability_point(sig, inputs, t);
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
      CHECK(r <= prev + 1e-12);
      prev = r;
    }
  }

  SUBCASE("mismatched signature dimensions are rejected") {
    auto inputs = brake::point_inputs(brake::no_observations());
    inputs.pop_back();
    CHECK_THROWS_AS((void)system_reliability_point(sig, inputs, 5.0), ValidationError);
  }
}

TEST_CASE("optimize_bound on a degenerate box reduces to a point evaluation") {
  const SurvivalSignature sig = compute_survival_signature(brake::model());
  auto inputs = brake::box_inputs(brake::no_observations());
  std::vector<ComponentInputs> pts;
  for (auto& in : inputs) {
    in.box = PriorBox(in.box.n0_lo, in.box.n0_lo, in.box.y0_lo, in.box.y0_lo);
    pts.push_back({in.shape, PriorParams(in.box.n0_lo, in.box.y0_lo), in.obs});
  }
  const double point = system_reliability_point(sig, pts, 10.0);
  for (Direction dir : {Direction::Lower, Direction::Upper}) {
    const auto res = optimize_bound(sig, inputs, 10.0, dir);
    CHECK(res.value == doctest::Approx(point).epsilon(1e-12));
    for (std::size_t k = 0; k < inputs.size(); ++k)
      CHECK(res.n0[k] == doctest::Approx(inputs[k].box.n0_lo));
  }
}

TEST_CASE("optimizer agrees with the dense grid oracle") {
  const SurvivalSignature sig = compute_survival_signature(brake::model());
  const auto inputs = brake::box_inputs(brake::no_observations());
  for (double t : {5.0, 10.0}) {
    for (Direction dir : {Direction::Lower, Direction::Upper}) {
      const double opt = optimize_bound(sig, inputs, t, dir).value;
      const double oracle = grid_bound_oracle(sig, inputs, t, dir, 9);
      // the optimizer may only be tighter than the coarse oracle grid
      if (dir == Direction::Lower)
        CHECK(opt <= oracle + 5e-4);
      else
        CHECK(opt >= oracle - 5e-4);
      CHECK(opt == doctest::Approx(oracle).epsilon(0.02));
    }
  }
}

TEST_CASE("bounds envelope contains every interior parameter choice") {
  const SurvivalSignature sig = compute_survival_signature(brake::model());
  const auto inputs = brake::box_inputs(brake::case1());
  const double t = 11.0;
  const double lo = optimize_bound(sig, inputs, t, Direction::Lower).value;
  const double hi = optimize_bound(sig, inputs, t, Direction::Upper).value;
  CHECK(lo <= hi);
  for (double u : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double r = system_reliability_point(sig, brake::point_inputs(brake::case1(), u), t);
    CHECK(r >= lo - 1e-9);
    CHECK(r <= hi + 1e-9);
  }
}

TEST_CASE("reliability bounds curve") {
  const SurvivalSignature sig = compute_survival_signature(brake::model());
  const auto inputs = brake::box_inputs(brake::case1());
  const auto grid = make_time_grid(8.0, 16.0, 9);

  const auto curve = reliability_bounds_curve(sig, inputs, grid);
  REQUIRE(curve.t.size() == 9);
  CHECK(curve.t_now == 8.0);
  CHECK(!curve.normalized);
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    CHECK(curve.lower[i] <= curve.upper[i] + 1e-12);
    CHECK(curve.lower[i] >= 0.0);
    CHECK(curve.upper[i] <= 1.0 + 1e-12);
    REQUIRE(curve.argmin_n0[i].size() == 4);
    REQUIRE(curve.argmax_n0[i].size() == 4);
  }
  // at t = t_now both bounds equal Phi(1, 1, 2, 2)
  CHECK(curve.lower[0] == doctest::Approx(35.0 / 36.0).epsilon(1e-9));
  CHECK(curve.upper[0] == doctest::Approx(35.0 / 36.0).epsilon(1e-9));

  // normalization divides both envelopes by the constant Phi at the at-risk
  // vector, so the normalized curve starts at 1
  const auto norm = reliability_bounds_curve(sig, inputs, grid, true);
  CHECK(norm.normalized);
  CHECK(norm.lower[0] == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(norm.lower[i] == doctest::Approx(curve.lower[i] / (35.0 / 36.0)).epsilon(1e-9));
    CHECK(norm.upper[i] == doctest::Approx(curve.upper[i] / (35.0 / 36.0)).epsilon(1e-9));
  }

  CHECK_THROWS_AS((void)reliability_bounds_curve(sig, inputs, std::vector<double>{7.0, 9.0}),
                  ValidationError);
}

TEST_CASE("component predictive bounds") {
  const WeibullShape beta(2.0);
  const PriorBox box(2.0, 5.0, 60.0, 120.0);
  const auto grid = make_time_grid(0.0, 20.0, 11);

  const auto curve = component_predictive_bounds(beta, box, nullptr, grid);
  CHECK(curve.lower[0] == doctest::Approx(1.0));
  CHECK(curve.upper[0] == doctest::Approx(1.0));
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    CHECK(curve.lower[i] <= curve.upper[i] + 1e-12);
    // every fixed (n0, y0) inside the box stays inside the envelope
    for (double n0 : {2.0, 3.5, 5.0})
      for (double y0 : {60.0, 90.0, 120.0}) {
        const double r = predictive_reliability(PriorParams(n0, y0), beta, curve.t[i]);
        CHECK(r >= curve.lower[i] - 1e-9);
        CHECK(r <= curve.upper[i] + 1e-9);
      }
  }

  // degenerate box: both envelopes collapse onto the closed form
  const PriorBox pt(3.0, 3.0, 80.0, 80.0);
  const auto flat = component_predictive_bounds(beta, pt, nullptr, grid);
  for (std::size_t i = 0; i < flat.t.size(); ++i) {
    const double r = predictive_reliability(PriorParams(3.0, 80.0), beta, flat.t[i]);
    CHECK(flat.lower[i] == doctest::Approx(r).epsilon(1e-9));
    CHECK(flat.upper[i] == doctest::Approx(r).epsilon(1e-9));
  }

  // posterior variant respects the data record
  const ObservationSet obs{{4.0}, 8.0, 3};
  const auto post = component_predictive_bounds(beta, box, &obs, make_time_grid(8.0, 20.0, 5));
  CHECK(post.t_now == 8.0);
  for (std::size_t i = 0; i < post.t.size(); ++i) CHECK(post.lower[i] <= post.upper[i] + 1e-12);
}

TEST_CASE("imprecision curve and time grid helpers") {
  BoundsCurve curve;
  curve.t = {8.0, 10.0, 12.0};
  curve.lower = {0.9, 0.5, 0.2};
  curve.upper = {0.95, 0.8, 0.6};
  curve.t_now = 8.0;

  const auto elapsed = imprecision_curve(curve, TimeScale::Elapsed);
  CHECK(elapsed.t == std::vector<double>{8.0, 10.0, 12.0});
  CHECK(elapsed.delta[1] == doctest::Approx(0.3));

  const auto prospective = imprecision_curve(curve, TimeScale::Prospective);
  CHECK(prospective.t == std::vector<double>{0.0, 2.0, 4.0});
  CHECK(prospective.delta == elapsed.delta);

  CHECK_THROWS_AS((void)make_time_grid(1.0, 1.0, 5), ValidationError);
  CHECK_THROWS_AS((void)make_time_grid(0.0, 1.0, 1), ValidationError);
  const auto grid = make_time_grid(2.0, 4.0, 5);
  CHECK(grid == std::vector<double>{2.0, 2.5, 3.0, 3.5, 4.0});

  const double horizon = default_horizon(brake::box_inputs(brake::case1()));
  CHECK(horizon > 8.0);
  CHECK(horizon == doctest::Approx(8.0 + 3.0 * 20.0).epsilon(1e-9));
}
