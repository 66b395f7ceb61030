#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "evcatch/estimator.hpp"
#include "evcatch/errors.hpp"
#include "evcatch/rng.hpp"

using namespace evcatch;

namespace {

// Independent direct solve of the weighted normal equations, seconds
// relative to the earliest observation.
struct DirectFit {
  double intercept = 0, slope = 0;
};

DirectFit direct_wls(std::span<const FramePrediction> obs) {
  TimestampUs t0 = obs.front().t_us;
  for (const auto& o : obs) t0 = std::min(t0, o.t_us);
  double sw = 0, st = 0, stt = 0, sd = 0, std_ = 0;
  for (const auto& o : obs) {
    const double t = static_cast<double>(o.t_us - t0) * 1e-6;
    const double w = 1.0 / (o.sigma_m * o.sigma_m);
    sw += w;
    st += w * t;
    stt += w * t * t;
    sd += w * o.d_m;
    std_ += w * t * o.d_m;
  }
  const double det = sw * stt - st * st;
  DirectFit fit;
  fit.slope = (sw * std_ - st * sd) / det;
  fit.intercept = (sd - fit.slope * st) / sw;
  return fit;
}

std::vector<FramePrediction> noisy_affine(double intercept, double slope,
                                          int n, double sigma_scale,
                                          std::uint64_t seed,
                                          TimestampUs t_impact) {
  Rng rng(seed);
  std::vector<FramePrediction> obs;
  for (int k = 1; k <= n; ++k) {
    FramePrediction p;
    p.t_us = k * 10000;
    const double t = p.t_us * 1e-6;
    p.sigma_m = sigma_scale * rng.uniform(0.5, 2.0);
    p.d_m = intercept + slope * t + p.sigma_m * rng.gaussian();
    p.ttc_us = static_cast<double>(t_impact - p.t_us);
    obs.push_back(p);
  }
  return obs;
}

}  // namespace

TEST_CASE("push_observation contracts") {
  WlsState state;
  FramePrediction p{10000, 0.1, 0.01, 100000.0};
  state.push(p);

  SUBCASE("sigma <= 0 is rejected") {
    FramePrediction bad = p;
    bad.sigma_m = 0.0;
    CHECK_THROWS_AS(state.push(bad), ContractError);
    bad.sigma_m = -1.0;
    CHECK_THROWS_AS(state.push(bad), ContractError);
  }

  SUBCASE("one observation is underdetermined") {
    CHECK_THROWS_AS(state.fit(), UnderdeterminedError);
  }

  SUBCASE("identical timestamps stay underdetermined") {
    FramePrediction same = p;
    same.d_m = 0.2;
    state.push(same);
    CHECK_THROWS_AS(state.fit(), UnderdeterminedError);
  }
}

TEST_CASE("noiseless affine recovery is exact") {
  // x(t) = 0.2 + 1.5 t with exact ttc pointing at t_impact.
  const double intercept = 0.2, slope = 1.5;
  const TimestampUs t_impact = 400000;
  WlsState state;
  for (int k = 1; k <= 12; ++k) {
    FramePrediction p;
    p.t_us = k * 10000;
    p.d_m = intercept + slope * (p.t_us * 1e-6);
    p.sigma_m = 0.003 + 0.001 * k;  // any positive sigmas
    p.ttc_us = static_cast<double>(t_impact - p.t_us);
    state.push(p);
  }
  const ImpactEstimate est = state.fit();
  const double x_true = intercept + slope * (t_impact * 1e-6);
  CHECK(std::fabs(est.x_impact_m - x_true) < 1e-9);
  CHECK(est.x_impact_m ==
        est.intercept_m + est.slope_mps * est.t_bar_s);  // by construction
  CHECK(est.t_bar_abs_us() == t_impact);
}

TEST_CASE("push order does not matter") {
  const auto obs = noisy_affine(0.1, 0.8, 50, 0.01, 99, 500000);
  WlsState forward;
  for (const auto& o : obs) forward.push(o);

  auto shuffled = obs;
  Rng rng(7);
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1],
              shuffled[rng.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);
  }
  WlsState permuted;
  for (const auto& o : shuffled) permuted.push(o);

  const ImpactEstimate a = forward.fit();
  const ImpactEstimate b = permuted.fit();
  CHECK(std::fabs(a.intercept_m - b.intercept_m) < 1e-12);
  CHECK(std::fabs(a.slope_mps - b.slope_mps) < 1e-12);
  CHECK(std::fabs(a.x_impact_m - b.x_impact_m) < 1e-12);
}

TEST_CASE("a huge-sigma observation is negligible") {
  const auto obs = noisy_affine(0.05, 1.2, 20, 0.01, 3, 400000);
  WlsState without;
  for (const auto& o : obs) without.push(o);

  WlsState with = without;
  FramePrediction junk;
  junk.t_us = 60000;
  junk.d_m = 50.0;  // absurd position
  junk.sigma_m = 1e6;
  junk.ttc_us = 340000.0;
  with.push(junk);

  auto with_obs = obs;
  with_obs.push_back(junk);
  const DirectFit oracle_without = direct_wls(obs);
  const DirectFit oracle_with = direct_wls(with_obs);
  const ImpactEstimate est_without = without.fit();
  const ImpactEstimate est_with = with.fit();

  CHECK(est_without.intercept_m ==
        doctest::Approx(oracle_without.intercept).epsilon(1e-10));
  CHECK(est_with.intercept_m ==
        doctest::Approx(oracle_with.intercept).epsilon(1e-10));

  // x_impact at the same extrapolation point moves by < 1e-6 m. t_bar is an
  // unweighted mean, so evaluate both fits at the clean t_bar.
  const double t_eval = est_without.t_bar_s;
  const double x_without = est_without.intercept_m + est_without.slope_mps * t_eval;
  const double x_with = est_with.intercept_m + est_with.slope_mps * t_eval;
  CHECK(std::fabs(x_with - x_without) < 1e-6);
}

TEST_CASE("equal sigmas reduce to ordinary least squares") {
  Rng rng(11);
  WlsState state;
  std::vector<double> ts, ds;
  for (int k = 1; k <= 30; ++k) {
    FramePrediction p;
    p.t_us = k * 10000;
    p.d_m = 0.3 - 0.4 * (p.t_us * 1e-6) + 0.01 * rng.gaussian();
    p.sigma_m = 0.25;  // equal everywhere
    p.ttc_us = 1e5;
    state.push(p);
    ts.push_back((p.t_us - 10000) * 1e-6);
    ds.push_back(p.d_m);
  }
  // OLS oracle.
  const double n = static_cast<double>(ts.size());
  double st = 0, stt = 0, sd = 0, std_ = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    stt += ts[i] * ts[i];
    sd += ds[i];
    std_ += ts[i] * ds[i];
  }
  const double slope = (n * std_ - st * sd) / (n * stt - st * st);
  const double intercept = (sd - slope * st) / n;

  const ImpactEstimate est = state.fit();
  CHECK(std::fabs(est.slope_mps - slope) < 1e-12);
  CHECK(std::fabs(est.intercept_m - intercept) < 1e-12);
}

TEST_CASE("gross outlier with inflated sigma is absorbed") {
  // 20 observations, one position off by 1 m carrying 100x sigma.
  const double intercept = 0.1, slope = 0.9;
  const TimestampUs t_impact = 350000;
  Rng rng(21);
  std::vector<FramePrediction> obs;
  for (int k = 1; k <= 20; ++k) {
    FramePrediction p;
    p.t_us = k * 10000;
    p.sigma_m = 0.01;
    p.d_m = intercept + slope * (p.t_us * 1e-6) + p.sigma_m * rng.gaussian();
    p.ttc_us = static_cast<double>(t_impact - p.t_us);
    obs.push_back(p);
  }
  auto corrupted = obs;
  corrupted[7].d_m += 1.0;
  corrupted[7].sigma_m *= 100.0;

  WlsState clean_state, outlier_state;
  for (const auto& o : obs) clean_state.push(o);
  for (const auto& o : corrupted) outlier_state.push(o);

  const double x_true = intercept + slope * (t_impact * 1e-6);
  const double err_clean = std::fabs(clean_state.fit().x_impact_m - x_true);
  const double err_outlier = std::fabs(outlier_state.fit().x_impact_m - x_true);
  CHECK(err_outlier < 2.0 * err_clean);

  const DirectFit oracle = direct_wls(corrupted);
  const ImpactEstimate est = outlier_state.fit();
  CHECK(est.intercept_m == doctest::Approx(oracle.intercept).epsilon(1e-10));
  CHECK(est.slope_mps == doctest::Approx(oracle.slope).epsilon(1e-10));
}

TEST_CASE("uniform sigma scaling leaves beta unchanged") {
  const auto obs = noisy_affine(-0.2, 1.1, 40, 0.02, 31, 600000);
  WlsState state;
  for (const auto& o : obs) state.push(o);
  CHECK(state.scale_invariance_check(1.0));
  CHECK(state.scale_invariance_check(10.0));
  CHECK(state.scale_invariance_check(1e-3));
}

TEST_CASE("streaming accumulation equals batch solve") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto obs = noisy_affine(0.0, 0.5, 25, 0.015, seed, 450000);
    WlsState state;
    for (const auto& o : obs) state.push(o);
    const DirectFit oracle = direct_wls(obs);
    const ImpactEstimate est = state.fit();
    CHECK(std::fabs(est.intercept_m - oracle.intercept) < 1e-10);
    CHECK(std::fabs(est.slope_mps - oracle.slope) < 1e-10);
  }
}

TEST_CASE("inflating one sigma moves the fit monotonically toward leaving it out") {
  const auto obs = noisy_affine(0.12, 0.7, 15, 0.01, 77, 380000);
  WlsState without;
  for (std::size_t i = 0; i + 1 < obs.size(); ++i) without.push(obs[i]);
  const double t_eval = 0.38;
  const ImpactEstimate base = without.fit();
  const double x_without = base.intercept_m + base.slope_mps * t_eval;

  double prev_dist = 1e300;
  for (double scale : {1.0, 3.0, 10.0, 100.0, 1e4, 1e6}) {
    WlsState with = without;
    FramePrediction last = obs.back();
    last.d_m += 0.5;  // pull the fit away
    last.sigma_m *= scale;
    with.push(last);
    const ImpactEstimate est = with.fit();
    const double x_with = est.intercept_m + est.slope_mps * t_eval;
    const double dist = std::fabs(x_with - x_without);
    CHECK(dist < prev_dist + 1e-15);
    prev_dist = dist;
  }
}

TEST_CASE("degenerate systems raise errors the pipeline can catch") {
  WlsState state;
  // Two observations a microsecond apart: condition blowup.
  state.push(FramePrediction{100000, 0.1, 0.01, 1000.0});
  state.push(FramePrediction{100001, 0.1000001, 0.01, 1000.0});
  CHECK_THROWS_AS(state.fit(), Error);
}

TEST_CASE("value semantics of push_observation") {
  WlsState base;
  base.push(FramePrediction{10000, 0.1, 0.01, 90000.0});
  const WlsState derived =
      push_observation(base, FramePrediction{20000, 0.2, 0.01, 80000.0});
  CHECK(base.count() == 1);
  CHECK(derived.count() == 2);
}

TEST_CASE("fit trace replay emits one row per prediction") {
  const auto obs = noisy_affine(0.0, 1.0, 8, 0.01, 5, 300000);
  const auto rows = replay_fit_trace(obs);
  REQUIRE(rows.size() == obs.size());
  CHECK(rows.front().n == 1);
  CHECK(rows.back().n == 8);
  CHECK(std::isnan(rows.front().x_impact_m));  // underdetermined at n=1
  CHECK(!std::isnan(rows.back().x_impact_m));
}
