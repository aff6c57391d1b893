#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <vector>

#include "infbandit/experiments.hpp"

using namespace infbandit;

namespace {

RegretCurve synthetic_curve(const std::vector<std::int64_t>& horizons,
                            double coeff, double exponent) {
  RegretCurve c;
  c.policy_name = "synthetic";
  c.instance_id = "synthetic";
  c.horizons = horizons;
  c.n_seeds = 1;
  for (std::int64_t t : horizons)
    c.regrets.push_back(coeff * std::pow(static_cast<double>(t), exponent));
  c.regret_stderr.assign(horizons.size(), 0.0);
  return c;
}

}  // namespace

TEST_CASE("random instances are normalized, PSD and reproducible",
          "[experiments]") {
  for (std::uint64_t seed : {1ULL, 2ULL, 42ULL, 1234567ULL}) {
    const Instance a = random_instance(3, seed);
    CHECK(max_abs_norm(a.a) == 1.0);  // exact: the max entry divides itself
    CHECK(is_psd(a.a));
    CHECK(a.noise == NoiseModel::gaussian(1.0));
    const Instance b = random_instance(3, seed);
    CHECK(a.a == b.a);
    CHECK(a.initial_losses == b.initial_losses);
    const Instance c = random_instance(3, seed + 1);
    CHECK_FALSE(c.a == a.a);
  }
  CHECK_THROWS_AS(random_instance(1, 5), std::invalid_argument);
}

TEST_CASE("regret scan on the optimal fixed policy is identically zero",
          "[experiments]") {
  const auto curve =
      regret_scan(counterexample_instance(), "fixed:1", {4, 8, 16}, {1, 2});
  REQUIRE(curve.horizons == std::vector<std::int64_t>{4, 8, 16});
  for (double r : curve.regrets) REQUIRE(r == 0.0);
  for (double s : curve.regret_stderr) REQUIRE(s == 0.0);
  CHECK(curve.policy_name == "fixed:1");
  CHECK(curve.n_seeds == 2);
}

TEST_CASE("ilcb beats lcb on the counterexample at long horizons",
          "[experiments]") {
  const std::vector<std::int64_t> horizons{16384};
  const auto ilcb =
      regret_scan(counterexample_instance(), "ilcb", horizons, {1});
  const auto lcb = regret_scan(counterexample_instance(), "lcb", horizons, {1});
  CHECK(ilcb.regrets[0] < lcb.regrets[0]);
  CHECK(ilcb.regrets[0] > 0.0);
}

TEST_CASE("scan regret equals the single-run regret for one seed",
          "[experiments]") {
  // identical definition through two code paths
  auto policy = make_policy("ilcb", 2);
  const EpisodeTrace trace =
      run_policy(counterexample_instance(), *policy, 256, 7);
  const double direct = regret(counterexample_instance(), trace,
                               RegretBenchmark::automatic);
  const auto curve =
      regret_scan(counterexample_instance(), "ilcb", {256}, {7});
  CHECK(curve.regrets[0] == direct);
}

TEST_CASE("regret scan is invariant to seed order and to jobs",
          "[experiments][property]") {
  const Instance inst = random_instance(3, 99);
  const std::vector<std::int64_t> horizons{32, 64, 128};
  const std::vector<std::uint64_t> seeds{11, 22, 33, 44, 55};
  std::vector<std::uint64_t> reversed(seeds.rbegin(), seeds.rend());
  const auto a = regret_scan(inst, "ilcb", horizons, seeds);
  const auto b = regret_scan(inst, "ilcb", horizons, reversed);
  for (std::size_t h = 0; h < horizons.size(); ++h)
    REQUIRE(std::abs(a.regrets[h] - b.regrets[h]) <=
            1e-12 * std::max(1.0, std::abs(a.regrets[h])));

  ScanOptions three_jobs;
  three_jobs.jobs = 3;
  const auto c = regret_scan(inst, "ilcb", horizons, seeds, three_jobs);
  CHECK(c.regrets == a.regrets);  // bitwise: reduction order is fixed
  CHECK(c.regret_stderr == a.regret_stderr);
}

TEST_CASE("regret scan validates inputs", "[experiments]") {
  CHECK_THROWS_AS(regret_scan(counterexample_instance(), "ilcb", {}, {1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      regret_scan(counterexample_instance(), "ilcb", {8, 8}, {1}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      regret_scan(counterexample_instance(), "ilcb", {16, 8}, {1}),
      std::invalid_argument);
  CHECK_THROWS_AS(regret_scan(counterexample_instance(), "ilcb", {8}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(regret_scan(counterexample_instance(), "nope", {8}, {1}),
                  std::invalid_argument);
}

TEST_CASE("average curves is the pointwise mean", "[experiments]") {
  auto c1 = synthetic_curve({2, 4, 8}, 1.0, 1.0);
  auto c2 = synthetic_curve({2, 4, 8}, 3.0, 1.0);
  const auto avg = average_curves({c1, c2});
  CHECK(avg.instance_id == "(average)");
  CHECK(avg.n_seeds == 2);
  CHECK(avg.regrets == std::vector<double>{4.0, 8.0, 16.0});

  auto c3 = synthetic_curve({2, 4}, 1.0, 1.0);
  CHECK_THROWS_AS(average_curves({c1, c3}), std::invalid_argument);
  c3 = synthetic_curve({2, 4, 8}, 1.0, 1.0);
  c3.policy_name = "other";
  CHECK_THROWS_AS(average_curves({c1, c3}), std::invalid_argument);
  CHECK_THROWS_AS(average_curves({}), std::invalid_argument);
}

TEST_CASE("log-log slope recovers exact power laws", "[experiments]") {
  const std::vector<std::int64_t> horizons{128, 256, 512, 1024, 2048};
  const auto linear = fit_loglog_slope(synthetic_curve(horizons, 3.0, 1.0));
  CHECK(std::abs(linear.slope - 1.0) <= 1e-9);
  CHECK(linear.r_squared == Catch::Approx(1.0).margin(1e-12));
  CHECK(linear.n_points == 5);
  CHECK(linear.n_excluded == 0);

  const auto quad = fit_loglog_slope(synthetic_curve(horizons, 0.01, 2.0));
  CHECK(std::abs(quad.slope - 2.0) <= 1e-9);
  CHECK(quad.intercept == Catch::Approx(std::log(0.01)).epsilon(1e-9));
}

TEST_CASE("log-log slope drops non-positive points and reports them",
          "[experiments]") {
  auto curve = synthetic_curve({2, 4, 8, 16}, 1.0, 1.0);
  curve.regrets[0] = 0.0;
  curve.regrets[2] = -3.0;
  const auto fit = fit_loglog_slope(curve);
  CHECK(fit.n_points == 2);
  CHECK(fit.n_excluded == 2);
  CHECK(std::abs(fit.slope - 1.0) <= 1e-9);

  auto hopeless = synthetic_curve({2, 4, 8}, 1.0, 1.0);
  hopeless.regrets = {0.0, -1.0, 1.0};
  CHECK_THROWS_AS(fit_loglog_slope(hopeless), std::invalid_argument);
}

TEST_CASE("log-log slope is scale invariant", "[experiments][property]") {
  const std::vector<std::int64_t> horizons{128, 256, 512, 1024};
  auto base = synthetic_curve(horizons, 2.0, 1.37);
  // perturb off the exact power law so the fit is not degenerate
  for (std::size_t i = 0; i < base.regrets.size(); ++i)
    base.regrets[i] *= 1.0 + 0.01 * static_cast<double>(i % 2);
  const auto fit0 = fit_loglog_slope(base);
  for (double scale : {0.5, 3.0, 1e6}) {
    auto scaled = base;
    for (double& r : scaled.regrets) r *= scale;
    const auto fit = fit_loglog_slope(scaled);
    REQUIRE(std::abs(fit.slope - fit0.slope) <= 1e-12);
  }
}

TEST_CASE("slope histogram bins cover every fitted slope", "[experiments]") {
  SlopeHistogramOptions options;
  options.bins = 10;
  const auto hist =
      slope_histogram(3, 20, {128, 256, 512, 1024}, "ilcb", 7, options);
  REQUIRE(static_cast<int>(hist.entries.size()) + hist.n_failed == 20);
  REQUIRE(!hist.entries.empty());
  REQUIRE(hist.bin_edges.size() == 11);
  int total = 0;
  for (int c : hist.counts) total += c;
  CHECK(total == static_cast<int>(hist.entries.size()));
  for (const auto& e : hist.entries) {
    REQUIRE(e.fit.slope >= hist.bin_edges.front());
    REQUIRE(e.fit.slope <= hist.bin_edges.back());
  }
  // reproducibility: same master seed, same result
  const auto again =
      slope_histogram(3, 20, {128, 256, 512, 1024}, "ilcb", 7, options);
  REQUIRE(again.entries.size() == hist.entries.size());
  for (std::size_t i = 0; i < hist.entries.size(); ++i)
    REQUIRE(again.entries[i].fit.slope == hist.entries[i].fit.slope);
}

TEST_CASE("influential lcb bound formula", "[experiments]") {
  // ((5K+3)/2 + 2‖l1‖∞)·T + (2K + 2‖l1‖∞ + 4)·T·ln T
  CHECK(influential_lcb_regret_bound(2, 1.0, 10) ==
        Catch::Approx((6.5 + 2.0) * 10.0 + 10.0 * 10.0 * std::log(10.0))
            .epsilon(1e-12));
  CHECK(influential_lcb_regret_bound(3, 0.5, 100) ==
        Catch::Approx(10.0 * 100.0 + 11.0 * 100.0 * std::log(100.0))
            .epsilon(1e-12));
  // the bound grows superlinearly but subquadratically
  const double at1k = influential_lcb_regret_bound(2, 1.0, 1000);
  const double at2k = influential_lcb_regret_bound(2, 1.0, 2000);
  CHECK(at2k > 2.0 * at1k);
  CHECK(at2k < 4.0 * at1k);
}

TEST_CASE("horizon grammar parses lists and geometric ranges",
          "[experiments]") {
  CHECK(parse_horizons("128,256,512") ==
        std::vector<std::int64_t>{128, 256, 512});
  CHECK(parse_horizons("128:1024:x2") ==
        std::vector<std::int64_t>{128, 256, 512, 1024});
  CHECK(parse_horizons("128:16384:x2") ==
        std::vector<std::int64_t>{128, 256, 512, 1024, 2048, 4096, 8192,
                                  16384});
  CHECK(parse_horizons("10:100:x3.16") ==
        std::vector<std::int64_t>{10, 32, 100});
  CHECK(parse_horizons("7") == std::vector<std::int64_t>{7});

  CHECK_THROWS_AS(parse_horizons(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_horizons("8,4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_horizons("8,8"), std::invalid_argument);
  CHECK_THROWS_AS(parse_horizons("0,4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_horizons("1:10"), std::invalid_argument);
  CHECK_THROWS_AS(parse_horizons("1:10:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_horizons("1:10:x1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_horizons("10:1:x2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_horizons("a,b"), std::invalid_argument);
}

TEST_CASE("instance grammar resolves names, seeds and files",
          "[experiments]") {
  const auto p2 = parse_instance_spec("prop2", 1);
  CHECK(p2.id == "prop2");
  CHECK(p2.instance.a == counterexample_instance().a);

  const auto p3 = parse_instance_spec("prop3", 1);
  CHECK(p3.id == "prop3");
  CHECK(p3.instance.a == linear_regret_instance().a);

  const auto r = parse_instance_spec("random:k=3:seed=5", 1);
  CHECK(r.id == "random:k=3:seed=5");
  CHECK(r.instance.a == random_instance(3, 5).a);

  // unseeded spec derives the seed from the master deterministically
  const auto d1 = parse_instance_spec("random:k=3", 42);
  const auto d2 = parse_instance_spec("random:k=3", 42);
  CHECK(d1.id == d2.id);
  CHECK(d1.instance.a == d2.instance.a);
  const auto d3 = parse_instance_spec("random:k=3", 43);
  CHECK_FALSE(d3.id == d1.id);

  CHECK_THROWS_AS(parse_instance_spec("prop4", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_instance_spec("random:k=1", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_instance_spec("random:k=x", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_instance_spec("random:k=3:seed=-2", 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_instance_spec("file:/nonexistent/f.json", 1),
                  std::exception);
}

TEST_CASE("csv writers emit the documented schemas", "[experiments]") {
  auto curve = synthetic_curve({2, 4}, 1.0, 1.0);
  curve.policy_name = "ilcb";
  curve.instance_id = "prop2";
  curve.seed = 9;
  std::ostringstream curves_out;
  write_regret_curve_csv(curves_out, {curve});
  CHECK(curves_out.str() ==
        "policy,instance,T,regret_mean,regret_stderr,n_seeds\n"
        "ilcb,prop2,2,2,0,1\n"
        "ilcb,prop2,4,4,0,1\n");

  SlopeRow row;
  row.instance_id = "prop2";
  row.seed = 3;
  row.fit.slope = 1.5;
  row.fit.intercept = -0.5;
  row.fit.r_squared = 1.0;
  row.fit.n_points = 4;
  std::ostringstream slopes_out;
  write_slopes_csv(slopes_out, {row});
  CHECK(slopes_out.str() ==
        "instance,seed,slope,intercept,r2,n_points\n"
        "prop2,3,1.5,-0.5,1,4\n");

  SlopeHistogram hist;
  hist.bin_edges = {0.0, 0.5, 1.0};
  hist.counts = {2, 3};
  std::ostringstream hist_out;
  write_histogram_csv(hist_out, hist);
  CHECK(hist_out.str() ==
        "bin_lo,bin_hi,count\n"
        "0,0.5,2\n"
        "0.5,1,3\n");
}
