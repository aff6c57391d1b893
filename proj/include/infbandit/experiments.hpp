#pragma once

// Experiment drivers: random instance generation, regret-vs-horizon scans
// averaged over seeds, log-log slope regression, and per-instance slope
// histograms. Everything is seeded through one master seed with per-task
// derivation so parallel runs reduce to identical results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "infbandit/benchmark.hpp"
#include "infbandit/core.hpp"
#include "infbandit/env.hpp"
#include "infbandit/io.hpp"
#include "infbandit/parallel.hpp"
#include "infbandit/policies.hpp"
#include "infbandit/rng.hpp"

namespace infbandit {

// Seed-averaged regret at several horizons for one policy on one instance.
struct RegretCurve {
  std::string policy_name;
  std::string instance_id;
  std::uint64_t seed = 0;  // first seed of the averaged batch
  std::vector<std::int64_t> horizons;
  std::vector<double> regrets;        // mean over seeds
  std::vector<double> regret_stderr;  // sample standard error over seeds
  int n_seeds = 0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_points = 0;    // points used (regret > 0)
  int n_excluded = 0;  // points dropped because regret ≤ 0
};

// Random problem: A = BᵀB / max|BᵀB| with B standard normal (so A is PSD
// with max-abs norm exactly 1), l1 standard normal, unit gaussian noise.
inline Instance random_instance(int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("random_instance: k must be >= 2");
  for (std::uint64_t attempt = 0;; ++attempt) {
    // BᵀB = 0 has probability zero but would divide by zero; resample
    const std::uint64_t s =
        attempt == 0 ? seed : rng::derive(seed, attempt);
    rng::Stream stream(s);
    std::vector<double> b(static_cast<std::size_t>(k) * k);
    for (double& v : b) v = stream.next_gaussian();
    InteractionMatrix gram = InteractionMatrix::gram(b, k);
    const double scale = max_abs_norm(gram);
    if (scale == 0.0) continue;
    std::vector<double> e = gram.entries();
    for (double& v : e) v /= scale;
    InteractionMatrix a(k, std::move(e), /*psd_certified=*/true);
    std::vector<double> l1(static_cast<std::size_t>(k));
    for (double& v : l1) v = stream.next_gaussian();
    return Instance(std::move(a), std::move(l1), NoiseModel::gaussian(1.0));
  }
}

struct ScanOptions {
  RegretBenchmark benchmark = RegretBenchmark::automatic;
  int jobs = 1;
  QpOptions qp;
};

// Mean regret over seeds at each horizon: fresh runs of length T per seed,
// benchmark value computed once per horizon. The mean is reduced in seed
// order, so results do not depend on worker scheduling.
inline RegretCurve regret_scan(const Instance& inst,
                               const std::string& policy_spec,
                               const std::vector<std::int64_t>& horizons,
                               const std::vector<std::uint64_t>& seeds,
                               const ScanOptions& options = {}) {
  if (horizons.empty())
    throw std::invalid_argument("regret_scan: empty horizon list");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1)
      throw std::invalid_argument("regret_scan: horizons must be >= 1");
    if (i > 0 && horizons[i] <= horizons[i - 1])
      throw std::invalid_argument("regret_scan: horizons must be increasing");
  }
  if (seeds.empty()) throw std::invalid_argument("regret_scan: no seeds");

  // benchmark totals per horizon
  std::vector<double> bench(horizons.size());
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const std::int64_t T = horizons[h];
    std::optional<double> exact;
    if (options.benchmark != RegretBenchmark::continuous)
      exact = known_exact_optimum(inst, T);
    if (options.benchmark == RegretBenchmark::exact_optimum && !exact)
      throw std::invalid_argument(
          "regret_scan: no analytic optimum known for this instance");
    bench[h] = exact ? *exact
                     : solve_simplex_qp(effective_linear_term(inst), inst.a, T,
                                        options.qp)
                           .value;
  }

  // realized totals per (seed, horizon)
  std::vector<std::vector<double>> totals(
      seeds.size(), std::vector<double>(horizons.size(), 0.0));
  parallel_for_index(
      static_cast<std::int64_t>(seeds.size()), options.jobs,
      [&](std::int64_t si) {
        auto policy = make_policy(policy_spec, inst.k());
        for (std::size_t h = 0; h < horizons.size(); ++h) {
          const EpisodeTrace trace = run_policy(
              inst, *policy, horizons[h], seeds[static_cast<std::size_t>(si)]);
          totals[static_cast<std::size_t>(si)][h] = total_loss_closed_form(
              inst, PullCounts::from_arms(trace.arms, inst.k()));
        }
      });

  RegretCurve curve;
  curve.policy_name = make_policy(policy_spec, inst.k())->name();
  curve.instance_id = "";
  curve.seed = seeds.front();
  curve.horizons = horizons;
  curve.n_seeds = static_cast<int>(seeds.size());
  curve.regrets.resize(horizons.size());
  curve.regret_stderr.resize(horizons.size());
  const double n = static_cast<double>(seeds.size());
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    double mean = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si)
      mean += totals[si][h] - bench[h];
    mean /= n;
    double var = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const double d = (totals[si][h] - bench[h]) - mean;
      var += d * d;
    }
    curve.regrets[h] = mean;
    curve.regret_stderr[h] =
        seeds.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  }
  return curve;
}

// Pointwise average of aligned curves (same horizons, same policy); stderr is
// the sample standard error across the input curves' means.
inline RegretCurve average_curves(const std::vector<RegretCurve>& curves) {
  if (curves.empty())
    throw std::invalid_argument("average_curves: empty input");
  const RegretCurve& first = curves.front();
  for (const RegretCurve& c : curves) {
    if (c.horizons != first.horizons)
      throw std::invalid_argument("average_curves: horizon grids differ");
    if (c.policy_name != first.policy_name)
      throw std::invalid_argument("average_curves: policies differ");
  }
  RegretCurve out;
  out.policy_name = first.policy_name;
  out.instance_id = "(average)";
  out.seed = first.seed;
  out.horizons = first.horizons;
  out.n_seeds = static_cast<int>(curves.size());
  out.regrets.resize(first.horizons.size());
  out.regret_stderr.resize(first.horizons.size());
  const double n = static_cast<double>(curves.size());
  for (std::size_t h = 0; h < first.horizons.size(); ++h) {
    double mean = 0.0;
    for (const RegretCurve& c : curves) mean += c.regrets[h];
    mean /= n;
    double var = 0.0;
    for (const RegretCurve& c : curves) {
      const double d = c.regrets[h] - mean;
      var += d * d;
    }
    out.regrets[h] = mean;
    out.regret_stderr[h] =
        curves.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  }
  return out;
}

// Ordinary least squares on (ln T, ln regret), skipping points with
// regret ≤ 0 (their count is reported in n_excluded).
inline SlopeFit fit_loglog_slope(const RegretCurve& curve) {
  std::vector<double> xs;
  std::vector<double> ys;
  int excluded = 0;
  for (std::size_t i = 0; i < curve.horizons.size(); ++i) {
    if (curve.regrets[i] > 0.0) {
      xs.push_back(std::log(static_cast<double>(curve.horizons[i])));
      ys.push_back(std::log(curve.regrets[i]));
    } else {
      ++excluded;
    }
  }
  if (xs.size() < 2)
    throw std::invalid_argument(
        "fit_loglog_slope: fewer than 2 positive-regret points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.n_points = static_cast<int>(xs.size());
  fit.n_excluded = excluded;
  return fit;
}

struct SlopeHistogramEntry {
  std::string instance_id;
  std::uint64_t instance_seed = 0;
  std::uint64_t run_seed = 0;
  SlopeFit fit;
};

struct SlopeHistogram {
  std::vector<SlopeHistogramEntry> entries;  // one per instance with a fit
  int n_failed = 0;          // instances with < 2 positive-regret points
  std::vector<double> bin_edges;  // n_bins + 1 edges covering all slopes
  std::vector<int> counts;        // per bin
};

struct SlopeHistogramOptions {
  int bins = 20;
  int jobs = 1;
  QpOptions qp;
};

// One slope per random instance (single seed per instance), then a histogram
// over the fitted slopes. Instance i uses derived seeds (2i) for the
// instance and (2i+1) for the run, so the set is reproducible from the
// master seed alone.
inline SlopeHistogram slope_histogram(int k, int n_instances,
                                      const std::vector<std::int64_t>& horizons,
                                      const std::string& policy_spec,
                                      std::uint64_t master_seed,
                                      const SlopeHistogramOptions& options = {}) {
  if (n_instances < 1)
    throw std::invalid_argument("slope_histogram: n_instances must be >= 1");
  if (options.bins < 1)
    throw std::invalid_argument("slope_histogram: bins must be >= 1");

  std::vector<std::optional<SlopeHistogramEntry>> results(
      static_cast<std::size_t>(n_instances));
  parallel_for_index(n_instances, options.jobs, [&](std::int64_t i) {
    const std::uint64_t inst_seed =
        rng::derive(master_seed, 2 * static_cast<std::uint64_t>(i));
    const std::uint64_t run_seed =
        rng::derive(master_seed, 2 * static_cast<std::uint64_t>(i) + 1);
    const Instance inst = random_instance(k, inst_seed);
    ScanOptions scan_options;
    scan_options.qp = options.qp;
    const RegretCurve curve =
        regret_scan(inst, policy_spec, horizons, {run_seed}, scan_options);
    SlopeHistogramEntry entry;
    entry.instance_id =
        "random:k=" + std::to_string(k) + ":seed=" + std::to_string(inst_seed);
    entry.instance_seed = inst_seed;
    entry.run_seed = run_seed;
    try {
      entry.fit = fit_loglog_slope(curve);
    } catch (const std::invalid_argument&) {
      return;  // too few positive points; counted below
    }
    results[static_cast<std::size_t>(i)] = std::move(entry);
  });

  SlopeHistogram hist;
  for (auto& r : results) {
    if (r)
      hist.entries.push_back(std::move(*r));
    else
      ++hist.n_failed;
  }
  if (!hist.entries.empty()) {
    double lo = hist.entries.front().fit.slope;
    double hi = lo;
    for (const auto& e : hist.entries) {
      lo = std::min(lo, e.fit.slope);
      hi = std::max(hi, e.fit.slope);
    }
    const double pad =
        1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
    lo -= pad;
    hi += pad;
    const int bins = options.bins;
    hist.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b)
      hist.bin_edges[static_cast<std::size_t>(b)] =
          lo + (hi - lo) * static_cast<double>(b) / bins;
    hist.counts.assign(static_cast<std::size_t>(bins), 0);
    for (const auto& e : hist.entries) {
      int b = static_cast<int>((e.fit.slope - lo) / (hi - lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      ++hist.counts[static_cast<std::size_t>(b)];
    }
  }
  return hist;
}

// Regret bound of the influential LCB policy under bounded unit noise:
// ((5K+3)/2 + 2·‖l1‖∞)·T + (2K + 2·‖l1‖∞ + 4)·T·ln T.
inline double influential_lcb_regret_bound(int k, double l1_sup_norm,
                                           std::int64_t horizon) {
  const double T = static_cast<double>(horizon);
  const double kd = static_cast<double>(k);
  return ((5.0 * kd + 3.0) / 2.0 + 2.0 * l1_sup_norm) * T +
         (2.0 * kd + 2.0 * l1_sup_norm + 4.0) * T * std::log(T);
}

inline void write_regret_curve_csv(std::ostream& out,
                                   const std::vector<RegretCurve>& curves) {
  out << "policy,instance,T,regret_mean,regret_stderr,n_seeds\n";
  for (const RegretCurve& c : curves)
    for (std::size_t h = 0; h < c.horizons.size(); ++h)
      out << c.policy_name << ',' << c.instance_id << ',' << c.horizons[h]
          << ',' << io::format_double(c.regrets[h]) << ','
          << io::format_double(c.regret_stderr[h]) << ',' << c.n_seeds << '\n';
}

struct SlopeRow {
  std::string instance_id;
  std::uint64_t seed = 0;
  SlopeFit fit;
};

inline void write_slopes_csv(std::ostream& out,
                             const std::vector<SlopeRow>& rows) {
  out << "instance,seed,slope,intercept,r2,n_points\n";
  for (const SlopeRow& r : rows)
    out << r.instance_id << ',' << r.seed << ','
        << io::format_double(r.fit.slope) << ','
        << io::format_double(r.fit.intercept) << ','
        << io::format_double(r.fit.r_squared) << ',' << r.fit.n_points << '\n';
}

inline void write_histogram_csv(std::ostream& out, const SlopeHistogram& hist) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < hist.counts.size(); ++b)
    out << io::format_double(hist.bin_edges[b]) << ','
        << io::format_double(hist.bin_edges[b + 1]) << ',' << hist.counts[b]
        << '\n';
}

// Horizon grammar: either a comma list "128,256,512" or a geometric range
// "start:end:x<factor>" (inclusive of start; stops once past end).
inline std::vector<std::int64_t> parse_horizons(const std::string& spec) {
  std::vector<std::int64_t> out;
  if (spec.find(':') != std::string::npos) {
    const auto parts = io::split(spec, ':');
    if (parts.size() != 3 || parts[2].size() < 2 || parts[2][0] != 'x')
      throw std::invalid_argument(
          "horizons: expected start:end:x<factor>, got '" + spec + "'");
    std::int64_t start = 0, end = 0;
    double factor = 0.0;
    if (!io::parse_int64(parts[0], start) || !io::parse_int64(parts[1], end) ||
        !io::parse_double(parts[2].substr(1), factor))
      throw std::invalid_argument("horizons: bad number in '" + spec + "'");
    if (start < 1 || end < start || !(factor > 1.0))
      throw std::invalid_argument(
          "horizons: need start >= 1, end >= start, factor > 1");
    double t = static_cast<double>(start);
    while (t <= static_cast<double>(end) + 0.5) {
      const auto ti = static_cast<std::int64_t>(std::llround(t));
      if (out.empty() || ti > out.back()) out.push_back(ti);
      t *= factor;
    }
    return out;
  }
  for (const std::string& tok : io::split(spec, ',')) {
    std::int64_t t = 0;
    if (!io::parse_int64(tok, t) || t < 1)
      throw std::invalid_argument("horizons: bad value '" + tok + "'");
    if (!out.empty() && t <= out.back())
      throw std::invalid_argument("horizons: list must be increasing");
    out.push_back(t);
  }
  if (out.empty()) throw std::invalid_argument("horizons: empty list");
  return out;
}

struct ParsedInstance {
  Instance instance;
  std::string id;  // canonical spelling with the resolved seed
};

// Instance grammar: `prop2` (two-arm counterexample), `prop3` (linear-regret
// instance), `random:k=<K>[:seed=<S>]` (seed derived from the master seed
// when omitted), or `file:<path>` (instance JSON).
inline ParsedInstance parse_instance_spec(const std::string& spec,
                                          std::uint64_t master_seed) {
  if (spec == "prop2") return {counterexample_instance(), "prop2"};
  if (spec == "prop3") return {linear_regret_instance(), "prop3"};
  if (spec.rfind("random:k=", 0) == 0) {
    std::string rest = spec.substr(9);
    std::uint64_t seed = rng::derive(master_seed, 0x696e7374u);  // default
    std::string k_part = rest;
    const auto seed_pos = rest.find(":seed=");
    if (seed_pos != std::string::npos) {
      k_part = rest.substr(0, seed_pos);
      std::uint64_t s = 0;  // full range: derived seeds exceed int64
      if (!io::parse_uint64(rest.substr(seed_pos + 6), s))
        throw std::invalid_argument("instance spec: bad seed in '" + spec + "'");
      seed = s;
    }
    std::int64_t k = 0;
    if (!io::parse_int64(k_part, k) || k < 2)
      throw std::invalid_argument("instance spec: bad k in '" + spec + "'");
    return {random_instance(static_cast<int>(k), seed),
            "random:k=" + std::to_string(k) + ":seed=" + std::to_string(seed)};
  }
  if (spec.rfind("file:", 0) == 0) {
    const std::string path = spec.substr(5);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("instance spec: bad json in '" + path +
                                  "': " + e.what());
    }
    return {instance_from_json(j), spec};
  }
  throw std::invalid_argument("instance spec: unknown instance '" + spec +
                              "' (expected prop2, prop3, random:k=<K>, file:<path>)");
}

}  // namespace infbandit
