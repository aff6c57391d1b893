// infbandit — command-line front end for the interacting-loss bandit toolkit.
//
// Subcommands: run (one episode), scan (regret vs horizon), histogram
// (per-instance slope distribution), fit (interaction model estimation from
// rating logs), probe (live probing estimator demo), qp (continuous
// benchmark solver), rerun (replay any command from its meta.json).
//
// Every command writes meta.json (command, resolved config, master seed,
// version) into the output directory; rerunning from it reproduces all
// outputs byte for byte. Exit codes: 0 success, 1 runtime failure,
// 2 usage/config error.

#include <atomic>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "infbandit/benchmark.hpp"
#include "infbandit/core.hpp"
#include "infbandit/env.hpp"
#include "infbandit/estimation.hpp"
#include "infbandit/experiments.hpp"
#include "infbandit/io.hpp"
#include "infbandit/parallel.hpp"
#include "infbandit/policies.hpp"
#include "infbandit/rng.hpp"
#include "infbandit/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void handle_signal(int) { g_interrupted = 1; }

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path))
    throw std::invalid_argument(what + ": no such file: " + path);
}

void write_text_file(const fs::path& path, const std::string& content) {
  infbandit::io::write_file(path.string(), content);
}

void write_json_file(const fs::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_meta(const fs::path& out_dir, const std::string& command,
                const json& config, std::uint64_t seed) {
  write_json_file(out_dir / "meta.json",
                  json{{"command", command},
                       {"config", config},
                       {"seed", seed},
                       {"version", infbandit::kVersion}});
}

std::vector<std::int64_t> horizons_from_config(const json& config) {
  return config.at("horizons").get<std::vector<std::int64_t>>();
}

infbandit::Parametrization parametrization_from_name(const std::string& name) {
  if (name == "psd") return infbandit::Parametrization::psd;
  if (name == "indefinite") return infbandit::Parametrization::indefinite;
  throw std::invalid_argument("fit: unknown parametrization '" + name +
                              "' (expected psd or indefinite)");
}

infbandit::NormKind norm_from_name(const std::string& name) {
  if (name == "max_abs") return infbandit::NormKind::max_abs;
  if (name == "frobenius") return infbandit::NormKind::frobenius;
  if (name == "spectral") return infbandit::NormKind::spectral;
  throw std::invalid_argument("fit: unknown norm '" + name +
                              "' (expected max_abs, frobenius or spectral)");
}

// Map file for arm names: one `name,index` pair per line, 0-based indices.
std::map<std::string, int> load_arm_map(const std::string& path, int k) {
  require_file(path, "arm map");
  std::map<std::string, int> map;
  const auto lines = infbandit::io::split(infbandit::io::read_file(path), '\n');
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = infbandit::io::trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    const auto parts = infbandit::io::split(line, ',');
    std::int64_t index = 0;
    if (parts.size() != 2 ||
        !infbandit::io::parse_int64(parts[1], index)) {
      throw std::invalid_argument("arm map line " + std::to_string(ln + 1) +
                                  ": expected name,index");
    }
    const std::string name = infbandit::io::trim(parts[0]);
    if (name.empty() || index < 0 || index >= k)
      throw std::invalid_argument("arm map line " + std::to_string(ln + 1) +
                                  ": bad name or index out of [0," +
                                  std::to_string(k) + ")");
    if (!map.emplace(name, static_cast<int>(index)).second)
      throw std::invalid_argument("arm map line " + std::to_string(ln + 1) +
                                  ": duplicate name '" + name + "'");
  }
  if (map.empty()) throw std::invalid_argument("arm map: no entries");
  return map;
}

// Derivation scheme shared by scan and histogram so both see the same
// random instances for one master seed: instance i uses derive(master, 2i);
// run seeds come from derive(master, 2i+1) (hashed again per seed index).
std::uint64_t instance_seed(std::uint64_t master, std::int64_t i) {
  return infbandit::rng::derive(master, 2 * static_cast<std::uint64_t>(i));
}

std::uint64_t run_seed_base(std::uint64_t master, std::int64_t i) {
  return infbandit::rng::derive(master, 2 * static_cast<std::uint64_t>(i) + 1);
}

// ---------------------------------------------------------------------------
// command implementations; config is fully resolved (instance seeds explicit)

void execute_run(const json& config, std::uint64_t seed,
                 const fs::path& out_dir) {
  const auto parsed = infbandit::parse_instance_spec(
      config.at("instance").get<std::string>(), seed);
  const infbandit::Instance& inst = parsed.instance;
  const auto policy =
      infbandit::make_policy(config.at("policy").get<std::string>(), inst.k());
  const std::int64_t horizon = config.at("T").get<std::int64_t>();

  const infbandit::EpisodeTrace trace =
      infbandit::run_policy(inst, *policy, horizon, seed);

  std::ostringstream trace_csv;
  infbandit::write_trace_csv(trace_csv, trace);
  write_text_file(out_dir / "trace.csv", trace_csv.str());

  const infbandit::PullCounts counts =
      infbandit::PullCounts::from_arms(trace.arms, inst.k());
  const double total_expected = infbandit::total_loss_closed_form(inst, counts);
  double total_observed = 0.0;
  for (double v : trace.observed_losses) total_observed += v;
  const auto exact = infbandit::known_exact_optimum(inst, horizon);
  const double benchmark_value =
      exact ? *exact
            : infbandit::solve_simplex_qp(infbandit::effective_linear_term(inst),
                                          inst.a, horizon)
                  .value;

  write_json_file(
      out_dir / "summary.json",
      json{{"instance", parsed.id},
           {"policy", policy->name()},
           {"T", horizon},
           {"seed", seed},
           {"total_expected", total_expected},
           {"total_observed", total_observed},
           {"benchmark", exact ? "exact_optimum" : "continuous"},
           {"benchmark_value", benchmark_value},
           {"regret", total_expected - benchmark_value},
           {"counts", counts.counts}});
}

void execute_scan(const json& config, std::uint64_t seed,
                  const fs::path& out_dir) {
  const std::string instance_spec = config.at("instance").get<std::string>();
  const auto policies = config.at("policies").get<std::vector<std::string>>();
  const auto horizons = horizons_from_config(config);
  const int n_seeds = config.at("n_seeds").get<int>();
  const int n_instances = config.at("n_instances").get<int>();
  const int jobs = config.at("jobs").get<int>();
  if (policies.empty()) throw std::invalid_argument("scan: no policies");
  if (n_seeds < 1) throw std::invalid_argument("scan: n_seeds must be >= 1");
  if (n_instances < 1)
    throw std::invalid_argument("scan: n_instances must be >= 1");

  // resolve the instance list
  std::vector<infbandit::ParsedInstance> instances;
  if (n_instances == 1) {
    instances.push_back(infbandit::parse_instance_spec(instance_spec, seed));
  } else {
    if (instance_spec.rfind("random:k=", 0) != 0 ||
        instance_spec.find(":seed=") != std::string::npos)
      throw std::invalid_argument(
          "scan: --n-instances > 1 needs an unseeded random:k=<K> instance");
    for (std::int64_t i = 0; i < n_instances; ++i) {
      const std::uint64_t s = instance_seed(seed, i);
      instances.push_back(infbandit::parse_instance_spec(
          instance_spec + ":seed=" + std::to_string(s), seed));
    }
  }

  std::vector<infbandit::RegretCurve> all_curves;
  std::vector<infbandit::SlopeRow> slope_rows;
  for (const std::string& policy_spec : policies) {
    std::vector<infbandit::RegretCurve> per_instance;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_seeds));
      const std::uint64_t base =
          run_seed_base(seed, static_cast<std::int64_t>(i));
      for (int s = 0; s < n_seeds; ++s)
        seeds[static_cast<std::size_t>(s)] =
            infbandit::rng::derive(base, static_cast<std::uint64_t>(s));
      infbandit::ScanOptions options;
      options.jobs = jobs;
      infbandit::RegretCurve curve = infbandit::regret_scan(
          instances[i].instance, policy_spec, horizons, seeds, options);
      curve.instance_id = instances[i].id;
      per_instance.push_back(std::move(curve));
    }
    const bool averaged = per_instance.size() > 1;
    for (const auto& curve : per_instance) {
      all_curves.push_back(curve);
      try {
        slope_rows.push_back({curve.policy_name + "@" + curve.instance_id,
                              curve.seed, infbandit::fit_loglog_slope(curve)});
      } catch (const std::invalid_argument& e) {
        std::cerr << "scan: no slope for " << curve.policy_name << " on "
                  << curve.instance_id << ": " << e.what() << "\n";
      }
    }
    if (averaged) {
      infbandit::RegretCurve avg = infbandit::average_curves(per_instance);
      avg.seed = seed;
      all_curves.push_back(avg);
      try {
        slope_rows.push_back({avg.policy_name + "@(average)", seed,
                              infbandit::fit_loglog_slope(avg)});
      } catch (const std::invalid_argument& e) {
        std::cerr << "scan: no slope for averaged " << avg.policy_name << ": "
                  << e.what() << "\n";
      }
    }
  }

  std::ostringstream curves_csv;
  infbandit::write_regret_curve_csv(curves_csv, all_curves);
  write_text_file(out_dir / "regret_curve.csv", curves_csv.str());
  std::ostringstream slopes_csv;
  infbandit::write_slopes_csv(slopes_csv, slope_rows);
  write_text_file(out_dir / "slopes.csv", slopes_csv.str());
}

void execute_histogram(const json& config, std::uint64_t seed,
                       const fs::path& out_dir) {
  const int k = config.at("k").get<int>();
  const int n_instances = config.at("n_instances").get<int>();
  const auto horizons = horizons_from_config(config);
  const std::string policy = config.at("policy").get<std::string>();
  infbandit::SlopeHistogramOptions options;
  options.bins = config.at("bins").get<int>();
  options.jobs = config.at("jobs").get<int>();
  infbandit::make_policy(policy, k);  // validate the spelling up front

  const infbandit::SlopeHistogram hist =
      infbandit::slope_histogram(k, n_instances, horizons, policy, seed, options);

  std::vector<infbandit::SlopeRow> rows;
  rows.reserve(hist.entries.size());
  for (const auto& entry : hist.entries)
    rows.push_back({entry.instance_id, entry.run_seed, entry.fit});
  std::ostringstream slopes_csv;
  infbandit::write_slopes_csv(slopes_csv, rows);
  write_text_file(out_dir / "slopes.csv", slopes_csv.str());
  std::ostringstream hist_csv;
  infbandit::write_histogram_csv(hist_csv, hist);
  write_text_file(out_dir / "histogram.csv", hist_csv.str());
  if (hist.n_failed > 0)
    std::cerr << "histogram: " << hist.n_failed
              << " instance(s) had too few positive-regret points\n";
}

int execute_fit(const json& config, std::uint64_t seed,
                const fs::path& out_dir) {
  const std::string ratings = config.at("ratings").get<std::string>();
  const int k = config.at("k").get<int>();
  require_file(ratings, "ratings csv");
  const auto parametrization =
      parametrization_from_name(config.at("parametrization").get<std::string>());
  infbandit::FitHyperparams hp;
  hp.learning_rate = config.at("learning_rate").get<double>();
  hp.momentum = config.at("momentum").get<double>();
  hp.max_iterations = config.at("max_iterations").get<std::int64_t>();
  hp.rel_tol = config.at("rel_tol").get<double>();
  hp.patience = config.at("patience").get<std::int64_t>();
  hp.init_factor_scale = config.at("init_factor_scale").get<double>();
  hp.norm = norm_from_name(config.at("norm").get<std::string>());
  const int jobs = config.at("jobs").get<int>();

  std::optional<std::map<std::string, int>> arm_map;
  std::vector<std::string> arm_names(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    arm_names[static_cast<std::size_t>(i)] = "arm" + std::to_string(i + 1);
  if (config.contains("arm_map") && !config.at("arm_map").is_null()) {
    arm_map = load_arm_map(config.at("arm_map").get<std::string>(), k);
    for (const auto& [name, index] : *arm_map)
      arm_names[static_cast<std::size_t>(index)] = name;
  }

  const infbandit::IngestResult ingest = infbandit::ingest_rating_csv(
      ratings, k, config.at("rating_max").get<double>(), seed,
      config.at("min_events").get<std::int64_t>(),
      arm_map ? &*arm_map : nullptr);
  for (const std::string& warning : ingest.warnings)
    std::cerr << "ratings csv: " << warning << "\n";
  std::cerr << "fit: " << ingest.rows_parsed << " rows, "
            << ingest.rows_skipped << " skipped, " << ingest.users.size()
            << " user(s) with enough events\n";

  std::vector<std::optional<infbandit::FitResult>> fitted(ingest.users.size());
  std::mutex progress_mutex;
  std::atomic<int> done{0};
  infbandit::parallel_for_index(
      static_cast<std::int64_t>(ingest.users.size()), jobs,
      [&](std::int64_t i) {
        if (g_interrupted) return;  // flush whatever completed so far
        const infbandit::RatingLog& log =
            ingest.users[static_cast<std::size_t>(i)];
        infbandit::FitResult result =
            infbandit::fit_interaction_model(log, k, parametrization, hp);
        {
          std::lock_guard<std::mutex> lock(progress_mutex);
          ++done;
          std::cerr << "fit: user " << log.user_id << " (" << done << "/"
                    << ingest.users.size() << ") train_mse="
                    << result.train_mse << " iters=" << result.iterations
                    << (result.converged ? "" : " (no convergence)") << "\n";
        }
        fitted[static_cast<std::size_t>(i)] = std::move(result);
      });

  std::vector<std::string> users;
  std::vector<infbandit::FitResult> results;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    if (!fitted[i]) continue;
    users.push_back(ingest.users[i].user_id);
    results.push_back(std::move(*fitted[i]));
  }
  std::ostringstream fits_csv;
  infbandit::write_fits_csv(fits_csv, users, results);
  write_text_file(out_dir / "fits.csv", fits_csv.str());
  std::ostringstream eig_csv;
  infbandit::write_eigenvalues_csv(eig_csv, users, results);
  write_text_file(out_dir / "eigenvalues.csv", eig_csv.str());
  if (!results.empty()) {
    const infbandit::FitSummary summary = infbandit::analyze_fits(results);
    std::ostringstream mean_csv;
    infbandit::write_a_mean_csv(mean_csv, summary.a_mean, arm_names);
    write_text_file(out_dir / "a_mean.csv", mean_csv.str());
  }
  if (g_interrupted) {
    std::cerr << "fit: interrupted; flushed " << results.size() << " of "
              << ingest.users.size() << " fits\n";
    return 1;
  }
  return 0;
}

void execute_probe(const json& config, std::uint64_t seed,
                   const fs::path& out_dir) {
  const auto parsed = infbandit::parse_instance_spec(
      config.at("instance").get<std::string>(), seed);
  std::optional<std::int64_t> budget;
  if (config.contains("budget") && !config.at("budget").is_null())
    budget = config.at("budget").get<std::int64_t>();

  infbandit::Environment env(parsed.instance, seed);
  const infbandit::ProbeResult probe =
      infbandit::probing_estimator(env, budget);

  const int k = parsed.instance.k();
  json rows = json::array();
  double max_err = 0.0;
  for (int i = 0; i < k; ++i) {
    json row = json::array();
    for (int j = 0; j < k; ++j) {
      row.push_back(probe.a_hat.at(i, j));
      max_err = std::max(
          max_err, std::abs(probe.a_hat.at(i, j) - parsed.instance.a.at(i, j)));
    }
    rows.push_back(std::move(row));
  }
  write_json_file(out_dir / "probe.json",
                  json{{"instance", parsed.id},
                       {"seed", seed},
                       {"k", k},
                       {"a_hat", std::move(rows)},
                       {"pulls", probe.pulls},
                       {"pulls_per_k2", static_cast<double>(probe.pulls) /
                                            (static_cast<double>(k) * k)},
                       {"max_abs_error", max_err}});
}

void execute_qp(const json& config, std::uint64_t seed,
                const fs::path& out_dir) {
  const auto parsed = infbandit::parse_instance_spec(
      config.at("instance").get<std::string>(), seed);
  const std::int64_t horizon = config.at("T").get<std::int64_t>();
  const infbandit::SimplexQpSolution solution = infbandit::solve_simplex_qp(
      infbandit::effective_linear_term(parsed.instance), parsed.instance.a,
      horizon);
  write_json_file(out_dir / "qp.json",
                  json{{"instance", parsed.id},
                       {"T", horizon},
                       {"p_star", solution.p_star},
                       {"value", solution.value},
                       {"iterations", solution.iterations},
                       {"duality_gap", solution.duality_gap}});
}

// Runs `command` with `config` into `out_dir`, writing meta.json first so
// interrupted runs still record how to reproduce them.
int execute(const std::string& command, const json& config, std::uint64_t seed,
            const std::string& out) {
  const fs::path out_dir(out);
  fs::create_directories(out_dir);
  write_meta(out_dir, command, config, seed);
  if (command == "run") {
    execute_run(config, seed, out_dir);
  } else if (command == "scan") {
    execute_scan(config, seed, out_dir);
  } else if (command == "histogram") {
    execute_histogram(config, seed, out_dir);
  } else if (command == "fit") {
    return execute_fit(config, seed, out_dir);
  } else if (command == "probe") {
    execute_probe(config, seed, out_dir);
  } else if (command == "qp") {
    execute_qp(config, seed, out_dir);
  } else {
    throw std::invalid_argument("unknown command '" + command + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_signal);
  CLI::App app{"interacting-loss bandit simulation and estimation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  // Global flags: defaults for every subcommand, overridden by the
  // subcommand-level spelling of the same flag.
  std::uint64_t global_seed = 1;
  int global_jobs = 1;
  std::string global_out = "out";
  auto* opt_global_seed =
      app.add_option("--seed", global_seed, "master seed (any subcommand)");
  auto* opt_global_jobs =
      app.add_option("--jobs", global_jobs, "worker threads (any subcommand)");
  auto* opt_global_out =
      app.add_option("--out", global_out, "output directory (any subcommand)");

  // run
  auto* cmd_run = app.add_subcommand("run", "simulate one episode");
  std::string run_instance = "prop2";
  std::string run_policy = "ilcb";
  std::int64_t run_horizon = 1024;
  std::uint64_t run_seed = 1;
  std::string run_out = "out";
  cmd_run->add_option("--instance", run_instance,
                      "prop2 | prop3 | random:k=<K>[:seed=<S>] | file:<path>")
      ->capture_default_str();
  cmd_run->add_option("--policy", run_policy,
                      "ilcb | ilcb:B=<f> | lcb | fixed:<arm> | round_robin | "
                      "random[:seed=<S>]")
      ->capture_default_str();
  cmd_run->add_option("--T", run_horizon, "horizon (rounds)")
      ->capture_default_str();
  auto* opt_run_seed =
      cmd_run->add_option("--seed", run_seed, "master seed")
          ->capture_default_str();
  auto* opt_run_out = cmd_run->add_option("--out", run_out, "output directory")
                          ->capture_default_str();

  // scan
  auto* cmd_scan = app.add_subcommand("scan", "regret vs horizon scan");
  std::string scan_instance = "prop2";
  std::string scan_policies = "ilcb,lcb";
  std::string scan_horizons = "128:16384:x2";
  int scan_n_seeds = 10;
  int scan_n_instances = 1;
  std::uint64_t scan_seed = 1;
  int scan_jobs = 1;
  std::string scan_out = "out";
  cmd_scan->add_option("--instance", scan_instance,
                       "prop2 | prop3 | random:k=<K>[:seed=<S>] | file:<path>")
      ->capture_default_str();
  cmd_scan->add_option("--policies", scan_policies, "comma-separated policies")
      ->capture_default_str();
  cmd_scan->add_option("--horizons", scan_horizons,
                       "comma list or start:end:x<factor>")
      ->capture_default_str();
  cmd_scan->add_option("--n-seeds", scan_n_seeds, "seeds per (instance, T)")
      ->capture_default_str();
  cmd_scan
      ->add_option("--n-instances", scan_n_instances,
                   "random instances to average over (random:k=<K> only)")
      ->capture_default_str();
  auto* opt_scan_seed =
      cmd_scan->add_option("--seed", scan_seed, "master seed")
          ->capture_default_str();
  auto* opt_scan_jobs =
      cmd_scan->add_option("--jobs", scan_jobs, "worker threads")
          ->capture_default_str();
  auto* opt_scan_out =
      cmd_scan->add_option("--out", scan_out, "output directory")
          ->capture_default_str();

  // histogram
  auto* cmd_hist = app.add_subcommand(
      "histogram", "slope distribution over random instances");
  int hist_k = 3;
  int hist_n_instances = 100;
  std::string hist_horizons = "128:16384:x2";
  std::string hist_policy = "ilcb";
  int hist_bins = 20;
  std::uint64_t hist_seed = 1;
  int hist_jobs = 1;
  std::string hist_out = "out";
  cmd_hist->add_option("--k", hist_k, "arm count")->capture_default_str();
  cmd_hist->add_option("--n-instances", hist_n_instances, "instance count")
      ->capture_default_str();
  cmd_hist->add_option("--horizons", hist_horizons,
                       "comma list or start:end:x<factor>")
      ->capture_default_str();
  cmd_hist->add_option("--policy", hist_policy, "policy to profile")
      ->capture_default_str();
  cmd_hist->add_option("--bins", hist_bins, "histogram bins")
      ->capture_default_str();
  auto* opt_hist_seed = cmd_hist->add_option("--seed", hist_seed, "master seed")
                            ->capture_default_str();
  auto* opt_hist_jobs =
      cmd_hist->add_option("--jobs", hist_jobs, "worker threads")
          ->capture_default_str();
  auto* opt_hist_out =
      cmd_hist->add_option("--out", hist_out, "output directory")
          ->capture_default_str();

  // fit
  auto* cmd_fit = app.add_subcommand("fit", "fit interaction models to a rating log");
  std::string fit_ratings;
  int fit_k = 0;
  double fit_rating_max = 5.0;
  std::int64_t fit_min_events = 4096;
  std::string fit_parametrization = "psd";
  double fit_lr = 1e-3;
  double fit_momentum = 0.9;
  std::int64_t fit_max_iterations = 50000;
  double fit_rel_tol = 1e-9;
  std::int64_t fit_patience = 100;
  double fit_init_scale = 1e-3;
  std::string fit_norm = "max_abs";
  std::string fit_arm_map;
  std::uint64_t fit_seed = 1;
  int fit_jobs = 1;
  std::string fit_out = "out";
  cmd_fit->add_option("--ratings", fit_ratings,
                      "CSV with header user,timestamp,arms,rating")
      ->required();
  cmd_fit->add_option("--k", fit_k, "arm count")->required();
  cmd_fit->add_option("--rating-max", fit_rating_max, "loss = rating_max - rating")
      ->capture_default_str();
  cmd_fit->add_option("--min-events", fit_min_events, "per-user event minimum")
      ->capture_default_str();
  cmd_fit
      ->add_option("--parametrization", fit_parametrization, "psd | indefinite")
      ->check(CLI::IsMember({"psd", "indefinite"}))
      ->capture_default_str();
  cmd_fit->add_option("--lr", fit_lr, "learning rate")->capture_default_str();
  cmd_fit->add_option("--momentum", fit_momentum, "momentum coefficient")
      ->capture_default_str();
  cmd_fit->add_option("--max-iters", fit_max_iterations, "iteration cap")
      ->capture_default_str();
  cmd_fit->add_option("--rel-tol", fit_rel_tol,
                      "relative MSE improvement stop threshold")
      ->capture_default_str();
  cmd_fit->add_option("--patience", fit_patience,
                      "iterations per improvement check")
      ->capture_default_str();
  cmd_fit->add_option("--init-scale", fit_init_scale,
                      "diagonal init of the PSD factor")
      ->capture_default_str();
  cmd_fit->add_option("--norm", fit_norm, "max_abs | frobenius | spectral")
      ->check(CLI::IsMember({"max_abs", "frobenius", "spectral"}))
      ->capture_default_str();
  cmd_fit->add_option("--arm-map", fit_arm_map,
                      "file mapping arm names to indices (name,index lines)");
  auto* opt_fit_seed = cmd_fit->add_option("--seed", fit_seed, "master seed")
                           ->capture_default_str();
  auto* opt_fit_jobs = cmd_fit->add_option("--jobs", fit_jobs, "worker threads")
                           ->capture_default_str();
  auto* opt_fit_out = cmd_fit->add_option("--out", fit_out, "output directory")
                          ->capture_default_str();

  // probe
  auto* cmd_probe = app.add_subcommand("probe", "probing estimator demo");
  std::string probe_instance = "prop2";
  std::uint64_t probe_seed = 1;
  std::int64_t probe_budget = -1;
  std::string probe_out = "out";
  cmd_probe->add_option("--instance", probe_instance,
                        "prop2 | prop3 | random:k=<K>[:seed=<S>] | file:<path>")
      ->capture_default_str();
  auto* opt_probe_seed =
      cmd_probe->add_option("--seed", probe_seed, "master seed")
          ->capture_default_str();
  cmd_probe->add_option("--budget", probe_budget,
                        "max pulls allowed (absent/negative: unlimited)")
      ->capture_default_str();
  auto* opt_probe_out =
      cmd_probe->add_option("--out", probe_out, "output directory")
          ->capture_default_str();

  // qp
  auto* cmd_qp = app.add_subcommand("qp", "continuous benchmark solver");
  std::string qp_instance;
  std::int64_t qp_horizon = 0;
  std::uint64_t qp_seed = 1;
  std::string qp_out = "out";
  cmd_qp->add_option("--instance", qp_instance,
                     "prop2 | prop3 | random:k=<K>[:seed=<S>] | file:<path>")
      ->required();
  cmd_qp->add_option("--T", qp_horizon, "horizon (scales the simplex)")
      ->required();
  auto* opt_qp_seed =
      cmd_qp->add_option("--seed", qp_seed, "master seed")->capture_default_str();
  auto* opt_qp_out = cmd_qp->add_option("--out", qp_out, "output directory")
                         ->capture_default_str();

  // rerun
  auto* cmd_rerun = app.add_subcommand("rerun", "replay a command from meta.json");
  std::string rerun_meta;
  std::string rerun_out = "out_rerun";
  cmd_rerun->add_option("meta", rerun_meta, "path to meta.json")->required();
  auto* opt_rerun_out =
      cmd_rerun->add_option("--out", rerun_out, "output directory")
          ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  // Apply the global flags wherever the subcommand-level flag was not given.
  const auto pick_seed = [&](const CLI::Option* local, std::uint64_t& value) {
    if (local->count() == 0 && opt_global_seed->count() > 0)
      value = global_seed;
  };
  const auto pick_jobs = [&](const CLI::Option* local, int& value) {
    if (local->count() == 0 && opt_global_jobs->count() > 0)
      value = global_jobs;
  };
  const auto pick_out = [&](const CLI::Option* local, std::string& value) {
    if (local->count() == 0 && opt_global_out->count() > 0) value = global_out;
  };
  pick_seed(opt_run_seed, run_seed);
  pick_out(opt_run_out, run_out);
  pick_seed(opt_scan_seed, scan_seed);
  pick_jobs(opt_scan_jobs, scan_jobs);
  pick_out(opt_scan_out, scan_out);
  pick_seed(opt_hist_seed, hist_seed);
  pick_jobs(opt_hist_jobs, hist_jobs);
  pick_out(opt_hist_out, hist_out);
  pick_seed(opt_fit_seed, fit_seed);
  pick_jobs(opt_fit_jobs, fit_jobs);
  pick_out(opt_fit_out, fit_out);
  pick_seed(opt_probe_seed, probe_seed);
  pick_out(opt_probe_out, probe_out);
  pick_seed(opt_qp_seed, qp_seed);
  pick_out(opt_qp_out, qp_out);
  pick_out(opt_rerun_out, rerun_out);

  try {
    if (*cmd_run) {
      const auto parsed = infbandit::parse_instance_spec(run_instance, run_seed);
      infbandit::make_policy(run_policy, parsed.instance.k());
      if (run_horizon < 1)
        throw std::invalid_argument("run: --T must be >= 1");
      return execute("run",
                     json{{"instance", parsed.id},
                          {"policy", run_policy},
                          {"T", run_horizon}},
                     run_seed, run_out);
    }
    if (*cmd_scan) {
      const auto horizons = infbandit::parse_horizons(scan_horizons);
      std::vector<std::string> policies;
      for (const std::string& p : infbandit::io::split(scan_policies, ','))
        if (!infbandit::io::trim(p).empty())
          policies.push_back(infbandit::io::trim(p));
      if (policies.empty())
        throw std::invalid_argument("scan: --policies is empty");
      std::string instance_field = scan_instance;
      if (scan_n_instances == 1)
        instance_field =
            infbandit::parse_instance_spec(scan_instance, scan_seed).id;
      return execute("scan",
                     json{{"instance", instance_field},
                          {"policies", policies},
                          {"horizons", horizons},
                          {"n_seeds", scan_n_seeds},
                          {"n_instances", scan_n_instances},
                          {"jobs", scan_jobs}},
                     scan_seed, scan_out);
    }
    if (*cmd_hist) {
      const auto horizons = infbandit::parse_horizons(hist_horizons);
      return execute("histogram",
                     json{{"k", hist_k},
                          {"n_instances", hist_n_instances},
                          {"horizons", horizons},
                          {"policy", hist_policy},
                          {"bins", hist_bins},
                          {"jobs", hist_jobs}},
                     hist_seed, hist_out);
    }
    if (*cmd_fit) {
      json config{{"ratings", fit_ratings},
                  {"k", fit_k},
                  {"rating_max", fit_rating_max},
                  {"min_events", fit_min_events},
                  {"parametrization", fit_parametrization},
                  {"learning_rate", fit_lr},
                  {"momentum", fit_momentum},
                  {"max_iterations", fit_max_iterations},
                  {"rel_tol", fit_rel_tol},
                  {"patience", fit_patience},
                  {"init_factor_scale", fit_init_scale},
                  {"norm", fit_norm},
                  {"jobs", fit_jobs}};
      config["arm_map"] = fit_arm_map.empty() ? json() : json(fit_arm_map);
      return execute("fit", config, fit_seed, fit_out);
    }
    if (*cmd_probe) {
      const auto parsed =
          infbandit::parse_instance_spec(probe_instance, probe_seed);
      json config{{"instance", parsed.id}};
      config["budget"] = probe_budget < 0 ? json() : json(probe_budget);
      return execute("probe", config, probe_seed, probe_out);
    }
    if (*cmd_qp) {
      const auto parsed = infbandit::parse_instance_spec(qp_instance, qp_seed);
      if (qp_horizon < 1)
        throw std::invalid_argument("qp: --T must be >= 1");
      return execute("qp", json{{"instance", parsed.id}, {"T", qp_horizon}},
                     qp_seed, qp_out);
    }
    if (*cmd_rerun) {
      require_file(rerun_meta, "meta");
      json meta;
      try {
        meta = json::parse(infbandit::io::read_file(rerun_meta));
      } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("meta json: ") + e.what());
      }
      try {
        return execute(meta.at("command").get<std::string>(),
                       meta.at("config"),
                       meta.at("seed").get<std::uint64_t>(), rerun_out);
      } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("meta json: ") + e.what());
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
