#pragma once

// Fitting interaction models to logged selection/loss histories.
//
// The model is loss_t ≈ (l1 + A·x_t)[arm_t] with x_t the pull counts BEFORE
// event t. A is parametrized either as BBᵀ (PSD by construction) or M + Mᵀ
// (symmetric, possibly indefinite) and fitted by full-batch gradient descent
// with momentum. Internally the problem is solved on scaled features
// (x/n_train, centered) and standardized targets for step-size stability;
// the scalings are folded back exactly, so all reported quantities are in
// original loss units. Also here: the stationary per-arm-mean baseline, the
// O(K²)-pull probing estimator, and summary analysis across many fits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "infbandit/core.hpp"
#include "infbandit/env.hpp"
#include "infbandit/io.hpp"
#include "infbandit/rng.hpp"

namespace infbandit {

struct RatingEvent {
  int arm = 0;
  double loss = 0.0;
};

// One user's time-ordered history of (chosen arm, incurred loss).
struct RatingLog {
  std::string user_id;
  std::vector<RatingEvent> events;
};

struct IngestResult {
  std::vector<RatingLog> users;        // first-appearance order, filtered
  std::vector<std::string> warnings;   // skipped rows with line numbers
  std::int64_t rows_parsed = 0;
  std::int64_t rows_skipped = 0;
};

// Reads a rating CSV with header `user,timestamp,arms,rating` into per-user
// logs sorted by timestamp (ties keep file order). `arms` is a ;-separated
// candidate list: 0-based indices, or names when `arm_names` is given. One
// candidate is chosen uniformly per row, keyed by (seed, line number), so
// single-candidate rows never depend on the seed. Loss = rating_max − rating.
// Users with fewer than `min_events` events are dropped.
inline IngestResult ingest_rating_csv(
    const std::string& path, int k, double rating_max, std::uint64_t seed,
    std::int64_t min_events = 4096,
    const std::map<std::string, int>* arm_names = nullptr) {
  if (k < 1) throw std::invalid_argument("ratings csv: k must be >= 1");
  const std::string content = io::read_file(path);
  const auto lines = io::split(content, '\n');
  if (lines.empty() || io::trim(lines[0]).empty())
    throw std::invalid_argument("ratings csv: missing header line");

  const auto header = io::split(io::trim(lines[0]), ',');
  const auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (io::trim(header[i]) == name) return static_cast<int>(i);
    throw std::invalid_argument("ratings csv: missing column '" + name + "'");
  };
  const int col_user = column("user");
  const int col_ts = column("timestamp");
  const int col_arms = column("arms");
  const int col_rating = column("rating");
  const std::size_t min_fields = static_cast<std::size_t>(
      std::max({col_user, col_ts, col_arms, col_rating}) + 1);

  struct Row {
    std::int64_t timestamp;
    std::int64_t order;  // file order, for stable ties
    RatingEvent event;
  };
  std::vector<std::string> user_order;
  std::map<std::string, std::vector<Row>> per_user;
  IngestResult result;

  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const std::string line = io::trim(lines[ln]);
    if (line.empty()) continue;
    const std::size_t line_no = ln + 1;  // 1-based, header is line 1
    const auto fields = io::split(line, ',');
    const auto skip = [&](const std::string& why) {
      result.warnings.push_back("line " + std::to_string(line_no) + ": " + why);
      ++result.rows_skipped;
    };
    if (fields.size() < min_fields) {
      skip("expected at least " + std::to_string(min_fields) + " fields, got " +
           std::to_string(fields.size()));
      continue;
    }
    const std::string user = io::trim(fields[static_cast<std::size_t>(col_user)]);
    if (user.empty()) {
      skip("empty user");
      continue;
    }
    std::int64_t ts = 0;
    if (!io::parse_int64(fields[static_cast<std::size_t>(col_ts)], ts)) {
      skip("bad timestamp '" +
           io::trim(fields[static_cast<std::size_t>(col_ts)]) + "'");
      continue;
    }
    double rating = 0.0;
    if (!io::parse_double(fields[static_cast<std::size_t>(col_rating)], rating)) {
      skip("bad rating '" +
           io::trim(fields[static_cast<std::size_t>(col_rating)]) + "'");
      continue;
    }
    const auto candidates =
        io::split(fields[static_cast<std::size_t>(col_arms)], ';');
    std::vector<int> arms;
    arms.reserve(candidates.size());
    bool bad_arm = false;
    for (const auto& cand : candidates) {
      const std::string tok = io::trim(cand);
      int arm = -1;
      if (arm_names != nullptr) {
        const auto it = arm_names->find(tok);
        if (it == arm_names->end()) {
          skip("unknown arm name '" + tok + "'");
          bad_arm = true;
          break;
        }
        arm = it->second;
      } else {
        std::int64_t v = 0;
        if (!io::parse_int64(tok, v)) {
          skip("bad arm index '" + tok + "'");
          bad_arm = true;
          break;
        }
        arm = static_cast<int>(v);
      }
      if (arm < 0 || arm >= k) {
        skip("arm " + std::to_string(arm) + " out of range [0," +
             std::to_string(k) + ")");
        bad_arm = true;
        break;
      }
      arms.push_back(arm);
    }
    if (bad_arm) continue;
    if (arms.empty()) {
      skip("empty arm list");
      continue;
    }
    const int arm =
        arms.size() == 1
            ? arms[0]
            : arms[rng::at(seed, line_no) % arms.size()];
    if (per_user.find(user) == per_user.end()) user_order.push_back(user);
    per_user[user].push_back(
        Row{ts, static_cast<std::int64_t>(line_no),
            RatingEvent{arm, rating_max - rating}});
    ++result.rows_parsed;
  }

  for (const std::string& user : user_order) {
    auto& rows = per_user[user];
    if (static_cast<std::int64_t>(rows.size()) < min_events) continue;
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp
                                        : a.order < b.order;
    });
    RatingLog log;
    log.user_id = user;
    log.events.reserve(rows.size());
    for (const Row& r : rows) log.events.push_back(r.event);
    result.users.push_back(std::move(log));
  }
  return result;
}

enum class Parametrization { psd, indefinite };

inline std::string parametrization_name(Parametrization p) {
  return p == Parametrization::psd ? "psd" : "indefinite";
}

enum class NormKind { max_abs, frobenius, spectral };

inline double matrix_norm(const InteractionMatrix& a, NormKind kind) {
  switch (kind) {
    case NormKind::max_abs: return max_abs_norm(a);
    case NormKind::frobenius: return frobenius_norm(a);
    case NormKind::spectral: return spectral_norm(a);
  }
  throw std::logic_error("matrix_norm: unknown kind");
}

struct FitHyperparams {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::int64_t max_iterations = 50000;
  double rel_tol = 1e-9;        // relative MSE improvement threshold...
  std::int64_t patience = 100;  // ...measured over this many iterations
  double init_factor_scale = 1e-3;  // ε in B = ε·I (PSD start; B = 0 is a
                                    // stationary point of the Gram form)
  NormKind norm = NormKind::max_abs;
};

struct FitResult {
  std::vector<double> l1_hat;
  InteractionMatrix a_hat;
  Parametrization parametrization = Parametrization::psd;
  double train_mse = 0.0;           // at the returned (best) iterate
  double initial_mse = 0.0;         // at the stationary-mean initialization
  double loo_prediction = 0.0;      // predicted loss of the held-out event
  double loo_squared_error = 0.0;
  double norm_a = 0.0;
  std::vector<double> eigenvalues;  // of a_hat, ascending
  bool converged = false;
  std::int64_t iterations = 0;
};

// Least-squares objective on the scaled problem, exposed so gradients can be
// checked against finite differences. Parameters are packed as
// theta = [lambda (K); F (K×K, row-major)] with F = B (PSD) or M (indefinite);
// the modeled matrix is Q = BBᵀ or M + Mᵀ on centered features
// z̃_t = x_t/n_train − mean, with standardized targets.
class FitObjective {
 public:
  FitObjective(const RatingLog& log, int k, Parametrization parametrization)
      : k_(k), parametrization_(parametrization) {
    if (k < 1) throw std::invalid_argument("fit: k must be >= 1");
    if (log.events.size() < 2)
      throw std::invalid_argument(
          "fit: need at least 2 events (1 train + 1 held out)");
    n_train_ = static_cast<std::int64_t>(log.events.size()) - 1;
    for (const RatingEvent& e : log.events) {
      if (e.arm < 0 || e.arm >= k)
        throw std::out_of_range("fit: arm index out of range");
      if (!std::isfinite(e.loss))
        throw std::invalid_argument("fit: non-finite loss");
    }

    feature_scale_ = static_cast<double>(n_train_);
    arms_.reserve(static_cast<std::size_t>(n_train_));
    targets_raw_.reserve(static_cast<std::size_t>(n_train_));
    features_.assign(static_cast<std::size_t>(n_train_) * k, 0.0);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (std::int64_t t = 0; t < n_train_; ++t) {
      const RatingEvent& e = log.events[static_cast<std::size_t>(t)];
      for (int j = 0; j < k; ++j)
        features_[static_cast<std::size_t>(t) * k + j] =
            static_cast<double>(counts[static_cast<std::size_t>(j)]) /
            feature_scale_;
      arms_.push_back(e.arm);
      targets_raw_.push_back(e.loss);
      ++counts[static_cast<std::size_t>(e.arm)];
    }
    holdout_ = log.events.back();
    holdout_counts_.assign(counts.begin(), counts.end());

    target_mean_ = 0.0;
    for (double y : targets_raw_) target_mean_ += y;
    target_mean_ /= static_cast<double>(n_train_);
    double var = 0.0;
    for (double y : targets_raw_) var += (y - target_mean_) * (y - target_mean_);
    target_scale_ = std::sqrt(var / static_cast<double>(n_train_));
    if (target_scale_ == 0.0) target_scale_ = 1.0;  // constant targets

    feature_mean_.assign(static_cast<std::size_t>(k), 0.0);
    for (std::int64_t t = 0; t < n_train_; ++t)
      for (int j = 0; j < k; ++j)
        feature_mean_[static_cast<std::size_t>(j)] +=
            features_[static_cast<std::size_t>(t) * k + j];
    for (double& m : feature_mean_) m /= static_cast<double>(n_train_);
    for (std::int64_t t = 0; t < n_train_; ++t)
      for (int j = 0; j < k; ++j)
        features_[static_cast<std::size_t>(t) * k + j] -=
            feature_mean_[static_cast<std::size_t>(j)];

    targets_.reserve(targets_raw_.size());
    for (double y : targets_raw_)
      targets_.push_back((y - target_mean_) / target_scale_);
  }

  int k() const { return k_; }
  std::int64_t n_train() const { return n_train_; }
  int n_params() const { return k_ + k_ * k_; }
  Parametrization parametrization() const { return parametrization_; }
  double target_mean() const { return target_mean_; }
  double target_scale() const { return target_scale_; }
  double feature_scale() const { return feature_scale_; }
  const std::vector<double>& feature_mean() const { return feature_mean_; }
  const RatingEvent& holdout() const { return holdout_; }
  const std::vector<double>& holdout_counts() const { return holdout_counts_; }

  // Warm start: lambda at per-arm means of the standardized targets (arms
  // without training data sit at the global mean, 0), F at ε·I or 0.
  std::vector<double> initial_theta(double init_factor_scale) const {
    std::vector<double> theta(static_cast<std::size_t>(n_params()), 0.0);
    std::vector<double> sum(static_cast<std::size_t>(k_), 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(k_), 0);
    for (std::int64_t t = 0; t < n_train_; ++t) {
      sum[static_cast<std::size_t>(arms_[static_cast<std::size_t>(t)])] +=
          targets_[static_cast<std::size_t>(t)];
      ++count[static_cast<std::size_t>(arms_[static_cast<std::size_t>(t)])];
    }
    for (int i = 0; i < k_; ++i)
      if (count[static_cast<std::size_t>(i)] > 0)
        theta[static_cast<std::size_t>(i)] =
            sum[static_cast<std::size_t>(i)] /
            static_cast<double>(count[static_cast<std::size_t>(i)]);
    if (parametrization_ == Parametrization::psd)
      for (int i = 0; i < k_; ++i)
        theta[static_cast<std::size_t>(k_ + i * k_ + i)] = init_factor_scale;
    return theta;
  }

  // Modeled interaction matrix Q on the scaled problem: BBᵀ or M + Mᵀ.
  // Both constructions are bitwise symmetric.
  std::vector<double> modeled_matrix(const std::vector<double>& theta) const {
    check_theta(theta);
    std::vector<double> q(static_cast<std::size_t>(k_) * k_, 0.0);
    const double* f = theta.data() + k_;
    if (parametrization_ == Parametrization::psd) {
      for (int i = 0; i < k_; ++i)
        for (int j = i; j < k_; ++j) {
          double s = 0.0;
          for (int r = 0; r < k_; ++r)
            s += f[i * k_ + r] * f[j * k_ + r];  // (BBᵀ)_ij = row_i · row_j
          q[static_cast<std::size_t>(i) * k_ + j] = s;
          q[static_cast<std::size_t>(j) * k_ + i] = s;
        }
    } else {
      for (int i = 0; i < k_; ++i)
        for (int j = 0; j < k_; ++j)
          q[static_cast<std::size_t>(i) * k_ + j] =
              f[i * k_ + j] + f[j * k_ + i];
    }
    return q;
  }

  double value(const std::vector<double>& theta) const {
    const std::vector<double> q = modeled_matrix(theta);
    double j_sum = 0.0;
    for (std::int64_t t = 0; t < n_train_; ++t) {
      const double r = residual(theta, q, t);
      j_sum += r * r;
    }
    return j_sum / static_cast<double>(n_train_);
  }

  // Objective and its analytic gradient. The gradient of the mean squared
  // residual w.r.t. the full matrix Q is G with
  // G_ij = (2/n)·Σ_{t: arm_t = i} r_t·z̃_tj; chain rule gives (G + Gᵀ)B for
  // the Gram form and G + Gᵀ for the symmetrized form.
  double value_and_gradient(const std::vector<double>& theta,
                            std::vector<double>& grad) const {
    const std::vector<double> q = modeled_matrix(theta);
    grad.assign(static_cast<std::size_t>(n_params()), 0.0);
    std::vector<double> g_q(static_cast<std::size_t>(k_) * k_, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n_train_);
    double j_sum = 0.0;
    for (std::int64_t t = 0; t < n_train_; ++t) {
      const double r = residual(theta, q, t);
      j_sum += r * r;
      const int i = arms_[static_cast<std::size_t>(t)];
      const double w = 2.0 * r * inv_n;
      grad[static_cast<std::size_t>(i)] += w;
      const double* z = features_.data() + static_cast<std::size_t>(t) * k_;
      for (int j = 0; j < k_; ++j)
        g_q[static_cast<std::size_t>(i) * k_ + j] += w * z[j];
    }
    // symmetrized matrix gradient S = G + Gᵀ
    std::vector<double> s(static_cast<std::size_t>(k_) * k_);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j)
        s[static_cast<std::size_t>(i) * k_ + j] =
            g_q[static_cast<std::size_t>(i) * k_ + j] +
            g_q[static_cast<std::size_t>(j) * k_ + i];
    double* gf = grad.data() + k_;
    const double* f = theta.data() + k_;
    if (parametrization_ == Parametrization::psd) {
      for (int i = 0; i < k_; ++i)
        for (int j = 0; j < k_; ++j) {
          double v = 0.0;
          for (int r = 0; r < k_; ++r)
            v += s[static_cast<std::size_t>(i) * k_ + r] * f[r * k_ + j];
          gf[i * k_ + j] = v;
        }
    } else {
      for (int i = 0; i < k_ * k_; ++i) gf[i] = s[static_cast<std::size_t>(i)];
    }
    return j_sum / static_cast<double>(n_train_);  // bitwise-match value()
  }

 private:
  void check_theta(const std::vector<double>& theta) const {
    if (static_cast<int>(theta.size()) != n_params())
      throw std::invalid_argument("fit: parameter vector has wrong size");
  }

  double residual(const std::vector<double>& theta,
                  const std::vector<double>& q, std::int64_t t) const {
    const int i = arms_[static_cast<std::size_t>(t)];
    const double* z = features_.data() + static_cast<std::size_t>(t) * k_;
    double pred = theta[static_cast<std::size_t>(i)];
    for (int j = 0; j < k_; ++j)
      pred += q[static_cast<std::size_t>(i) * k_ + j] * z[j];
    return pred - targets_[static_cast<std::size_t>(t)];
  }

  int k_ = 0;
  Parametrization parametrization_ = Parametrization::psd;
  std::int64_t n_train_ = 0;
  std::vector<int> arms_;
  std::vector<double> features_;     // n_train × K, scaled and centered
  std::vector<double> targets_;      // standardized
  std::vector<double> targets_raw_;  // original units
  std::vector<double> feature_mean_;
  double feature_scale_ = 1.0;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
  RatingEvent holdout_;
  std::vector<double> holdout_counts_;  // raw pull counts over all training events
};

// Full-batch gradient descent with momentum on FitObjective; the last event
// of the log is held out for evaluation. Returns the best iterate seen. The
// scaled/standardized internals are folded back, so l1_hat, a_hat and the
// reported errors are in original loss units.
inline FitResult fit_interaction_model(const RatingLog& log, int k,
                                       Parametrization parametrization,
                                       const FitHyperparams& hp = {}) {
  if (!(hp.learning_rate > 0.0))
    throw std::invalid_argument("fit: learning_rate must be > 0");
  if (!(hp.momentum >= 0.0 && hp.momentum < 1.0))
    throw std::invalid_argument("fit: momentum must be in [0, 1)");
  if (hp.max_iterations < 1 || hp.patience < 1)
    throw std::invalid_argument("fit: iteration counts must be >= 1");

  const FitObjective objective(log, k, parametrization);
  std::vector<double> theta = objective.initial_theta(hp.init_factor_scale);
  std::vector<double> velocity(theta.size(), 0.0);
  std::vector<double> grad;

  const double j_init = objective.value(theta);
  double j_best = j_init;
  std::vector<double> theta_best = theta;
  double window_ref = j_init;  // best value at the last patience checkpoint
  bool converged = false;
  std::int64_t iter = 0;
  for (; iter < hp.max_iterations; ++iter) {
    const double j = objective.value_and_gradient(theta, grad);
    if (j < j_best) {
      j_best = j;
      theta_best = theta;
    }
    if ((iter + 1) % hp.patience == 0) {
      if (window_ref - j_best <
          hp.rel_tol * std::max(std::abs(window_ref), 1e-300)) {
        converged = true;
        ++iter;
        break;
      }
      window_ref = j_best;
    }
    for (std::size_t p = 0; p < theta.size(); ++p) {
      velocity[p] = hp.momentum * velocity[p] + grad[p];
      theta[p] -= hp.learning_rate * velocity[p];
    }
  }
  {
    const double j = objective.value(theta);
    if (j < j_best) {
      j_best = j;
      theta_best = theta;
    }
  }

  // fold scalings back into original units
  const double sy = objective.target_scale();
  const double my = objective.target_mean();
  const double sz = objective.feature_scale();
  const std::vector<double> q = objective.modeled_matrix(theta_best);
  std::vector<double> a_entries(q.size());
  const double a_scale = sy / sz;
  for (std::size_t i = 0; i < q.size(); ++i) a_entries[i] = q[i] * a_scale;
  InteractionMatrix a_hat(
      k, std::move(a_entries),
      /*psd_certified=*/parametrization == Parametrization::psd);

  FitResult result;
  result.parametrization = parametrization;
  result.l1_hat.resize(static_cast<std::size_t>(k));
  const std::vector<double>& mz = objective.feature_mean();
  for (int i = 0; i < k; ++i) {
    double q_mz = 0.0;
    for (int j = 0; j < k; ++j)
      q_mz += q[static_cast<std::size_t>(i) * k + j] *
              mz[static_cast<std::size_t>(j)];
    result.l1_hat[static_cast<std::size_t>(i)] =
        my + sy * (theta_best[static_cast<std::size_t>(i)] - q_mz);
  }
  result.a_hat = std::move(a_hat);
  result.train_mse = j_best * sy * sy;
  result.initial_mse = j_init * sy * sy;
  const RatingEvent& holdout = objective.holdout();
  double pred = result.l1_hat[static_cast<std::size_t>(holdout.arm)];
  const std::vector<double>& x_loo = objective.holdout_counts();
  for (int j = 0; j < k; ++j)
    pred += result.a_hat.at(holdout.arm, j) * x_loo[static_cast<std::size_t>(j)];
  result.loo_prediction = pred;
  result.loo_squared_error = (pred - holdout.loss) * (pred - holdout.loss);
  result.norm_a = matrix_norm(result.a_hat, hp.norm);
  result.eigenvalues = symmetric_eigenvalues(result.a_hat);
  result.converged = converged;
  result.iterations = iter;
  return result;
}

struct BaselineResult {
  std::vector<double> arm_means;  // per arm over training events
  double loo_prediction = 0.0;
  double loo_squared_error = 0.0;
  double train_mse = 0.0;
  bool holdout_arm_unseen = false;  // fell back to the global training mean
};

// Stationary baseline: per-arm training means predict the held-out loss.
inline BaselineResult stationary_baseline(const RatingLog& log, int k) {
  if (k < 1) throw std::invalid_argument("baseline: k must be >= 1");
  if (log.events.size() < 2)
    throw std::invalid_argument(
        "baseline: need at least 2 events (1 train + 1 held out)");
  const std::size_t n_train = log.events.size() - 1;
  std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
  std::vector<std::int64_t> count(static_cast<std::size_t>(k), 0);
  double global_sum = 0.0;
  for (std::size_t t = 0; t < n_train; ++t) {
    const RatingEvent& e = log.events[t];
    if (e.arm < 0 || e.arm >= k)
      throw std::out_of_range("baseline: arm index out of range");
    sum[static_cast<std::size_t>(e.arm)] += e.loss;
    ++count[static_cast<std::size_t>(e.arm)];
    global_sum += e.loss;
  }
  const double global_mean = global_sum / static_cast<double>(n_train);

  BaselineResult result;
  result.arm_means.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    result.arm_means[static_cast<std::size_t>(i)] =
        count[static_cast<std::size_t>(i)] > 0
            ? sum[static_cast<std::size_t>(i)] /
                  static_cast<double>(count[static_cast<std::size_t>(i)])
            : global_mean;
  double mse = 0.0;
  for (std::size_t t = 0; t < n_train; ++t) {
    const RatingEvent& e = log.events[t];
    const double r = e.loss - result.arm_means[static_cast<std::size_t>(e.arm)];
    mse += r * r;
  }
  result.train_mse = mse / static_cast<double>(n_train);
  const RatingEvent& holdout = log.events.back();
  if (holdout.arm < 0 || holdout.arm >= k)
    throw std::out_of_range("baseline: arm index out of range");
  result.holdout_arm_unseen = count[static_cast<std::size_t>(holdout.arm)] == 0;
  result.loo_prediction = result.holdout_arm_unseen
                              ? global_mean
                              : result.arm_means[static_cast<std::size_t>(
                                    holdout.arm)];
  const double err = result.loo_prediction - holdout.loss;
  result.loo_squared_error = err * err;
  return result;
}

struct ProbeResult {
  InteractionMatrix a_hat;
  std::int64_t pulls = 0;
};

// Recovers the interaction matrix from a live environment with O(K²) pulls:
// pattern (j,j) gives Â_jj = L⁽ᵗ⁺¹⁾ − L⁽ᵗ⁾ (consecutive observations of the
// same arm differ by exactly A_jj plus noise); pattern (j,k,j) gives
// Â_jk = L⁽ᵗ⁺²⁾ − L⁽ᵗ⁾ − Â_jj. Under noise bounded by b the deterministic
// error is ≤ 2b on the diagonal and ≤ 4b off it (two observations plus the
// previously estimated diagonal). Total pulls: 2K + 3·K(K−1)/2 ≤ 2K².
inline ProbeResult probing_estimator(
    Environment& env, std::optional<std::int64_t> max_pulls = std::nullopt) {
  const int k = env.k();
  const std::int64_t needed =
      2 * static_cast<std::int64_t>(k) +
      3 * static_cast<std::int64_t>(k) * (k - 1) / 2;
  if (max_pulls && *max_pulls < needed)
    throw std::invalid_argument("probe: schedule needs " +
                                std::to_string(needed) + " pulls, budget is " +
                                std::to_string(*max_pulls));
  std::vector<double> e(static_cast<std::size_t>(k) * k, 0.0);
  std::int64_t pulls = 0;
  std::vector<double> diag(static_cast<std::size_t>(k), 0.0);
  for (int j = 0; j < k; ++j) {
    const double first = env.step(j);
    const double second = env.step(j);
    pulls += 2;
    diag[static_cast<std::size_t>(j)] = second - first;
    e[static_cast<std::size_t>(j) * k + j] = diag[static_cast<std::size_t>(j)];
  }
  for (int j = 0; j < k; ++j) {
    for (int other = j + 1; other < k; ++other) {
      const double first = env.step(j);
      env.step(other);
      const double third = env.step(j);
      pulls += 3;
      const double est = third - first - diag[static_cast<std::size_t>(j)];
      e[static_cast<std::size_t>(j) * k + other] = est;
      e[static_cast<std::size_t>(other) * k + j] = est;
    }
  }
  return ProbeResult{InteractionMatrix(k, std::move(e)), pulls};
}

struct FitSummary {
  std::vector<double> norms;               // per fit, in input order
  std::vector<double> pooled_eigenvalues;  // n_fits × K, in input order
  InteractionMatrix a_mean;                // entrywise mean of the fitted As
};

inline FitSummary analyze_fits(const std::vector<FitResult>& results) {
  if (results.empty())
    throw std::invalid_argument("analyze_fits: empty collection");
  const int k = results.front().a_hat.k();
  for (const FitResult& r : results)
    if (r.a_hat.k() != k)
      throw std::invalid_argument("analyze_fits: mixed arm counts");
  FitSummary summary;
  summary.norms.reserve(results.size());
  summary.pooled_eigenvalues.reserve(results.size() *
                                     static_cast<std::size_t>(k));
  std::vector<double> mean(static_cast<std::size_t>(k) * k, 0.0);
  for (const FitResult& r : results) {
    summary.norms.push_back(r.norm_a);
    summary.pooled_eigenvalues.insert(summary.pooled_eigenvalues.end(),
                                      r.eigenvalues.begin(),
                                      r.eigenvalues.end());
    for (std::size_t i = 0; i < mean.size(); ++i)
      mean[i] += r.a_hat.entries()[i];
  }
  for (double& v : mean) v /= static_cast<double>(results.size());
  summary.a_mean = InteractionMatrix(k, std::move(mean));
  return summary;
}

inline void write_fits_csv(std::ostream& out,
                           const std::vector<std::string>& users,
                           const std::vector<FitResult>& results) {
  out << "user,parametrization,train_mse,loo_sq_error,norm_a\n";
  for (std::size_t i = 0; i < results.size(); ++i)
    out << users.at(i) << ',' << parametrization_name(results[i].parametrization)
        << ',' << io::format_double(results[i].train_mse) << ','
        << io::format_double(results[i].loo_squared_error) << ','
        << io::format_double(results[i].norm_a) << '\n';
}

inline void write_eigenvalues_csv(std::ostream& out,
                                  const std::vector<std::string>& users,
                                  const std::vector<FitResult>& results) {
  out << "user,index,value\n";
  for (std::size_t i = 0; i < results.size(); ++i)
    for (std::size_t j = 0; j < results[i].eigenvalues.size(); ++j)
      out << users.at(i) << ',' << j << ','
          << io::format_double(results[i].eigenvalues[j]) << '\n';
}

inline void write_a_mean_csv(std::ostream& out, const InteractionMatrix& a,
                             const std::vector<std::string>& arm_names) {
  if (static_cast<int>(arm_names.size()) != a.k())
    throw std::invalid_argument("a_mean csv: arm name count != k");
  for (std::size_t i = 0; i < arm_names.size(); ++i)
    out << (i ? "," : "") << arm_names[i];
  out << '\n';
  for (int i = 0; i < a.k(); ++i) {
    for (int j = 0; j < a.k(); ++j)
      out << (j ? "," : "") << io::format_double(a.at(i, j));
    out << '\n';
  }
}

}  // namespace infbandit
