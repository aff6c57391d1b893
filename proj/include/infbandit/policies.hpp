#pragma once

// Arm-selection policies behind one small contract: select(t) proposes an
// arm, observe(t, arm, loss) feeds back what happened, reset() restores the
// initial state. All tie-breaks pick the lowest index so runs are
// deterministic.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "infbandit/rng.hpp"

namespace infbandit {

class Policy {
 public:
  virtual ~Policy() = default;

  // Chooses an arm for round t (1-based). Deterministic given internal state.
  virtual int select(std::int64_t t) = 0;

  // Feeds the observed loss of the arm pulled at round t back into the state.
  virtual void observe(std::int64_t t, int arm, double loss) = 0;

  // Restores the freshly-constructed state.
  virtual void reset() = 0;

  virtual std::string name() const = 0;
};

// Lower-confidence-bound rule for interacting losses: score each arm by its
// last observed loss minus scale_b times the rounds elapsed since that
// observation (the interaction can have lowered the loss by at most scale_b
// per round). Unobserved arms score -inf, so the first K rounds pull each arm
// once in index order.
class InfluentialLcbPolicy : public Policy {
 public:
  explicit InfluentialLcbPolicy(int k, double scale_b = 1.0)
      : k_(k), scale_b_(scale_b) {
    if (k < 1) throw std::invalid_argument("ilcb: k must be >= 1");
    if (!(scale_b >= 0.0))
      throw std::invalid_argument("ilcb: scale_b must be >= 0");
    reset();
  }

  int select(std::int64_t) override {
    int best = 0;
    double best_score = score(0);
    for (int i = 1; i < k_; ++i) {
      const double s = score(i);
      if (s < best_score) {
        best = i;
        best_score = s;
      }
    }
    return best;
  }

  void observe(std::int64_t, int arm, double loss) override {
    check_arm(arm);
    for (int j = 0; j < k_; ++j) ++since_last_[static_cast<std::size_t>(j)];
    since_last_[static_cast<std::size_t>(arm)] = 1;
    last_loss_[static_cast<std::size_t>(arm)] = loss;
  }

  void reset() override {
    since_last_.assign(static_cast<std::size_t>(k_), 0);
    last_loss_.assign(static_cast<std::size_t>(k_),
                      -std::numeric_limits<double>::infinity());
  }

  std::string name() const override {
    if (scale_b_ == 1.0) return "ilcb";
    return "ilcb:B=" + std::to_string(scale_b_);
  }

  double score(int i) const {
    return last_loss_[static_cast<std::size_t>(i)] -
           scale_b_ * static_cast<double>(since_last_[static_cast<std::size_t>(i)]);
  }

  const std::vector<std::int64_t>& time_since_last() const { return since_last_; }
  const std::vector<double>& last_observed() const { return last_loss_; }
  double scale_b() const { return scale_b_; }

 private:
  void check_arm(int arm) const {
    if (arm < 0 || arm >= k_) throw std::out_of_range("ilcb: arm out of range");
  }

  int k_ = 0;
  double scale_b_ = 1.0;
  std::vector<std::int64_t> since_last_;  // rounds since arm was last observed
  std::vector<double> last_loss_;         // last observed loss, -inf if never
};

// Textbook LCB on empirical means: argmin μ̂_i − √(2 ln t / n_i). Rounds 1..K
// bootstrap by pulling each never-pulled arm in index order (the score is
// undefined at n_i = 0). Mean-based scores assume stationary losses, which is
// exactly what interacting losses break.
class StandardLcbPolicy : public Policy {
 public:
  explicit StandardLcbPolicy(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("lcb: k must be >= 1");
    reset();
  }

  int select(std::int64_t t) override {
    for (int i = 0; i < k_; ++i)
      if (n_[static_cast<std::size_t>(i)] == 0) return i;
    int best = 0;
    double best_score = score(0, t);
    for (int i = 1; i < k_; ++i) {
      const double s = score(i, t);
      if (s < best_score) {
        best = i;
        best_score = s;
      }
    }
    return best;
  }

  void observe(std::int64_t, int arm, double loss) override {
    if (arm < 0 || arm >= k_) throw std::out_of_range("lcb: arm out of range");
    sums_[static_cast<std::size_t>(arm)] += loss;
    ++n_[static_cast<std::size_t>(arm)];
  }

  void reset() override {
    sums_.assign(static_cast<std::size_t>(k_), 0.0);
    n_.assign(static_cast<std::size_t>(k_), 0);
  }

  std::string name() const override { return "lcb"; }

  double score(int i, std::int64_t t) const {
    const double n = static_cast<double>(n_[static_cast<std::size_t>(i)]);
    const double mean = sums_[static_cast<std::size_t>(i)] / n;
    return mean - std::sqrt(2.0 * std::log(static_cast<double>(t)) / n);
  }

  const std::vector<std::int64_t>& pull_counts() const { return n_; }
  const std::vector<double>& loss_sums() const { return sums_; }

 private:
  int k_ = 0;
  std::vector<double> sums_;
  std::vector<std::int64_t> n_;
};

class FixedArmPolicy : public Policy {
 public:
  FixedArmPolicy(int k, int arm) : k_(k), arm_(arm) {
    if (k < 1) throw std::invalid_argument("fixed: k must be >= 1");
    if (arm < 0 || arm >= k)
      throw std::out_of_range("fixed: arm out of range");
  }

  int select(std::int64_t) override { return arm_; }
  void observe(std::int64_t, int, double) override {}
  void reset() override {}
  std::string name() const override {
    return "fixed:" + std::to_string(arm_ + 1);  // reported 1-based
  }

 private:
  int k_ = 0;
  int arm_ = 0;
};

class RoundRobinPolicy : public Policy {
 public:
  explicit RoundRobinPolicy(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("round_robin: k must be >= 1");
  }

  int select(std::int64_t) override {
    const int arm = next_;
    next_ = (next_ + 1) % k_;
    return arm;
  }

  void observe(std::int64_t, int, double) override {}
  void reset() override { next_ = 0; }
  std::string name() const override { return "round_robin"; }

 private:
  int k_ = 0;
  int next_ = 0;
};

// Uniform-random arm choice from its own seeded stream; useful for producing
// identifiable synthetic logs (deterministic policies give collinear counts).
class RandomPolicy : public Policy {
 public:
  RandomPolicy(int k, std::uint64_t seed) : k_(k), seed_(seed), stream_(seed) {
    if (k < 1) throw std::invalid_argument("random: k must be >= 1");
  }

  int select(std::int64_t) override {
    return static_cast<int>(stream_.next_below(static_cast<std::uint64_t>(k_)));
  }

  void observe(std::int64_t, int, double) override {}
  void reset() override { stream_ = rng::Stream(seed_); }
  std::string name() const override {
    return "random:seed=" + std::to_string(seed_);
  }

 private:
  int k_ = 0;
  std::uint64_t seed_ = 0;
  rng::Stream stream_;
};

// Builds a policy from its CLI/config spelling:
//   ilcb | ilcb:B=<float> | lcb | fixed:<arm, 1-based> | round_robin
//   | random | random:seed=<uint>
inline std::unique_ptr<Policy> make_policy(const std::string& spec, int k) {
  if (spec == "ilcb") return std::make_unique<InfluentialLcbPolicy>(k);
  if (spec.rfind("ilcb:B=", 0) == 0) {
    const std::string arg = spec.substr(7);
    std::size_t used = 0;
    double b = 0.0;
    try {
      b = std::stod(arg, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("policy spec: bad scale in '" + spec + "'");
    }
    if (used != arg.size())
      throw std::invalid_argument("policy spec: bad scale in '" + spec + "'");
    return std::make_unique<InfluentialLcbPolicy>(k, b);
  }
  if (spec == "lcb") return std::make_unique<StandardLcbPolicy>(k);
  if (spec.rfind("fixed:", 0) == 0) {
    const std::string arg = spec.substr(6);
    std::size_t used = 0;
    int arm = 0;
    try {
      arm = std::stoi(arg, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("policy spec: bad arm in '" + spec + "'");
    }
    if (used != arg.size())
      throw std::invalid_argument("policy spec: bad arm in '" + spec + "'");
    if (arm < 1 || arm > k)
      throw std::invalid_argument("policy spec: arm must be in 1.." +
                                  std::to_string(k));
    return std::make_unique<FixedArmPolicy>(k, arm - 1);
  }
  if (spec == "round_robin") return std::make_unique<RoundRobinPolicy>(k);
  if (spec == "random") return std::make_unique<RandomPolicy>(k, 0);
  if (spec.rfind("random:seed=", 0) == 0) {
    const std::string arg = spec.substr(12);
    std::size_t used = 0;
    unsigned long long seed = 0;
    try {
      seed = std::stoull(arg, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("policy spec: bad seed in '" + spec + "'");
    }
    if (used != arg.size())
      throw std::invalid_argument("policy spec: bad seed in '" + spec + "'");
    return std::make_unique<RandomPolicy>(k, seed);
  }
  throw std::invalid_argument("policy spec: unknown policy '" + spec + "'");
}

}  // namespace infbandit
