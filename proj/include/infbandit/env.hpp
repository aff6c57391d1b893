#pragma once

// Stateful simulation of the interaction loop: at round t the caller pulls an
// arm, observes its current expected loss plus one noise draw, and the pull
// adds the arm's interaction-matrix row to every arm's expected loss.

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "infbandit/core.hpp"
#include "infbandit/io.hpp"
#include "infbandit/policies.hpp"

namespace infbandit {

class Environment {
 public:
  Environment(Instance inst, std::uint64_t seed)
      : inst_(std::move(inst)),
        losses_(inst_.initial_losses),
        counts_(std::vector<std::int64_t>(
            static_cast<std::size_t>(inst_.k()), 0)),
        seed_(seed) {}

  int k() const { return inst_.k(); }
  std::int64_t t() const { return t_; }  // current round, starts at 1
  const Instance& instance() const { return inst_; }
  const std::vector<double>& current_losses() const { return losses_; }
  const PullCounts& counts() const { return counts_; }
  std::uint64_t seed() const { return seed_; }

  double expected_loss(int arm) const {
    check_arm(arm);
    return losses_[static_cast<std::size_t>(arm)];
  }

  // Pulls an arm: returns expected loss + noise (noise depends only on
  // (seed, t)), then applies the interaction update and advances the round.
  double step(int arm) {
    check_arm(arm);
    const double expected = losses_[static_cast<std::size_t>(arm)];
    const double observed =
        expected + inst_.noise.sample(seed_, static_cast<std::uint64_t>(t_));
    for (int j = 0; j < inst_.k(); ++j)
      losses_[static_cast<std::size_t>(j)] += inst_.a.at(arm, j);
    ++counts_.counts[static_cast<std::size_t>(arm)];
    ++t_;
    return observed;
  }

 private:
  void check_arm(int arm) const {
    if (arm < 0 || arm >= inst_.k())
      throw std::out_of_range("environment: arm index out of range");
  }

  Instance inst_;
  std::vector<double> losses_;
  std::int64_t t_ = 1;
  PullCounts counts_;
  std::uint64_t seed_ = 0;
};

// Runs a policy for `horizon` rounds on a fresh environment. The policy is
// reset first, so the trace is a deterministic function of
// (instance, policy, horizon, seed).
inline EpisodeTrace run_policy(const Instance& inst, Policy& policy,
                               std::int64_t horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("run_policy: horizon must be >= 1");
  policy.reset();
  Environment env(inst, seed);
  EpisodeTrace trace;
  trace.seed = seed;
  trace.arms.reserve(static_cast<std::size_t>(horizon));
  trace.observed_losses.reserve(static_cast<std::size_t>(horizon));
  trace.expected_losses.reserve(static_cast<std::size_t>(horizon));
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const int arm = policy.select(t);
    const double expected = env.expected_loss(arm);
    const double observed = env.step(arm);
    policy.observe(t, arm, observed);
    trace.arms.push_back(arm);
    trace.observed_losses.push_back(observed);
    trace.expected_losses.push_back(expected);
  }
  return trace;
}

// CSV export, 1-based round and arm, shortest round-trip decimals.
inline void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
  out << "t,arm,observed,expected\n";
  for (std::size_t i = 0; i < trace.arms.size(); ++i) {
    out << (i + 1) << ',' << (trace.arms[i] + 1) << ','
        << io::format_double(trace.observed_losses[i]) << ','
        << io::format_double(trace.expected_losses[i]) << '\n';
  }
}

}  // namespace infbandit
