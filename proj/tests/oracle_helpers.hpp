#pragma once

// Independent reference implementations used only by the tests. These are
// deliberately written as naive loops / closed forms, separate from the
// library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "infbandit/core.hpp"

namespace oracle {

// Objective of the continuous benchmark at a simplex point p:
// t·bᵀp + (t²/2)·pᵀAp, written out directly.
inline double simplex_objective(const std::vector<double>& b,
                                const infbandit::InteractionMatrix& a,
                                double t, const std::vector<double>& p) {
  const int k = a.k();
  double lin = 0.0;
  double quad = 0.0;
  for (int i = 0; i < k; ++i) {
    lin += b[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i)];
    for (int j = 0; j < k; ++j)
      quad += p[static_cast<std::size_t>(i)] * a.at(i, j) *
              p[static_cast<std::size_t>(j)];
  }
  return t * lin + 0.5 * t * t * quad;
}

// Dense grid search over the simplex with the given step (K = 2 or 3 only).
inline double grid_min_simplex(const std::vector<double>& b,
                               const infbandit::InteractionMatrix& a,
                               double t, double step) {
  const int k = a.k();
  const int n = static_cast<int>(std::llround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> p(static_cast<std::size_t>(k));
  if (k == 2) {
    for (int i = 0; i <= n; ++i) {
      p[0] = static_cast<double>(i) / n;
      p[1] = 1.0 - p[0];
      best = std::min(best, simplex_objective(b, a, t, p));
    }
    return best;
  }
  if (k == 3) {
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n - i; ++j) {
        p[0] = static_cast<double>(i) / n;
        p[1] = static_cast<double>(j) / n;
        p[2] = 1.0 - p[0] - p[1];
        best = std::min(best, simplex_objective(b, a, t, p));
      }
    return best;
  }
  throw std::invalid_argument("grid oracle supports K = 2 or 3 only");
}

// Closed-form minimum over the K=2 segment: substitute p = (1−u, u) and
// minimize the resulting scalar quadratic αu² + βu + γ over [0, 1].
inline double segment_min_k2(const std::vector<double>& b,
                             const infbandit::InteractionMatrix& a, double t) {
  if (a.k() != 2) throw std::invalid_argument("segment oracle needs K = 2");
  const double alpha = 0.5 * t * t * (a.at(0, 0) - 2.0 * a.at(0, 1) + a.at(1, 1));
  const double beta = t * (b[1] - b[0]) + t * t * (a.at(0, 1) - a.at(0, 0));
  const double gamma = t * b[0] + 0.5 * t * t * a.at(0, 0);
  const auto phi = [&](double u) { return (alpha * u + beta) * u + gamma; };
  double best = std::min(phi(0.0), phi(1.0));
  if (alpha > 0.0) {
    const double u = std::clamp(-beta / (2.0 * alpha), 0.0, 1.0);
    best = std::min(best, phi(u));
  }
  return best;
}

// Step-by-step episode replay written independently of env/core: accumulate
// the chosen arm's current expected loss, then add its interaction row.
inline double replay_total_by_hand(const infbandit::Instance& inst,
                                   const std::vector<int>& arms) {
  std::vector<double> losses = inst.initial_losses;
  double total = 0.0;
  for (int arm : arms) {
    total += losses[static_cast<std::size_t>(arm)];
    for (int j = 0; j < inst.k(); ++j)
      losses[static_cast<std::size_t>(j)] += inst.a.at(arm, j);
  }
  return total;
}

// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> central_diff_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> theta, double h) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    const double up = f(theta);
    theta[i] = saved - h;
    const double down = f(theta);
    theta[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Visits every nonnegative integer count vector of length k summing to t.
inline void for_each_integer_counts(
    int k, std::int64_t t,
    const std::function<void(const std::vector<std::int64_t>&)>& fn) {
  std::vector<std::int64_t> x(static_cast<std::size_t>(k), 0);
  std::function<void(int, std::int64_t)> rec = [&](int i, std::int64_t left) {
    if (i == k - 1) {
      x[static_cast<std::size_t>(i)] = left;
      fn(x);
      return;
    }
    for (std::int64_t v = 0; v <= left; ++v) {
      x[static_cast<std::size_t>(i)] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, t);
}

}  // namespace oracle
