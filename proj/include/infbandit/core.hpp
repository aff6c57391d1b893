#pragma once

// Domain types and closed-form loss algebra for bandits with loss
// interactions: pulling arm i adds row i of a symmetric matrix A to every
// arm's expected loss. Total loss of an episode depends on the pull counts
// only, via L(x) = l1ᵀx + ½xᵀAx − ½diag(A)ᵀx, which everything here builds on.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "infbandit/rng.hpp"

namespace infbandit {

// Symmetric K×K interaction matrix. Entry (i,j) is added to arm j's expected
// loss each time arm i is pulled. Immutable after construction; exact
// (bitwise) symmetry is enforced so downstream algebra can rely on it.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;

  InteractionMatrix(int k, std::vector<double> entries,
                    bool psd_certified = false)
      : k_(k), e_(std::move(entries)), psd_certified_(psd_certified) {
    if (k_ < 1) throw std::invalid_argument("interaction matrix: k must be >= 1");
    if (e_.size() != static_cast<std::size_t>(k_) * static_cast<std::size_t>(k_))
      throw std::invalid_argument("interaction matrix: entries size != k*k");
    for (double v : e_)
      if (!std::isfinite(v))
        throw std::invalid_argument("interaction matrix: non-finite entry");
    for (int i = 0; i < k_; ++i)
      for (int j = i + 1; j < k_; ++j)
        if (at(i, j) != at(j, i))
          throw std::invalid_argument("interaction matrix: not symmetric");
  }

  static InteractionMatrix zero(int k) {
    return InteractionMatrix(
        k, std::vector<double>(static_cast<std::size_t>(k) * k, 0.0), true);
  }

  static InteractionMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const int k = static_cast<int>(rows.size());
    std::vector<double> e;
    e.reserve(static_cast<std::size_t>(k) * k);
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != k)
        throw std::invalid_argument("interaction matrix: ragged rows");
      e.insert(e.end(), row.begin(), row.end());
    }
    return InteractionMatrix(k, std::move(e));
  }

  // Gram matrix BᵀB of a row-major K×K factor. Upper triangle is computed and
  // mirrored, so the result is bitwise symmetric and PSD by construction.
  static InteractionMatrix gram(const std::vector<double>& b, int k) {
    if (b.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(k))
      throw std::invalid_argument("gram: factor size != k*k");
    std::vector<double> e(static_cast<std::size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) {
        double s = 0.0;
        for (int r = 0; r < k; ++r)
          s += b[static_cast<std::size_t>(r) * k + i] *
               b[static_cast<std::size_t>(r) * k + j];
        e[static_cast<std::size_t>(i) * k + j] = s;
        e[static_cast<std::size_t>(j) * k + i] = s;
      }
    return InteractionMatrix(k, std::move(e), true);
  }

  int k() const { return k_; }

  double at(int i, int j) const {
    return e_[static_cast<std::size_t>(i) * k_ + j];
  }

  const std::vector<double>& entries() const { return e_; }

  // True when PSD-ness was established at construction (Gram form) or by an
  // explicit eigenvalue check (see is_psd below).
  bool psd_certified() const { return psd_certified_; }

  InteractionMatrix with_psd_certificate() const {
    return InteractionMatrix(k_, e_, true);
  }

  bool operator==(const InteractionMatrix& o) const {
    return k_ == o.k_ && e_ == o.e_;
  }

 private:
  int k_ = 0;
  std::vector<double> e_;
  bool psd_certified_ = false;
};

inline double max_abs_norm(const InteractionMatrix& a) {
  double m = 0.0;
  for (double v : a.entries()) m = std::max(m, std::abs(v));
  return m;
}

inline double frobenius_norm(const InteractionMatrix& a) {
  double s = 0.0;
  for (double v : a.entries()) s += v * v;
  return std::sqrt(s);
}

// Scale-relative eigenvalue tolerance used for PSD certification.
inline double eps_eig(const InteractionMatrix& a) {
  return 1e-9 * max_abs_norm(a);
}

// All K eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi
// rotations. Intended for small dense matrices (K up to a few hundred);
// accuracy far exceeds the eps_eig tolerance.
inline std::vector<double> symmetric_eigenvalues(const InteractionMatrix& a) {
  const int n = a.k();
  std::vector<double> m = a.entries();
  const auto ix = [n](int i, int j) {
    return static_cast<std::size_t>(i) * n + j;
  };
  double frob_sq = 0.0;
  for (double v : m) frob_sq += v * v;
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && n > 1; ++sweep) {
    double off_sq = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off_sq += m[ix(i, j)] * m[ix(i, j)];
    // off-diagonal mass at the level of rounding noise: done
    if (off_sq <= 1e-32 * std::max(frob_sq, 1e-300)) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = m[ix(p, q)];
        if (apq == 0.0) continue;
        const double theta = (m[ix(q, q)] - m[ix(p, p)]) / (2.0 * apq);
        // smaller-magnitude root of t² + 2θt − 1 = 0, numerically stable
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = m[ix(r, p)];
          const double arq = m[ix(r, q)];
          m[ix(r, p)] = m[ix(p, r)] = arp * c - arq * s;
          m[ix(r, q)] = m[ix(q, r)] = arp * s + arq * c;
        }
        m[ix(p, p)] -= t * apq;
        m[ix(q, q)] += t * apq;
        m[ix(p, q)] = m[ix(q, p)] = 0.0;
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = m[ix(i, i)];
  std::sort(eig.begin(), eig.end());
  return eig;
}

inline double spectral_norm(const InteractionMatrix& a) {
  const auto eig = symmetric_eigenvalues(a);
  return std::max(std::abs(eig.front()), std::abs(eig.back()));
}

inline bool is_psd(const InteractionMatrix& a) {
  if (a.psd_certified()) return true;
  return symmetric_eigenvalues(a).front() >= -eps_eig(a);
}

// Observation-noise model: the observed loss is the expected loss plus one
// scalar draw per round, sampled deterministically from (seed, round).
struct NoiseModel {
  enum class Kind { none, uniform_bounded, gaussian };

  Kind kind = Kind::none;
  double param = 0.0;  // bound b for uniform_bounded, sigma for gaussian

  static NoiseModel none() { return NoiseModel{Kind::none, 0.0}; }

  static NoiseModel uniform_bounded(double bound) {
    if (!(bound > 0.0) || !std::isfinite(bound))
      throw std::invalid_argument("noise: uniform bound must be > 0");
    return NoiseModel{Kind::uniform_bounded, bound};
  }

  static NoiseModel gaussian(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("noise: gaussian sigma must be > 0");
    return NoiseModel{Kind::gaussian, sigma};
  }

  double sample(std::uint64_t seed, std::uint64_t round) const {
    switch (kind) {
      case Kind::none:
        return 0.0;
      case Kind::uniform_bounded:
        return rng::uniform_symmetric(seed, round, param);
      case Kind::gaussian:
        return param * rng::gaussian(seed, round);
    }
    throw std::logic_error("noise: unknown kind");
  }

  std::string kind_name() const {
    switch (kind) {
      case Kind::none: return "none";
      case Kind::uniform_bounded: return "uniform_bounded";
      case Kind::gaussian: return "gaussian";
    }
    throw std::logic_error("noise: unknown kind");
  }

  static NoiseModel from_kind_name(const std::string& name, double param) {
    if (name == "none") {
      if (param != 0.0)
        throw std::invalid_argument("noise: kind none takes param 0");
      return none();
    }
    if (name == "uniform_bounded") return uniform_bounded(param);
    if (name == "gaussian") return gaussian(param);
    throw std::invalid_argument("noise: unknown kind '" + name + "'");
  }

  bool operator==(const NoiseModel& o) const {
    return kind == o.kind && param == o.param;
  }
};

// One bandit problem: interaction matrix, initial expected losses, noise.
struct Instance {
  InteractionMatrix a;
  std::vector<double> initial_losses;
  NoiseModel noise;

  Instance() = default;

  Instance(InteractionMatrix a_, std::vector<double> initial_losses_,
           NoiseModel noise_)
      : a(std::move(a_)),
        initial_losses(std::move(initial_losses_)),
        noise(noise_) {
    if (static_cast<int>(initial_losses.size()) != a.k())
      throw std::invalid_argument("instance: initial_losses length != k");
    for (double v : initial_losses)
      if (!std::isfinite(v))
        throw std::invalid_argument("instance: non-finite initial loss");
  }

  int k() const { return a.k(); }
};

// Per-arm pull counts; the sufficient statistic of an episode's total loss.
struct PullCounts {
  std::vector<std::int64_t> counts;

  PullCounts() = default;

  explicit PullCounts(std::vector<std::int64_t> counts_)
      : counts(std::move(counts_)) {
    for (std::int64_t c : counts)
      if (c < 0) throw std::invalid_argument("pull counts: negative entry");
  }

  static PullCounts from_arms(const std::vector<int>& arms, int k) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(k), 0);
    for (int arm : arms) {
      if (arm < 0 || arm >= k)
        throw std::out_of_range("pull counts: arm index out of range");
      ++c[static_cast<std::size_t>(arm)];
    }
    return PullCounts(std::move(c));
  }

  std::int64_t horizon() const {
    std::int64_t sum = 0;
    for (std::int64_t c : counts) sum += c;
    return sum;
  }
};

// Full record of one episode: chosen arms, observed (noisy) losses, and the
// matching noiseless expected losses, plus the seed that produced it.
struct EpisodeTrace {
  std::vector<int> arms;
  std::vector<double> observed_losses;
  std::vector<double> expected_losses;
  std::uint64_t seed = 0;

  std::int64_t horizon() const {
    return static_cast<std::int64_t>(arms.size());
  }
};

// b = l1 − ½·diag(A); the linear term of the closed-form total loss.
inline std::vector<double> effective_linear_term(const Instance& inst) {
  const int k = inst.k();
  std::vector<double> b(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    b[static_cast<std::size_t>(i)] =
        inst.initial_losses[static_cast<std::size_t>(i)] - 0.5 * inst.a.at(i, i);
  return b;
}

inline double quad_form(const InteractionMatrix& a,
                        const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != a.k())
    throw std::invalid_argument("quad_form: dimension mismatch");
  const int k = a.k();
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    double row = 0.0;
    for (int j = 0; j < k; ++j) row += a.at(i, j) * x[static_cast<std::size_t>(j)];
    s += x[static_cast<std::size_t>(i)] * row;
  }
  return s;
}

// Expected total loss of any episode with pull counts x, independent of the
// order the arms were pulled in: l1ᵀx + ½xᵀAx − ½diag(A)ᵀx.
inline double total_loss_closed_form(const Instance& inst,
                                     const PullCounts& x) {
  if (static_cast<int>(x.counts.size()) != inst.k())
    throw std::invalid_argument("total_loss_closed_form: dimension mismatch");
  const int k = inst.k();
  std::vector<double> xd(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    xd[static_cast<std::size_t>(i)] =
        static_cast<double>(x.counts[static_cast<std::size_t>(i)]);
  double linear = 0.0;
  double diag = 0.0;
  for (int i = 0; i < k; ++i) {
    linear += inst.initial_losses[static_cast<std::size_t>(i)] *
              xd[static_cast<std::size_t>(i)];
    diag += inst.a.at(i, i) * xd[static_cast<std::size_t>(i)];
  }
  return linear + 0.5 * quad_form(inst.a, xd) - 0.5 * diag;
}

// Noiseless replay of an arm sequence through the loss dynamics; returns the
// per-step expected losses of the chosen arms and the final pull counts.
inline std::pair<std::vector<double>, PullCounts> replay_expected(
    const Instance& inst, const std::vector<int>& arms) {
  const int k = inst.k();
  std::vector<double> losses = inst.initial_losses;
  std::vector<double> out;
  out.reserve(arms.size());
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  for (int arm : arms) {
    if (arm < 0 || arm >= k)
      throw std::out_of_range("replay_expected: arm index out of range");
    out.push_back(losses[static_cast<std::size_t>(arm)]);
    for (int j = 0; j < k; ++j)
      losses[static_cast<std::size_t>(j)] += inst.a.at(arm, j);
    ++counts[static_cast<std::size_t>(arm)];
  }
  return {std::move(out), PullCounts(std::move(counts))};
}

// Two-arm worst case for mean-based confidence bounds: A=[[1,1],[1,2]],
// l1=[1,1], noiseless. Always pulling arm 0 is optimal with total T(T+1)/2.
inline Instance counterexample_instance() {
  return Instance(InteractionMatrix::from_rows({{1.0, 1.0}, {1.0, 2.0}})
                      .with_psd_certificate(),
                  {1.0, 1.0}, NoiseModel::none());
}

// Two-arm instance with zero effective linear term: A=[[1,.5],[.5,.25]],
// l1=[.5,.125], noiseless. Always pulling arm 1 is optimal with total T²/8,
// and one pull of arm 0 already costs an extra T/4 + 1/8.
inline Instance linear_regret_instance() {
  return Instance(InteractionMatrix::from_rows({{1.0, 0.5}, {0.5, 0.25}})
                      .with_psd_certificate(),
                  {0.5, 0.125}, NoiseModel::none());
}

inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < inst.k(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < inst.k(); ++j) row.push_back(inst.a.at(i, j));
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"k", inst.k()},
                        {"a", std::move(rows)},
                        {"l1", inst.initial_losses},
                        {"noise",
                         {{"kind", inst.noise.kind_name()},
                          {"param", inst.noise.param}}}};
}

inline Instance instance_from_json(const nlohmann::json& j) {
  try {
    const int k = j.at("k").get<int>();
    const auto& rows = j.at("a");
    if (!rows.is_array() || static_cast<int>(rows.size()) != k)
      throw std::invalid_argument("instance json: 'a' must be k rows");
    std::vector<std::vector<double>> a(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
      a[static_cast<std::size_t>(i)] =
          rows.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
    auto l1 = j.at("l1").get<std::vector<double>>();
    const auto& jn = j.at("noise");
    NoiseModel noise = NoiseModel::from_kind_name(
        jn.at("kind").get<std::string>(), jn.at("param").get<double>());
    return Instance(InteractionMatrix::from_rows(a), std::move(l1), noise);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("instance json: ") + e.what());
  }
}

}  // namespace infbandit
