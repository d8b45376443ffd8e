#ifndef TGEN_HMM_HPP
#define TGEN_HMM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tgen/mathutil.hpp"
#include "tgen/rng.hpp"

namespace tgen {

// K-state chain with diagonal-Gaussian emissions in normalized packet space.
// When idle_active is set, state K-1 (last) is the tail-anchored idle state.
struct HmmParams {
  int K = 0;
  bool idle_active = false;
  std::vector<double> alpha;  // K
  std::vector<double> A;      // K*K, row-major, rows sum to 1
  std::vector<Vec2> mu;       // per-state means
  std::vector<Vec2> sigma;    // per-state variances (diagonal)

  double a(int from, int to) const { return A[static_cast<std::size_t>(from) * K + to]; }
  double& a(int from, int to) { return A[static_cast<std::size_t>(from) * K + to]; }
  int idle_state() const { return idle_active ? K - 1 : -1; }
};

// Dirichlet pseudo-counts on transition rows. Core rows get lambda_self on the
// diagonal and lambda_off elsewhere; the idle row gets lambda_idle on the
// diagonal and lambda_leak back to core states.
struct HmmPriors {
  double lambda_self = 2.0;
  double lambda_off = 0.5;
  double lambda_idle = 10.0;
  double lambda_leak = 0.1;
};

// Per-flow smoothed inference output. gamma is L*K row-major; zeta is
// (L-1)*K*K, each t-slice a normalized joint over (state_t, state_{t+1}).
struct Posteriors {
  std::size_t len = 0;
  int K = 0;
  std::vector<double> gamma;
  std::vector<double> zeta;
  double loglik = 0.0;

  double g(std::size_t t, int k) const { return gamma[t * K + k]; }
  double zt(std::size_t t, int from, int to) const {
    return zeta[(t * K + from) * K + to];
  }
};

struct KmeansResult {
  std::vector<Vec2> centroids;
  std::vector<int> assignment;
};

// Lloyd iterations from seeded farthest-point initialization. Ties break
// toward the lowest index so the result is reproducible.
KmeansResult kmeans(std::span<const Vec2> points, int k, std::uint64_t seed, int max_iters = 100);

// Tail-aware initialization: k-means core states, idle state anchored at the
// normalized tail threshold when enough packets sit above it.
HmmParams init_hmm(const std::vector<std::vector<Vec2>>& train_z, int K_core,
                   double tail_norm_threshold, double theta_tail, double eps0, double chi,
                   std::uint64_t seed);

// Scaled forward-backward on one flow; exact log-likelihood, no underflow for
// long heavy-tailed flows.
Posteriors forward_backward(const HmmParams& params, std::span<const Vec2> flow);

struct EmOptions {
  double eps0 = 1e-4;
  int max_iters = 100;
  double rel_tol = 1e-5;  // on the mean per-packet log-likelihood
};

struct EmResult {
  HmmParams params;
  std::vector<double> loglik_trace;  // mean per-packet log-likelihood per iteration
  std::vector<std::string> warnings;
};

// Multi-sequence Baum-Welch with Dirichlet-smoothed transition rows. Counts
// accumulate across flows; transitions are never counted across flow
// boundaries. Starved or non-finite states are reset to neutral values.
EmResult em_fit(HmmParams params, const std::vector<std::vector<Vec2>>& flows,
                const HmmPriors& priors, const EmOptions& opts);

// 1 / (1 - a_kk); +infinity for an absorbing state.
double expected_dwell(const HmmParams& params, int k);

std::vector<int> sample_state_path(const HmmParams& params, std::size_t length, Rng& rng);

}  // namespace tgen

#endif  // TGEN_HMM_HPP
