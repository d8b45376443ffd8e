#include "tgen/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tgen/errors.hpp"

namespace tgen {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kStarvedMass = 1e-8;

double sq_dist(const Vec2& a, const Vec2& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

// log N(z; mu, diag(sigma)) with sigma holding variances.
double diag_gauss_logpdf(const Vec2& z, const Vec2& mu, const Vec2& sigma) {
  double acc = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double diff = z[d] - mu[d];
    acc += -0.5 * (kLog2Pi + std::log(sigma[d])) - 0.5 * diff * diff / sigma[d];
  }
  return acc;
}

void check_finite(const HmmParams& p) {
  for (double v : p.alpha)
    if (!std::isfinite(v)) throw NumericError("hmm: non-finite alpha");
  for (double v : p.A)
    if (!std::isfinite(v)) throw NumericError("hmm: non-finite transition matrix");
  for (int k = 0; k < p.K; ++k) {
    for (int d = 0; d < 2; ++d) {
      if (!std::isfinite(p.mu[k][d])) throw NumericError("hmm: non-finite emission mean");
      if (!(p.sigma[k][d] > 0.0) || !std::isfinite(p.sigma[k][d]))
        throw NumericError("hmm: non-positive emission variance");
    }
  }
}

struct PooledStats {
  Vec2 mean{};
  Vec2 var{};
};

PooledStats pooled_stats(const std::vector<std::vector<Vec2>>& flows) {
  PooledStats s;
  std::size_t n = 0;
  for (const auto& flow : flows)
    for (const auto& z : flow) {
      s.mean[0] += z[0];
      s.mean[1] += z[1];
      ++n;
    }
  s.mean[0] /= static_cast<double>(n);
  s.mean[1] /= static_cast<double>(n);
  for (const auto& flow : flows)
    for (const auto& z : flow) {
      s.var[0] += (z[0] - s.mean[0]) * (z[0] - s.mean[0]);
      s.var[1] += (z[1] - s.mean[1]) * (z[1] - s.mean[1]);
    }
  s.var[0] /= static_cast<double>(n);
  s.var[1] /= static_cast<double>(n);
  return s;
}

std::vector<double> prior_matrix(const HmmPriors& priors, int K, bool idle_active) {
  std::vector<double> lambda(static_cast<std::size_t>(K) * K, 0.0);
  for (int i = 0; i < K; ++i) {
    const bool idle_row = idle_active && i == K - 1;
    for (int j = 0; j < K; ++j) {
      double v;
      if (idle_row) {
        v = (i == j) ? priors.lambda_idle : priors.lambda_leak;
      } else {
        v = (i == j) ? priors.lambda_self : priors.lambda_off;
      }
      lambda[static_cast<std::size_t>(i) * K + j] = v;
    }
  }
  return lambda;
}

}  // namespace

KmeansResult kmeans(std::span<const Vec2> points, int k, std::uint64_t seed, int max_iters) {
  const std::size_t n = points.size();
  if (k < 1) throw DataError("kmeans: k must be >= 1");
  if (n < static_cast<std::size_t>(k)) throw DataError("kmeans: fewer points than clusters");

  KmeansResult res;
  res.centroids.reserve(k);
  Rng rng = derive_rng(seed, "kmeans_init");

  // Farthest-point seeding: random first pick, then maximize distance to the
  // nearest chosen centroid, lowest index on ties.
  res.centroids.push_back(points[rng.below(n)]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (res.centroids.size() < static_cast<std::size_t>(k)) {
    const Vec2& last = res.centroids.back();
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(points[i], last));
      if (nearest[i] > best_dist) {
        best_dist = nearest[i];
        best = i;
      }
    }
    if (best_dist <= 0.0) throw DataError("kmeans: fewer distinct points than clusters");
    res.centroids.push_back(points[best]);
  }

  res.assignment.assign(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = sq_dist(points[i], res.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist(points[i], res.centroids[c]);
        if (d < best_dist) {
          best_dist = d;
          best = c;
        }
      }
      if (best != res.assignment[i]) {
        res.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    std::vector<Vec2> sums(k, Vec2{0.0, 0.0});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[res.assignment[i]][0] += points[i][0];
      sums[res.assignment[i]][1] += points[i][1];
      ++counts[res.assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Reseed an empty cluster at the point farthest from its centroid.
        std::size_t far = 0;
        double far_dist = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = sq_dist(points[i], res.centroids[res.assignment[i]]);
          if (d > far_dist) {
            far_dist = d;
            far = i;
          }
        }
        res.centroids[c] = points[far];
      } else {
        res.centroids[c] = {sums[c][0] / counts[c], sums[c][1] / counts[c]};
      }
    }
  }
  return res;
}

HmmParams init_hmm(const std::vector<std::vector<Vec2>>& train_z, int K_core,
                   double tail_norm_threshold, double theta_tail, double eps0, double chi,
                   std::uint64_t seed) {
  if (K_core < 1) throw DataError("init_hmm: K_core must be >= 1");

  std::vector<Vec2> pooled;
  for (const auto& flow : train_z) pooled.insert(pooled.end(), flow.begin(), flow.end());
  if (pooled.empty()) throw DataError("init_hmm: empty training data");
  if (pooled.size() < static_cast<std::size_t>(K_core))
    throw DataError("init_hmm: fewer packets than core states");

  std::size_t tail_count = 0;
  for (const auto& z : pooled)
    if (z[1] > tail_norm_threshold) ++tail_count;
  const double tail_frac = static_cast<double>(tail_count) / static_cast<double>(pooled.size());
  const bool idle_active = tail_frac > theta_tail;

  HmmParams params;
  params.idle_active = idle_active;
  params.K = K_core + (idle_active ? 1 : 0);

  const KmeansResult km = kmeans(pooled, K_core, seed);
  params.mu.resize(params.K);
  params.sigma.resize(params.K);
  std::vector<Vec2> sq_sums(K_core, Vec2{0.0, 0.0});
  std::vector<std::size_t> counts(K_core, 0);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const int c = km.assignment[i];
    for (int d = 0; d < 2; ++d) {
      const double diff = pooled[i][d] - km.centroids[c][d];
      sq_sums[c][d] += diff * diff;
    }
    ++counts[c];
  }
  for (int c = 0; c < K_core; ++c) {
    params.mu[c] = km.centroids[c];
    for (int d = 0; d < 2; ++d) params.sigma[c][d] = sq_sums[c][d] / counts[c] + eps0;
  }

  if (idle_active) {
    std::vector<double> payload_coord;
    payload_coord.reserve(pooled.size());
    for (const auto& z : pooled) payload_coord.push_back(z[0]);
    params.mu[params.K - 1] = {median(payload_coord), tail_norm_threshold};
    params.sigma[params.K - 1] = {chi, 1.0};
  }

  params.alpha.assign(params.K, 1.0 / params.K);
  params.A.assign(static_cast<std::size_t>(params.K) * params.K, 1.0 / params.K);
  return params;
}

Posteriors forward_backward(const HmmParams& params, std::span<const Vec2> flow) {
  check_finite(params);
  const int K = params.K;
  const std::size_t L = flow.size();
  if (L == 0) throw DataError("forward_backward: empty flow");

  // Per-step max-shifted emission likelihoods keep the scaled recursions away
  // from underflow even for far-tail packets.
  std::vector<double> eb(L * K);
  std::vector<double> shift(L);
  for (std::size_t t = 0; t < L; ++t) {
    double mt = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      const double lp = diag_gauss_logpdf(flow[t], params.mu[k], params.sigma[k]);
      eb[t * K + k] = lp;
      mt = std::max(mt, lp);
    }
    shift[t] = mt;
    for (int k = 0; k < K; ++k) eb[t * K + k] = std::exp(eb[t * K + k] - mt);
  }

  std::vector<double> fwd(L * K);
  std::vector<double> scale(L);
  double loglik = 0.0;
  for (std::size_t t = 0; t < L; ++t) {
    double ct = 0.0;
    for (int k = 0; k < K; ++k) {
      double v;
      if (t == 0) {
        v = params.alpha[k];
      } else {
        v = 0.0;
        for (int j = 0; j < K; ++j) v += fwd[(t - 1) * K + j] * params.a(j, k);
      }
      v *= eb[t * K + k];
      fwd[t * K + k] = v;
      ct += v;
    }
    if (!(ct > 0.0)) throw NumericError("forward_backward: zero forward mass");
    for (int k = 0; k < K; ++k) fwd[t * K + k] /= ct;
    scale[t] = ct;
    loglik += std::log(ct) + shift[t];
  }

  std::vector<double> bwd(L * K, 1.0);
  for (std::size_t t = L - 1; t-- > 0;) {
    for (int k = 0; k < K; ++k) {
      double v = 0.0;
      for (int l = 0; l < K; ++l) {
        v += params.a(k, l) * eb[(t + 1) * K + l] * bwd[(t + 1) * K + l];
      }
      bwd[t * K + k] = v / scale[t + 1];
    }
  }

  Posteriors post;
  post.len = L;
  post.K = K;
  post.loglik = loglik;
  post.gamma.resize(L * K);
  for (std::size_t t = 0; t < L; ++t) {
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      post.gamma[t * K + k] = fwd[t * K + k] * bwd[t * K + k];
      sum += post.gamma[t * K + k];
    }
    for (int k = 0; k < K; ++k) post.gamma[t * K + k] /= sum;
  }

  if (L > 1) {
    post.zeta.resize((L - 1) * K * K);
    for (std::size_t t = 0; t + 1 < L; ++t) {
      double sum = 0.0;
      for (int k = 0; k < K; ++k) {
        for (int l = 0; l < K; ++l) {
          const double v = fwd[t * K + k] * params.a(k, l) * eb[(t + 1) * K + l] *
                           bwd[(t + 1) * K + l] / scale[t + 1];
          post.zeta[(t * K + k) * K + l] = v;
          sum += v;
        }
      }
      for (int k = 0; k < K * K; ++k) post.zeta[t * K * K + k] /= sum;
    }
  }
  return post;
}

EmResult em_fit(HmmParams params, const std::vector<std::vector<Vec2>>& flows,
                const HmmPriors& priors, const EmOptions& opts) {
  if (flows.empty()) throw DataError("em_fit: no flows");
  std::size_t total_packets = 0;
  for (const auto& f : flows) total_packets += f.size();
  if (total_packets == 0) throw DataError("em_fit: no packets");

  const int K = params.K;
  const PooledStats pooled = pooled_stats(flows);
  const std::vector<double> lambda = prior_matrix(priors, K, params.idle_active);

  EmResult result;
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    std::vector<double> R(K, 0.0);
    std::vector<Vec2> sum_z(K, Vec2{0.0, 0.0});
    std::vector<Vec2> sum_zz(K, Vec2{0.0, 0.0});
    std::vector<double> n_start(K, 0.0);
    std::vector<double> n_trans(static_cast<std::size_t>(K) * K, 0.0);
    double total_ll = 0.0;

    for (const auto& flow : flows) {
      if (flow.empty()) continue;
      const Posteriors post = forward_backward(params, flow);
      total_ll += post.loglik;
      for (std::size_t t = 0; t < flow.size(); ++t) {
        for (int k = 0; k < K; ++k) {
          const double g = post.g(t, k);
          R[k] += g;
          for (int d = 0; d < 2; ++d) {
            sum_z[k][d] += g * flow[t][d];
            sum_zz[k][d] += g * flow[t][d] * flow[t][d];
          }
        }
      }
      for (int k = 0; k < K; ++k) n_start[k] += post.g(0, k);
      for (std::size_t t = 0; t + 1 < flow.size(); ++t) {
        for (int k = 0; k < K; ++k)
          for (int l = 0; l < K; ++l)
            n_trans[static_cast<std::size_t>(k) * K + l] += post.zt(t, k, l);
      }
    }

    const double mean_ll = total_ll / static_cast<double>(total_packets);
    result.loglik_trace.push_back(mean_ll);
    if (iter > 0) {
      const double rel = (mean_ll - prev_ll) / std::max(std::abs(prev_ll), 1e-12);
      if (rel < opts.rel_tol) break;
    }
    prev_ll = mean_ll;

    // M-step. Variances are second central moments around the updated means.
    for (int k = 0; k < K; ++k) {
      if (R[k] < kStarvedMass) {
        result.warnings.push_back("state " + std::to_string(k) +
                                  " starved (responsibility mass " + std::to_string(R[k]) +
                                  "); reset to pooled statistics");
        params.mu[k] = pooled.mean;
        for (int d = 0; d < 2; ++d) params.sigma[k][d] = pooled.var[d] + opts.eps0;
        for (int l = 0; l < K; ++l) params.a(k, l) = 1.0 / K;
        continue;
      }
      for (int d = 0; d < 2; ++d) {
        params.mu[k][d] = sum_z[k][d] / R[k];
        const double second = sum_zz[k][d] / R[k] - params.mu[k][d] * params.mu[k][d];
        params.sigma[k][d] = std::max(second, 0.0) + opts.eps0;
      }
      double row_sum = 0.0;
      for (int l = 0; l < K; ++l) {
        params.a(k, l) = n_trans[static_cast<std::size_t>(k) * K + l] +
                         lambda[static_cast<std::size_t>(k) * K + l];
        row_sum += params.a(k, l);
      }
      if (row_sum > 0.0) {
        for (int l = 0; l < K; ++l) params.a(k, l) /= row_sum;
      } else {
        for (int l = 0; l < K; ++l) params.a(k, l) = 1.0 / K;
      }
    }
    double start_sum = 0.0;
    for (int k = 0; k < K; ++k) start_sum += n_start[k];
    for (int k = 0; k < K; ++k) params.alpha[k] = n_start[k] / start_sum;

    // Post-M-step hygiene: neutral resets for anything non-finite, then
    // renormalize rows.
    for (int k = 0; k < K; ++k) {
      bool bad = false;
      for (int d = 0; d < 2; ++d) {
        if (!std::isfinite(params.mu[k][d]) || !std::isfinite(params.sigma[k][d]) ||
            params.sigma[k][d] <= 0.0) {
          bad = true;
        }
      }
      if (bad) {
        result.warnings.push_back("state " + std::to_string(k) +
                                  " produced non-finite emission parameters; reset");
        params.mu[k] = pooled.mean;
        for (int d = 0; d < 2; ++d) params.sigma[k][d] = pooled.var[d] + opts.eps0;
      }
      double row_sum = 0.0;
      bool row_bad = false;
      for (int l = 0; l < K; ++l) {
        if (!std::isfinite(params.a(k, l)) || params.a(k, l) < 0.0) row_bad = true;
        row_sum += params.a(k, l);
      }
      if (row_bad || !(row_sum > 0.0)) {
        for (int l = 0; l < K; ++l) params.a(k, l) = 1.0 / K;
      } else {
        for (int l = 0; l < K; ++l) params.a(k, l) /= row_sum;
      }
    }
    if (!std::isfinite(params.alpha[0])) {
      for (int k = 0; k < K; ++k) params.alpha[k] = 1.0 / K;
    }
  }

  result.params = std::move(params);
  return result;
}

double expected_dwell(const HmmParams& params, int k) {
  const double a_kk = params.a(k, k);
  if (a_kk >= 1.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 - a_kk);
}

std::vector<int> sample_state_path(const HmmParams& params, std::size_t length, Rng& rng) {
  if (length == 0) throw DataError("sample_state_path: length must be >= 1");
  std::vector<int> path(length);
  path[0] = static_cast<int>(rng.categorical(params.alpha));
  for (std::size_t t = 1; t < length; ++t) {
    const auto row = std::span<const double>(params.A).subspan(
        static_cast<std::size_t>(path[t - 1]) * params.K, params.K);
    path[t] = static_cast<int>(rng.categorical(row));
  }
  return path;
}

}  // namespace tgen
