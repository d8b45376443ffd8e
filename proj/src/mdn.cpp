#include "tgen/mdn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tgen/errors.hpp"

namespace tgen {

namespace {

constexpr double kLogPi = 1.1447298858494001741;

// y = W x + b, W row-major (rows x cols).
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> y) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = b[i];
    const double* row = w.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

// Reusable per-sample buffers; one allocation per training run.
struct Workspace {
  std::vector<double> a1, a2, out;
  std::vector<double> omega, log_mix, resp;
  std::vector<double> d_out, d_a2, d_pre2, d_a1, d_pre1;
  std::vector<double> d_kappa, d_sigma_raw, d_nu_raw;  // per-component, raw outputs

  explicit Workspace(const MdnConfig& cfg)
      : a1(cfg.H),
        a2(cfg.H),
        out(cfg.output_dim()),
        omega(cfg.M),
        log_mix(cfg.M),
        resp(cfg.M),
        d_out(cfg.output_dim()),
        d_a2(cfg.H),
        d_pre2(cfg.H),
        d_a1(cfg.H),
        d_pre1(cfg.H),
        d_kappa(2 * cfg.M),
        d_sigma_raw(2 * cfg.M),
        d_nu_raw(cfg.M) {}
};

void forward_net(const MdnParams& p, std::span<const double> h, Workspace& ws) {
  affine(p.w1, p.b1, h, ws.a1);
  for (double& v : ws.a1) v = std::tanh(v);
  affine(p.w2, p.b2, ws.a1, ws.a2);
  for (double& v : ws.a2) v = std::tanh(v);
  affine(p.w3, p.b3, ws.a2, ws.out);
}

void softmax_inplace(std::span<double> logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

struct TLogPdfGrads {
  double d_kappa;
  double d_sigma;
  double d_nu;
};

double student_t_logpdf_with_grads(double y, double kappa, double sigma, double nu,
                                   TLogPdfGrads& g) {
  const double u = (y - kappa) / sigma;
  const double u2 = u * u;
  const double log_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                       0.5 * (std::log(nu) + kLogPi) - std::log(sigma);
  const double logpdf = log_c - 0.5 * (nu + 1.0) * std::log1p(u2 / nu);

  const double denom = nu + u2;
  g.d_kappa = (nu + 1.0) * u / (sigma * denom);
  g.d_sigma = nu * (u2 - 1.0) / (sigma * denom);
  g.d_nu = 0.5 * (digamma(0.5 * (nu + 1.0)) - digamma(0.5 * nu) - 1.0 / nu -
                  std::log1p(u2 / nu) + (nu + 1.0) * u2 / (nu * denom));
  return logpdf;
}

}  // namespace

std::size_t MdnConfig::param_count() const {
  const std::size_t in = input_dim();
  const std::size_t out = output_dim();
  const std::size_t h = H;
  return in * h + h + h * h + h + h * out + out;
}

void MdnParams::fill(double value) {
  for (auto* v : {&w1, &b1, &w2, &b2, &w3, &b3}) std::fill(v->begin(), v->end(), value);
}

MdnParams zero_mdn_params(const MdnConfig& cfg) {
  MdnParams p;
  p.cfg = cfg;
  p.w1.assign(static_cast<std::size_t>(cfg.H) * cfg.input_dim(), 0.0);
  p.b1.assign(cfg.H, 0.0);
  p.w2.assign(static_cast<std::size_t>(cfg.H) * cfg.H, 0.0);
  p.b2.assign(cfg.H, 0.0);
  p.w3.assign(static_cast<std::size_t>(cfg.output_dim()) * cfg.H, 0.0);
  p.b3.assign(cfg.output_dim(), 0.0);
  return p;
}

MdnParams init_mdn_params(const MdnConfig& cfg, std::uint64_t seed) {
  MdnParams p = zero_mdn_params(cfg);
  Rng rng = derive_rng(seed, "mdn_init");
  auto init_weights = [&](std::vector<double>& w, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * bound;
  };
  init_weights(p.w1, cfg.input_dim());
  init_weights(p.w2, cfg.H);
  init_weights(p.w3, cfg.H);
  return p;
}

std::vector<double> make_conditioning(int state, int K, double xi) {
  if (state < 0 || state >= K) throw DataError("make_conditioning: state out of range");
  std::vector<double> h(static_cast<std::size_t>(K) + 1, 0.0);
  h[state] = 1.0;
  h[K] = xi;
  return h;
}

MixtureOutput mdn_forward(const MdnParams& params, std::span<const double> h) {
  const MdnConfig& cfg = params.cfg;
  if (h.size() != static_cast<std::size_t>(cfg.input_dim()))
    throw DataError("mdn_forward: conditioning vector has wrong dimension");

  Workspace ws(cfg);
  forward_net(params, h, ws);
  for (double v : ws.out) {
    if (!std::isfinite(v)) throw NumericError("mdn_forward: non-finite network output");
  }

  const int M = cfg.M;
  MixtureOutput out;
  out.omega.assign(ws.out.begin(), ws.out.begin() + M);
  softmax_inplace(out.omega);
  out.kappa.resize(M);
  out.sigma.resize(M);
  out.nu.resize(M);
  for (int m = 0; m < M; ++m) {
    for (int d = 0; d < 2; ++d) {
      out.kappa[m][d] = ws.out[M + 2 * m + d];
      out.sigma[m][d] = softplus(ws.out[3 * M + 2 * m + d]) + cfg.sigma_floor;
    }
    out.nu[m] = softplus(ws.out[5 * M + m]) + cfg.nu_floor;
  }
  return out;
}

double student_t_logpdf(double y, double kappa, double sigma, double nu) {
  if (!(sigma > 0.0)) throw NumericError("student_t_logpdf: sigma must be positive");
  if (!(nu > 0.0)) throw NumericError("student_t_logpdf: nu must be positive");
  const double u = (y - kappa) / sigma;
  const double log_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                       0.5 * (std::log(nu) + kLogPi) - std::log(sigma);
  return log_c - 0.5 * (nu + 1.0) * std::log1p(u * u / nu);
}

double mixture_nll(const MixtureOutput& out, const Vec2& z) {
  const std::size_t M = out.omega.size();
  std::vector<double> log_mix(M, -std::numeric_limits<double>::infinity());
  for (std::size_t m = 0; m < M; ++m) {
    if (out.omega[m] <= 0.0) continue;
    double lt = 0.0;
    for (int d = 0; d < 2; ++d)
      lt += student_t_logpdf(z[d], out.kappa[m][d], out.sigma[m][d], out.nu[m]);
    log_mix[m] = std::log(out.omega[m]) + lt;
  }
  return -log_sum_exp(log_mix);
}

TrainingSet collect_state_samples(const std::vector<std::vector<Vec2>>& flows,
                                  const std::vector<Posteriors>& posteriors,
                                  std::span<const double> xi, int K, bool idle_active,
                                  double gamma_min_core, double gamma_min_idle) {
  if (flows.size() != posteriors.size() || flows.size() != xi.size())
    throw DataError("collect_state_samples: flows, posteriors, and xi must align");

  TrainingSet set;
  set.input_dim = K + 1;
  const int idle = idle_active ? K - 1 : -1;
  // Per-state slices, concatenated state-major.
  for (int k = 0; k < K; ++k) {
    const double threshold = (k == idle) ? gamma_min_idle : gamma_min_core;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const auto& flow = flows[i];
      const auto& post = posteriors[i];
      if (post.len != flow.size() || post.K != K)
        throw DataError("collect_state_samples: posterior shape mismatch");
      for (std::size_t t = 0; t < flow.size(); ++t) {
        const double g = post.g(t, k);
        if (g < threshold) continue;
        const std::size_t base = set.h.size();
        set.h.resize(base + set.input_dim, 0.0);
        set.h[base + k] = 1.0;
        set.h[base + K] = xi[i];
        set.targets.push_back(flow[t]);
        set.weights.push_back(g);
        set.states.push_back(k);
      }
    }
  }
  return set;
}

std::vector<double> balance_state_weights(TrainingSet& set, int K) {
  std::vector<double> totals(K, 0.0);
  for (std::size_t i = 0; i < set.size(); ++i) totals[set.states[i]] += set.weights[i];

  double grand = 0.0;
  int retained = 0;
  for (int k = 0; k < K; ++k) {
    if (totals[k] > 0.0) {
      grand += totals[k];
      ++retained;
    } else {
      set.warnings.push_back("state " + std::to_string(k) +
                             " retained no packets; excluded from balancing");
    }
  }
  std::vector<double> constants(K, 0.0);
  if (retained == 0) return constants;
  const double target = grand / retained;
  for (int k = 0; k < K; ++k) {
    if (totals[k] > 0.0) constants[k] = target / totals[k];
  }
  for (std::size_t i = 0; i < set.size(); ++i) set.weights[i] *= constants[set.states[i]];
  return constants;
}

TrainingSet build_training_set(const std::vector<std::vector<Vec2>>& flows,
                               const std::vector<Posteriors>& posteriors,
                               std::span<const double> xi, int K, bool idle_active,
                               double gamma_min_core, double gamma_min_idle) {
  TrainingSet set =
      collect_state_samples(flows, posteriors, xi, K, idle_active, gamma_min_core, gamma_min_idle);
  balance_state_weights(set, K);
  return set;
}

double mdn_loss_and_grad(const MdnParams& params, const TrainingSet& data,
                         std::span<const std::size_t> batch, MdnParams* grad) {
  const MdnConfig& cfg = params.cfg;
  const int M = cfg.M;
  const int H = cfg.H;
  const int in_dim = cfg.input_dim();
  const int out_dim = cfg.output_dim();
  Workspace ws(cfg);

  double total = 0.0;
  for (const std::size_t idx : batch) {
    const auto h = data.input(idx);
    const Vec2& z = data.targets[idx];
    const double w = data.weights[idx];
    if (w == 0.0) continue;

    forward_net(params, h, ws);

    // Constrained mixture parameters and per-component log densities.
    std::copy(ws.out.begin(), ws.out.begin() + M, ws.omega.begin());
    softmax_inplace(ws.omega);
    TLogPdfGrads tg;
    for (int m = 0; m < M; ++m) {
      const double nu_raw = ws.out[5 * M + m];
      const double nu = softplus(nu_raw) + cfg.nu_floor;
      double logt = 0.0;
      double nu_grad_acc = 0.0;
      for (int d = 0; d < 2; ++d) {
        const double sigma_raw = ws.out[3 * M + 2 * m + d];
        const double sigma = softplus(sigma_raw) + cfg.sigma_floor;
        logt += student_t_logpdf_with_grads(z[d], ws.out[M + 2 * m + d], sigma, nu, tg);
        ws.d_kappa[2 * m + d] = tg.d_kappa;
        ws.d_sigma_raw[2 * m + d] = tg.d_sigma * sigmoid(sigma_raw);
        nu_grad_acc += tg.d_nu;
      }
      ws.d_nu_raw[m] = nu_grad_acc * sigmoid(nu_raw);
      ws.log_mix[m] = std::log(ws.omega[m]) + logt;
    }
    const double lse = log_sum_exp(ws.log_mix);
    if (!std::isfinite(lse)) throw NumericError("train_mdn: non-finite loss for sample");
    total += w * (-lse);
    if (grad == nullptr) continue;

    for (int m = 0; m < M; ++m) ws.resp[m] = std::exp(ws.log_mix[m] - lse);

    // dLoss/d(logits) = w * (omega - resp); the rest scale by -w * resp_m.
    for (int m = 0; m < M; ++m) {
      ws.d_out[m] = w * (ws.omega[m] - ws.resp[m]);
      const double scale = -w * ws.resp[m];
      for (int d = 0; d < 2; ++d) {
        ws.d_out[M + 2 * m + d] = scale * ws.d_kappa[2 * m + d];
        ws.d_out[3 * M + 2 * m + d] = scale * ws.d_sigma_raw[2 * m + d];
      }
      ws.d_out[5 * M + m] = scale * ws.d_nu_raw[m];
    }

    // Backprop through the two tanh layers.
    for (int i = 0; i < out_dim; ++i) {
      const double g = ws.d_out[i];
      if (g != 0.0) {
        double* row = grad->w3.data() + static_cast<std::size_t>(i) * H;
        for (int j = 0; j < H; ++j) row[j] += g * ws.a2[j];
        grad->b3[i] += g;
      }
    }
    std::fill(ws.d_a2.begin(), ws.d_a2.end(), 0.0);
    for (int i = 0; i < out_dim; ++i) {
      const double g = ws.d_out[i];
      if (g == 0.0) continue;
      const double* row = params.w3.data() + static_cast<std::size_t>(i) * H;
      for (int j = 0; j < H; ++j) ws.d_a2[j] += g * row[j];
    }
    for (int j = 0; j < H; ++j) ws.d_pre2[j] = ws.d_a2[j] * (1.0 - ws.a2[j] * ws.a2[j]);

    for (int i = 0; i < H; ++i) {
      const double g = ws.d_pre2[i];
      double* row = grad->w2.data() + static_cast<std::size_t>(i) * H;
      for (int j = 0; j < H; ++j) row[j] += g * ws.a1[j];
      grad->b2[i] += g;
    }
    std::fill(ws.d_a1.begin(), ws.d_a1.end(), 0.0);
    for (int i = 0; i < H; ++i) {
      const double g = ws.d_pre2[i];
      if (g == 0.0) continue;
      const double* row = params.w2.data() + static_cast<std::size_t>(i) * H;
      for (int j = 0; j < H; ++j) ws.d_a1[j] += g * row[j];
    }
    for (int j = 0; j < H; ++j) ws.d_pre1[j] = ws.d_a1[j] * (1.0 - ws.a1[j] * ws.a1[j]);

    for (int i = 0; i < H; ++i) {
      const double g = ws.d_pre1[i];
      double* row = grad->w1.data() + static_cast<std::size_t>(i) * in_dim;
      for (int j = 0; j < in_dim; ++j) row[j] += g * h[j];
      grad->b1[i] += g;
    }
  }
  return total;
}

namespace {

struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double>& param, const std::vector<double>& grad, AdamState& state,
               const OptimizerConfig& opt, double bias1, double bias2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * grad[i];
    state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bias1;
    const double vhat = state.v[i] / bias2;
    param[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

}  // namespace

MdnTrainResult train_mdn(const TrainingSet& data, const MdnConfig& cfg,
                         const OptimizerConfig& opt, std::uint64_t seed) {
  if (data.size() == 0) throw DataError("train_mdn: empty training set");
  if (data.input_dim != cfg.input_dim())
    throw DataError("train_mdn: training set input dimension does not match config");

  MdnTrainResult result;
  result.params = init_mdn_params(cfg, seed);
  MdnParams grad = zero_mdn_params(cfg);

  AdamState s_w1(grad.w1.size()), s_b1(grad.b1.size());
  AdamState s_w2(grad.w2.size()), s_b2(grad.b2.size());
  AdamState s_w3(grad.w3.size()), s_b3(grad.b3.size());

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = derive_rng(seed, "mdn_shuffle");

  double best_loss = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;
  long step = 0;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j = shuffle_rng.below(i + 1);
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);

      grad.fill(0.0);
      const double batch_loss = mdn_loss_and_grad(result.params, data, batch, &grad);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train_mdn: non-finite loss in epoch " + std::to_string(epoch) +
                           ", batch starting at sample " + std::to_string(start));
      }
      epoch_loss += batch_loss;

      ++step;
      const double bias1 = 1.0 - std::pow(opt.beta1, step);
      const double bias2 = 1.0 - std::pow(opt.beta2, step);
      adam_step(result.params.w1, grad.w1, s_w1, opt, bias1, bias2);
      adam_step(result.params.b1, grad.b1, s_b1, opt, bias1, bias2);
      adam_step(result.params.w2, grad.w2, s_w2, opt, bias1, bias2);
      adam_step(result.params.b2, grad.b2, s_b2, opt, bias1, bias2);
      adam_step(result.params.w3, grad.w3, s_w3, opt, bias1, bias2);
      adam_step(result.params.b3, grad.b3, s_b3, opt, bias1, bias2);
    }

    const double mean_loss = epoch_loss / static_cast<double>(data.size());
    result.loss_trace.push_back(mean_loss);

    const double improvement =
        (best_loss - mean_loss) / std::max(std::abs(best_loss), 1e-12);
    if (std::isfinite(best_loss) && improvement < opt.plateau_tol) {
      if (++stale_epochs >= opt.plateau_epochs) break;
    } else {
      stale_epochs = 0;
    }
    best_loss = std::min(best_loss, mean_loss);
  }
  return result;
}

Vec2 sample_mixture(const MixtureOutput& out, Rng& rng, double idle_temperature,
                    bool is_idle_state) {
  const std::size_t M = out.omega.size();
  std::size_t m;
  if (is_idle_state && idle_temperature != 1.0) {
    // omega^(1/T), renormalized; computed in log space so T -> 0 degrades
    // gracefully to the argmax component.
    std::vector<double> logits(M, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < M; ++i) {
      if (out.omega[i] > 0.0) logits[i] = std::log(out.omega[i]) / idle_temperature;
    }
    softmax_inplace(logits);
    m = rng.categorical(logits);
  } else {
    m = rng.categorical(out.omega);
  }

  Vec2 z;
  for (int d = 0; d < 2; ++d) {
    const double n = rng.normal();
    const double c = rng.chi_square(out.nu[m]);
    z[d] = out.kappa[m][d] + out.sigma[m][d] * n / std::sqrt(c / out.nu[m]);
  }
  return z;
}

}  // namespace tgen
