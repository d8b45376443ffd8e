// Acceptance suite: runs the project's release criteria end to end and prints
// one PASS/FAIL line per criterion. Exit code is the number of failures.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tgen/config.hpp"
#include "tgen/eval.hpp"
#include "tgen/hmm.hpp"
#include "tgen/mdn.hpp"
#include "tgen/model_io.hpp"
#include "tgen/pipeline.hpp"
#include "tgen/preprocess.hpp"
#include "tgen/rng.hpp"
#include "tgen/synth.hpp"
#include "tgen/trace_io.hpp"

#include "test_util.hpp"

using namespace tgen;
namespace tu = tgen::testutil;

namespace {

struct Harness {
  int failures = 0;

  void run(int number, const std::string& name, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << number << ": " << name;
    if (!detail.empty()) std::cout << " [" << detail << "]";
    std::cout << std::endl;
    if (!ok) ++failures;
  }

  void skip(int number, const std::string& name, const std::string& why) {
    std::cout << "SKIP criterion " << number << ": " << name << " [" << why << "]" << std::endl;
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

// ---- criterion 1 ----------------------------------------------------------

bool architecture_accounting(std::string& detail) {
  MdnConfig cfg;
  cfg.M = 32;
  cfg.H = 128;
  cfg.K = 4;
  const MdnParams mdn = zero_mdn_params(cfg);
  detail = "params=" + std::to_string(cfg.param_count()) +
           " payload_bytes=" + std::to_string(mdn_payload_bytes(mdn));
  return cfg.param_count() == 42048 && mdn_payload_bytes(mdn) == 168192;
}

// ---- criterion 2 ----------------------------------------------------------

bool hmm_oracle_equivalence(std::string& detail) {
  Rng rng(2026);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int K = 1 + static_cast<int>(rng.below(3));
    const std::size_t L = 1 + rng.below(6);
    const HmmParams p = tu::random_hmm(K, rng);
    const std::vector<Vec2> flow = tu::random_flow(L, rng);

    const Posteriors post = forward_backward(p, flow);
    const auto brute = tu::brute_force_posteriors(p, flow);

    worst = std::max(worst, std::abs(post.loglik - brute.loglik));
    for (std::size_t t = 0; t < L; ++t)
      for (int k = 0; k < K; ++k)
        worst = std::max(worst, std::abs(post.g(t, k) - brute.gamma[t][k]));
    for (std::size_t t = 0; t + 1 < L; ++t)
      for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l)
          worst = std::max(worst, std::abs(post.zt(t, k, l) - brute.zeta[t][k][l]));
  }
  detail = "max |delta| = " + fmt(worst) + " over 100 instances";
  return worst < 1e-10;
}

// ---- criterion 3 ----------------------------------------------------------

bool em_monotonicity(std::string& detail) {
  Rng rng(301);
  double worst_drop = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    const HmmParams truth = tu::random_hmm(2 + rep % 2, rng);
    const auto flows = tu::sample_hmm_flows(truth, 25, 40, rng);
    HmmParams start = tu::random_hmm(truth.K, rng);

    const EmResult res =
        em_fit(start, flows, HmmPriors{0, 0, 0, 0}, EmOptions{0.0, 50, -1.0});
    for (std::size_t i = 1; i < res.loglik_trace.size(); ++i) {
      worst_drop = std::max(worst_drop, res.loglik_trace[i - 1] - res.loglik_trace[i]);
    }
  }
  detail = "worst per-packet drop = " + fmt(worst_drop);
  return worst_drop <= 1e-9;
}

// ---- criterion 4 ----------------------------------------------------------

bool planted_hmm_recovery(std::string& detail) {
  const HmmParams truth =
      tu::make_hmm(2, {0.6, 0.4}, {0.92, 0.08, 0.15, 0.85}, {{-2.0, -2.0}, {2.0, 2.0}},
                   {{0.0625, 0.0625}, {0.0625, 0.0625}});
  Rng rng(404);
  const auto flows = tu::sample_hmm_flows(truth, 200, 100, rng);

  HmmParams init = init_hmm(flows, 2, 100.0, 0.001, 1e-4, 4.0, 17);
  const EmResult res = em_fit(init, flows, HmmPriors{}, EmOptions{1e-6, 100, 1e-7});

  // Align states to the planted labels by nearest means.
  std::vector<int> map(2);
  for (int k = 0; k < 2; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 2; ++j) {
      const double d = std::abs(res.params.mu[j][0] - truth.mu[k][0]) +
                       std::abs(res.params.mu[j][1] - truth.mu[k][1]);
      if (d < best) {
        best = d;
        map[k] = j;
      }
    }
  }
  if (map[0] == map[1]) {
    detail = "state alignment collapsed";
    return false;
  }
  double worst = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l)
      worst = std::max(worst, std::abs(res.params.a(map[k], map[l]) - truth.a(k, l)));
  detail = "max |A - A*| = " + fmt(worst);
  return worst < 0.05;
}

// ---- criterion 5 ----------------------------------------------------------

bool student_t_correctness(std::string& detail) {
  const double cauchy = student_t_logpdf(0.0, 0.0, 1.0, 1.0);
  const double cauchy_err = std::abs(cauchy - std::log(1.0 / M_PI));

  double gauss_err = 0.0;
  for (double dy = -3.0; dy <= 3.0; dy += 0.25) {
    constexpr double kLog2Pi = 1.8378770664093454836;
    const double g = -0.5 * kLog2Pi - 0.5 * dy * dy;
    gauss_err = std::max(gauss_err, std::abs(student_t_logpdf(dy, 0.0, 1.0, 1e6) - g));
  }
  detail = "cauchy_err=" + fmt(cauchy_err) + " gauss_err=" + fmt(gauss_err);
  return cauchy_err < 1e-12 && gauss_err < 1e-3;
}

// ---- criterion 6 ----------------------------------------------------------

bool gradient_fidelity(std::string& detail) {
  MdnConfig cfg;
  cfg.M = 2;
  cfg.H = 8;
  cfg.K = 2;
  Rng rng(606);
  double worst = 0.0;

  for (int rep = 0; rep < 10; ++rep) {
    MdnParams params = init_mdn_params(cfg, 900 + rep);
    Rng jitter(1000 + rep);
    for (auto* block : {&params.w1, &params.b1, &params.w2, &params.b2, &params.w3, &params.b3})
      for (double& v : *block) v += 0.8 * (jitter.uniform() - 0.5);

    TrainingSet set;
    set.input_dim = cfg.input_dim();
    const int state = static_cast<int>(rng.below(cfg.K));
    const auto h = make_conditioning(state, cfg.K, rng.normal());
    set.h.assign(h.begin(), h.end());
    set.targets.push_back(Vec2{2.0 * rng.normal(), 2.0 * rng.normal()});
    set.weights.push_back(0.25 + rng.uniform());
    set.states.push_back(state);
    const std::vector<std::size_t> batch{0};

    MdnParams grad = zero_mdn_params(cfg);
    mdn_loss_and_grad(params, set, batch, &grad);

    std::vector<std::vector<double>*> pblocks{&params.w1, &params.b1, &params.w2,
                                              &params.b2, &params.w3, &params.b3};
    std::vector<std::vector<double>*> gblocks{&grad.w1, &grad.b1, &grad.w2,
                                              &grad.b2, &grad.w3, &grad.b3};
    for (std::size_t b = 0; b < pblocks.size(); ++b) {
      for (std::size_t i = 0; i < pblocks[b]->size(); ++i) {
        const double theta = (*pblocks[b])[i];
        const double step = 1e-5 * std::max(1.0, std::abs(theta));
        (*pblocks[b])[i] = theta + step;
        const double up = mdn_loss_and_grad(params, set, batch, nullptr);
        (*pblocks[b])[i] = theta - step;
        const double down = mdn_loss_and_grad(params, set, batch, nullptr);
        (*pblocks[b])[i] = theta;

        const double fd = (up - down) / (2.0 * step);
        const double an = (*gblocks[b])[i];
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
        worst = std::max(worst, rel);
      }
    }
  }
  detail = "max relative gradient error = " + fmt(worst);
  return worst < 1e-4;
}

// ---- criterion 7 ----------------------------------------------------------

bool sampling_density_agreement(std::string& detail) {
  MixtureOutput out;
  out.omega = {0.5, 0.3, 0.2};
  out.kappa = {Vec2{-1.5, 0.5}, Vec2{0.8, -1.0}, Vec2{2.5, 1.8}};
  out.sigma = {Vec2{0.7, 0.5}, Vec2{0.4, 0.9}, Vec2{1.2, 0.6}};
  out.nu = {3.0, 5.0, 8.0};

  double worst_ks = 0.0;
  for (int d = 0; d < 2; ++d) {
    // Marginal density of coordinate d is the univariate t mixture.
    auto density = [&](double y) {
      double acc = 0.0;
      for (int m = 0; m < 3; ++m)
        acc += out.omega[m] *
               std::exp(student_t_logpdf(y, out.kappa[m][d], out.sigma[m][d], out.nu[m]));
      return acc;
    };

    // Cumulative trapezoid on a fine grid; tails beyond +-400 are < 1e-6.
    const double lo = -400.0, hi = 400.0;
    const int n_grid = 400000;
    const double h = (hi - lo) / n_grid;
    std::vector<double> cdf(n_grid + 1, 0.0);
    double prev = density(lo);
    for (int i = 1; i <= n_grid; ++i) {
      const double cur = density(lo + i * h);
      cdf[i] = cdf[i - 1] + 0.5 * h * (prev + cur);
      prev = cur;
    }
    const double total = cdf[n_grid];
    auto cdf_at = [&](double y) {
      const double pos = (y - lo) / h;
      const int i = std::clamp(static_cast<int>(pos), 0, n_grid - 1);
      const double frac = pos - i;
      return std::clamp((cdf[i] * (1.0 - frac) + cdf[i + 1] * frac) / total, 0.0, 1.0);
    };

    Rng rng(700 + d);
    const int n = 100000;
    std::vector<double> samples(n);
    for (int i = 0; i < n; ++i) samples[i] = sample_mixture(out, rng)[d];
    std::sort(samples.begin(), samples.end());

    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
      const double f = cdf_at(samples[i]);
      ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
      ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
    }
    worst_ks = std::max(worst_ks, ks);
  }

  // Student-t variance identity at nu = 5.
  MixtureOutput t5;
  t5.omega = {1.0};
  t5.kappa = {Vec2{0.0, 0.0}};
  t5.sigma = {Vec2{1.0, 1.0}};
  t5.nu = {5.0};
  Rng rng(707);
  double sq = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const Vec2 z = sample_mixture(t5, rng);
    sq += z[0] * z[0];
  }
  const double var = sq / n;
  const double var_rel = std::abs(var - 5.0 / 3.0) / (5.0 / 3.0);

  detail = "ks=" + fmt(worst_ks) + " t5_var_rel=" + fmt(var_rel);
  return worst_ks < 0.01 && var_rel < 0.03;
}

// ---- criterion 8 ----------------------------------------------------------

bool metric_oracles(std::string& detail) {
  Rng rng(808);

  // Autocorrelation against the definition-level computation.
  double ac_err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> xs(6 + rng.below(60));
    for (double& x : xs) x = rng.normal() + 0.2 * rng.uniform();
    const auto ac = autocorrelation(xs, 8);
    for (std::size_t lag = 1; lag <= ac.size(); ++lag) {
      const std::size_t n = xs.size();
      double mu = 0.0;
      for (double x : xs) mu += x;
      mu /= static_cast<double>(n);
      double num = 0.0, den = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        den += (xs[t] - mu) * (xs[t] - mu);
        if (t + lag < n) num += (xs[t] - mu) * (xs[t + lag] - mu);
      }
      ac_err = std::max(ac_err, std::abs(ac[lag - 1] - num / den));
    }
  }

  // Wasserstein-1 properties.
  double w_err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(4 + rng.below(16)), b(4 + rng.below(16)), c(4 + rng.below(16));
    for (double& x : a) x = 3.0 * rng.normal();
    for (double& x : b) x = 1.0 + 2.0 * rng.normal();
    for (double& x : c) x = -1.0 + 4.0 * rng.normal();

    w_err = std::max(w_err, wasserstein_1d(a, a));
    w_err = std::max(w_err, std::abs(wasserstein_1d(a, b) - wasserstein_1d(b, a)));
    const double violation = wasserstein_1d(a, c) - wasserstein_1d(a, b) - wasserstein_1d(b, c);
    w_err = std::max(w_err, violation);

    const double shift = 4.0 * rng.uniform() - 2.0;
    std::vector<double> shifted = a;
    for (double& x : shifted) x += shift;
    w_err = std::max(w_err, std::abs(wasserstein_1d(a, shifted) - std::abs(shift)));
  }

  // Two-flow average CDF example.
  TraceDataset two;
  two.flows = {Flow{"a", {Packet{1.0, 0.1}}}, Flow{"b", {Packet{3.0, 0.1}}}};
  const std::vector<double> grid{2.0};
  const double cdf = avg_flow_cdf(two, Feature::payload, grid)[0];

  detail = "ac_err=" + fmt(ac_err) + " w_err=" + fmt(w_err) + " cdf=" + fmt(cdf);
  return ac_err < 1e-10 && w_err < 1e-9 && std::abs(cdf - 0.5) < 1e-12;
}

// ---- criterion 9 ----------------------------------------------------------

TraceDataset planted_dataset(std::uint64_t seed) {
  // Planted generator: 2-state HMM with diagonal-Gaussian emissions in
  // normalized space, mapped to the raw domain through a fixed normalizer.
  const HmmParams truth =
      tu::make_hmm(2, {0.5, 0.5}, {0.90, 0.10, 0.20, 0.80}, {{-1.2, -0.8}, {1.0, 1.2}},
                   {{0.30, 0.30}, {0.40, 0.40}});
  Normalizer norm;
  norm.m = {5.5, -2.5};
  norm.r = {1.0, 1.2};
  norm.flow_len_mean = 4.0;
  norm.flow_len_std = 0.5;

  Rng rng(seed);
  TraceDataset ds;
  for (int i = 0; i < 150; ++i) {
    const std::size_t len = 30 + rng.below(71);
    Flow flow;
    flow.id = "p" + std::to_string(i);
    const auto z_flow = tu::sample_hmm_flows(truth, 1, len, rng)[0];
    for (const auto& z : z_flow) flow.packets.push_back(inverse_transform(norm, z));
    ds.flows.push_back(std::move(flow));
  }
  return ds;
}

bool end_to_end_self_consistency(std::string& detail) {
  const TraceDataset data = planted_dataset(909);

  PipelineConfig cfg;
  cfg.test_fraction = 0.25;
  cfg.k_core = 2;
  cfg.theta_tail = 0.5;  // planted data has no heavy tail; keep K = 2
  cfg.mdn_components = 4;
  cfg.mdn_hidden = 32;
  cfg.optimizer.learning_rate = 3e-3;
  cfg.optimizer.batch_size = 256;
  cfg.optimizer.epochs = 60;
  cfg.optimizer.plateau_epochs = 60;

  const TrainArtifacts art = train_pipeline(data, cfg, 11);
  const TraceDataset synth = generate_for(art.bundle, art.test, 1.0, 13);

  double worst_wd = 0.0, worst_ac = 0.0;
  for (Feature f : {Feature::payload, Feature::iat}) {
    worst_wd = std::max(worst_wd, wasserstein_1d(pooled_log_values(art.test, f),
                                                 pooled_log_values(synth, f)));
    worst_ac = std::max(worst_ac, ac_rmse(art.test, synth, f, 20));
  }
  detail = "max wd(log)=" + fmt(worst_wd) + " max ac_rmse=" + fmt(worst_ac);
  return worst_wd <= 0.15 && worst_ac <= 0.1;
}

// ---- criterion 10 (conditional) -------------------------------------------

struct TableOneRow {
  const char* file;
  std::size_t flows;
  std::size_t packets;
  double avg_pkts;
  double avg_duration;
};

bool dataset_reproduction(const std::string& capture_dir, std::string& detail) {
  const TableOneRow rows[] = {
      {"http.csv", 718, 10000, 13.9, 2.95},
      {"udp.csv", 588, 10000, 17.0, 8.87},
      {"facebook_audio.csv", 250, 91737, 366.9, 97.36},
      {"facebook_video.csv", 173, 156982, 907.4, 55.78},
  };
  std::ostringstream report;
  bool all_ok = true;
  for (const auto& row : rows) {
    const std::string path = capture_dir + "/" + row.file;
    if (!std::filesystem::exists(path)) {
      report << row.file << ": missing; ";
      continue;
    }
    const SummaryStats s = summarize(load_trace(path));
    const bool ok = s.total_flows == row.flows && s.total_packets == row.packets &&
                    std::abs(s.avg_pkts_per_flow - row.avg_pkts) < 0.05 &&
                    std::abs(s.avg_flow_duration - row.avg_duration) < 0.005;
    report << row.file << (ok ? ": ok; " : ": MISMATCH; ");
    all_ok = all_ok && ok;
  }
  detail = report.str();
  return all_ok;
}

}  // namespace

int main() {
  Harness h;
  h.run(1, "architecture accounting (42048 params, 168192 bytes)", architecture_accounting);
  h.run(2, "forward-backward equals exhaustive path enumeration", hmm_oracle_equivalence);
  h.run(3, "EM log-likelihood monotonicity without priors/floors", em_monotonicity);
  h.run(4, "planted 2-state HMM transition recovery", planted_hmm_recovery);
  h.run(5, "Student-t logpdf closed-form and Gaussian-limit values", student_t_correctness);
  h.run(6, "analytic gradients vs central finite differences", gradient_fidelity);
  h.run(7, "sampling agrees with the density (KS and variance)", sampling_density_agreement);
  h.run(8, "metric oracles (autocorrelation, W1, average CDF)", metric_oracles);
  h.run(9, "end-to-end self-consistency on planted data", end_to_end_self_consistency);

  const char* capture_dir = std::getenv("TGEN_CAPTURE_DIR");
  if (capture_dir == nullptr) {
    h.skip(10, "dataset-dependent reproduction",
           "set TGEN_CAPTURE_DIR to a directory with the public captures; "
           "best-effort criterion, not a gate");
  } else {
    std::string detail;
    const bool ok = dataset_reproduction(capture_dir, detail);
    std::cout << (ok ? "PASS" : "INFO") << " criterion 10: dataset-dependent reproduction ["
              << detail << "] (best-effort, not a gate)" << std::endl;
  }

  std::cout << (h.failures == 0 ? "ACCEPTANCE: all gating criteria passed"
                                : "ACCEPTANCE: " + std::to_string(h.failures) + " criteria failed")
            << std::endl;
  return h.failures == 0 ? 0 : 1;
}
