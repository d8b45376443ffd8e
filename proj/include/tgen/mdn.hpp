#ifndef TGEN_MDN_HPP
#define TGEN_MDN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tgen/hmm.hpp"
#include "tgen/mathutil.hpp"
#include "tgen/rng.hpp"

namespace tgen {

struct MdnConfig {
  int M = 32;   // mixture components
  int H = 128;  // hidden width
  int K = 0;    // HMM state count; input is the one-hot state plus xi
  double sigma_floor = 1e-3;
  double nu_floor = 1.01;

  int input_dim() const { return K + 1; }
  int output_dim() const { return 6 * M; }
  std::size_t param_count() const;
};

// Feed-forward net: input -> H (tanh) -> H (tanh) -> 6M linear outputs.
// Output layout: [0,M) component logits, [M,3M) locations (component-major,
// coordinate-minor), [3M,5M) pre-softplus scales, [5M,6M) pre-softplus
// degrees of freedom. Weight matrices are row-major (output index major).
struct MdnParams {
  MdnConfig cfg;
  std::vector<double> w1, b1;  // H x (K+1), H
  std::vector<double> w2, b2;  // H x H, H
  std::vector<double> w3, b3;  // 6M x H, 6M

  std::size_t param_count() const { return cfg.param_count(); }
  void fill(double value);
};

// Symmetric uniform init scaled by fan-in; biases zero.
MdnParams init_mdn_params(const MdnConfig& cfg, std::uint64_t seed);
MdnParams zero_mdn_params(const MdnConfig& cfg);

// Constrained mixture parameters for one conditioning vector.
struct MixtureOutput {
  std::vector<double> omega;  // simplex of size M
  std::vector<Vec2> kappa;    // per-component locations
  std::vector<Vec2> sigma;    // per-component scales, >= sigma_floor
  std::vector<double> nu;     // per-component dof, >= nu_floor, shared across coords
};

// h = one-hot(state) ++ xi.
std::vector<double> make_conditioning(int state, int K, double xi);

MixtureOutput mdn_forward(const MdnParams& params, std::span<const double> h);

// log t_nu(y | kappa, sigma). Valid for sigma > 0 and nu > 0 (nu = 1 is the
// Cauchy density); the network's own floor keeps trained nu above 1.
double student_t_logpdf(double y, double kappa, double sigma, double nu);

// Negative log density of z under the diagonal bivariate Student-t mixture,
// evaluated with log-sum-exp.
double mixture_nll(const MixtureOutput& out, const Vec2& z);

// Posterior-weighted per-state slices of the training packets.
struct TrainingSet {
  int input_dim = 0;
  std::vector<double> h;       // size() * input_dim, flattened
  std::vector<Vec2> targets;
  std::vector<double> weights;
  std::vector<int> states;
  std::vector<std::string> warnings;

  std::size_t size() const { return targets.size(); }
  std::span<const double> input(std::size_t i) const {
    return std::span<const double>(h).subspan(i * input_dim, input_dim);
  }
};

// Emits one weighted sample per (state, packet) with posterior above the
// state's threshold; weights are the raw posteriors.
TrainingSet collect_state_samples(const std::vector<std::vector<Vec2>>& flows,
                                  const std::vector<Posteriors>& posteriors,
                                  std::span<const double> xi, int K, bool idle_active,
                                  double gamma_min_core, double gamma_min_idle);

// Rescales weights so every retained state's total equals the mean per-state
// total. Returns the per-state constants (0 for states with no samples).
std::vector<double> balance_state_weights(TrainingSet& set, int K);

TrainingSet build_training_set(const std::vector<std::vector<Vec2>>& flows,
                               const std::vector<Posteriors>& posteriors,
                               std::span<const double> xi, int K, bool idle_active,
                               double gamma_min_core, double gamma_min_idle);

struct OptimizerConfig {
  double learning_rate = 1e-3;
  int batch_size = 512;
  int epochs = 200;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int plateau_epochs = 10;     // early stop after this many epochs without
  double plateau_tol = 1e-4;   // relative improvement over the best loss
};

struct MdnTrainResult {
  MdnParams params;
  std::vector<double> loss_trace;  // per-epoch mean weighted loss
};

// Mini-batch maximum likelihood with hand-derived gradients (softmax,
// softplus, tanh, and the Student-t log-density including digamma terms).
// Deterministic given the seed; samples are visited in seeded shuffled order.
MdnTrainResult train_mdn(const TrainingSet& data, const MdnConfig& cfg,
                         const OptimizerConfig& opt, std::uint64_t seed);

// Sum of w * nll over the given samples; gradient accumulated into grad,
// which must be zero-filled by the caller. Exposed for gradient checking.
double mdn_loss_and_grad(const MdnParams& params, const TrainingSet& data,
                         std::span<const std::size_t> batch, MdnParams* grad);

// Component draw from omega (idle states optionally tempered), then one
// Student-t draw per coordinate with its own chi-square divisor, matching the
// product-form density the NLL optimizes.
Vec2 sample_mixture(const MixtureOutput& out, Rng& rng, double idle_temperature = 1.0,
                    bool is_idle_state = false);

}  // namespace tgen

#endif  // TGEN_MDN_HPP
