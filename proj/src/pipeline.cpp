#include "tgen/pipeline.hpp"

namespace tgen {

TrainArtifacts train_pipeline(const TraceDataset& full, const PipelineConfig& cfg,
                              std::uint64_t seed) {
  validate_config(cfg);

  TrainArtifacts art;
  auto [train, test] = split_by_flow(full, cfg.test_fraction, derive_seed(seed, "split"));
  art.train = std::move(train);
  art.test = std::move(test);

  art.bundle.normalizer = fit_normalizer(art.train, cfg.clip, cfg.tail_quantile);
  const NormalizedFlows norm_flows = normalize_dataset(art.bundle.normalizer, art.train);

  HmmParams init =
      init_hmm(norm_flows.z, cfg.k_core, art.bundle.normalizer.tail_norm_threshold,
               cfg.theta_tail, cfg.eps0, cfg.chi, derive_seed(seed, "kmeans"));
  EmOptions em_opts{cfg.eps0, cfg.em_max_iters, cfg.em_rel_tol};
  EmResult em = em_fit(std::move(init), norm_flows.z, cfg.priors, em_opts);
  art.bundle.hmm = std::move(em.params);
  art.em_loglik_trace = std::move(em.loglik_trace);
  art.warnings = std::move(em.warnings);

  std::vector<Posteriors> posteriors;
  posteriors.reserve(norm_flows.z.size());
  for (const auto& flow : norm_flows.z) posteriors.push_back(forward_backward(art.bundle.hmm, flow));

  TrainingSet samples =
      build_training_set(norm_flows.z, posteriors, norm_flows.xi, art.bundle.hmm.K,
                         art.bundle.hmm.idle_active, cfg.gamma_min_core, cfg.gamma_min_idle);
  for (auto& w : samples.warnings) art.warnings.push_back(std::move(w));

  MdnConfig mdn_cfg;
  mdn_cfg.M = cfg.mdn_components;
  mdn_cfg.H = cfg.mdn_hidden;
  mdn_cfg.K = art.bundle.hmm.K;
  mdn_cfg.sigma_floor = cfg.sigma_floor;
  mdn_cfg.nu_floor = cfg.nu_floor;

  MdnTrainResult mdn = train_mdn(samples, mdn_cfg, cfg.optimizer, derive_seed(seed, "mdn"));
  art.bundle.mdn_config = mdn_cfg;
  art.bundle.mdn = std::move(mdn.params);
  art.mdn_loss_trace = std::move(mdn.loss_trace);
  art.bundle.idle_temperature = cfg.idle_temperature;
  return art;
}

TraceDataset generate_for(const ModelBundle& bundle, const TraceDataset& test,
                          double idle_temperature, std::uint64_t seed) {
  GenerationConfig gen;
  gen.idle_temperature = idle_temperature;
  gen.clip = bundle.normalizer.clip;
  gen.seed = seed;
  return generate_dataset(bundle.hmm, bundle.mdn, bundle.normalizer, test, gen);
}

}  // namespace tgen
