#include "tgen/synth.hpp"

#include "tgen/errors.hpp"

namespace tgen {

Flow generate_flow_with(const PacketSampler& sampler, const HmmParams& hmm,
                        const Normalizer& norm, const std::string& flow_id, std::size_t length,
                        std::uint64_t flow_seed) {
  if (length == 0) throw DataError("generate_flow: length must be >= 1");

  Rng rng(flow_seed);
  const std::vector<int> path = sample_state_path(hmm, length, rng);
  const double xi = flow_length_feature(norm, length);

  Flow flow;
  flow.id = flow_id;
  flow.packets.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    const Vec2 z = sampler(path[t], xi, rng);
    flow.packets.push_back(inverse_transform(norm, z));
  }
  return flow;
}

Flow generate_flow(const HmmParams& hmm, const MdnParams& mdn, const Normalizer& norm,
                   const std::string& flow_id, std::size_t length, const GenerationConfig& cfg,
                   std::uint64_t flow_seed) {
  const int idle = hmm.idle_state();
  PacketSampler sampler = [&](int state, double xi, Rng& rng) {
    const std::vector<double> h = make_conditioning(state, hmm.K, xi);
    const MixtureOutput out = mdn_forward(mdn, h);
    return sample_mixture(out, rng, cfg.idle_temperature, state == idle);
  };
  return generate_flow_with(sampler, hmm, norm, flow_id, length, flow_seed);
}

TraceDataset generate_dataset(const HmmParams& hmm, const MdnParams& mdn, const Normalizer& norm,
                              const TraceDataset& test, const GenerationConfig& cfg) {
  if (test.empty()) throw DataError("generate_dataset: empty test dataset");

  TraceDataset out;
  out.flows.reserve(test.flows.size());
  for (const auto& flow : test.flows) {
    if (flow.packets.empty()) continue;
    const std::uint64_t flow_seed = derive_seed(cfg.seed, flow.id);
    out.flows.push_back(
        generate_flow(hmm, mdn, norm, flow.id, flow.packets.size(), cfg, flow_seed));
  }
  return out;
}

}  // namespace tgen
