#ifndef TGEN_SYNTH_HPP
#define TGEN_SYNTH_HPP

#include <cstdint>
#include <functional>
#include <string>

#include "tgen/hmm.hpp"
#include "tgen/mdn.hpp"
#include "tgen/preprocess.hpp"
#include "tgen/trace_io.hpp"

namespace tgen {

struct GenerationConfig {
  double idle_temperature = 1.2;
  ClipConfig clip;
  std::uint64_t seed = 0;
};

// Emits one normalized packet given (state, flow-length feature).
using PacketSampler = std::function<Vec2(int state, double xi, Rng& rng)>;

// State path from the HMM, one sampler call per packet, raw packets via the
// inverse transform. The sampler seam exists so tests can drive the pipeline
// with a stub emitter.
Flow generate_flow_with(const PacketSampler& sampler, const HmmParams& hmm,
                        const Normalizer& norm, const std::string& flow_id, std::size_t length,
                        std::uint64_t flow_seed);

Flow generate_flow(const HmmParams& hmm, const MdnParams& mdn, const Normalizer& norm,
                   const std::string& flow_id, std::size_t length, const GenerationConfig& cfg,
                   std::uint64_t flow_seed);

// One synthetic flow per test flow with the same id and packet count. Each
// flow draws from its own RNG stream derived from (seed, flow id), so results
// do not depend on generation order.
TraceDataset generate_dataset(const HmmParams& hmm, const MdnParams& mdn, const Normalizer& norm,
                              const TraceDataset& test, const GenerationConfig& cfg);

}  // namespace tgen

#endif  // TGEN_SYNTH_HPP
