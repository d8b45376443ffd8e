#ifndef TGEN_PIPELINE_HPP
#define TGEN_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tgen/config.hpp"
#include "tgen/eval.hpp"
#include "tgen/model_io.hpp"
#include "tgen/synth.hpp"
#include "tgen/trace_io.hpp"

namespace tgen {

struct TrainArtifacts {
  ModelBundle bundle;
  TraceDataset train;
  TraceDataset test;
  std::vector<double> em_loglik_trace;
  std::vector<double> mdn_loss_trace;
  std::vector<std::string> warnings;
};

// split -> fit_normalizer -> init_hmm -> em_fit -> posteriors -> training set
// -> train_mdn. Stage seeds derive from the master seed, so runs repeat
// exactly.
TrainArtifacts train_pipeline(const TraceDataset& full, const PipelineConfig& cfg,
                              std::uint64_t seed);

TraceDataset generate_for(const ModelBundle& bundle, const TraceDataset& test,
                          double idle_temperature, std::uint64_t seed);

}  // namespace tgen

#endif  // TGEN_PIPELINE_HPP
