#ifndef TGEN_CONFIG_HPP
#define TGEN_CONFIG_HPP

#include <string>

#include "tgen/hmm.hpp"
#include "tgen/mdn.hpp"
#include "tgen/preprocess.hpp"

namespace tgen {

// Every tunable of the pipeline in one flat structure. Each value can be
// overridden from a config file ("key = value" lines, '#' comments) and,
// where a flag exists, from the command line. Precedence: flag > file >
// default.
struct PipelineConfig {
  double test_fraction = 0.2;

  ClipConfig clip;
  double tail_quantile = 0.998;

  int k_core = 3;
  // Must stay below 1 - tail_quantile: the fraction of packets strictly above
  // the nearest-rank tail quantile is at most that, so a threshold at exactly
  // 0.002 could never fire.
  double theta_tail = 0.001;
  double eps0 = 1e-4;
  double chi = 4.0;
  HmmPriors priors;
  int em_max_iters = 100;
  double em_rel_tol = 1e-5;

  int mdn_components = 32;
  int mdn_hidden = 128;
  double sigma_floor = 1e-3;
  double nu_floor = 1.01;
  double gamma_min_core = 0.1;
  double gamma_min_idle = 0.01;
  OptimizerConfig optimizer;

  double idle_temperature = 1.2;

  int ac_max_lag = 20;
  int cdf_grid_steps = 1000;
};

// Parses the file into cfg, overriding only the keys present. Unknown keys
// and malformed lines raise ParseError with the line number.
void apply_config_file(PipelineConfig& cfg, const std::string& path);

void validate_config(const PipelineConfig& cfg);

}  // namespace tgen

#endif  // TGEN_CONFIG_HPP
