#ifndef TGEN_EVAL_HPP
#define TGEN_EVAL_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tgen/trace_io.hpp"

namespace tgen {

enum class Feature { payload, iat };

// Per-feature fidelity block: CDF curve on a shared grid plus the two scalar
// metrics (both computed on log-transformed values).
struct FeatureReport {
  std::string name;
  std::vector<double> grid;       // raw units
  std::vector<double> real_cdf;   // average per-flow CDF of the real data
  std::vector<double> synth_cdf;
  double ac_rmse = 0.0;
  double wd = 0.0;
};

struct FidelityReport {
  std::vector<FeatureReport> features;
  SummaryStats real_summary;
  SummaryStats synth_summary;
};

double feature_value(const Packet& p, Feature f);

// Percentile grid (0.1% steps) of the pooled values of one feature.
std::vector<double> percentile_grid(const TraceDataset& ds, Feature f, int steps = 1000);

// Equal-weight-per-flow average of the flows' empirical CDFs, evaluated on a
// sorted grid. Empty flows are skipped.
std::vector<double> avg_flow_cdf(const TraceDataset& ds, Feature f,
                                 std::span<const double> grid);

// Mean-centered autocorrelation of one sequence at lags 1..max_lag, biased
// estimator (denominator L). Zero-variance sequences yield 0 at every lag.
std::vector<double> autocorrelation(std::span<const double> xs, int max_lag);

// Per-lag average of the per-flow autocorrelations of the log feature values.
// Flows shorter than lag+1 contribute nothing at that lag; zero-variance
// flows contribute 0 and are tallied in zero_var_flows when given.
std::vector<double> avg_ac_curve(const TraceDataset& ds, Feature f, int max_lag,
                                 std::size_t* zero_var_flows = nullptr);

double ac_rmse_from_curves(std::span<const double> real_ac, std::span<const double> synth_ac);
double ac_rmse(const TraceDataset& real, const TraceDataset& synth, Feature f, int max_lag = 20);

// Exact order-1 Wasserstein distance between two empirical distributions via
// the merged quantile functions; handles unequal sample counts.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

std::vector<double> pooled_log_values(const TraceDataset& ds, Feature f);

FidelityReport compute_fidelity(const TraceDataset& real, const TraceDataset& synth,
                                int max_lag = 20, int grid_steps = 1000);

// Writes <feature>_cdf.csv per feature, metrics.json, and summary_stats.csv.
// Numbers carry 9 significant digits.
void emit_report(const FidelityReport& report, const std::string& out_dir);

}  // namespace tgen

#endif  // TGEN_EVAL_HPP
