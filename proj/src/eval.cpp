#include "tgen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "tgen/errors.hpp"
#include "tgen/mathutil.hpp"

namespace tgen {

namespace {

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double round9(double v) { return std::stod(fmt9(v)); }

std::vector<double> feature_values(const Flow& flow, Feature f) {
  std::vector<double> vs;
  vs.reserve(flow.packets.size());
  for (const auto& p : flow.packets) vs.push_back(feature_value(p, f));
  return vs;
}

}  // namespace

double feature_value(const Packet& p, Feature f) {
  return f == Feature::payload ? p.payload : p.iat;
}

std::vector<double> percentile_grid(const TraceDataset& ds, Feature f, int steps) {
  std::vector<double> pooled;
  for (const auto& flow : ds.flows)
    for (const auto& p : flow.packets) pooled.push_back(feature_value(p, f));
  if (pooled.empty()) throw DataError("percentile_grid: no packets");
  std::sort(pooled.begin(), pooled.end());

  std::vector<double> grid;
  grid.reserve(steps + 1);
  const std::size_t n = pooled.size();
  for (int i = 0; i <= steps; ++i) {
    const double q = static_cast<double>(i) / steps;
    const std::size_t rank = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(q * static_cast<double>(n))), 1, n);
    grid.push_back(pooled[rank - 1]);
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> avg_flow_cdf(const TraceDataset& ds, Feature f,
                                 std::span<const double> grid) {
  if (ds.empty()) throw DataError("avg_flow_cdf: empty dataset");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw DataError("avg_flow_cdf: grid must be sorted ascending");

  std::vector<double> acc(grid.size(), 0.0);
  std::size_t flows_used = 0;
  for (const auto& flow : ds.flows) {
    if (flow.packets.empty()) {
      std::cerr << "warning: avg_flow_cdf: flow '" << flow.id << "' is empty; excluded\n";
      continue;
    }
    std::vector<double> vs = feature_values(flow, f);
    std::sort(vs.begin(), vs.end());
    const double n = static_cast<double>(vs.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto le =
          std::upper_bound(vs.begin(), vs.end(), grid[g]) - vs.begin();
      acc[g] += static_cast<double>(le) / n;
    }
    ++flows_used;
  }
  if (flows_used == 0) throw DataError("avg_flow_cdf: all flows empty");
  for (double& v : acc) v /= static_cast<double>(flows_used);
  return acc;
}

std::vector<double> autocorrelation(std::span<const double> xs, int max_lag) {
  const std::size_t n = xs.size();
  std::vector<double> ac;
  ac.reserve(max_lag);
  const double mu = mean(xs);
  double var = 0.0;
  for (double x : xs) var += (x - mu) * (x - mu);
  var /= static_cast<double>(n);

  for (int lag = 1; lag <= max_lag; ++lag) {
    if (static_cast<std::size_t>(lag) + 1 > n) break;
    if (var <= 0.0) {
      ac.push_back(0.0);
      continue;
    }
    double cov = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) cov += (xs[t] - mu) * (xs[t + lag] - mu);
    cov /= static_cast<double>(n);
    ac.push_back(cov / var);
  }
  return ac;
}

std::vector<double> avg_ac_curve(const TraceDataset& ds, Feature f, int max_lag,
                                 std::size_t* zero_var_flows) {
  std::vector<double> sums(max_lag, 0.0);
  std::vector<std::size_t> counts(max_lag, 0);
  std::size_t zero_var = 0;

  for (const auto& flow : ds.flows) {
    if (flow.packets.size() < 2) continue;
    std::vector<double> logs = feature_values(flow, f);
    for (double& v : logs) v = std::log(v);
    if (variance(logs) <= 0.0) ++zero_var;
    const std::vector<double> ac = autocorrelation(logs, max_lag);
    for (std::size_t lag = 0; lag < ac.size(); ++lag) {
      sums[lag] += ac[lag];
      ++counts[lag];
    }
  }
  if (counts[0] == 0) throw DataError("avg_ac_curve: no flow long enough for lag 1");
  if (zero_var_flows != nullptr) *zero_var_flows = zero_var;

  std::vector<double> avg(max_lag, 0.0);
  for (int lag = 0; lag < max_lag; ++lag) {
    if (counts[lag] > 0) avg[lag] = sums[lag] / static_cast<double>(counts[lag]);
  }
  return avg;
}

double ac_rmse_from_curves(std::span<const double> real_ac, std::span<const double> synth_ac) {
  if (real_ac.size() != synth_ac.size() || real_ac.empty())
    throw DataError("ac_rmse: autocorrelation curves must align");
  double acc = 0.0;
  for (std::size_t i = 0; i < real_ac.size(); ++i) {
    const double d = real_ac[i] - synth_ac[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(real_ac.size()));
}

double ac_rmse(const TraceDataset& real, const TraceDataset& synth, Feature f, int max_lag) {
  return ac_rmse_from_curves(avg_ac_curve(real, f, max_lag), avg_ac_curve(synth, f, max_lag));
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DataError("wasserstein_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  // Integrate |F_a^{-1}(q) - F_b^{-1}(q)| over q in (0,1); the quantile
  // functions are step functions with breakpoints at i/n and j/m.
  const std::size_t n = a.size(), m = b.size();
  std::size_t i = 0, j = 0;
  double q = 0.0, dist = 0.0;
  while (i < n && j < m) {
    const double qa = static_cast<double>(i + 1) / static_cast<double>(n);
    const double qb = static_cast<double>(j + 1) / static_cast<double>(m);
    const double q_next = std::min(qa, qb);
    dist += std::abs(a[i] - b[j]) * (q_next - q);
    q = q_next;
    if (qa <= q_next) ++i;
    if (qb <= q_next) ++j;
  }
  return dist;
}

std::vector<double> pooled_log_values(const TraceDataset& ds, Feature f) {
  std::vector<double> out;
  for (const auto& flow : ds.flows)
    for (const auto& p : flow.packets) out.push_back(std::log(feature_value(p, f)));
  return out;
}

FidelityReport compute_fidelity(const TraceDataset& real, const TraceDataset& synth,
                                int max_lag, int grid_steps) {
  FidelityReport report;
  report.real_summary = summarize(real);
  report.synth_summary = summarize(synth);

  for (Feature f : {Feature::payload, Feature::iat}) {
    FeatureReport fr;
    fr.name = f == Feature::payload ? "payload" : "iat";
    fr.grid = percentile_grid(real, f, grid_steps);
    fr.real_cdf = avg_flow_cdf(real, f, fr.grid);
    fr.synth_cdf = avg_flow_cdf(synth, f, fr.grid);
    fr.ac_rmse = ac_rmse(real, synth, f, max_lag);
    fr.wd = wasserstein_1d(pooled_log_values(real, f), pooled_log_values(synth, f));
    report.features.push_back(std::move(fr));
  }
  return report;
}

void emit_report(const FidelityReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create report directory: " + out_dir);

  nlohmann::json metrics;
  for (const auto& fr : report.features) {
    const fs::path cdf_path = fs::path(out_dir) / (fr.name + "_cdf.csv");
    std::ofstream cdf(cdf_path);
    if (!cdf) throw IoError("cannot write " + cdf_path.string());
    cdf << "value,real_cdf,synth_cdf\n";
    for (std::size_t i = 0; i < fr.grid.size(); ++i) {
      cdf << fmt9(fr.grid[i]) << ',' << fmt9(fr.real_cdf[i]) << ',' << fmt9(fr.synth_cdf[i])
          << '\n';
    }
    metrics[fr.name] = {{"ac_rmse", round9(fr.ac_rmse)}, {"wd", round9(fr.wd)}};
  }

  const fs::path metrics_path = fs::path(out_dir) / "metrics.json";
  std::ofstream mj(metrics_path);
  if (!mj) throw IoError("cannot write " + metrics_path.string());
  mj << metrics.dump(2) << '\n';

  const fs::path summary_path = fs::path(out_dir) / "summary_stats.csv";
  std::ofstream sc(summary_path);
  if (!sc) throw IoError("cannot write " + summary_path.string());
  sc << "dataset,total_flows,total_packets,avg_pkts_per_flow,total_volume_bytes,"
        "avg_flow_duration_s\n";
  auto row = [&](const char* name, const SummaryStats& s) {
    sc << name << ',' << s.total_flows << ',' << s.total_packets << ','
       << fmt9(s.avg_pkts_per_flow) << ',' << fmt9(s.total_volume) << ','
       << fmt9(s.avg_flow_duration) << '\n';
  };
  row("real", report.real_summary);
  row("synthetic", report.synth_summary);
}

}  // namespace tgen
