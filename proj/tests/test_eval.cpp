#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tgen/errors.hpp"
#include "tgen/eval.hpp"
#include "tgen/rng.hpp"

#include "test_util.hpp"

using namespace tgen;

namespace {

Flow flow_from_iats(const std::string& id, const std::vector<double>& iats) {
  Flow f;
  f.id = id;
  for (double v : iats) f.packets.push_back(Packet{100.0, v});
  return f;
}

Flow flow_from_payloads(const std::string& id, const std::vector<double>& payloads) {
  Flow f;
  f.id = id;
  for (double v : payloads) f.packets.push_back(Packet{v, 0.1});
  return f;
}

TraceDataset random_dataset(std::size_t n_flows, std::size_t max_len, std::uint64_t seed) {
  Rng rng(seed);
  TraceDataset ds;
  for (std::size_t i = 0; i < n_flows; ++i) {
    Flow f;
    f.id = "r" + std::to_string(i);
    const std::size_t len = 2 + rng.below(max_len - 1);
    for (std::size_t t = 0; t < len; ++t)
      f.packets.push_back(Packet{std::exp(4.0 + rng.normal()), std::exp(-2.0 + rng.normal())});
    ds.flows.push_back(std::move(f));
  }
  return ds;
}

// Definition-level autocorrelation with the n cancelled: the cov/var ratio.
double naive_ac(const std::vector<double>& xs, int lag) {
  const std::size_t n = xs.size();
  double mu = 0.0;
  for (double x : xs) mu += x;
  mu /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    den += (xs[t] - mu) * (xs[t] - mu);
    if (t + lag < n) num += (xs[t] - mu) * (xs[t + lag] - mu);
  }
  return num / den;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("avg_flow_cdf: single flow {1,2,3} at grid point 2 gives 2/3") {
  TraceDataset ds;
  ds.flows = {flow_from_payloads("a", {1, 2, 3})};
  const std::vector<double> grid{2.0};
  const auto cdf = avg_flow_cdf(ds, Feature::payload, grid);
  CHECK(cdf[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("avg_flow_cdf weights flows equally, not packets") {
  TraceDataset ds;
  ds.flows = {flow_from_payloads("a", {1}), flow_from_payloads("b", {3})};
  const std::vector<double> grid{2.0};
  const auto cdf = avg_flow_cdf(ds, Feature::payload, grid);
  CHECK(cdf[0] == doctest::Approx(0.5));
}

TEST_CASE("avg_flow_cdf reaches 1 above the maximum") {
  const auto ds = random_dataset(8, 12, 3);
  const std::vector<double> grid{1e12};
  CHECK(avg_flow_cdf(ds, Feature::payload, grid)[0] == doctest::Approx(1.0));
  CHECK(avg_flow_cdf(ds, Feature::iat, grid)[0] == doctest::Approx(1.0));
}

TEST_CASE("avg_flow_cdf is within [0,1] and non-decreasing on percentile grids") {
  const auto ds = random_dataset(15, 20, 7);
  for (Feature f : {Feature::payload, Feature::iat}) {
    const auto grid = percentile_grid(ds, f);
    const auto cdf = avg_flow_cdf(ds, f, grid);
    REQUIRE(cdf.size() == grid.size());
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      CHECK(cdf[i] >= 0.0);
      CHECK(cdf[i] <= 1.0);
      if (i > 0) CHECK(cdf[i] >= cdf[i - 1]);
    }
    CHECK(cdf.back() == doctest::Approx(1.0));
  }
}

TEST_CASE("autocorrelation matches the naive oracle") {
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> xs(5 + rng.below(40));
    for (double& x : xs) x = rng.normal() + 0.3 * rng.uniform();
    const auto ac = autocorrelation(xs, 6);
    for (std::size_t lag = 1; lag <= ac.size(); ++lag) {
      CHECK(std::abs(ac[lag - 1] - naive_ac(xs, static_cast<int>(lag))) < 1e-10);
    }
  }
}

TEST_CASE("ac_rmse of a dataset against itself is zero") {
  const auto ds = random_dataset(10, 25, 11);
  CHECK(ac_rmse(ds, ds, Feature::payload) == doctest::Approx(0.0));
  CHECK(ac_rmse(ds, ds, Feature::iat) == doctest::Approx(0.0));
}

TEST_CASE("ac_rmse of constant difference 0.2 is 0.2") {
  std::vector<double> real_ac(20, 0.5), synth_ac(20, 0.3);
  CHECK(ac_rmse_from_curves(real_ac, synth_ac) == doctest::Approx(0.2));
}

TEST_CASE("avg_ac_curve matches a hand-computed average over flows") {
  TraceDataset ds;
  ds.flows = {flow_from_iats("a", {0.1, 0.4, 0.2, 0.8, 0.3}),
              flow_from_iats("b", {1.0, 0.5, 2.0, 0.25, 4.0, 0.125}),
              flow_from_iats("c", {0.7, 0.7, 0.7})};  // zero variance in log
  const int max_lag = 3;
  std::size_t zero_var = 0;
  const auto avg = avg_ac_curve(ds, Feature::iat, max_lag, &zero_var);
  CHECK(zero_var == 1);

  for (int lag = 1; lag <= max_lag; ++lag) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& flow : ds.flows) {
      if (flow.packets.size() < static_cast<std::size_t>(lag) + 1) continue;
      std::vector<double> logs;
      for (const auto& p : flow.packets) logs.push_back(std::log(p.iat));
      double var = 0.0, mu = 0.0;
      for (double v : logs) mu += v;
      mu /= logs.size();
      for (double v : logs) var += (v - mu) * (v - mu);
      sum += var > 0.0 ? naive_ac(logs, lag) : 0.0;
      ++count;
    }
    CHECK(std::abs(avg[lag - 1] - sum / count) < 1e-10);
  }
}

TEST_CASE("short flows contribute nothing beyond their length") {
  TraceDataset ds;
  ds.flows = {flow_from_iats("a", {0.1, 0.2}), flow_from_iats("b", {1.0, 0.5, 2.0, 0.25})};
  const auto avg = avg_ac_curve(ds, Feature::iat, 3);
  // Lag 1 averages both flows; lags 2-3 only flow b.
  std::vector<double> la, lb;
  for (const auto& p : ds.flows[0].packets) la.push_back(std::log(p.iat));
  for (const auto& p : ds.flows[1].packets) lb.push_back(std::log(p.iat));
  CHECK(std::abs(avg[0] - 0.5 * (naive_ac(la, 1) + naive_ac(lb, 1))) < 1e-10);
  CHECK(std::abs(avg[1] - naive_ac(lb, 2)) < 1e-10);
  CHECK(std::abs(avg[2] - naive_ac(lb, 3)) < 1e-10);
}

TEST_CASE("ac_rmse errors when no flow reaches lag 1") {
  TraceDataset ds;
  ds.flows = {flow_from_iats("a", {0.1})};
  CHECK_THROWS_AS(ac_rmse(ds, ds, Feature::iat), DataError);
}

TEST_CASE("wasserstein_1d identity, translation, and hand values") {
  std::vector<double> v{0.3, -1.2, 4.0, 2.2, 0.0};
  CHECK(wasserstein_1d(v, v) == doctest::Approx(0.0));

  std::vector<double> shifted;
  for (double x : v) shifted.push_back(x + 1.75);
  CHECK(wasserstein_1d(v, shifted) == doctest::Approx(1.75).epsilon(1e-9));
  for (double& x : shifted) x -= 4.0;
  CHECK(wasserstein_1d(v, shifted) == doctest::Approx(2.25).epsilon(1e-9));

  CHECK(wasserstein_1d({0.0, 1.0}, {0.0, 0.0}) == doctest::Approx(0.5));
  // Unequal sizes via the merged quantile functions.
  CHECK(wasserstein_1d({0.0, 1.0}, {0.0}) == doctest::Approx(0.5));
  CHECK(wasserstein_1d({0.0, 0.5, 1.0}, {0.25, 0.75}) == doctest::Approx(0.25));
}

TEST_CASE("wasserstein_1d is symmetric and satisfies the triangle inequality") {
  Rng rng(13);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> a(3 + rng.below(20)), b(3 + rng.below(20)), c(3 + rng.below(20));
    for (double& x : a) x = 3.0 * rng.normal();
    for (double& x : b) x = 1.0 + 2.0 * rng.normal();
    for (double& x : c) x = -0.5 + 4.0 * rng.normal();

    const double ab = wasserstein_1d(a, b);
    const double ba = wasserstein_1d(b, a);
    const double bc = wasserstein_1d(b, c);
    const double ac = wasserstein_1d(a, c);
    CHECK(std::abs(ab - ba) < 1e-9);
    CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("compute_fidelity of a dataset against itself is all zeros") {
  const auto ds = random_dataset(12, 18, 17);
  const FidelityReport report = compute_fidelity(ds, ds);
  REQUIRE(report.features.size() == 2);
  for (const auto& fr : report.features) {
    CHECK(fr.ac_rmse == doctest::Approx(0.0));
    CHECK(fr.wd == doctest::Approx(0.0));
  }
}

TEST_CASE("emit_report writes the full inventory with valid contents") {
  const auto real = random_dataset(10, 15, 19);
  const auto synth = random_dataset(10, 15, 23);
  const FidelityReport report = compute_fidelity(real, synth);

  const std::string dir = (std::filesystem::temp_directory_path() / "tgen_report_test").string();
  std::filesystem::remove_all(dir);
  emit_report(report, dir);

  CHECK(std::filesystem::exists(dir + "/payload_cdf.csv"));
  CHECK(std::filesystem::exists(dir + "/iat_cdf.csv"));
  CHECK(std::filesystem::exists(dir + "/metrics.json"));
  CHECK(std::filesystem::exists(dir + "/summary_stats.csv"));

  // Metrics JSON round-trips and matches the report at 9 significant digits.
  std::ifstream mj(dir + "/metrics.json");
  const nlohmann::json metrics = nlohmann::json::parse(mj);
  for (const auto& fr : report.features) {
    const double wd = metrics[fr.name]["wd"].get<double>();
    const double ac = metrics[fr.name]["ac_rmse"].get<double>();
    CHECK(wd == doctest::Approx(fr.wd).epsilon(1e-8));
    CHECK(ac == doctest::Approx(fr.ac_rmse).epsilon(1e-8));
  }

  // CDF columns on disk are within [0,1] and non-decreasing.
  for (const char* name : {"payload_cdf.csv", "iat_cdf.csv"}) {
    std::ifstream in(dir + "/" + std::string(name));
    std::string line;
    std::getline(in, line);  // header
    double prev_real = 0.0, prev_synth = 0.0;
    while (std::getline(in, line)) {
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double value, real_cdf, synth_cdf;
      ss >> value >> real_cdf >> synth_cdf;
      CHECK(real_cdf >= prev_real);
      CHECK(synth_cdf >= prev_synth);
      CHECK(real_cdf <= 1.0);
      CHECK(synth_cdf <= 1.0);
      prev_real = real_cdf;
      prev_synth = synth_cdf;
    }
    CHECK(prev_real == doctest::Approx(1.0));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("emit_report fails cleanly on an unwritable directory") {
  const auto ds = random_dataset(5, 8, 29);
  const FidelityReport report = compute_fidelity(ds, ds);
  CHECK_THROWS_AS(emit_report(report, "/proc/no_such_dir/report"), IoError);
}

}  // TEST_SUITE
