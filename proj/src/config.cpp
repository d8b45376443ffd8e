#include "tgen/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tgen/errors.hpp"

namespace tgen {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

using Setter = std::function<bool(PipelineConfig&, const std::string&)>;

bool to_double(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool to_int(const std::string& s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

Setter dbl(double PipelineConfig::* field) {
  return [field](PipelineConfig& c, const std::string& v) { return to_double(v, c.*field); };
}

Setter num(int PipelineConfig::* field) {
  return [field](PipelineConfig& c, const std::string& v) { return to_int(v, c.*field); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"test_fraction", dbl(&PipelineConfig::test_fraction)},
      {"payload_min", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.clip.payload_min); }},
      {"payload_max", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.clip.payload_max); }},
      {"iat_min", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.clip.iat_min); }},
      {"iat_max", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.clip.iat_max); }},
      {"tail_quantile", dbl(&PipelineConfig::tail_quantile)},
      {"k_core", num(&PipelineConfig::k_core)},
      {"theta_tail", dbl(&PipelineConfig::theta_tail)},
      {"eps0", dbl(&PipelineConfig::eps0)},
      {"chi", dbl(&PipelineConfig::chi)},
      {"lambda_self", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.priors.lambda_self); }},
      {"lambda_off", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.priors.lambda_off); }},
      {"lambda_idle", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.priors.lambda_idle); }},
      {"lambda_leak", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.priors.lambda_leak); }},
      {"em_max_iters", num(&PipelineConfig::em_max_iters)},
      {"em_rel_tol", dbl(&PipelineConfig::em_rel_tol)},
      {"mdn_components", num(&PipelineConfig::mdn_components)},
      {"mdn_hidden", num(&PipelineConfig::mdn_hidden)},
      {"sigma_floor", dbl(&PipelineConfig::sigma_floor)},
      {"nu_floor", dbl(&PipelineConfig::nu_floor)},
      {"gamma_min_core", dbl(&PipelineConfig::gamma_min_core)},
      {"gamma_min_idle", dbl(&PipelineConfig::gamma_min_idle)},
      {"learning_rate", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.optimizer.learning_rate); }},
      {"batch_size", [](PipelineConfig& c, const std::string& v) { return to_int(v, c.optimizer.batch_size); }},
      {"epochs", [](PipelineConfig& c, const std::string& v) { return to_int(v, c.optimizer.epochs); }},
      {"plateau_epochs", [](PipelineConfig& c, const std::string& v) { return to_int(v, c.optimizer.plateau_epochs); }},
      {"plateau_tol", [](PipelineConfig& c, const std::string& v) { return to_double(v, c.optimizer.plateau_tol); }},
      {"idle_temperature", dbl(&PipelineConfig::idle_temperature)},
      {"ac_max_lag", num(&PipelineConfig::ac_max_lag)},
      {"cdf_grid_steps", num(&PipelineConfig::cdf_grid_steps)},
  };
  return table;
}

}  // namespace

void apply_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::string key, value;
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      key = trim(line.substr(0, eq));
      value = trim(line.substr(eq + 1));
    } else {
      std::istringstream ss(line);
      ss >> key;
      std::getline(ss, value);
      value = trim(value);
    }
    if (key.empty() || value.empty())
      throw ParseError("config line needs 'key = value'", line_no);

    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError("unknown config key '" + key + "'", line_no);
    if (!it->second(cfg, value))
      throw ParseError("invalid value '" + value + "' for key '" + key + "'", line_no);
  }
}

void validate_config(const PipelineConfig& cfg) {
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
    throw DataError("config: test_fraction must lie in (0, 1)");
  if (cfg.k_core < 1) throw DataError("config: k_core must be >= 1");
  if (cfg.mdn_components < 1 || cfg.mdn_hidden < 1)
    throw DataError("config: MDN dimensions must be >= 1");
  if (!(cfg.sigma_floor > 0.0)) throw DataError("config: sigma_floor must be positive");
  if (!(cfg.nu_floor > 1.0)) throw DataError("config: nu_floor must exceed 1");
  if (!(cfg.idle_temperature > 0.0)) throw DataError("config: idle_temperature must be positive");
  if (cfg.priors.lambda_self < 0.0 || cfg.priors.lambda_off < 0.0 ||
      cfg.priors.lambda_idle < 0.0 || cfg.priors.lambda_leak < 0.0)
    throw DataError("config: Dirichlet pseudo-counts must be non-negative");
}

}  // namespace tgen
