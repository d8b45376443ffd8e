#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "tgen/config.hpp"
#include "tgen/errors.hpp"
#include "tgen/eval.hpp"
#include "tgen/model_io.hpp"
#include "tgen/pipeline.hpp"
#include "tgen/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool strict_sequential = false;
};

tgen::PipelineConfig load_config(const CommonOpts& opts) {
  tgen::PipelineConfig cfg;
  if (!opts.config_path.empty()) tgen::apply_config_file(cfg, opts.config_path);
  return cfg;
}

void write_training_log(const tgen::TrainArtifacts& art, const std::string& path) {
  std::ofstream log(path);
  if (!log) throw tgen::IoError("cannot write training log: " + path);
  log << "em_loglik_trace";
  for (double v : art.em_loglik_trace) log << ' ' << v;
  log << "\nmdn_loss_trace";
  for (double v : art.mdn_loss_trace) log << ' ' << v;
  log << '\n';
  for (const auto& w : art.warnings) log << "warning: " << w << '\n';
}

int cmd_train(const std::string& trace_path, const std::string& model_out,
              const std::string& test_out, const CommonOpts& opts) {
  tgen::PipelineConfig cfg = load_config(opts);
  const tgen::TraceDataset full = tgen::load_trace(trace_path);
  std::cout << "loaded " << full.flows.size() << " flows, " << full.total_packets()
            << " packets\n";

  const tgen::TrainArtifacts art = tgen::train_pipeline(full, cfg, opts.seed);
  std::cout << "split: " << art.train.flows.size() << " train / " << art.test.flows.size()
            << " test flows\n";
  std::cout << "hmm: K=" << art.bundle.hmm.K
            << (art.bundle.hmm.idle_active ? " (idle state active)" : "") << ", em iterations="
            << art.em_loglik_trace.size() << "\n";
  std::cout << "mdn: epochs=" << art.mdn_loss_trace.size();
  if (!art.mdn_loss_trace.empty()) std::cout << ", final loss=" << art.mdn_loss_trace.back();
  std::cout << "\n";
  for (const auto& w : art.warnings) std::cerr << "warning: " << w << '\n';

  tgen::save_model(art.bundle, model_out);
  write_training_log(art, model_out + ".log");
  if (!test_out.empty()) tgen::save_trace(art.test, test_out);

  const std::size_t n_params = art.bundle.mdn.param_count();
  std::cout << "mdn trainable parameters: " << n_params << "\n";
  std::cout << "mdn float32 payload: " << tgen::mdn_payload_bytes(art.bundle.mdn) << " bytes\n";
  std::cout << "model file: " << model_out << " ("
            << std::filesystem::file_size(model_out) << " bytes)\n";
  return kExitOk;
}

int cmd_generate(const std::string& model_path, const std::string& test_path,
                 const std::string& out_path, double idle_temperature, bool temp_given,
                 const CommonOpts& opts) {
  const tgen::ModelBundle bundle = tgen::load_model(model_path);
  const tgen::TraceDataset test = tgen::load_trace(test_path);
  const double temp = temp_given ? idle_temperature : bundle.idle_temperature;
  std::cout << "idle temperature: " << temp << (temp_given ? " (flag)" : " (model default)")
            << "\n";

  const tgen::TraceDataset synth = tgen::generate_for(bundle, test, temp, opts.seed);
  tgen::save_trace(synth, out_path);
  std::cout << "generated " << synth.flows.size() << " flows, " << synth.total_packets()
            << " packets -> " << out_path << "\n";
  return kExitOk;
}

void check_paired_ids(const tgen::TraceDataset& real, const tgen::TraceDataset& synth) {
  std::set<std::string> real_ids, synth_ids;
  for (const auto& f : real.flows) real_ids.insert(f.id);
  for (const auto& f : synth.flows) synth_ids.insert(f.id);
  if (real_ids == synth_ids) return;

  std::string msg = "unpaired flow ids;";
  int listed = 0;
  for (const auto& id : real_ids) {
    if (!synth_ids.count(id) && listed < 10) {
      msg += " missing-in-synth:" + id;
      ++listed;
    }
  }
  for (const auto& id : synth_ids) {
    if (!real_ids.count(id) && listed < 10) {
      msg += " missing-in-real:" + id;
      ++listed;
    }
  }
  throw tgen::DataError(msg);
}

int cmd_evaluate(const std::string& real_path, const std::string& synth_path,
                 const std::string& out_dir, const CommonOpts& opts) {
  tgen::PipelineConfig cfg = load_config(opts);
  const tgen::TraceDataset real = tgen::load_trace(real_path);
  const tgen::TraceDataset synth = tgen::load_trace(synth_path);
  check_paired_ids(real, synth);

  const tgen::FidelityReport report =
      tgen::compute_fidelity(real, synth, cfg.ac_max_lag, cfg.cdf_grid_steps);
  tgen::emit_report(report, out_dir);
  for (const auto& fr : report.features) {
    std::cout << fr.name << ": ac_rmse=" << fr.ac_rmse << " wd=" << fr.wd << "\n";
  }
  std::cout << "report written to " << out_dir << "\n";
  return kExitOk;
}

int cmd_summarize(const std::string& trace_path, const std::string& out_path) {
  const tgen::TraceDataset ds = tgen::load_trace(trace_path);
  const tgen::SummaryStats s = tgen::summarize(ds);

  std::cout << "total flows:          " << s.total_flows << "\n";
  std::cout << "total packets:        " << s.total_packets << "\n";
  std::cout << "avg packets per flow: " << s.avg_pkts_per_flow << "\n";
  std::cout << "total volume (MB):    " << s.total_volume / 1e6 << "\n";
  std::cout << "avg flow duration (s): " << s.avg_flow_duration << "\n";

  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw tgen::IoError("cannot write summary: " + out_path);
    out << "total_flows,total_packets,avg_pkts_per_flow,total_volume_bytes,avg_flow_duration_s\n";
    out << s.total_flows << ',' << s.total_packets << ',' << s.avg_pkts_per_flow << ','
        << s.total_volume << ',' << s.avg_flow_duration << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packet-level traffic generator: HMM + Student-t mixture density network"};
  app.require_subcommand(1);

  CommonOpts common;
  // Execution is sequential and reproducible by construction; the flag is
  // accepted so pipelines can pin the behavior explicitly.
  app.add_flag("--strict-sequential", common.strict_sequential,
               "force sequential deterministic execution (always on)");

  auto* train = app.add_subcommand("train", "fit a model to a packet trace");
  std::string train_trace, train_model_out = "model.tgm", train_test_out;
  train->add_option("trace", train_trace, "input trace CSV")->required();
  train->add_option("--out", train_model_out, "output model file");
  train->add_option("--config", common.config_path, "config file");
  train->add_option("--seed", common.seed, "master RNG seed");
  train->add_option("--test-out", train_test_out, "also write the held-out test split CSV");

  auto* generate = app.add_subcommand("generate", "synthesize flows paired to a test trace");
  std::string gen_model, gen_test, gen_out = "synthetic.csv";
  double gen_temp = 1.0;
  generate->add_option("model", gen_model, "trained model file")->required();
  generate->add_option("test_trace", gen_test, "test trace CSV (ids and lengths are mirrored)")
      ->required();
  generate->add_option("--out", gen_out, "output CSV");
  generate->add_option("--seed", common.seed, "master RNG seed");
  auto* temp_opt =
      generate->add_option("--idle-temperature", gen_temp,
                           "idle-state component temperature (default: value stored in model)");

  auto* evaluate = app.add_subcommand("evaluate", "compare a synthetic trace against a real one");
  std::string eval_real, eval_synth, eval_out = "report";
  evaluate->add_option("real", eval_real, "real trace CSV")->required();
  evaluate->add_option("synth", eval_synth, "synthetic trace CSV")->required();
  evaluate->add_option("--out", eval_out, "report output directory");
  evaluate->add_option("--config", common.config_path, "config file");

  auto* summarize = app.add_subcommand("summarize", "print dataset summary statistics");
  std::string sum_trace, sum_out;
  summarize->add_option("trace", sum_trace, "trace CSV")->required();
  summarize->add_option("--out", sum_out, "also write the statistics as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train_trace, train_model_out, train_test_out, common);
    if (generate->parsed())
      return cmd_generate(gen_model, gen_test, gen_out, gen_temp, temp_opt->count() > 0, common);
    if (evaluate->parsed()) return cmd_evaluate(eval_real, eval_synth, eval_out, common);
    if (summarize->parsed()) return cmd_summarize(sum_trace, sum_out);
  } catch (const tgen::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
