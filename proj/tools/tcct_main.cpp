// tcct command line front end: reproducible experiment runs, complexity
// sweeps, synthetic data generation and invariant checks.

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tcct/experiment.hpp"

using namespace tcct;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw DataError("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Flags override anything loaded from --config.
struct CommonFlags {
  std::string config_path;
  std::string variant;
  std::string data_path;
  std::string target;
  std::string mode;
  std::string out_dir;
  long input_len = -1;
  std::vector<long> pred_lens;
  int repeats = -1;
  long d_model = -1;
  int heads = -1;
  int enc_blocks = -1;
  std::int64_t seed = -1;
  std::vector<int> split_months;
  bool parallel = false;
  bool svg = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "experiment spec or manifest JSON");
    app->add_option("--variant", variant,
                    "Informer, Informer+, TCCT_I, TCCT_II, TCCT_III, TCCT_IV, TCCT_V, TCCT_VI");
    app->add_option("--data", data_path, "CSV dataset path (default: synthetic sine mix)");
    app->add_option("--target", target, "target column name (default OT)");
    app->add_option("--mode", mode, "uni or multi");
    app->add_option("--input-len", input_len, "encoder input window length");
    app->add_option("--pred-len", pred_lens, "prediction lengths (repeatable)");
    app->add_option("--repeats", repeats, "independent repeats per cell");
    app->add_option("--d-model", d_model, "model width");
    app->add_option("--heads", heads, "attention heads");
    app->add_option("--enc-blocks", enc_blocks, "encoder attention blocks");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--split-months", split_months,
                    "train/val/test split as calendar-month counts (3 values)")
        ->expected(3);
    app->add_option("--out", out_dir, "output directory")->envname("TCCT_OUT_DIR");
    app->add_flag("--parallel-repeats", parallel, "run repeats concurrently");
    app->add_flag("--svg", svg, "also emit SVG charts (analyze)");
  }

  ExperimentSpec to_spec() const {
    ExperimentSpec spec;
    if (!config_path.empty()) spec = ExperimentSpec::from_json_text(read_file(config_path));
    if (!variant.empty()) spec.variant = variant;
    if (!data_path.empty()) {
      spec.dataset.type = DatasetSource::Type::Csv;
      spec.dataset.path = data_path;
    }
    if (!target.empty()) spec.dataset.target_column = target;
    if (!mode.empty()) {
      TCCT_CHECK_CFG(mode == "uni" || mode == "multi", "--mode must be uni or multi");
      spec.mode = mode == "uni" ? SeriesMode::Univariate : SeriesMode::Multivariate;
    }
    if (input_len > 0) spec.input_len = input_len;
    if (!pred_lens.empty()) spec.pred_lens = pred_lens;
    if (repeats > 0) spec.repeats = repeats;
    if (d_model > 0) spec.d_model = d_model;
    if (heads > 0) spec.heads = heads;
    if (enc_blocks > 0) spec.enc_blocks = enc_blocks;
    if (seed >= 0) spec.seed = std::uint64_t(seed);
    if (!split_months.empty()) spec.split_months = split_months;
    if (!out_dir.empty()) spec.out_dir = out_dir;
    if (parallel) spec.parallel_repeats = true;
    if (svg) spec.emit_svg = true;
    return spec;
  }
};

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return int(ExitCode::Config);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return int(ExitCode::Data);
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return int(ExitCode::Config);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return int(ExitCode::Numeric);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TCCT time-series forecasting toolkit"};
  app.require_subcommand(1);

  CommonFlags run_flags, analyze_flags;
  auto* run_cmd = app.add_subcommand("run", "train and evaluate one variant over a grid");
  run_flags.attach(run_cmd);

  auto* analyze_cmd =
      app.add_subcommand("analyze", "complexity sweep (no dataset needed)");
  analyze_flags.attach(analyze_cmd);
  std::vector<long> sweep;
  analyze_cmd->add_option("--sweep", sweep, "input lengths to sweep");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic CSV dataset");
  std::string synth_kind = "sine_mix", synth_out = "synth.csv";
  long synth_len = 2000, synth_n = 3;
  double synth_noise = 0.05;
  std::int64_t synth_seed = 7;
  synth_cmd->add_option("--kind", synth_kind, "sine_mix or ar_noise");
  synth_cmd->add_option("--length", synth_len, "number of rows");
  synth_cmd->add_option("--n-series", synth_n, "number of columns");
  synth_cmd->add_option("--noise", synth_noise, "noise sigma");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--out", synth_out, "output CSV path");

  auto* check_cmd = app.add_subcommand("check", "run built-in invariant suites");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed())
    return guarded([&] {
      ExperimentSpec spec = run_flags.to_spec();
      auto art = run_experiment(spec);
      std::cout << "wrote " << art.metric_csvs.size() << " metric CSVs, "
                << art.metric_jsons.size() << " metric JSONs\n"
                << "complexity: " << art.complexity_json << "\n"
                << "manifest:   " << art.manifest_path << "\n";
      return int(ExitCode::Ok);
    });

  if (analyze_cmd->parsed())
    return guarded([&] {
      ExperimentSpec spec = analyze_flags.to_spec();
      if (!sweep.empty()) spec.sweep_lengths = sweep;
      auto art = analyze_experiment(spec);
      std::cout << "wrote " << art.metric_csvs.front() << "\n"
                << "manifest:   " << art.manifest_path << "\n";
      return int(ExitCode::Ok);
    });

  if (synth_cmd->parsed())
    return guarded([&] {
      TCCT_CHECK_CFG(synth_kind == "sine_mix" || synth_kind == "ar_noise",
                     "--kind must be sine_mix or ar_noise");
      auto frame = synth_series(
          synth_kind == "sine_mix" ? SynthKind::SineMix : SynthKind::ArNoise, synth_len,
          synth_n, std::uint64_t(synth_seed), synth_noise);
      write_csv(frame, synth_out);
      std::cout << "wrote " << synth_out << " (" << frame.length() << " rows x "
                << frame.n_series() << " series)\n";
      return int(ExitCode::Ok);
    });

  if (check_cmd->parsed())
    return guarded([&] {
      return run_checks(true) ? int(ExitCode::Ok) : int(ExitCode::CheckFailed);
    });

  return int(ExitCode::BadUsage);
}
