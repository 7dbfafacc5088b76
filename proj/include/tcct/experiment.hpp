#pragma once

#include <string>
#include <vector>

#include "tcct/complexity.hpp"
#include "tcct/data.hpp"
#include "tcct/model.hpp"
#include "tcct/train.hpp"

namespace tcct {

enum class ExitCode : int {
  Ok = 0,
  BadUsage = 1,
  Config = 2,
  Data = 3,
  Numeric = 4,
  CheckFailed = 5,
};

struct DatasetSource {
  enum class Type { Csv, Synth } type = Type::Synth;
  // csv
  std::string path;
  std::string target_column = "OT";
  // synth
  SynthKind kind = SynthKind::SineMix;
  long length = 2000;
  long n_series = 3;
  double noise_sigma = 0.05;
  std::uint64_t seed = 7;

  SeriesFrame load() const;
};

// One reproducible experiment cell grid: a variant, a dataset, a list of
// prediction lengths, repeated runs.
struct ExperimentSpec {
  std::string variant = "TCCT_III";
  DatasetSource dataset;
  SeriesMode mode = SeriesMode::Multivariate;
  long input_len = 96;
  std::vector<long> pred_lens{24};
  int repeats = 10;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  // model hyperparameters
  long d_model = 32;
  int heads = 2;
  int enc_blocks = 3;
  int dec_layers = 2;
  long feedforward_dim = -1;
  long token_len = -1;

  TrainConfig train_config;
  SplitFractions split;
  std::vector<int> split_months;  // {train, val, test}; empty = fraction split
  bool parallel_repeats = false;

  // analyze-only
  std::vector<long> sweep_lengths{48, 96, 144, 192, 240, 288, 336, 384, 432};
  bool emit_svg = false;

  std::string to_json() const;
  static ExperimentSpec from_json_text(const std::string& text);
  std::string hash() const;  // stable FNV-1a over the canonical JSON

  ModelConfig model_config(long pred_len, std::uint64_t run_seed) const;
};

struct RunArtifacts {
  std::vector<std::string> metric_csvs;
  std::vector<std::string> metric_jsons;
  std::string complexity_json;
  std::string manifest_path;
};

RunArtifacts run_experiment(const ExperimentSpec& spec);
RunArtifacts analyze_experiment(const ExperimentSpec& spec);

// Fast built-in invariant suites (ratios, oracles, causality, gradients).
// Prints one line per suite; returns true when everything holds.
bool run_checks(bool verbose = true);

// RFC-4180 field quoting.
std::string csv_field(const std::string& raw);
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace tcct
