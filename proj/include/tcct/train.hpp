#pragma once

#include <optional>
#include <vector>

#include "tcct/data.hpp"
#include "tcct/model.hpp"

namespace tcct {

// Published protocol: Adam, lr halving every epoch from 1e-4, 6 epochs,
// batch 32, early stopping; ten repeats per experiment cell.
struct TrainConfig {
  double lr0 = 1e-4;
  double lr_decay = 0.5;
  int epochs = 6;
  long batch = 32;
  int patience = 2;
  int repeats = 10;
  std::uint64_t seed = 0;
  bool shuffle = true;
  double clip_grad_norm = 0.0;  // 0 disables clipping
};

double lr_at(int epoch, const TrainConfig& config);

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState init(const std::vector<Param*>& params);
};

// One bias-corrected Adam update over params' accumulated grads.
void adam_step(const std::vector<Param*>& params, AdamState& state, double lr);

struct EpochStats {
  double train_mse = 0;
  double val_mse = 0;
  double lr = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_mse = 0;
  bool stopped_early = false;
  bool diverged = false;
};

// Trains in place; the weights of the best validation epoch are restored
// before returning. A NaN loss aborts the run with history preserved.
TrainResult train(Model& model, const WindowSet& train_windows,
                  const WindowSet& val_windows, const TrainConfig& config);

struct EvalResult {
  double mse = 0;
  double mae = 0;
  long n_windows = 0;
};

// Flat average over every (window, step, series) cell; order-invariant in
// the window set.
EvalResult evaluate(Model& model, const WindowSet& windows, long batch = 32,
                    std::uint64_t seed = 0);

// Repeat-last-observed-value forecaster over the same windows.
EvalResult evaluate_last_value_baseline(const WindowSet& windows);

double rmse_from_mse(double mse);

struct RepeatStats {
  double mean = 0;
  double msd = 0;  // population std of per-run MSEs
  std::optional<double> cv_percent;
};

RepeatStats repeat_stats(const std::vector<double>& mse_runs);

}  // namespace tcct
