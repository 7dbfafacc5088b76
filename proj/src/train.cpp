#include "tcct/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tcct {

double lr_at(int epoch, const TrainConfig& config) {
  TCCT_CHECK_CFG(epoch >= 0, "epoch must be >= 0");
  return config.lr0 * std::pow(config.lr_decay, epoch);
}

AdamState AdamState::init(const std::vector<Param*>& params) {
  AdamState s;
  long n = 0;
  for (const Param* p : params) n += p->size();
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adam_step(const std::vector<Param*>& params, AdamState& state, double lr) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.t));
  long off = 0;
  for (Param* p : params) {
    for (long i = 0; i < p->size(); ++i) {
      const double gr = double(p->grad[i]);
      if (!std::isfinite(gr))
        throw NumericError("NaN/Inf gradient in parameter '" + p->name + "'");
      double& m = state.m[off + i];
      double& v = state.v[off + i];
      m = state.beta1 * m + (1.0 - state.beta1) * gr;
      v = state.beta2 * v + (1.0 - state.beta2) * gr * gr;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p->value[i] -= Scalar(lr * mhat / (std::sqrt(vhat) + state.eps));
    }
    off += p->size();
  }
}

namespace {
double clip_gradients(const std::vector<Param*>& params, double max_norm) {
  double sq = 0;
  for (const Param* p : params)
    for (Scalar gv : p->grad) sq += double(gv) * double(gv);
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const Scalar scale = Scalar(max_norm / norm);
    for (Param* p : params)
      for (auto& gv : p->grad) gv *= scale;
  }
  return norm;
}

std::vector<std::vector<Scalar>> snapshot_params(const std::vector<Param*>& params) {
  std::vector<std::vector<Scalar>> snap;
  snap.reserve(params.size());
  for (const Param* p : params) snap.push_back(p->value);
  return snap;
}

void restore_params(const std::vector<Param*>& params,
                    const std::vector<std::vector<Scalar>>& snap) {
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}
}  // namespace

TrainResult train(Model& model, const WindowSet& train_windows, const WindowSet& val_windows,
                  const TrainConfig& config) {
  TCCT_CHECK_CFG(config.epochs >= 1 && config.batch >= 1, "bad train config");
  TrainResult result;
  auto params = model.params();
  AdamState adam = AdamState::init(params);
  std::vector<std::vector<Scalar>> best_snapshot = snapshot_params(params);
  int no_improve = 0;
  std::uint64_t step = 0;

  std::vector<long> order(train_windows.count());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at(epoch, config);
    if (config.shuffle) {
      Rng rng(mix_seed(config.seed, 0x5000 + epoch));
      std::shuffle(order.begin(), order.end(), rng.engine());
    }
    double train_sq = 0;
    long train_cells = 0;
    for (long pos = 0; pos < long(order.size()); pos += config.batch) {
      const long take = std::min<long>(config.batch, long(order.size()) - pos);
      std::vector<long> idx(order.begin() + pos, order.begin() + pos + take);
      WindowBatch batch =
          make_batch(train_windows, model.config().effective_token_len(), idx);
      Graph g(&model.counter());
      Tensor pred = model.forward(g, batch, mix_seed(config.seed, 0x7000 + step));
      Tensor loss = g.mse_against(pred, batch.target);
      const double lv = double(loss.item());
      if (!std::isfinite(lv)) {
        result.diverged = true;
        restore_params(params, best_snapshot);
        return result;
      }
      train_sq += lv * double(batch.target.size());
      train_cells += long(batch.target.size());
      model.zero_grad();
      g.backward(loss);
      if (config.clip_grad_norm > 0) clip_gradients(params, config.clip_grad_norm);
      adam_step(params, adam, lr);
      ++step;
    }
    EpochStats es;
    es.lr = lr;
    es.train_mse = train_cells > 0 ? train_sq / double(train_cells) : 0.0;
    es.val_mse = evaluate(model, val_windows, config.batch,
                          mix_seed(config.seed, 0xe7a1 + epoch))
                     .mse;
    result.history.push_back(es);

    if (result.best_epoch < 0 || es.val_mse < result.best_val_mse) {
      result.best_epoch = epoch;
      result.best_val_mse = es.val_mse;
      best_snapshot = snapshot_params(params);
      no_improve = 0;
    } else {
      ++no_improve;
      if (no_improve >= config.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  restore_params(params, best_snapshot);
  return result;
}

EvalResult evaluate(Model& model, const WindowSet& windows, long batch, std::uint64_t seed) {
  TCCT_CHECK_DATA(windows.count() > 0, "evaluate: empty window set");
  // Per-window sums are collected and sorted before the final reduction so
  // the result is invariant to window order.
  struct Cell {
    long index;
    double sq, ab;
  };
  std::vector<Cell> cells;
  cells.reserve(windows.count());
  long per_window = 0;
  for (long pos = 0; pos < windows.count(); pos += batch) {
    const long take = std::min<long>(batch, windows.count() - pos);
    std::vector<long> idx(take);
    std::iota(idx.begin(), idx.end(), pos);
    WindowBatch wb = make_batch(windows, model.config().effective_token_len(), idx);
    Graph g(&model.counter());
    Tensor pred = model.forward(g, wb, mix_seed(seed, pos));
    const auto& pv = pred.value();
    per_window = wb.pred_len * wb.n_series;
    for (long i = 0; i < take; ++i) {
      double sq = 0, ab = 0;
      for (long j = 0; j < per_window; ++j) {
        const double e = double(pv[i * per_window + j]) - double(wb.target[i * per_window + j]);
        sq += e * e;
        ab += std::abs(e);
      }
      cells.push_back({idx[i], sq, ab});
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.index < b.index;
  });
  double sq = 0, ab = 0;
  for (const auto& c : cells) {
    sq += c.sq;
    ab += c.ab;
  }
  const double n = double(windows.count()) * double(per_window);
  return {sq / n, ab / n, windows.count()};
}

EvalResult evaluate_last_value_baseline(const WindowSet& windows) {
  TCCT_CHECK_DATA(windows.count() > 0, "evaluate: empty window set");
  const auto& frame = windows.frame();
  const auto& spec = windows.spec();
  const bool uni = spec.mode == SeriesMode::Univariate;
  const long tgt = frame.target_index();
  const long N = windows.n_series();
  double sq = 0, ab = 0;
  for (long w = 0; w < windows.count(); ++w) {
    const long start = windows.start_of(w);
    for (long c = 0; c < N; ++c) {
      const long col = uni ? tgt : c;
      const double last = frame.at(start + spec.input_len - 1, col);
      for (long r = 0; r < spec.pred_len; ++r) {
        const double e = last - frame.at(start + spec.input_len + r, col);
        sq += e * e;
        ab += std::abs(e);
      }
    }
  }
  const double n = double(windows.count()) * double(spec.pred_len) * double(N);
  return {sq / n, ab / n, windows.count()};
}

double rmse_from_mse(double mse) { return std::sqrt(mse); }

RepeatStats repeat_stats(const std::vector<double>& mse_runs) {
  TCCT_CHECK_DATA(!mse_runs.empty(), "repeat_stats: need at least one run");
  RepeatStats s;
  bool all_equal = true;
  for (double v : mse_runs) all_equal = all_equal && v == mse_runs.front();
  if (all_equal) {
    // identical runs have exactly zero spread
    s.mean = mse_runs.front();
    s.msd = 0.0;
    if (s.mean > 0) s.cv_percent = 0.0;
    return s;
  }
  for (double v : mse_runs) s.mean += v;
  s.mean /= double(mse_runs.size());
  double var = 0;
  for (double v : mse_runs) var += (v - s.mean) * (v - s.mean);
  var /= double(mse_runs.size());
  s.msd = std::sqrt(var);
  if (s.mean > 0) s.cv_percent = 100.0 * s.msd / s.mean;
  return s;
}

}  // namespace tcct
