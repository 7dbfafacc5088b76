#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tcct/tensor.hpp"

namespace tcct {

// Uniformly sampled multivariate series. Values are row-major length x N.
struct SeriesFrame {
  std::vector<std::int64_t> timestamps;  // epoch seconds, strictly increasing
  std::vector<std::string> columns;
  std::string target_column;
  std::vector<double> values;

  long length() const { return long(timestamps.size()); }
  long n_series() const { return long(columns.size()); }
  double at(long row, long col) const { return values[row * n_series() + col]; }
  long target_index() const;
  void validate() const;

  // Calendar features per row: hour-of-day, day-of-week, day-of-month,
  // month, each normalized to [-0.5, 0.5].
  static constexpr long kNumMarks = 4;
  std::vector<double> time_marks() const;  // length x kNumMarks
};

struct NormalizationState {
  std::vector<double> mean;
  std::vector<double> stddev;  // population, floored at epsilon
  std::vector<std::string> warnings;
  static constexpr double kEpsilon = 1e-8;
};

enum class SeriesMode { Univariate, Multivariate };

struct WindowSpec {
  long input_len = 96;  // t_0
  long pred_len = 24;   // T
  long stride = 1;
  SeriesMode mode = SeriesMode::Multivariate;
  void validate() const;
};

struct CsvSchema {
  std::string target_column = "OT";
};

SeriesFrame load_csv(const std::string& path, const CsvSchema& schema = {});
void write_csv(const SeriesFrame& frame, const std::string& path);

// Z-score per column. Stats are fitted on `frame` when `state` is absent
// (callers fit on the training segment and reuse for val/test).
std::pair<SeriesFrame, NormalizationState> zscore(const SeriesFrame& frame,
                                                  const NormalizationState* state = nullptr);
SeriesFrame inverse_zscore(const SeriesFrame& frame, const NormalizationState& state);

struct SplitFractions {
  double train = 12.0 / 20.0;
  double val = 4.0 / 20.0;
  double test = 4.0 / 20.0;
};

std::array<SeriesFrame, 3> split_by_time(const SeriesFrame& frame, SplitFractions f = {});
// Calendar-month split: first `m_train` distinct months to train, etc.
std::array<SeriesFrame, 3> split_by_months(const SeriesFrame& frame, int m_train, int m_val,
                                           int m_test);

// Rolling windows over one segment. Index-addressable and deterministic.
class WindowSet {
 public:
  WindowSet(const SeriesFrame& frame, WindowSpec spec);

  long count() const { return count_; }
  long start_of(long index) const;
  const WindowSpec& spec() const { return spec_; }
  const SeriesFrame& frame() const { return *frame_; }
  long n_series() const;  // after mode restriction

 private:
  const SeriesFrame* frame_;
  WindowSpec spec_;
  long count_ = 0;
};

// Materialized model inputs for a set of windows. Decoder rows hold the
// start token (last `token_len` input rows) followed by zero placeholders.
struct WindowBatch {
  long batch = 0;
  long input_len = 0, pred_len = 0, token_len = 0;
  long n_series = 0, n_marks = 0;
  std::vector<Scalar> enc_values;  // B x input_len x N
  std::vector<Scalar> enc_marks;   // B x input_len x M
  std::vector<Scalar> dec_values;  // B x (token_len+pred_len) x N
  std::vector<Scalar> dec_marks;   // B x (token_len+pred_len) x M
  std::vector<Scalar> target;      // B x pred_len x N
};

WindowBatch make_batch(const WindowSet& windows, long token_len,
                       const std::vector<long>& indices);

enum class SynthKind { SineMix, ArNoise };

// Deterministic synthetic series, hourly timestamps.
SeriesFrame synth_series(SynthKind kind, long length, long n_series, std::uint64_t seed,
                         double noise_sigma = 0.05);

}  // namespace tcct
