#include "tcct/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace tcct {

long SeriesFrame::target_index() const {
  for (long i = 0; i < n_series(); ++i)
    if (columns[i] == target_column) return i;
  throw DataError("target column '" + target_column + "' not found");
}

void SeriesFrame::validate() const {
  TCCT_CHECK_DATA(!timestamps.empty(), "empty series frame");
  TCCT_CHECK_DATA(values.size() == timestamps.size() * columns.size(),
                  "value matrix does not match frame dimensions");
  const std::int64_t step = timestamps.size() > 1 ? timestamps[1] - timestamps[0] : 1;
  TCCT_CHECK_DATA(step > 0, "timestamps must be strictly increasing");
  for (size_t i = 1; i < timestamps.size(); ++i)
    TCCT_CHECK_DATA(timestamps[i] - timestamps[i - 1] == step,
                    "timestamps must be uniformly spaced (row ", i + 1, " breaks the grid)");
}

std::vector<double> SeriesFrame::time_marks() const {
  std::vector<double> marks(length() * kNumMarks, 0.0);
  for (long r = 0; r < length(); ++r) {
    const std::time_t t = std::time_t(timestamps[r]);
    std::tm tm{};
    gmtime_r(&t, &tm);
    marks[r * kNumMarks + 0] = tm.tm_hour / 23.0 - 0.5;
    marks[r * kNumMarks + 1] = tm.tm_wday / 6.0 - 0.5;
    marks[r * kNumMarks + 2] = (tm.tm_mday - 1) / 30.0 - 0.5;
    marks[r * kNumMarks + 3] = tm.tm_mon / 11.0 - 0.5;
  }
  return marks;
}

void WindowSpec::validate() const {
  TCCT_CHECK_CFG(input_len >= 1 && pred_len >= 1, "window lengths must be >= 1");
  TCCT_CHECK_CFG(stride >= 1, "stride must be >= 1");
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::optional<std::int64_t> parse_timestamp(const std::string& s) {
  std::tm tm{};
  int y, mo, d, h = 0, mi = 0, se = 0;
  const int n = std::sscanf(s.c_str(), "%d-%d-%d%*1[ T]%d:%d:%d", &y, &mo, &d, &h, &mi, &se);
  if (n != 3 && n != 5 && n != 6) return std::nullopt;
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = se;
  const std::time_t t = timegm(&tm);
  if (t == std::time_t(-1)) return std::nullopt;
  return std::int64_t(t);
}

std::string format_timestamp(std::int64_t ts) {
  const std::time_t t = std::time_t(ts);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[80];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

}  // namespace

SeriesFrame load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  TCCT_CHECK_DATA(in.good(), "cannot open '", path, "'");
  std::string line;
  TCCT_CHECK_DATA(bool(std::getline(in, line)), "empty file '", path, "'");
  auto header = parse_csv_line(line);
  TCCT_CHECK_DATA(header.size() >= 2, "need a timestamp column and at least one value column");

  SeriesFrame frame;
  frame.columns.assign(header.begin() + 1, header.end());
  frame.target_column = schema.target_column;
  const long n = frame.n_series();

  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    auto fields = parse_csv_line(line);
    TCCT_CHECK_DATA(long(fields.size()) == n + 1, "row ", row, ": expected ", n + 1,
                    " fields, got ", fields.size());
    auto ts = parse_timestamp(fields[0]);
    TCCT_CHECK_DATA(ts.has_value(), "row ", row, ": unparseable timestamp '", fields[0], "'");
    TCCT_CHECK_DATA(frame.timestamps.empty() || *ts > frame.timestamps.back(),
                    "row ", row, ": timestamps not strictly increasing");
    frame.timestamps.push_back(*ts);
    for (long c = 0; c < n; ++c) {
      char* end = nullptr;
      const std::string& f = fields[c + 1];
      const double v = std::strtod(f.c_str(), &end);
      TCCT_CHECK_DATA(end && *end == '\0' && !f.empty() && std::isfinite(v),
                      "row ", row, ": non-numeric cell '", f, "' in column '",
                      frame.columns[c], "'");
      frame.values.push_back(v);
    }
  }
  TCCT_CHECK_DATA(frame.length() >= 1, "no data rows in '", path, "'");
  frame.validate();
  if (std::find(frame.columns.begin(), frame.columns.end(), frame.target_column) ==
      frame.columns.end())
    frame.target_column = frame.columns.back();
  return frame;
}

void write_csv(const SeriesFrame& frame, const std::string& path) {
  std::ofstream out(path);
  TCCT_CHECK_DATA(out.good(), "cannot write '", path, "'");
  out << "date";
  for (const auto& c : frame.columns) out << ',' << csv_quote(c);
  out << '\n';
  char buf[40];
  for (long r = 0; r < frame.length(); ++r) {
    out << format_timestamp(frame.timestamps[r]);
    for (long c = 0; c < frame.n_series(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.at(r, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// normalization / splits

std::pair<SeriesFrame, NormalizationState> zscore(const SeriesFrame& frame,
                                                  const NormalizationState* state) {
  const long n = frame.n_series(), len = frame.length();
  NormalizationState st;
  if (state) {
    TCCT_CHECK_DATA(long(state->mean.size()) == n, "normalization state column mismatch");
    st = *state;
  } else {
    st.mean.assign(n, 0.0);
    st.stddev.assign(n, 0.0);
    for (long c = 0; c < n; ++c) {
      double m = 0;
      for (long r = 0; r < len; ++r) m += frame.at(r, c);
      m /= double(len);
      double var = 0;
      for (long r = 0; r < len; ++r) {
        const double e = frame.at(r, c) - m;
        var += e * e;
      }
      var /= double(len);  // population variance
      st.mean[c] = m;
      double sd = std::sqrt(var);
      if (sd < NormalizationState::kEpsilon) {
        st.warnings.push_back("column '" + frame.columns[c] +
                              "' has (near) zero variance; clamped");
        std::cerr << "[tcct] warning: " << st.warnings.back() << "\n";
        sd = NormalizationState::kEpsilon;
      }
      st.stddev[c] = sd;
    }
  }
  SeriesFrame out = frame;
  for (long r = 0; r < len; ++r)
    for (long c = 0; c < n; ++c)
      out.values[r * n + c] = (frame.at(r, c) - st.mean[c]) / st.stddev[c];
  return {std::move(out), std::move(st)};
}

SeriesFrame inverse_zscore(const SeriesFrame& frame, const NormalizationState& state) {
  SeriesFrame out = frame;
  const long n = frame.n_series();
  for (long r = 0; r < frame.length(); ++r)
    for (long c = 0; c < n; ++c)
      out.values[r * n + c] = frame.at(r, c) * state.stddev[c] + state.mean[c];
  return out;
}

namespace {
SeriesFrame slice_frame(const SeriesFrame& frame, long start, long count) {
  SeriesFrame out;
  out.columns = frame.columns;
  out.target_column = frame.target_column;
  out.timestamps.assign(frame.timestamps.begin() + start,
                        frame.timestamps.begin() + start + count);
  const long n = frame.n_series();
  out.values.assign(frame.values.begin() + start * n,
                    frame.values.begin() + (start + count) * n);
  return out;
}
}  // namespace

std::array<SeriesFrame, 3> split_by_time(const SeriesFrame& frame, SplitFractions f) {
  const double sum = f.train + f.val + f.test;
  TCCT_CHECK_CFG(std::abs(sum - 1.0) < 1e-9, "split fractions must sum to 1, got ", sum);
  const long len = frame.length();
  const long b1 = long(std::floor(len * f.train));
  const long b2 = long(std::floor(len * (f.train + f.val)));
  TCCT_CHECK_DATA(b1 >= 1 && b2 > b1 && len > b2,
                  "split produces an empty segment (lengths ", b1, "/", b2 - b1, "/",
                  len - b2, ")");
  return {slice_frame(frame, 0, b1), slice_frame(frame, b1, b2 - b1),
          slice_frame(frame, b2, len - b2)};
}

std::array<SeriesFrame, 3> split_by_months(const SeriesFrame& frame, int m_train, int m_val,
                                           int m_test) {
  TCCT_CHECK_CFG(m_train >= 1 && m_val >= 1 && m_test >= 1, "month counts must be >= 1");
  // Month id per row, then cut after the requested number of distinct months.
  std::vector<int> month_id(frame.length());
  int months_seen = 0;
  int last = -1;
  for (long r = 0; r < frame.length(); ++r) {
    const std::time_t t = std::time_t(frame.timestamps[r]);
    std::tm tm{};
    gmtime_r(&t, &tm);
    const int id = tm.tm_year * 12 + tm.tm_mon;
    if (id != last) {
      ++months_seen;
      last = id;
    }
    month_id[r] = months_seen;  // 1-based running count of distinct months
  }
  TCCT_CHECK_DATA(months_seen >= m_train + m_val + m_test, "series spans ", months_seen,
                  " months, need ", m_train + m_val + m_test);
  long b1 = 0, b2 = 0;
  for (long r = 0; r < frame.length(); ++r) {
    if (month_id[r] <= m_train) b1 = r + 1;
    if (month_id[r] <= m_train + m_val) b2 = r + 1;
  }
  return {slice_frame(frame, 0, b1), slice_frame(frame, b1, b2 - b1),
          slice_frame(frame, b2, frame.length() - b2)};
}

// ---------------------------------------------------------------------------
// windows

WindowSet::WindowSet(const SeriesFrame& frame, WindowSpec spec)
    : frame_(&frame), spec_(spec) {
  spec_.validate();
  const long need = spec_.input_len + spec_.pred_len;
  TCCT_CHECK_DATA(frame.length() >= need, "segment of length ", frame.length(),
                  " too short for windows; need at least ", need, " rows");
  count_ = (frame.length() - need) / spec_.stride + 1;
}

long WindowSet::start_of(long index) const {
  TCCT_CHECK_DATA(index >= 0 && index < count_, "window index ", index, " out of range");
  return index * spec_.stride;
}

long WindowSet::n_series() const {
  return spec_.mode == SeriesMode::Univariate ? 1 : frame_->n_series();
}

WindowBatch make_batch(const WindowSet& windows, long token_len,
                       const std::vector<long>& indices) {
  const auto& spec = windows.spec();
  const auto& frame = windows.frame();
  TCCT_CHECK_CFG(token_len >= 1 && token_len <= spec.input_len,
                 "token_len must be in [1, input_len]");
  const long t0 = spec.input_len, T = spec.pred_len;
  const long n_all = frame.n_series();
  const long tgt = frame.target_index();
  const bool uni = spec.mode == SeriesMode::Univariate;
  const long N = uni ? 1 : n_all;
  const long M = SeriesFrame::kNumMarks;
  const auto marks = frame.time_marks();

  WindowBatch b;
  b.batch = long(indices.size());
  b.input_len = t0;
  b.pred_len = T;
  b.token_len = token_len;
  b.n_series = N;
  b.n_marks = M;
  b.enc_values.assign(b.batch * t0 * N, Scalar(0));
  b.enc_marks.assign(b.batch * t0 * M, Scalar(0));
  b.dec_values.assign(b.batch * (token_len + T) * N, Scalar(0));
  b.dec_marks.assign(b.batch * (token_len + T) * M, Scalar(0));
  b.target.assign(b.batch * T * N, Scalar(0));

  for (long i = 0; i < b.batch; ++i) {
    const long start = windows.start_of(indices[i]);
    for (long r = 0; r < t0; ++r) {
      for (long c = 0; c < N; ++c)
        b.enc_values[(i * t0 + r) * N + c] =
            Scalar(frame.at(start + r, uni ? tgt : c));
      for (long m = 0; m < M; ++m)
        b.enc_marks[(i * t0 + r) * M + m] = Scalar(marks[(start + r) * M + m]);
    }
    const long dec_start = start + t0 - token_len;
    for (long r = 0; r < token_len + T; ++r) {
      for (long m = 0; m < M; ++m)
        b.dec_marks[(i * (token_len + T) + r) * M + m] =
            Scalar(marks[(dec_start + r) * M + m]);
      if (r < token_len)
        for (long c = 0; c < N; ++c)
          b.dec_values[(i * (token_len + T) + r) * N + c] =
              Scalar(frame.at(dec_start + r, uni ? tgt : c));
    }
    for (long r = 0; r < T; ++r)
      for (long c = 0; c < N; ++c)
        b.target[(i * T + r) * N + c] = Scalar(frame.at(start + t0 + r, uni ? tgt : c));
  }
  return b;
}

// ---------------------------------------------------------------------------
// synthetic data

SeriesFrame synth_series(SynthKind kind, long length, long n_series, std::uint64_t seed,
                         double noise_sigma) {
  TCCT_CHECK_CFG(length >= 1 && n_series >= 1, "synth_series needs length, n_series >= 1");
  SeriesFrame frame;
  constexpr std::int64_t kStart = 1609459200;  // 2021-01-01 00:00:00 UTC
  frame.timestamps.resize(length);
  for (long r = 0; r < length; ++r) frame.timestamps[r] = kStart + 3600 * r;
  for (long c = 0; c < n_series; ++c) frame.columns.push_back("y" + std::to_string(c));
  frame.target_column = "y0";
  frame.values.assign(length * n_series, 0.0);

  Rng rng(seed);
  if (kind == SynthKind::SineMix) {
    // Dominant daily cycle plus two weaker harmonics. Arguments are taken
    // modulo the 24-row common period so zero-noise columns repeat bitwise.
    const double periods[3] = {24.0, 8.0, 4.8};
    const double amps[3] = {1.0, 0.15, 0.1};
    for (long c = 0; c < n_series; ++c) {
      double phase[3];
      for (int p = 0; p < 3; ++p) phase[p] = rng.uniform(0.0, 2.0 * M_PI);
      for (long r = 0; r < length; ++r) {
        const double rm = double(r % 24);
        double v = 0;
        for (int p = 0; p < 3; ++p)
          v += amps[p] * std::sin(2.0 * M_PI * rm / periods[p] + phase[p]);
        if (noise_sigma > 0) v += noise_sigma * rng.gaussian(0.0, 1.0);
        frame.values[r * n_series + c] = v;
      }
    }
  } else {
    for (long c = 0; c < n_series; ++c) {
      double x = 0;
      for (long r = 0; r < length; ++r) {
        x = 0.9 * x + rng.gaussian(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
        frame.values[r * n_series + c] = x;
      }
    }
  }
  return frame;
}

}  // namespace tcct
