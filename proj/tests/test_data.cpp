#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tcct/data.hpp"

using namespace tcct;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << text;
  return path;
}

std::string ett_like_csv(int rows) {
  std::string text = "date,HUFL,HULL,MUFL,MULL,LUFL,LULL,OT\n";
  for (int r = 0; r < rows; ++r) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "2016-07-01 %02d:00:00,%d,%d,%d,%d,%d,%d,%.1f\n", r, r,
                  r + 1, r + 2, r + 3, r + 4, r + 5, 30.0 + r);
    text += buf;
  }
  return text;
}

}  // namespace

TEST_CASE("load_csv accepts the ETT schema") {
  auto path = write_temp("tcct_ett.csv", ett_like_csv(10));
  SeriesFrame f = load_csv(path);
  CHECK(f.n_series() == 7);
  CHECK(f.length() == 10);
  CHECK(f.target_column == "OT");
  CHECK(f.target_index() == 6);
  CHECK(f.at(3, 6) == doctest::Approx(33.0));
  std::filesystem::remove(path);
}

TEST_CASE("load_csv single-row file is a valid frame") {
  auto path = write_temp("tcct_one.csv", "date,a\n2021-01-01 00:00:00,3.5\n");
  SeriesFrame f = load_csv(path, CsvSchema{"a"});
  CHECK(f.length() == 1);
  CHECK(f.at(0, 0) == doctest::Approx(3.5));
  std::filesystem::remove(path);
}

TEST_CASE("load_csv error contracts name the offending row") {
  // non-numeric cell in data row 5
  std::string text = "date,a\n";
  for (int r = 0; r < 6; ++r)
    text += "2021-01-01 0" + std::to_string(r) + ":00:00," +
            (r == 4 ? std::string("oops") : std::to_string(r)) + "\n";
  auto path = write_temp("tcct_bad.csv", text);
  CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 5"), DataError);
  std::filesystem::remove(path);

  auto empty = write_temp("tcct_empty.csv", "");
  CHECK_THROWS_AS(load_csv(empty), DataError);
  std::filesystem::remove(empty);

  auto ragged = write_temp("tcct_ragged.csv",
                           "date,a,b\n2021-01-01 00:00:00,1,2\n2021-01-01 01:00:00,3\n");
  CHECK_THROWS_AS(load_csv(ragged), DataError);
  std::filesystem::remove(ragged);

  auto nonmono = write_temp(
      "tcct_nonmono.csv",
      "date,a\n2021-01-01 02:00:00,1\n2021-01-01 01:00:00,2\n");
  CHECK_THROWS_AS(load_csv(nonmono), DataError);
  std::filesystem::remove(nonmono);

  auto gap = write_temp("tcct_gap.csv",
                        "date,a\n2021-01-01 00:00:00,1\n2021-01-01 01:00:00,2\n"
                        "2021-01-01 03:00:00,3\n");
  CHECK_THROWS_AS(load_csv(gap), DataError);
  std::filesystem::remove(gap);
}

TEST_CASE("csv round trip through write_csv/load_csv") {
  SeriesFrame f = synth_series(SynthKind::SineMix, 48, 2, 9);
  auto path = write_temp("tcct_rt.csv", "");
  write_csv(f, path);
  SeriesFrame g = load_csv(path, CsvSchema{"y0"});
  REQUIRE(g.length() == f.length());
  REQUIRE(g.n_series() == f.n_series());
  CHECK(g.timestamps == f.timestamps);
  for (long r = 0; r < f.length(); ++r)
    for (long c = 0; c < f.n_series(); ++c) CHECK(g.at(r, c) == f.at(r, c));
  std::filesystem::remove(path);
}

TEST_CASE("zscore: hand oracle, fixed point, inverse") {
  SeriesFrame f;
  f.timestamps = {0, 3600, 7200};
  f.columns = {"a"};
  f.target_column = "a";
  f.values = {1, 2, 3};
  auto [norm, state] = zscore(f);
  const double s = std::sqrt(2.0 / 3.0);  // population std
  CHECK(norm.at(0, 0) == doctest::Approx(-1.0 / s * (1.0)).epsilon(1e-12));
  CHECK(norm.at(0, 0) == doctest::Approx(-1.224744871391589).epsilon(1e-12));
  CHECK(norm.at(1, 0) == doctest::Approx(0.0));
  CHECK(norm.at(2, 0) == doctest::Approx(1.224744871391589).epsilon(1e-12));

  // already standardized data stays put
  auto [norm2, st2] = zscore(norm);
  for (long r = 0; r < 3; ++r) CHECK(norm2.at(r, 0) == doctest::Approx(norm.at(r, 0)).epsilon(1e-10));

  SeriesFrame back = inverse_zscore(norm, state);
  for (long r = 0; r < 3; ++r) CHECK(back.at(r, 0) == doctest::Approx(f.at(r, 0)).epsilon(1e-10));
}

TEST_CASE("zscore zero-variance column is epsilon-guarded with a warning") {
  SeriesFrame f;
  f.timestamps = {0, 3600};
  f.columns = {"flat"};
  f.target_column = "flat";
  f.values = {2, 2};
  auto [norm, state] = zscore(f);
  CHECK(state.stddev[0] == NormalizationState::kEpsilon);
  CHECK(state.warnings.size() == 1);
  CHECK(std::isfinite(norm.at(0, 0)));
}

TEST_CASE("normalization statistics depend only on the training rows") {
  SeriesFrame train = synth_series(SynthKind::SineMix, 100, 2, 1);
  auto [n1, s1] = zscore(train);
  // "perturb the test rows": the fitted state never sees them
  SeriesFrame test = synth_series(SynthKind::SineMix, 50, 2, 2);
  for (auto& v : test.values) v += 100.0;
  auto n2 = zscore(test, &s1).first;
  auto [n3, s3] = zscore(train);
  CHECK(s1.mean == s3.mean);
  CHECK(s1.stddev == s3.stddev);
}

TEST_CASE("split_by_time: 12/4/4 shape, degenerate and ECL fractions") {
  SeriesFrame f = synth_series(SynthKind::ArNoise, 20, 1, 3);
  auto parts = split_by_time(f);
  CHECK(parts[0].length() == 12);
  CHECK(parts[1].length() == 4);
  CHECK(parts[2].length() == 4);
  // disjoint and consecutive in time
  CHECK(parts[0].timestamps.back() < parts[1].timestamps.front());
  CHECK(parts[1].timestamps.back() < parts[2].timestamps.front());

  CHECK_THROWS_AS(split_by_time(f, SplitFractions{1, 0, 0}), DataError);
  CHECK_THROWS_AS(split_by_time(f, SplitFractions{0.5, 0.2, 0.2}), ConfigError);

  SeriesFrame big = synth_series(SynthKind::ArNoise, 35, 1, 3);
  auto ecl = split_by_time(big, SplitFractions{21.0 / 35, 7.0 / 35, 7.0 / 35});
  CHECK(ecl[0].length() == 21);
  CHECK(ecl[1].length() == 7);
  CHECK(ecl[2].length() == 7);
}

TEST_CASE("split_by_months cuts on calendar boundaries") {
  // hourly data spanning 4 months of 2021
  SeriesFrame f = synth_series(SynthKind::ArNoise, 24 * (31 + 28 + 31 + 30), 1, 4);
  auto parts = split_by_months(f, 2, 1, 1);
  CHECK(parts[0].length() == 24 * (31 + 28));
  CHECK(parts[1].length() == 24 * 31);
  CHECK(parts[2].length() == 24 * 30);
  CHECK_THROWS_AS(split_by_months(f, 3, 1, 1), DataError);
}

TEST_CASE("make_windows counting and univariate restriction") {
  SeriesFrame f = synth_series(SynthKind::SineMix, 10, 3, 5);
  WindowSpec spec;
  spec.input_len = 4;
  spec.pred_len = 2;
  WindowSet ws(f, spec);
  CHECK(ws.count() == 5);  // 10 - 4 - 2 + 1
  CHECK(ws.start_of(0) == 0);
  CHECK(ws.start_of(4) == 4);
  CHECK_THROWS_AS(ws.start_of(5), DataError);

  SeriesFrame exact = synth_series(SynthKind::SineMix, 6, 3, 5);
  CHECK(WindowSet(exact, spec).count() == 1);

  WindowSpec strided = spec;
  strided.stride = 3;
  WindowSet wstr(f, strided);
  CHECK(wstr.count() == 2);  // floor((10-4-2)/3) + 1
  CHECK(wstr.start_of(1) == 3);

  SeriesFrame tiny = synth_series(SynthKind::SineMix, 5, 3, 5);
  CHECK_THROWS_WITH_AS(WindowSet(tiny, spec), doctest::Contains("at least 6"), DataError);

  WindowSpec uni = spec;
  uni.mode = SeriesMode::Univariate;
  WindowSet wu(f, uni);
  CHECK(wu.n_series() == 1);
  auto batch = make_batch(wu, 4, {0});
  CHECK(batch.n_series == 1);
  // univariate input/target read the target column (y0 = column 0)
  CHECK(double(batch.enc_values[0]) == doctest::Approx(f.at(0, 0)));
  CHECK(double(batch.target[0]) == doctest::Approx(f.at(4, 0)));
}

TEST_CASE("make_batch assembles the decoder start token and placeholders") {
  SeriesFrame f = synth_series(SynthKind::SineMix, 12, 2, 6);
  WindowSpec spec;
  spec.input_len = 6;
  spec.pred_len = 3;
  WindowSet ws(f, spec);
  const long token = 4;
  auto b = make_batch(ws, token, {1, 2});
  CHECK(b.batch == 2);
  CHECK(b.token_len == 4);
  // window 1 starts at row 1; decoder known rows are input rows 3..6
  for (long r = 0; r < token; ++r)
    for (long c = 0; c < 2; ++c)
      CHECK(double(b.dec_values[(r)*2 + c]) == doctest::Approx(f.at(1 + 2 + r, c)));
  // placeholders are zero
  for (long r = token; r < token + 3; ++r)
    for (long c = 0; c < 2; ++c) CHECK(double(b.dec_values[r * 2 + c]) == 0.0);
  // targets are the rows after the input window
  for (long r = 0; r < 3; ++r)
    for (long c = 0; c < 2; ++c)
      CHECK(double(b.target[(r)*2 + c]) == doctest::Approx(f.at(1 + 6 + r, c)));
  CHECK_THROWS_AS(make_batch(ws, 7, {0}), ConfigError);
}

TEST_CASE("window iteration is deterministic and index-addressable") {
  SeriesFrame f = synth_series(SynthKind::SineMix, 30, 2, 8);
  WindowSpec spec;
  spec.input_len = 8;
  spec.pred_len = 4;
  WindowSet ws(f, spec);
  auto one = make_batch(ws, 8, {7});
  auto all = make_batch(ws, 8, {5, 6, 7});
  const long n = spec.input_len * 2;
  for (long i = 0; i < n; ++i)
    CHECK(one.enc_values[i] == all.enc_values[2 * n + i]);
}

TEST_CASE("synth_series determinism and structure") {
  SeriesFrame a = synth_series(SynthKind::SineMix, 200, 3, 42);
  SeriesFrame b = synth_series(SynthKind::SineMix, 200, 3, 42);
  CHECK(a.values == b.values);
  CHECK(a.timestamps == b.timestamps);

  SeriesFrame c = synth_series(SynthKind::SineMix, 200, 3, 43);
  CHECK(a.values != c.values);

  // zero noise -> exactly periodic at the 24-row daily cycle
  SeriesFrame p = synth_series(SynthKind::SineMix, 120, 2, 7, 0.0);
  for (long r = 0; r + 24 < p.length(); ++r)
    for (long col = 0; col < 2; ++col) CHECK(p.at(r, col) == p.at(r + 24, col));

  // autocorrelation at the dominant period stays above 0.9 at sigma=0.05
  SeriesFrame s = synth_series(SynthKind::SineMix, 2000, 1, 11, 0.05);
  double mean = 0;
  for (long r = 0; r < s.length(); ++r) mean += s.at(r, 0);
  mean /= double(s.length());
  double num = 0, den = 0;
  for (long r = 0; r + 24 < s.length(); ++r)
    num += (s.at(r, 0) - mean) * (s.at(r + 24, 0) - mean);
  for (long r = 0; r < s.length(); ++r) den += (s.at(r, 0) - mean) * (s.at(r, 0) - mean);
  CHECK(num / den > 0.9);

  SeriesFrame ar = synth_series(SynthKind::ArNoise, 100, 2, 5);
  CHECK(ar.length() == 100);
  CHECK(ar.values != std::vector<double>(200, 0.0));
}

TEST_CASE("time marks are normalized calendar features") {
  SeriesFrame f = synth_series(SynthKind::SineMix, 48, 1, 1);
  auto marks = f.time_marks();
  REQUIRE(marks.size() == size_t(48 * SeriesFrame::kNumMarks));
  // 2021-01-01 00:00 UTC: hour 0, Friday, day 1, January
  CHECK(marks[0] == doctest::Approx(-0.5));             // hour
  CHECK(marks[1] == doctest::Approx(5.0 / 6.0 - 0.5));  // weekday (Friday)
  CHECK(marks[2] == doctest::Approx(-0.5));             // day of month
  CHECK(marks[3] == doctest::Approx(-0.5));             // month
  for (double m : marks) {
    CHECK(m >= -0.5);
    CHECK(m <= 0.5);
  }
  // hour mark advances by 1/23 per row
  CHECK(marks[SeriesFrame::kNumMarks] == doctest::Approx(1.0 / 23.0 - 0.5));
}
