#include "tcct/experiment.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "json.hpp"

namespace tcct {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// small utilities

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string out = "\"";
  for (char c : raw) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// spec <-> json

SeriesFrame DatasetSource::load() const {
  if (type == Type::Csv) {
    CsvSchema schema;
    schema.target_column = target_column;
    return load_csv(path, schema);
  }
  return synth_series(kind, length, n_series, seed, noise_sigma);
}

namespace {
json dataset_to_json(const DatasetSource& d) {
  if (d.type == DatasetSource::Type::Csv)
    return json{{"type", "csv"}, {"path", d.path}, {"target", d.target_column}};
  return json{{"type", "synth"},
              {"kind", d.kind == SynthKind::SineMix ? "sine_mix" : "ar_noise"},
              {"length", d.length},
              {"n_series", d.n_series},
              {"noise_sigma", d.noise_sigma},
              {"seed", d.seed}};
}

DatasetSource dataset_from_json(const json& j) {
  DatasetSource d;
  const std::string type = j.at("type").get<std::string>();
  if (type == "csv") {
    d.type = DatasetSource::Type::Csv;
    d.path = j.at("path").get<std::string>();
    if (j.contains("target")) d.target_column = j.at("target").get<std::string>();
  } else if (type == "synth") {
    d.type = DatasetSource::Type::Synth;
    const std::string kind = j.value("kind", "sine_mix");
    if (kind == "sine_mix")
      d.kind = SynthKind::SineMix;
    else if (kind == "ar_noise")
      d.kind = SynthKind::ArNoise;
    else
      throw ConfigError("unknown synth kind '" + kind + "'");
    d.length = j.value("length", 2000L);
    d.n_series = j.value("n_series", 3L);
    d.noise_sigma = j.value("noise_sigma", 0.05);
    d.seed = j.value("seed", std::uint64_t(7));
  } else {
    throw ConfigError("dataset type must be 'csv' or 'synth'");
  }
  return d;
}

std::string dataset_label(const DatasetSource& d) {
  if (d.type == DatasetSource::Type::Csv) return d.path;
  return std::string("synth:") + (d.kind == SynthKind::SineMix ? "sine_mix" : "ar_noise");
}
}  // namespace

std::string ExperimentSpec::to_json() const {
  json j{{"variant", variant},
         {"dataset", dataset_to_json(dataset)},
         {"mode", mode == SeriesMode::Univariate ? "uni" : "multi"},
         {"input_len", input_len},
         {"pred_lens", pred_lens},
         {"repeats", repeats},
         {"seed", seed},
         {"out_dir", out_dir},
         {"d_model", d_model},
         {"heads", heads},
         {"enc_blocks", enc_blocks},
         {"dec_layers", dec_layers},
         {"feedforward_dim", feedforward_dim},
         {"token_len", token_len},
         {"train",
          {{"lr0", train_config.lr0},
           {"lr_decay", train_config.lr_decay},
           {"epochs", train_config.epochs},
           {"batch", train_config.batch},
           {"patience", train_config.patience}}},
         {"split", {{"train", split.train}, {"val", split.val}, {"test", split.test}}},
         {"split_months", split_months},
         {"parallel_repeats", parallel_repeats},
         {"sweep_lengths", sweep_lengths},
         {"emit_svg", emit_svg}};
  return j.dump(2);
}

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text) {
  json j = json::parse(text);
  if (j.contains("spec")) j = j.at("spec");  // accept a manifest as input
  ExperimentSpec s;
  s.variant = j.value("variant", s.variant);
  if (j.contains("dataset")) s.dataset = dataset_from_json(j.at("dataset"));
  const std::string mode = j.value("mode", "multi");
  TCCT_CHECK_CFG(mode == "uni" || mode == "multi", "mode must be 'uni' or 'multi'");
  s.mode = mode == "uni" ? SeriesMode::Univariate : SeriesMode::Multivariate;
  s.input_len = j.value("input_len", s.input_len);
  if (j.contains("pred_lens")) s.pred_lens = j.at("pred_lens").get<std::vector<long>>();
  s.repeats = j.value("repeats", s.repeats);
  s.seed = j.value("seed", s.seed);
  s.out_dir = j.value("out_dir", s.out_dir);
  s.d_model = j.value("d_model", s.d_model);
  s.heads = j.value("heads", s.heads);
  s.enc_blocks = j.value("enc_blocks", s.enc_blocks);
  s.dec_layers = j.value("dec_layers", s.dec_layers);
  s.feedforward_dim = j.value("feedforward_dim", s.feedforward_dim);
  s.token_len = j.value("token_len", s.token_len);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    s.train_config.lr0 = t.value("lr0", s.train_config.lr0);
    s.train_config.lr_decay = t.value("lr_decay", s.train_config.lr_decay);
    s.train_config.epochs = t.value("epochs", s.train_config.epochs);
    s.train_config.batch = t.value("batch", s.train_config.batch);
    s.train_config.patience = t.value("patience", s.train_config.patience);
  }
  if (j.contains("split")) {
    const auto& sp = j.at("split");
    s.split.train = sp.value("train", s.split.train);
    s.split.val = sp.value("val", s.split.val);
    s.split.test = sp.value("test", s.split.test);
  }
  if (j.contains("split_months")) {
    s.split_months = j.at("split_months").get<std::vector<int>>();
    TCCT_CHECK_CFG(s.split_months.empty() || s.split_months.size() == 3,
                   "split_months needs exactly three entries");
  }
  s.parallel_repeats = j.value("parallel_repeats", s.parallel_repeats);
  if (j.contains("sweep_lengths"))
    s.sweep_lengths = j.at("sweep_lengths").get<std::vector<long>>();
  s.emit_svg = j.value("emit_svg", s.emit_svg);
  return s;
}

std::string ExperimentSpec::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                (unsigned long long)fnv1a64(to_json()));
  return std::string("fnv1a:") + buf;
}

ModelConfig ExperimentSpec::model_config(long pred_len, std::uint64_t run_seed) const {
  ModelConfig cfg;
  cfg.input_len = input_len;
  cfg.pred_len = pred_len;
  cfg.token_len = token_len;
  cfg.n_series = mode == SeriesMode::Univariate ? 1 : dataset.n_series;
  cfg.d_model = d_model;
  cfg.heads = heads;
  cfg.enc_blocks = enc_blocks;
  cfg.dec_layers = dec_layers;
  cfg.feedforward_dim = feedforward_dim;
  cfg.seed = run_seed;
  apply_variant(cfg, variant_from_name(variant));
  return cfg;
}

// ---------------------------------------------------------------------------
// run

namespace {
struct RunRow {
  std::uint64_t seed;
  double mse, mae;
};

RunRow run_once(const ExperimentSpec& spec, const SeriesFrame& train_f,
                const SeriesFrame& val_f, const SeriesFrame& test_f, long pred_len,
                long n_series_frame, int rep) {
  WindowSpec wspec;
  wspec.input_len = spec.input_len;
  wspec.pred_len = pred_len;
  wspec.mode = spec.mode;
  WindowSet train_w(train_f, wspec), val_w(val_f, wspec), test_w(test_f, wspec);

  ModelConfig mc = spec.model_config(pred_len, mix_seed(spec.seed, rep));
  mc.n_series = spec.mode == SeriesMode::Univariate ? 1 : n_series_frame;
  Model model(mc);
  TrainConfig tc = spec.train_config;
  tc.seed = mix_seed(spec.seed, rep);
  train(model, train_w, val_w, tc);
  EvalResult ev = evaluate(model, test_w, tc.batch, mix_seed(spec.seed, 0x7e57 + rep));
  return RunRow{mc.seed, ev.mse, ev.mae};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  TCCT_CHECK_DATA(out.good(), "cannot write '", path, "'");
  out << text;
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum((unsigned char)c) || c == '_') ? c : '_';
  return out;
}

void write_manifest(const ExperimentSpec& spec, const std::string& path) {
  json m{{"tool", "tcct"},
         {"version", "0.1.0"},
         {"spec", json::parse(spec.to_json())},
         {"spec_hash", spec.hash()}};
  write_text(path, m.dump(2) + "\n");
}

json complexity_bundle(const ExperimentSpec& spec) {
  const long d = spec.d_model;
  const long H = spec.heads;
  const long L = spec.input_len;
  ModelConfig mc;
  mc.enc_blocks = spec.enc_blocks;
  Rng rng(1);
  AttentionSpec canon{AttnKind::Canonical, false, false, int(H), int(d)};
  AttentionSpec csp{AttnKind::Canonical, true, false, int(H), int(d)};
  auto wc = AttentionWeights::init(canon, rng);
  auto ws = AttentionWeights::init(csp, rng);
  std::vector<Scalar> x(L * d);
  Rng xr(2);
  for (auto& v : x) v = Scalar(xr.gaussian(0, 1));
  auto rep_c = analytic_canonical(L, d, H);
  rep_c.empirical_mults = empirical_count(wc, canon, x, L);
  auto rep_s = analytic_csp(L, d, H);
  rep_s.empirical_mults = empirical_count(ws, csp, x, L);
  auto impl_c = impl_true_canonical(L, d, H);
  auto impl_s = impl_true_csp(L, d, H);
  json j{{"canonical", json::parse(rep_c.to_json())},
         {"csp", json::parse(rep_s.to_json())},
         {"canonical_impl", json::parse(impl_c.to_json())},
         {"csp_impl", json::parse(impl_s.to_json())},
         {"memory_canonical", memory_accounting(canon)},
         {"memory_csp", memory_accounting(csp)},
         {"ratios",
          {{"l2", double(rep_s.l2_coefficient) / double(rep_c.l2_coefficient)},
           {"l1", double(rep_s.l1_coefficient) / double(rep_c.l1_coefficient)},
           {"memory", double(memory_accounting(csp)) / double(memory_accounting(canon))}}},
         {"receptive", json::parse(receptive_report_stages(spec.enc_blocks - 1).to_json())}};
  return j;
}
}  // namespace

RunArtifacts run_experiment(const ExperimentSpec& spec) {
  TCCT_CHECK_CFG(!spec.pred_lens.empty(), "pred_lens must not be empty");
  for (long p : spec.pred_lens) TCCT_CHECK_CFG(p >= 1, "pred_len entries must be >= 1");
  variant_from_name(spec.variant);  // validates the name early
  fs::create_directories(spec.out_dir);

  SeriesFrame raw = spec.dataset.load();
  TCCT_CHECK_CFG(spec.split_months.empty() || spec.split_months.size() == 3,
                 "split_months needs exactly three entries");
  auto segments = spec.split_months.empty()
                      ? split_by_time(raw, spec.split)
                      : split_by_months(raw, spec.split_months[0], spec.split_months[1],
                                        spec.split_months[2]);
  auto [train_f, nstate] = zscore(segments[0]);
  auto val_f = zscore(segments[1], &nstate).first;
  auto test_f = zscore(segments[2], &nstate).first;

  RunArtifacts art;
  const std::string vtag = sanitize(spec.variant);
  for (long pred_len : spec.pred_lens) {
    std::vector<RunRow> rows(spec.repeats);
    if (spec.parallel_repeats) {
      std::vector<std::future<RunRow>> futs;
      for (int rep = 0; rep < spec.repeats; ++rep)
        futs.push_back(std::async(std::launch::async, [&, rep] {
          return run_once(spec, train_f, val_f, test_f, pred_len, raw.n_series(), rep);
        }));
      for (int rep = 0; rep < spec.repeats; ++rep) rows[rep] = futs[rep].get();
    } else {
      for (int rep = 0; rep < spec.repeats; ++rep)
        rows[rep] = run_once(spec, train_f, val_f, test_f, pred_len, raw.n_series(), rep);
    }

    std::vector<double> mses, maes;
    for (const auto& r : rows) {
      mses.push_back(r.mse);
      maes.push_back(r.mae);
    }
    RepeatStats stats = repeat_stats(mses);
    RepeatStats mae_stats = repeat_stats(maes);

    const std::string dslabel = dataset_label(spec.dataset);
    const std::string mode = spec.mode == SeriesMode::Univariate ? "uni" : "multi";
    std::ostringstream csv;
    csv << "variant,dataset,mode,pred_len,input_len,run_seed,mse,mae,msd,cv_percent\n";
    for (const auto& r : rows)
      csv << csv_field(spec.variant) << ',' << csv_field(dslabel) << ',' << mode << ','
          << pred_len << ',' << spec.input_len << ',' << r.seed << ','
          << format_double(r.mse) << ',' << format_double(r.mae) << ",,\n";
    csv << csv_field(spec.variant) << ',' << csv_field(dslabel) << ',' << mode << ','
        << pred_len << ',' << spec.input_len << ",aggregate," << format_double(stats.mean)
        << ',' << format_double(mae_stats.mean) << ',' << format_double(stats.msd) << ','
        << (stats.cv_percent ? format_double(*stats.cv_percent) : std::string()) << "\n";
    const std::string base =
        (fs::path(spec.out_dir) / ("metrics_" + vtag + "_p" + std::to_string(pred_len)))
            .string();
    write_text(base + ".csv", csv.str());
    art.metric_csvs.push_back(base + ".csv");

    json jruns = json::array();
    for (const auto& r : rows)
      jruns.push_back({{"seed", r.seed}, {"mse", r.mse}, {"mae", r.mae}});
    json jm{{"variant", spec.variant},
            {"dataset", dslabel},
            {"mode", mode},
            {"pred_len", pred_len},
            {"input_len", spec.input_len},
            {"runs", jruns},
            {"aggregate",
             {{"mean_mse", stats.mean},
              {"mean_mae", mae_stats.mean},
              {"msd", stats.msd},
              {"cv_percent", stats.cv_percent ? json(*stats.cv_percent) : json()}}}};
    write_text(base + ".json", jm.dump(2) + "\n");
    art.metric_jsons.push_back(base + ".json");
  }

  const std::string cpath =
      (fs::path(spec.out_dir) / ("complexity_" + vtag + ".json")).string();
  write_text(cpath, complexity_bundle(spec).dump(2) + "\n");
  art.complexity_json = cpath;

  const std::string mpath = (fs::path(spec.out_dir) / "manifest.json").string();
  write_manifest(spec, mpath);
  art.manifest_path = mpath;
  return art;
}

// ---------------------------------------------------------------------------
// analyze

namespace {
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<long>& xs,
                     const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const double W = 720, H = 440, mx = 70, my = 50;
  double ymax = 1;
  for (const auto& s : series)
    for (double v : s.second) ymax = std::max(ymax, v);
  double xmax = 1;
  for (long x : xs) xmax = std::max(xmax, double(x));
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
  svg << "<line x1='" << mx << "' y1='" << H - my << "' x2='" << W - 20 << "' y2='"
      << H - my << "' stroke='black'/>\n";
  svg << "<line x1='" << mx << "' y1='" << H - my << "' x2='" << mx
      << "' y2='30' stroke='black'/>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (size_t si = 0; si < series.size(); ++si) {
    svg << "<polyline fill='none' stroke='" << colors[si % 4] << "' stroke-width='2' points='";
    for (size_t i = 0; i < xs.size(); ++i) {
      const double px = mx + (W - 20 - mx) * double(xs[i]) / xmax;
      const double py = (H - my) - (H - my - 30) * series[si].second[i] / ymax;
      svg << px << ',' << py << ' ';
    }
    svg << "'/>\n";
    svg << "<text x='" << W - 180 << "' y='" << 50 + 18 * si << "' fill='" << colors[si % 4]
        << "' font-size='13'>" << series[si].first << "</text>\n";
  }
  svg << "</svg>\n";
  write_text(path, svg.str());
}
}  // namespace

RunArtifacts analyze_experiment(const ExperimentSpec& spec) {
  TCCT_CHECK_CFG(!spec.sweep_lengths.empty(), "analyze: empty length sweep");
  fs::create_directories(spec.out_dir);
  const long d = spec.d_model, H = spec.heads;
  Rng rng(1);
  AttentionSpec canon{AttnKind::Canonical, false, false, int(H), int(d)};
  AttentionSpec csp{AttnKind::Canonical, true, false, int(H), int(d)};
  auto wc = AttentionWeights::init(canon, rng);
  auto ws = AttentionWeights::init(csp, rng);

  std::ostringstream csv;
  csv << "L,d,H,analytic_canonical,analytic_csp,analytic_ratio,impl_canonical,impl_csp,"
         "impl_ratio,empirical_canonical,empirical_csp,empirical_ratio\n";
  json jrows = json::array();
  std::vector<double> a_can, a_csp;
  for (long L : spec.sweep_lengths) {
    TCCT_CHECK_CFG(L >= 1, "sweep length must be >= 1");
    std::vector<Scalar> x(L * d);
    Rng xr(mix_seed(2, L));
    for (auto& v : x) v = Scalar(xr.gaussian(0, 1));
    auto rc = analytic_canonical(L, d, H);
    auto rs = analytic_csp(L, d, H);
    auto ic = impl_true_canonical(L, d, H);
    auto is = impl_true_csp(L, d, H);
    const auto ec = empirical_count(wc, canon, x, L);
    const auto es = empirical_count(ws, csp, x, L);
    csv << L << ',' << d << ',' << H << ',' << rc.analytic_mults << ',' << rs.analytic_mults
        << ',' << format_double(double(rs.analytic_mults) / double(rc.analytic_mults)) << ','
        << ic.analytic_mults << ',' << is.analytic_mults << ','
        << format_double(double(is.analytic_mults) / double(ic.analytic_mults)) << ',' << ec
        << ',' << es << ',' << format_double(double(es) / double(ec)) << "\n";
    jrows.push_back({{"L", L},
                     {"analytic_canonical", rc.analytic_mults},
                     {"analytic_csp", rs.analytic_mults},
                     {"impl_canonical", ic.analytic_mults},
                     {"impl_csp", is.analytic_mults},
                     {"empirical_canonical", ec},
                     {"empirical_csp", es}});
    a_can.push_back(double(rc.analytic_mults));
    a_csp.push_back(double(rs.analytic_mults));
  }

  RunArtifacts art;
  const std::string base = (fs::path(spec.out_dir) / "complexity_sweep").string();
  write_text(base + ".csv", csv.str());
  art.metric_csvs.push_back(base + ".csv");
  json j{{"d", d},
         {"H", H},
         {"rows", jrows},
         {"receptive", json::parse(receptive_report_stages(spec.enc_blocks - 1).to_json())}};
  write_text(base + ".json", j.dump(2) + "\n");
  art.metric_jsons.push_back(base + ".json");
  art.complexity_json = base + ".json";
  if (spec.emit_svg) {
    write_svg_lines((fs::path(spec.out_dir) / "complexity_sweep.svg").string(),
                    "attention multiplies vs input length", spec.sweep_lengths,
                    {{"canonical", a_can}, {"csp", a_csp}});
  }
  const std::string mpath = (fs::path(spec.out_dir) / "manifest.json").string();
  write_manifest(spec, mpath);
  art.manifest_path = mpath;
  return art;
}

// ---------------------------------------------------------------------------
// built-in checks

namespace {
bool report(bool ok, const std::string& name, bool verbose) {
  if (verbose) std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
  return ok;
}
}  // namespace

bool run_checks(bool verbose) {
  bool all = true;
  {
    bool ok = true;
    for (long d = 16; d <= 128; d += 16)
      for (long H : {1L, 2L, 4L, 8L}) {
        if (d % (2 * H) != 0) continue;
        auto c = analytic_canonical(8, d, H);
        auto s = analytic_csp(8, d, H);
        ok = ok && 2 * s.l2_coefficient == c.l2_coefficient;
        ok = ok && 16 * s.l1_coefficient == 5 * c.l1_coefficient;  // 0.3125
        ok = ok && 16 * s.param_count == 5 * c.param_count;
      }
    all = report(ok, "complexity ratios (0.5 / 0.3125)", verbose) && all;
  }
  {
    const bool ok = analytic_canonical(96, 64, 4).analytic_mults == 6291456ULL &&
                    analytic_csp(96, 64, 4).analytic_mults == 2850816ULL;
    all = report(ok, "closed-form values at (96, 64, 4)", verbose) && all;
  }
  {
    bool ok = true;
    Rng rng(3);
    AttentionSpec canon{AttnKind::Canonical, false, false, 2, 16};
    AttentionSpec csp{AttnKind::Canonical, true, false, 2, 16};
    auto wc = AttentionWeights::init(canon, rng);
    auto wcsp = AttentionWeights::init(csp, rng);
    for (long L : {16L, 32L}) {
      std::vector<Scalar> x(L * 16);
      for (auto& v : x) v = Scalar(rng.gaussian(0, 1));
      ok = ok && empirical_count(wc, canon, x, L) ==
                     impl_true_canonical(L, 16, 2).analytic_mults;
      ok = ok && empirical_count(wcsp, csp, x, L) == impl_true_csp(L, 16, 2).analytic_mults;
    }
    all = report(ok, "empirical multiply counts match closed forms", verbose) && all;
  }
  {
    // ProbSparse covering every query reproduces canonical attention.
    Rng rng(4);
    const long L = 8, dh = 4;
    Graph g;
    std::vector<Scalar> qd(L * dh), kd(L * dh), vd(L * dh);
    for (auto* buf : {&qd, &kd, &vd})
      for (auto& v : *buf) v = Scalar(rng.gaussian(0, 1));
    Tensor q = g.constant({1, L, dh}, qd);
    Tensor k = g.constant({1, L, dh}, kd);
    Tensor v = g.constant({1, L, dh}, vd);
    Tensor canon = scaled_dot_attention(g, q, k, v);
    Tensor sparse = probsparse_attention(g, q, k, v, 100.0, false, 9).output;
    double diff = 0;
    for (size_t i = 0; i < canon.value().size(); ++i)
      diff = std::max(diff, std::abs(double(canon.value()[i]) - double(sparse.value()[i])));
    all = report(diff < 1e-10, "ProbSparse with full coverage == canonical", verbose) && all;
  }
  {
    // Connector causality: an impulse near the end never reaches earlier
    // outputs than its own window.
    bool ok = true;
    Rng rng(5);
    ConnectorConfig cfg{3, ConnectorMode::DilatedCausal};
    for (int trial = 0; trial < 10 && ok; ++trial) {
      const long L = 32, d2 = 4;
      auto stage = DistillStage::init(1, d2, cfg, rng);
      std::vector<Scalar> x(L * d2);
      for (auto& v : x) v = Scalar(rng.gaussian(0, 1));
      Graph g1;
      Tensor y1 = stage.forward(g1, g1.constant({1, L, d2}, x));
      const long cut = 20;
      for (long r = cut; r < L; ++r)
        for (long c = 0; c < d2; ++c) x[r * d2 + c] += Scalar(rng.gaussian(0, 3));
      Graph g2;
      Tensor y2 = stage.forward(g2, g2.constant({1, L, d2}, x));
      // Outputs strictly before the pooled image of `cut` must be intact.
      const long safe = (cut - 2) / 2;
      for (long m = 0; m < safe && ok; ++m)
        for (long c = 0; c < d2; ++c)
          ok = ok && y1.value()[m * d2 + c] == y2.value()[m * d2 + c];
    }
    all = report(ok, "connector stack is causal", verbose) && all;
  }
  {
    // Gradient spot check on a CSP block.
    Rng rng(6);
    AttentionSpec spec{AttnKind::Canonical, true, false, 1, 8};
    auto w = AttentionWeights::init(spec, rng);
    std::vector<Scalar> x(4 * 8);
    for (auto& v : x) v = Scalar(rng.gaussian(0, 1));
    auto fwd = [&]() {
      Graph g;
      Tensor in = g.constant({1, 4, 8}, x);
      Tensor out = csp_attention(g, in, w, spec, 1);
      return double(g.sum_all(g.mul(out, out)).item());
    };
    for (Param* p : w.params()) p->zero_grad();
    {
      Graph g;
      Tensor in = g.constant({1, 4, 8}, x);
      Tensor out = csp_attention(g, in, w, spec, 1);
      g.backward(g.sum_all(g.mul(out, out)));
    }
    auto rep = finite_diff_check(fwd, w.params(), 1e-4, 1e-4);
    all = report(rep.pass, "CSP attention gradient check", verbose) && all;
  }
  return all;
}

}  // namespace tcct
