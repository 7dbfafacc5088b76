#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tcct/complexity.hpp"
#include "tcct/experiment.hpp"
#include "tcct/model.hpp"
#include "tcct/train.hpp"

namespace py = pybind11;
using namespace tcct;

namespace {

py::array_t<double> frame_values(const SeriesFrame& f) {
  py::array_t<double> out({f.length(), f.n_series()});
  std::copy(f.values.begin(), f.values.end(), out.mutable_data());
  return out;
}

py::array_t<double> forward_numpy(Model& model, const WindowBatch& batch,
                                  std::uint64_t seed) {
  Graph g(&model.counter());
  Tensor pred = model.forward(g, batch, seed);
  const auto& v = pred.value();
  py::array_t<double> out({batch.batch, batch.pred_len, batch.n_series});
  double* dst = out.mutable_data();
  for (size_t i = 0; i < v.size(); ++i) dst[i] = double(v[i]);
  return out;
}

}  // namespace

PYBIND11_MODULE(_tcct, m) {
  m.doc() = "TCCT forecasting toolkit: CSPAttention, dilated causal distilling, "
            "passthrough fusion, complexity analysis";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<SeriesFrame>(m, "SeriesFrame")
      .def_property_readonly("length", &SeriesFrame::length)
      .def_property_readonly("n_series", &SeriesFrame::n_series)
      .def_readonly("columns", &SeriesFrame::columns)
      .def_readonly("target_column", &SeriesFrame::target_column)
      .def_property_readonly("values", &frame_values);

  py::class_<NormalizationState>(m, "NormalizationState")
      .def_readonly("mean", &NormalizationState::mean)
      .def_readonly("stddev", &NormalizationState::stddev)
      .def_readonly("warnings", &NormalizationState::warnings);

  py::enum_<SynthKind>(m, "SynthKind")
      .value("sine_mix", SynthKind::SineMix)
      .value("ar_noise", SynthKind::ArNoise);

  py::enum_<SeriesMode>(m, "SeriesMode")
      .value("univariate", SeriesMode::Univariate)
      .value("multivariate", SeriesMode::Multivariate);

  m.def("synth_series", &synth_series, py::arg("kind"), py::arg("length"),
        py::arg("n_series"), py::arg("seed"), py::arg("noise_sigma") = 0.05);
  m.def("load_csv",
        [](const std::string& path, const std::string& target) {
          CsvSchema s;
          s.target_column = target;
          return load_csv(path, s);
        },
        py::arg("path"), py::arg("target") = "OT");
  m.def("write_csv", &write_csv, py::arg("frame"), py::arg("path"));
  m.def("zscore_fit", [](const SeriesFrame& f) { return zscore(f); });
  m.def("split_by_time",
        [](const SeriesFrame& f, double train, double val, double test) {
          auto parts = split_by_time(f, SplitFractions{train, val, test});
          return py::make_tuple(parts[0], parts[1], parts[2]);
        },
        py::arg("frame"), py::arg("train") = 0.6, py::arg("val") = 0.2,
        py::arg("test") = 0.2);

  py::class_<WindowSpec>(m, "WindowSpec")
      .def(py::init<>())
      .def_readwrite("input_len", &WindowSpec::input_len)
      .def_readwrite("pred_len", &WindowSpec::pred_len)
      .def_readwrite("stride", &WindowSpec::stride)
      .def_readwrite("mode", &WindowSpec::mode);

  py::class_<WindowSet>(m, "WindowSet")
      .def(py::init<const SeriesFrame&, WindowSpec>(), py::keep_alive<1, 2>())
      .def_property_readonly("count", &WindowSet::count)
      .def("start_of", &WindowSet::start_of);

  py::class_<WindowBatch>(m, "WindowBatch");
  m.def("make_batch", &make_batch, py::arg("windows"), py::arg("token_len"),
        py::arg("indices"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("input_len", &ModelConfig::input_len)
      .def_readwrite("pred_len", &ModelConfig::pred_len)
      .def_readwrite("token_len", &ModelConfig::token_len)
      .def_readwrite("n_series", &ModelConfig::n_series)
      .def_readwrite("n_marks", &ModelConfig::n_marks)
      .def_readwrite("d_model", &ModelConfig::d_model)
      .def_readwrite("heads", &ModelConfig::heads)
      .def_readwrite("enc_blocks", &ModelConfig::enc_blocks)
      .def_readwrite("dec_layers", &ModelConfig::dec_layers)
      .def_readwrite("csp", &ModelConfig::csp)
      .def_readwrite("dilated", &ModelConfig::dilated)
      .def_readwrite("passthrough", &ModelConfig::passthrough)
      .def_readwrite("full_distilling", &ModelConfig::full_distilling)
      .def_readwrite("seed", &ModelConfig::seed)
      .def("validate", &ModelConfig::validate);

  m.def("apply_variant", [](ModelConfig& cfg, const std::string& name) {
    apply_variant(cfg, variant_from_name(name));
  });
  m.def("variant_names", [] {
    std::vector<std::string> names;
    for (Variant v : all_variants()) names.emplace_back(variant_name(v));
    return names;
  });

  py::class_<Model>(m, "Model")
      .def(py::init<ModelConfig>())
      .def_property_readonly("param_count", &Model::param_count)
      .def("forward", &forward_numpy, py::arg("batch"), py::arg("seed") = 0)
      .def("save", [](Model& mo, const std::string& path) { mo.save(path); })
      .def_static("load", &Model::load);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("lr0", &TrainConfig::lr0)
      .def_readwrite("lr_decay", &TrainConfig::lr_decay)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch", &TrainConfig::batch)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("best_epoch", &TrainResult::best_epoch)
      .def_readonly("best_val_mse", &TrainResult::best_val_mse)
      .def_readonly("stopped_early", &TrainResult::stopped_early)
      .def_readonly("diverged", &TrainResult::diverged);

  m.def("train", &train, py::arg("model"), py::arg("train_windows"),
        py::arg("val_windows"), py::arg("config"));
  m.def("evaluate",
        [](Model& model, const WindowSet& w, long batch, std::uint64_t seed) {
          auto r = evaluate(model, w, batch, seed);
          return py::make_tuple(r.mse, r.mae);
        },
        py::arg("model"), py::arg("windows"), py::arg("batch") = 32, py::arg("seed") = 0);
  m.def("evaluate_last_value_baseline", [](const WindowSet& w) {
    auto r = evaluate_last_value_baseline(w);
    return py::make_tuple(r.mse, r.mae);
  });
  m.def("repeat_stats", [](const std::vector<double>& runs) {
    auto s = repeat_stats(runs);
    return py::make_tuple(s.mean, s.msd,
                          s.cv_percent ? py::object(py::float_(*s.cv_percent))
                                       : py::object(py::none()));
  });
  m.def("lr_at", [](int epoch, const TrainConfig& c) { return lr_at(epoch, c); });

  m.def("analytic_canonical", [](long L, long d, long H) {
    return analytic_canonical(L, d, H).analytic_mults;
  });
  m.def("analytic_csp",
        [](long L, long d, long H) { return analytic_csp(L, d, H).analytic_mults; });
  m.def("memory_canonical", [](long d) {
    return memory_accounting(AttentionSpec{AttnKind::Canonical, false, false, 1, int(d)});
  });
  m.def("memory_csp", [](long d) {
    return memory_accounting(AttentionSpec{AttnKind::Canonical, true, false, 1, int(d)});
  });
  m.def("receptive_spans", [](int stages) {
    auto r = receptive_report_stages(stages);
    return py::make_tuple(r.dilated_spans, r.canonical_spans);
  });
  m.def("run_checks", &run_checks, py::arg("verbose") = false);
}
