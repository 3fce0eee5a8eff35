// python surface: dataset rendering, training, rollouts, recognition and the
// analysis helpers, with frames passed as (T, H, W) float arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "pmstrnn/analysis.hpp"
#include "pmstrnn/checkpoint.hpp"
#include "pmstrnn/config.hpp"
#include "pmstrnn/dataset.hpp"
#include "pmstrnn/errors.hpp"
#include "pmstrnn/gradcheck.hpp"
#include "pmstrnn/network.hpp"
#include "pmstrnn/regression.hpp"
#include "pmstrnn/training.hpp"

namespace py = pybind11;
using namespace pmstrnn;

namespace {

std::vector<MapGrid> frames_from_array(const py::array_t<double>& arr) {
  if (arr.ndim() != 3) throw ConfigError("frames must be a (T, H, W) array");
  auto buf = arr.unchecked<3>();
  std::vector<MapGrid> out;
  out.reserve(static_cast<size_t>(buf.shape(0)));
  for (py::ssize_t t = 0; t < buf.shape(0); ++t) {
    MapGrid f(static_cast<int>(buf.shape(1)), static_cast<int>(buf.shape(2)));
    for (py::ssize_t r = 0; r < buf.shape(1); ++r)
      for (py::ssize_t c = 0; c < buf.shape(2); ++c)
        f.at(static_cast<int>(r), static_cast<int>(c)) = buf(t, r, c);
    out.push_back(std::move(f));
  }
  return out;
}

py::array_t<double> frames_to_array(const std::vector<MapGrid>& frames) {
  if (frames.empty()) return py::array_t<double>(std::vector<py::ssize_t>{0, 0, 0});
  py::array_t<double> arr({static_cast<py::ssize_t>(frames.size()),
                           static_cast<py::ssize_t>(frames[0].h),
                           static_cast<py::ssize_t>(frames[0].w)});
  auto buf = arr.mutable_unchecked<3>();
  for (size_t t = 0; t < frames.size(); ++t)
    for (int r = 0; r < frames[t].h; ++r)
      for (int c = 0; c < frames[t].w; ++c)
        buf(static_cast<py::ssize_t>(t), r, c) = frames[t].at(r, c);
  return arr;
}

std::vector<std::vector<double>> rows_from_array(const py::array_t<double>& arr) {
  if (arr.ndim() != 2) throw ConfigError("expected a 2-d array");
  auto buf = arr.unchecked<2>();
  std::vector<std::vector<double>> rows(static_cast<size_t>(buf.shape(0)));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
    rows[i].resize(static_cast<size_t>(buf.shape(1)));
    for (py::ssize_t j = 0; j < buf.shape(1); ++j) rows[i][j] = buf(i, j);
  }
  return rows;
}

py::array_t<double> rows_to_array(const std::vector<std::vector<double>>& rows) {
  py::ssize_t n = static_cast<py::ssize_t>(rows.size());
  py::ssize_t d = n > 0 ? static_cast<py::ssize_t>(rows[0].size()) : 0;
  py::array_t<double> arr({n, d});
  auto buf = arr.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i)
    for (py::ssize_t j = 0; j < d; ++j) buf(i, j) = rows[i][j];
  return arr;
}

Mode parse_mode(const std::string& name) {
  if (name == "open") return Mode::open;
  if (name == "closed") return Mode::closed;
  throw ConfigError("mode must be open or closed");
}

const SequencePlan& plan_for(const RunConfig& cfg, const std::string& label) {
  for (const auto& sp : cfg.dataset.sequences)
    if (sp.label == label) return sp;
  throw ConfigError("no sequence '" + label + "' in the config dataset");
}

struct PyModel {
  TrainedModel model;

  std::vector<std::string> labels() const { return model.labels; }

  int intention_index(const std::string& label) const {
    for (size_t i = 0; i < model.labels.size(); ++i)
      if (model.labels[i] == label) return static_cast<int>(i);
    throw ConfigError("model stores no intention for '" + label + "'");
  }

  py::array_t<double> generate(const py::array_t<double>& frames,
                               const std::string& label, const std::string& mode,
                               int steps) const {
    auto fv = frames_from_array(frames);
    int n = steps > 0 ? steps : static_cast<int>(fv.size()) - 1;
    Rollout r = rollout(model.arch, model.params,
                        model.intentions[intention_index(label)], parse_mode(mode),
                        fv, n, false);
    return frames_to_array(r.outputs);
  }

  py::dict recognize(const py::array_t<double>& frames, const std::string& label,
                     const RegressionConfig& cfg) const {
    IntentionState start = label.empty()
                               ? zero_intention(model.arch)
                               : model.intentions[intention_index(label)];
    RecognitionTrace t = recognize_stream(model.arch, model.params, start,
                                          frames_from_array(frames), cfg);
    py::dict out;
    out["prediction_error"] = t.prediction_error;
    out["window_loss"] = t.window_loss;
    out["predictions"] = frames_to_array(t.predictions);
    out["resets"] = t.resets;
    return out;
  }

  py::dict entrain(const py::array_t<double>& frames, const std::string& label) const {
    IntentionState start = label.empty()
                               ? zero_intention(model.arch)
                               : model.intentions[intention_index(label)];
    RecognitionTrace t = entrainment_stream(model.arch, model.params, start,
                                            frames_from_array(frames));
    py::dict out;
    out["prediction_error"] = t.prediction_error;
    out["predictions"] = frames_to_array(t.predictions);
    return out;
  }

  double closed_mse(const py::array_t<double>& frames, const std::string& label) const {
    return closed_loop_mse(model.arch, model.params,
                           model.intentions[intention_index(label)],
                           frames_from_array(frames));
  }

  py::list log() const {
    py::list rows;
    for (const EpochLog& e : model.log) {
      py::dict d;
      d["epoch"] = e.epoch;
      d["open_mse"] = e.open_mse;
      d["closed_mse"] = e.closed_mse;
      d["wall_seconds"] = e.wall_seconds;
      rows.append(d);
    }
    return rows;
  }
};

}  // namespace

PYBIND11_MODULE(_pmstrnn, m) {
  m.doc() = "hierarchical predictive video network";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<RegressionConfig>(m, "RegressionConfig")
      .def(py::init<>())
      .def_readwrite("window", &RegressionConfig::window)
      .def_readwrite("rate", &RegressionConfig::rate)
      .def_readwrite("iters_per_step", &RegressionConfig::iters_per_step)
      .def_readwrite("early_stop", &RegressionConfig::early_stop)
      .def_readwrite("use_history_inputs", &RegressionConfig::use_history_inputs);

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("labels", &PyModel::labels)
      .def_property_readonly("epochs_run",
                             [](const PyModel& p) { return p.model.epochs_run; })
      .def_property_readonly("reached_stop",
                             [](const PyModel& p) { return p.model.reached_stop; })
      .def("generate", &PyModel::generate, py::arg("frames"), py::arg("label"),
           py::arg("mode") = "closed", py::arg("steps") = 0)
      .def("recognize", &PyModel::recognize, py::arg("frames"), py::arg("label") = "",
           py::arg("config") = RegressionConfig{})
      .def("entrain", &PyModel::entrain, py::arg("frames"), py::arg("label") = "")
      .def("closed_mse", &PyModel::closed_mse, py::arg("frames"), py::arg("label"))
      .def("log", &PyModel::log)
      .def("save", [](const PyModel& p, const std::string& path) {
        save_checkpoint(path, p.model);
      })
      .def_static("load", [](const std::string& path) {
        PyModel p;
        p.model = load_checkpoint(path);
        return p;
      });

  m.def("default_config", &default_config_json,
        "the full default run configuration as json text");

  m.def(
      "render_sequence",
      [](const std::string& config_json, const std::string& label) {
        RunConfig cfg = parse_config(config_json);
        const SequencePlan& sp = plan_for(cfg, label);
        SubjectParams subj = subject_params(cfg.training.seed, sp.subject);
        return frames_to_array(
            generate(sp.plan, cfg.dataset.steps_per_cycle, subj, sp.label).frames);
       },
      py::arg("config_json"), py::arg("label"),
      "render one configured sequence to a (T, 36, 36) array");

  m.def(
      "train",
      [](const std::string& config_json) {
        RunConfig cfg = parse_config(config_json);
        if (cfg.dataset.sequences.empty())
          throw ConfigError("empty dataset: the config lists no sequences");
        std::vector<VideoSequence> data;
        for (const auto& sp : cfg.dataset.sequences) {
          SubjectParams subj = subject_params(cfg.training.seed, sp.subject);
          data.push_back(
              {sp.label,
               generate(sp.plan, cfg.dataset.steps_per_cycle, subj, sp.label).frames});
        }
        PyModel p;
        p.model = pmstrnn::train(cfg.arch, data, cfg.training);
        return p;
      },
      py::arg("config_json"), "train a model as described by the config");

  m.def(
      "mse",
      [](const py::array_t<double>& a, const py::array_t<double>& b) {
        return mse_frames(frames_from_array(a), frames_from_array(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "pca",
      [](const py::array_t<double>& rows, int k) {
        ActivationTrace t;
        t.rows = rows_from_array(rows);
        PcaResult p = pca(t, k);
        py::dict out;
        out["mean"] = p.mean;
        out["components"] = rows_to_array(p.components);
        out["explained"] = p.explained;
        out["projected"] = rows_to_array(p.projected);
        out["degenerate"] = p.degenerate;
        return out;
      },
      py::arg("rows"), py::arg("k"));

  m.def(
      "cyclicity",
      [](const py::array_t<double>& rows, int cycle_len) {
        return cyclicity(rows_from_array(rows), cycle_len);
      },
      py::arg("rows"), py::arg("cycle_len"));

  m.def("convergence", [](const py::array_t<double>& rows) {
    return convergence(rows_from_array(rows));
  });

  m.def(
      "trajectory_distance",
      [](const py::array_t<double>& a, const py::array_t<double>& b) {
        return trajectory_distance(rows_from_array(a), rows_from_array(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "gradcheck",
      [](int trials, std::uint64_t seed) {
        GradCheckReport rep = gradcheck(nullptr, seed, trials);
        py::dict out;
        out["max_rel_err"] = rep.max_rel_err;
        out["worst"] = rep.worst;
        out["trials"] = rep.trials;
        return out;
      },
      py::arg("trials") = 3, py::arg("seed") = 1,
      "finite-difference check over random miniature networks");
}
