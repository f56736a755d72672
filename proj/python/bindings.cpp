#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "owr/dataio.hpp"
#include "owr/errors.hpp"
#include "owr/eval.hpp"
#include "owr/matrix.hpp"
#include "owr/metric.hpp"
#include "owr/nbc.hpp"
#include "owr/ncm.hpp"
#include "owr/nno.hpp"
#include "owr/runner.hpp"
#include "owr/stream.hpp"

namespace py = pybind11;
using namespace owr;

namespace {

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty())
        throw InvalidInputError("matrix: no rows");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols)
            throw InvalidInputError("matrix: ragged rows");
        for (std::size_t j = 0; j < m.cols; ++j)
            m(i, j) = rows[i][j];
    }
    return m;
}

std::vector<std::vector<double>> matrix_to_rows(const Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            rows[i][j] = m(i, j);
    return rows;
}

py::tuple prediction_tuple(const OpenPrediction& p) {
    return py::make_tuple(p.label, p.confidence);
}

} // namespace

PYBIND11_MODULE(owr, m) {
    m.doc() = "Streaming open-world classification: oNCM, oNNO and oNBC learners "
              "with incremental low-rank metric learning and self-tuned novelty "
              "rejection, plus the scenario harness.";

    m.attr("UNKNOWN") = kUnknownLabel;

    py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);
    py::register_exception<EmptyModelError>(m, "EmptyModelError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<LowRankMetric>(m, "LowRankMetric")
        .def(py::init<std::size_t, std::size_t>(), py::arg("rank"), py::arg("dim"))
        .def_property_readonly("rank", &LowRankMetric::rank)
        .def_property_readonly("dim", &LowRankMetric::dim)
        .def("distance", &LowRankMetric::distance, py::arg("x"), py::arg("mu"))
        .def("project", &LowRankMetric::project, py::arg("v"))
        .def("sgd_step",
             [](LowRankMetric& self, const std::vector<std::vector<double>>& grad, double gamma) {
                 return self.sgd_step(matrix_from_rows(grad), gamma);
             },
             py::arg("gradient"), py::arg("gamma"))
        .def("w", [](const LowRankMetric& self) { return matrix_to_rows(self.w()); });

    py::class_<NcmClassifier>(m, "NcmClassifier")
        .def(py::init<std::size_t, std::size_t, double>(), py::arg("dim"), py::arg("rank"),
             py::arg("gamma"))
        .def_property_readonly("num_classes", &NcmClassifier::num_classes)
        .def_property_readonly("gamma", &NcmClassifier::gamma)
        .def("posteriors", &NcmClassifier::class_posteriors, py::arg("x"))
        .def("predict", &NcmClassifier::predict, py::arg("x"))
        .def("learn", [](NcmClassifier& self, const FeatureVector& x, ClassId y) {
                 return self.learn(x, y);
             },
             py::arg("x"), py::arg("y"))
        .def("gradient",
             [](const NcmClassifier& self, const FeatureVector& x, ClassId y) {
                 return matrix_to_rows(self.gradient(x, y));
             },
             py::arg("x"), py::arg("y"))
        .def("w", [](const NcmClassifier& self) { return matrix_to_rows(self.metric().w()); })
        .def("save", &NcmClassifier::save, py::arg("path"))
        .def_static("load", &NcmClassifier::load, py::arg("path"));

    py::class_<OnnoClassifier>(m, "OnnoClassifier")
        .def(py::init<std::size_t, std::size_t, double>(), py::arg("dim"), py::arg("rank"),
             py::arg("gamma"))
        .def_property_readonly("theta", [](const OnnoClassifier& c) { return c.novelty().theta; })
        .def_property_readonly("tau", [](const OnnoClassifier& c) { return c.novelty().tau; })
        .def_property_readonly("t_star",
                               [](const OnnoClassifier& c) { return c.novelty().t_star; })
        .def_property_readonly("num_classes",
                               [](const OnnoClassifier& c) { return c.ncm().num_classes(); })
        .def("rbf_confidence", &OnnoClassifier::rbf_confidence, py::arg("x"), py::arg("y"))
        .def("baseline_nno_score", &OnnoClassifier::baseline_nno_score, py::arg("x"),
             py::arg("y"), py::arg("tau_fixed"))
        .def("predict_open",
             [](const OnnoClassifier& c, const FeatureVector& x) {
                 return prediction_tuple(c.predict_open(x));
             },
             py::arg("x"))
        .def("learn", &OnnoClassifier::learn_open, py::arg("x"), py::arg("y"))
        .def("set_frozen", &OnnoClassifier::set_frozen, py::arg("frozen"))
        .def("save", &OnnoClassifier::save, py::arg("path"))
        .def_static("load", &OnnoClassifier::load, py::arg("path"));
    m.def("nno_normalizer", &OnnoClassifier::nno_normalizer, py::arg("rank"),
          py::arg("tau_fixed"));

    py::class_<NbcClassifier>(m, "NbcClassifier")
        .def(py::init<std::size_t, std::size_t, double>(), py::arg("dim"), py::arg("rank"),
             py::arg("gamma"))
        .def_property_readonly("num_balls",
                               [](const NbcClassifier& c) { return c.balls().size(); })
        .def_property_readonly("num_classes", &NbcClassifier::num_classes)
        .def_property_readonly("tau", [](const NbcClassifier& c) { return c.novelty().tau; })
        .def_property_readonly("t_star",
                               [](const NbcClassifier& c) { return c.novelty().t_star; })
        .def("hoeffding_threshold", &NbcClassifier::hoeffding_threshold)
        .def("local_predict", &NbcClassifier::local_predict, py::arg("x"))
        .def("local_confidence", &NbcClassifier::local_confidence, py::arg("x"), py::arg("y"))
        .def("posteriors", &NbcClassifier::posteriors, py::arg("x"))
        .def("predict_open",
             [](const NbcClassifier& c, const FeatureVector& x) {
                 return prediction_tuple(c.predict_open(x));
             },
             py::arg("x"))
        .def("learn", &NbcClassifier::learn_open, py::arg("x"), py::arg("y"))
        .def("set_frozen", &NbcClassifier::set_frozen, py::arg("frozen"))
        .def("save", &NbcClassifier::save, py::arg("path"))
        .def_static("load", &NbcClassifier::load, py::arg("path"));

    py::class_<OnlineAccuracy>(m, "OnlineAccuracy")
        .def(py::init<>())
        .def("record", &OnlineAccuracy::record, py::arg("hit"))
        .def_property_readonly("value", &OnlineAccuracy::value)
        .def_property_readonly("count", &OnlineAccuracy::count);

    m.def("harmonic_mean", &harmonic_mean, py::arg("a"), py::arg("b"));
    m.def("score_open_world",
          [](const std::vector<std::tuple<ClassId, ClassId, bool>>& rows) {
              std::vector<PredictionOutcome> outcomes;
              outcomes.reserve(rows.size());
              for (const auto& [pred, truth, known] : rows)
                  outcomes.push_back({pred, truth, known});
              OpenWorldScore s = score_open_world(outcomes);
              return py::make_tuple(s.closed_acc, s.open_acc, s.harmonic);
          },
          py::arg("outcomes"),
          "outcomes: list of (predicted, truth, known) tuples; predicted == UNKNOWN "
          "marks a rejection. Returns (closed_acc, open_acc, harmonic).");

    py::class_<FeatureSet>(m, "FeatureSet")
        .def_readonly("n", &FeatureSet::n)
        .def_readonly("d", &FeatureSet::d)
        .def("row", &FeatureSet::row_double, py::arg("i"))
        .def("label", [](const FeatureSet& fs, std::size_t i) { return fs.labels.at(i); },
             py::arg("i"))
        .def("class_ids", &FeatureSet::class_ids);

    m.def("synth_preset", &synth_preset, py::arg("name"), py::arg("seed"));
    m.def("load_features", &load_features, py::arg("path"));
    m.def("save_features", &save_features, py::arg("fs"), py::arg("path"));

    py::class_<RunManifest>(m, "RunManifest")
        .def(py::init<>())
        .def_readwrite("learner", &RunManifest::learner)
        .def_readwrite("data_path", &RunManifest::data_path)
        .def_readwrite("synth", &RunManifest::synth)
        .def_readwrite("out_dir", &RunManifest::out_dir)
        .def_readwrite("gamma", &RunManifest::gamma)
        .def_readwrite("rank_m", &RunManifest::rank_m)
        .def_readwrite("freeze_after_segment", &RunManifest::freeze_after_segment)
        .def_readwrite("whiten", &RunManifest::whiten)
        .def_property(
            "scenario",
            [](const RunManifest& m_) { return to_string(m_.config.scenario); },
            [](RunManifest& m_, const std::string& s) {
                Scenario sc = scenario_from_string(s);
                m_.config = m_.synth.empty() ? default_config(sc)
                                             : preset_scenario_config(m_.synth, sc);
                m_.config.scenario = sc;
            })
        .def_property(
            "seed", [](const RunManifest& m_) { return m_.config.seed; },
            [](RunManifest& m_, std::uint64_t s) { m_.config.seed = s; });

    m.def("run", &cmd_run, py::arg("manifest"),
          "Run a manifest end to end; writes report files and returns the exit code.");
    m.def("validate", &cmd_validate, py::arg("manifest"));
}
