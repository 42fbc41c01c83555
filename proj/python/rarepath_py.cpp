#include "rarepath/cli.hpp"
#include "rarepath/learner.hpp"
#include "rarepath/policy.hpp"
#include "rarepath/report.hpp"
#include "rarepath/scenario.hpp"
#include "rarepath/simulator.hpp"

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace rarepath;

namespace {

py::array_t<std::uint8_t> timeline_matrix(const std::vector<Timeline>& rows, int horizon) {
    py::array_t<std::uint8_t> out({rows.size(), static_cast<std::size_t>(horizon)});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t s = 0; s < rows.size(); ++s) {
        for (std::size_t d = 0; d < rows[s].size(); ++d) {
            view(static_cast<py::ssize_t>(s), static_cast<py::ssize_t>(d)) = rows[s][d];
        }
    }
    return out;
}

std::vector<double> as_row(const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
    if (x.ndim() != 1) throw std::invalid_argument("expected a 1-d feature vector");
    return {x.data(), x.data() + x.size()};
}

}  // namespace

PYBIND11_MODULE(_rarepath, m) {
    m.doc() = "Patient-pathway simulator, random-forest alert and threshold sweep";
    m.attr("__version__") = cli::kToolVersion;

    auto validation_error =
        py::register_exception<ScenarioValidationError>(m, "ScenarioValidationError",
                                                        PyExc_ValueError);
    (void)validation_error;
    py::register_exception<ScenarioParseError>(m, "ScenarioParseError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    // ------------------------------------------------------------ scenario
    py::enum_<SymptomKind>(m, "SymptomKind")
        .value("Latent", SymptomKind::Latent)
        .value("PermanentVisible", SymptomKind::PermanentVisible)
        .value("Recurrent", SymptomKind::Recurrent);

    py::class_<SymptomSpec>(m, "SymptomSpec")
        .def(py::init<>())
        .def(py::init([](int id, std::string name, SymptomKind kind) {
                 return SymptomSpec{id, std::move(name), kind};
             }),
             py::arg("id"), py::arg("name"), py::arg("kind"))
        .def_readwrite("id", &SymptomSpec::id)
        .def_readwrite("name", &SymptomSpec::name)
        .def_readwrite("kind", &SymptomSpec::kind);

    py::class_<SyndromeSpec>(m, "SyndromeSpec")
        .def(py::init<>())
        .def(py::init([](int id, std::string name, bool is_rare, double prevalence) {
                 return SyndromeSpec{id, std::move(name), is_rare, prevalence};
             }),
             py::arg("id"), py::arg("name"), py::arg("is_rare"), py::arg("prevalence"))
        .def_readwrite("id", &SyndromeSpec::id)
        .def_readwrite("name", &SyndromeSpec::name)
        .def_readwrite("is_rare", &SyndromeSpec::is_rare)
        .def_readwrite("prevalence", &SyndromeSpec::prevalence);

    py::class_<SymptomLink>(m, "SymptomLink")
        .def(py::init<>())
        .def_readwrite("syndrome_id", &SymptomLink::syndrome_id)
        .def_readwrite("symptom_id", &SymptomLink::symptom_id)
        .def_readwrite("occur_prob", &SymptomLink::occur_prob)
        .def_readwrite("onset_mean_days", &SymptomLink::onset_mean_days)
        .def_readwrite("onset_sd_days", &SymptomLink::onset_sd_days)
        .def_readwrite("episode_on_rate", &SymptomLink::episode_on_rate)
        .def_readwrite("episode_off_rate", &SymptomLink::episode_off_rate);

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("syndromes", &ScenarioConfig::syndromes)
        .def_readwrite("symptoms", &ScenarioConfig::symptoms)
        .def_readwrite("links", &ScenarioConfig::links)
        .def_readwrite("horizon_days", &ScenarioConfig::horizon_days)
        .def("to_json", &scenario_to_json)
        .def_static("from_json", &scenario_from_json, py::arg("text"))
        .def(py::self == py::self);

    m.def("paper_scenario", &paper_scenario, py::arg("seed"));
    m.def("validate_scenario", &validate_scenario, py::arg("config"));
    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def("save_scenario", &save_scenario, py::arg("config"), py::arg("path"));

    // ----------------------------------------------------------- simulator
    py::enum_<StreamTag>(m, "StreamTag")
        .value("Scenario", StreamTag::Scenario)
        .value("Cohort", StreamTag::Cohort)
        .value("Training", StreamTag::Training)
        .value("Evaluation", StreamTag::Evaluation)
        .value("Tree", StreamTag::Tree)
        .value("Synthetic", StreamTag::Synthetic);

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("key"))
        .def_static("derive", &Rng::derive, py::arg("seed"), py::arg("index"), py::arg("tag"))
        .def("next_u64", &Rng::next_u64)
        .def("uniform", py::overload_cast<>(&Rng::uniform))
        .def("normal", &Rng::normal)
        .def("exponential", &Rng::exponential, py::arg("rate"));

    m.def("sample_onset_day", &sample_onset_day, py::arg("mu"), py::arg("sigma"), py::arg("rng"));
    m.def("sample_truncated_normal", &sample_truncated_normal, py::arg("mu"), py::arg("sigma"),
          py::arg("rng"));
    m.def("sample_episode_days", &sample_episode_days, py::arg("rate"), py::arg("rng"));
    m.def(
        "sample_recurrent_timeline",
        [](int onset, double on_rate, double off_rate, int horizon, Rng& rng) {
            const auto t = sample_recurrent_timeline(onset, on_rate, off_rate, horizon, rng);
            return py::array_t<std::uint8_t>(static_cast<py::ssize_t>(t.size()), t.data());
        },
        py::arg("onset_day"), py::arg("on_rate"), py::arg("off_rate"), py::arg("horizon"),
        py::arg("rng"));

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("syndrome_id", &Trajectory::syndrome_id)
        .def_readonly("is_rare", &Trajectory::is_rare)
        .def_readonly("horizon_days", &Trajectory::horizon_days)
        .def_readonly("first_observed_day", &Trajectory::first_observed_day)
        .def_property_readonly("presence",
                               [](const Trajectory& t) {
                                   return timeline_matrix(t.presence, t.horizon_days);
                               })
        .def_property_readonly("observed",
                               [](const Trajectory& t) {
                                   return timeline_matrix(t.observed, t.horizon_days);
                               })
        .def(py::self == py::self);

    py::class_<ObservationHistory>(m, "ObservationHistory")
        .def_readonly("days_observed", &ObservationHistory::days_observed)
        .def_readonly("t", &ObservationHistory::t)
        .def_readonly("first_observed_day", &ObservationHistory::first_observed_day);

    m.def("simulate_trajectory", &simulate_trajectory, py::arg("config"), py::arg("syndrome_id"),
          py::arg("rng"));
    m.def("history_at", &history_at, py::arg("trajectory"), py::arg("t"));
    m.def(
        "simulate_cohort",
        [](const ScenarioConfig& config, const std::vector<int>& counts, std::uint64_t seed,
           int threads) {
            py::gil_scoped_release release;
            return simulate_cohort(config, counts, seed, threads);
        },
        py::arg("config"), py::arg("counts"), py::arg("master_seed"), py::arg("threads") = 1);
    m.def("write_cohort_csv", &write_cohort_csv, py::arg("cohort"), py::arg("path"));
    m.def("read_cohort_csv", &read_cohort_csv, py::arg("path"), py::arg("config"));

    // ------------------------------------------------------------- learner
    py::class_<FeatureVector>(m, "FeatureVector")
        .def_readonly("ever_observed", &FeatureVector::ever_observed)
        .def_readonly("days_since_first", &FeatureVector::days_since_first)
        .def_readonly("elapsed_days", &FeatureVector::elapsed_days)
        .def_readonly("active_count", &FeatureVector::active_count)
        .def("to_row", &FeatureVector::to_row);

    m.def("extract_features", &extract_features, py::arg("history"));

    py::class_<TrainingSet>(m, "TrainingSet")
        .def(py::init([](py::array_t<double, py::array::c_style | py::array::forcecast> x,
                         py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> y) {
                 if (x.ndim() != 2 || y.ndim() != 1 || x.shape(0) != y.shape(0)) {
                     throw std::invalid_argument("expected X of shape (n, f) and y of shape (n,)");
                 }
                 TrainingSet set;
                 set.feature_count = static_cast<std::size_t>(x.shape(1));
                 set.features.assign(x.data(), x.data() + x.size());
                 set.labels.assign(y.data(), y.data() + y.size());
                 for (auto& label : set.labels) label = label ? 1 : 0;
                 return set;
             }),
             py::arg("X"), py::arg("y"))
        .def_readonly("feature_count", &TrainingSet::feature_count)
        .def_property_readonly("rows", &TrainingSet::rows)
        .def_property_readonly("positives", &TrainingSet::positives)
        .def_property_readonly("X",
                               [](const TrainingSet& s) {
                                   return py::array_t<double>(
                                       {s.rows(), s.feature_count}, s.features.data());
                               })
        .def_property_readonly("y", [](const TrainingSet& s) {
            return py::array_t<std::uint8_t>(static_cast<py::ssize_t>(s.rows()), s.labels.data());
        });

    m.def("build_training_set", &build_training_set, py::arg("cohort"),
          py::arg("snapshot_stride_days"));
    m.def("snapshot_days", &snapshot_days, py::arg("trajectory"), py::arg("stride"));

    py::class_<ForestParams>(m, "ForestParams")
        .def(py::init<>())
        .def(py::init([](int trees, int depth, int min_leaf, int per_split) {
                 return ForestParams{trees, depth, min_leaf, per_split};
             }),
             py::arg("tree_count") = 100, py::arg("max_depth") = 12,
             py::arg("min_leaf_size") = 5, py::arg("features_per_split") = 0)
        .def_readwrite("tree_count", &ForestParams::tree_count)
        .def_readwrite("max_depth", &ForestParams::max_depth)
        .def_readwrite("min_leaf_size", &ForestParams::min_leaf_size)
        .def_readwrite("features_per_split", &ForestParams::features_per_split);

    py::class_<Forest>(m, "Forest")
        .def_readonly("params", &Forest::params)
        .def_readonly("seed", &Forest::seed)
        .def_readonly("feature_count", &Forest::feature_count)
        .def_property_readonly("tree_count", [](const Forest& f) { return f.trees.size(); })
        .def("to_text", &forest_to_text)
        .def_static("from_text", &forest_from_text, py::arg("text"))
        .def(py::self == py::self);

    m.def(
        "train_forest",
        [](const TrainingSet& data, const ForestParams& params, std::uint64_t seed, int threads) {
            py::gil_scoped_release release;
            return train_forest(data, params, seed, threads);
        },
        py::arg("data"), py::arg("params") = ForestParams{}, py::arg("seed") = 0,
        py::arg("threads") = 1);
    m.def(
        "predict_proba",
        [](const Forest& forest, py::array_t<double, py::array::c_style | py::array::forcecast> x) {
            const auto row = as_row(x);
            return predict_proba(forest, std::span<const double>(row));
        },
        py::arg("forest"), py::arg("features"));
    m.def("predict_proba_features",
          py::overload_cast<const Forest&, const FeatureVector&>(&predict_proba),
          py::arg("forest"), py::arg("features"));
    m.def("out_of_bag_accuracy", &out_of_bag_accuracy, py::arg("forest"), py::arg("data"));
    m.def("save_forest", &save_forest, py::arg("forest"), py::arg("path"));
    m.def("load_forest", &load_forest, py::arg("path"));

    // -------------------------------------------------------------- policy
    py::class_<CostParams>(m, "CostParams")
        .def(py::init<>())
        .def(py::init([](double per_day, double spe, double non_spe, double mean_days,
                         double mean_phys) {
                 return CostParams{per_day, spe, non_spe, mean_days, mean_phys};
             }),
             py::arg("cost_wandering_per_day"), py::arg("cost_specialist"),
             py::arg("cost_non_specialist"), py::arg("mean_wandering_days"),
             py::arg("mean_physicians_consulted"))
        .def_readwrite("cost_wandering_per_day", &CostParams::cost_wandering_per_day)
        .def_readwrite("cost_specialist", &CostParams::cost_specialist)
        .def_readwrite("cost_non_specialist", &CostParams::cost_non_specialist)
        .def_readwrite("mean_wandering_days", &CostParams::mean_wandering_days)
        .def_readwrite("mean_physicians_consulted", &CostParams::mean_physicians_consulted);

    py::class_<PathwayOutcome>(m, "PathwayOutcome")
        .def(py::init<>())
        .def_readwrite("has_rare_disease", &PathwayOutcome::has_rare_disease)
        .def_readwrite("sent_to_center", &PathwayOutcome::sent_to_center)
        .def_readwrite("wandering_days", &PathwayOutcome::wandering_days)
        .def_readwrite("decision_day", &PathwayOutcome::decision_day)
        .def_readwrite("first_observed_day", &PathwayOutcome::first_observed_day);

    py::class_<CostCurve>(m, "CostCurve")
        .def_readonly("taus", &CostCurve::taus)
        .def_readonly("mean_costs", &CostCurve::mean_costs)
        .def_readonly("std_errs", &CostCurve::std_errs)
        .def_readonly("normalized_costs", &CostCurve::normalized_costs)
        .def("to_csv", &cost_curve_csv);

    m.def("run_alert_policy", &run_alert_policy, py::arg("trajectory"), py::arg("forest"),
          py::arg("tau"));
    m.def("prediction_series", &prediction_series, py::arg("trajectory"), py::arg("forest"));
    m.def("pathway_cost", &pathway_cost, py::arg("outcome"), py::arg("params"));
    m.def(
        "estimate_expected_cost",
        [](const ScenarioConfig& config, const Forest& forest, double tau, const CostParams& params,
           int n_eval, std::uint64_t seed, int threads) {
            py::gil_scoped_release release;
            const auto e = estimate_expected_cost(config, forest, tau, params, n_eval, seed, threads);
            return std::make_pair(e.mean, e.std_err);
        },
        py::arg("config"), py::arg("forest"), py::arg("tau"), py::arg("params"),
        py::arg("n_eval"), py::arg("seed"), py::arg("threads") = 1);
    m.def(
        "sweep_thresholds",
        [](const ScenarioConfig& config, const Forest& forest, const CostParams& params,
           const std::vector<double>& grid, int n_eval, std::uint64_t seed, int threads) {
            py::gil_scoped_release release;
            return sweep_thresholds(config, forest, params, grid, n_eval, seed, threads);
        },
        py::arg("config"), py::arg("forest"), py::arg("params"), py::arg("grid"),
        py::arg("n_eval"), py::arg("seed"), py::arg("threads") = 1);
    m.def("select_optimal_threshold", &select_optimal_threshold, py::arg("curve"));
    m.def("uniform_grid", &uniform_grid, py::arg("points"));

    // ----------------------------------------------------------------- cli
    m.def(
        "cli_main",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"rarepath"};
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command-line interface; returns (exit_code, stdout, stderr).");
}
