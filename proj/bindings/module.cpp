#include "selekt/analysis.hpp"
#include "selekt/dataset.hpp"
#include "selekt/rng.hpp"
#include "selekt/sae.hpp"
#include "selekt/scoring.hpp"
#include "selekt/selector.hpp"
#include "selekt/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace selekt;

PYBIND11_MODULE(_selekt_core, m) {
    m.doc() = "dynamic data selection engine core";

    // dataset
    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("features", &Dataset::features)
        .def_readwrite("labels", &Dataset::labels)
        .def_readwrite("class_count", &Dataset::class_count)
        .def_property_readonly("n", &Dataset::n)
        .def_property_readonly("dim", &Dataset::dim);

    py::class_<SyntheticSpec>(m, "SyntheticSpec")
        .def(py::init<>())
        .def_readwrite("class_count", &SyntheticSpec::class_count)
        .def_readwrite("samples_per_class", &SyntheticSpec::samples_per_class)
        .def_readwrite("feature_dim", &SyntheticSpec::feature_dim)
        .def_readwrite("common_factor_count", &SyntheticSpec::common_factor_count)
        .def_readwrite("rare_factor_count", &SyntheticSpec::rare_factor_count)
        .def_readwrite("common_activation_prob", &SyntheticSpec::common_activation_prob)
        .def_readwrite("rare_activation_prob", &SyntheticSpec::rare_activation_prob)
        .def_readwrite("noise_sigma", &SyntheticSpec::noise_sigma)
        .def_readwrite("seed", &SyntheticSpec::seed);

    py::class_<SyntheticData>(m, "SyntheticData")
        .def_readonly("data", &SyntheticData::data)
        .def_readonly("factor_fired", &SyntheticData::factor_fired)
        .def_readonly("factor_directions", &SyntheticData::factor_directions);

    m.def("generate_synthetic", &generate_synthetic, py::arg("spec"));
    m.def("load_dataset", &load_dataset, py::arg("path"));
    m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
    m.def("l2_normalize_rows", &l2_normalize_rows, py::arg("matrix"));
    m.def("inject_label_noise", &inject_label_noise, py::arg("dataset"),
          py::arg("rate"), py::arg("seed"));
    m.def("derive_seed", &derive_seed, py::arg("base"), py::arg("label"));

    // sae
    py::class_<SaeModel>(m, "SaeModel")
        .def(py::init<>())
        .def_readwrite("encoder_weights", &SaeModel::encoder_weights)
        .def_readwrite("encoder_bias", &SaeModel::encoder_bias)
        .def_readwrite("decoder_bias", &SaeModel::decoder_bias)
        .def_readwrite("sparsity_budget", &SaeModel::sparsity_budget)
        .def_readwrite("clamp_negative_codes", &SaeModel::clamp_negative_codes)
        .def_property_readonly("latent_dim", &SaeModel::latent_dim)
        .def_property_readonly("input_dim", &SaeModel::input_dim);

    py::class_<SaeTrainConfig>(m, "SaeTrainConfig")
        .def(py::init<>())
        .def_readwrite("latent_dim", &SaeTrainConfig::latent_dim)
        .def_readwrite("sparsity_budget", &SaeTrainConfig::sparsity_budget)
        .def_readwrite("epochs", &SaeTrainConfig::epochs)
        .def_readwrite("batch_size", &SaeTrainConfig::batch_size)
        .def_readwrite("learning_rate", &SaeTrainConfig::learning_rate)
        .def_readwrite("revival_weight", &SaeTrainConfig::revival_weight)
        .def_readwrite("dead_check_interval", &SaeTrainConfig::dead_check_interval)
        .def_readwrite("clamp_negative_codes", &SaeTrainConfig::clamp_negative_codes)
        .def_readwrite("seed", &SaeTrainConfig::seed);

    py::class_<SaeTrainResult>(m, "SaeTrainResult")
        .def_readonly("model", &SaeTrainResult::model)
        .def_readonly("recon_loss", &SaeTrainResult::recon_loss)
        .def_readonly("dead_fraction", &SaeTrainResult::dead_fraction);

    m.def("topk_mask", &topk_mask, py::arg("z"), py::arg("k"));
    m.def("encode", &encode, py::arg("model"), py::arg("x"));
    m.def("decode", &decode, py::arg("model"), py::arg("z"));
    m.def("train_sae", &train_sae, py::arg("dataset"), py::arg("config"));
    m.def("encode_all", &encode_all, py::arg("model"), py::arg("dataset"));
    m.def("save_sae", &save_sae, py::arg("model"), py::arg("path"));
    m.def("load_sae", &load_sae, py::arg("path"));

    // scoring
    py::class_<ScoreTable>(m, "ScoreTable")
        .def(py::init<>())
        .def_readwrite("rep_raw", &ScoreTable::rep_raw)
        .def_readwrite("div_raw", &ScoreTable::div_raw)
        .def_readwrite("rep", &ScoreTable::rep)
        .def_readwrite("div", &ScoreTable::div);

    m.def("build_score_table", &build_score_table, py::arg("codes"), py::arg("labels"),
          py::arg("class_count"), py::arg("top_frac") = 0.1);
    m.def("minmax_normalize", &minmax_normalize, py::arg("v"));

    // selector
    py::class_<SelectionConfig>(m, "SelectionConfig")
        .def(py::init<>())
        .def_readwrite("selection_ratio", &SelectionConfig::selection_ratio)
        .def_readwrite("total_epochs", &SelectionConfig::total_epochs)
        .def_readwrite("refinement_frac", &SelectionConfig::refinement_frac)
        .def_readwrite("penalty_weight", &SelectionConfig::penalty_weight)
        .def_readwrite("alpha_min", &SelectionConfig::alpha_min)
        .def_readwrite("mid_frac", &SelectionConfig::mid_frac)
        .def_readwrite("sharpness", &SelectionConfig::sharpness)
        .def_readwrite("class_balanced", &SelectionConfig::class_balanced)
        .def_readwrite("seed", &SelectionConfig::seed);

    py::class_<SelectionTrace>(m, "SelectionTrace")
        .def_readonly("subsets", &SelectionTrace::subsets)
        .def_readonly("alphas", &SelectionTrace::alphas)
        .def_readonly("usage", &SelectionTrace::usage);

    m.def("alpha_weight", &alpha_weight, py::arg("t"), py::arg("config"));
    m.def("usage_penalty", &usage_penalty, py::arg("usage_count"), py::arg("lambda_"));
    m.def("combined_scores", &combined_scores, py::arg("scores"), py::arg("usage"),
          py::arg("t"), py::arg("config"));
    m.def("select_epoch", &select_epoch, py::arg("scores"), py::arg("labels"),
          py::arg("class_count"), py::arg("config"));
    m.def("run_schedule", &run_schedule, py::arg("scores"), py::arg("labels"),
          py::arg("class_count"), py::arg("config"));

    // analysis
    py::class_<MmdConfig>(m, "MmdConfig")
        .def(py::init<>())
        .def_readwrite("gamma", &MmdConfig::gamma)
        .def_readwrite("subsample_cap", &MmdConfig::subsample_cap)
        .def_readwrite("seed", &MmdConfig::seed)
        .def_readwrite("unbiased", &MmdConfig::unbiased);

    py::class_<FlatnessStats>(m, "FlatnessStats")
        .def_readonly("gini", &FlatnessStats::gini)
        .def_readonly("max", &FlatnessStats::max)
        .def_readonly("min", &FlatnessStats::min)
        .def_readonly("cv", &FlatnessStats::cv);

    m.def("mmd2", &mmd2, py::arg("u"), py::arg("v"), py::arg("config"));
    m.def("kcenter_greedy", &kcenter_greedy, py::arg("features"), py::arg("m"));
    m.def("repk_topk_subset", &repk_topk_subset, py::arg("rep"), py::arg("labels"),
          py::arg("class_count"), py::arg("p"));
    m.def("inclusion_frequency", &inclusion_frequency, py::arg("trace"));
    m.def("gradient_bias", &gradient_bias, py::arg("pi"), py::arg("per_sample_grads"),
          py::arg("subset_size"), py::arg("n_samples"));
    m.def("usage_flatness", &usage_flatness, py::arg("usage"));
    m.def("monopoly_threshold", &monopoly_threshold, py::arg("u_j"), py::arg("delta"),
          py::arg("lambda_"));
    m.def("verify_anti_monopoly",
          [](long trials, const std::vector<double>& lambdas, std::uint64_t seed) {
              const TheoremCheckResult r = verify_anti_monopoly(trials, lambdas, seed);
              return py::make_tuple(r.trials, r.violations);
          },
          py::arg("trials"), py::arg("lambdas"), py::arg("seed"));
}
