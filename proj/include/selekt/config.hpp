#pragma once

#include "selekt/analysis.hpp"
#include "selekt/dataset.hpp"
#include "selekt/sae.hpp"
#include "selekt/selector.hpp"
#include "selekt/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace selekt {

struct ScoringConfig {
    double top_frac = 0.1;
};

struct PathsConfig {
    std::string dataset;
    std::string eval_dataset;
    std::string sae_model;
    std::string codes;
    std::string scores;
    std::string out_dir = ".";
};

// Fully-resolved run configuration. All defaults match the method's stated
// hyperparameters where one exists; everything else is desk-scale plumbing.
struct RunConfig {
    std::uint64_t seed = 0;
    SyntheticSpec synthetic;
    double synthetic_label_noise_rate = 0.0;  // applied by gen-data when > 0
    SaeTrainConfig sae;
    ScoringConfig scoring;
    SelectionConfig selection;
    MmdConfig mmd;
    std::vector<double> mmd_ratios{0.01, 0.05, 0.1, 0.3, 0.5, 0.7};
    TrainHyper trainer;
    Arch trainer_arch = Arch::Linear;
    int trainer_hidden = 0;
    ExperimentConfig::Method experiment_method = ExperimentConfig::Method::Score;
    PathsConfig paths;
};

// Strict parse: unknown keys are rejected and all range violations are
// reported together, each with its JSON path. Section seeds are derived
// from the global seed with fixed labels.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_json(const std::string& text);

// Serialized resolved config; parse_config_json(echo) round-trips.
std::string config_echo(const RunConfig& cfg);

// Replace the global seed and re-derive every section seed.
void apply_global_seed(RunConfig& cfg, std::uint64_t seed);

} // namespace selekt
