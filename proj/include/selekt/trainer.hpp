#pragma once

#include "selekt/analysis.hpp"
#include "selekt/dataset.hpp"
#include "selekt/scoring.hpp"
#include "selekt/selector.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace selekt {

enum class Arch { Linear, OneHidden };

// Softmax classifier trained from scratch: either linear or with one tanh
// hidden layer. Supplies the per-sample cross-entropy gradients the bias
// diagnostics need.
struct ToyModel {
    Arch arch = Arch::Linear;
    int input_dim = 0;
    int class_count = 0;
    int hidden = 0;        // 0 for linear
    Eigen::MatrixXd w1;    // linear: C x D; hidden: H x D
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;    // hidden only: C x H
    Eigen::VectorXd b2;

    long param_count() const;
};

struct TrainHyper {
    double learning_rate = 0.1;
    int batch_size = 32;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
};

ToyModel init_model(Arch arch, int input_dim, int class_count, int hidden,
                    std::uint64_t seed);

Eigen::VectorXd predict_proba(const ToyModel& model, const Eigen::VectorXd& x);

// One pass of seeded shuffled minibatch gradient descent over the subset.
// The shuffle stream depends on (hyper.seed, epoch) only.
double train_one_epoch(ToyModel& model, const Dataset& ds, const std::vector<int>& subset,
                       const TrainHyper& hyper, int epoch);

// (accuracy, mean cross-entropy); argmax ties go to the lower class index
std::pair<double, double> evaluate(const ToyModel& model, const Dataset& ds);

Eigen::VectorXd per_sample_losses(const ToyModel& model, const Dataset& ds);

// Row i = flattened cross-entropy gradient of sample i at the current
// parameters; the row mean equals the full-batch gradient.
Eigen::MatrixXd per_sample_gradients(const ToyModel& model, const Dataset& ds);

struct ExperimentConfig {
    enum class Method { Score, LossGreedy, Full };
    Method method = Method::Score;
    SelectionConfig selection;
    TrainHyper hyper;
    Arch arch = Arch::Linear;
    int hidden = 0;
};

struct EpochRecord {
    int epoch = 0;
    double alpha = 0.0;
    long subset_size = 0;
    double train_loss = 0.0;
    double eval_accuracy = 0.0;
};

struct ExperimentReport {
    std::vector<EpochRecord> epochs;
    SelectionTrace trace;
    long sample_visits = 0;
    double final_accuracy = 0.0;
    double final_loss = 0.0;
};

// Drives the per-epoch selection loop and the toy learner together. The
// score table is required for Method::Score and ignored otherwise.
ExperimentReport run_experiment(const Dataset& train, const ScoreTable* scores,
                                const ExperimentConfig& cfg, const Dataset* eval_ds);

void export_report_json(const ExperimentReport& report, const std::string& config_echo,
                        const std::filesystem::path& path);

} // namespace selekt
