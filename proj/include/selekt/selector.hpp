#pragma once

#include "selekt/scoring.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace selekt {

struct SelectionConfig {
    double selection_ratio = 0.3;  // p in (0,1]
    int total_epochs = 200;        // T
    double refinement_frac = 0.15; // rho: last ceil(rho*T) epochs use all data
    double penalty_weight = 0.2;   // lambda
    double alpha_min = 0.2;
    double mid_frac = 0.6;         // sigmoid midpoint as fraction of T
    double sharpness = 0.05;       // sigmoid slope per epoch
    bool class_balanced = true;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

struct SelectionTrace {
    std::vector<std::vector<int>> subsets;  // S(t), ascending indices
    std::vector<double> alphas;             // alpha(t), recorded for every epoch
    std::vector<long> usage;                // u_i(T)
};

// alpha(t) = alpha_min + (1-alpha_min)*(1 - sigmoid(sharpness*(t - mid_frac*T)))
double alpha_weight(int t, const SelectionConfig& cfg);

double usage_penalty(long usage_count, double lambda);

// H(i,t) = alpha(t)*rep(i) + (1-alpha(t))*div(i) - lambda*ln(1+u_i(t-1))
Eigen::VectorXd combined_scores(const ScoreTable& scores, const std::vector<long>& usage,
                                int t, const SelectionConfig& cfg);

// Top floor(p*N) by H globally, or floor(p*N_c) per class when balanced;
// ties break by lower index. Output sorted ascending.
std::vector<int> select_epoch(const Eigen::VectorXd& scores,
                              const std::vector<std::uint32_t>& labels,
                              std::uint32_t class_count, const SelectionConfig& cfg);

int refinement_epoch_count(const SelectionConfig& cfg);

// Algorithm loop over t = 1..T; emits the data stream only, training is the
// caller's business.
SelectionTrace run_schedule(const ScoreTable& scores,
                            const std::vector<std::uint32_t>& labels,
                            std::uint32_t class_count, const SelectionConfig& cfg);

// CSV `epoch,alpha,subset_size`
void export_trace_csv(const SelectionTrace& trace, const std::filesystem::path& path);
// Binary per-epoch index lists: magic "STRC", epoch count u64, then per epoch
// size u64 followed by u32 indices.
void export_trace_binary(const SelectionTrace& trace, const std::filesystem::path& path);
SelectionTrace load_trace_binary(const std::filesystem::path& path, std::size_t n_samples);
// CSV `sample_index,usage_total`
void export_usage_csv(const std::vector<long>& usage, const std::filesystem::path& path);

} // namespace selekt
