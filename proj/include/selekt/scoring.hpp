#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace selekt {

// Dataset-level sparse-unit statistics. A unit is "active" on a sample when
// its code entry is strictly positive.
struct ActivationStats {
    std::vector<long> activation_count;  // per unit
    std::vector<int> class_coverage;     // distinct classes activating the unit
    std::vector<double> rarity;          // 1/count when count > 0, else 0
};

struct CommonFactorSet {
    std::vector<int> units;       // sorted by activation count desc, index asc
    std::vector<double> weights;  // 1/class_coverage per unit
};

struct ScoreTable {
    Eigen::VectorXd rep_raw;
    Eigen::VectorXd div_raw;
    Eigen::VectorXd rep;  // min-max normalized
    Eigen::VectorXd div;
};

ActivationStats compute_activation_stats(const Eigen::MatrixXd& codes,
                                         const std::vector<std::uint32_t>& labels,
                                         std::uint32_t class_count);

// The ceil(top_frac * N_lat) most frequently activated units, restricted to
// units that are active at all; ties at the cutoff go to the lower index.
CommonFactorSet common_factor_set(const ActivationStats& stats, double top_frac);

Eigen::VectorXd rep_scores(const Eigen::MatrixXd& codes, const CommonFactorSet& factors);
Eigen::VectorXd div_scores(const Eigen::MatrixXd& codes, const ActivationStats& stats);

// (v - min) / (max - min); constant vectors map to all-zeros.
Eigen::VectorXd minmax_normalize(const Eigen::VectorXd& v);

ScoreTable build_score_table(const Eigen::MatrixXd& codes,
                             const std::vector<std::uint32_t>& labels,
                             std::uint32_t class_count, double top_frac);

void export_scores_csv(const ScoreTable& table, const std::vector<std::uint32_t>& labels,
                       const std::filesystem::path& path);
ScoreTable load_scores_csv(const std::filesystem::path& path,
                           std::vector<std::uint32_t>* labels_out = nullptr);
void export_stats_csv(const ActivationStats& stats, const CommonFactorSet& factors,
                      const std::filesystem::path& path);

} // namespace selekt
