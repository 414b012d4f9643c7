#pragma once

#include "selekt/scoring.hpp"
#include "selekt/selector.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

namespace selekt {

struct MmdConfig {
    double gamma = 0.0;         // 0 -> 1/D
    long subsample_cap = 5000;
    std::uint64_t seed = 0;
    bool unbiased = false;      // default is the expectation (V-statistic) form
};

// Squared MMD with RBF kernel exp(-gamma*||a-b||^2). Each set is subsampled
// to at most subsample_cap rows (seeded) before the kernel sums; the result
// is clamped at 0 against negative rounding.
double mmd2(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, const MmdConfig& cfg);

// Greedy k-center starting from the point farthest from the dataset mean;
// ties break by lower index. Returns the first m picks in selection order.
std::vector<int> kcenter_greedy(const Eigen::MatrixXd& features, int m);

// Class-wise top floor(p*N_c) by representativeness score.
std::vector<int> repk_topk_subset(const Eigen::VectorXd& rep,
                                  const std::vector<std::uint32_t>& labels,
                                  std::uint32_t class_count, double p);

std::vector<int> loss_greedy_select(const Eigen::VectorXd& losses,
                                    const std::vector<std::uint32_t>& labels,
                                    std::uint32_t class_count, double p, bool balanced);

Eigen::VectorXd inclusion_frequency(const SelectionTrace& trace);

// Delta_g = sum_i (pi_i/K - 1/N) g_i and its l2 norm.
std::pair<Eigen::VectorXd, double> gradient_bias(const Eigen::VectorXd& pi,
                                                 const Eigen::MatrixXd& per_sample_grads,
                                                 long subset_size, long n_samples);

struct FlatnessStats {
    double gini = 0.0;
    double max = 0.0;
    double min = 0.0;
    double cv = 0.0;  // coefficient of variation
};

FlatnessStats usage_flatness(const std::vector<long>& usage);

// Smallest integer u_i with u_i >= (1+u_j)*exp(delta/lambda) - 1.
long monopoly_threshold(long u_j, double delta, double lambda);

struct TheoremCheckResult {
    long trials = 0;
    long violations = 0;
};

// Randomized instantiation of the anti-monopoly bound with delta = 1
// (scores in [0,1]) over a lambda grid.
TheoremCheckResult verify_anti_monopoly(long trials, const std::vector<double>& lambdas,
                                        std::uint64_t seed);

} // namespace selekt
