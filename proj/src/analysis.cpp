#include "selekt/analysis.hpp"
#include "selekt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace selekt {

namespace {

Eigen::MatrixXd maybe_subsample(const Eigen::MatrixXd& m, long cap, Rng& rng) {
    if (m.rows() <= cap) return m;
    const auto picks = rng.sample_without_replacement(static_cast<std::size_t>(m.rows()),
                                                      static_cast<std::size_t>(cap));
    Eigen::MatrixXd out(cap, m.cols());
    for (long i = 0; i < cap; ++i)
        out.row(i) = m.row(static_cast<Eigen::Index>(picks[static_cast<std::size_t>(i)]));
    return out;
}

// mean of exp(-gamma*||a_i - b_j||^2) over the full grid
double mean_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma,
                   bool drop_diagonal) {
    const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
    const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * a * b.transpose());
    d2.colwise() += a2;
    d2.rowwise() += b2.transpose();
    double total = (-gamma * d2.array()).exp().sum();
    double count = static_cast<double>(a.rows()) * static_cast<double>(b.rows());
    if (drop_diagonal) {
        total -= static_cast<double>(a.rows());  // k(x,x) = 1
        count -= static_cast<double>(a.rows());
        if (count <= 0.0)
            throw std::invalid_argument("mmd2: unbiased estimator needs >= 2 rows per set");
    }
    return total / count;
}

std::vector<int> top_indices(const Eigen::VectorXd& scores, const std::vector<int>& pool,
                             std::size_t count) {
    std::vector<int> idx = pool;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (scores(a) != scores(b)) return scores(a) > scores(b);
        return a < b;
    });
    idx.resize(std::min(count, idx.size()));
    return idx;
}

} // namespace

double mmd2(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, const MmdConfig& cfg) {
    if (u.rows() == 0 || v.rows() == 0)
        throw std::invalid_argument("mmd2: empty input set");
    if (u.cols() != v.cols()) throw std::invalid_argument("mmd2: dimension mismatch");
    if (cfg.subsample_cap < 2) throw std::invalid_argument("mmd2: subsample_cap < 2");

    const double gamma =
        cfg.gamma > 0.0 ? cfg.gamma : 1.0 / static_cast<double>(u.cols());
    Rng rng(derive_seed(cfg.seed, "mmd-subsample"));
    const Eigen::MatrixXd us = maybe_subsample(u, cfg.subsample_cap, rng);
    const Eigen::MatrixXd vs = maybe_subsample(v, cfg.subsample_cap, rng);

    const double uu = mean_kernel(us, us, gamma, cfg.unbiased);
    const double vv = mean_kernel(vs, vs, gamma, cfg.unbiased);
    const double uv = mean_kernel(us, vs, gamma, false);
    return std::max(0.0, uu + vv - 2.0 * uv);
}

std::vector<int> kcenter_greedy(const Eigen::MatrixXd& features, int m) {
    const auto n = features.rows();
    if (m < 1 || m > n) throw std::invalid_argument("kcenter_greedy: m out of range");

    const Eigen::RowVectorXd mean = features.colwise().mean();
    int start = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = (features.row(i) - mean).squaredNorm();
        if (d > best) {
            best = d;
            start = static_cast<int>(i);
        }
    }

    std::vector<int> selected{start};
    Eigen::VectorXd min_d2(n);
    for (Eigen::Index i = 0; i < n; ++i)
        min_d2(i) = (features.row(i) - features.row(start)).squaredNorm();

    while (static_cast<int>(selected.size()) < m) {
        int next = 0;
        double far = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (min_d2(i) > far) {
                far = min_d2(i);
                next = static_cast<int>(i);
            }
        }
        selected.push_back(next);
        for (Eigen::Index i = 0; i < n; ++i)
            min_d2(i) = std::min(min_d2(i), (features.row(i) - features.row(next)).squaredNorm());
    }
    return selected;
}

std::vector<int> repk_topk_subset(const Eigen::VectorXd& rep,
                                  const std::vector<std::uint32_t>& labels,
                                  std::uint32_t class_count, double p) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("repk_topk_subset: p must be in (0,1]");
    std::vector<std::vector<int>> by_class(class_count);
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(static_cast<int>(i));
    std::vector<int> out;
    for (std::uint32_t c = 0; c < class_count; ++c) {
        const auto quota = static_cast<std::size_t>(
            p * static_cast<double>(by_class[c].size()));
        for (int i : top_indices(rep, by_class[c], quota)) out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> loss_greedy_select(const Eigen::VectorXd& losses,
                                    const std::vector<std::uint32_t>& labels,
                                    std::uint32_t class_count, double p, bool balanced) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("loss_greedy_select: p must be in (0,1]");
    std::vector<int> out;
    if (balanced) {
        std::vector<std::vector<int>> by_class(class_count);
        for (std::size_t i = 0; i < labels.size(); ++i)
            by_class[labels[i]].push_back(static_cast<int>(i));
        for (std::uint32_t c = 0; c < class_count; ++c) {
            const auto quota = static_cast<std::size_t>(
                p * static_cast<double>(by_class[c].size()));
            for (int i : top_indices(losses, by_class[c], quota)) out.push_back(i);
        }
    } else {
        std::vector<int> pool(static_cast<std::size_t>(losses.size()));
        std::iota(pool.begin(), pool.end(), 0);
        const auto quota =
            static_cast<std::size_t>(p * static_cast<double>(losses.size()));
        out = top_indices(losses, pool, quota);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Eigen::VectorXd inclusion_frequency(const SelectionTrace& trace) {
    const auto t = trace.subsets.size();
    if (t == 0) throw std::invalid_argument("inclusion_frequency: empty trace");
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(trace.usage.size()));
    for (const auto& subset : trace.subsets)
        for (int i : subset) pi(i) += 1.0;
    return pi / static_cast<double>(t);
}

std::pair<Eigen::VectorXd, double> gradient_bias(const Eigen::VectorXd& pi,
                                                 const Eigen::MatrixXd& per_sample_grads,
                                                 long subset_size, long n_samples) {
    if (subset_size < 1) throw std::invalid_argument("gradient_bias: subset_size < 1");
    if (pi.size() != per_sample_grads.rows())
        throw std::invalid_argument("gradient_bias: dimension mismatch");

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(per_sample_grads.cols());
    const double uniform = 1.0 / static_cast<double>(n_samples);
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        const double coeff = pi(i) / static_cast<double>(subset_size) - uniform;
        if (coeff != 0.0) delta += coeff * per_sample_grads.row(i).transpose();
    }
    return {delta, delta.norm()};
}

FlatnessStats usage_flatness(const std::vector<long>& usage) {
    if (usage.empty()) throw std::invalid_argument("usage_flatness: empty counts");
    const auto n = static_cast<double>(usage.size());
    std::vector<long> sorted = usage;
    std::sort(sorted.begin(), sorted.end());

    double total = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        total += static_cast<double>(sorted[i]);
        weighted += static_cast<double>(i + 1) * static_cast<double>(sorted[i]);
    }

    FlatnessStats stats;
    stats.max = static_cast<double>(sorted.back());
    stats.min = static_cast<double>(sorted.front());
    if (total > 0.0) stats.gini = 2.0 * weighted / (n * total) - (n + 1.0) / n;

    const double mean = total / n;
    if (mean > 0.0) {
        double var = 0.0;
        for (long u : usage) {
            const double d = static_cast<double>(u) - mean;
            var += d * d;
        }
        stats.cv = std::sqrt(var / n) / mean;
    }
    return stats;
}

long monopoly_threshold(long u_j, double delta, double lambda) {
    if (lambda <= 0.0)
        throw std::invalid_argument("monopoly_threshold: undefined for lambda <= 0");
    if (delta < 0.0 || u_j < 0)
        throw std::invalid_argument("monopoly_threshold: delta and u_j must be >= 0");
    const double bound = (1.0 + static_cast<double>(u_j)) * std::exp(delta / lambda) - 1.0;
    return static_cast<long>(std::ceil(bound - 1e-12));
}

TheoremCheckResult verify_anti_monopoly(long trials, const std::vector<double>& lambdas,
                                        std::uint64_t seed) {
    Rng rng(derive_seed(seed, "theorem-check"));
    TheoremCheckResult result;
    for (long trial = 0; trial < trials; ++trial) {
        const double lambda = lambdas[static_cast<std::size_t>(
            rng.uniform_int(lambdas.size()))];
        const double s_i = rng.uniform();
        const double s_j = rng.uniform();
        const long u_j = static_cast<long>(rng.uniform_int(101));
        const long u_i = monopoly_threshold(u_j, 1.0, lambda) +
                         static_cast<long>(rng.uniform_int(3));
        const double penalized_i = s_i - usage_penalty(u_i, lambda);
        const double penalized_j = s_j - usage_penalty(u_j, lambda);
        ++result.trials;
        if (penalized_i > penalized_j) ++result.violations;
    }
    return result;
}

} // namespace selekt
