#include "selekt/scoring.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace selekt {

ActivationStats compute_activation_stats(const Eigen::MatrixXd& codes,
                                         const std::vector<std::uint32_t>& labels,
                                         std::uint32_t class_count) {
    if (static_cast<std::size_t>(codes.rows()) != labels.size())
        throw std::invalid_argument("compute_activation_stats: codes/labels misaligned");

    const auto nlat = static_cast<std::size_t>(codes.cols());
    ActivationStats stats;
    stats.activation_count.assign(nlat, 0);
    stats.class_coverage.assign(nlat, 0);
    stats.rarity.assign(nlat, 0.0);

    std::vector<std::uint8_t> seen(nlat * class_count, 0);
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        const std::uint32_t label = labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < codes.cols(); ++j) {
            if (codes(i, j) > 0.0) {
                ++stats.activation_count[static_cast<std::size_t>(j)];
                seen[static_cast<std::size_t>(j) * class_count + label] = 1;
            }
        }
    }
    for (std::size_t j = 0; j < nlat; ++j) {
        int coverage = 0;
        for (std::uint32_t c = 0; c < class_count; ++c)
            coverage += seen[j * class_count + c];
        stats.class_coverage[j] = coverage;
        if (stats.activation_count[j] > 0)
            stats.rarity[j] = 1.0 / static_cast<double>(stats.activation_count[j]);
    }
    return stats;
}

CommonFactorSet common_factor_set(const ActivationStats& stats, double top_frac) {
    if (top_frac <= 0.0 || top_frac > 1.0)
        throw std::invalid_argument("common_factor_set: top_frac must be in (0,1]");

    const auto nlat = stats.activation_count.size();
    std::vector<int> idx(nlat);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const long ca = stats.activation_count[static_cast<std::size_t>(a)];
        const long cb = stats.activation_count[static_cast<std::size_t>(b)];
        if (ca != cb) return ca > cb;
        return a < b;
    });

    const auto quota = static_cast<std::size_t>(
        std::ceil(top_frac * static_cast<double>(nlat)));
    CommonFactorSet out;
    for (std::size_t r = 0; r < idx.size() && out.units.size() < quota; ++r) {
        const int j = idx[r];
        if (stats.activation_count[static_cast<std::size_t>(j)] == 0) break;
        out.units.push_back(j);
        out.weights.push_back(1.0 / stats.class_coverage[static_cast<std::size_t>(j)]);
    }
    return out;
}

Eigen::VectorXd rep_scores(const Eigen::MatrixXd& codes, const CommonFactorSet& factors) {
    Eigen::VectorXd rep = Eigen::VectorXd::Zero(codes.rows());
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        double s = 0.0;
        for (std::size_t f = 0; f < factors.units.size(); ++f)
            if (codes(i, factors.units[f]) > 0.0) s += factors.weights[f];
        rep(i) = s;
    }
    return rep;
}

Eigen::VectorXd div_scores(const Eigen::MatrixXd& codes, const ActivationStats& stats) {
    Eigen::VectorXd div = Eigen::VectorXd::Zero(codes.rows());
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < codes.cols(); ++j)
            if (codes(i, j) > 0.0) s += stats.rarity[static_cast<std::size_t>(j)];
        div(i) = s;
    }
    return div;
}

Eigen::VectorXd minmax_normalize(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw std::invalid_argument("minmax_normalize: empty vector");
    const double lo = v.minCoeff();
    const double hi = v.maxCoeff();
    if (hi == lo) return Eigen::VectorXd::Zero(v.size());
    return (v.array() - lo) / (hi - lo);
}

ScoreTable build_score_table(const Eigen::MatrixXd& codes,
                             const std::vector<std::uint32_t>& labels,
                             std::uint32_t class_count, double top_frac) {
    const ActivationStats stats = compute_activation_stats(codes, labels, class_count);
    const CommonFactorSet factors = common_factor_set(stats, top_frac);
    ScoreTable table;
    table.rep_raw = rep_scores(codes, factors);
    table.div_raw = div_scores(codes, stats);
    table.rep = minmax_normalize(table.rep_raw);
    table.div = minmax_normalize(table.div_raw);
    return table;
}

void export_scores_csv(const ScoreTable& table, const std::vector<std::uint32_t>& labels,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "sample_index,label,rep_raw,div_raw,rep_norm,div_norm\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
    };
    for (Eigen::Index i = 0; i < table.rep_raw.size(); ++i) {
        out << i << ',' << labels[static_cast<std::size_t>(i)];
        put(table.rep_raw(i));
        put(table.div_raw(i));
        put(table.rep(i));
        put(table.div(i));
        out << "\n";
    }
}

ScoreTable load_scores_csv(const std::filesystem::path& path,
                           std::vector<std::uint32_t>* labels_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    std::string line;
    if (!std::getline(in, line) ||
        line != "sample_index,label,rep_raw,div_raw,rep_norm,div_norm")
        throw std::runtime_error(path.string() + ": unexpected score CSV header");

    std::vector<std::array<double, 4>> rows;
    std::vector<std::uint32_t> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // sample_index, implied by row order
        std::getline(ss, cell, ',');
        labels.push_back(static_cast<std::uint32_t>(std::stoul(cell)));
        std::array<double, 4> r{};
        for (double& v : r) {
            if (!std::getline(ss, cell, ','))
                throw std::runtime_error(path.string() + ": malformed score row");
            v = std::stod(cell);
        }
        rows.push_back(r);
    }

    ScoreTable table;
    const auto n = static_cast<Eigen::Index>(rows.size());
    table.rep_raw.resize(n);
    table.div_raw.resize(n);
    table.rep.resize(n);
    table.div.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        table.rep_raw(i) = rows[static_cast<std::size_t>(i)][0];
        table.div_raw(i) = rows[static_cast<std::size_t>(i)][1];
        table.rep(i) = rows[static_cast<std::size_t>(i)][2];
        table.div(i) = rows[static_cast<std::size_t>(i)][3];
    }
    if (labels_out) *labels_out = std::move(labels);
    return table;
}

void export_stats_csv(const ActivationStats& stats, const CommonFactorSet& factors,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    std::vector<std::uint8_t> in_common(stats.activation_count.size(), 0);
    for (int j : factors.units) in_common[static_cast<std::size_t>(j)] = 1;
    out << "unit_index,activation_count,class_coverage,rarity,in_common_set\n";
    char buf[64];
    for (std::size_t j = 0; j < stats.activation_count.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", stats.rarity[j]);
        out << j << ',' << stats.activation_count[j] << ',' << stats.class_coverage[j]
            << ',' << buf << ',' << int(in_common[j]) << "\n";
    }
}

} // namespace selekt
