#include "selekt/selector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace selekt {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'R', 'C'};

std::vector<int> top_by_score(const Eigen::VectorXd& scores, const std::vector<int>& pool,
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

void SelectionConfig::validate() const {
    std::vector<std::string> errs;
    if (!(selection_ratio > 0.0 && selection_ratio <= 1.0))
        errs.push_back("selection_ratio must be in (0,1]");
    if (total_epochs < 1) errs.push_back("total_epochs must be >= 1");
    if (refinement_frac < 0.0 || refinement_frac >= 1.0)
        errs.push_back("refinement_frac must be in [0,1)");
    if (penalty_weight < 0.0) errs.push_back("penalty_weight must be >= 0");
    if (alpha_min < 0.0 || alpha_min > 1.0) errs.push_back("alpha_min must be in [0,1]");
    if (sharpness < 0.0) errs.push_back("sharpness must be >= 0");
    if (!errs.empty()) {
        std::string joined;
        for (const auto& e : errs) {
            if (!joined.empty()) joined += "; ";
            joined += e;
        }
        throw std::invalid_argument("invalid SelectionConfig: " + joined);
    }
}

double alpha_weight(int t, const SelectionConfig& cfg) {
    const double x = cfg.sharpness *
                     (static_cast<double>(t) - cfg.mid_frac * cfg.total_epochs);
    const double sigmoid = 1.0 / (1.0 + std::exp(-x));
    return cfg.alpha_min + (1.0 - cfg.alpha_min) * (1.0 - sigmoid);
}

double usage_penalty(long usage_count, double lambda) {
    return lambda * std::log1p(static_cast<double>(usage_count));
}

Eigen::VectorXd combined_scores(const ScoreTable& scores, const std::vector<long>& usage,
                                int t, const SelectionConfig& cfg) {
    const double a = alpha_weight(t, cfg);
    Eigen::VectorXd h(scores.rep.size());
    for (Eigen::Index i = 0; i < h.size(); ++i)
        h(i) = a * scores.rep(i) + (1.0 - a) * scores.div(i) -
               usage_penalty(usage[static_cast<std::size_t>(i)], cfg.penalty_weight);
    return h;
}

std::vector<int> select_epoch(const Eigen::VectorXd& scores,
                              const std::vector<std::uint32_t>& labels,
                              std::uint32_t class_count, const SelectionConfig& cfg) {
    const auto n = static_cast<std::size_t>(scores.size());
    std::vector<int> selected;

    if (cfg.class_balanced) {
        std::vector<std::vector<int>> by_class(class_count);
        for (std::size_t i = 0; i < n; ++i)
            by_class[labels[i]].push_back(static_cast<int>(i));
        for (std::uint32_t c = 0; c < class_count; ++c) {
            if (by_class[c].empty())
                throw std::runtime_error("select_epoch: class " + std::to_string(c) +
                                         " has no samples under class balancing");
            const auto quota = static_cast<std::size_t>(
                cfg.selection_ratio * static_cast<double>(by_class[c].size()));
            for (int i : top_by_score(scores, by_class[c], quota)) selected.push_back(i);
        }
    } else {
        std::vector<int> pool(n);
        std::iota(pool.begin(), pool.end(), 0);
        const auto quota =
            static_cast<std::size_t>(cfg.selection_ratio * static_cast<double>(n));
        selected = top_by_score(scores, pool, quota);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

int refinement_epoch_count(const SelectionConfig& cfg) {
    return static_cast<int>(
        std::ceil(cfg.refinement_frac * cfg.total_epochs - 1e-9));
}

SelectionTrace run_schedule(const ScoreTable& scores,
                            const std::vector<std::uint32_t>& labels,
                            std::uint32_t class_count, const SelectionConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(scores.rep.size());
    SelectionTrace trace;
    trace.usage.assign(n, 0);
    const int refine_from = cfg.total_epochs - refinement_epoch_count(cfg);

    for (int t = 1; t <= cfg.total_epochs; ++t) {
        std::vector<int> subset;
        const double a = alpha_weight(t, cfg);
        if (t > refine_from) {
            subset.resize(n);
            std::iota(subset.begin(), subset.end(), 0);
        } else {
            const Eigen::VectorXd h = combined_scores(scores, trace.usage, t, cfg);
            subset = select_epoch(h, labels, class_count, cfg);
        }
        for (int i : subset) ++trace.usage[static_cast<std::size_t>(i)];
        trace.alphas.push_back(a);
        trace.subsets.push_back(std::move(subset));
    }
    return trace;
}

void export_trace_csv(const SelectionTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "epoch,alpha,subset_size\n";
    char buf[64];
    for (std::size_t t = 0; t < trace.subsets.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%.17g", trace.alphas[t]);
        out << (t + 1) << ',' << buf << ',' << trace.subsets[t].size() << "\n";
    }
}

void export_trace_binary(const SelectionTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out.write(kMagic, 4);
    const std::uint64_t epochs = trace.subsets.size();
    out.write(reinterpret_cast<const char*>(&epochs), 8);
    for (const auto& subset : trace.subsets) {
        const std::uint64_t size = subset.size();
        out.write(reinterpret_cast<const char*>(&size), 8);
        for (int i : subset) {
            const std::uint32_t v = static_cast<std::uint32_t>(i);
            out.write(reinterpret_cast<const char*>(&v), 4);
        }
    }
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

SelectionTrace load_trace_binary(const std::filesystem::path& path, std::size_t n_samples) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error(path.string() + ": bad magic (byte offset 0)");
    std::uint64_t epochs = 0;
    in.read(reinterpret_cast<char*>(&epochs), 8);

    SelectionTrace trace;
    trace.usage.assign(n_samples, 0);
    for (std::uint64_t t = 0; t < epochs; ++t) {
        std::uint64_t size = 0;
        in.read(reinterpret_cast<char*>(&size), 8);
        std::vector<int> subset(size);
        for (std::uint64_t i = 0; i < size; ++i) {
            std::uint32_t v = 0;
            in.read(reinterpret_cast<char*>(&v), 4);
            subset[i] = static_cast<int>(v);
            if (v < n_samples) ++trace.usage[v];
        }
        trace.alphas.push_back(0.0);
        trace.subsets.push_back(std::move(subset));
    }
    if (!in) throw std::runtime_error(path.string() + ": truncated payload");
    return trace;
}

void export_usage_csv(const std::vector<long>& usage, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "sample_index,usage_total\n";
    for (std::size_t i = 0; i < usage.size(); ++i) out << i << ',' << usage[i] << "\n";
}

} // namespace selekt
