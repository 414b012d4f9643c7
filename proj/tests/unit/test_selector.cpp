#include "selekt/rng.hpp"
#include "selekt/selector.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <vector>

using namespace selekt;
namespace fs = std::filesystem;

namespace {

ScoreTable table_from(const std::vector<double>& rep, const std::vector<double>& div) {
    ScoreTable t;
    t.rep = Eigen::Map<const Eigen::VectorXd>(rep.data(),
                                              static_cast<Eigen::Index>(rep.size()));
    t.div = Eigen::Map<const Eigen::VectorXd>(div.data(),
                                              static_cast<Eigen::Index>(div.size()));
    t.rep_raw = t.rep;
    t.div_raw = t.div;
    return t;
}

} // namespace

TEST_CASE("alpha schedule values at method defaults") {
    SelectionConfig cfg;  // defaults: alpha_min 0.2, mid 0.6, sharpness 0.05, T 200
    CHECK(alpha_weight(120, cfg) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(alpha_weight(1, cfg) == doctest::Approx(0.9979).epsilon(1e-3));
    CHECK(alpha_weight(200, cfg) > 0.2);
    CHECK(alpha_weight(200, cfg) < 0.22);
    for (int t = 2; t <= 200; ++t)
        CHECK(alpha_weight(t, cfg) <= alpha_weight(t - 1, cfg));
}

TEST_CASE("alpha floor saturates at alpha_min=1") {
    SelectionConfig cfg;
    cfg.alpha_min = 1.0;
    for (int t = 1; t <= 200; t += 20) CHECK(alpha_weight(t, cfg) == 1.0);
}

TEST_CASE("usage penalty values") {
    CHECK(usage_penalty(0, 0.2) == 0.0);
    CHECK(usage_penalty(9, 0.2) == doctest::Approx(0.46052).epsilon(1e-4));
    CHECK(usage_penalty(1000, 0.0) == 0.0);
}

TEST_CASE("combined score hand arithmetic") {
    SelectionConfig cfg;
    cfg.total_epochs = 200;
    // t=120 gives alpha=0.6 under defaults
    const ScoreTable t1 = table_from({1.0}, {0.0});
    CHECK(combined_scores(t1, {0}, 120, cfg)(0) == doctest::Approx(0.6).epsilon(1e-9));

    const ScoreTable t2 = table_from({0.5}, {0.5});
    CHECK(combined_scores(t2, {0}, 120, cfg)(0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(combined_scores(t2, {9}, 120, cfg)(0) ==
          doctest::Approx(0.5 - 0.2 * std::log(10.0)).epsilon(1e-9));
}

TEST_CASE("select_epoch spec examples") {
    SelectionConfig cfg;
    cfg.selection_ratio = 0.5;
    cfg.class_balanced = true;

    Eigen::VectorXd h(4);
    h << 0.9, 0.1, 0.3, 0.8;
    const std::vector<std::uint32_t> labels{0, 0, 1, 1};
    CHECK(select_epoch(h, labels, 2, cfg) == std::vector<int>{0, 3});

    cfg.selection_ratio = 1.0;
    std::vector<int> all(4);
    std::iota(all.begin(), all.end(), 0);
    CHECK(select_epoch(h, labels, 2, cfg) == all);

    Eigen::VectorXd tie(2);
    tie << 0.5, 0.5;
    cfg.selection_ratio = 0.5;
    CHECK(select_epoch(tie, {0, 0}, 1, cfg) == std::vector<int>{0});
}

TEST_CASE("select_epoch unbalanced takes global floor(pN)") {
    SelectionConfig cfg;
    cfg.selection_ratio = 0.5;
    cfg.class_balanced = false;
    Eigen::VectorXd h(5);
    h << 0.1, 0.9, 0.3, 0.8, 0.2;
    CHECK(select_epoch(h, {0, 0, 0, 1, 1}, 2, cfg) == std::vector<int>{1, 3});
}

TEST_CASE("select_epoch rejects an empty class under balancing") {
    SelectionConfig cfg;
    cfg.selection_ratio = 0.5;
    Eigen::VectorXd h(2);
    h << 0.1, 0.2;
    CHECK_THROWS_AS(select_epoch(h, {0, 0}, 2, cfg), std::runtime_error);
}

TEST_CASE("refinement tail length uses ceil(rho*T)") {
    SelectionConfig cfg;
    cfg.total_epochs = 200;
    cfg.refinement_frac = 0.15;
    CHECK(refinement_epoch_count(cfg) == 30);
    cfg.total_epochs = 7;
    CHECK(refinement_epoch_count(cfg) == 2);  // ceil(1.05)
    cfg.refinement_frac = 0.0;
    CHECK(refinement_epoch_count(cfg) == 0);
}

TEST_CASE("rho=1-epsilon degenerate: nearly every epoch is full data") {
    SelectionConfig cfg;
    cfg.total_epochs = 10;
    cfg.refinement_frac = 0.99;  // ceil(9.9) = 10 -> all epochs full
    cfg.selection_ratio = 0.5;
    const ScoreTable scores = table_from({0.1, 0.9}, {0.2, 0.3});
    const SelectionTrace trace = run_schedule(scores, {0, 0}, 1, cfg);
    for (const auto& s : trace.subsets) CHECK(s.size() == 2);
    CHECK(trace.usage == std::vector<long>{10, 10});
}

TEST_CASE("huge penalty forces rotation: no index twice in a row") {
    SelectionConfig cfg;
    cfg.selection_ratio = 0.5;
    cfg.total_epochs = 4;
    cfg.refinement_frac = 0.0;
    cfg.penalty_weight = 1000.0;
    cfg.class_balanced = false;
    const ScoreTable scores = table_from({0.9, 0.8, 0.2, 0.1}, {0.5, 0.5, 0.5, 0.5});
    const std::vector<std::uint32_t> labels{0, 0, 0, 0};
    const SelectionTrace trace = run_schedule(scores, labels, 1, cfg);
    for (std::size_t t = 1; t < trace.subsets.size(); ++t) {
        std::set<int> prev(trace.subsets[t - 1].begin(), trace.subsets[t - 1].end());
        for (int i : trace.subsets[t]) CHECK(prev.count(i) == 0);
    }
}

TEST_CASE("usage ledger identity on random schedules") {
    Rng rng(88);
    for (int trial = 0; trial < 3; ++trial) {
        const int n = 20 + static_cast<int>(rng.uniform_int(30));
        std::vector<double> rep(static_cast<std::size_t>(n)), div(rep);
        std::vector<std::uint32_t> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            rep[static_cast<std::size_t>(i)] = rng.uniform();
            div[static_cast<std::size_t>(i)] = rng.uniform();
            labels[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i % 3);
        }
        SelectionConfig cfg;
        cfg.total_epochs = 25;
        cfg.selection_ratio = 0.4;
        const SelectionTrace trace =
            run_schedule(table_from(rep, div), labels, 3, cfg);
        long used = std::accumulate(trace.usage.begin(), trace.usage.end(), 0L);
        long selected = 0;
        for (const auto& s : trace.subsets) selected += static_cast<long>(s.size());
        CHECK(used == selected);
    }
}

TEST_CASE("class-balanced quota is exact in every non-refinement epoch") {
    SelectionConfig cfg;
    cfg.selection_ratio = 0.3;
    cfg.total_epochs = 20;
    std::vector<double> rep(30), div(30);
    std::vector<std::uint32_t> labels(30);
    Rng rng(17);
    for (int i = 0; i < 30; ++i) {
        rep[static_cast<std::size_t>(i)] = rng.uniform();
        div[static_cast<std::size_t>(i)] = rng.uniform();
        labels[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i / 10);  // 10 each
    }
    const SelectionTrace trace = run_schedule(table_from(rep, div), labels, 3, cfg);
    const int refine = refinement_epoch_count(cfg);
    for (std::size_t t = 0; t + static_cast<std::size_t>(refine) < trace.subsets.size();
         ++t) {
        std::vector<int> per_class(3, 0);
        for (int i : trace.subsets[t]) ++per_class[labels[static_cast<std::size_t>(i)]];
        for (int c = 0; c < 3; ++c) CHECK(per_class[c] == 3);  // floor(0.3*10)
    }
    for (std::size_t t = trace.subsets.size() - static_cast<std::size_t>(refine);
         t < trace.subsets.size(); ++t)
        CHECK(trace.subsets[t].size() == 30);
}

TEST_CASE("run_schedule is deterministic") {
    SelectionConfig cfg;
    cfg.total_epochs = 15;
    cfg.selection_ratio = 0.5;
    const ScoreTable scores = table_from({0.3, 0.9, 0.4, 0.7}, {0.2, 0.1, 0.8, 0.5});
    const std::vector<std::uint32_t> labels{0, 0, 1, 1};
    const SelectionTrace a = run_schedule(scores, labels, 2, cfg);
    const SelectionTrace b = run_schedule(scores, labels, 2, cfg);
    CHECK(a.subsets == b.subsets);
    CHECK(a.usage == b.usage);
    CHECK(a.alphas == b.alphas);
}

TEST_CASE("trace binary roundtrip") {
    SelectionConfig cfg;
    cfg.total_epochs = 8;
    cfg.selection_ratio = 0.5;
    const ScoreTable scores = table_from({0.3, 0.9, 0.4, 0.7}, {0.2, 0.1, 0.8, 0.5});
    const std::vector<std::uint32_t> labels{0, 0, 1, 1};
    const SelectionTrace trace = run_schedule(scores, labels, 2, cfg);
    const auto path = fs::temp_directory_path() / "trace_roundtrip.strc";
    export_trace_binary(trace, path);
    const SelectionTrace loaded = load_trace_binary(path, labels.size());
    CHECK(loaded.subsets == trace.subsets);
    CHECK(loaded.usage == trace.usage);
    fs::remove(path);
}

TEST_CASE("config validation rejects out-of-range fields") {
    SelectionConfig cfg;
    cfg.selection_ratio = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SelectionConfig{};
    cfg.refinement_frac = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SelectionConfig{};
    cfg.total_epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
