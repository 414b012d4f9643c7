// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 9 needs the CLI binary path as argv[1].
#include "selekt/analysis.hpp"
#include "selekt/config.hpp"
#include "selekt/dataset.hpp"
#include "selekt/rng.hpp"
#include "selekt/sae.hpp"
#include "selekt/scoring.hpp"
#include "selekt/selector.hpp"
#include "selekt/trainer.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace selekt;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
    std::printf("criterion %d (%s): %s — %s\n", criterion, name.c_str(),
                pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++failures;
}

long ms_since(clock_type::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(clock_type::now() -
                                                                 start)
        .count();
}

Eigen::MatrixXd subset_rows(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

void criterion_1_theorem() {
    const auto start = clock_type::now();
    const TheoremCheckResult r = verify_anti_monopoly(10000, {0.05, 0.2, 1.0}, 2024);
    const long ms = ms_since(start);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%ld violations / %ld trials in %ld ms",
                  r.violations, r.trials, ms);
    report(1, "theorem-1 verification", r.violations == 0 && ms < 1000, buf);
}

void criterion_2_gradient_bias() {
    Rng rng(7);
    const int n = 50, p = 20;
    const long k = 10;
    Eigen::MatrixXd grads(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) grads(i, j) = rng.normal();
    const Eigen::VectorXd uniform =
        Eigen::VectorXd::Constant(n, static_cast<double>(k) / n);
    const double zero_norm = gradient_bias(uniform, grads, k, n).second;

    Eigen::MatrixXd hand(2, 2);
    hand << 1, 0, 0, 1;
    Eigen::VectorXd pi(2);
    pi << 1, 0;
    const double hand_norm = gradient_bias(pi, hand, 1, 2).second;

    char buf[128];
    std::snprintf(buf, sizeof(buf), "uniform-pi norm %.3g, hand example %.6f",
                  zero_norm, hand_norm);
    report(2, "gradient-bias identity",
           zero_norm < 1e-12 && std::abs(hand_norm - 0.70711) < 1e-5, buf);
}

void criterion_3_gini_ordering() {
    const auto start = clock_type::now();
    int wins = 0;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) {
        SyntheticSpec spec;
        spec.class_count = 10;
        spec.samples_per_class = 100;
        spec.seed = derive_seed(100 + static_cast<std::uint64_t>(s), "c3-data");
        Dataset ds = generate_synthetic(spec).data;
        ds = inject_label_noise(ds, 0.2,
                                derive_seed(spec.seed, "c3-noise"));

        SaeTrainConfig sae;
        sae.latent_dim = 128;
        sae.sparsity_budget = 8;
        sae.epochs = 10;
        sae.learning_rate = 5e-3;
        sae.seed = derive_seed(spec.seed, "c3-sae");
        const SaeModel model = train_sae(ds, sae).model;
        const ScoreTable scores =
            build_score_table(encode_all(model, ds), ds.labels, ds.class_count, 0.1);

        SelectionConfig sel;
        sel.selection_ratio = 0.3;
        sel.total_epochs = 100;
        const double gini_full =
            usage_flatness(run_schedule(scores, ds.labels, ds.class_count, sel).usage)
                .gini;

        SelectionConfig no_penalty = sel;
        no_penalty.penalty_weight = 0.0;
        const double gini_ablation =
            usage_flatness(
                run_schedule(scores, ds.labels, ds.class_count, no_penalty).usage)
                .gini;

        ExperimentConfig greedy;
        greedy.method = ExperimentConfig::Method::LossGreedy;
        greedy.selection = sel;
        greedy.hyper.seed = derive_seed(spec.seed, "c3-trainer");
        const double gini_greedy =
            usage_flatness(run_experiment(ds, nullptr, greedy, nullptr).trace.usage)
                .gini;

        if (gini_full < gini_ablation && gini_full < gini_greedy) ++wins;
    }
    const long ms = ms_since(start);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d/%d seeds ordered correctly in %ld ms", wins,
                  seeds, ms);
    report(3, "rotation reduces monopoly", wins == seeds && ms < 120000, buf);
}

void criterion_4_mmd() {
    const auto start = clock_type::now();

    // oracle agreement on small sets
    Rng orng(11);
    Eigen::MatrixXd ou(80, 4), ov(100, 4);
    for (Eigen::Index i = 0; i < ou.rows(); ++i)
        for (int j = 0; j < 4; ++j) ou(i, j) = orng.normal();
    for (Eigen::Index i = 0; i < ov.rows(); ++i)
        for (int j = 0; j < 4; ++j) ov(i, j) = orng.normal();
    double oracle = 0.0;
    {
        auto mean_k = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                for (Eigen::Index j = 0; j < b.rows(); ++j)
                    acc += std::exp(-0.25 * (a.row(i) - b.row(j)).squaredNorm());
            return acc / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
        };
        oracle = mean_k(ou, ou) + mean_k(ov, ov) - 2.0 * mean_k(ou, ov);
    }
    MmdConfig ocfg;
    ocfg.gamma = 0.25;
    const bool oracle_ok = std::abs(mmd2(ou, ov, ocfg) - std::max(0.0, oracle)) < 1e-10;

    int rep_wins = 0, comparisons = 0;
    bool full_zero_ok = true;
    for (int s = 0; s < 10; ++s) {
        SyntheticSpec spec;
        spec.class_count = 10;
        spec.samples_per_class = 500;  // N = 5000
        spec.seed = derive_seed(200 + static_cast<std::uint64_t>(s), "c4-data");
        const Dataset ds = generate_synthetic(spec).data;

        SaeTrainConfig sae;
        sae.latent_dim = 128;
        sae.sparsity_budget = 8;
        sae.epochs = 6;
        sae.learning_rate = 5e-3;
        sae.seed = derive_seed(spec.seed, "c4-sae");
        const SaeModel model = train_sae(ds, sae).model;
        const ScoreTable scores =
            build_score_table(encode_all(model, ds), ds.labels, ds.class_count, 0.1);

        const Eigen::MatrixXd normalized = l2_normalize_rows(ds.features);
        MmdConfig mmd_cfg;  // gamma 1/D, cap 5000
        if (s == 0)
            full_zero_ok = mmd2(normalized, normalized, mmd_cfg) < 1e-9;

        for (double p : {0.1, 0.3}) {
            const auto rep_subset =
                repk_topk_subset(scores.rep_raw, ds.labels, ds.class_count, p);
            const int m = static_cast<int>(p * static_cast<double>(ds.n()));
            const auto kc_subset = kcenter_greedy(normalized, m);
            const double mmd_rep =
                mmd2(subset_rows(normalized, rep_subset), normalized, mmd_cfg);
            const double mmd_kc =
                mmd2(subset_rows(normalized, kc_subset), normalized, mmd_cfg);
            ++comparisons;
            if (mmd_rep < mmd_kc) ++rep_wins;
        }
    }
    const long ms = ms_since(start);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "rep-topk wins %d/%d, full-vs-full zero %s, oracle %s, %ld ms",
                  rep_wins, comparisons, full_zero_ok ? "yes" : "no",
                  oracle_ok ? "ok" : "bad", ms);
    report(4, "mmd faithfulness", rep_wins >= 16 && full_zero_ok && oracle_ok, buf);
}

void criterion_5_sae() {
    // exact sparsity on random models and data
    Rng rng(3);
    SaeModel m;
    m.encoder_weights.resize(12, 5);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 5; ++j) m.encoder_weights(i, j) = rng.normal();
    m.encoder_bias = Eigen::VectorXd::Zero(12);
    m.decoder_bias = Eigen::VectorXd::Zero(5);
    m.sparsity_budget = 3;
    bool sparsity_ok = true;
    Dataset probe;
    probe.features.resize(40, 5);
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 5; ++j) probe.features(i, j) = rng.normal();
    probe.labels.assign(40, 0);
    probe.class_count = 1;
    const Eigen::MatrixXd codes = encode_all(m, probe);
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        int nz = 0;
        for (Eigen::Index j = 0; j < codes.cols(); ++j) nz += codes(i, j) != 0.0;
        if (nz > 3) sparsity_ok = false;
    }

    // finite differences on a 5x3 batch
    SaeModel fd_model;
    fd_model.encoder_weights.resize(6, 3);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j) fd_model.encoder_weights(i, j) = 0.4 * rng.normal();
    fd_model.encoder_bias = Eigen::VectorXd::Zero(6);
    fd_model.decoder_bias = Eigen::VectorXd::Zero(3);
    fd_model.sparsity_budget = 2;
    Eigen::MatrixXd batch(5, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) batch(i, j) = rng.normal();
    const std::vector<int> dead{5};
    const double lam = 0.25;
    const SaeGradients g = sae_batch_gradients(fd_model, batch, dead, lam);
    auto loss_at = [&](const SaeModel& model) {
        double recon = 0.0;
        for (Eigen::Index i = 0; i < batch.rows(); ++i) {
            const Eigen::VectorXd x = batch.row(i);
            recon += (x - decode(model, encode(model, x))).squaredNorm();
        }
        return recon / static_cast<double>(batch.rows()) +
               lam * revival_terms(batch, model, dead).loss;
    };
    bool fd_ok = true;
    const double eps = 1e-6;
    for (int i = 0; i < 6 && fd_ok; ++i)
        for (int j = 0; j < 3; ++j) {
            SaeModel plus = fd_model, minus = fd_model;
            plus.encoder_weights(i, j) += eps;
            minus.encoder_weights(i, j) -= eps;
            const double fd = (loss_at(plus) - loss_at(minus)) / (2 * eps);
            const double denom = std::max({std::abs(fd), std::abs(g.d_weights(i, j)), 1e-8});
            if (std::abs(fd - g.d_weights(i, j)) / denom >= 1e-4) {
                fd_ok = false;
                break;
            }
        }

    // single atom reconstruction
    Dataset atom;
    atom.features.resize(64, 3);
    for (int i = 0; i < 64; ++i) atom.features.row(i) << 1.0, -0.5, 0.25;
    atom.labels.assign(64, 0);
    atom.class_count = 1;
    SaeTrainConfig atom_cfg;
    atom_cfg.latent_dim = 4;
    atom_cfg.sparsity_budget = 1;
    atom_cfg.epochs = 200;
    atom_cfg.batch_size = 64;
    atom_cfg.learning_rate = 0.02;
    atom_cfg.seed = 5;
    const double atom_mse = train_sae(atom, atom_cfg).recon_loss.back();

    // revival efficacy
    SyntheticSpec spec;
    spec.class_count = 4;
    spec.samples_per_class = 64;
    spec.feature_dim = 8;
    spec.seed = 31;
    const Dataset rev_ds = generate_synthetic(spec).data;
    SaeTrainConfig with;
    with.latent_dim = 32;
    with.sparsity_budget = 2;
    with.epochs = 30;
    with.batch_size = 32;
    with.dead_check_interval = 8;
    with.seed = 55;
    SaeTrainConfig without = with;
    without.revival_weight = 0.0;
    const double dead_with = train_sae(rev_ds, with).dead_fraction.back();
    const double dead_without = train_sae(rev_ds, without).dead_fraction.back();

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "sparsity %s, fd %s, atom mse %.2e, dead %.3f (revival) vs %.3f",
                  sparsity_ok ? "exact" : "violated", fd_ok ? "ok" : "bad", atom_mse,
                  dead_with, dead_without);
    report(5, "sae correctness",
           sparsity_ok && fd_ok && atom_mse < 1e-3 && dead_with <= dead_without, buf);
}

void criterion_6_scheduler() {
    SelectionConfig cfg;  // paper defaults, T=200
    const double a120 = alpha_weight(120, cfg);
    const double a1 = alpha_weight(1, cfg);
    const double a200 = alpha_weight(200, cfg);
    bool monotone = true;
    for (int t = 2; t <= 200; ++t)
        if (alpha_weight(t, cfg) > alpha_weight(t - 1, cfg)) monotone = false;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "alpha(120)=%.12f alpha(1)=%.6f alpha(200)=%.6f monotone=%s", a120,
                  a1, a200, monotone ? "yes" : "no");
    report(6, "scheduler values",
           std::abs(a120 - 0.6) < 1e-9 && std::abs(a1 - 0.9979) < 1e-3 &&
               a200 >= 0.2 && a200 <= 0.22 && monotone,
           buf);
}

void criterion_7_ledger() {
    Rng rng(41);
    ScoreTable scores;
    const int n = 120;  // 3 classes x 40
    scores.rep.resize(n);
    scores.div.resize(n);
    std::vector<std::uint32_t> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        scores.rep(i) = rng.uniform();
        scores.div(i) = rng.uniform();
        labels[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i / 40);
    }
    scores.rep_raw = scores.rep;
    scores.div_raw = scores.div;

    SelectionConfig cfg;  // p=0.3, T=200, rho=0.15 defaults
    const SelectionTrace trace = run_schedule(scores, labels, 3, cfg);

    const long used = std::accumulate(trace.usage.begin(), trace.usage.end(), 0L);
    long selected = 0;
    for (const auto& s : trace.subsets) selected += static_cast<long>(s.size());

    const int refine = refinement_epoch_count(cfg);
    bool refine_ok = refine == 30;  // ceil(0.15*200)
    for (std::size_t t = trace.subsets.size() - 30; t < trace.subsets.size(); ++t)
        if (trace.subsets[t].size() != static_cast<std::size_t>(n)) refine_ok = false;

    bool quota_ok = true;
    for (std::size_t t = 0; t < trace.subsets.size() - 30; ++t) {
        std::vector<int> per_class(3, 0);
        for (int i : trace.subsets[t]) ++per_class[labels[static_cast<std::size_t>(i)]];
        for (int c = 0; c < 3; ++c)
            if (per_class[c] != 12) quota_ok = false;  // floor(0.3*40)
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "sum(usage)=%ld sum|S(t)|=%ld, refinement=%d epochs, quota %s", used,
                  selected, refine, quota_ok ? "exact" : "violated");
    report(7, "ledger and cardinality identities",
           used == selected && refine_ok && quota_ok, buf);
}

void criterion_8_end_to_end() {
    const auto start = clock_type::now();
    SyntheticSpec spec;
    spec.class_count = 10;
    spec.samples_per_class = 200;  // N = 2000
    spec.seed = derive_seed(8, "c8-data");
    const Dataset ds = generate_synthetic(spec).data;

    SaeTrainConfig sae;
    sae.latent_dim = 128;
    sae.sparsity_budget = 8;
    sae.epochs = 10;
    sae.learning_rate = 5e-3;
    sae.seed = derive_seed(8, "c8-sae");
    const SaeModel model = train_sae(ds, sae).model;
    const ScoreTable scores =
        build_score_table(encode_all(model, ds), ds.labels, ds.class_count, 0.1);

    ExperimentConfig full;
    full.method = ExperimentConfig::Method::Full;
    full.selection.selection_ratio = 1.0;
    full.selection.refinement_frac = 0.0;
    full.selection.total_epochs = 100;
    full.hyper.seed = derive_seed(8, "c8-trainer");
    const ExperimentReport full_report = run_experiment(ds, nullptr, full, &ds);

    ExperimentConfig method;
    method.method = ExperimentConfig::Method::Score;
    method.selection.selection_ratio = 0.3;
    method.selection.refinement_frac = 0.15;
    method.selection.total_epochs = 100;
    method.hyper.seed = full.hyper.seed;
    const ExperimentReport method_report = run_experiment(ds, &scores, method, &ds);

    const double visit_ratio = static_cast<double>(method_report.sample_visits) /
                               static_cast<double>(full_report.sample_visits);
    const double gap = full_report.final_accuracy - method_report.final_accuracy;
    const long ms = ms_since(start);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "accuracy %.4f vs full %.4f (gap %.4f), visit ratio %.4f, %ld ms",
                  method_report.final_accuracy, full_report.final_accuracy, gap, visit_ratio,
                  ms);
    report(8, "end-to-end efficiency",
           gap <= 0.02 && visit_ratio <= 0.45 && ms < 300000, buf);
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(entry.path(), dir).string()] = ss.str();
    }
    return files;
}

void criterion_9_determinism(const std::string& cli) {
    if (cli.empty()) {
        report(9, "cli determinism", false, "no CLI binary path supplied");
        return;
    }
    const fs::path dir = fs::temp_directory_path() / "selekt_accept_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path config = dir / "config.json";
    std::ofstream(config) << R"({
      "seed": 17,
      "synthetic": {"samples_per_class": 100},
      "sae": {"epochs": 5},
      "selection": {"total_epochs": 20},
      "trainer": {"method": "score"},
      "paths": {"out_dir": ")" << (dir / "out").string() << R"("}
    })";

    const std::vector<std::string> commands{
        "gen-data", "train-sae", "encode",         "score",
        "simulate-schedule",     "mmd-sweep",      "run-experiment",
        "check-theorem"};
    auto run_all = [&]() {
        for (const auto& cmd : commands) {
            const std::string line =
                cli + " " + cmd + " --config " + config.string() + " > /dev/null";
            if (std::system(line.c_str()) != 0) return false;
        }
        return true;
    };

    if (!run_all()) {
        report(9, "cli determinism", false, "a command failed on the first pass");
        return;
    }
    const auto first = snapshot_dir(dir / "out");
    if (!run_all()) {
        report(9, "cli determinism", false, "a command failed on the rerun");
        return;
    }
    const auto second = snapshot_dir(dir / "out");

    bool identical = first.size() == second.size();
    std::string mismatch;
    if (identical) {
        for (const auto& [name, bytes] : first) {
            const auto it = second.find(name);
            if (it == second.end() || it->second != bytes) {
                identical = false;
                mismatch = name;
                break;
            }
        }
    }
    fs::remove_all(dir);
    report(9, "cli determinism", identical,
           identical ? std::to_string(first.size()) + " files byte-identical on rerun"
                     : "mismatch in " + (mismatch.empty() ? "file set" : mismatch));
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    criterion_1_theorem();
    criterion_2_gradient_bias();
    criterion_3_gini_ordering();
    criterion_4_mmd();
    criterion_5_sae();
    criterion_6_scheduler();
    criterion_7_ledger();
    criterion_8_end_to_end();
    criterion_9_determinism(cli);
    if (failures == 0) {
        std::printf("all 9 acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria failed\n", failures);
    return 1;
}
