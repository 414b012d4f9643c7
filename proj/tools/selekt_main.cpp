#include "selekt/analysis.hpp"
#include "selekt/config.hpp"
#include "selekt/dataset.hpp"
#include "selekt/rng.hpp"
#include "selekt/sae.hpp"
#include "selekt/scoring.hpp"
#include "selekt/selector.hpp"
#include "selekt/trainer.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace selekt;

namespace {

struct ResolvedPaths {
    fs::path out_dir;
    fs::path dataset;
    fs::path eval_dataset;  // empty when unset
    fs::path sae_model;
    fs::path codes;
    fs::path scores;
};

ResolvedPaths resolve_paths(const RunConfig& cfg) {
    ResolvedPaths p;
    p.out_dir = cfg.paths.out_dir.empty() ? fs::path(".") : fs::path(cfg.paths.out_dir);
    auto pick = [&](const std::string& explicit_path, const char* fallback) {
        return explicit_path.empty() ? p.out_dir / fallback : fs::path(explicit_path);
    };
    p.dataset = pick(cfg.paths.dataset, "dataset.bin");
    p.sae_model = pick(cfg.paths.sae_model, "sae_model.bin");
    p.codes = pick(cfg.paths.codes, "codes.bin");
    p.scores = pick(cfg.paths.scores, "scores.csv");
    if (!cfg.paths.eval_dataset.empty()) p.eval_dataset = cfg.paths.eval_dataset;
    return p;
}

void write_echo(const RunConfig& cfg, const fs::path& out_dir) {
    std::ofstream out(out_dir / "config_resolved.json", std::ios::trunc);
    out << config_echo(cfg) << "\n";
}

ScoreTable scores_for(const RunConfig& cfg, const ResolvedPaths& paths,
                      std::vector<std::uint32_t>* labels_out) {
    if (fs::exists(paths.scores)) return load_scores_csv(paths.scores, labels_out);
    const Dataset ds = load_dataset(paths.dataset);
    const SaeModel model = load_sae(paths.sae_model);
    const Eigen::MatrixXd codes = encode_all(model, ds);
    if (labels_out) *labels_out = ds.labels;
    return build_score_table(codes, ds.labels, ds.class_count, cfg.scoring.top_frac);
}

int cmd_gen_data(const RunConfig& cfg, const ResolvedPaths& paths) {
    SyntheticData sd = generate_synthetic(cfg.synthetic);
    if (cfg.synthetic_label_noise_rate > 0.0)
        sd.data = inject_label_noise(sd.data, cfg.synthetic_label_noise_rate,
                                     derive_seed(cfg.seed, "label-noise"));
    save_dataset(sd.data, paths.dataset);
    save_factor_sidecar(sd, paths.out_dir / "factors.csv");
    std::cout << "wrote " << paths.dataset.string() << " (N=" << sd.data.n()
              << ", D=" << sd.data.dim() << ", C=" << sd.data.class_count << ")\n";
    return 0;
}

int cmd_train_sae(const RunConfig& cfg, const ResolvedPaths& paths) {
    const Dataset ds = load_dataset(paths.dataset);
    SaeTrainConfig tc = cfg.sae;
    const SaeTrainResult result = train_sae(ds, tc);
    save_sae(result.model, paths.sae_model);
    save_loss_trace_csv(result, paths.out_dir / "sae_loss_trace.csv");
    std::cout << "wrote " << paths.sae_model.string() << " (N_lat="
              << result.model.latent_dim() << ", k=" << result.model.sparsity_budget
              << ")\n";
    return 0;
}

int cmd_encode(const RunConfig&, const ResolvedPaths& paths) {
    const Dataset ds = load_dataset(paths.dataset);
    const SaeModel model = load_sae(paths.sae_model);
    save_codes(encode_all(model, ds), paths.codes);
    std::cout << "wrote " << paths.codes.string() << "\n";
    return 0;
}

int cmd_score(const RunConfig& cfg, const ResolvedPaths& paths) {
    const Dataset ds = load_dataset(paths.dataset);
    Eigen::MatrixXd codes;
    if (fs::exists(paths.codes)) {
        codes = load_codes(paths.codes);
    } else {
        codes = encode_all(load_sae(paths.sae_model), ds);
    }
    const ActivationStats stats =
        compute_activation_stats(codes, ds.labels, ds.class_count);
    const CommonFactorSet factors = common_factor_set(stats, cfg.scoring.top_frac);
    ScoreTable table;
    table.rep_raw = rep_scores(codes, factors);
    table.div_raw = div_scores(codes, stats);
    table.rep = minmax_normalize(table.rep_raw);
    table.div = minmax_normalize(table.div_raw);
    export_scores_csv(table, ds.labels, paths.scores);
    export_stats_csv(stats, factors, paths.out_dir / "unit_stats.csv");
    std::cout << "wrote " << paths.scores.string() << "\n";
    return 0;
}

int cmd_simulate_schedule(const RunConfig& cfg, const ResolvedPaths& paths) {
    std::vector<std::uint32_t> labels;
    const ScoreTable scores = scores_for(cfg, paths, &labels);
    std::uint32_t class_count = 0;
    for (auto l : labels) class_count = std::max(class_count, l + 1);
    const SelectionTrace trace = run_schedule(scores, labels, class_count, cfg.selection);
    export_trace_csv(trace, paths.out_dir / "schedule_trace.csv");
    export_trace_binary(trace, paths.out_dir / "schedule_subsets.strc");
    export_usage_csv(trace.usage, paths.out_dir / "usage.csv");
    std::cout << "wrote schedule trace for " << trace.subsets.size() << " epochs\n";
    return 0;
}

int cmd_mmd_sweep(const RunConfig& cfg, const ResolvedPaths& paths) {
    const Dataset ds = load_dataset(paths.dataset);
    std::vector<std::uint32_t> labels;
    const ScoreTable scores = scores_for(cfg, paths, &labels);
    const Eigen::MatrixXd normalized = l2_normalize_rows(ds.features);

    std::ofstream out(paths.out_dir / "mmd_sweep.csv", std::ios::trunc);
    out << "ratio,method,mmd2\n";
    char buf[64];
    for (double p : cfg.mmd_ratios) {
        const auto rep_subset = repk_topk_subset(scores.rep_raw, ds.labels,
                                                 ds.class_count, p);
        if (rep_subset.empty()) continue;  // ratio too small for this dataset
        const auto m = static_cast<int>(
            std::max<std::size_t>(1, static_cast<std::size_t>(
                                         p * static_cast<double>(ds.n()))));
        const auto kc_subset = kcenter_greedy(normalized, m);

        auto rows_of = [&](const std::vector<int>& idx) {
            Eigen::MatrixXd sub(static_cast<Eigen::Index>(idx.size()), ds.dim());
            for (std::size_t i = 0; i < idx.size(); ++i)
                sub.row(static_cast<Eigen::Index>(i)) = normalized.row(idx[i]);
            return sub;
        };
        const double mmd_rep = mmd2(rows_of(rep_subset), normalized, cfg.mmd);
        const double mmd_kc = mmd2(rows_of(kc_subset), normalized, cfg.mmd);
        std::snprintf(buf, sizeof(buf), "%.17g", mmd_rep);
        out << p << ",rep_topk," << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", mmd_kc);
        out << p << ",kcenter," << buf << "\n";
    }
    std::cout << "wrote mmd_sweep.csv (" << cfg.mmd_ratios.size() << " ratios)\n";
    return 0;
}

int cmd_run_experiment(const RunConfig& cfg, const ResolvedPaths& paths) {
    const Dataset ds = load_dataset(paths.dataset);
    std::optional<Dataset> eval_ds;
    if (!paths.eval_dataset.empty()) eval_ds = load_dataset(paths.eval_dataset);

    ExperimentConfig ec;
    ec.method = cfg.experiment_method;
    ec.selection = cfg.selection;
    ec.hyper = cfg.trainer;
    ec.arch = cfg.trainer_arch;
    ec.hidden = cfg.trainer_hidden;

    std::optional<ScoreTable> scores;
    if (ec.method == ExperimentConfig::Method::Score)
        scores = scores_for(cfg, paths, nullptr);

    const ExperimentReport report = run_experiment(
        ds, scores ? &*scores : nullptr, ec, eval_ds ? &*eval_ds : nullptr);

    export_report_json(report, config_echo(cfg), paths.out_dir / "report.json");
    export_trace_csv(report.trace, paths.out_dir / "schedule_trace.csv");
    export_trace_binary(report.trace, paths.out_dir / "schedule_subsets.strc");
    export_usage_csv(report.trace.usage, paths.out_dir / "usage.csv");

    const Eigen::VectorXd pi = inclusion_frequency(report.trace);
    {
        std::ofstream out(paths.out_dir / "bias_report.csv", std::ios::trunc);
        out << "sample_index,pi,usage\n";
        char buf[64];
        for (Eigen::Index i = 0; i < pi.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", pi(i));
            out << i << ',' << buf << ','
                << report.trace.usage[static_cast<std::size_t>(i)] << "\n";
        }
    }
    {
        const FlatnessStats flat = usage_flatness(report.trace.usage);
        std::ofstream out(paths.out_dir / "flatness_summary.csv", std::ios::trunc);
        out << "gini,max_usage,min_usage,cv,sample_visits,final_accuracy\n";
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%ld,%.17g",
                      flat.gini, flat.max, flat.min, flat.cv, report.sample_visits,
                      report.final_accuracy);
        out << buf << "\n";
    }
    std::cout << "final accuracy " << report.final_accuracy << ", sample visits "
              << report.sample_visits << "\n";
    return 0;
}

int cmd_check_theorem(const RunConfig& cfg, const ResolvedPaths&) {
    const std::vector<double> lambdas{0.05, 0.2, 1.0};
    const TheoremCheckResult result = verify_anti_monopoly(10000, lambdas, cfg.seed);
    std::cout << result.violations << " violations / " << result.trials << " trials\n";
    return result.violations == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("SELEKT_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(threads)));

    CLI::App app{"dynamic data selection engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir_override;
    std::optional<std::uint64_t> seed_override;

    const std::vector<std::pair<std::string, int (*)(const RunConfig&, const ResolvedPaths&)>>
        commands = {{"gen-data", cmd_gen_data},
                    {"train-sae", cmd_train_sae},
                    {"encode", cmd_encode},
                    {"score", cmd_score},
                    {"simulate-schedule", cmd_simulate_schedule},
                    {"mmd-sweep", cmd_mmd_sweep},
                    {"run-experiment", cmd_run_experiment},
                    {"check-theorem", cmd_check_theorem}};

    int (*selected)(const RunConfig&, const ResolvedPaths&) = nullptr;
    for (const auto& [name, fn] : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_dir_override, "output directory");
        sub->add_option("--seed", seed_override, "global seed override");
        sub->callback([&selected, fn = fn]() { selected = fn; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg =
            config_path.empty() ? parse_config_json("{}") : parse_config(config_path);
        if (seed_override) apply_global_seed(cfg, *seed_override);
        if (!out_dir_override.empty()) cfg.paths.out_dir = out_dir_override;
        const ResolvedPaths paths = resolve_paths(cfg);
        fs::create_directories(paths.out_dir);
        write_echo(cfg, paths.out_dir);
        return selected(cfg, paths);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
