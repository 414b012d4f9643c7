#include "selekt/config.hpp"
#include "selekt/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace selekt {

namespace {

using nlohmann::json;

class ConfigReader {
public:
    explicit ConfigReader(const json& root) : root_(root) {}

    // returns the section object (empty if absent) and remembers its known keys
    const json* section(const std::string& name) {
        known_top_.insert(name);
        auto it = root_.find(name);
        if (it == root_.end()) return nullptr;
        if (!it->is_object()) {
            errors_.push_back("$." + name + ": expected an object");
            return nullptr;
        }
        return &*it;
    }

    template <typename T>
    void get(const json* sec, const std::string& section_name, const std::string& key,
             T& out) {
        known_keys_[section_name].insert(key);
        if (!sec) return;
        auto it = sec->find(key);
        if (it == sec->end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            errors_.push_back("$." + section_name + "." + key + ": wrong type");
        }
    }

    void check_range(bool ok, const std::string& path, const std::string& what) {
        if (!ok) errors_.push_back(path + ": " + what);
    }

    void check_unknown_keys() {
        for (auto it = root_.begin(); it != root_.end(); ++it) {
            if (it.key() == "seed") continue;
            if (!known_top_.count(it.key())) {
                errors_.push_back("$." + it.key() + ": unknown key");
                continue;
            }
            if (!it->is_object()) continue;
            const auto& known = known_keys_[it.key()];
            for (auto kv = it->begin(); kv != it->end(); ++kv)
                if (!known.count(kv.key()))
                    errors_.push_back("$." + it.key() + "." + kv.key() + ": unknown key");
        }
    }

    void finish() const {
        if (errors_.empty()) return;
        std::string msg = "config errors:";
        for (const auto& e : errors_) msg += "\n  " + e;
        throw std::runtime_error(msg);
    }

private:
    const json& root_;
    std::set<std::string> known_top_;
    std::map<std::string, std::set<std::string>> known_keys_;
    std::vector<std::string> errors_;
};

} // namespace

RunConfig parse_config_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }
    if (!root.is_object()) throw std::runtime_error("config root must be a JSON object");

    RunConfig cfg;
    ConfigReader r(root);

    if (auto it = root.find("seed"); it != root.end()) {
        if (it->is_number_unsigned())
            cfg.seed = it->get<std::uint64_t>();
        else
            r.check_range(false, "$.seed", "must be an unsigned integer");
    }

    const json* syn = r.section("synthetic");
    r.get(syn, "synthetic", "class_count", cfg.synthetic.class_count);
    r.get(syn, "synthetic", "samples_per_class", cfg.synthetic.samples_per_class);
    r.get(syn, "synthetic", "feature_dim", cfg.synthetic.feature_dim);
    r.get(syn, "synthetic", "common_factor_count", cfg.synthetic.common_factor_count);
    r.get(syn, "synthetic", "rare_factor_count", cfg.synthetic.rare_factor_count);
    r.get(syn, "synthetic", "common_activation_prob", cfg.synthetic.common_activation_prob);
    r.get(syn, "synthetic", "rare_activation_prob", cfg.synthetic.rare_activation_prob);
    r.get(syn, "synthetic", "noise_sigma", cfg.synthetic.noise_sigma);
    r.get(syn, "synthetic", "label_noise_rate", cfg.synthetic_label_noise_rate);
    r.check_range(cfg.synthetic.class_count >= 1, "$.synthetic.class_count", "must be >= 1");
    r.check_range(cfg.synthetic.samples_per_class >= 1, "$.synthetic.samples_per_class",
                  "must be >= 1");
    r.check_range(cfg.synthetic.feature_dim >= 1, "$.synthetic.feature_dim", "must be >= 1");
    r.check_range(cfg.synthetic.common_activation_prob >= 0.0 &&
                      cfg.synthetic.common_activation_prob <= 1.0,
                  "$.synthetic.common_activation_prob", "must be in [0,1]");
    r.check_range(cfg.synthetic.rare_activation_prob >= 0.0 &&
                      cfg.synthetic.rare_activation_prob <= 1.0,
                  "$.synthetic.rare_activation_prob", "must be in [0,1]");
    r.check_range(cfg.synthetic.common_activation_prob > cfg.synthetic.rare_activation_prob,
                  "$.synthetic.common_activation_prob",
                  "must exceed rare_activation_prob");
    r.check_range(cfg.synthetic.noise_sigma >= 0.0, "$.synthetic.noise_sigma",
                  "must be >= 0");
    r.check_range(cfg.synthetic_label_noise_rate >= 0.0 &&
                      cfg.synthetic_label_noise_rate <= 1.0,
                  "$.synthetic.label_noise_rate", "must be in [0,1]");

    const json* sae = r.section("sae");
    r.get(sae, "sae", "latent_dim", cfg.sae.latent_dim);
    r.get(sae, "sae", "sparsity_budget", cfg.sae.sparsity_budget);
    r.get(sae, "sae", "epochs", cfg.sae.epochs);
    r.get(sae, "sae", "batch_size", cfg.sae.batch_size);
    r.get(sae, "sae", "learning_rate", cfg.sae.learning_rate);
    r.get(sae, "sae", "revival_weight", cfg.sae.revival_weight);
    r.get(sae, "sae", "dead_check_interval", cfg.sae.dead_check_interval);
    r.get(sae, "sae", "dead_window", cfg.sae.dead_window);
    r.get(sae, "sae", "clamp_negative_codes", cfg.sae.clamp_negative_codes);
    r.check_range(cfg.sae.latent_dim >= 0, "$.sae.latent_dim", "must be >= 0");
    r.check_range(cfg.sae.sparsity_budget >= 0, "$.sae.sparsity_budget", "must be >= 0");
    r.check_range(cfg.sae.epochs >= 0, "$.sae.epochs", "must be >= 0");
    r.check_range(cfg.sae.batch_size >= 1, "$.sae.batch_size", "must be >= 1");
    r.check_range(cfg.sae.learning_rate > 0.0, "$.sae.learning_rate", "must be > 0");
    r.check_range(cfg.sae.revival_weight >= 0.0, "$.sae.revival_weight", "must be >= 0");
    r.check_range(cfg.sae.dead_check_interval >= 1, "$.sae.dead_check_interval",
                  "must be >= 1");

    const json* sco = r.section("scoring");
    r.get(sco, "scoring", "top_frac", cfg.scoring.top_frac);
    r.check_range(cfg.scoring.top_frac > 0.0 && cfg.scoring.top_frac <= 1.0,
                  "$.scoring.top_frac", "must be in (0,1]");

    const json* sel = r.section("selection");
    r.get(sel, "selection", "selection_ratio", cfg.selection.selection_ratio);
    r.get(sel, "selection", "total_epochs", cfg.selection.total_epochs);
    r.get(sel, "selection", "refinement_frac", cfg.selection.refinement_frac);
    r.get(sel, "selection", "penalty_weight", cfg.selection.penalty_weight);
    r.get(sel, "selection", "alpha_min", cfg.selection.alpha_min);
    r.get(sel, "selection", "mid_frac", cfg.selection.mid_frac);
    r.get(sel, "selection", "sharpness", cfg.selection.sharpness);
    r.get(sel, "selection", "class_balanced", cfg.selection.class_balanced);
    r.check_range(cfg.selection.selection_ratio > 0.0 && cfg.selection.selection_ratio <= 1.0,
                  "$.selection.selection_ratio", "must be in (0,1]");
    r.check_range(cfg.selection.total_epochs >= 1, "$.selection.total_epochs",
                  "must be >= 1");
    r.check_range(cfg.selection.refinement_frac >= 0.0 && cfg.selection.refinement_frac < 1.0,
                  "$.selection.refinement_frac", "must be in [0,1)");
    r.check_range(cfg.selection.penalty_weight >= 0.0, "$.selection.penalty_weight",
                  "must be >= 0");
    r.check_range(cfg.selection.alpha_min >= 0.0 && cfg.selection.alpha_min <= 1.0,
                  "$.selection.alpha_min", "must be in [0,1]");
    r.check_range(cfg.selection.sharpness >= 0.0, "$.selection.sharpness", "must be >= 0");

    const json* mmd = r.section("mmd");
    r.get(mmd, "mmd", "gamma", cfg.mmd.gamma);
    r.get(mmd, "mmd", "subsample_cap", cfg.mmd.subsample_cap);
    r.get(mmd, "mmd", "unbiased", cfg.mmd.unbiased);
    r.get(mmd, "mmd", "ratios", cfg.mmd_ratios);
    r.check_range(cfg.mmd.gamma >= 0.0, "$.mmd.gamma", "must be >= 0 (0 selects 1/D)");
    r.check_range(cfg.mmd.subsample_cap >= 2, "$.mmd.subsample_cap", "must be >= 2");
    for (double p : cfg.mmd_ratios)
        r.check_range(p > 0.0 && p <= 1.0, "$.mmd.ratios", "every ratio must be in (0,1]");

    const json* tr = r.section("trainer");
    r.get(tr, "trainer", "learning_rate", cfg.trainer.learning_rate);
    r.get(tr, "trainer", "batch_size", cfg.trainer.batch_size);
    r.get(tr, "trainer", "weight_decay", cfg.trainer.weight_decay);
    std::string arch = "linear";
    std::string method = "score";
    r.get(tr, "trainer", "arch", arch);
    r.get(tr, "trainer", "hidden", cfg.trainer_hidden);
    r.get(tr, "trainer", "method", method);
    r.check_range(cfg.trainer.learning_rate > 0.0, "$.trainer.learning_rate",
                  "must be > 0");
    r.check_range(cfg.trainer.batch_size >= 1, "$.trainer.batch_size", "must be >= 1");
    r.check_range(cfg.trainer.weight_decay >= 0.0, "$.trainer.weight_decay",
                  "must be >= 0");
    if (arch == "linear") {
        cfg.trainer_arch = Arch::Linear;
    } else if (arch == "one_hidden") {
        cfg.trainer_arch = Arch::OneHidden;
        if (cfg.trainer_hidden < 1) cfg.trainer_hidden = 32;
    } else {
        r.check_range(false, "$.trainer.arch", "must be 'linear' or 'one_hidden'");
    }
    if (method == "score") {
        cfg.experiment_method = ExperimentConfig::Method::Score;
    } else if (method == "loss_greedy") {
        cfg.experiment_method = ExperimentConfig::Method::LossGreedy;
    } else if (method == "full") {
        cfg.experiment_method = ExperimentConfig::Method::Full;
    } else {
        r.check_range(false, "$.trainer.method",
                      "must be 'score', 'loss_greedy' or 'full'");
    }

    const json* paths = r.section("paths");
    r.get(paths, "paths", "dataset", cfg.paths.dataset);
    r.get(paths, "paths", "eval_dataset", cfg.paths.eval_dataset);
    r.get(paths, "paths", "sae_model", cfg.paths.sae_model);
    r.get(paths, "paths", "codes", cfg.paths.codes);
    r.get(paths, "paths", "scores", cfg.paths.scores);
    r.get(paths, "paths", "out_dir", cfg.paths.out_dir);

    r.check_unknown_keys();
    r.finish();

    apply_global_seed(cfg, cfg.seed);
    return cfg;
}

void apply_global_seed(RunConfig& cfg, std::uint64_t seed) {
    // section seeds fan out from the global seed via fixed labels
    cfg.seed = seed;
    cfg.synthetic.seed = derive_seed(seed, "synthetic");
    cfg.sae.seed = derive_seed(seed, "sae");
    cfg.selection.seed = derive_seed(seed, "selection");
    cfg.mmd.seed = derive_seed(seed, "mmd");
    cfg.trainer.seed = derive_seed(seed, "trainer");
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

std::string config_echo(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["synthetic"] = {{"class_count", cfg.synthetic.class_count},
                      {"samples_per_class", cfg.synthetic.samples_per_class},
                      {"feature_dim", cfg.synthetic.feature_dim},
                      {"common_factor_count", cfg.synthetic.common_factor_count},
                      {"rare_factor_count", cfg.synthetic.rare_factor_count},
                      {"common_activation_prob", cfg.synthetic.common_activation_prob},
                      {"rare_activation_prob", cfg.synthetic.rare_activation_prob},
                      {"noise_sigma", cfg.synthetic.noise_sigma},
                      {"label_noise_rate", cfg.synthetic_label_noise_rate}};
    j["sae"] = {{"latent_dim", cfg.sae.latent_dim},
                {"sparsity_budget", cfg.sae.sparsity_budget},
                {"epochs", cfg.sae.epochs},
                {"batch_size", cfg.sae.batch_size},
                {"learning_rate", cfg.sae.learning_rate},
                {"revival_weight", cfg.sae.revival_weight},
                {"dead_check_interval", cfg.sae.dead_check_interval},
                {"dead_window", cfg.sae.dead_window},
                {"clamp_negative_codes", cfg.sae.clamp_negative_codes}};
    j["scoring"] = {{"top_frac", cfg.scoring.top_frac}};
    j["selection"] = {{"selection_ratio", cfg.selection.selection_ratio},
                      {"total_epochs", cfg.selection.total_epochs},
                      {"refinement_frac", cfg.selection.refinement_frac},
                      {"penalty_weight", cfg.selection.penalty_weight},
                      {"alpha_min", cfg.selection.alpha_min},
                      {"mid_frac", cfg.selection.mid_frac},
                      {"sharpness", cfg.selection.sharpness},
                      {"class_balanced", cfg.selection.class_balanced}};
    j["mmd"] = {{"gamma", cfg.mmd.gamma},
                {"subsample_cap", cfg.mmd.subsample_cap},
                {"unbiased", cfg.mmd.unbiased},
                {"ratios", cfg.mmd_ratios}};
    j["trainer"] = {{"learning_rate", cfg.trainer.learning_rate},
                    {"batch_size", cfg.trainer.batch_size},
                    {"weight_decay", cfg.trainer.weight_decay},
                    {"arch", cfg.trainer_arch == Arch::Linear ? "linear" : "one_hidden"},
                    {"hidden", cfg.trainer_hidden},
                    {"method", cfg.experiment_method == ExperimentConfig::Method::Score
                                   ? "score"
                                   : cfg.experiment_method ==
                                             ExperimentConfig::Method::LossGreedy
                                         ? "loss_greedy"
                                         : "full"}};
    j["paths"] = {{"dataset", cfg.paths.dataset},
                  {"eval_dataset", cfg.paths.eval_dataset},
                  {"sae_model", cfg.paths.sae_model},
                  {"codes", cfg.paths.codes},
                  {"scores", cfg.paths.scores},
                  {"out_dir", cfg.paths.out_dir}};
    return j.dump(2);
}

} // namespace selekt
