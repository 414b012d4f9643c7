#include "selekt/trainer.hpp"
#include "selekt/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace selekt {

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
    const Eigen::VectorXd e = shifted.array().exp();
    return e / e.sum();
}

struct Forward {
    Eigen::VectorXd hidden_act;  // hidden arch only
    Eigen::VectorXd proba;
};

Forward forward(const ToyModel& model, const Eigen::VectorXd& x) {
    Forward f;
    if (model.arch == Arch::Linear) {
        f.proba = softmax(model.w1 * x + model.b1);
    } else {
        f.hidden_act = (model.w1 * x + model.b1).array().tanh();
        f.proba = softmax(model.w2 * f.hidden_act + model.b2);
    }
    return f;
}

struct ModelGrads {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
};

ModelGrads zero_grads(const ToyModel& model) {
    ModelGrads g;
    g.w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
    g.b1 = Eigen::VectorXd::Zero(model.b1.size());
    if (model.arch == Arch::OneHidden) {
        g.w2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
        g.b2 = Eigen::VectorXd::Zero(model.b2.size());
    }
    return g;
}

// cross-entropy gradient of one sample, accumulated with the given weight
double accumulate_sample(const ToyModel& model, const Eigen::VectorXd& x,
                         std::uint32_t label, double weight, ModelGrads& grads) {
    const Forward f = forward(model, x);
    const double loss = -std::log(std::max(f.proba(label), 1e-300));

    Eigen::VectorXd d_logits = f.proba;
    d_logits(label) -= 1.0;
    d_logits *= weight;

    if (model.arch == Arch::Linear) {
        grads.w1 += d_logits * x.transpose();
        grads.b1 += d_logits;
    } else {
        grads.w2 += d_logits * f.hidden_act.transpose();
        grads.b2 += d_logits;
        const Eigen::VectorXd d_pre =
            (model.w2.transpose() * d_logits).array() *
            (1.0 - f.hidden_act.array().square());
        grads.w1 += d_pre.matrix() * x.transpose();
        grads.b1 += d_pre;
    }
    return loss;
}

} // namespace

long ToyModel::param_count() const {
    long p = w1.size() + b1.size();
    if (arch == Arch::OneHidden) p += w2.size() + b2.size();
    return p;
}

ToyModel init_model(Arch arch, int input_dim, int class_count, int hidden,
                    std::uint64_t seed) {
    if (input_dim < 1 || class_count < 1)
        throw std::invalid_argument("init_model: invalid dimensions");
    if (arch == Arch::OneHidden && hidden < 1)
        throw std::invalid_argument("init_model: hidden width must be >= 1");

    Rng rng(derive_seed(seed, "toy-init"));
    ToyModel model;
    model.arch = arch;
    model.input_dim = input_dim;
    model.class_count = class_count;
    model.hidden = arch == Arch::Linear ? 0 : hidden;

    const int rows1 = arch == Arch::Linear ? class_count : hidden;
    const double scale1 = 0.1 / std::sqrt(static_cast<double>(input_dim));
    model.w1.resize(rows1, input_dim);
    for (int r = 0; r < rows1; ++r)
        for (int c = 0; c < input_dim; ++c) model.w1(r, c) = scale1 * rng.normal();
    model.b1 = Eigen::VectorXd::Zero(rows1);

    if (arch == Arch::OneHidden) {
        const double scale2 = 0.1 / std::sqrt(static_cast<double>(hidden));
        model.w2.resize(class_count, hidden);
        for (int r = 0; r < class_count; ++r)
            for (int c = 0; c < hidden; ++c) model.w2(r, c) = scale2 * rng.normal();
        model.b2 = Eigen::VectorXd::Zero(class_count);
    }
    return model;
}

Eigen::VectorXd predict_proba(const ToyModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.input_dim)
        throw std::invalid_argument("predict_proba: dimension mismatch");
    return forward(model, x).proba;
}

double train_one_epoch(ToyModel& model, const Dataset& ds, const std::vector<int>& subset,
                       const TrainHyper& hyper, int epoch) {
    if (subset.empty()) throw std::invalid_argument("train_one_epoch: empty subset");
    for (int i : subset)
        if (i < 0 || i >= ds.n())
            throw std::invalid_argument("train_one_epoch: subset index out of range");

    Rng rng(derive_seed(hyper.seed + static_cast<std::uint64_t>(epoch) * 0x9e3779b97f4a7c15ull,
                        "train-epoch"));
    std::vector<int> order = subset;
    rng.shuffle(order);

    double total_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
        const std::size_t end =
            std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
        const double inv_b = 1.0 / static_cast<double>(end - start);

        ModelGrads grads = zero_grads(model);
        for (std::size_t i = start; i < end; ++i) {
            const int idx = order[i];
            total_loss += accumulate_sample(model, ds.features.row(idx).transpose(),
                                            ds.labels[static_cast<std::size_t>(idx)],
                                            inv_b, grads);
        }

        const double lr = hyper.learning_rate;
        if (hyper.weight_decay != 0.0) {
            grads.w1 += hyper.weight_decay * model.w1;
            if (model.arch == Arch::OneHidden) grads.w2 += hyper.weight_decay * model.w2;
        }
        model.w1 -= lr * grads.w1;
        model.b1 -= lr * grads.b1;
        if (model.arch == Arch::OneHidden) {
            model.w2 -= lr * grads.w2;
            model.b2 -= lr * grads.b2;
        }
    }
    return total_loss / static_cast<double>(order.size());
}

std::pair<double, double> evaluate(const ToyModel& model, const Dataset& ds) {
    if (ds.n() == 0) throw std::invalid_argument("evaluate: empty dataset");
    long correct = 0;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const Eigen::VectorXd p = forward(model, ds.features.row(i).transpose()).proba;
        Eigen::Index argmax = 0;
        p.maxCoeff(&argmax);  // Eigen returns the first maximum: lower index wins
        const std::uint32_t label = ds.labels[static_cast<std::size_t>(i)];
        if (static_cast<std::uint32_t>(argmax) == label) ++correct;
        loss += -std::log(std::max(p(label), 1e-300));
    }
    return {static_cast<double>(correct) / static_cast<double>(ds.n()),
            loss / static_cast<double>(ds.n())};
}

Eigen::VectorXd per_sample_losses(const ToyModel& model, const Dataset& ds) {
    Eigen::VectorXd losses(ds.n());
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const Eigen::VectorXd p = forward(model, ds.features.row(i).transpose()).proba;
        losses(i) = -std::log(std::max(p(ds.labels[static_cast<std::size_t>(i)]), 1e-300));
    }
    return losses;
}

Eigen::MatrixXd per_sample_gradients(const ToyModel& model, const Dataset& ds) {
    Eigen::MatrixXd out(ds.n(), model.param_count());
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        ModelGrads grads = zero_grads(model);
        accumulate_sample(model, ds.features.row(i).transpose(),
                          ds.labels[static_cast<std::size_t>(i)], 1.0, grads);
        Eigen::Index at = 0;
        auto flatten = [&](const Eigen::MatrixXd& m) {
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                for (Eigen::Index c = 0; c < m.cols(); ++c) out(i, at++) = m(r, c);
        };
        flatten(grads.w1);
        flatten(grads.b1);
        if (model.arch == Arch::OneHidden) {
            flatten(grads.w2);
            flatten(grads.b2);
        }
    }
    return out;
}

ExperimentReport run_experiment(const Dataset& train, const ScoreTable* scores,
                                const ExperimentConfig& cfg, const Dataset* eval_ds) {
    cfg.selection.validate();
    if (cfg.method == ExperimentConfig::Method::Score && scores == nullptr)
        throw std::invalid_argument("run_experiment: score method needs a score table");

    const Dataset& eval_set = eval_ds ? *eval_ds : train;
    const auto n = static_cast<std::size_t>(train.n());
    const int total = cfg.selection.total_epochs;
    const int refine_from = total - refinement_epoch_count(cfg.selection);

    ToyModel model = init_model(cfg.arch, static_cast<int>(train.dim()),
                                static_cast<int>(train.class_count), cfg.hidden,
                                cfg.hyper.seed);

    ExperimentReport report;
    report.trace.usage.assign(n, 0);
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);

    for (int t = 1; t <= total; ++t) {
        std::vector<int> subset;
        if (t > refine_from || cfg.method == ExperimentConfig::Method::Full ||
            cfg.selection.selection_ratio >= 1.0) {
            subset = all;
        } else if (cfg.method == ExperimentConfig::Method::Score) {
            const Eigen::VectorXd h =
                combined_scores(*scores, report.trace.usage, t, cfg.selection);
            subset = select_epoch(h, train.labels, train.class_count, cfg.selection);
        } else {
            const Eigen::VectorXd losses = per_sample_losses(model, train);
            subset = loss_greedy_select(losses, train.labels, train.class_count,
                                        cfg.selection.selection_ratio,
                                        cfg.selection.class_balanced);
        }

        const double train_loss = train_one_epoch(model, train, subset, cfg.hyper, t);
        for (int i : subset) ++report.trace.usage[static_cast<std::size_t>(i)];
        report.sample_visits += static_cast<long>(subset.size());

        EpochRecord rec;
        rec.epoch = t;
        rec.alpha = alpha_weight(t, cfg.selection);
        rec.subset_size = static_cast<long>(subset.size());
        rec.train_loss = train_loss;
        rec.eval_accuracy = evaluate(model, eval_set).first;
        report.epochs.push_back(rec);

        report.trace.alphas.push_back(rec.alpha);
        report.trace.subsets.push_back(std::move(subset));
    }

    const auto [acc, loss] = evaluate(model, eval_set);
    report.final_accuracy = acc;
    report.final_loss = loss;
    return report;
}

void export_report_json(const ExperimentReport& report, const std::string& config_echo,
                        const std::filesystem::path& path) {
    nlohmann::json j;
    j["config"] = config_echo.empty() ? nlohmann::json::object()
                                      : nlohmann::json::parse(config_echo);
    j["epochs"] = nlohmann::json::array();
    for (const auto& e : report.epochs) {
        j["epochs"].push_back({{"epoch", e.epoch},
                               {"alpha", e.alpha},
                               {"subset_size", e.subset_size},
                               {"train_loss", e.train_loss},
                               {"eval_accuracy", e.eval_accuracy}});
    }
    j["totals"] = {{"sample_visits", report.sample_visits}};
    j["final"] = {{"accuracy", report.final_accuracy}, {"loss", report.final_loss}};

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

} // namespace selekt
