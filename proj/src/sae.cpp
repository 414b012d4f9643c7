#include "selekt/sae.hpp"
#include "selekt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace selekt {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'E', '1'};

std::vector<int> topk_support(const Eigen::VectorXd& z, int k) {
    const int n = static_cast<int>(z.size());
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double aa = std::abs(z(a)), ab = std::abs(z(b));
        if (aa != ab) return aa > ab;
        return a < b;
    });
    idx.resize(static_cast<std::size_t>(std::min(k, n)));
    return idx;
}

} // namespace

Eigen::VectorXd topk_mask(const Eigen::VectorXd& z, int k) {
    if (k < 0 || k > z.size()) throw std::invalid_argument("topk_mask: k out of range");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(z.size());
    for (int j : topk_support(z, k)) out(j) = z(j);
    return out;
}

Eigen::VectorXd encode(const SaeModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.input_dim())
        throw std::invalid_argument("encode: dimension mismatch");
    Eigen::VectorXd z = topk_mask(model.encoder_weights * x + model.encoder_bias,
                                  model.sparsity_budget);
    if (model.clamp_negative_codes) z = z.cwiseMax(0.0);
    return z;
}

Eigen::VectorXd decode(const SaeModel& model, const Eigen::VectorXd& z) {
    if (z.size() != model.latent_dim())
        throw std::invalid_argument("decode: dimension mismatch");
    return model.encoder_weights.transpose() * z + model.decoder_bias;
}

std::vector<int> detect_dead_units(const std::vector<long>& activation_counts) {
    std::vector<int> dead;
    for (std::size_t j = 0; j < activation_counts.size(); ++j)
        if (activation_counts[j] == 0) dead.push_back(static_cast<int>(j));
    return dead;
}

RevivalTerms revival_terms(const Eigen::MatrixXd& batch, const SaeModel& model,
                           const std::vector<int>& dead) {
    if (batch.rows() == 0) throw std::invalid_argument("revival_terms: empty batch");
    RevivalTerms out;
    out.dead_units = dead;
    for (int j : dead) {
        int best = 0;
        double best_pre = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < batch.rows(); ++i) {
            const double pre =
                model.encoder_weights.row(j).dot(batch.row(i)) + model.encoder_bias(j);
            if (pre > best_pre) {  // ties keep the lower batch index
                best_pre = pre;
                best = static_cast<int>(i);
            }
        }
        out.sample_index.push_back(best);
        const Eigen::VectorXd x_rev = batch.row(best).transpose();
        const Eigen::VectorXd xhat =
            best_pre * model.encoder_weights.row(j).transpose() + model.decoder_bias;
        out.loss += (x_rev - xhat).squaredNorm();
    }
    return out;
}

SaeGradients sae_batch_gradients(const SaeModel& model, const Eigen::MatrixXd& batch,
                                 const std::vector<int>& dead, double revival_weight) {
    const Eigen::Index b = batch.rows();
    const Eigen::Index nlat = model.latent_dim();
    SaeGradients g;
    g.d_weights = Eigen::MatrixXd::Zero(nlat, model.input_dim());
    g.d_encoder_bias = Eigen::VectorXd::Zero(nlat);
    g.d_decoder_bias = Eigen::VectorXd::Zero(model.input_dim());
    g.activation_counts.assign(static_cast<std::size_t>(nlat), 0);

    const double inv_b = 1.0 / static_cast<double>(b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const Eigen::VectorXd x = batch.row(i).transpose();
        const Eigen::VectorXd z_pre = model.encoder_weights * x + model.encoder_bias;
        const std::vector<int> support = topk_support(z_pre, model.sparsity_budget);

        Eigen::VectorXd z = Eigen::VectorXd::Zero(nlat);
        for (int j : support) {
            double v = z_pre(j);
            if (model.clamp_negative_codes && v < 0.0) v = 0.0;
            z(j) = v;
            if (v > 0.0) ++g.activation_counts[static_cast<std::size_t>(j)];
        }

        const Eigen::VectorXd residual =
            model.encoder_weights.transpose() * z + model.decoder_bias - x;
        g.recon_loss += residual.squaredNorm() * inv_b;

        const Eigen::VectorXd d_xhat = 2.0 * inv_b * residual;
        g.d_decoder_bias += d_xhat;
        for (int j : support) {
            // straight-through on the surviving entries only
            if (model.clamp_negative_codes && z_pre(j) < 0.0) continue;
            const double dz = model.encoder_weights.row(j).dot(d_xhat);
            g.d_weights.row(j) += dz * x.transpose();           // encoder path
            g.d_encoder_bias(j) += dz;
            g.d_weights.row(j) += z(j) * d_xhat.transpose();    // decoder path (tied)
        }
    }

    g.loss = g.recon_loss;
    if (!dead.empty() && revival_weight != 0.0) {
        double revive_loss = 0.0;
        for (int j : dead) {
            int best = 0;
            double best_pre = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < b; ++i) {
                const double pre =
                    model.encoder_weights.row(j).dot(batch.row(i)) + model.encoder_bias(j);
                if (pre > best_pre) {
                    best_pre = pre;
                    best = static_cast<int>(i);
                }
            }
            const Eigen::VectorXd x_rev = batch.row(best).transpose();
            const Eigen::VectorXd residual =
                best_pre * model.encoder_weights.row(j).transpose() + model.decoder_bias - x_rev;
            revive_loss += residual.squaredNorm();

            const Eigen::VectorXd d_xhat = revival_weight * 2.0 * residual;
            g.d_decoder_bias += d_xhat;
            const double dz = model.encoder_weights.row(j).dot(d_xhat);
            g.d_weights.row(j) += dz * x_rev.transpose();
            g.d_encoder_bias(j) += dz;
            g.d_weights.row(j) += best_pre * d_xhat.transpose();
        }
        g.loss += revival_weight * revive_loss;
    }
    return g;
}

SaeTrainResult train_sae(const Dataset& ds, const SaeTrainConfig& cfg) {
    const Eigen::Index d = ds.dim();
    const int nlat = cfg.latent_dim > 0 ? cfg.latent_dim : static_cast<int>(8 * d);
    const int k = cfg.sparsity_budget > 0 ? cfg.sparsity_budget : std::max(4, nlat / 32);
    const int dead_window = cfg.dead_window > 0 ? cfg.dead_window : cfg.dead_check_interval;
    (void)dead_window;  // window length equals the check interval: counts reset at each check

    if (k > nlat) throw std::invalid_argument("train_sae: sparsity_budget > latent_dim");
    if (cfg.batch_size <= 0 || cfg.batch_size > ds.n())
        throw std::invalid_argument("train_sae: invalid batch_size");
    if (cfg.epochs < 0 || cfg.learning_rate <= 0.0)
        throw std::invalid_argument("train_sae: invalid epochs/learning_rate");

    Rng rng(derive_seed(cfg.seed, "sae-train"));
    SaeTrainResult result;
    SaeModel& model = result.model;
    model.sparsity_budget = k;
    model.clamp_negative_codes = cfg.clamp_negative_codes;
    model.encoder_weights.resize(nlat, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int j = 0; j < nlat; ++j)
        for (Eigen::Index c = 0; c < d; ++c)
            model.encoder_weights(j, c) = scale * (2.0 * rng.uniform() - 1.0);
    model.encoder_bias = Eigen::VectorXd::Zero(nlat);
    model.decoder_bias = Eigen::VectorXd::Zero(d);

    std::vector<std::size_t> order(static_cast<std::size_t>(ds.n()));
    std::iota(order.begin(), order.end(), 0);
    std::vector<long> window_counts(static_cast<std::size_t>(nlat), 0);
    std::vector<long> epoch_counts;
    long global_batch = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        epoch_counts.assign(static_cast<std::size_t>(nlat), 0);
        double epoch_recon = 0.0;
        long batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            Eigen::MatrixXd batch(static_cast<Eigen::Index>(end - start), d);
            for (std::size_t i = start; i < end; ++i)
                batch.row(static_cast<Eigen::Index>(i - start)) =
                    ds.features.row(static_cast<Eigen::Index>(order[i]));

            std::vector<int> dead;
            if (global_batch > 0 && global_batch % cfg.dead_check_interval == 0) {
                dead = detect_dead_units(window_counts);
                std::fill(window_counts.begin(), window_counts.end(), 0);
            }

            SaeGradients g = sae_batch_gradients(model, batch, dead, cfg.revival_weight);
            if (!std::isfinite(g.loss))
                throw std::runtime_error("train_sae: non-finite loss at batch " +
                                         std::to_string(global_batch));

            model.encoder_weights -= cfg.learning_rate * g.d_weights;
            model.encoder_bias -= cfg.learning_rate * g.d_encoder_bias;
            model.decoder_bias -= cfg.learning_rate * g.d_decoder_bias;

            for (std::size_t j = 0; j < window_counts.size(); ++j) {
                window_counts[j] += g.activation_counts[j];
                epoch_counts[j] += g.activation_counts[j];
            }
            epoch_recon += g.recon_loss;
            ++batches;
            ++global_batch;
        }

        result.recon_loss.push_back(epoch_recon / static_cast<double>(batches));
        const long dead_now = static_cast<long>(detect_dead_units(epoch_counts).size());
        result.dead_fraction.push_back(static_cast<double>(dead_now) /
                                       static_cast<double>(nlat));
    }
    return result;
}

Eigen::MatrixXd encode_all(const SaeModel& model, const Dataset& ds) {
    if (ds.dim() != model.input_dim())
        throw std::invalid_argument("encode_all: dimension mismatch");
    Eigen::MatrixXd codes(ds.n(), model.latent_dim());
    for (Eigen::Index i = 0; i < ds.n(); ++i)
        codes.row(i) = encode(model, ds.features.row(i).transpose()).transpose();
    return codes;
}

void save_sae(const SaeModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out.write(kMagic, 4);
    const std::uint64_t nlat = static_cast<std::uint64_t>(model.latent_dim());
    const std::uint64_t d = static_cast<std::uint64_t>(model.input_dim());
    const std::uint32_t k = static_cast<std::uint32_t>(model.sparsity_budget);
    out.write(reinterpret_cast<const char*>(&nlat), 8);
    out.write(reinterpret_cast<const char*>(&d), 8);
    out.write(reinterpret_cast<const char*>(&k), 4);
    auto write_f32 = [&](double v) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
    };
    for (std::uint64_t j = 0; j < nlat; ++j)
        for (std::uint64_t c = 0; c < d; ++c)
            write_f32(model.encoder_weights(static_cast<Eigen::Index>(j),
                                            static_cast<Eigen::Index>(c)));
    for (std::uint64_t j = 0; j < nlat; ++j) write_f32(model.encoder_bias(static_cast<Eigen::Index>(j)));
    for (std::uint64_t c = 0; c < d; ++c) write_f32(model.decoder_bias(static_cast<Eigen::Index>(c)));
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

SaeModel load_sae(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error(path.string() + ": bad magic (byte offset 0)");
    std::uint64_t nlat = 0, d = 0;
    std::uint32_t k = 0;
    in.read(reinterpret_cast<char*>(&nlat), 8);
    in.read(reinterpret_cast<char*>(&d), 8);
    in.read(reinterpret_cast<char*>(&k), 4);
    if (!in) throw std::runtime_error(path.string() + ": truncated header");

    SaeModel model;
    model.sparsity_budget = static_cast<int>(k);
    model.encoder_weights.resize(static_cast<Eigen::Index>(nlat), static_cast<Eigen::Index>(d));
    model.encoder_bias.resize(static_cast<Eigen::Index>(nlat));
    model.decoder_bias.resize(static_cast<Eigen::Index>(d));
    auto read_f32 = [&]() {
        float f = 0;
        in.read(reinterpret_cast<char*>(&f), 4);
        return static_cast<double>(f);
    };
    for (std::uint64_t j = 0; j < nlat; ++j)
        for (std::uint64_t c = 0; c < d; ++c)
            model.encoder_weights(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) =
                read_f32();
    for (std::uint64_t j = 0; j < nlat; ++j)
        model.encoder_bias(static_cast<Eigen::Index>(j)) = read_f32();
    for (std::uint64_t c = 0; c < d; ++c)
        model.decoder_bias(static_cast<Eigen::Index>(c)) = read_f32();
    if (!in) throw std::runtime_error(path.string() + ": truncated payload");
    return model;
}

void save_codes(const Eigen::MatrixXd& codes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out.write("SCOD", 4);
    const std::uint64_t n = static_cast<std::uint64_t>(codes.rows());
    const std::uint64_t nlat = static_cast<std::uint64_t>(codes.cols());
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&nlat), 8);
    for (Eigen::Index i = 0; i < codes.rows(); ++i)
        for (Eigen::Index j = 0; j < codes.cols(); ++j) {
            const float f = static_cast<float>(codes(i, j));
            out.write(reinterpret_cast<const char*>(&f), 4);
        }
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

Eigen::MatrixXd load_codes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SCOD", 4) != 0)
        throw std::runtime_error(path.string() + ": bad magic (byte offset 0)");
    std::uint64_t n = 0, nlat = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&nlat), 8);
    Eigen::MatrixXd codes(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nlat));
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t j = 0; j < nlat; ++j) {
            float f = 0;
            in.read(reinterpret_cast<char*>(&f), 4);
            codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f;
        }
    if (!in) throw std::runtime_error(path.string() + ": truncated payload");
    return codes;
}

void save_loss_trace_csv(const SaeTrainResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "epoch,mean_recon_loss,dead_fraction\n";
    char buf[64];
    for (std::size_t e = 0; e < result.recon_loss.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%.17g", result.recon_loss[e]);
        out << (e + 1) << ',' << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", result.dead_fraction[e]);
        out << buf << "\n";
    }
}

} // namespace selekt
