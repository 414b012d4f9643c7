#pragma once

#include "selekt/dataset.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace selekt {

// Top-K sparse autoencoder with tied weights: the decoder matrix is always
// the transpose of encoder_weights and is never stored separately.
struct SaeModel {
    Eigen::MatrixXd encoder_weights;  // N_lat x D
    Eigen::VectorXd encoder_bias;     // N_lat
    Eigen::VectorXd decoder_bias;     // D
    int sparsity_budget = 0;
    bool clamp_negative_codes = false;

    Eigen::Index latent_dim() const { return encoder_weights.rows(); }
    Eigen::Index input_dim() const { return encoder_weights.cols(); }
};

struct SaeTrainConfig {
    int latent_dim = 0;        // 0 -> 8*D
    int sparsity_budget = 0;   // 0 -> max(4, latent_dim/32)
    int epochs = 50;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double revival_weight = 0.25;
    int dead_check_interval = 100;  // batches
    int dead_window = 0;            // 0 -> dead_check_interval
    bool clamp_negative_codes = false;
    std::uint64_t seed = 0;
};

struct SaeTrainResult {
    SaeModel model;
    std::vector<double> recon_loss;     // per-epoch mean reconstruction loss
    std::vector<double> dead_fraction;  // per-epoch, over the last closed window
};

// Keeps the k largest-|z| entries, zeros the rest; ties broken by lower index.
Eigen::VectorXd topk_mask(const Eigen::VectorXd& z, int k);

Eigen::VectorXd encode(const SaeModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd decode(const SaeModel& model, const Eigen::VectorXd& z);

std::vector<int> detect_dead_units(const std::vector<long>& activation_counts);

struct RevivalTerms {
    std::vector<int> dead_units;
    std::vector<int> sample_index;  // per dead unit, argmax pre-activation in the batch
    double loss = 0.0;
};

RevivalTerms revival_terms(const Eigen::MatrixXd& batch, const SaeModel& model,
                           const std::vector<int>& dead);

struct SaeGradients {
    Eigen::MatrixXd d_weights;
    Eigen::VectorXd d_encoder_bias;
    Eigen::VectorXd d_decoder_bias;
    double loss = 0.0;         // total objective on this batch
    double recon_loss = 0.0;   // mean reconstruction part
    std::vector<long> activation_counts;  // strictly positive codes, per unit
};

// Mean reconstruction loss over the batch plus revival_weight * revival loss
// for the given dead set (pass empty for plain batches). Gradient flows only
// through the surviving TopK entries.
SaeGradients sae_batch_gradients(const SaeModel& model, const Eigen::MatrixXd& batch,
                                 const std::vector<int>& dead, double revival_weight);

SaeTrainResult train_sae(const Dataset& ds, const SaeTrainConfig& cfg);

Eigen::MatrixXd encode_all(const SaeModel& model, const Dataset& ds);

// Model file (little-endian): magic "SAE1", N_lat u64, D u64, k_sae u32,
// W_e row-major f32, b_e f32, b_d f32.
void save_sae(const SaeModel& model, const std::filesystem::path& path);
SaeModel load_sae(const std::filesystem::path& path);

// Loss trace CSV `epoch,mean_recon_loss,dead_fraction`
void save_loss_trace_csv(const SaeTrainResult& result, const std::filesystem::path& path);

// Sparse-code matrix file (little-endian): magic "SCOD", N u64, N_lat u64,
// codes f32 row-major.
void save_codes(const Eigen::MatrixXd& codes, const std::filesystem::path& path);
Eigen::MatrixXd load_codes(const std::filesystem::path& path);

} // namespace selekt
