#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace selekt {

struct Dataset {
    Eigen::MatrixXd features;           // N x D
    std::vector<std::uint32_t> labels;  // N
    std::uint32_t class_count = 0;

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }

    bool operator==(const Dataset& other) const {
        return class_count == other.class_count && labels == other.labels &&
               features.rows() == other.features.rows() &&
               features.cols() == other.features.cols() &&
               features == other.features;
    }
};

struct SyntheticSpec {
    std::uint32_t class_count = 10;
    std::uint32_t samples_per_class = 100;
    std::uint32_t feature_dim = 16;
    std::uint32_t common_factor_count = 8;
    std::uint32_t rare_factor_count = 16;
    double common_activation_prob = 0.9;
    double rare_activation_prob = 0.05;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

// Generator output plus the planted ground truth used by scoring tests.
struct SyntheticData {
    Dataset data;
    // N x (common_factor_count + rare_factor_count), 0/1; common factors first
    std::vector<std::vector<std::uint8_t>> factor_fired;
    Eigen::MatrixXd factor_directions;  // (common+rare) x D, unit rows
};

// Binary format (little-endian): magic "DSEL", version u32=1, N u64, D u64,
// C u32, features f32 row-major, labels u32. CSV fallback has header
// `label,f0,...,f{D-1}`. load_dataset sniffs the magic to pick the parser.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset_csv(const std::filesystem::path& path);
void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& m);

// Symmetric label noise: exactly floor(rate*N) positions redrawn uniformly
// over all C classes (the original class may be redrawn).
Dataset inject_label_noise(const Dataset& ds, double rate, std::uint64_t seed);

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Sidecar CSV `sample_index,factor_index,fired(0|1)`
void save_factor_sidecar(const SyntheticData& sd, const std::filesystem::path& path);

} // namespace selekt
