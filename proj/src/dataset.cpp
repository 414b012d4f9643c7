#include "selekt/dataset.hpp"
#include "selekt/rng.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace selekt {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'E', 'L'};
constexpr std::uint32_t kVersion = 1;

[[noreturn]] void fail_at(const std::filesystem::path& path, std::uint64_t offset,
                          const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what + " (byte offset " +
                             std::to_string(offset) + ")");
}

template <typename T>
void read_or_fail(std::istream& in, T* out, std::size_t count,
                  const std::filesystem::path& path, const char* what) {
    const auto offset = static_cast<std::uint64_t>(in.tellg());
    in.read(reinterpret_cast<char*>(out), static_cast<std::streamsize>(sizeof(T) * count));
    if (!in) fail_at(path, offset, std::string("truncated payload while reading ") + what);
}

template <typename T>
void write_raw(std::ostream& out, const T* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(sizeof(T) * count));
}

} // namespace

void SyntheticSpec::validate() const {
    std::vector<std::string> errs;
    if (class_count < 1) errs.push_back("class_count must be >= 1");
    if (samples_per_class < 1) errs.push_back("samples_per_class must be >= 1");
    if (feature_dim < 1) errs.push_back("feature_dim must be >= 1");
    if (common_factor_count < 1) errs.push_back("common_factor_count must be >= 1");
    if (rare_factor_count < 1) errs.push_back("rare_factor_count must be >= 1");
    if (common_activation_prob < 0 || common_activation_prob > 1)
        errs.push_back("common_activation_prob must be in [0,1]");
    if (rare_activation_prob < 0 || rare_activation_prob > 1)
        errs.push_back("rare_activation_prob must be in [0,1]");
    if (!(common_activation_prob > rare_activation_prob))
        errs.push_back("common_activation_prob must exceed rare_activation_prob");
    if (noise_sigma < 0) errs.push_back("noise_sigma must be >= 0");
    if (!errs.empty()) {
        std::string joined;
        for (const auto& e : errs) {
            if (!joined.empty()) joined += "; ";
            joined += e;
        }
        throw std::invalid_argument("invalid SyntheticSpec: " + joined);
    }
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");

    char magic[4] = {};
    in.read(magic, 4);
    if (in && std::memcmp(magic, kMagic, 4) == 0) {
        std::uint32_t version = 0;
        read_or_fail(in, &version, 1, path, "version");
        if (version != kVersion)
            fail_at(path, 4, "unsupported format version " + std::to_string(version));

        std::uint64_t n = 0, d = 0;
        std::uint32_t c = 0;
        read_or_fail(in, &n, 1, path, "N");
        read_or_fail(in, &d, 1, path, "D");
        read_or_fail(in, &c, 1, path, "C");
        if (n == 0 || d == 0) fail_at(path, 8, "N and D must be positive");
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d / sizeof(float))
            fail_at(path, 8, "N*D overflows payload size");

        Dataset ds;
        ds.class_count = c;
        ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        std::vector<float> row(d);
        for (std::uint64_t i = 0; i < n; ++i) {
            read_or_fail(in, row.data(), d, path, "features");
            for (std::uint64_t j = 0; j < d; ++j)
                ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
        ds.labels.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto offset = static_cast<std::uint64_t>(in.tellg());
            std::uint32_t label = 0;
            read_or_fail(in, &label, 1, path, "labels");
            if (label >= c)
                fail_at(path, offset, "label " + std::to_string(label) + " >= class_count " +
                                          std::to_string(c));
            ds.labels[i] = label;
        }
        return ds;
    }

    // CSV fallback is recognized by its header prefix
    if (in && std::memcmp(magic, "labe", 4) == 0) return load_dataset_csv(path);
    fail_at(path, 0, "bad magic");
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");

    out.write(kMagic, 4);
    write_raw(out, &kVersion, 1);
    const std::uint64_t n = static_cast<std::uint64_t>(ds.n());
    const std::uint64_t d = static_cast<std::uint64_t>(ds.dim());
    write_raw(out, &n, 1);
    write_raw(out, &d, 1);
    write_raw(out, &ds.class_count, 1);
    std::vector<float> row(d);
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t j = 0; j < d; ++j)
            row[j] = static_cast<float>(
                ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        write_raw(out, row.data(), d);
    }
    write_raw(out, ds.labels.data(), n);
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path.string() + ": empty CSV");
    if (line.rfind("label,", 0) != 0)
        throw std::runtime_error(path.string() + ": CSV header must start with 'label,'");

    std::size_t d = 0;
    for (char ch : line)
        if (ch == ',') ++d;

    std::vector<std::vector<double>> rows;
    std::vector<std::uint32_t> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ','))
            throw std::runtime_error(path.string() + ": malformed CSV row");
        labels.push_back(static_cast<std::uint32_t>(std::stoul(cell)));
        std::vector<double> row;
        row.reserve(d);
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != d)
            throw std::runtime_error(path.string() + ": row has " +
                                     std::to_string(row.size()) + " features, expected " +
                                     std::to_string(d));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path.string() + ": CSV has no data rows");

    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.labels = std::move(labels);
    std::uint32_t max_label = 0;
    for (auto l : ds.labels) max_label = std::max(max_label, l);
    ds.class_count = max_label + 1;
    return ds;
}

void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "label";
    for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ",f" << j;
    out << "\n";
    char buf[64];
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        out << ds.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < ds.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, j));
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out = m;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double norm = out.row(i).norm();
        if (norm > 0.0) out.row(i) /= norm;  // zero rows pass through
    }
    return out;
}

Dataset inject_label_noise(const Dataset& ds, double rate, std::uint64_t seed) {
    if (rate < 0.0 || rate > 1.0)
        throw std::invalid_argument("noise rate must be in [0,1]");
    if (ds.class_count < 2)
        throw std::invalid_argument("label noise requires class_count >= 2");

    Dataset out = ds;
    const auto n = static_cast<std::size_t>(ds.n());
    const auto flip_count = static_cast<std::size_t>(rate * static_cast<double>(n));
    Rng rng(seed);
    for (std::size_t idx : rng.sample_without_replacement(n, flip_count))
        out.labels[idx] = static_cast<std::uint32_t>(rng.uniform_int(ds.class_count));
    return out;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const std::uint32_t total_factors = spec.common_factor_count + spec.rare_factor_count;
    const std::uint64_t n =
        static_cast<std::uint64_t>(spec.class_count) * spec.samples_per_class;
    const Eigen::Index d = static_cast<Eigen::Index>(spec.feature_dim);

    // class means spread out so the classes stay separable
    constexpr double kClassScale = 3.0;
    Eigen::MatrixXd class_means(spec.class_count, d);
    for (std::uint32_t c = 0; c < spec.class_count; ++c)
        for (Eigen::Index j = 0; j < d; ++j) class_means(c, j) = kClassScale * rng.normal();

    SyntheticData sd;
    sd.factor_directions.resize(total_factors, d);
    for (std::uint32_t f = 0; f < total_factors; ++f) {
        Eigen::RowVectorXd dir(d);
        for (Eigen::Index j = 0; j < d; ++j) dir(j) = rng.normal();
        sd.factor_directions.row(f) = dir / dir.norm();
    }

    sd.data.features.resize(static_cast<Eigen::Index>(n), d);
    sd.data.labels.resize(n);
    sd.data.class_count = spec.class_count;
    sd.factor_fired.assign(n, std::vector<std::uint8_t>(total_factors, 0));

    Eigen::Index row = 0;
    for (std::uint32_t c = 0; c < spec.class_count; ++c) {
        for (std::uint32_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            Eigen::RowVectorXd x = class_means.row(c);
            for (std::uint32_t f = 0; f < total_factors; ++f) {
                const double p = f < spec.common_factor_count ? spec.common_activation_prob
                                                              : spec.rare_activation_prob;
                if (rng.bernoulli(p)) {
                    sd.factor_fired[static_cast<std::size_t>(row)][f] = 1;
                    x += sd.factor_directions.row(f);
                }
            }
            for (Eigen::Index j = 0; j < d; ++j) x(j) += spec.noise_sigma * rng.normal();
            sd.data.features.row(row) = x;
            sd.data.labels[static_cast<std::size_t>(row)] = c;
        }
    }
    return sd;
}

void save_factor_sidecar(const SyntheticData& sd, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "sample_index,factor_index,fired\n";
    for (std::size_t i = 0; i < sd.factor_fired.size(); ++i)
        for (std::size_t f = 0; f < sd.factor_fired[i].size(); ++f)
            out << i << ',' << f << ',' << int(sd.factor_fired[i][f]) << "\n";
}

} // namespace selekt
