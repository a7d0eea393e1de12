#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flsentry/errors.hpp"

namespace flsentry {

/// Dense feature matrix plus class labels. Features are row-major.
struct LabeledDataset {
    std::vector<double> features; // n_samples * n_features
    std::vector<int> labels;
    std::size_t n_features = 0;
    int n_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(features).subspan(i * n_features, n_features);
    }

    void validate() const;
    LabeledDataset select(std::span<const std::size_t> indices) const;
};

enum class PartitionMode { iid, dirichlet };

struct PartitionSpec {
    std::size_t n_clients = 10;
    PartitionMode mode = PartitionMode::iid;
    double alpha = 0.5; // Dirichlet concentration, used in dirichlet mode
};

struct BackdoorSpec {
    std::vector<std::size_t> trigger_feature_indices;
    double trigger_value = 1.0;
    int target_label = 0;
    double poison_fraction = 0.1;
};

/// Gaussian class clusters with unit within-class variance and class means at
/// least four standard deviations apart. Deterministic for a fixed seed.
LabeledDataset generate_blobs(int n_classes, int n_features, int n_samples, std::uint64_t seed);

/// Row-index assignment for `partition`, exposed for the disjoint-cover
/// property. Every client receives at least one sample.
std::vector<std::vector<std::size_t>> partition_indices(const LabeledDataset& data,
                                                        const PartitionSpec& spec,
                                                        std::uint64_t seed);

std::vector<LabeledDataset> partition(const LabeledDataset& data, const PartitionSpec& spec,
                                      std::uint64_t seed);

/// Parses the IDX image/label pair: big-endian 32-bit magic (0x00000803 for
/// images, 0x00000801 for labels), big-endian dimension sizes, raw unsigned
/// bytes. Pixels are scaled to [0, 1].
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

/// Serializes a dataset back to the IDX pair. Feature values are expected in
/// [0, 1] and are written as round(v * 255). Inverse of load_idx on nclasses=10
/// byte data.
void write_idx(const LabeledDataset& data, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

/// Overwrites trigger features with the trigger value on every row.
LabeledDataset apply_trigger(const LabeledDataset& data, const BackdoorSpec& spec);

struct BackdoorInjection {
    LabeledDataset poisoned;
    LabeledDataset trigger_testset;
    std::vector<std::size_t> poisoned_rows;
};

/// Overwrites trigger features and relabels a poison_fraction subset; returns
/// the poisoned training set plus a clean-label trigger testset built from the
/// untouched rows (rows already carrying the target label are excluded).
BackdoorInjection inject_backdoor(const LabeledDataset& data, const BackdoorSpec& spec,
                                  std::uint64_t seed);

} // namespace flsentry
