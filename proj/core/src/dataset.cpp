#include "flsentry/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "flsentry/rng.hpp"

namespace flsentry {

void LabeledDataset::validate() const {
    if (features.size() != labels.size() * n_features) {
        throw DimensionError("LabeledDataset: feature/label count mismatch");
    }
    for (int y : labels) {
        if (y < 0 || y >= n_classes) {
            throw RangeError("LabeledDataset: label " + std::to_string(y) + " out of range");
        }
    }
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const {
    LabeledDataset out;
    out.n_features = n_features;
    out.n_classes = n_classes;
    out.features.reserve(indices.size() * n_features);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        auto r = row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(labels[i]);
    }
    return out;
}

LabeledDataset generate_blobs(int n_classes, int n_features, int n_samples, std::uint64_t seed) {
    if (n_classes <= 0 || n_features <= 0 || n_samples <= 0) {
        throw RangeError("generate_blobs: counts must be positive");
    }
    Rng rng(derive_seed(seed, Stream::data));

    // Class means sit on the first axis at spacing exactly 4, centered on the
    // origin, with unit within-class variance; the remaining features are
    // class-independent noise. Adjacent classes keep a ~2.3% overlap, so the
    // optimum stays at a finite, moderate norm instead of drifting off to
    // infinity on separable data.
    std::vector<std::vector<double>> means(
        static_cast<std::size_t>(n_classes),
        std::vector<double>(static_cast<std::size_t>(n_features), 0.0));
    for (int k = 0; k < n_classes; ++k) {
        means[static_cast<std::size_t>(k)][0] =
            4.0 * static_cast<double>(k) - 2.0 * static_cast<double>(n_classes - 1);
    }

    LabeledDataset data;
    data.n_features = static_cast<std::size_t>(n_features);
    data.n_classes = n_classes;
    data.features.resize(static_cast<std::size_t>(n_samples) * data.n_features);
    data.labels.resize(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        const int label = i % n_classes; // balanced classes
        data.labels[static_cast<std::size_t>(i)] = label;
        double* row = data.features.data() + static_cast<std::size_t>(i) * data.n_features;
        for (int j = 0; j < n_features; ++j) {
            row[j] = means[static_cast<std::size_t>(label)][static_cast<std::size_t>(j)] + rng.normal();
        }
    }

    // Shuffle rows so label order carries no information.
    std::vector<std::size_t> order(static_cast<std::size_t>(n_samples));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    return data.select(order);
}

namespace {

std::vector<std::vector<std::size_t>> try_dirichlet_split(const LabeledDataset& data,
                                                          const PartitionSpec& spec, Rng& rng) {
    std::vector<std::vector<std::size_t>> shards(spec.n_clients);
    // Group sample indices by class.
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.n_classes));
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
    }
    for (auto& class_rows : by_class) {
        if (class_rows.empty()) continue;
        rng.shuffle(class_rows);
        // Proportions drawn once per class from Dirichlet(alpha * ones).
        std::vector<double> props(spec.n_clients);
        double total = 0.0;
        for (double& p : props) {
            p = rng.gamma(spec.alpha);
            total += p;
        }
        std::size_t start = 0;
        double cumulative = 0.0;
        for (std::size_t c = 0; c < spec.n_clients; ++c) {
            cumulative += props[c] / total;
            std::size_t end = (c + 1 == spec.n_clients)
                                  ? class_rows.size()
                                  : static_cast<std::size_t>(
                                        std::llround(cumulative * static_cast<double>(class_rows.size())));
            end = std::min(end, class_rows.size());
            end = std::max(end, start);
            shards[c].insert(shards[c].end(), class_rows.begin() + static_cast<std::ptrdiff_t>(start),
                             class_rows.begin() + static_cast<std::ptrdiff_t>(end));
            start = end;
        }
    }
    return shards;
}

} // namespace

std::vector<std::vector<std::size_t>> partition_indices(const LabeledDataset& data,
                                                        const PartitionSpec& spec,
                                                        std::uint64_t seed) {
    if (spec.n_clients == 0 || spec.n_clients > data.size()) {
        throw PartitionError("partition: need 1 <= n_clients <= n_samples");
    }
    if (spec.mode == PartitionMode::dirichlet && !(spec.alpha > 0.0)) {
        throw PartitionError("partition: dirichlet mode requires alpha > 0");
    }
    Rng rng(derive_seed(seed, Stream::partition));

    if (spec.mode == PartitionMode::iid) {
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::vector<std::vector<std::size_t>> shards(spec.n_clients);
        for (std::size_t i = 0; i < order.size(); ++i) {
            shards[i % spec.n_clients].push_back(order[i]);
        }
        return shards;
    }

    // Resample until every client holds at least one sample.
    for (int attempt = 0; attempt < 1000; ++attempt) {
        auto shards = try_dirichlet_split(data, spec, rng);
        const bool all_nonempty =
            std::all_of(shards.begin(), shards.end(), [](const auto& s) { return !s.empty(); });
        if (all_nonempty) return shards;
    }
    throw PartitionError("partition: could not produce nonempty dirichlet shards");
}

std::vector<LabeledDataset> partition(const LabeledDataset& data, const PartitionSpec& spec,
                                      std::uint64_t seed) {
    auto indices = partition_indices(data, spec, seed);
    std::vector<LabeledDataset> shards;
    shards.reserve(indices.size());
    for (const auto& idx : indices) shards.push_back(data.select(idx));
    return shards;
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const char* what) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw FormatError(std::string("idx: truncated ") + what);
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

} // namespace

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw FormatError("idx: cannot open " + images_path.string());
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw FormatError("idx: cannot open " + labels_path.string());

    const std::uint32_t image_magic = read_be32(images, "image magic");
    if (image_magic != kImageMagic) {
        throw FormatError("idx: bad image magic " + std::to_string(image_magic));
    }
    const std::uint32_t n_images = read_be32(images, "image count");
    const std::uint32_t rows = read_be32(images, "row count");
    const std::uint32_t cols = read_be32(images, "column count");

    const std::uint32_t label_magic = read_be32(labels, "label magic");
    if (label_magic != kLabelMagic) {
        throw FormatError("idx: bad label magic " + std::to_string(label_magic));
    }
    const std::uint32_t n_labels = read_be32(labels, "label count");
    if (n_images != n_labels) {
        throw FormatError("idx: image/label count mismatch (" + std::to_string(n_images) +
                          " vs " + std::to_string(n_labels) + ")");
    }

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    LabeledDataset data;
    data.n_features = pixels;
    data.n_classes = 10;
    data.features.resize(static_cast<std::size_t>(n_images) * pixels);
    data.labels.resize(n_images);

    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        if (!images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
            throw FormatError("idx: truncated image payload at sample " + std::to_string(i));
        }
        double* row = data.features.data() + static_cast<std::size_t>(i) * pixels;
        for (std::size_t j = 0; j < pixels; ++j) row[j] = buf[j] / 255.0;
        char label = 0;
        if (!labels.read(&label, 1)) {
            throw FormatError("idx: truncated label payload at sample " + std::to_string(i));
        }
        data.labels[i] = static_cast<unsigned char>(label);
    }
    return data;
}

void write_idx(const LabeledDataset& data, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
    if (rows * cols != data.n_features) {
        throw DimensionError("write_idx: rows*cols must equal n_features");
    }
    std::ofstream images(images_path, std::ios::binary);
    std::ofstream labels(labels_path, std::ios::binary);
    write_be32(images, kImageMagic);
    write_be32(images, static_cast<std::uint32_t>(data.size()));
    write_be32(images, static_cast<std::uint32_t>(rows));
    write_be32(images, static_cast<std::uint32_t>(cols));
    write_be32(labels, kLabelMagic);
    write_be32(labels, static_cast<std::uint32_t>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto r = data.row(i);
        for (double v : r) {
            const auto byte = static_cast<unsigned char>(std::llround(v * 255.0));
            images.put(static_cast<char>(byte));
        }
        labels.put(static_cast<char>(static_cast<unsigned char>(data.labels[i])));
    }
}

LabeledDataset apply_trigger(const LabeledDataset& data, const BackdoorSpec& spec) {
    for (std::size_t idx : spec.trigger_feature_indices) {
        if (idx >= data.n_features) {
            throw RangeError("backdoor: trigger index " + std::to_string(idx) + " out of range");
        }
    }
    LabeledDataset out = data;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double* row = out.features.data() + i * out.n_features;
        for (std::size_t idx : spec.trigger_feature_indices) row[idx] = spec.trigger_value;
    }
    return out;
}

BackdoorInjection inject_backdoor(const LabeledDataset& data, const BackdoorSpec& spec,
                                  std::uint64_t seed) {
    if (!(spec.poison_fraction > 0.0) || spec.poison_fraction > 1.0) {
        throw RangeError("backdoor: poison_fraction must be in (0, 1]");
    }
    const auto n_poison = static_cast<std::size_t>(
        std::llround(spec.poison_fraction * static_cast<double>(data.size())));
    if (n_poison < 1) {
        throw RangeError("backdoor: poison_fraction * n_samples must be >= 1");
    }

    Rng rng(derive_seed(seed, Stream::poison));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    BackdoorInjection result;
    result.poisoned = data;
    result.poisoned_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_poison));
    std::sort(result.poisoned_rows.begin(), result.poisoned_rows.end());
    for (std::size_t i : result.poisoned_rows) {
        double* row = result.poisoned.features.data() + i * data.n_features;
        for (std::size_t idx : spec.trigger_feature_indices) {
            if (idx >= data.n_features) {
                throw RangeError("backdoor: trigger index out of range");
            }
            row[idx] = spec.trigger_value;
        }
        result.poisoned.labels[i] = spec.target_label;
    }

    // Clean-label holdout: untouched rows that do not already carry the target
    // label, with the trigger applied.
    std::vector<std::size_t> clean;
    for (std::size_t i = n_poison; i < order.size(); ++i) {
        if (data.labels[order[i]] != spec.target_label) clean.push_back(order[i]);
    }
    std::sort(clean.begin(), clean.end());
    result.trigger_testset = apply_trigger(data.select(clean), spec);
    return result;
}

} // namespace flsentry
