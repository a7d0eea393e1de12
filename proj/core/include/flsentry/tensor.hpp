#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flsentry/errors.hpp"

namespace flsentry {

/// Flat sequence of finite 64-bit model parameters. The unit of aggregation,
/// distance and similarity computation. Length is fixed at construction and
/// every element is validated to be finite.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::vector<double> values);

    static ParamVector zeros(std::size_t n) { return ParamVector(std::vector<double>(n, 0.0)); }

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }
    const std::vector<double>& data() const { return values_; }

    bool operator==(const ParamVector& other) const { return values_ == other.values_; }

private:
    std::vector<double> values_;
};

ParamVector add(const ParamVector& a, const ParamVector& b);
ParamVector sub(const ParamVector& a, const ParamVector& b);
ParamVector scale(const ParamVector& a, double c);
double dot(const ParamVector& a, const ParamVector& b);
double norm(const ParamVector& a);
/// Elementwise mean of a nonempty set of equal-length vectors.
ParamVector mean(std::span<const ParamVector> vectors);

struct LayerSpec {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;

    std::size_t extent() const;
};

/// Named, shaped parameter tensors over a backing ParamVector. Tensors are
/// contiguous, disjoint and exactly cover the backing vector.
class LayeredModel {
public:
    LayeredModel(std::vector<LayerSpec> layers, ParamVector backing);

    const std::vector<LayerSpec>& layers() const { return layers_; }
    const ParamVector& backing() const { return backing_; }
    std::size_t layer_count() const { return layers_.size(); }

    /// Parameters of layer `i` as a fresh vector.
    ParamVector slice(std::size_t i) const;

private:
    std::vector<LayerSpec> layers_;
    ParamVector backing_;
};

/// Sample mean and standard deviation of a score list.
struct ScoreStats {
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t count = 0;
};

/// S_c(a, b) = a.b / (|a| |b|), clamped to [-1, 1] so downstream threshold
/// comparisons stay total under floating-point rounding.
double cosine_similarity(const ParamVector& a, const ParamVector& b);

/// Euclidean norm of a - b.
double l2_distance(const ParamVector& a, const ParamVector& b);

/// Mean and sample standard deviation (n-1 denominator). Requires >= 2 scores.
ScoreStats sample_stats(std::span<const double> scores);

/// The second-to-last tensor of a multi-layer model; whole backing vector for
/// single-layer models, which have no second-to-last tensor to select.
ParamVector importance_layer(const LayeredModel& model);

/// Per-layer Euclidean norm of a gradient vector, in layer order.
std::vector<std::pair<std::string, double>> layer_sensitivity(const LayeredModel& grads);

} // namespace flsentry
