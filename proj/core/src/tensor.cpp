#include "flsentry/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace flsentry {

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw RangeError("ParamVector element is not finite");
        }
    }
}

namespace {

void require_same_size(const ParamVector& a, const ParamVector& b, const char* what) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(what) + ": length mismatch (" +
                             std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

} // namespace

ParamVector add(const ParamVector& a, const ParamVector& b) {
    require_same_size(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return ParamVector(std::move(out));
}

ParamVector sub(const ParamVector& a, const ParamVector& b) {
    require_same_size(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return ParamVector(std::move(out));
}

ParamVector scale(const ParamVector& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
    return ParamVector(std::move(out));
}

double dot(const ParamVector& a, const ParamVector& b) {
    require_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const ParamVector& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

ParamVector mean(std::span<const ParamVector> vectors) {
    if (vectors.empty()) throw EmptyAggregationError("mean of empty vector set");
    const std::size_t n = vectors.front().size();
    std::vector<double> out(n, 0.0);
    for (const ParamVector& v : vectors) {
        if (v.size() != n) throw DimensionError("mean: length mismatch");
        for (std::size_t i = 0; i < n; ++i) out[i] += v[i];
    }
    const auto count = static_cast<double>(vectors.size());
    for (double& x : out) x /= count;
    return ParamVector(std::move(out));
}

std::size_t LayerSpec::extent() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

LayeredModel::LayeredModel(std::vector<LayerSpec> layers, ParamVector backing)
    : layers_(std::move(layers)), backing_(std::move(backing)) {
    std::size_t expected_offset = 0;
    for (const LayerSpec& layer : layers_) {
        if (layer.shape.empty() || layer.extent() == 0) {
            throw DimensionError("LayeredModel: layer '" + layer.name + "' has empty extent");
        }
        if (layer.offset != expected_offset) {
            throw DimensionError("LayeredModel: layer '" + layer.name + "' is not contiguous");
        }
        expected_offset += layer.extent();
    }
    if (expected_offset != backing_.size()) {
        throw DimensionError("LayeredModel: layers cover " + std::to_string(expected_offset) +
                             " of " + std::to_string(backing_.size()) + " parameters");
    }
    if (layers_.empty()) {
        throw DimensionError("LayeredModel: needs at least one layer");
    }
}

ParamVector LayeredModel::slice(std::size_t i) const {
    const LayerSpec& layer = layers_.at(i);
    auto view = backing_.values().subspan(layer.offset, layer.extent());
    return ParamVector(std::vector<double>(view.begin(), view.end()));
}

double cosine_similarity(const ParamVector& a, const ParamVector& b) {
    require_same_size(a, b, "cosine_similarity");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw DegenerateVectorError("cosine_similarity: zero-norm operand");
    }
    const double s = dot(a, b) / (na * nb);
    return std::clamp(s, -1.0, 1.0);
}

double l2_distance(const ParamVector& a, const ParamVector& b) {
    require_same_size(a, b, "l2_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

ScoreStats sample_stats(std::span<const double> scores) {
    if (scores.size() < 2) {
        throw InsufficientSamplesError("sample_stats: need at least 2 scores, got " +
                                       std::to_string(scores.size()));
    }
    double sum = 0.0;
    for (double s : scores) sum += s;
    const double mu = sum / static_cast<double>(scores.size());
    double sq = 0.0;
    for (double s : scores) sq += (s - mu) * (s - mu);
    const double sigma = std::sqrt(sq / static_cast<double>(scores.size() - 1));
    return ScoreStats{mu, sigma, scores.size()};
}

ParamVector importance_layer(const LayeredModel& model) {
    if (model.layer_count() == 1) {
        return model.slice(0);
    }
    return model.slice(model.layer_count() - 2);
}

std::vector<std::pair<std::string, double>> layer_sensitivity(const LayeredModel& grads) {
    std::vector<std::pair<std::string, double>> out;
    out.reserve(grads.layer_count());
    for (std::size_t i = 0; i < grads.layer_count(); ++i) {
        out.emplace_back(grads.layers()[i].name, norm(grads.slice(i)));
    }
    return out;
}

} // namespace flsentry
