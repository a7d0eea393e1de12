#include "flsentry/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flsentry {

namespace {

void softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        denom += v;
    }
    for (double& v : z) v /= denom;
}

double safe_log(double p) { return std::log(std::max(p, 1e-30)); }

} // namespace

std::size_t ModelSpec::param_count() const {
    const auto d = static_cast<std::size_t>(n_features);
    const auto k = static_cast<std::size_t>(n_classes);
    const auto h = static_cast<std::size_t>(hidden);
    if (kind == ModelKind::logistic_regression) return (k - 1) * (d + 1);
    return h * d + h + k * h + k;
}

std::vector<LayerSpec> ModelSpec::layer_specs() const {
    const auto d = static_cast<std::size_t>(n_features);
    const auto k = static_cast<std::size_t>(n_classes);
    const auto h = static_cast<std::size_t>(hidden);
    if (kind == ModelKind::logistic_regression) {
        return {LayerSpec{"linear", {k - 1, d + 1}, 0}};
    }
    std::vector<LayerSpec> layers;
    std::size_t offset = 0;
    layers.push_back(LayerSpec{"fc1.weight", {h, d}, offset});
    offset += h * d;
    layers.push_back(LayerSpec{"fc1.bias", {h}, offset});
    offset += h;
    layers.push_back(LayerSpec{"fc2.weight", {k, h}, offset});
    offset += k * h;
    layers.push_back(LayerSpec{"fc2.bias", {k}, offset});
    return layers;
}

LayeredModel ModelSpec::layered(ParamVector params) const {
    return LayeredModel(layer_specs(), std::move(params));
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    if (spec.kind == ModelKind::logistic_regression) {
        return ParamVector::zeros(spec.param_count());
    }
    Rng rng(derive_seed(seed, Stream::model_init));
    std::vector<double> w(spec.param_count());
    for (double& v : w) v = 0.05 * rng.normal();
    // Biases start at zero.
    const auto d = static_cast<std::size_t>(spec.n_features);
    const auto k = static_cast<std::size_t>(spec.n_classes);
    const auto h = static_cast<std::size_t>(spec.hidden);
    std::fill(w.begin() + static_cast<std::ptrdiff_t>(h * d),
              w.begin() + static_cast<std::ptrdiff_t>(h * d + h), 0.0);
    std::fill(w.begin() + static_cast<std::ptrdiff_t>(h * d + h + k * h), w.end(), 0.0);
    return ParamVector(std::move(w));
}

namespace {

struct MlpView {
    const double* w1; // h x d
    const double* b1; // h
    const double* w2; // k x h
    const double* b2; // k
};

MlpView mlp_view(const ModelSpec& spec, const double* p) {
    const auto d = static_cast<std::size_t>(spec.n_features);
    const auto k = static_cast<std::size_t>(spec.n_classes);
    const auto h = static_cast<std::size_t>(spec.hidden);
    (void)k;
    return MlpView{p, p + h * d, p + h * d + h, p + h * d + h + static_cast<std::size_t>(spec.n_classes) * h};
}

void forward_logits(const ModelSpec& spec, const double* p, std::span<const double> x,
                    std::vector<double>& hidden_out, std::vector<double>& logits) {
    const auto d = static_cast<std::size_t>(spec.n_features);
    const auto k = static_cast<std::size_t>(spec.n_classes);
    logits.assign(k, 0.0);
    if (spec.kind == ModelKind::logistic_regression) {
        // Reference class k-1 keeps a zero logit.
        for (std::size_t c = 0; c + 1 < k; ++c) {
            const double* row = p + c * (d + 1);
            double z = row[d]; // bias column
            for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
            logits[c] = z;
        }
        return;
    }
    const auto h = static_cast<std::size_t>(spec.hidden);
    const MlpView m = mlp_view(spec, p);
    hidden_out.assign(h, 0.0);
    for (std::size_t u = 0; u < h; ++u) {
        double z = m.b1[u];
        const double* row = m.w1 + u * d;
        for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
        hidden_out[u] = std::tanh(z);
    }
    for (std::size_t c = 0; c < k; ++c) {
        double z = m.b2[c];
        const double* row = m.w2 + c * h;
        for (std::size_t u = 0; u < h; ++u) z += row[u] * hidden_out[u];
        logits[c] = z;
    }
}

} // namespace

LossGrad loss_and_grad(const ModelSpec& spec, const ParamVector& params,
                       const LabeledDataset& batch) {
    if (params.size() != spec.param_count()) {
        throw DimensionError("loss_and_grad: parameter count mismatch");
    }
    const auto d = static_cast<std::size_t>(spec.n_features);
    const auto k = static_cast<std::size_t>(spec.n_classes);
    const double* p = params.data().data();
    std::vector<double> grad(params.size(), 0.0);
    std::vector<double> logits, hidden;
    double loss = 0.0;

    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto x = batch.row(i);
        const int y = batch.labels[i];
        forward_logits(spec, p, x, hidden, logits);
        softmax_inplace(logits);
        loss -= safe_log(logits[static_cast<std::size_t>(y)]);

        if (spec.kind == ModelKind::logistic_regression) {
            for (std::size_t c = 0; c + 1 < k; ++c) {
                const double delta = logits[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
                double* grow = grad.data() + c * (d + 1);
                for (std::size_t j = 0; j < d; ++j) grow[j] += delta * x[j];
                grow[d] += delta;
            }
        } else {
            const auto h = static_cast<std::size_t>(spec.hidden);
            const MlpView m = mlp_view(spec, p);
            double* gw1 = grad.data();
            double* gb1 = grad.data() + h * d;
            double* gw2 = grad.data() + h * d + h;
            double* gb2 = grad.data() + h * d + h + k * h;
            std::vector<double> dhidden(h, 0.0);
            for (std::size_t c = 0; c < k; ++c) {
                const double delta = logits[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
                gb2[c] += delta;
                double* grow = gw2 + c * h;
                const double* wrow = m.w2 + c * h;
                for (std::size_t u = 0; u < h; ++u) {
                    grow[u] += delta * hidden[u];
                    dhidden[u] += delta * wrow[u];
                }
            }
            for (std::size_t u = 0; u < h; ++u) {
                const double dz = dhidden[u] * (1.0 - hidden[u] * hidden[u]);
                gb1[u] += dz;
                double* grow = gw1 + u * d;
                for (std::size_t j = 0; j < d; ++j) grow[j] += dz * x[j];
            }
        }
    }

    const double inv = batch.size() > 0 ? 1.0 / static_cast<double>(batch.size()) : 0.0;
    for (double& g : grad) g *= inv;
    return LossGrad{loss * inv, ParamVector(std::move(grad))};
}

double mean_loss(const ModelSpec& spec, const ParamVector& params, const LabeledDataset& data) {
    const double* p = params.data().data();
    std::vector<double> logits, hidden;
    double loss = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        forward_logits(spec, p, data.row(i), hidden, logits);
        softmax_inplace(logits);
        loss -= safe_log(logits[static_cast<std::size_t>(data.labels[i])]);
    }
    return data.size() > 0 ? loss / static_cast<double>(data.size()) : 0.0;
}

int predict_one(const ModelSpec& spec, const ParamVector& params, std::span<const double> x) {
    std::vector<double> logits, hidden;
    forward_logits(spec, params.data().data(), x, hidden, logits);
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::vector<int> predict(const ModelSpec& spec, const ParamVector& params,
                         const LabeledDataset& data) {
    std::vector<int> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict_one(spec, params, data.row(i));
    return out;
}

TrainTrace train_sgd(const ModelSpec& spec, const ParamVector& start, const LabeledDataset& data,
                     int epochs, double learning_rate, int batch_size, std::uint64_t seed) {
    if (start.size() != spec.param_count()) {
        throw DimensionError("train_sgd: parameter count mismatch");
    }
    if (batch_size <= 0) throw RangeError("train_sgd: batch_size must be positive");

    std::vector<double> params(start.data());
    Rng rng(seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    TrainTrace trace;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(batch_size)) {
            const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(batch_size));
            const LabeledDataset batch = data.select(
                std::span<const std::size_t>(order).subspan(pos, end - pos));
            const LossGrad lg = loss_and_grad(spec, ParamVector(params), batch);
            for (std::size_t j = 0; j < params.size(); ++j) {
                params[j] -= learning_rate * lg.grad[j];
            }
        }
        trace.epoch_losses.push_back(mean_loss(spec, ParamVector(params), data));
    }
    trace.params = ParamVector(std::move(params));
    return trace;
}

} // namespace flsentry
