#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flsentry/dataset.hpp"
#include "flsentry/rng.hpp"
#include "flsentry/tensor.hpp"

namespace flsentry {

enum class ModelKind { logistic_regression, mlp };

/// Shape description for the two desk-scale models. Logistic regression uses
/// the identifiable multinomial parameterization: classes-1 logit rows of
/// shape (features+1) with the bias folded into the last column and the last
/// class pinned to a zero logit, so no weight direction is loss-invariant.
/// The MLP is one tanh hidden layer followed by a linear output.
struct ModelSpec {
    ModelKind kind = ModelKind::logistic_regression;
    int n_features = 0;
    int n_classes = 0;
    int hidden = 16; // MLP only

    std::size_t param_count() const;
    std::vector<LayerSpec> layer_specs() const;
    LayeredModel layered(ParamVector params) const;
};

/// Fresh parameters: zeros for logistic regression, small Gaussian weights for
/// the MLP hidden/output tensors.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

/// Mean cross-entropy over the batch plus the full gradient.
struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};
LossGrad loss_and_grad(const ModelSpec& spec, const ParamVector& params,
                       const LabeledDataset& batch);

double mean_loss(const ModelSpec& spec, const ParamVector& params, const LabeledDataset& data);

int predict_one(const ModelSpec& spec, const ParamVector& params, std::span<const double> x);
std::vector<int> predict(const ModelSpec& spec, const ParamVector& params,
                         const LabeledDataset& data);

struct TrainTrace {
    ParamVector params;
    std::vector<double> epoch_losses; // full-pass loss after each epoch
};

/// Plain mini-batch SGD on softmax cross-entropy. Deterministic for a fixed
/// seed; epochs == 0 returns the starting parameters untouched.
TrainTrace train_sgd(const ModelSpec& spec, const ParamVector& start, const LabeledDataset& data,
                     int epochs, double learning_rate, int batch_size, std::uint64_t seed);

} // namespace flsentry
