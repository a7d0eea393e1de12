#include "flsentry/engine.hpp"

namespace flsentry {

void TrainConfig::validate() const {
    if (n_clients < 2) throw ConfigError("train: n_clients must be >= 2");
    if (local_epochs < 0) throw ConfigError("train: local_epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (batch_size <= 0) throw ConfigError("train: batch_size must be positive");
    if (rounds <= 0) throw ConfigError("train: rounds must be positive");
    if (model_kind == ModelKind::mlp && mlp_hidden <= 0) {
        throw ConfigError("train: mlp_hidden must be positive");
    }
}

ClientUpdate make_update(const ModelSpec& spec, int client_id, int round, ParamVector model) {
    ParamVector segment = importance_layer(spec.layered(model));
    return ClientUpdate{client_id, round, std::move(model), std::move(segment)};
}

ClientUpdate local_train(const ParamVector& global, const LabeledDataset& shard,
                         const ModelSpec& spec, const TrainConfig& cfg, int client_id, int round,
                         std::uint64_t client_seed, std::vector<double>* loss_trace) {
    if (global.size() != spec.param_count()) {
        throw DimensionError("local_train: global model size does not match model spec");
    }
    TrainTrace trace = train_sgd(spec, global, shard, cfg.local_epochs, cfg.learning_rate,
                                 cfg.batch_size, client_seed);
    if (loss_trace != nullptr) *loss_trace = trace.epoch_losses;
    return make_update(spec, client_id, round, std::move(trace.params));
}

ParamVector fedavg(std::span<const ClientUpdate> updates, std::span<const double> weights) {
    if (updates.empty()) throw EmptyAggregationError("fedavg: no updates");
    if (!weights.empty() && weights.size() != updates.size()) {
        throw DimensionError("fedavg: weight count mismatch");
    }
    const std::size_t n = updates.front().model.size();
    std::vector<double> out(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        const ParamVector& m = updates[i].model;
        if (m.size() != n) throw DimensionError("fedavg: model length mismatch");
        const double w = weights.empty() ? 1.0 : weights[i];
        for (std::size_t j = 0; j < n; ++j) out[j] += w * m[j];
        total += w;
    }
    if (!(total > 0.0)) throw EmptyAggregationError("fedavg: nonpositive total weight");
    for (double& x : out) x /= total;
    return ParamVector(std::move(out));
}

Evaluation evaluate(const ModelSpec& spec, const ParamVector& model, const LabeledDataset& testset,
                    const LabeledDataset* trigger_testset, int target_label) {
    if (model.size() != spec.param_count()) {
        throw DimensionError("evaluate: model size does not match model spec");
    }
    Evaluation result;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < testset.size(); ++i) {
        if (predict_one(spec, model, testset.row(i)) == testset.labels[i]) ++correct;
    }
    result.accuracy =
        testset.size() > 0 ? static_cast<double>(correct) / static_cast<double>(testset.size()) : 0.0;

    if (trigger_testset != nullptr && trigger_testset->size() > 0) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < trigger_testset->size(); ++i) {
            if (predict_one(spec, model, trigger_testset->row(i)) == target_label) ++hits;
        }
        result.backdoor_success =
            static_cast<double>(hits) / static_cast<double>(trigger_testset->size());
    }
    return result;
}

} // namespace flsentry
