#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "flsentry/dataset.hpp"
#include "flsentry/model.hpp"
#include "flsentry/tensor.hpp"

namespace flsentry {

/// One client's submission for a round. The importance segment is the
/// second-to-last tensor of the model (the whole vector for single-tensor
/// models) and is what detection and the reference cache operate on.
struct ClientUpdate {
    int client_id = 0;
    int round = 0;
    ParamVector model;
    ParamVector importance_segment;
};

/// Server-side cache renewed at the end of each round: the previous global
/// model's importance segment, the segments of clients deemed benign last
/// round, and the previous round's surviving-model average. Under uniform
/// averaging prev_global and prev_avg hold the same segment.
struct ReferenceCache {
    std::optional<ParamVector> prev_global;
    std::map<int, ParamVector> prev_client;
    std::optional<ParamVector> prev_avg;
};

struct TrainConfig {
    int n_clients = 10;
    int local_epochs = 1;
    double learning_rate = 0.1;
    int batch_size = 32;
    int rounds = 20;
    std::uint64_t seed = 1;
    ModelKind model_kind = ModelKind::logistic_regression;
    int mlp_hidden = 16;

    void validate() const;
};

ClientUpdate make_update(const ModelSpec& spec, int client_id, int round, ParamVector model);

/// Local mini-batch SGD from the current global model. Deterministic for a
/// fixed client seed; zero epochs returns the global model unchanged.
ClientUpdate local_train(const ParamVector& global, const LabeledDataset& shard,
                         const ModelSpec& spec, const TrainConfig& cfg, int client_id, int round,
                         std::uint64_t client_seed, std::vector<double>* loss_trace = nullptr);

/// Elementwise mean of the submitted models (uniform weights by default;
/// optional per-update sample-count weights).
ParamVector fedavg(std::span<const ClientUpdate> updates,
                   std::span<const double> weights = {});

struct Evaluation {
    double accuracy = 0.0;
    std::optional<double> backdoor_success;
};

/// Top-1 accuracy; when a trigger testset is supplied, also the fraction of it
/// classified as the backdoor target label.
Evaluation evaluate(const ModelSpec& spec, const ParamVector& model, const LabeledDataset& testset,
                    const LabeledDataset* trigger_testset = nullptr, int target_label = 0);

} // namespace flsentry
