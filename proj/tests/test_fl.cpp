#include <doctest.h>

#include <cmath>

#include "flsentry/engine.hpp"
#include "flsentry/threat.hpp"

using namespace flsentry;

namespace {

const ModelSpec kLrSpec{ModelKind::logistic_regression, 4, 3, 0};

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.n_clients = 4;
    cfg.local_epochs = 2;
    cfg.learning_rate = 0.1;
    cfg.batch_size = 16;
    cfg.rounds = 3;
    cfg.seed = 1;
    return cfg;
}

ClientUpdate raw_update(int id, std::vector<double> values) {
    ParamVector v(std::move(values));
    return ClientUpdate{id, 0, v, v};
}

} // namespace

TEST_CASE("zero local epochs return the global model untouched") {
    const LabeledDataset shard = generate_blobs(3, 4, 60, 2);
    TrainConfig cfg = small_config();
    cfg.local_epochs = 0;
    const ParamVector global = init_params(kLrSpec, 1);
    const ClientUpdate update = local_train(global, shard, kLrSpec, cfg, 0, 0, 9);
    CHECK(update.model == global);
    CHECK(update.importance_segment == global); // single tensor
}

TEST_CASE("local training is deterministic and decreases the loss") {
    const LabeledDataset shard = generate_blobs(3, 4, 200, 2);
    const TrainConfig cfg = small_config();
    const ParamVector global = init_params(kLrSpec, 1);

    std::vector<double> losses_a, losses_b;
    const ClientUpdate a = local_train(global, shard, kLrSpec, cfg, 0, 0, 1234, &losses_a);
    const ClientUpdate b = local_train(global, shard, kLrSpec, cfg, 0, 0, 1234, &losses_b);
    CHECK(a.model == b.model);
    CHECK(losses_a == losses_b);

    TrainConfig longer = cfg;
    longer.local_epochs = 5;
    std::vector<double> losses;
    local_train(global, shard, kLrSpec, longer, 0, 0, 7, &losses);
    REQUIRE(losses.size() == 5);
    for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
}

TEST_CASE("local training validates the global shape") {
    const LabeledDataset shard = generate_blobs(3, 4, 50, 2);
    CHECK_THROWS_AS(local_train(ParamVector::zeros(5), shard, kLrSpec, small_config(), 0, 0, 1),
                    DimensionError);
}

TEST_CASE("mlp training learns the blobs") {
    const ModelSpec spec{ModelKind::mlp, 4, 3, 8};
    const LabeledDataset data = generate_blobs(3, 4, 600, 21);
    const TrainTrace trace = train_sgd(spec, init_params(spec, 3), data, 6, 0.1, 16, 5);
    std::size_t correct = 0;
    const auto preds = predict(spec, trace.params, data);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (preds[i] == data.labels[i]) ++correct;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(data.size()) > 0.9);
    CHECK(trace.epoch_losses.front() > trace.epoch_losses.back());
}

TEST_CASE("fedavg averages elementwise") {
    const auto one = raw_update(0, {1, 3});
    const auto two = raw_update(1, {3, 5});
    CHECK(fedavg(std::vector<ClientUpdate>{one}) == one.model);
    CHECK(fedavg(std::vector<ClientUpdate>{one, two}) == ParamVector({2, 4}));

    const auto plus = raw_update(0, {2, -1});
    const auto minus = raw_update(1, {-2, 1});
    CHECK(fedavg(std::vector<ClientUpdate>{plus, minus}) == ParamVector({0, 0}));

    CHECK_THROWS_AS(fedavg(std::vector<ClientUpdate>{}), EmptyAggregationError);

    const std::vector<double> weights{3.0, 1.0};
    CHECK(fedavg(std::vector<ClientUpdate>{one, two}, weights) == ParamVector({1.5, 3.5}));
}

TEST_CASE("evaluation measures accuracy and trigger success") {
    // Zero weights predict class 0 everywhere; balanced two-class testset
    // gives exactly one half.
    const ModelSpec spec{ModelKind::logistic_regression, 2, 2, 0};
    const LabeledDataset test = generate_blobs(2, 2, 400, 3);
    const Evaluation eval = evaluate(spec, init_params(spec, 1), test);
    CHECK(eval.accuracy == doctest::Approx(0.5));
    CHECK(!eval.backdoor_success.has_value());

    const TrainTrace trace = train_sgd(spec, init_params(spec, 1), test, 4, 0.2, 16, 2);
    const Evaluation trained = evaluate(spec, trace.params, test);
    CHECK(trained.accuracy > 0.95);

    // Trigger testset relabeled as class 1 by a heavily biased model.
    BackdoorSpec backdoor;
    backdoor.trigger_feature_indices = {0};
    backdoor.trigger_value = 50.0;
    backdoor.target_label = 1;
    const LabeledDataset triggered = apply_trigger(test, backdoor);
    const Evaluation with_trigger = evaluate(spec, trace.params, test, &triggered, 1);
    REQUIRE(with_trigger.backdoor_success.has_value());
    CHECK(*with_trigger.backdoor_success >= 0.0);
    CHECK(*with_trigger.backdoor_success <= 1.0);
}

TEST_CASE("memorization beats holdout accuracy") {
    const ModelSpec spec{ModelKind::logistic_regression, 3, 2, 0};
    const LabeledDataset train = generate_blobs(2, 3, 300, 31);
    const LabeledDataset holdout = generate_blobs(2, 3, 300, 32);
    const TrainTrace trace = train_sgd(spec, init_params(spec, 1), train, 8, 0.2, 16, 3);
    const double train_acc = evaluate(spec, trace.params, train).accuracy;
    const double holdout_acc = evaluate(spec, trace.params, holdout).accuracy;
    CHECK(train_acc >= holdout_acc - 1e-9);
}

TEST_CASE("byzantine attack modes") {
    Rng rng(5);
    const auto update = raw_update(3, {1, 0, 0, 0});

    Rng zero_rng(5);
    const ClientUpdate unchanged =
        apply_byzantine(update, ModelSpec{ModelKind::logistic_regression, 3, 2, 0}, 0.0,
                        ByzantineMode::additive, zero_rng);
    CHECK(unchanged.model == update.model);

    // Expected displacement for 100-dim unit-scale noise is about sqrt(100).
    const ModelSpec spec100{ModelKind::logistic_regression, 99, 2, 0}; // 1*(99+1) = 100 params
    std::vector<double> base(100, 0.1);
    const ClientUpdate wide = raw_update(0, base);
    double total = 0.0;
    const int trials = 1000;
    for (int i = 0; i < trials; ++i) {
        const ClientUpdate noisy =
            apply_byzantine(wide, spec100, 1.0, ByzantineMode::additive, rng);
        total += l2_distance(noisy.model, wide.model);
    }
    const double mean_distance = total / trials;
    CHECK(mean_distance > 7.0);
    CHECK(mean_distance < 13.0);

    Rng r1(9), r2(9);
    const ClientUpdate d1 = apply_byzantine(wide, spec100, 1.0, ByzantineMode::replace, r1);
    const ClientUpdate d2 = apply_byzantine(wide, spec100, 1.0, ByzantineMode::replace, r2);
    CHECK(d1.model == d2.model);
}

TEST_CASE("model replacement boosts toward the backdoored model") {
    const ModelSpec spec{ModelKind::logistic_regression, 3, 2, 0}; // 4 params
    const ParamVector global({1, 1, 1, 1});
    const ParamVector backdoored({2, 0, 1, 3});
    const auto update = raw_update(0, {1, 1, 1, 1});

    CHECK(apply_model_replacement(update, spec, global, 1.0, backdoored).model == backdoored);
    CHECK(apply_model_replacement(update, spec, global, 0.0, backdoored).model == global);

    // With boost = n and all other deltas zero, plain averaging recovers the
    // backdoored model.
    const int n = 10;
    std::vector<ClientUpdate> updates;
    for (int i = 0; i < n - 1; ++i) updates.push_back(raw_update(i, {1, 1, 1, 1}));
    updates.push_back(apply_model_replacement(raw_update(n - 1, {1, 1, 1, 1}), spec, global,
                                              static_cast<double>(n), backdoored));
    const ParamVector averaged = fedavg(updates);
    for (std::size_t j = 0; j < averaged.size(); ++j) {
        CHECK(averaged[j] == doctest::Approx(backdoored[j]).epsilon(1e-9));
    }
}

TEST_CASE("free riders resubmit the previous global") {
    const ModelSpec spec{ModelKind::logistic_regression, 99, 2, 0};
    std::vector<double> g(100);
    Rng init(3);
    for (double& v : g) v = init.normal();
    ParamVector prev_global(g);
    prev_global = scale(prev_global, 1.0 / norm(prev_global)); // unit norm
    const auto update = raw_update(0, std::vector<double>(100, 5.0));

    Rng r0(11);
    const ClientUpdate exact = apply_free_rider(update, spec, prev_global, r0, 0.0);
    CHECK(exact.model == prev_global);

    Rng r1(11);
    for (int i = 0; i < 50; ++i) {
        const ClientUpdate rider = apply_free_rider(update, spec, prev_global, r1);
        CHECK(cosine_similarity(rider.model, prev_global) > 0.999);
    }

    Rng r2(13), r3(13);
    CHECK(apply_free_rider(update, spec, prev_global, r2).model ==
          apply_free_rider(update, spec, prev_global, r3).model);
}

TEST_CASE("attack schedule honours the probability") {
    ThreatPlan plan;
    plan.attack_kind = AttackKind::byzantine_random;
    plan.malicious_ids = {0, 1};
    plan.seed = 5;

    plan.attack_probability = 0.0;
    Rng never_rng(1);
    for (int round = 0; round < 100; ++round) {
        CHECK(!schedule(plan, round, 10, never_rng).attack_active);
    }

    plan.attack_probability = 1.0;
    Rng always_rng(1);
    for (int round = 0; round < 100; ++round) {
        const auto decision = schedule(plan, round, 10, always_rng);
        CHECK(decision.attack_active);
        CHECK(decision.targets == plan.malicious_ids);
    }

    plan.attack_probability = 0.4;
    Rng rng(2);
    int active = 0;
    const int rounds = 10000;
    for (int round = 0; round < rounds; ++round) {
        if (schedule(plan, round, 10, rng).attack_active) ++active;
    }
    const double fraction = static_cast<double>(active) / rounds;
    CHECK(fraction > 0.38);
    CHECK(fraction < 0.42);

    plan.all_malicious_rounds = true;
    Rng all_rng(3);
    plan.attack_probability = 1.0;
    const auto decision = schedule(plan, 0, 4, all_rng);
    CHECK(decision.targets == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("threat plans enforce the honest majority unless overridden") {
    ThreatPlan plan;
    plan.attack_kind = AttackKind::byzantine_random;
    plan.malicious_ids = {0, 1, 2, 3, 4};
    CHECK_THROWS_AS(plan.validate(10), ConfigError);
    plan.malicious_ids = {0, 1, 2, 3};
    CHECK_NOTHROW(plan.validate(10));
    plan.malicious_ids = {0, 1, 2, 3, 4};
    plan.all_malicious_rounds = true;
    CHECK_NOTHROW(plan.validate(10));
}
