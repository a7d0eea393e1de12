#include <benchmark/benchmark.h>

#include "flsentry/defense.hpp"
#include "flsentry/gadgets.hpp"
#include "flsentry/prover.hpp"
#include "flsentry/verifier.hpp"

using namespace flsentry;

namespace {

std::vector<ClientUpdate> make_updates(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ClientUpdate> updates;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dim);
        for (double& x : v) x = 1.0 + 0.1 * rng.normal();
        ParamVector p(std::move(v));
        updates.push_back(ClientUpdate{static_cast<int>(i), 0, p, p});
    }
    return updates;
}

void BM_CrossClientDetect(benchmark::State& state) {
    const auto updates = make_updates(10, static_cast<std::size_t>(state.range(0)), 3);
    ReferenceCache cache;
    cache.prev_avg = ParamVector(std::vector<double>(static_cast<std::size_t>(state.range(0)), 1.0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(cross_client_detect(updates, cache, 1, 0.5));
    }
}
BENCHMARK(BM_CrossClientDetect)->Arg(64)->Arg(256)->Arg(1024);

void BM_KrumAggregate(benchmark::State& state) {
    const auto updates = make_updates(static_cast<std::size_t>(state.range(0)), 128, 5);
    std::vector<ParamVector> models;
    std::vector<int> ids;
    for (const auto& u : updates) {
        models.push_back(u.model);
        ids.push_back(u.client_id);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(krum_aggregate(models, ids, static_cast<int>(models.size()) / 2,
                                                static_cast<int>(models.size()) / 2));
    }
}
BENCHMARK(BM_KrumAggregate)->Arg(10)->Arg(20);

void BM_FreivaldsCheck(benchmark::State& state) {
    const PrimeField field;
    Rng rng(7);
    const auto n = static_cast<std::size_t>(state.range(0));
    FieldMatrix a = FieldMatrix::zero(n, n);
    for (auto& v : a.data) v = field.uniform(rng);
    FieldMatrix b = FieldMatrix::zero(n, n);
    for (auto& v : b.data) v = field.uniform(rng);
    const FieldMatrix c = matmul(field, a, b);
    for (auto _ : state) {
        benchmark::DoNotOptimize(freivalds_check(field, a, b, c, 2, rng));
    }
}
BENCHMARK(BM_FreivaldsCheck)->Arg(16)->Arg(64);

void BM_MatmulDirect(benchmark::State& state) {
    const PrimeField field;
    Rng rng(7);
    const auto n = static_cast<std::size_t>(state.range(0));
    FieldMatrix a = FieldMatrix::zero(n, n);
    for (auto& v : a.data) v = field.uniform(rng);
    FieldMatrix b = FieldMatrix::zero(n, n);
    for (auto& v : b.data) v = field.uniform(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(field, a, b));
    }
}
BENCHMARK(BM_MatmulDirect)->Arg(16)->Arg(64);

void BM_ProveDetection(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto updates = make_updates(10, dim, 11);
    const ReferenceCache cache;
    DefenseParams params;
    const TwoStageResult stage = two_stage_defense(updates, cache, 0, params);

    ProveInputs inputs;
    inputs.round = 0;
    for (const auto& u : updates) {
        inputs.client_ids.push_back(u.client_id);
        inputs.segments.emplace_back(u.importance_segment.data());
    }
    inputs.params = params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(prove_detection(inputs, stage.report));
    }
}
BENCHMARK(BM_ProveDetection)->Arg(64)->Arg(256)->Arg(1024);

void BM_VerifyDetection(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto updates = make_updates(10, dim, 11);
    const ReferenceCache cache;
    DefenseParams params;
    const TwoStageResult stage = two_stage_defense(updates, cache, 0, params);

    ProveInputs inputs;
    inputs.round = 0;
    for (const auto& u : updates) {
        inputs.client_ids.push_back(u.client_id);
        inputs.segments.emplace_back(u.importance_segment.data());
    }
    inputs.params = params;
    const VerificationTranscript transcript = prove_detection(inputs, stage.report);

    PublicInputs pub;
    pub.params = params;
    pub.claimed_attack_flag = stage.report.attack_flag;
    pub.claimed_removed = stage.report.removed;
    for (int id : transcript.client_ids) {
        pub.expected_update_commitments[id] = transcript.commitment_for(vec_name::update(id));
    }
    Rng rng(13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(verify_detection(transcript, pub, rng));
    }
}
BENCHMARK(BM_VerifyDetection)->Arg(64)->Arg(256)->Arg(1024);

} // namespace

BENCHMARK_MAIN();
