#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flsentry/defense.hpp"
#include "flsentry/rng.hpp"

using namespace flsentry;

namespace {

ClientUpdate seg_update(int id, std::vector<double> segment) {
    ParamVector v(std::move(segment));
    return ClientUpdate{id, 1, v, v};
}

std::vector<ClientUpdate> updates_from_scores(const std::vector<double>& scores) {
    std::vector<ClientUpdate> updates;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        updates.push_back(seg_update(static_cast<int>(i), {scores[i]}));
    }
    return updates;
}

ReferenceCache cache_with_avg(std::vector<double> avg) {
    ReferenceCache cache;
    cache.prev_avg = ParamVector(std::move(avg));
    cache.prev_global = *cache.prev_avg;
    return cache;
}

/// Brute-force three-sigma oracle in long double.
std::set<int> three_sigma_oracle(const std::vector<double>& scores, double lambda) {
    long double sum = 0.0L;
    for (double s : scores) sum += s;
    const long double mu = sum / static_cast<long double>(scores.size());
    long double sq = 0.0L;
    for (double s : scores) sq += (s - mu) * (s - mu);
    const long double sigma = std::sqrt(sq / static_cast<long double>(scores.size() - 1));
    const long double bound = mu + static_cast<long double>(lambda) * sigma;
    std::set<int> removed;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (static_cast<long double>(scores[i]) > bound) removed.insert(static_cast<int>(i));
    }
    return removed;
}

} // namespace

TEST_CASE("cross-round check flags round zero unconditionally") {
    const auto updates = updates_from_scores({1, 2, 3});
    const ReferenceCache empty;
    const CrossRoundResult result = cross_round_check(updates, empty, 0, 0.5);
    CHECK(result.attack_possible);
    CHECK(result.scores.empty());
}

TEST_CASE("cross-round check passes aligned updates and flags antipodal ones") {
    ReferenceCache cache;
    cache.prev_global = ParamVector({1, 2, 2});
    cache.prev_client[0] = ParamVector({1, 2, 2});
    cache.prev_client[1] = ParamVector({1, 2, 2});

    std::vector<ClientUpdate> updates{seg_update(0, {1, 2, 2}), seg_update(1, {2, 4, 4})};
    const CrossRoundResult clean = cross_round_check(updates, cache, 3, 0.5);
    CHECK(!clean.attack_possible);
    for (const auto& [id, score] : clean.scores) {
        (void)id;
        CHECK(score.sim_to_prev_global == doctest::Approx(1.0));
        REQUIRE(score.sim_to_prev_self.has_value());
        CHECK(*score.sim_to_prev_self == doctest::Approx(1.0));
    }

    updates[1] = seg_update(1, {-1, -2, -2});
    const CrossRoundResult flagged = cross_round_check(updates, cache, 3, 0.5);
    CHECK(flagged.attack_possible);
    CHECK(flagged.scores.at(1).sim_to_prev_global == doctest::Approx(-1.0));

    // Clients without history are compared only against the global segment.
    cache.prev_client.erase(1);
    const CrossRoundResult partial = cross_round_check(updates, cache, 3, 0.5);
    CHECK(!partial.scores.at(1).sim_to_prev_self.has_value());
}

TEST_CASE("cross-client detection matches the frozen three-sigma example") {
    const std::vector<double> scores{1, 1, 1, 1, 10};
    const auto updates = updates_from_scores(scores);
    const ReferenceCache cache = cache_with_avg({0.0});

    const CrossClientResult result = cross_client_detect(updates, cache, 1, 0.5);
    CHECK(result.report.removed == std::set<int>{4});
    CHECK(result.survivors == std::vector<std::size_t>{0, 1, 2, 3});
    REQUIRE(result.report.stats.has_value());
    CHECK(result.report.stats->mean == doctest::Approx(2.8));
    CHECK(std::abs(result.report.stats->std_dev - std::sqrt(16.2)) < 1e-9);
    REQUIRE(result.report.bound.has_value());
    CHECK(*result.report.bound == doctest::Approx(2.8 + 0.5 * std::sqrt(16.2)));
    CHECK(result.report.evilness.at(4) == doctest::Approx(10.0));
}

TEST_CASE("cross-client detection degenerate and lambda-dominated cases") {
    const auto identical = updates_from_scores({2, 2, 2, 2});
    const ReferenceCache cache = cache_with_avg({0.0});
    const CrossClientResult none = cross_client_detect(identical, cache, 1, 0.5);
    CHECK(none.report.removed.empty());
    CHECK(none.survivors.size() == 4);

    const auto spread = updates_from_scores({1, 5, 9, 2, 8});
    const CrossClientResult huge = cross_client_detect(spread, cache, 1, 1e18);
    CHECK(huge.report.removed.empty());
}

TEST_CASE("cross-client removal equals the brute-force rule with a strict boundary") {
    Rng rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 3 + rng.below(20);
        std::vector<double> scores(n);
        for (double& s : scores) s = 100.0 * rng.uniform();
        const double lambda = 0.1 + 2.9 * rng.uniform();
        const auto updates = updates_from_scores(scores);
        const ReferenceCache cache = cache_with_avg({0.0});
        const CrossClientResult result = cross_client_detect(updates, cache, 1, lambda);
        CHECK(result.report.removed == three_sigma_oracle(scores, lambda));
        CHECK(!result.survivors.empty());
    }
}

TEST_CASE("krum scores use the smallest L-f-2 squared distances") {
    std::vector<ParamVector> identical(4, ParamVector({1, 2}));
    for (std::size_t i = 0; i < identical.size(); ++i) {
        CHECK(krum_score(identical, i, 1) == doctest::Approx(0.0));
    }

    std::vector<ParamVector> cohort{ParamVector({0.0}), ParamVector({0.0}), ParamVector({0.0}),
                                    ParamVector({10.0})};
    CHECK(krum_score(cohort, 3, 1) == doctest::Approx(100.0));
    CHECK(krum_score(cohort, 0, 1) == doctest::Approx(0.0));

    CHECK_THROWS_AS(krum_score(std::vector<ParamVector>{ParamVector({1.0})}, 0, 0),
                    InsufficientClientsError);

    // Permutation invariance of each client's score.
    Rng rng(4);
    std::vector<ParamVector> models;
    for (int i = 0; i < 6; ++i) {
        std::vector<double> v(3);
        for (double& x : v) x = rng.normal();
        models.push_back(ParamVector(v));
    }
    const double base = krum_score(models, 2, 1);
    std::vector<ParamVector> permuted{models[4], models[0], models[2], models[5], models[1],
                                      models[3]};
    CHECK(krum_score(permuted, 2, 1) == doctest::Approx(base));
}

TEST_CASE("krum aggregation keeps the lowest scores with id tie-breaks") {
    std::vector<ParamVector> identical(4, ParamVector({3, 4}));
    const std::vector<int> ids{0, 1, 2, 3};
    CHECK(krum_aggregate(identical, ids, 2, 1) == ParamVector({3, 4}));

    std::vector<ParamVector> cohort{ParamVector({0.0}), ParamVector({0.0}), ParamVector({0.0}),
                                    ParamVector({10.0})};
    CHECK(krum_aggregate(cohort, ids, 2, 1) == ParamVector({0.0}));

    // m = 1 with a score tie: client with the lower id wins.
    std::vector<ParamVector> tie{ParamVector({1.0}), ParamVector({2.0}), ParamVector({100.0})};
    const std::vector<int> tie_ids{0, 1, 2};
    CHECK(krum_select(tie, tie_ids, 1, 0) == std::vector<int>{0});
    CHECK(krum_aggregate(tie, tie_ids, 1, 0) == ParamVector({1.0}));
}

TEST_CASE("krum aggregation is permutation invariant") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ParamVector> models;
        std::vector<int> ids;
        const std::size_t n = 4 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v(2);
            for (double& x : v) x = rng.normal();
            models.push_back(ParamVector(v));
            ids.push_back(static_cast<int>(i));
        }
        const ParamVector base = krum_aggregate(models, ids, 3, 1);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::vector<ParamVector> shuffled;
        std::vector<int> shuffled_ids;
        for (std::size_t idx : order) {
            shuffled.push_back(models[idx]);
            shuffled_ids.push_back(ids[idx]);
        }
        CHECK(krum_aggregate(shuffled, shuffled_ids, 3, 1) == base);
    }
}

TEST_CASE("rfa approximates the geometric median") {
    const std::vector<ParamVector> single{ParamVector({2, 3})};
    CHECK(rfa_aggregate(single) == ParamVector({2, 3}));

    const std::vector<ParamVector> skewed{ParamVector({-1.0}), ParamVector({0.0}),
                                          ParamVector({1.0}), ParamVector({1000.0})};
    const ParamVector median = rfa_aggregate(skewed);
    CHECK(median[0] >= 0.0);
    CHECK(median[0] <= 1.0);

    // Symmetric point set: the centroid is the fixed point.
    const std::vector<ParamVector> symmetric{ParamVector({1, 0}), ParamVector({-1, 0}),
                                             ParamVector({0, 1}), ParamVector({0, -1})};
    const ParamVector center = rfa_aggregate(symmetric);
    CHECK(std::abs(center[0]) < 1e-9);
    CHECK(std::abs(center[1]) < 1e-9);
}

TEST_CASE("rfa is translation equivariant") {
    Rng rng(6);
    std::vector<ParamVector> models;
    for (int i = 0; i < 5; ++i) {
        std::vector<double> v(3);
        for (double& x : v) x = 2.0 * rng.normal();
        models.push_back(ParamVector(v));
    }
    const ParamVector base = rfa_aggregate(models);
    const ParamVector shift({5.0, -3.0, 0.5});
    std::vector<ParamVector> shifted;
    for (const auto& m : models) shifted.push_back(add(m, shift));
    const ParamVector moved = rfa_aggregate(shifted);
    CHECK(l2_distance(moved, add(base, shift)) < 1e-6);
}

TEST_CASE("foolsgold downweights colluding histories") {
    // Two colluders share an identical history; the aggregate should ignore
    // their (huge) models.
    std::vector<ClientUpdate> updates{seg_update(0, {1000.0}), seg_update(1, {1000.0}),
                                      seg_update(2, {1.0}), seg_update(3, {3.0})};
    std::map<int, ParamVector> history;
    history[0] = ParamVector({1.0, 1.0, 0.0});
    history[1] = ParamVector({1.0, 1.0, 0.0});
    history[2] = ParamVector({1.0, 0.0, 0.0});
    history[3] = ParamVector({0.0, 0.0, 1.0});
    const ParamVector result = foolsgold_aggregate(updates, history);
    CHECK(result[0] < 10.0); // colluders contribute (almost) nothing

    // Orthogonal histories keep the plain mean.
    std::map<int, ParamVector> orthogonal;
    orthogonal[0] = ParamVector({1.0, 0.0, 0.0, 0.0});
    orthogonal[1] = ParamVector({0.0, 1.0, 0.0, 0.0});
    orthogonal[2] = ParamVector({0.0, 0.0, 1.0, 0.0});
    orthogonal[3] = ParamVector({0.0, 0.0, 0.0, 1.0});
    std::vector<ClientUpdate> plain{seg_update(0, {1.0}), seg_update(1, {2.0}),
                                    seg_update(2, {3.0}), seg_update(3, {6.0})};
    const ParamVector mean_result = foolsgold_aggregate(plain, orthogonal);
    CHECK(mean_result[0] == doctest::Approx(3.0));
}

TEST_CASE("foolsgold downweights a similar pair below the others") {
    std::map<int, ParamVector> history;
    history[0] = ParamVector({1.0, 0.0, 0.0});
    history[1] = ParamVector({0.9, std::sqrt(1.0 - 0.81), 0.0}); // cs(0,1) = 0.9
    history[2] = ParamVector({0.0, 0.0, 1.0});
    // Pair members submit +100, the independent client submits 0; with the
    // pair downweighted the aggregate stays near zero.
    std::vector<ClientUpdate> updates{seg_update(0, {100.0}), seg_update(1, {100.0}),
                                      seg_update(2, {0.0})};
    const ParamVector result = foolsgold_aggregate(updates, history);
    CHECK(result[0] < 50.0);
}

TEST_CASE("two-stage defense composes the stages") {
    ReferenceCache cache;
    cache.prev_global = ParamVector({1, 1, 1});
    cache.prev_avg = ParamVector({1, 1, 1});
    for (int i = 0; i < 4; ++i) cache.prev_client[i] = ParamVector({1, 1, 1});

    DefenseParams params; // gamma 0.5, lambda 0.5
    std::vector<ClientUpdate> benign;
    for (int i = 0; i < 4; ++i) benign.push_back(seg_update(i, {1.0, 1.0, 1.0 + 0.01 * i}));

    const TwoStageResult calm = two_stage_defense(benign, cache, 2, params);
    CHECK(!calm.report.attack_flag);
    CHECK(calm.report.removed.empty());
    CHECK(calm.survivors.size() == 4);
    CHECK(!calm.report.stats.has_value());
    CHECK(calm.report.cross_round_scores.size() == 4);

    // Round zero always runs stage two.
    const TwoStageResult round0 = two_stage_defense(benign, ReferenceCache{}, 0, params);
    CHECK(round0.report.attack_flag);
    CHECK(round0.report.stats.has_value());

    // One antipodal submission trips stage one and gets removed in stage two.
    std::vector<ClientUpdate> attacked = benign;
    attacked[3] = seg_update(3, {-40.0, -40.0, -40.0});
    const TwoStageResult caught = two_stage_defense(attacked, cache, 2, params);
    CHECK(caught.report.attack_flag);
    CHECK(caught.report.removed == std::set<int>{3});
    CHECK(caught.survivors == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("two-stage defense is scale invariant") {
    Rng rng(12);
    DefenseParams params;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng.below(4);
        ReferenceCache cache;
        std::vector<double> ref(3);
        for (double& x : ref) x = 1.0 + rng.uniform();
        cache.prev_global = ParamVector(ref);
        cache.prev_avg = ParamVector(ref);
        std::vector<ClientUpdate> updates;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v(3);
            for (double& x : v) x = rng.normal();
            updates.push_back(seg_update(static_cast<int>(i), v));
            cache.prev_client[static_cast<int>(i)] = ParamVector(ref);
        }
        const TwoStageResult base = two_stage_defense(updates, cache, 1, params);

        const double c = 0.5 + 4.0 * rng.uniform();
        ReferenceCache scaled_cache;
        scaled_cache.prev_global = scale(*cache.prev_global, c);
        scaled_cache.prev_avg = scale(*cache.prev_avg, c);
        for (const auto& [id, seg] : cache.prev_client) {
            scaled_cache.prev_client[id] = scale(seg, c);
        }
        std::vector<ClientUpdate> scaled_updates;
        for (const auto& u : updates) {
            scaled_updates.push_back(seg_update(u.client_id, scale(u.model, c).data()));
        }
        const TwoStageResult scaled = two_stage_defense(scaled_updates, scaled_cache, 1, params);
        CHECK(scaled.report.attack_flag == base.report.attack_flag);
        CHECK(scaled.report.removed == base.report.removed);
    }
}

TEST_CASE("detection report JSON round-trips with exact field names") {
    DetectionReport report;
    report.round = 7;
    report.attack_flag = true;
    report.cross_round_scores[3] = CrossRoundScore{0.97, 0.91};
    report.cross_round_scores[4] = CrossRoundScore{0.42, std::nullopt};
    report.evilness[3] = 1.25;
    report.evilness[4] = 9.5;
    report.stats = ScoreStats{2.0, 1.5, 5};
    report.bound = 2.75;
    report.removed = {4};

    const std::string text = detection_report_to_json(report);
    CHECK(text.find("\"round\"") != std::string::npos);
    CHECK(text.find("\"attack_flag\"") != std::string::npos);
    CHECK(text.find("\"cross_round_scores\"") != std::string::npos);
    CHECK(text.find("\"sim_to_prev_global\"") != std::string::npos);
    CHECK(text.find("\"sim_to_prev_self\"") != std::string::npos);
    CHECK(text.find("\"evilness\"") != std::string::npos);
    CHECK(text.find("\"stats\"") != std::string::npos);
    CHECK(text.find("\"std_dev\"") != std::string::npos);
    CHECK(text.find("\"bound\"") != std::string::npos);
    CHECK(text.find("\"removed\"") != std::string::npos);

    const DetectionReport parsed = detection_report_from_json(text);
    CHECK(parsed.round == report.round);
    CHECK(parsed.attack_flag == report.attack_flag);
    CHECK(parsed.removed == report.removed);
    CHECK(parsed.evilness.at(4) == doctest::Approx(9.5));
    CHECK(parsed.cross_round_scores.at(3).sim_to_prev_self.has_value());
    CHECK(!parsed.cross_round_scores.at(4).sim_to_prev_self.has_value());
    REQUIRE(parsed.stats.has_value());
    CHECK(parsed.stats->count == 5);
    REQUIRE(parsed.bound.has_value());
    CHECK(*parsed.bound == doctest::Approx(2.75));
}
