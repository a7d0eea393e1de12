#include "flsentry/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace flsentry {

void DefenseParams::validate() const {
    if (gamma <= -1.0 || gamma >= 1.0) throw ConfigError("defense: gamma must be in (-1, 1)");
    if (!(lambda > 0.0)) throw ConfigError("defense: lambda must be positive");
    if (krum_m < 1) throw ConfigError("defense: krum_m must be >= 1");
}

std::string detection_report_to_json(const DetectionReport& report) {
    nlohmann::json j;
    j["round"] = report.round;
    j["attack_flag"] = report.attack_flag;
    nlohmann::json scores = nlohmann::json::object();
    for (const auto& [id, score] : report.cross_round_scores) {
        nlohmann::json s;
        s["sim_to_prev_global"] = score.sim_to_prev_global;
        if (score.sim_to_prev_self.has_value()) {
            s["sim_to_prev_self"] = *score.sim_to_prev_self;
        } else {
            s["sim_to_prev_self"] = nullptr;
        }
        scores[std::to_string(id)] = std::move(s);
    }
    j["cross_round_scores"] = std::move(scores);
    nlohmann::json evil = nlohmann::json::object();
    for (const auto& [id, e] : report.evilness) evil[std::to_string(id)] = e;
    j["evilness"] = std::move(evil);
    if (report.stats.has_value()) {
        j["stats"] = {{"mean", report.stats->mean},
                      {"std_dev", report.stats->std_dev},
                      {"count", report.stats->count}};
    } else {
        j["stats"] = nullptr;
    }
    if (report.bound.has_value()) {
        j["bound"] = *report.bound;
    } else {
        j["bound"] = nullptr;
    }
    j["removed"] = report.removed;
    return j.dump();
}

DetectionReport detection_report_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    DetectionReport report;
    report.round = j.at("round").get<int>();
    report.attack_flag = j.at("attack_flag").get<bool>();
    for (const auto& [key, value] : j.at("cross_round_scores").items()) {
        CrossRoundScore score;
        score.sim_to_prev_global = value.at("sim_to_prev_global").get<double>();
        if (!value.at("sim_to_prev_self").is_null()) {
            score.sim_to_prev_self = value.at("sim_to_prev_self").get<double>();
        }
        report.cross_round_scores[std::stoi(key)] = score;
    }
    for (const auto& [key, value] : j.at("evilness").items()) {
        report.evilness[std::stoi(key)] = value.get<double>();
    }
    if (!j.at("stats").is_null()) {
        ScoreStats stats;
        stats.mean = j["stats"].at("mean").get<double>();
        stats.std_dev = j["stats"].at("std_dev").get<double>();
        stats.count = j["stats"].at("count").get<std::size_t>();
        report.stats = stats;
    }
    if (!j.at("bound").is_null()) report.bound = j["bound"].get<double>();
    for (const auto& id : j.at("removed")) report.removed.insert(id.get<int>());
    return report;
}

CrossRoundResult cross_round_check(std::span<const ClientUpdate> updates,
                                   const ReferenceCache& cache, int round, double gamma) {
    if (updates.empty()) throw EmptyAggregationError("cross_round_check: no updates");
    CrossRoundResult result;
    if (round == 0 || !cache.prev_global.has_value()) {
        // No reference material yet (first round, or the cache was wiped by a
        // quarantined round): treat attacks as possible unconditionally.
        result.attack_possible = true;
        return result;
    }
    for (const ClientUpdate& update : updates) {
        CrossRoundScore score;
        score.sim_to_prev_global = cosine_similarity(update.importance_segment, *cache.prev_global);
        if (score.sim_to_prev_global < gamma) result.attack_possible = true;
        const auto it = cache.prev_client.find(update.client_id);
        if (it != cache.prev_client.end()) {
            score.sim_to_prev_self = cosine_similarity(update.importance_segment, it->second);
            if (*score.sim_to_prev_self < gamma) result.attack_possible = true;
        }
        result.scores[update.client_id] = score;
    }
    return result;
}

CrossClientResult cross_client_detect(std::span<const ClientUpdate> updates,
                                      const ReferenceCache& cache, int round, double lambda) {
    if (updates.empty()) throw EmptyAggregationError("cross_client_detect: no updates");
    if (!(lambda > 0.0)) throw ConfigError("cross_client_detect: lambda must be positive");

    std::vector<ParamVector> segments;
    std::vector<int> ids;
    segments.reserve(updates.size());
    for (const ClientUpdate& u : updates) {
        segments.push_back(u.importance_segment);
        ids.push_back(u.client_id);
    }

    ParamVector reference;
    if (round == 0 || !cache.prev_avg.has_value()) {
        // No cached average yet: approximate it with m-Krum, m = f = floor(L/2).
        const int half = static_cast<int>(updates.size()) / 2;
        reference = krum_aggregate(segments, ids, std::max(1, half), half);
    } else {
        reference = *cache.prev_avg;
    }

    CrossClientResult result;
    result.report.round = round;
    result.report.attack_flag = true;

    std::vector<double> scores(updates.size());
    for (std::size_t i = 0; i < updates.size(); ++i) {
        scores[i] = l2_distance(segments[i], reference);
        result.report.evilness[ids[i]] = scores[i];
    }
    const ScoreStats stats = sample_stats(scores);
    const double bound = stats.mean + lambda * stats.std_dev;
    result.report.stats = stats;
    result.report.bound = bound;

    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (scores[i] > bound) {
            result.report.removed.insert(ids[i]);
        } else {
            result.survivors.push_back(i);
        }
    }
    if (result.survivors.empty()) {
        throw AllRemovedSignal("cross_client_detect: every update exceeded the evilness bound");
    }
    return result;
}

double krum_score(std::span<const ParamVector> models, std::size_t i, int f) {
    const std::size_t count = models.size();
    if (count < 3) throw InsufficientClientsError("krum_score: need at least 3 models");
    std::vector<double> distances;
    distances.reserve(count - 1);
    for (std::size_t j = 0; j < count; ++j) {
        if (j == i) continue;
        if (models[j].size() != models[i].size()) {
            throw DimensionError("krum_score: length mismatch");
        }
        double squared = 0.0;
        for (std::size_t k = 0; k < models[i].size(); ++k) {
            const double d = models[i][k] - models[j][k];
            squared += d * d;
        }
        distances.push_back(squared);
    }
    std::sort(distances.begin(), distances.end());
    const auto neighbors = static_cast<std::size_t>(
        std::max(1, static_cast<int>(count) - f - 2));
    double score = 0.0;
    for (std::size_t k = 0; k < std::min(neighbors, distances.size()); ++k) score += distances[k];
    return score;
}

std::vector<int> krum_select(std::span<const ParamVector> models, std::span<const int> ids, int m,
                             int f) {
    if (models.size() != ids.size()) throw DimensionError("krum_select: id count mismatch");
    if (models.size() < 3) throw InsufficientClientsError("krum_select: need at least 3 models");
    std::vector<std::pair<double, int>> scored;
    scored.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        scored.emplace_back(krum_score(models, i, f), ids[i]);
    }
    std::sort(scored.begin(), scored.end()); // score, then client id
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, m)), scored.size());
    std::vector<int> selected;
    selected.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) selected.push_back(scored[k].second);
    std::sort(selected.begin(), selected.end());
    return selected;
}

ParamVector krum_aggregate(std::span<const ParamVector> models, std::span<const int> ids, int m,
                           int f) {
    const std::vector<int> selected = krum_select(models, ids, m, f);
    std::vector<ParamVector> kept;
    kept.reserve(selected.size());
    for (int id : selected) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] == id) {
                kept.push_back(models[i]);
                break;
            }
        }
    }
    return mean(kept);
}

ParamVector rfa_aggregate(std::span<const ParamVector> models, int max_iters, double epsilon) {
    if (models.empty()) throw EmptyAggregationError("rfa_aggregate: no models");
    ParamVector z = mean(models);
    for (int iter = 0; iter < max_iters; ++iter) {
        std::vector<double> next(z.size(), 0.0);
        double weight_sum = 0.0;
        for (const ParamVector& w : models) {
            const double d = std::max(epsilon, l2_distance(w, z));
            const double inv = 1.0 / d;
            for (std::size_t j = 0; j < z.size(); ++j) next[j] += inv * w[j];
            weight_sum += inv;
        }
        for (double& v : next) v /= weight_sum;
        ParamVector candidate{std::move(next)};
        const double movement = l2_distance(candidate, z);
        z = std::move(candidate);
        if (movement < epsilon) break;
    }
    return z;
}

ParamVector foolsgold_aggregate(std::span<const ClientUpdate> updates,
                                const std::map<int, ParamVector>& history) {
    if (updates.empty()) throw EmptyAggregationError("foolsgold_aggregate: no updates");
    const std::size_t n = updates.size();
    std::vector<const ParamVector*> hist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = history.find(updates[i].client_id);
        if (it == history.end()) {
            throw Error("foolsgold_aggregate: missing history for client " +
                        std::to_string(updates[i].client_id));
        }
        hist[i] = &it->second;
    }

    // Highest pairwise similarity per client on cumulative histories.
    std::vector<double> max_cs(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double cs = 0.0;
            if (norm(*hist[i]) > 0.0 && norm(*hist[j]) > 0.0) {
                cs = cosine_similarity(*hist[i], *hist[j]);
            }
            max_cs[i] = std::max(max_cs[i], cs);
            max_cs[j] = std::max(max_cs[j], cs);
        }
    }

    std::vector<double> wv(n);
    for (std::size_t i = 0; i < n; ++i) wv[i] = std::clamp(1.0 - max_cs[i], 0.0, 1.0);
    const double wv_max = *std::max_element(wv.begin(), wv.end());
    if (wv_max > 0.0) {
        for (double& v : wv) v /= wv_max;
    }
    for (double& v : wv) {
        if (v == 1.0) v = 0.99; // keep the logit finite
        v = v > 0.0 ? std::log(v / (1.0 - v)) + 0.5 : 0.0;
        v = std::clamp(v, 0.0, 1.0);
    }

    const double total = std::accumulate(wv.begin(), wv.end(), 0.0);
    if (!(total > 0.0)) {
        throw EmptyAggregationError("foolsgold_aggregate: all weights collapsed to zero");
    }
    std::vector<double> out(updates.front().model.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const ParamVector& m = updates[i].model;
        if (m.size() != out.size()) throw DimensionError("foolsgold_aggregate: length mismatch");
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += wv[i] * m[j];
    }
    for (double& v : out) v /= total;
    return ParamVector(std::move(out));
}

TwoStageResult two_stage_defense(std::span<const ClientUpdate> updates,
                                 const ReferenceCache& cache, int round,
                                 const DefenseParams& params) {
    params.validate();
    const CrossRoundResult stage1 = cross_round_check(updates, cache, round, params.gamma);
    TwoStageResult result;
    if (!stage1.attack_possible) {
        result.report.round = round;
        result.report.attack_flag = false;
        result.report.cross_round_scores = stage1.scores;
        result.survivors.resize(updates.size());
        std::iota(result.survivors.begin(), result.survivors.end(), 0);
        return result;
    }
    CrossClientResult stage2 = cross_client_detect(updates, cache, round, params.lambda);
    result.survivors = std::move(stage2.survivors);
    result.report = std::move(stage2.report);
    result.report.cross_round_scores = stage1.scores;
    return result;
}

} // namespace flsentry
