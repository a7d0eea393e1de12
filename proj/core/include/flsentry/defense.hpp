#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "flsentry/engine.hpp"
#include "flsentry/tensor.hpp"

namespace flsentry {

struct CrossRoundScore {
    double sim_to_prev_global = 0.0;
    std::optional<double> sim_to_prev_self;
};

/// Per-round detection record. `removed` is exactly the set of clients whose
/// evilness score strictly exceeds mu + lambda*sigma; an attack_flag of false
/// implies no removals.
struct DetectionReport {
    int round = 0;
    bool attack_flag = false;
    std::map<int, CrossRoundScore> cross_round_scores;
    std::map<int, double> evilness;
    std::optional<ScoreStats> stats;
    std::optional<double> bound;
    std::set<int> removed;
};

std::string detection_report_to_json(const DetectionReport& report);
DetectionReport detection_report_from_json(const std::string& text);

struct DefenseParams {
    double gamma = 0.5;  // similarity threshold for the cross-round check
    double lambda = 0.5; // deviation multiplier for the evilness bound
    int krum_m = 5;      // models kept by the m-Krum baseline
    int krum_f = -1;     // assumed malicious count; -1 means floor(L/2)

    void validate() const;
};

struct CrossRoundResult {
    bool attack_possible = false;
    std::map<int, CrossRoundScore> scores;
};

/// Stage 1. Round 0 always reports attacks as possible. Later rounds compare
/// each submission's importance segment against the previous global segment
/// and, where the client survived last round, against its own previous
/// segment; any similarity below gamma flags the round. Nothing is removed
/// here.
CrossRoundResult cross_round_check(std::span<const ClientUpdate> updates,
                                   const ReferenceCache& cache, int round, double gamma);

struct CrossClientResult {
    std::vector<std::size_t> survivors; // indices into the update span
    DetectionReport report;
};

/// Stage 2. Evilness is the L2 distance from each update's segment to the
/// reference average (previous round's cached average; at round 0 an m-Krum
/// approximation with m = f = floor(L/2)). Updates whose score strictly
/// exceeds mu + lambda*sigma are removed. Throws AllRemovedSignal if nothing
/// would survive.
CrossClientResult cross_client_detect(std::span<const ClientUpdate> updates,
                                      const ReferenceCache& cache, int round, double lambda);

/// Sum of the smallest max(1, L-f-2) squared distances from models[i] to the
/// other models. The clamp covers tiny cohorts where L-f-2 would drop below 1.
double krum_score(std::span<const ParamVector> models, std::size_t i, int f);

/// Ids of the m lowest-scoring models, ties broken by ascending client id.
std::vector<int> krum_select(std::span<const ParamVector> models, std::span<const int> ids, int m,
                             int f);

/// Mean of the m lowest-scoring models. m = 1 is classic Krum.
ParamVector krum_aggregate(std::span<const ParamVector> models, std::span<const int> ids, int m,
                           int f);

/// Smoothed Weiszfeld iteration for the geometric median, started from the
/// mean.
ParamVector rfa_aggregate(std::span<const ParamVector> models, int max_iters = 100,
                          double epsilon = 1e-6);

/// Cosine-similarity reweighting on cumulative importance-segment histories:
/// clients with mutually similar histories are downweighted toward zero.
ParamVector foolsgold_aggregate(std::span<const ClientUpdate> updates,
                                const std::map<int, ParamVector>& history);

struct TwoStageResult {
    std::vector<std::size_t> survivors;
    DetectionReport report;
};

/// Stage 1 gate plus stage 2 removal. When stage 1 sees no attack the update
/// set passes through untouched and the report carries only the similarity
/// scores.
TwoStageResult two_stage_defense(std::span<const ClientUpdate> updates,
                                 const ReferenceCache& cache, int round,
                                 const DefenseParams& params);

} // namespace flsentry
