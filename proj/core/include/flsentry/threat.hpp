#pragma once

#include <cstdint>
#include <set>

#include "flsentry/engine.hpp"
#include "flsentry/rng.hpp"

namespace flsentry {

enum class AttackKind { none, byzantine_random, model_replacement, free_rider };

enum class ByzantineMode { additive, replace };

/// Per-run attack schedule. malicious_ids must stay below half the cohort
/// (honest majority) unless all_malicious_rounds is set, which makes every
/// client malicious on attack rounds and is meant only for the cross-round
/// detection-rate scenario.
struct ThreatPlan {
    AttackKind attack_kind = AttackKind::none;
    std::set<int> malicious_ids;
    double attack_probability = 1.0;
    double noise_scale = 1.0;
    ByzantineMode byzantine_mode = ByzantineMode::additive;
    double boost_factor = 0.0; // 0 means "use n_clients"
    bool all_malicious_rounds = false;
    std::uint64_t seed = 0;

    void validate(int n_clients) const;
};

/// model + Gaussian noise (additive mode) or pure Gaussian noise of the same
/// scale (replace mode); the importance segment is recomputed.
ClientUpdate apply_byzantine(const ClientUpdate& update, const ModelSpec& spec, double noise_scale,
                             ByzantineMode mode, Rng& rng);

/// global + boost * (backdoored - global); with boost = n_clients and the
/// other deltas cancelling, plain averaging reproduces the backdoored model.
ClientUpdate apply_model_replacement(const ClientUpdate& update, const ModelSpec& spec,
                                     const ParamVector& global, double boost_factor,
                                     const ParamVector& backdoored_model);

/// Previous global plus a tiny perturbation, discarding the trained model.
ClientUpdate apply_free_rider(const ClientUpdate& update, const ModelSpec& spec,
                              const ParamVector& prev_global, Rng& rng,
                              double perturbation_scale = 1e-3);

struct ScheduleDecision {
    bool attack_active = false;
    std::set<int> targets;
};

/// Bernoulli(attack_probability) per round; targets are the malicious ids
/// (all ids under the all-malicious override) when active, else empty.
ScheduleDecision schedule(const ThreatPlan& plan, int round, int n_clients, Rng& rng);

} // namespace flsentry
