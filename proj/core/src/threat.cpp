#include "flsentry/threat.hpp"

namespace flsentry {

void ThreatPlan::validate(int n_clients) const {
    if (attack_probability < 0.0 || attack_probability > 1.0) {
        throw ConfigError("threat: attack_probability must be in [0, 1]");
    }
    if (!(noise_scale > 0.0)) throw ConfigError("threat: noise_scale must be positive");
    if (boost_factor < 0.0) throw ConfigError("threat: boost_factor must be nonnegative");
    for (int id : malicious_ids) {
        if (id < 0 || id >= n_clients) {
            throw ConfigError("threat: malicious id " + std::to_string(id) + " out of range");
        }
    }
    if (attack_kind != AttackKind::none && !all_malicious_rounds &&
        2 * malicious_ids.size() >= static_cast<std::size_t>(n_clients)) {
        throw ConfigError("threat: malicious clients must stay below half the cohort "
                          "(use all_malicious_rounds to override)");
    }
}

ClientUpdate apply_byzantine(const ClientUpdate& update, const ModelSpec& spec, double noise_scale,
                             ByzantineMode mode, Rng& rng) {
    std::vector<double> model(update.model.data());
    for (double& v : model) {
        const double noise = noise_scale * rng.normal();
        v = (mode == ByzantineMode::additive) ? v + noise : noise;
    }
    return make_update(spec, update.client_id, update.round, ParamVector(std::move(model)));
}

ClientUpdate apply_model_replacement(const ClientUpdate& update, const ModelSpec& spec,
                                     const ParamVector& global, double boost_factor,
                                     const ParamVector& backdoored_model) {
    if (global.size() != backdoored_model.size() || global.size() != update.model.size()) {
        throw DimensionError("model_replacement: length mismatch");
    }
    ParamVector boosted = add(global, scale(sub(backdoored_model, global), boost_factor));
    return make_update(spec, update.client_id, update.round, std::move(boosted));
}

ClientUpdate apply_free_rider(const ClientUpdate& update, const ModelSpec& spec,
                              const ParamVector& prev_global, Rng& rng,
                              double perturbation_scale) {
    if (prev_global.size() != update.model.size()) {
        throw DimensionError("free_rider: length mismatch");
    }
    std::vector<double> model(prev_global.data());
    for (double& v : model) v += perturbation_scale * rng.normal();
    return make_update(spec, update.client_id, update.round, ParamVector(std::move(model)));
}

ScheduleDecision schedule(const ThreatPlan& plan, int round, int n_clients, Rng& rng) {
    (void)round;
    ScheduleDecision decision;
    if (plan.attack_kind == AttackKind::none) return decision;
    decision.attack_active = rng.uniform() < plan.attack_probability;
    if (!decision.attack_active) return decision;
    if (plan.all_malicious_rounds) {
        for (int i = 0; i < n_clients; ++i) decision.targets.insert(i);
    } else {
        decision.targets = plan.malicious_ids;
    }
    return decision;
}

} // namespace flsentry
