#include "flsentry/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "flsentry/digest.hpp"
#include "flsentry/fixed_point.hpp"

namespace flsentry {

std::string defense_kind_name(DefenseKind kind) {
    switch (kind) {
        case DefenseKind::none: return "none";
        case DefenseKind::two_stage: return "two_stage";
        case DefenseKind::krum: return "krum";
        case DefenseKind::m_krum: return "m_krum";
        case DefenseKind::rfa: return "rfa";
        case DefenseKind::foolsgold: return "foolsgold";
    }
    return "none";
}

DefenseKind defense_kind_from_name(const std::string& name) {
    if (name == "none") return DefenseKind::none;
    if (name == "two_stage") return DefenseKind::two_stage;
    if (name == "krum") return DefenseKind::krum;
    if (name == "m_krum") return DefenseKind::m_krum;
    if (name == "rfa") return DefenseKind::rfa;
    if (name == "foolsgold") return DefenseKind::foolsgold;
    throw ConfigError("unknown defense kind: " + name);
}

namespace {

std::string attack_kind_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::none: return "none";
        case AttackKind::byzantine_random: return "byzantine_random";
        case AttackKind::model_replacement: return "model_replacement";
        case AttackKind::free_rider: return "free_rider";
    }
    return "none";
}

AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "none") return AttackKind::none;
    if (name == "byzantine_random") return AttackKind::byzantine_random;
    if (name == "model_replacement") return AttackKind::model_replacement;
    if (name == "free_rider") return AttackKind::free_rider;
    throw ConfigError("unknown attack kind: " + name);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

void ScenarioConfig::validate() const {
    train.validate();
    defense_params.validate();
    zk.validate();
    threat.validate(train.n_clients);
    if (verify && defense != DefenseKind::two_stage) {
        throw ConfigError("verify: true requires defense: two_stage");
    }
    if ((defense == DefenseKind::two_stage || defense == DefenseKind::krum ||
         defense == DefenseKind::m_krum) &&
        train.n_clients < 3) {
        throw ConfigError("defense: " + defense_kind_name(defense) +
                          " needs n_clients >= 3 (Krum scores need two neighbours)");
    }
    if (threat.attack_kind == AttackKind::model_replacement && !backdoor.has_value()) {
        throw ConfigError("model_replacement attack requires a backdoor section");
    }
    if (data.source == DataConfig::Source::blobs) {
        if (data.n_classes < 2 || data.n_features < 1 || data.n_samples < train.n_clients) {
            throw ConfigError("data: blobs need n_classes >= 2 and n_samples >= n_clients");
        }
    } else if (data.images_path.empty() || data.labels_path.empty()) {
        throw ConfigError("data: idx source needs images/labels paths");
    }
    if (!(data.test_fraction > 0.0) || !(data.test_fraction < 1.0)) {
        throw ConfigError("data: test_fraction must be in (0, 1)");
    }
    if (backdoor.has_value()) {
        if (backdoor->trigger_feature_indices.empty()) {
            throw ConfigError("backdoor: trigger_features must be nonempty");
        }
        if (!(backdoor->poison_fraction > 0.0) || backdoor->poison_fraction > 1.0) {
            throw ConfigError("backdoor: poison_fraction must be in (0, 1]");
        }
    }
}

ScenarioConfig config_from_yaml(const std::string& text) {
    ScenarioConfig cfg;
    YAML::Node root = YAML::Load(text);

    if (root["seed"]) cfg.seed = root["seed"].as<std::uint64_t>();
    if (root["output_dir"]) cfg.output_dir = root["output_dir"].as<std::string>();
    if (root["verify"]) cfg.verify = root["verify"].as<bool>();

    if (YAML::Node n = root["train"]) {
        if (n["model"]) {
            const auto name = n["model"].as<std::string>();
            if (name == "logistic_regression") {
                cfg.train.model_kind = ModelKind::logistic_regression;
            } else if (name == "mlp") {
                cfg.train.model_kind = ModelKind::mlp;
            } else {
                throw ConfigError("train.model must be logistic_regression or mlp");
            }
        }
        if (n["n_clients"]) cfg.train.n_clients = n["n_clients"].as<int>();
        if (n["rounds"]) cfg.train.rounds = n["rounds"].as<int>();
        if (n["local_epochs"]) cfg.train.local_epochs = n["local_epochs"].as<int>();
        if (n["learning_rate"]) cfg.train.learning_rate = n["learning_rate"].as<double>();
        if (n["batch_size"]) cfg.train.batch_size = n["batch_size"].as<int>();
        if (n["mlp_hidden"]) cfg.train.mlp_hidden = n["mlp_hidden"].as<int>();
    }
    if (YAML::Node n = root["data"]) {
        if (n["source"]) {
            const auto name = n["source"].as<std::string>();
            if (name == "blobs") {
                cfg.data.source = DataConfig::Source::blobs;
            } else if (name == "idx") {
                cfg.data.source = DataConfig::Source::idx;
            } else {
                throw ConfigError("data.source must be blobs or idx");
            }
        }
        if (n["n_classes"]) cfg.data.n_classes = n["n_classes"].as<int>();
        if (n["n_features"]) cfg.data.n_features = n["n_features"].as<int>();
        if (n["n_samples"]) cfg.data.n_samples = n["n_samples"].as<int>();
        if (n["test_fraction"]) cfg.data.test_fraction = n["test_fraction"].as<double>();
        if (n["images"]) cfg.data.images_path = n["images"].as<std::string>();
        if (n["labels"]) cfg.data.labels_path = n["labels"].as<std::string>();
    }
    if (YAML::Node n = root["partition"]) {
        if (n["mode"]) {
            const auto name = n["mode"].as<std::string>();
            if (name == "iid") {
                cfg.partition.mode = PartitionMode::iid;
            } else if (name == "dirichlet") {
                cfg.partition.mode = PartitionMode::dirichlet;
            } else {
                throw ConfigError("partition.mode must be iid or dirichlet");
            }
        }
        if (n["alpha"]) cfg.partition.alpha = n["alpha"].as<double>();
    }
    if (YAML::Node n = root["threat"]) {
        if (n["attack"]) cfg.threat.attack_kind = attack_kind_from_name(n["attack"].as<std::string>());
        if (n["malicious_ids"]) {
            for (const auto& id : n["malicious_ids"]) cfg.threat.malicious_ids.insert(id.as<int>());
        }
        if (n["attack_probability"]) {
            cfg.threat.attack_probability = n["attack_probability"].as<double>();
        }
        if (n["noise_scale"]) cfg.threat.noise_scale = n["noise_scale"].as<double>();
        if (n["byzantine_mode"]) {
            const auto name = n["byzantine_mode"].as<std::string>();
            if (name == "additive") {
                cfg.threat.byzantine_mode = ByzantineMode::additive;
            } else if (name == "replace") {
                cfg.threat.byzantine_mode = ByzantineMode::replace;
            } else {
                throw ConfigError("threat.byzantine_mode must be additive or replace");
            }
        }
        if (n["boost_factor"]) cfg.threat.boost_factor = n["boost_factor"].as<double>();
        if (n["all_malicious_rounds"]) {
            cfg.threat.all_malicious_rounds = n["all_malicious_rounds"].as<bool>();
        }
        if (n["seed"]) cfg.threat.seed = n["seed"].as<std::uint64_t>();
    }
    if (YAML::Node n = root["backdoor"]) {
        BackdoorSpec spec;
        if (n["trigger_features"]) {
            for (const auto& idx : n["trigger_features"]) {
                spec.trigger_feature_indices.push_back(idx.as<std::size_t>());
            }
        }
        if (n["trigger_value"]) spec.trigger_value = n["trigger_value"].as<double>();
        if (n["target_label"]) spec.target_label = n["target_label"].as<int>();
        if (n["poison_fraction"]) spec.poison_fraction = n["poison_fraction"].as<double>();
        cfg.backdoor = spec;
    }
    if (YAML::Node n = root["defense"]) {
        if (n["kind"]) cfg.defense = defense_kind_from_name(n["kind"].as<std::string>());
        if (n["gamma"]) cfg.defense_params.gamma = n["gamma"].as<double>();
        if (n["lambda"]) cfg.defense_params.lambda = n["lambda"].as<double>();
        if (n["krum_m"]) cfg.defense_params.krum_m = n["krum_m"].as<int>();
        if (n["krum_f"]) cfg.defense_params.krum_f = n["krum_f"].as<int>();
    }
    if (YAML::Node n = root["zk"]) {
        if (n["modulus"]) cfg.zk.modulus = n["modulus"].as<std::uint64_t>();
        if (n["scale_bits"]) cfg.zk.scale_bits = n["scale_bits"].as<int>();
        if (n["freivalds_reps"]) cfg.zk.freivalds_reps = n["freivalds_reps"].as<int>();
        if (n["marginal_ulps"]) cfg.zk.marginal_ulps = n["marginal_ulps"].as<int>();
    }

    // One root seed fans out through labeled substreams; a zero threat seed
    // means "derive from the root" so attack draws stay independent of data.
    if (cfg.threat.seed == 0) {
        cfg.threat.seed = derive_seed(cfg.seed, Stream::threat_schedule, 0x7407);
    }
    cfg.partition.n_clients = static_cast<std::size_t>(cfg.train.n_clients);
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return config_from_yaml(buffer.str());
    } catch (const YAML::Exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
}

std::string config_to_yaml(const ScenarioConfig& cfg) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "seed" << YAML::Value << cfg.seed;
    out << YAML::Key << "output_dir" << YAML::Value << cfg.output_dir;
    out << YAML::Key << "verify" << YAML::Value << cfg.verify;
    out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "model" << YAML::Value
        << (cfg.train.model_kind == ModelKind::mlp ? "mlp" : "logistic_regression");
    out << YAML::Key << "n_clients" << YAML::Value << cfg.train.n_clients;
    out << YAML::Key << "rounds" << YAML::Value << cfg.train.rounds;
    out << YAML::Key << "local_epochs" << YAML::Value << cfg.train.local_epochs;
    out << YAML::Key << "learning_rate" << YAML::Value << cfg.train.learning_rate;
    out << YAML::Key << "batch_size" << YAML::Value << cfg.train.batch_size;
    out << YAML::Key << "mlp_hidden" << YAML::Value << cfg.train.mlp_hidden;
    out << YAML::EndMap;
    out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "source" << YAML::Value
        << (cfg.data.source == DataConfig::Source::idx ? "idx" : "blobs");
    out << YAML::Key << "n_classes" << YAML::Value << cfg.data.n_classes;
    out << YAML::Key << "n_features" << YAML::Value << cfg.data.n_features;
    out << YAML::Key << "n_samples" << YAML::Value << cfg.data.n_samples;
    out << YAML::Key << "test_fraction" << YAML::Value << cfg.data.test_fraction;
    out << YAML::Key << "images" << YAML::Value << cfg.data.images_path;
    out << YAML::Key << "labels" << YAML::Value << cfg.data.labels_path;
    out << YAML::EndMap;
    out << YAML::Key << "partition" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "mode" << YAML::Value
        << (cfg.partition.mode == PartitionMode::dirichlet ? "dirichlet" : "iid");
    out << YAML::Key << "alpha" << YAML::Value << cfg.partition.alpha;
    out << YAML::EndMap;
    out << YAML::Key << "threat" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "attack" << YAML::Value << attack_kind_name(cfg.threat.attack_kind);
    out << YAML::Key << "malicious_ids" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (int id : cfg.threat.malicious_ids) out << id;
    out << YAML::EndSeq;
    out << YAML::Key << "attack_probability" << YAML::Value << cfg.threat.attack_probability;
    out << YAML::Key << "noise_scale" << YAML::Value << cfg.threat.noise_scale;
    out << YAML::Key << "byzantine_mode" << YAML::Value
        << (cfg.threat.byzantine_mode == ByzantineMode::replace ? "replace" : "additive");
    out << YAML::Key << "boost_factor" << YAML::Value << cfg.threat.boost_factor;
    out << YAML::Key << "all_malicious_rounds" << YAML::Value << cfg.threat.all_malicious_rounds;
    out << YAML::Key << "seed" << YAML::Value << cfg.threat.seed;
    out << YAML::EndMap;
    if (cfg.backdoor.has_value()) {
        out << YAML::Key << "backdoor" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "trigger_features" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (std::size_t idx : cfg.backdoor->trigger_feature_indices) out << idx;
        out << YAML::EndSeq;
        out << YAML::Key << "trigger_value" << YAML::Value << cfg.backdoor->trigger_value;
        out << YAML::Key << "target_label" << YAML::Value << cfg.backdoor->target_label;
        out << YAML::Key << "poison_fraction" << YAML::Value << cfg.backdoor->poison_fraction;
        out << YAML::EndMap;
    }
    out << YAML::Key << "defense" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << defense_kind_name(cfg.defense);
    out << YAML::Key << "gamma" << YAML::Value << cfg.defense_params.gamma;
    out << YAML::Key << "lambda" << YAML::Value << cfg.defense_params.lambda;
    out << YAML::Key << "krum_m" << YAML::Value << cfg.defense_params.krum_m;
    out << YAML::Key << "krum_f" << YAML::Value << cfg.defense_params.krum_f;
    out << YAML::EndMap;
    out << YAML::Key << "zk" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "modulus" << YAML::Value << cfg.zk.modulus;
    out << YAML::Key << "scale_bits" << YAML::Value << cfg.zk.scale_bits;
    out << YAML::Key << "freivalds_reps" << YAML::Value << cfg.zk.freivalds_reps;
    out << YAML::Key << "marginal_ulps" << YAML::Value << cfg.zk.marginal_ulps;
    out << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

Simulation::Simulation(const ScenarioConfig& cfg) : cfg_(cfg) {
    cfg_.validate();

    LabeledDataset full;
    if (cfg_.data.source == DataConfig::Source::blobs) {
        full = generate_blobs(cfg_.data.n_classes, cfg_.data.n_features, cfg_.data.n_samples,
                              cfg_.seed);
    } else {
        full = load_idx(cfg_.data.images_path, cfg_.data.labels_path);
    }
    full.validate();

    const auto n_test = static_cast<std::size_t>(
        static_cast<double>(full.size()) * cfg_.data.test_fraction);
    const std::size_t n_train = full.size() - n_test;
    std::vector<std::size_t> train_idx(n_train), test_idx(n_test);
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::iota(test_idx.begin(), test_idx.end(), n_train);
    LabeledDataset trainset = full.select(train_idx);
    testset_ = full.select(test_idx);

    spec_ = ModelSpec{cfg_.train.model_kind, static_cast<int>(full.n_features), full.n_classes,
                      cfg_.train.mlp_hidden};
    global_ = init_params(spec_, cfg_.seed);

    shards_ = partition(trainset, cfg_.partition, cfg_.seed);

    if (cfg_.backdoor.has_value()) {
        for (std::size_t idx : cfg_.backdoor->trigger_feature_indices) {
            if (idx >= full.n_features) {
                throw ConfigError("backdoor: trigger feature index out of range");
            }
        }
        if (cfg_.threat.attack_kind == AttackKind::model_replacement) {
            for (int id : cfg_.threat.malicious_ids) {
                poisoned_shards_[id] =
                    inject_backdoor(shards_[static_cast<std::size_t>(id)], *cfg_.backdoor,
                                    derive_seed(cfg_.seed, Stream::poison, static_cast<std::uint64_t>(id)))
                        .poisoned;
            }
            // Clean-label trigger holdout for attack-success measurement.
            std::vector<std::size_t> keep;
            for (std::size_t i = 0; i < testset_.size(); ++i) {
                if (testset_.labels[i] != cfg_.backdoor->target_label) keep.push_back(i);
            }
            trigger_testset_ = apply_trigger(testset_.select(keep), *cfg_.backdoor);
        }
    }

    public_inputs_.params = cfg_.defense_params;
    public_inputs_.zk = cfg_.zk;
}

std::vector<ClientUpdate> Simulation::collect_updates(int round, std::set<int>* attacked) {
    std::vector<ClientUpdate> updates;
    updates.reserve(shards_.size());
    for (int c = 0; c < cfg_.train.n_clients; ++c) {
        const std::uint64_t seed =
            derive_seed(cfg_.seed, Stream::train, static_cast<std::uint64_t>(round),
                        static_cast<std::uint64_t>(c));
        updates.push_back(local_train(global_, shards_[static_cast<std::size_t>(c)], spec_,
                                      cfg_.train, c, round, seed));
    }

    Rng schedule_rng(derive_seed(cfg_.threat.seed, Stream::threat_schedule,
                                 static_cast<std::uint64_t>(round)));
    const ScheduleDecision decision =
        schedule(cfg_.threat, round, cfg_.train.n_clients, schedule_rng);
    if (!decision.attack_active) return updates;

    for (int id : decision.targets) {
        Rng attack_rng(derive_seed(cfg_.threat.seed, Stream::threat_attack,
                                   static_cast<std::uint64_t>(round),
                                   static_cast<std::uint64_t>(id)));
        ClientUpdate& target = updates[static_cast<std::size_t>(id)];
        switch (cfg_.threat.attack_kind) {
            case AttackKind::byzantine_random:
                target = apply_byzantine(target, spec_, cfg_.threat.noise_scale,
                                         cfg_.threat.byzantine_mode, attack_rng);
                break;
            case AttackKind::model_replacement: {
                const auto it = poisoned_shards_.find(id);
                if (it == poisoned_shards_.end()) {
                    throw ConfigError("model_replacement target has no poisoned shard");
                }
                const std::uint64_t seed =
                    derive_seed(cfg_.seed, Stream::train, static_cast<std::uint64_t>(round),
                                static_cast<std::uint64_t>(id));
                const ClientUpdate backdoored =
                    local_train(global_, it->second, spec_, cfg_.train, id, round, seed);
                const double boost = cfg_.threat.boost_factor > 0.0
                                         ? cfg_.threat.boost_factor
                                         : static_cast<double>(cfg_.train.n_clients);
                target = apply_model_replacement(target, spec_, global_, boost, backdoored.model);
                break;
            }
            case AttackKind::free_rider:
                target = apply_free_rider(target, spec_, global_, attack_rng);
                break;
            case AttackKind::none:
                break;
        }
        attacked->insert(id);
    }
    return updates;
}

void Simulation::refresh_cache(const std::vector<ClientUpdate>& updates,
                               const std::vector<std::size_t>& survivors,
                               const ParamVector& new_global) {
    // The new global equals the survivor mean under uniform averaging, so its
    // importance segment serves as both the global reference and the cached
    // average for the next round.
    ParamVector segment = importance_layer(spec_.layered(new_global));
    cache_.prev_global = segment;
    cache_.prev_avg = std::move(segment);
    cache_.prev_client.clear();
    for (std::size_t i : survivors) {
        cache_.prev_client[updates[i].client_id] = updates[i].importance_segment;
    }
}

Simulation::RoundOutcome Simulation::run_round() {
    const int round = round_++;
    RoundOutcome out;
    out.round = round;

    std::vector<ClientUpdate> updates = collect_updates(round, &out.attacked);
    const std::size_t n = updates.size();
    out.plain_mean = fedavg(updates);

    std::vector<std::size_t> survivors;
    std::optional<ParamVector> special_aggregate;
    switch (cfg_.defense) {
        case DefenseKind::none: {
            survivors.resize(n);
            std::iota(survivors.begin(), survivors.end(), 0);
            out.report.round = round;
            break;
        }
        case DefenseKind::two_stage: {
            try {
                TwoStageResult result =
                    two_stage_defense(updates, cache_, round, cfg_.defense_params);
                survivors = std::move(result.survivors);
                out.report = std::move(result.report);
                out.removed = out.report.removed;
            } catch (const AllRemovedSignal&) {
                out.quarantined = true;
                out.report.round = round;
                out.report.attack_flag = true;
                for (const ClientUpdate& u : updates) {
                    out.report.removed.insert(u.client_id);
                    out.removed.insert(u.client_id);
                }
            }
            break;
        }
        case DefenseKind::krum:
        case DefenseKind::m_krum: {
            std::vector<ParamVector> models;
            std::vector<int> ids;
            for (const ClientUpdate& u : updates) {
                models.push_back(u.model);
                ids.push_back(u.client_id);
            }
            const int m = cfg_.defense == DefenseKind::krum ? 1 : cfg_.defense_params.krum_m;
            const int f = cfg_.defense_params.krum_f >= 0 ? cfg_.defense_params.krum_f
                                                          : static_cast<int>(n) / 2;
            const std::vector<int> selected = krum_select(models, ids, m, f);
            for (std::size_t i = 0; i < n; ++i) {
                if (std::binary_search(selected.begin(), selected.end(), updates[i].client_id)) {
                    survivors.push_back(i);
                } else {
                    out.removed.insert(updates[i].client_id);
                }
            }
            out.report.round = round;
            break;
        }
        case DefenseKind::rfa: {
            std::vector<ParamVector> models;
            for (const ClientUpdate& u : updates) models.push_back(u.model);
            special_aggregate = rfa_aggregate(models);
            survivors.resize(n);
            std::iota(survivors.begin(), survivors.end(), 0);
            out.report.round = round;
            break;
        }
        case DefenseKind::foolsgold: {
            for (const ClientUpdate& u : updates) {
                auto it = foolsgold_history_.find(u.client_id);
                if (it == foolsgold_history_.end()) {
                    foolsgold_history_[u.client_id] = u.importance_segment;
                } else {
                    it->second = add(it->second, u.importance_segment);
                }
            }
            special_aggregate = foolsgold_aggregate(updates, foolsgold_history_);
            survivors.resize(n);
            std::iota(survivors.begin(), survivors.end(), 0);
            out.report.round = round;
            break;
        }
    }

    ParamVector new_global;
    if (out.quarantined) {
        new_global = global_;
    } else if (special_aggregate.has_value()) {
        new_global = std::move(*special_aggregate);
    } else {
        std::vector<ClientUpdate> kept;
        kept.reserve(survivors.size());
        for (std::size_t i : survivors) kept.push_back(updates[i]);
        new_global = fedavg(kept);
    }

    // Transcript generation and client-side replay.
    if (cfg_.verify && cfg_.defense == DefenseKind::two_stage) {
        const PrimeField field(cfg_.zk.modulus);
        const FixedPointCodec codec(field, cfg_.zk.scale_bits);
        ProveInputs inputs;
        inputs.round = round;
        inputs.chain = chain_;
        inputs.params = cfg_.defense_params;
        inputs.zk = cfg_.zk;
        public_inputs_.expected_update_commitments.clear();
        for (const ClientUpdate& u : updates) {
            inputs.client_ids.push_back(u.client_id);
            inputs.segments.emplace_back(u.importance_segment.data());
            public_inputs_.expected_update_commitments[u.client_id] = commit_vector(
                cfg_.zk.modulus, cfg_.zk.scale_bits,
                codec.quantize_vector(u.importance_segment.values()));
        }
        out.transcript = prove_detection(inputs, out.report);
        public_inputs_.claimed_attack_flag = out.report.attack_flag;
        public_inputs_.claimed_removed = out.report.removed;
        Rng verifier_rng(derive_seed(cfg_.seed, Stream::verifier,
                                     static_cast<std::uint64_t>(round)));
        out.verification = verify_detection(*out.transcript, public_inputs_, verifier_rng);
        advance_public(*out.transcript, public_inputs_);
        chain_ = advance_chain(*out.transcript, chain_);
    }

    if (out.quarantined) {
        cache_.prev_client.clear();
    } else {
        refresh_cache(updates, survivors, new_global);
    }
    global_ = std::move(new_global);

    out.eval = evaluate(spec_, global_, testset_,
                        trigger_testset_.size() > 0 ? &trigger_testset_ : nullptr,
                        cfg_.backdoor.has_value() ? cfg_.backdoor->target_label : 0);
    out.global = global_;
    return out;
}

std::vector<std::vector<std::pair<std::string, double>>> Simulation::probe_layer_norms() const {
    std::vector<std::vector<std::pair<std::string, double>>> norms;
    norms.reserve(shards_.size());
    for (const LabeledDataset& shard : shards_) {
        const LossGrad lg = loss_and_grad(spec_, global_, shard);
        norms.push_back(layer_sensitivity(spec_.layered(lg.grad)));
    }
    return norms;
}

std::filesystem::path resolve_output_dir(const std::string& configured) {
    std::filesystem::path dir(configured);
    if (const char* root = std::getenv("FLSENTRY_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
        if (dir.is_relative()) dir = std::filesystem::path(root) / dir;
    }
    return dir;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    Simulation sim(cfg);
    ScenarioResult result;
    result.output_dir = resolve_output_dir(cfg.output_dir);

    std::vector<std::pair<bool, bool>> flags;
    std::string reports_ndjson;
    std::ostringstream csv;
    csv << "round,accuracy,backdoor_success,attack_actual,attack_flag,n_removed,ppv_running,"
           "mult_count\n";

    for (int round = 0; round < cfg.train.rounds; ++round) {
        Simulation::RoundOutcome outcome = sim.run_round();

        result.tally = accumulate(outcome.removed, outcome.attacked, result.tally);
        flags.emplace_back(outcome.report.attack_flag, !outcome.attacked.empty());

        RoundRecord record;
        record.round = round;
        record.accuracy = outcome.eval.accuracy;
        record.backdoor_success = outcome.eval.backdoor_success;
        record.attack_actual = !outcome.attacked.empty();
        record.attack_flag = outcome.report.attack_flag;
        record.n_removed = outcome.removed.size();
        record.quarantined = outcome.quarantined;
        if (result.tally.n_tp + result.tally.n_fp + result.tally.n_total > 0) {
            record.ppv_running = modified_ppv(result.tally);
        }
        if (outcome.transcript.has_value()) {
            record.mult_count = outcome.transcript->mult_count;
            ++result.verified_rounds;
            if (!outcome.verification.has_value() || !outcome.verification->accepted) {
                result.all_transcripts_verified = false;
            }
            if (outcome.verification.has_value() && outcome.verification->marginal) {
                ++result.marginal_rounds;
            }
            char name[32];
            std::snprintf(name, sizeof(name), "round_%05d.json", round);
            write_file_atomic(result.output_dir / "transcripts" / name,
                              transcript_to_json(*outcome.transcript));
        }
        if (outcome.quarantined) ++result.quarantined_rounds;
        if (cfg.defense == DefenseKind::two_stage) {
            reports_ndjson += detection_report_to_json(outcome.report);
            reports_ndjson += '\n';
        }

        csv << record.round << ',' << fmt_double(record.accuracy) << ',';
        if (record.backdoor_success.has_value()) csv << fmt_double(*record.backdoor_success);
        csv << ',' << (record.attack_actual ? 1 : 0) << ',' << (record.attack_flag ? 1 : 0) << ','
            << record.n_removed << ',';
        if (record.ppv_running.has_value()) csv << fmt_double(*record.ppv_running);
        csv << ',';
        if (record.mult_count.has_value()) csv << *record.mult_count;
        csv << '\n';

        result.rounds.push_back(std::move(record));
    }

    result.final_accuracy = result.rounds.back().accuracy;
    result.final_backdoor_success = result.rounds.back().backdoor_success;
    if (result.tally.n_tp + result.tally.n_fp + result.tally.n_total > 0) {
        result.ppv = modified_ppv(result.tally);
    }
    result.success_rate = cross_round_success_rate(flags);

    write_file_atomic(result.output_dir / "rounds.csv", csv.str());
    if (cfg.defense == DefenseKind::two_stage) {
        write_file_atomic(result.output_dir / "reports.ndjson", reports_ndjson);
    }

    std::ostringstream summary_csv;
    summary_csv << "defense,rounds,final_accuracy,final_backdoor_success,ppv,success_rate,"
                   "n_tp,n_fp,n_total,quarantined_rounds\n";
    summary_csv << defense_kind_name(cfg.defense) << ',' << cfg.train.rounds << ','
                << fmt_double(result.final_accuracy) << ',';
    if (result.final_backdoor_success.has_value()) {
        summary_csv << fmt_double(*result.final_backdoor_success);
    }
    summary_csv << ',';
    if (result.ppv.has_value()) summary_csv << fmt_double(*result.ppv);
    summary_csv << ',' << fmt_double(result.success_rate) << ',' << result.tally.n_tp << ','
                << result.tally.n_fp << ',' << result.tally.n_total << ','
                << result.quarantined_rounds << '\n';
    write_file_atomic(result.output_dir / "summary.csv", summary_csv.str());

    nlohmann::json summary;
    summary["defense"] = defense_kind_name(cfg.defense);
    summary["rounds"] = cfg.train.rounds;
    summary["final_accuracy"] = result.final_accuracy;
    if (result.final_backdoor_success.has_value()) {
        summary["final_backdoor_success"] = *result.final_backdoor_success;
    } else {
        summary["final_backdoor_success"] = nullptr;
    }
    if (result.ppv.has_value()) {
        summary["ppv"] = *result.ppv;
    } else {
        summary["ppv"] = nullptr;
    }
    summary["success_rate"] = result.success_rate;
    summary["n_tp"] = result.tally.n_tp;
    summary["n_fp"] = result.tally.n_fp;
    summary["n_total"] = result.tally.n_total;
    summary["quarantined_rounds"] = result.quarantined_rounds;
    summary["verified_rounds"] = result.verified_rounds;
    summary["marginal_rounds"] = result.marginal_rounds;
    summary["all_transcripts_verified"] = result.all_transcripts_verified;
    write_file_atomic(result.output_dir / "summary.json", summary.dump(2) + "\n");

    return result;
}

std::vector<ComparisonRow> compare_defenses(const ScenarioConfig& base,
                                            const std::vector<DefenseKind>& defenses) {
    if (defenses.empty()) throw ConfigError("compare: at least one defense required");
    std::vector<ComparisonRow> rows;
    std::ostringstream csv;
    csv << "defense,final_accuracy,ppv,success_rate\n";
    for (DefenseKind kind : defenses) {
        ScenarioConfig cfg = base;
        cfg.defense = kind;
        cfg.verify = base.verify && kind == DefenseKind::two_stage;
        cfg.output_dir = base.output_dir + "/defense_" + defense_kind_name(kind);
        const ScenarioResult result = run_scenario(cfg);
        ComparisonRow row;
        row.defense = defense_kind_name(kind);
        row.final_accuracy = result.final_accuracy;
        row.ppv = result.ppv;
        row.success_rate = result.success_rate;
        rows.push_back(row);
        csv << row.defense << ',' << fmt_double(row.final_accuracy) << ',';
        if (row.ppv.has_value()) csv << fmt_double(*row.ppv);
        csv << ',' << fmt_double(row.success_rate) << '\n';
    }
    write_file_atomic(resolve_output_dir(base.output_dir) / "comparison.csv", csv.str());
    return rows;
}

SensitivityResult run_sensitivity(const ScenarioConfig& cfg) {
    Simulation sim(cfg);
    SensitivityResult result;
    std::size_t above = 0;
    std::size_t pairs = 0;
    std::ostringstream csv;
    csv << "round,client,layer,norm\n";
    const std::size_t layer_count = sim.model_spec().layer_specs().size();
    const std::size_t importance_idx = layer_count >= 2 ? layer_count - 2 : 0;

    for (int round = 0; round < cfg.train.rounds; ++round) {
        const auto norms = sim.probe_layer_norms();
        for (std::size_t client = 0; client < norms.size(); ++client) {
            std::vector<double> values;
            for (const auto& [layer, value] : norms[client]) {
                csv << round << ',' << client << ',' << layer << ',' << fmt_double(value) << '\n';
                result.rows.emplace_back(round, static_cast<int>(client), layer, value);
                values.push_back(value);
            }
            std::vector<double> sorted = values;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t mid = sorted.size() / 2;
            const double median = sorted.size() % 2 == 1
                                      ? sorted[mid]
                                      : 0.5 * (sorted[mid - 1] + sorted[mid]);
            ++pairs;
            if (values[importance_idx] > median) ++above;
        }
        sim.run_round();
    }

    result.above_median_fraction =
        pairs > 0 ? static_cast<double>(above) / static_cast<double>(pairs) : 0.0;
    const auto dir = resolve_output_dir(cfg.output_dir);
    write_file_atomic(dir / "sensitivity.csv", csv.str());
    nlohmann::json summary;
    summary["above_median_fraction"] = result.above_median_fraction;
    summary["pairs"] = pairs;
    write_file_atomic(dir / "sensitivity_summary.json", summary.dump(2) + "\n");
    return result;
}

} // namespace flsentry
