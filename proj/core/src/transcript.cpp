#include "flsentry/transcript.hpp"

#include <json.hpp>

namespace flsentry {

void ZkParams::validate() const {
    PrimeField field(modulus); // throws if not a usable prime
    if (scale_bits < 1 || scale_bits > field.bits() - 4) {
        throw ConfigError("zk: scale_bits out of range for modulus");
    }
    if (freivalds_reps < 1) throw ConfigError("zk: freivalds_reps must be >= 1");
    if (marginal_ulps < 0) throw ConfigError("zk: marginal_ulps must be >= 0");
}

std::string VerificationTranscript::commitment_for(const std::string& name) const {
    for (const auto& [n, digest] : commitments) {
        if (n == name) return digest;
    }
    return {};
}

namespace vec_name {
std::string update(int client_id) { return "update/" + std::to_string(client_id); }
std::string ref_client(int client_id) { return "ref/client/" + std::to_string(client_id); }
} // namespace vec_name

namespace {

nlohmann::json record_to_json(const GadgetRecord& r) {
    nlohmann::json j;
    j["kind"] = r.kind;
    j["label"] = r.label;
    j["vec_refs"] = r.vec_refs;
    j["scalars"] = r.scalars;
    j["aux"] = r.aux;
    j["ids"] = r.ids;
    j["flag"] = r.flag;
    return j;
}

GadgetRecord record_from_json(const nlohmann::json& j) {
    GadgetRecord r;
    r.kind = j.at("kind").get<std::string>();
    r.label = j.at("label").get<std::string>();
    r.vec_refs = j.at("vec_refs").get<std::vector<std::string>>();
    r.scalars = j.at("scalars").get<std::vector<std::uint64_t>>();
    r.aux = j.at("aux").get<std::vector<std::uint64_t>>();
    r.ids = j.at("ids").get<std::vector<int>>();
    r.flag = j.at("flag").get<bool>();
    return r;
}

} // namespace

std::string transcript_to_json(const VerificationTranscript& t) {
    nlohmann::json j;
    j["version"] = t.version;
    j["digest"] = t.digest_algorithm;
    j["modulus"] = t.modulus;
    j["scale_bits"] = t.scale_bits;
    j["freivalds_reps"] = t.freivalds_reps;
    j["marginal_ulps"] = t.marginal_ulps;
    j["round"] = t.round;
    j["client_ids"] = t.client_ids;
    nlohmann::json commitments = nlohmann::json::array();
    for (const auto& [name, digest] : t.commitments) {
        commitments.push_back({{"name", name}, {"digest", digest}});
    }
    j["commitments"] = std::move(commitments);
    nlohmann::json vectors = nlohmann::json::object();
    for (const auto& [name, values] : t.vectors) vectors[name] = values;
    j["vectors"] = std::move(vectors);
    nlohmann::json records = nlohmann::json::array();
    for (const GadgetRecord& r : t.records) records.push_back(record_to_json(r));
    j["records"] = std::move(records);
    j["claimed_attack_flag"] = t.claimed_attack_flag;
    j["claimed_removed"] = t.claimed_removed;
    j["marginal"] = t.marginal;
    j["mult_count_stage1"] = t.mult_count_stage1;
    j["mult_count_stage2"] = t.mult_count_stage2;
    j["mult_count"] = t.mult_count;
    return j.dump();
}

VerificationTranscript transcript_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    VerificationTranscript t;
    t.version = j.at("version").get<int>();
    t.digest_algorithm = j.at("digest").get<std::string>();
    t.modulus = j.at("modulus").get<std::uint64_t>();
    t.scale_bits = j.at("scale_bits").get<int>();
    t.freivalds_reps = j.at("freivalds_reps").get<int>();
    t.marginal_ulps = j.at("marginal_ulps").get<int>();
    t.round = j.at("round").get<int>();
    t.client_ids = j.at("client_ids").get<std::vector<int>>();
    for (const auto& c : j.at("commitments")) {
        t.commitments.emplace_back(c.at("name").get<std::string>(),
                                   c.at("digest").get<std::string>());
    }
    for (const auto& [name, values] : j.at("vectors").items()) {
        t.vectors[name] = values.get<std::vector<std::uint64_t>>();
    }
    for (const auto& r : j.at("records")) t.records.push_back(record_from_json(r));
    t.claimed_attack_flag = j.at("claimed_attack_flag").get<bool>();
    for (const auto& id : j.at("claimed_removed")) t.claimed_removed.insert(id.get<int>());
    t.marginal = j.at("marginal").get<bool>();
    t.mult_count_stage1 = j.at("mult_count_stage1").get<std::uint64_t>();
    t.mult_count_stage2 = j.at("mult_count_stage2").get<std::uint64_t>();
    t.mult_count = j.at("mult_count").get<std::uint64_t>();
    return t;
}

} // namespace flsentry
