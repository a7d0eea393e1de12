#include "flsentry/verifier.hpp"

#include <algorithm>

#include "flsentry/digest.hpp"
#include "flsentry/fixed_point.hpp"
#include "flsentry/gadgets.hpp"

namespace flsentry {

namespace {

using u64 = std::uint64_t;
using i128 = __int128;
using u128 = unsigned __int128;

struct Reject {
    std::string reason;
    int record = -1;
};

/// Replays a transcript against the program layout the prover follows,
/// recomputing every claim. Throws Reject on the first mismatch.
class Replayer {
public:
    Replayer(const VerificationTranscript& t, const PublicInputs& pub, Rng& rng)
        : t_(t), pub_(pub), rng_(rng), field_(pub.zk.modulus), codec_(field_, pub.zk.scale_bits) {}

    VerifyResult run();

private:
    const VerificationTranscript& t_;
    const PublicInputs& pub_;
    Rng& rng_;
    PrimeField field_;
    FixedPointCodec codec_;

    std::size_t cursor_ = 0;
    u64 stage1_mults_ = 0;
    u64 stage2_mults_ = 0;
    u64* tally_ = nullptr;
    bool any_marginal_ = false;
    bool stage1_marginal_ = false;
    bool stage1_flag_fixed_ = true;
    std::map<int, bool> removal_decision_;
    std::map<int, bool> removal_marginal_;
    std::vector<u64> stage2_ref_;

    void check_header();
    void check_commitments();
    void replay_stage1(u64 gamma_q);
    void replay_stage2();
    void check_report();

    bool has_ref_agg() const { return t_.vectors.count(vec_name::ref_agg()) > 0; }
    bool stage1_present() const { return t_.round > 0 && has_ref_agg(); }

    const std::vector<u64>& vec(const std::string& name) const {
        const auto it = t_.vectors.find(name);
        if (it == t_.vectors.end()) throw Reject{"missing committed vector " + name};
        return it->second;
    }

    const GadgetRecord& expect(const std::string& kind, const std::string& label) {
        if (cursor_ >= t_.records.size()) {
            throw Reject{"transcript ends before record " + label, static_cast<int>(cursor_)};
        }
        const GadgetRecord& r = t_.records[cursor_];
        if (r.kind != kind || r.label != label) {
            throw Reject{"unexpected record: got " + r.kind + "/" + r.label + ", expected " +
                             kind + "/" + label,
                         static_cast<int>(cursor_)};
        }
        for (u64 s : r.scalars) {
            if (s >= field_.modulus()) throw Reject{"scalar out of field range at " + label,
                                                    static_cast<int>(cursor_)};
        }
        check_canonical_shape(r);
        ++cursor_;
        return r;
    }

    /// Every record field is semantic; reject payload shapes the record kind
    /// does not define (including a set flag on non-boolean records), so a
    /// transcript has exactly one accepted encoding.
    void check_canonical_shape(const GadgetRecord& r) const {
        const auto bad = [&](const char* what) {
            throw Reject{std::string("non-canonical ") + r.kind + " record (" + what + ") at " +
                             r.label,
                         static_cast<int>(cursor_)};
        };
        const bool flag_is_semantic = r.kind == "comparison" || r.kind == "mux";
        if (!flag_is_semantic && r.flag) bad("flag");
        if (r.kind == "dot" || r.kind == "diff_norm_sq") {
            if (r.vec_refs.size() != 2 || r.scalars.size() != 1 || !r.aux.empty() || !r.ids.empty())
                bad("payload");
        } else if (r.kind == "norm_sq") {
            if (r.vec_refs.size() != 1 || r.scalars.size() != 1 || !r.aux.empty() || !r.ids.empty())
                bad("payload");
        } else if (r.kind == "isqrt") {
            if (!r.vec_refs.empty() || r.scalars.size() != 2 || !r.aux.empty() || !r.ids.empty())
                bad("payload");
        } else if (r.kind == "division") {
            if (!r.vec_refs.empty() || r.scalars.size() != 4 || !r.aux.empty() || !r.ids.empty())
                bad("payload");
        } else if (r.kind == "freivalds") {
            if (r.vec_refs.empty() || !r.scalars.empty() || !r.ids.empty()) bad("payload");
        } else if (r.kind == "sum_sq_dev") {
            if (!r.vec_refs.empty() || r.scalars.size() != 1 || !r.aux.empty() || !r.ids.empty())
                bad("payload");
        } else if (r.kind == "comparison") {
            if (!r.vec_refs.empty() || r.scalars.size() != 3 || !r.aux.empty() || !r.ids.empty())
                bad("payload");
        } else if (r.kind == "mux") {
            if (r.vec_refs.empty() || r.vec_refs.size() > 2 || !r.scalars.empty() ||
                !r.aux.empty() || !r.ids.empty())
                bad("payload");
        } else if (r.kind == "average") {
            if (r.vec_refs.size() != 1 || r.scalars.size() != 1 || r.ids.empty()) bad("payload");
        } else {
            bad("kind");
        }
    }

    void fail(const std::string& reason) const {
        throw Reject{reason, static_cast<int>(cursor_) - 1};
    }

    u64 dot_field(const std::vector<u64>& a, const std::vector<u64>& b) {
        u64 acc = 0;
        for (std::size_t j = 0; j < a.size(); ++j) acc = field_.add(acc, field_.mul(a[j], b[j]));
        *tally_ += a.size();
        return acc;
    }

    u64 replay_dot(const std::string& a, const std::string& b, const std::string& label) {
        const GadgetRecord& r = expect("dot", label);
        if (r.vec_refs != std::vector<std::string>{a, b}) fail("dot operands differ at " + label);
        const u64 value = dot_field(vec(a), vec(b));
        if (r.scalars.size() != 1 || r.scalars[0] != value) fail("dot claim differs at " + label);
        return value;
    }

    u64 replay_norm_sq(const std::string& a, const std::string& label) {
        const GadgetRecord& r = expect("norm_sq", label);
        if (r.vec_refs != std::vector<std::string>{a}) fail("norm operand differs at " + label);
        const u64 value = dot_field(vec(a), vec(a));
        if (r.scalars.size() != 1 || r.scalars[0] != value) fail("norm claim differs at " + label);
        return value;
    }

    u64 replay_diff_norm_sq(const std::string& a, const std::vector<u64>& bvals,
                            const std::string& label) {
        const GadgetRecord& r = expect("diff_norm_sq", label);
        if (r.vec_refs.size() != 2 || r.vec_refs[0] != a || r.vec_refs[1] != vec_name::stage2_ref()) {
            fail("distance operands differ at " + label);
        }
        const std::vector<u64>& avals = vec(a);
        if (avals.size() != bvals.size()) fail("distance length mismatch at " + label);
        u64 acc = 0;
        for (std::size_t j = 0; j < avals.size(); ++j) {
            const u64 d = field_.sub(avals[j], bvals[j]);
            acc = field_.add(acc, field_.mul(d, d));
        }
        *tally_ += avals.size();
        if (r.scalars.size() != 1 || r.scalars[0] != acc) fail("distance claim differs at " + label);
        return acc;
    }

    u64 replay_isqrt(u64 expected_y, const std::string& label) {
        const GadgetRecord& r = expect("isqrt", label);
        if (r.scalars.size() != 2 || r.scalars[0] != expected_y) {
            fail("isqrt input differs at " + label);
        }
        if (!isqrt_check(field_, r.scalars[0], r.scalars[1], tally_)) {
            fail("isqrt witness rejected at " + label);
        }
        return r.scalars[1];
    }

    u64 replay_division(u64 expected_a, u64 expected_b, const std::string& label) {
        const GadgetRecord& r = expect("division", label);
        if (r.scalars.size() != 4 || r.scalars[0] != expected_a || r.scalars[1] != expected_b) {
            fail("division operands differ at " + label);
        }
        if (!division_check(field_, r.scalars[0], r.scalars[1], r.scalars[2], r.scalars[3],
                            tally_)) {
            fail("division witness rejected at " + label);
        }
        return r.scalars[2];
    }

    bool replay_comparison(u64 lhs, u64 rhs, bool greater, const std::string& label,
                           bool* marginal_out = nullptr) {
        const GadgetRecord& r = expect("comparison", label);
        if (r.scalars.size() != 3 || r.scalars[0] != lhs || r.scalars[1] != rhs ||
            r.scalars[2] != (greater ? 1ULL : 0ULL)) {
            fail("comparison operands differ at " + label);
        }
        const i128 l = field_.decode_signed(lhs);
        const i128 rv = field_.decode_signed(rhs);
        const bool outcome = greater ? (l > rv) : (l < rv);
        if (r.flag != outcome) fail("comparison outcome differs at " + label);
        const i128 diff = l > rv ? l - rv : rv - l;
        const bool marginal = diff < static_cast<i128>(t_.marginal_ulps);
        if (marginal) any_marginal_ = true;
        if (marginal_out != nullptr) *marginal_out = marginal;
        return outcome;
    }

    u64 replay_cosine(u64 dot_enc, u64 norm_a, u64 norm_ref, const std::string& label_prefix) {
        const i128 d = field_.decode_signed(dot_enc);
        const bool negative = d < 0;
        const u64 mag = static_cast<u64>(negative ? -d : d);
        const u64 q1 = replay_division(mag, norm_a, label_prefix + "/div_self");
        const u64 shifted = field_.mul(q1, codec_.one());
        *tally_ += 1;
        const u64 q2 = replay_division(shifted, norm_ref, label_prefix + "/div_ref");
        return negative ? field_.neg(q2) : q2;
    }

    std::vector<u64> replay_average(const std::vector<int>& expected_members,
                                    const std::string& out_name, const std::string& label);
};

void Replayer::check_header() {
    if (t_.version != 1) throw Reject{"unsupported transcript version"};
    if (t_.digest_algorithm != "sha256") throw Reject{"unsupported digest algorithm"};
    if (t_.modulus != pub_.zk.modulus || t_.scale_bits != pub_.zk.scale_bits ||
        t_.freivalds_reps != pub_.zk.freivalds_reps || t_.marginal_ulps != pub_.zk.marginal_ulps) {
        throw Reject{"transcript header disagrees with public parameters"};
    }
    if (t_.client_ids.size() < 2) throw Reject{"too few clients"};
    if (!std::is_sorted(t_.client_ids.begin(), t_.client_ids.end()) ||
        std::adjacent_find(t_.client_ids.begin(), t_.client_ids.end()) != t_.client_ids.end()) {
        throw Reject{"client ids must be strictly ascending"};
    }
    if (t_.claimed_attack_flag != pub_.claimed_attack_flag ||
        t_.claimed_removed != pub_.claimed_removed) {
        throw Reject{"transcript claims disagree with the published report"};
    }
    for (int id : t_.claimed_removed) {
        if (!std::binary_search(t_.client_ids.begin(), t_.client_ids.end(), id)) {
            throw Reject{"claimed removal of unknown client " + std::to_string(id)};
        }
    }
}

void Replayer::check_commitments() {
    if (t_.commitments.size() != t_.vectors.size()) {
        throw Reject{"commitment table and revealed vectors disagree"};
    }
    std::size_t len = 0;
    for (const auto& [name, digest] : t_.commitments) {
        const auto it = t_.vectors.find(name);
        if (it == t_.vectors.end()) throw Reject{"commitment without revealed vector: " + name};
        for (u64 v : it->second) {
            if (v >= field_.modulus()) throw Reject{"vector value out of field range in " + name};
        }
        if (len == 0) len = it->second.size();
        if (it->second.size() != len) throw Reject{"vector length mismatch in " + name};
        if (commit_vector(t_.modulus, t_.scale_bits, it->second) != digest) {
            throw Reject{"commitment mismatch for " + name};
        }
        // Field headroom: sum of squares must stay below p/8 so squared
        // distances and Gram entries keep their integer meaning.
        u128 sum = 0;
        const auto limit = static_cast<u128>(field_.modulus()) / 8;
        for (u64 v : it->second) {
            const i128 s = field_.decode_signed(v);
            sum += static_cast<u128>(s * s);
            if (sum >= limit) throw Reject{"vector norm exceeds field headroom in " + name};
        }
    }

    // Bind current updates to what the clients themselves submitted.
    if (pub_.expected_update_commitments.size() != t_.client_ids.size()) {
        throw Reject{"expected update commitment count mismatch"};
    }
    for (int id : t_.client_ids) {
        const auto expected = pub_.expected_update_commitments.find(id);
        if (expected == pub_.expected_update_commitments.end()) {
            throw Reject{"no expected commitment for client " + std::to_string(id)};
        }
        if (t_.commitment_for(vec_name::update(id)) != expected->second) {
            throw Reject{"update commitment mismatch for client " + std::to_string(id)};
        }
    }

    // Bind revealed references to the previous round's published digests.
    if (pub_.prev_agg_commitment.empty()) {
        if (has_ref_agg()) throw Reject{"unexpected aggregate reference"};
    } else {
        if (!has_ref_agg()) throw Reject{"missing aggregate reference"};
        if (t_.commitment_for(vec_name::ref_agg()) != pub_.prev_agg_commitment) {
            throw Reject{"aggregate reference commitment mismatch"};
        }
    }
    for (int id : t_.client_ids) {
        const auto expected = pub_.prev_client_commitments.find(id);
        const bool revealed = t_.vectors.count(vec_name::ref_client(id)) > 0;
        const bool available = expected != pub_.prev_client_commitments.end() && has_ref_agg();
        if (revealed != available) {
            throw Reject{"client reference presence mismatch for client " + std::to_string(id)};
        }
        if (revealed && t_.commitment_for(vec_name::ref_client(id)) != expected->second) {
            throw Reject{"client reference commitment mismatch for client " + std::to_string(id)};
        }
    }
    for (const auto& [name, values] : t_.vectors) {
        (void)values;
        const bool known =
            name == vec_name::ref_agg() || name == vec_name::krum_avg() ||
            name == vec_name::out_agg() || name.rfind("update/", 0) == 0 ||
            name.rfind("ref/client/", 0) == 0;
        if (!known) throw Reject{"unknown committed vector " + name};
    }
}

void Replayer::replay_stage1(u64 gamma_q) {
    stage1_flag_fixed_ = false;
    const u64 y_g = replay_norm_sq(vec_name::ref_agg(), "s1/ref_norm_sq");
    const u64 n_g = replay_isqrt(y_g, "s1/ref_norm");
    for (int id : t_.client_ids) {
        const std::string upd = vec_name::update(id);
        const std::string prefix = "s1/c" + std::to_string(id);
        const u64 y_i = replay_norm_sq(upd, prefix + "/norm_sq");
        const u64 n_i = replay_isqrt(y_i, prefix + "/norm");
        if (n_i == 0 || n_g == 0) fail("zero quantized norm in stage 1");
        const u64 d_g = replay_dot(upd, vec_name::ref_agg(), prefix + "/dot_global");
        const u64 cos_g = replay_cosine(d_g, n_i, n_g, prefix + "/cos_global");
        if (replay_comparison(cos_g, gamma_q, false, prefix + "/below_gamma_global")) {
            stage1_flag_fixed_ = true;
        }
        const std::string self_ref = vec_name::ref_client(id);
        if (t_.vectors.count(self_ref) > 0) {
            const u64 y_s = replay_norm_sq(self_ref, prefix + "/self_norm_sq");
            const u64 n_s = replay_isqrt(y_s, prefix + "/self_norm");
            if (n_s == 0) fail("zero quantized norm in stage 1");
            const u64 d_s = replay_dot(upd, self_ref, prefix + "/dot_self");
            const u64 cos_s = replay_cosine(d_s, n_i, n_s, prefix + "/cos_self");
            if (replay_comparison(cos_s, gamma_q, false, prefix + "/below_gamma_self")) {
                stage1_flag_fixed_ = true;
            }
        }
    }
    stage1_marginal_ = any_marginal_;
}

std::vector<u64> Replayer::replay_average(const std::vector<int>& expected_members,
                                          const std::string& out_name, const std::string& label) {
    const GadgetRecord& r = expect("average", label);
    if (r.ids != expected_members) fail("average member set differs at " + label);
    if (r.vec_refs != std::vector<std::string>{out_name}) fail("average output differs at " + label);
    const auto divisor = static_cast<u64>(expected_members.size());
    if (r.scalars.size() != 1 || r.scalars[0] != divisor) fail("average divisor differs at " + label);
    const std::vector<u64>& out = vec(out_name);
    if (r.aux.size() != out.size()) fail("average remainder count differs at " + label);
    for (std::size_t j = 0; j < out.size(); ++j) {
        i128 sum = 0;
        for (int id : expected_members) sum += field_.decode_signed(vec(vec_name::update(id))[j]);
        const bool negative = sum < 0;
        const u128 mag = static_cast<u128>(negative ? -sum : sum);
        const i128 q_signed = field_.decode_signed(out[j]);
        if (negative ? q_signed > 0 : q_signed < 0) fail("average sign differs at " + label);
        const u128 q_mag = static_cast<u128>(q_signed < 0 ? -q_signed : q_signed);
        const u64 rem = r.aux[j];
        if (rem >= divisor) fail("average remainder out of range at " + label);
        if (q_mag * divisor + rem != mag) fail("average quotient differs at " + label);
    }
    *tally_ += out.size();
    return out;
}

void Replayer::replay_stage2() {
    const std::size_t n = t_.client_ids.size();
    const std::size_t len = vec(vec_name::update(t_.client_ids.front())).size();

    // Gram matrix via Freivalds with fresh verifier randomness.
    const GadgetRecord& gram_rec = expect("freivalds", "s2/gram");
    std::vector<std::string> expected_rows(n);
    for (std::size_t i = 0; i < n; ++i) expected_rows[i] = vec_name::update(t_.client_ids[i]);
    if (gram_rec.vec_refs != expected_rows) fail("freivalds operand rows differ");
    if (gram_rec.aux.size() != n * n) fail("freivalds product has wrong shape");
    FieldMatrix a{n, len, {}};
    a.data.reserve(n * len);
    for (const std::string& name : expected_rows) {
        const std::vector<u64>& row = vec(name);
        a.data.insert(a.data.end(), row.begin(), row.end());
    }
    FieldMatrix b{len, n, std::vector<u64>(len * n, 0)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < len; ++k) b.at(k, i) = a.at(i, k);
    }
    FieldMatrix gram{n, n, gram_rec.aux};
    for (u64 v : gram.data) {
        if (v >= field_.modulus()) fail("gram entry out of field range");
    }
    if (!freivalds_check(field_, a, b, gram, t_.freivalds_reps, rng_, tally_)) {
        fail("freivalds product check rejected");
    }

    // m-Krum fallback from the verified Gram matrix.
    const int f = static_cast<int>(n) / 2;
    const int m = std::max(1, static_cast<int>(n) / 2);
    const auto neighbors = static_cast<std::size_t>(std::max(1, static_cast<int>(n) - f - 2));
    std::vector<std::pair<i128, int>> krum_scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<i128> dists;
        dists.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const i128 d = field_.decode_signed(gram.at(i, i)) + field_.decode_signed(gram.at(j, j)) -
                           2 * field_.decode_signed(gram.at(i, j));
            if (d < 0) fail("negative squared distance from gram matrix");
            dists.push_back(d);
        }
        std::sort(dists.begin(), dists.end());
        i128 score = 0;
        for (std::size_t k = 0; k < std::min(neighbors, dists.size()); ++k) score += dists[k];
        krum_scores[i] = {score, t_.client_ids[i]};
    }
    std::sort(krum_scores.begin(), krum_scores.end());
    std::vector<int> krum_members;
    for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k) {
        krum_members.push_back(krum_scores[k].second);
    }
    std::sort(krum_members.begin(), krum_members.end());
    replay_average(krum_members, vec_name::krum_avg(), "s2/krum_avg");

    // Reference selection mux.
    const GadgetRecord& mux = expect("mux", "s2/ref_select");
    const bool use_fallback = t_.round == 0 || !has_ref_agg();
    std::vector<std::string> expected_refs{vec_name::krum_avg()};
    if (has_ref_agg()) expected_refs.push_back(vec_name::ref_agg());
    if (mux.vec_refs != expected_refs || mux.flag != use_fallback) {
        fail("reference selection differs");
    }
    *tally_ += static_cast<u64>(expected_refs.size()) * len;
    stage2_ref_ = use_fallback ? vec(vec_name::krum_avg()) : vec(vec_name::ref_agg());

    // Evilness scores.
    std::vector<u64> evil(n);
    u64 sum_e = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int id = t_.client_ids[i];
        const std::string prefix = "s2/c" + std::to_string(id);
        const u64 y2 = replay_diff_norm_sq(vec_name::update(id), stage2_ref_, prefix + "/dist_sq");
        evil[i] = replay_isqrt(y2, prefix + "/evilness");
        sum_e += evil[i];
    }

    const u64 mu_q = replay_division(sum_e, static_cast<u64>(n), "s2/mu");
    i128 sumsq = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const i128 dev = static_cast<i128>(evil[i]) - static_cast<i128>(mu_q);
        sumsq += dev * dev;
    }
    *tally_ += n;
    if (sumsq >= static_cast<i128>(field_.modulus())) fail("deviation sum exceeds field range");
    const GadgetRecord& sq_rec = expect("sum_sq_dev", "s2/sum_sq_dev");
    if (sq_rec.scalars.size() != 1 || sq_rec.scalars[0] != static_cast<u64>(sumsq)) {
        fail("sum of squared deviations differs");
    }
    const u64 var_q = replay_division(static_cast<u64>(sumsq), static_cast<u64>(n - 1),
                                      "s2/variance");
    const u64 sigma_q = replay_isqrt(var_q, "s2/sigma");
    const u64 lambda_q = codec_.quantize(pub_.params.lambda);
    const u64 lamsig = field_.mul(lambda_q, sigma_q);
    *tally_ += 1;
    const u64 lamsig_q = replay_division(lamsig, codec_.one(), "s2/lambda_sigma");
    const u64 bound_q = field_.add(mu_q, lamsig_q);

    for (std::size_t i = 0; i < n; ++i) {
        const int id = t_.client_ids[i];
        bool marginal = false;
        const bool decision = replay_comparison(evil[i], bound_q, true,
                                                "s2/c" + std::to_string(id) + "/above_bound",
                                                &marginal);
        removal_decision_[id] = decision;
        removal_marginal_[id] = marginal;
    }

    std::vector<int> survivors;
    for (int id : t_.client_ids) {
        if (t_.claimed_removed.count(id) == 0) survivors.push_back(id);
    }
    if (!survivors.empty()) {
        replay_average(survivors, vec_name::out_agg(), "s2/out_agg");
    } else if (t_.vectors.count(vec_name::out_agg()) > 0) {
        throw Reject{"unexpected survivor average in a fully-removed round"};
    }
}

void Replayer::check_report() {
    const bool fixed_flag = stage1_present() ? stage1_flag_fixed_ : true;
    if (fixed_flag != t_.claimed_attack_flag && !stage1_marginal_) {
        throw Reject{"attack flag disagrees with fixed-point replay"};
    }
    if (fixed_flag == t_.claimed_attack_flag) {
        for (int id : t_.client_ids) {
            const bool fixed_removed = fixed_flag && removal_decision_.at(id);
            const bool claimed = t_.claimed_removed.count(id) > 0;
            if (fixed_removed != claimed && !removal_marginal_.at(id)) {
                throw Reject{"removal decision for client " + std::to_string(id) +
                             " disagrees with fixed-point replay"};
            }
        }
    }
    if (t_.marginal != any_marginal_) {
        throw Reject{"marginal flag disagrees with replayed comparisons"};
    }
}

VerifyResult Replayer::run() {
    VerifyResult result;
    check_header();
    check_commitments();

    const u64 gamma_q = codec_.quantize(pub_.params.gamma);
    tally_ = &stage1_mults_;
    if (stage1_present()) replay_stage1(gamma_q);
    tally_ = &stage2_mults_;
    replay_stage2();

    if (cursor_ != t_.records.size()) {
        throw Reject{"trailing records after replay", static_cast<int>(cursor_)};
    }
    if (stage1_mults_ != t_.mult_count_stage1 || stage2_mults_ != t_.mult_count_stage2 ||
        stage1_mults_ + stage2_mults_ != t_.mult_count) {
        throw Reject{"multiplication tally disagrees with replay"};
    }
    check_report();

    result.accepted = true;
    result.marginal = any_marginal_;
    result.replayed_mults = stage1_mults_ + stage2_mults_;
    const bool fixed_flag = stage1_present() ? stage1_flag_fixed_ : true;
    for (int id : t_.client_ids) {
        if (fixed_flag && removal_decision_.at(id)) result.fixed_removed.insert(id);
    }
    return result;
}

} // namespace

VerifyResult verify_detection(const VerificationTranscript& transcript,
                              const PublicInputs& public_inputs, Rng& rng) {
    try {
        Replayer replayer(transcript, public_inputs, rng);
        return replayer.run();
    } catch (const Reject& reject) {
        VerifyResult result;
        result.accepted = false;
        result.reason = reject.reason;
        result.failing_record = reject.record;
        return result;
    } catch (const Error& error) {
        VerifyResult result;
        result.accepted = false;
        result.reason = error.what();
        return result;
    }
}

void advance_public(const VerificationTranscript& transcript, PublicInputs& public_inputs) {
    const std::string out_digest = transcript.commitment_for(vec_name::out_agg());
    if (out_digest.empty()) {
        // Quarantined round: keep the previous aggregate digest, clear history.
        public_inputs.prev_client_commitments.clear();
        return;
    }
    public_inputs.prev_agg_commitment = out_digest;
    public_inputs.prev_client_commitments.clear();
    for (int id : transcript.client_ids) {
        if (transcript.claimed_removed.count(id) == 0) {
            public_inputs.prev_client_commitments[id] =
                transcript.commitment_for(vec_name::update(id));
        }
    }
}

} // namespace flsentry
