#include "flsentry/prover.hpp"

#include <algorithm>
#include <cmath>

#include "flsentry/digest.hpp"
#include "flsentry/gadgets.hpp"

namespace flsentry {

namespace {

using u64 = std::uint64_t;
using i128 = __int128;
using u128 = unsigned __int128;

/// Builds the transcript while evaluating the relation set honestly.
class TranscriptBuilder {
public:
    TranscriptBuilder(const ProveInputs& in)
        : in_(in), field_(in.zk.modulus), codec_(field_, in.zk.scale_bits) {
        t_.modulus = in.zk.modulus;
        t_.scale_bits = in.zk.scale_bits;
        t_.freivalds_reps = in.zk.freivalds_reps;
        t_.marginal_ulps = in.zk.marginal_ulps;
        t_.round = in.round;
        t_.client_ids = in.client_ids;
    }

    VerificationTranscript build(const DetectionReport& report);

private:
    const ProveInputs& in_;
    PrimeField field_;
    FixedPointCodec codec_;
    VerificationTranscript t_;
    u64* tally_ = nullptr;
    bool any_marginal_ = false;

    // Per-comparison bookkeeping for the report cross-check.
    bool stage1_flag_fixed_ = true;
    bool stage1_any_marginal_ = false;
    std::map<int, bool> removal_decision_;
    std::map<int, bool> removal_marginal_;

    void commit(const std::string& name, std::vector<u64> values) {
        check_vector_range(values);
        t_.commitments.emplace_back(name,
                                    commit_vector(field_.modulus(), codec_.scale_bits(), values));
        t_.vectors[name] = std::move(values);
    }

    void check_vector_range(const std::vector<u64>& values) const {
        // Keep one squaring plus cross sums inside the field: sum v^2 < p/8.
        const auto limit = static_cast<u128>(field_.modulus()) / 8;
        u128 sum = 0;
        for (u64 v : values) {
            const i128 s = field_.decode_signed(v);
            sum += static_cast<u128>(s * s);
            if (sum >= limit) {
                throw RangeError("prover: committed vector norm exceeds field headroom");
            }
        }
    }

    const std::vector<u64>& vec(const std::string& name) const { return t_.vectors.at(name); }

    u64 dot_field(const std::vector<u64>& a, const std::vector<u64>& b) {
        u64 acc = 0;
        for (std::size_t j = 0; j < a.size(); ++j) acc = field_.add(acc, field_.mul(a[j], b[j]));
        *tally_ += a.size();
        return acc;
    }

    u64 rec_dot(const std::string& a, const std::string& b, const std::string& label) {
        const u64 claimed = dot_field(vec(a), vec(b));
        t_.records.push_back(GadgetRecord{"dot", label, {a, b}, {claimed}, {}, {}, false});
        return claimed;
    }

    u64 rec_norm_sq(const std::string& a, const std::string& label) {
        const u64 claimed = dot_field(vec(a), vec(a));
        t_.records.push_back(GadgetRecord{"norm_sq", label, {a}, {claimed}, {}, {}, false});
        return claimed;
    }

    u64 rec_diff_norm_sq(const std::string& a, const std::vector<u64>& bvals,
                         const std::string& b_name, const std::string& label) {
        const std::vector<u64>& avals = vec(a);
        u64 acc = 0;
        for (std::size_t j = 0; j < avals.size(); ++j) {
            const u64 d = field_.sub(avals[j], bvals[j]);
            acc = field_.add(acc, field_.mul(d, d));
        }
        *tally_ += avals.size();
        t_.records.push_back(GadgetRecord{"diff_norm_sq", label, {a, b_name}, {acc}, {}, {}, false});
        return acc;
    }

    u64 rec_isqrt(u64 y, const std::string& label) {
        const u64 x = isqrt_u64(y);
        *tally_ += 2;
        t_.records.push_back(GadgetRecord{"isqrt", label, {}, {y, x}, {}, {}, false});
        return x;
    }

    u64 rec_division(u64 a, u64 b, const std::string& label) {
        if (b == 0) throw RangeError("prover: division by zero in " + label);
        const u64 q = a / b;
        const u64 r = a % b;
        *tally_ += 1;
        t_.records.push_back(GadgetRecord{"division", label, {}, {a, b, q, r}, {}, {}, false});
        return q;
    }

    /// outcome of (lhs < rhs) or (lhs > rhs) on centered signed decodings.
    bool rec_comparison(u64 lhs, u64 rhs, bool greater, const std::string& label,
                        bool* marginal_out = nullptr) {
        const i128 l = field_.decode_signed(lhs);
        const i128 r = field_.decode_signed(rhs);
        const bool outcome = greater ? (l > r) : (l < r);
        const i128 diff = l > r ? l - r : r - l;
        const bool marginal = diff < static_cast<i128>(t_.marginal_ulps);
        if (marginal) any_marginal_ = true;
        if (marginal_out != nullptr) *marginal_out = marginal;
        t_.records.push_back(GadgetRecord{
            "comparison", label, {}, {lhs, rhs, greater ? 1ULL : 0ULL}, {}, {}, outcome});
        return outcome;
    }

    /// Signed cosine at scale s between a committed update and a reference,
    /// via two quotient/remainder divisions: |dot|/n_a, then (q*2^s)/n_ref.
    u64 cosine_enc(u64 dot_enc, u64 norm_a, u64 norm_ref, const std::string& label_prefix) {
        const i128 d = field_.decode_signed(dot_enc);
        const bool negative = d < 0;
        const u64 mag = static_cast<u64>(negative ? -d : d);
        if (norm_a == 0 || norm_ref == 0) {
            throw RangeError("prover: zero quantized norm in " + label_prefix);
        }
        const u64 q1 = rec_division(mag, norm_a, label_prefix + "/div_self");
        const u64 shifted = field_.mul(q1, codec_.one());
        *tally_ += 1;
        const u64 q2 = rec_division(shifted, norm_ref, label_prefix + "/div_ref");
        return negative ? field_.neg(q2) : q2;
    }

    void stage1(u64 gamma_q);
    void stage2(const DetectionReport& report);
    std::vector<u64> rec_average(const std::vector<int>& members, const std::string& out_name,
                                 const std::string& label);
    void cross_check(const DetectionReport& report);
};

void TranscriptBuilder::stage1(u64 gamma_q) {
    stage1_flag_fixed_ = false;
    const u64 y_g = rec_norm_sq(vec_name::ref_agg(), "s1/ref_norm_sq");
    const u64 n_g = rec_isqrt(y_g, "s1/ref_norm");
    for (std::size_t i = 0; i < in_.client_ids.size(); ++i) {
        const int id = in_.client_ids[i];
        const std::string upd = vec_name::update(id);
        const std::string prefix = "s1/c" + std::to_string(id);

        const u64 y_i = rec_norm_sq(upd, prefix + "/norm_sq");
        const u64 n_i = rec_isqrt(y_i, prefix + "/norm");

        const u64 d_g = rec_dot(upd, vec_name::ref_agg(), prefix + "/dot_global");
        const u64 cos_g = cosine_enc(d_g, n_i, n_g, prefix + "/cos_global");
        if (rec_comparison(cos_g, gamma_q, /*greater=*/false, prefix + "/below_gamma_global")) {
            stage1_flag_fixed_ = true;
        }

        const std::string self_ref = vec_name::ref_client(id);
        if (t_.vectors.count(self_ref) > 0) {
            const u64 y_s = rec_norm_sq(self_ref, prefix + "/self_norm_sq");
            const u64 n_s = rec_isqrt(y_s, prefix + "/self_norm");
            const u64 d_s = rec_dot(upd, self_ref, prefix + "/dot_self");
            const u64 cos_s = cosine_enc(d_s, n_i, n_s, prefix + "/cos_self");
            if (rec_comparison(cos_s, gamma_q, false, prefix + "/below_gamma_self")) {
                stage1_flag_fixed_ = true;
            }
        }
    }
    stage1_any_marginal_ = any_marginal_;
}

std::vector<u64> TranscriptBuilder::rec_average(const std::vector<int>& members,
                                                const std::string& out_name,
                                                const std::string& label) {
    const std::size_t len = vec(vec_name::update(members.front())).size();
    const auto divisor = static_cast<u64>(members.size());
    std::vector<u64> out(len), remainders(len);
    for (std::size_t j = 0; j < len; ++j) {
        i128 sum = 0;
        for (int id : members) sum += field_.decode_signed(vec(vec_name::update(id))[j]);
        const bool negative = sum < 0;
        const u64 mag = static_cast<u64>(negative ? -sum : sum);
        const u64 q = mag / divisor;
        remainders[j] = mag % divisor;
        out[j] = negative ? field_.neg(q) : q;
    }
    *tally_ += len; // one quotient/remainder relation per coordinate
    commit(out_name, out);
    t_.records.push_back(
        GadgetRecord{"average", label, {out_name}, {divisor}, std::move(remainders), members, false});
    return t_.vectors.at(out_name);
}

void TranscriptBuilder::stage2(const DetectionReport& report) {
    const std::size_t n = in_.client_ids.size();
    const std::size_t len = in_.segments.front().size();

    // Gram matrix of the update segments, checked by Freivalds' algorithm.
    FieldMatrix gram = FieldMatrix::zero(n, n);
    std::vector<std::string> row_refs(n);
    for (std::size_t i = 0; i < n; ++i) row_refs[i] = vec_name::update(in_.client_ids[i]);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            u64 acc = 0;
            const std::vector<u64>& a = vec(row_refs[i]);
            const std::vector<u64>& b = vec(row_refs[j]);
            for (std::size_t k = 0; k < len; ++k) acc = field_.add(acc, field_.mul(a[k], b[k]));
            gram.at(i, j) = acc;
            gram.at(j, i) = acc;
        }
    }
    *tally_ += freivalds_cost(n, len, n, t_.freivalds_reps);
    t_.records.push_back(GadgetRecord{"freivalds", "s2/gram", row_refs, {}, gram.data, {}, false});

    // m-Krum fallback reference from the Gram matrix, m = f = floor(n/2).
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
            dists.push_back(d);
        }
        std::sort(dists.begin(), dists.end());
        i128 score = 0;
        for (std::size_t k = 0; k < std::min(neighbors, dists.size()); ++k) score += dists[k];
        krum_scores[i] = {score, in_.client_ids[i]};
    }
    std::sort(krum_scores.begin(), krum_scores.end());
    std::vector<int> krum_members;
    for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k) {
        krum_members.push_back(krum_scores[k].second);
    }
    std::sort(krum_members.begin(), krum_members.end());
    rec_average(krum_members, vec_name::krum_avg(), "s2/krum_avg");

    // Reference selection: the cached aggregate when present, else the m-Krum
    // fallback. Both branches are part of the fixed relation set, so the
    // transcript layout does not depend on the round's data.
    const bool use_fallback = in_.round == 0 || !in_.chain.has_agg();
    std::vector<std::string> mux_refs{vec_name::krum_avg()};
    if (in_.chain.has_agg()) mux_refs.push_back(vec_name::ref_agg());
    t_.records.push_back(GadgetRecord{"mux", "s2/ref_select", mux_refs, {}, {}, {}, use_fallback});
    *tally_ += static_cast<u64>(mux_refs.size()) * len;
    const std::vector<u64> stage2_ref =
        use_fallback ? t_.vectors.at(vec_name::krum_avg()) : t_.vectors.at(vec_name::ref_agg());

    // Evilness scores: floor-sqrt of the squared distance to the reference.
    std::vector<u64> evil(n);
    u64 sum_e = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int id = in_.client_ids[i];
        const std::string prefix = "s2/c" + std::to_string(id);
        const u64 y2 = rec_diff_norm_sq(row_refs[i], stage2_ref, vec_name::stage2_ref(),
                                        prefix + "/dist_sq");
        evil[i] = rec_isqrt(y2, prefix + "/evilness");
        sum_e += evil[i];
    }

    // Three-sigma bound in fixed point: mu, sigma, mu + lambda*sigma.
    const u64 mu_q = rec_division(sum_e, static_cast<u64>(n), "s2/mu");
    i128 sumsq = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const i128 dev = static_cast<i128>(evil[i]) - static_cast<i128>(mu_q);
        sumsq += dev * dev;
    }
    *tally_ += n;
    if (sumsq >= static_cast<i128>(field_.modulus())) {
        throw RangeError("prover: deviation sum exceeds field range");
    }
    t_.records.push_back(
        GadgetRecord{"sum_sq_dev", "s2/sum_sq_dev", {}, {static_cast<u64>(sumsq)}, {}, {}, false});
    const u64 var_q = rec_division(static_cast<u64>(sumsq), static_cast<u64>(n - 1), "s2/variance");
    const u64 sigma_q = rec_isqrt(var_q, "s2/sigma");
    const u64 lambda_q = codec_.quantize(in_.params.lambda);
    const u64 lamsig = field_.mul(lambda_q, sigma_q);
    *tally_ += 1;
    const u64 lamsig_q = rec_division(lamsig, codec_.one(), "s2/lambda_sigma");
    const u64 bound_q = field_.add(mu_q, lamsig_q);

    for (std::size_t i = 0; i < n; ++i) {
        const int id = in_.client_ids[i];
        bool marginal = false;
        const bool decision = rec_comparison(evil[i], bound_q, /*greater=*/true,
                                             "s2/c" + std::to_string(id) + "/above_bound",
                                             &marginal);
        removal_decision_[id] = decision;
        removal_marginal_[id] = marginal;
    }

    // Survivor average, the committed reference for the next round.
    std::vector<int> survivors;
    for (int id : in_.client_ids) {
        if (report.removed.count(id) == 0) survivors.push_back(id);
    }
    if (!survivors.empty()) {
        rec_average(survivors, vec_name::out_agg(), "s2/out_agg");
    }
}

void TranscriptBuilder::cross_check(const DetectionReport& report) {
    const bool fixed_flag = (in_.round == 0 || !in_.chain.has_agg()) ? true : stage1_flag_fixed_;
    if (fixed_flag != report.attack_flag && !stage1_any_marginal_) {
        throw ProverInconsistencyError(
            "prover: fixed-point attack flag disagrees with the reported flag");
    }
    for (int id : in_.client_ids) {
        const bool fixed_removed = fixed_flag && removal_decision_.at(id);
        const bool claimed_removed = report.removed.count(id) > 0;
        if (fixed_removed != claimed_removed && !removal_marginal_.at(id) &&
            fixed_flag == report.attack_flag) {
            throw ProverInconsistencyError("prover: fixed-point removal decision for client " +
                                           std::to_string(id) +
                                           " disagrees with the reported set");
        }
    }
}

VerificationTranscript TranscriptBuilder::build(const DetectionReport& report) {
    if (in_.client_ids.size() != in_.segments.size() || in_.client_ids.size() < 2) {
        throw DimensionError("prover: need >= 2 aligned client segments");
    }
    const std::size_t len = in_.segments.front().size();
    for (const auto& s : in_.segments) {
        if (s.size() != len) throw DimensionError("prover: segment length mismatch");
    }

    // Commit current updates, then the revealed reference vectors.
    for (std::size_t i = 0; i < in_.client_ids.size(); ++i) {
        commit(vec_name::update(in_.client_ids[i]), codec_.quantize_vector(in_.segments[i]));
    }
    if (in_.chain.has_agg()) {
        if (in_.chain.prev_agg_q.size() != len) {
            throw DimensionError("prover: cached aggregate length mismatch");
        }
        commit(vec_name::ref_agg(), in_.chain.prev_agg_q);
        for (int id : in_.client_ids) {
            const auto it = in_.chain.prev_client_q.find(id);
            if (it != in_.chain.prev_client_q.end()) {
                if (it->second.size() != len) {
                    throw DimensionError("prover: cached client segment length mismatch");
                }
                commit(vec_name::ref_client(id), it->second);
            }
        }
    }

    const u64 gamma_q = codec_.quantize(in_.params.gamma);
    tally_ = &t_.mult_count_stage1;
    if (in_.chain.has_agg() && in_.round > 0) {
        stage1(gamma_q);
    } else {
        stage1_flag_fixed_ = true;
    }
    tally_ = &t_.mult_count_stage2;
    stage2(report);
    t_.mult_count = t_.mult_count_stage1 + t_.mult_count_stage2;

    t_.claimed_attack_flag = report.attack_flag;
    t_.claimed_removed = report.removed;
    t_.marginal = any_marginal_;
    cross_check(report);
    return t_;
}

} // namespace

VerificationTranscript prove_detection(const ProveInputs& inputs, const DetectionReport& report) {
    inputs.zk.validate();
    inputs.params.validate();
    TranscriptBuilder builder(inputs);
    return builder.build(report);
}

ZkChainState advance_chain(const VerificationTranscript& transcript, const ZkChainState& current) {
    ZkChainState next;
    const auto out = transcript.vectors.find(vec_name::out_agg());
    if (out == transcript.vectors.end()) {
        // Quarantined round: keep the old aggregate, clear per-client history.
        next.prev_agg_q = current.prev_agg_q;
        return next;
    }
    next.prev_agg_q = out->second;
    for (int id : transcript.client_ids) {
        if (transcript.claimed_removed.count(id) == 0) {
            next.prev_client_q[id] = transcript.vectors.at(vec_name::update(id));
        }
    }
    return next;
}

} // namespace flsentry
