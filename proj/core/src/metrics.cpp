#include "flsentry/metrics.hpp"

#include <algorithm>

namespace flsentry {

double modified_ppv(const ConfusionTally& tally) {
    const std::size_t denom = tally.n_tp + tally.n_fp + tally.n_total;
    if (denom == 0) {
        throw UndefinedMetricError("modified_ppv: zero denominator");
    }
    return static_cast<double>(tally.n_tp) / static_cast<double>(denom);
}

double cross_round_success_rate(std::span<const std::pair<bool, bool>> flags) {
    if (flags.empty()) {
        throw UndefinedMetricError("cross_round_success_rate: no rounds");
    }
    std::size_t correct = 0;
    for (const auto& [predicted, actual] : flags) {
        if (predicted == actual) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(flags.size());
}

ConfusionTally accumulate(const std::set<int>& removed, const std::set<int>& attacked,
                          ConfusionTally tally) {
    for (int id : removed) {
        if (attacked.count(id) > 0) {
            ++tally.n_tp;
        } else {
            ++tally.n_fp;
        }
    }
    tally.n_total += attacked.size();
    return tally;
}

} // namespace flsentry
