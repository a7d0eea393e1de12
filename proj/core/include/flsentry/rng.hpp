#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace flsentry {

/// Stream labels for deriving independent substreams from one root seed.
/// Keeping these fixed means e.g. changing the threat configuration does not
/// perturb data generation or client training randomness.
enum class Stream : std::uint64_t {
    data = 1,
    partition = 2,
    train = 3,
    threat_schedule = 4,
    threat_attack = 5,
    poison = 6,
    model_init = 7,
    verifier = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Derives a substream seed from a root seed and a list of labels
/// (stream id, round, client id, ...). Stable across platforms.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> labels);
std::uint64_t derive_seed(std::uint64_t root, Stream stream,
                          std::uint64_t a = 0, std::uint64_t b = 0);

/// mt19937_64-backed generator with distribution helpers implemented in
/// terms of the raw bit stream only, so sequences are identical across
/// standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller (second variate cached).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Gamma(alpha, 1) via Marsaglia-Tsang squeeze; alpha < 1 handled by the
    /// usual boost gamma(alpha+1) * U^(1/alpha).
    double gamma(double alpha);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace flsentry
