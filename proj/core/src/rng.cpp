#include "flsentry/rng.hpp"

#include <cmath>

namespace flsentry {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> labels) {
    std::uint64_t state = splitmix64(root);
    for (std::uint64_t label : labels) {
        state = splitmix64(state ^ splitmix64(label));
    }
    return state;
}

std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t a, std::uint64_t b) {
    return derive_seed(root, {static_cast<std::uint64_t>(stream), a, b});
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    if ((n & (n - 1)) == 0) return next_u64() & (n - 1); // power of two
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double Rng::gamma(double alpha) {
    if (alpha < 1.0) {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

} // namespace flsentry
