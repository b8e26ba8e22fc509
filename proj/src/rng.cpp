#include "unmix/rng.hpp"

#include <limits>
#include <stdexcept>

namespace unmix {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t k0, std::uint64_t k1,
                           std::uint64_t k2, std::uint64_t k3) {
    // Mix the keys into a single stream state.
    std::uint64_t s = 0x243f6a8885a308d3ULL;
    for (std::uint64_t k : {k0, k1, k2, k3}) {
        s ^= k + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        (void)splitmix64(s);
    }
    state_ = s;
}

std::uint64_t RandomStream::next_u64() { return splitmix64(state_); }

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_pos() {
    double u;
    do {
        u = uniform();
    } while (u <= 0.0);
    return u;
}

double RandomStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

double RandomStream::gamma(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("gamma: parameters must be positive");
    if (alpha < 1.0) {
        // Boost: draw Gamma(alpha + 1) and scale by U^(1/alpha).  For very
        // small alpha the scale factor underflows; keep the draw inside the
        // support (the true density has no mass at exactly zero).
        double u = uniform_pos();
        double draw = gamma(alpha + 1.0, beta) * std::pow(u, 1.0 / alpha);
        return draw > 0.0 ? draw : std::numeric_limits<double>::min();
    }
    // Marsaglia & Tsang (2000).
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = uniform_pos();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / beta;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v / beta;
    }
}

int RandomStream::categorical(const double* weights, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (weights[i] < 0.0)
            throw std::invalid_argument("categorical: negative weight");
        total += weights[i];
    }
    if (!(total > 0.0))
        throw std::invalid_argument("categorical: all weights zero");
    double u = uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    // Fall through on rounding; return the last positive-weight index.
    for (int i = n - 1; i >= 0; --i)
        if (weights[i] > 0.0) return i;
    return n - 1;
}

bool RandomStream::bernoulli(double p_true) { return uniform() < p_true; }

}  // namespace unmix
