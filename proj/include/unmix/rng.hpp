#pragma once

#include <cstdint>
#include <cmath>

namespace unmix {

// Counter-based random stream.  Every stream is identified by up to four
// 64-bit keys (run seed, iteration, sample, tone); draws within a stream
// advance a local counter.  Output is platform-independent.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t k0, std::uint64_t k1 = 0,
                          std::uint64_t k2 = 0, std::uint64_t k3 = 0);

    std::uint64_t next_u64();

    // Uniform on [0, 1).
    double uniform();
    // Uniform on (0, 1), never returns 0.
    double uniform_pos();
    // Standard normal via Box-Muller.
    double normal();
    // Gamma(alpha, beta) with rate parameterization; valid for all alpha > 0
    // (Marsaglia-Tsang squeeze with the boost trick below alpha = 1).
    double gamma(double alpha, double beta);
    // Index into a discrete distribution given by (not necessarily
    // normalized) non-negative weights.
    int categorical(const double* weights, int n);
    bool bernoulli(double p_true);

private:
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace unmix
