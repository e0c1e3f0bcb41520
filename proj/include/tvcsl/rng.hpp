#pragma once

#include <cstdint>

namespace tvcsl {

// Counter-based SplitMix64 stream. Substreams are keyed by (seed, stream) so
// that per-subject draws are independent of generation order and parallelism.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    // Uniform on (0, 1): both endpoints excluded so logs are always finite.
    double uniform();

    // Exponential with the given rate.
    double exponential(double rate);

    // Standard normal via Box-Muller; draws are generated in pairs.
    double normal();

    // Derives a decorrelated child seed; used to key independent substreams
    // (e.g. train vs. test sets) from one base seed.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt);

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tvcsl
