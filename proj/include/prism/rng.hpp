#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "prism/grid.hpp"

namespace prism {

/// Deterministic seeded random stream. Identical seeds replay identical
/// draw sequences across runs; the full stream position serializes for
/// checkpoint/resume. Single-owner: parallel chains each hold their own
/// stream (use split() to derive independent ones).
class RngState {
public:
    explicit RngState(uint64_t seed);

    uint64_t seed() const { return seed_; }

    /// Next raw 64-bit word.
    uint64_t raw();

    /// Uniform double in [0, 1).
    double uniform();

    /// Standard normal via Box-Muller. Always consumes exactly two raw
    /// words, so the stream position is a pure function of the call count.
    double normal();
    void normal_pair(double& z0, double& z1);

    /// Independent stream derived from this seed and a stream index.
    RngState split(uint64_t stream) const;

    std::string serialize() const;
    static RngState deserialize(const std::string& text);

private:
    uint64_t seed_ = 0;
    std::mt19937_64 engine_;
};

/// Hash used for seed derivation and config fingerprints.
uint64_t splitmix64(uint64_t x);

/// Grid of i.i.d. standard normal entries; advances rng.
Grid draw_standard_normal(RngState& rng, int height, int width);

} // namespace prism
