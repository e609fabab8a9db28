#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace bcpo {

/**
 * Seeded random source used by every stochastic routine. There is no global
 * generator: each call that needs randomness builds its own Rng from a seed,
 * so results depend only on (inputs, seed).
 *
 * Uniform draws are derived from the raw 64-bit engine output instead of
 * std::uniform_real_distribution so that sequences are identical across
 * standard library implementations.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(uniform() * static_cast<double>(n));
    }

    /// Index drawn from a (possibly unnormalized within rounding) probability row.
    int categorical(std::span<const double> probs) {
        const double u = uniform();
        double cumulative = 0.0;
        int last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            last_positive = static_cast<int>(i);
            cumulative += probs[i];
            if (u < cumulative) return static_cast<int>(i);
        }
        return last_positive;
    }

    /// Gamma(shape, 1) draw; shape 0 yields 0.
    double gamma(double shape) {
        if (shape <= 0.0) return 0.0;
        std::gamma_distribution<double> dist(shape, 1.0);
        return dist(engine_);
    }

    /// Dirichlet draw written into `out` (same length as `concentration`).
    void dirichlet(std::span<const double> concentration, std::span<double> out) {
        double total = 0.0;
        for (std::size_t i = 0; i < concentration.size(); ++i) {
            out[i] = gamma(concentration[i]);
            total += out[i];
        }
        if (total <= 0.0) {
            // all mass underflowed; fall back to the largest concentration
            std::size_t arg = 0;
            for (std::size_t i = 1; i < concentration.size(); ++i)
                if (concentration[i] > concentration[arg]) arg = i;
            for (auto& x : out) x = 0.0;
            out[arg] = 1.0;
            return;
        }
        for (auto& x : out) x /= total;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace bcpo
