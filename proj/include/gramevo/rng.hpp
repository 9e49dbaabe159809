#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace gramevo {

/// Seeded random stream used everywhere a run needs randomness.
///
/// Distribution mappings are written out here rather than delegated to
/// <random>'s distributions, whose output is implementation-defined; golden
/// files must not change between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [lo, hi] (inclusive). Requires lo <= hi.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Uniform index in [0, n). Requires n > 0.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller; stateless apart from the engine.
    double normal();

    /// Fork an independent stream; consumes one draw from this one.
    Rng split() { return Rng(mix(engine_())); }

    std::string state() const;
    void set_state(const std::string& text);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

    /// SplitMix64 finalizer, used to derive well-separated seeds.
    static std::uint64_t mix(std::uint64_t x);

private:
    std::mt19937_64 engine_;
};

/// Seed for a derived stream keyed by (base, a, b).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace gramevo
