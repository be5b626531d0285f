#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace herdsim {

// splitmix64; used to derive independent per-episode seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed for stream `stream` under `master`. Streams are independent of execution
// order, so batch results do not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = master ^ (0x9E3779B97F4A7C15ULL + stream * 0xD1B54A32D192ED03ULL);
    return a ^ splitmix64(s);
}

// mt19937_64 with fixed-algorithm double/categorical draws. The standard pins
// the engine bit-for-bit; the draw helpers below avoid std::*_distribution,
// whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() { return (eng_() >> 11) * 0x1.0p-53; }

    std::uint64_t next_u64() { return eng_(); }

    // Index i with probability probs[i]/sum(probs). probs need not be normalized.
    int categorical(std::span<const double> probs) {
        double total = 0.0;
        for (double p : probs) total += p;
        if (!(total > 0.0)) throw std::runtime_error("categorical: zero mass");
        double u = uniform01() * total;
        double acc = 0.0;
        int last_pos = -1;
        for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
            if (probs[i] > 0.0) last_pos = i;
            acc += probs[i];
            if (u < acc) return i;
        }
        return last_pos;  // rounding spill
    }

    int uniform_int(int n) { return static_cast<int>(eng_() % static_cast<std::uint64_t>(n)); }

private:
    std::mt19937_64 eng_;
};

}  // namespace herdsim
