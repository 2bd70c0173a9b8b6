#pragma once

#include <array>
#include <cstdint>

namespace contmeas {

// Philox4x64-10 counter-based generator. Streams are identified by the
// 128-bit key, so ensembles can hand (master_seed, trajectory_index) keys
// to independent workers and stay reproducible regardless of scheduling.
// The keystream matches numpy.random.Philox for the same key/counter.
class Philox {
public:
    explicit Philox(std::uint64_t key0, std::uint64_t key1 = 0)
        : key_{key0, key1} {}

    static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                              std::array<std::uint64_t, 2> key);

    std::uint64_t next_u64();

    // uniform on [0,1) with 53 random bits
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on (0,1]
    double next_open_double() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; generates in pairs
    double next_gaussian();

private:
    void refill();

    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> ctr_{0, 0, 0, 0};
    std::array<std::uint64_t, 4> buf_{};
    int pos_ = 4;
    bool has_cached_gaussian_ = false;
    double cached_gaussian_ = 0.0;
};

inline Philox trajectory_rng(std::uint64_t master_seed, std::uint64_t trajectory_index) {
    return Philox(master_seed, trajectory_index);
}

} // namespace contmeas
