#pragma once

// Counter-based random numbers for bit-reproducible experiments.
//
// The generator is Philox4x32-10 (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3", SC'11). A stream is identified by a 64-bit key and a
// 64-bit stream id; the remaining 64 counter bits index output blocks, so
// any (key, stream, block) triple maps to a fixed 128-bit output.
//
// Seeds for sub-tasks are derived with derive_seed(), a chain of SplitMix64
// finalizers. The derivation scheme used by the experiment harness is:
//
//   instance_seed = derive_seed(master_seed, kInstanceDomain, pool_index)
//   run_seed      = derive_seed(instance_seed, algorithm_index, run_index)
//   boot_seed     = derive_seed(instance_seed, kBootstrapDomain, iteration)
//   selection     = derive_seed(master_seed, kSelectionDomain)
//
// Distribution sampling (uniform doubles, normals, integer ranges) is done
// here rather than through <random> distributions, whose output is not
// specified bit-for-bit across standard library implementations.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace algocmp {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                         std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

inline constexpr std::uint64_t kInstanceDomain = 0x1A57A9CEull;
inline constexpr std::uint64_t kBootstrapDomain = 0xB0075712Aull;
inline constexpr std::uint64_t kSelectionDomain = 0x5E1EC7ull;

/// Deterministically derive a child seed from a parent and a list of indices.
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = detail::splitmix64(parent);
    for (std::uint64_t v : path) {
        h = detail::splitmix64(h ^ detail::splitmix64(v + 0x632BE59BD9B4E019ull));
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a) noexcept {
    return derive_seed(parent, {a});
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a,
                                    std::uint64_t b) noexcept {
    return derive_seed(parent, {a, b});
}

/// Philox4x32-10 block function.
constexpr std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
        detail::mulhilo32(kM0, ctr[0], hi0, lo0);
        detail::mulhilo32(kM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

/// Sequential view over one Philox stream. Satisfies UniformRandomBitGenerator.
class PhiloxStream {
public:
    using result_type = std::uint64_t;

    explicit PhiloxStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream_id) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept { return next_u64(); }

    std::uint64_t next_u64() noexcept {
        if (lane_ == 2) refill();
        return buffer_[lane_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1); never returns 0.
    double uniform_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n) by Lemire's multiply-and-reject method.
    std::uint64_t uniform_index(std::uint64_t n) noexcept {
        if (n <= 1) return 0;
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal deviate (Box-Muller; the paired value is cached).
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Independent stream keyed off this one's key.
    PhiloxStream split(std::uint64_t child) const noexcept {
        const std::uint64_t seed =
            (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0];
        return PhiloxStream(derive_seed(seed, stream_, child), 0);
    }

private:
    void refill() noexcept {
        const std::array<std::uint32_t, 4> ctr{
            static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        const auto out = philox4x32(ctr, key_);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        ++block_;
        lane_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int lane_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace algocmp
