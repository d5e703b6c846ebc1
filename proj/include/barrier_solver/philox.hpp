#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace barrier_solver {

/// Philox4x32-10 (Salmon et al., SC'11). Stateless: every output block is a
/// pure function of (key, counter).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    [[nodiscard]] constexpr Counter operator()(Counter c) const noexcept {
        Key k = key_;
        round(c, k);
        for (int r = 1; r < 10; ++r) {
            k[0] += kW0;
            k[1] += kW1;
            round(c, k);
        }
        return c;
    }

    [[nodiscard]] constexpr Key key() const noexcept { return key_; }

private:
    static constexpr void round(Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
        c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }

    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;
    Key key_;
};

/// Uniform on the open interval (0, 1) from 52 random bits. With 53 bits the
/// top value plus one half rounds to 1.0.
[[nodiscard]] inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (std::uint64_t{hi} << 20) | (lo >> 12);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// One standard normal from a block (Box-Muller, cosine branch).
[[nodiscard]] inline double block_normal(const Philox4x32::Counter& b) noexcept {
    const double u1 = to_open_unit(b[0], b[1]);
    const double u2 = to_open_unit(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Both Box-Muller outputs of a block.
[[nodiscard]] inline std::array<double, 2> block_normal_pair(const Philox4x32::Counter& b) noexcept {
    const double r = std::sqrt(-2.0 * std::log(to_open_unit(b[0], b[1])));
    const double a = 2.0 * std::numbers::pi * to_open_unit(b[2], b[3]);
    return {r * std::cos(a), r * std::sin(a)};
}

[[nodiscard]] inline double block_uniform(const Philox4x32::Counter& b) noexcept {
    return to_open_unit(b[0], b[1]);
}

}  // namespace barrier_solver
