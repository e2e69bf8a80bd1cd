#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "isaacs/errors.hpp"

namespace isaacs {

/// Philox4x32-10 counter-based generator. Stateless: output is a pure function of (counter, key).
struct Philox4x32 {
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block generate(Block ctr, Key key) {
        for (int r = 0; r < 10; ++r) {
            if (r) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            ctr = round(ctr, key);
        }
        return ctr;
    }

private:
    static Block round(const Block& c, const Key& k) {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Gaussian stream for one (seed, path, step): the counter is (block, step_lo, step_hi, path).
/// Path indices must fit in 32 bits; the full 64-bit step is kept.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path, std::uint64_t step)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          slo_(static_cast<std::uint32_t>(step)),
          shi_(static_cast<std::uint32_t>(step >> 32)),
          path_(static_cast<std::uint32_t>(path)) {
        if (path >> 32) throw ConfigError("path index must be below 2^32");
    }

    /// Next standard normal (Box-Muller, two per 128-bit block).
    double next() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        const auto b = Philox4x32::generate({block_++, slo_, shi_, path_}, key_);
        const double u1 = uniform(b[0], b[1]), u2 = uniform(b[2], b[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        have_ = true;
        return r * std::cos(t);
    }

    /// 53-bit uniform in (0, 1].
    static double uniform(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t m = ((std::uint64_t{hi} << 32) | lo) >> 11;
        return (static_cast<double>(m) + 1.0) * 0x1.0p-53;
    }

private:
    Philox4x32::Key key_;
    std::uint32_t slo_, shi_, path_;
    std::uint32_t block_ = 0;
    double spare_ = 0.0;
    bool have_ = false;
};

}  // namespace isaacs
