#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace scz {

// Philox4x32-10 (Salmon et al., SC'11). Output depends only on (key, counter),
// so substreams keyed by (seed, task) are independent of evaluation order.
class Philox4x32 {
public:
    using block = std::array<std::uint32_t, 4>;

    static block generate(block ctr, std::array<std::uint32_t, 2> key) {
        for (int r = 0; r < 10; ++r) {
            ctr = round(ctr, key);
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

private:
    static block round(const block& c, const std::array<std::uint32_t, 2>& k) {
        std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
        std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
        auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

// Sequential view of one substream.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t task)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          task_(task) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    // Uniform on the open interval (0,1) with 53 random bits.
    double uniform() {
        std::uint64_t a = next_u32() >> 5, b = next_u32() >> 6;
        return (static_cast<double>(a * 67108864u + b) + 0.5) / 9007199254740992.0;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

    double sign() { return (next_u32() & 1u) ? 1.0 : -1.0; }

private:
    void refill() {
        Philox4x32::block ctr{static_cast<std::uint32_t>(count_), static_cast<std::uint32_t>(count_ >> 32),
                              static_cast<std::uint32_t>(task_), static_cast<std::uint32_t>(task_ >> 32)};
        buf_ = Philox4x32::generate(ctr, key_);
        ++count_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t task_;
    std::uint64_t count_ = 0;
    Philox4x32::block buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0;
};

}  // namespace scz
