#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace spcp {

/// Seedable generator whose output is identical on every conforming platform.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard. The
/// distributions on top are spelled out here because the standard library ones
/// are implementation-defined:
///   uniform()        53 high bits of one engine word, scaled to [0, 1)
///   normal()         Box-Muller on two uniforms (u1 mapped to (0, 1]); the
///                    cosine branch is returned first, the sine branch is cached
///                    and returned by the next call
///   index(n)         rejection sampling on one engine word, unbiased in [0, n)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t index(std::uint64_t n) {
        // 2^64 mod n; values below it would bias the modulo.
        const std::uint64_t floor = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= floor)
                return r % n;
        }
    }

    /// `count` distinct values from [0, population) in draw order
    /// (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                        std::size_t count) {
        std::vector<std::size_t> pool(population);
        for (std::size_t i = 0; i < population; ++i)
            pool[i] = i;
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(index(population - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(count);
        return pool;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace spcp
