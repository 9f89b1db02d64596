#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ldif {

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Derives the seed of a named component from the master seed:
/// splitmix64(master ^ fnv1a64(name)). Every random stream in the project is
/// obtained this way so that adding a new component never shifts another
/// component's stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept;

class Rng {
   public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    Rng derive(std::string_view name) const { return Rng(derive_seed(seed_, name)); }

    std::uint64_t seed() const noexcept { return seed_; }

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }
    /// Standard normal truncated to [-limit, limit] by rejection.
    double truncated_normal(double limit);

    std::mt19937_64& engine() noexcept { return engine_; }

   private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace ldif
