#include "ldif/rng.hpp"

#include <cmath>

namespace ldif {

std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept {
    std::uint64_t z = master ^ fnv1a64(name);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::truncated_normal(double limit) {
    for (;;) {
        const double x = normal();
        if (std::abs(x) <= limit) return x;
    }
}

}  // namespace ldif
