#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "pcreg/vec3.hpp"

namespace pcreg {

// Deterministic, platform-independent random stream (splitmix64 core).
// All randomness in the toolkit flows through this class so that a
// (config, seed) pair fixes every sample bit-exactly; std:: distributions
// are avoided on purpose since their output is implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 usable bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform index in [0, n); n must be > 0.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    Vec3 uniform_vec3(double lo, double hi) {
        const double a = uniform(lo, hi);
        const double b = uniform(lo, hi);
        const double c = uniform(lo, hi);
        return {a, b, c};
    }

    // Uniform direction via rejection sampling on the unit ball.
    Vec3 unit_vector() {
        for (;;) {
            Vec3 v = uniform_vec3(-1.0, 1.0);
            const double n2 = squared_norm(v);
            if (n2 > 1e-12 && n2 <= 1.0) return v / std::sqrt(n2);
        }
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

    // First k entries of a random permutation of [0, n).
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

    // Derives an independent child seed from a base seed and a path of
    // integers (stage id, case id, epoch, ...). Order-sensitive.
    static std::uint64_t derive(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
        std::uint64_t h = base ^ 0x51d1d2c5e4b7a911ULL;
        for (std::uint64_t p : path) {
            h ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            Rng mix(h);
            h = mix.next_u64();
        }
        return h;
    }

  private:
    std::uint64_t state_;
};

inline std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + uniform_index(n - i);
        std::swap(perm[i], perm[j]);
    }
    perm.resize(k);
    return perm;
}

}  // namespace pcreg
