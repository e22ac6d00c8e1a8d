#ifndef BMNN_RNG_HPP
#define BMNN_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace bmnn {

// splitmix64 step; used for seed derivation only.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derives an independent sub-seed for a given stream index. Used for
// per-sample, per-epoch and per-replicate streams so that parallel work
// is order-independent and reproducible.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t s = seed;
    uint64_t a = splitmix64(s);
    s = a ^ (stream * 0xD6E8FEB86659FD93ull + 0x2545F4914F6CDD1Dull);
    return splitmix64(s);
}

// mt19937_64 with portable value conversions. std::uniform_real_distribution
// and std::shuffle are implementation-defined, so conversions and shuffling
// are done by hand to keep byte-identical output across platforms.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // Unbiased integer in [0, n) via rejection.
    uint64_t uniform_below(uint64_t n) {
        if (n <= 1) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return r % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

  private:
    std::mt19937_64 eng_;
};

// Fisher-Yates with the portable Rng.
template <typename Index>
void shuffle_indices(std::vector<Index>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_below(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

// FNV-1a 64-bit; integrity hashes for checkpoints and configs.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xCBF29CE484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace bmnn

#endif
