#pragma once

#include <cstdint>
#include <vector>

namespace btrack {

// Deterministic PRNG with portable output (no std distributions, whose
// results vary across standard libraries). splitmix64 core.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n), rejection-debiased.
    uint64_t below(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r = next();
        while (r >= limit) r = next();
        return r % n;
    }

    // Uniform double in [0, 1).
    double unit() { return double(next() >> 11) * 0x1.0p-53; }

    bool coin() { return (next() & 1) != 0; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[size_t(below(v.size()))];
    }

    // Derives an independent stream seed from (base, index).
    static uint64_t derive(uint64_t base, uint64_t index) {
        Rng r(base ^ (0xd1b54a32d192ed03ULL * (index + 1)));
        r.next();
        return r.next();
    }

  private:
    uint64_t state_;
};

} // namespace btrack
