#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "vton/core/tensor.hpp"

namespace vton {

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ULL);
uint64_t fnv1a64_str(std::string_view s, uint64_t seed = 0xcbf29ce484222325ULL);

// Stable seed derivation for independent streams (dataset samples, training
// steps, ...). splitmix64 over a hash of (base, tag, index).
uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index = 0);

// Seeded generator with fully specified output. mt19937_64 is pinned by the
// standard; uniform/normal are hand-rolled so no libstdc++ distribution
// internals leak into artifacts.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive range, rejection-free modulo bias is irrelevant at our sizes
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(gen_() % static_cast<uint64_t>(hi - lo + 1));
    }

    // Box-Muller (cosine branch only)
    float normal();

    Tensor normal_tensor(std::vector<int> shape);

private:
    std::mt19937_64 gen_;
};

}  // namespace vton
