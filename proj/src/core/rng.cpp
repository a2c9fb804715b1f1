#include "vton/core/rng.hpp"

#include <cmath>

namespace vton {

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t fnv1a64_str(std::string_view s, uint64_t seed) { return fnv1a64(s.data(), s.size(), seed); }

static uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index) {
    uint64_t h = fnv1a64_str(tag, base ^ 0x9e3779b97f4a7c15ULL);
    h = fnv1a64(&index, sizeof(index), h);
    return splitmix64(h);
}

float Rng::normal() {
    // u1 in (0,1] so log() is finite
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2));
}

Tensor Rng::normal_tensor(std::vector<int> shape) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = normal();
    return t;
}

}  // namespace vton
