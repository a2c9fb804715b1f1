#include "vton/core/tensor.hpp"

#include <cmath>

namespace vton {

bool Tensor::all_finite() const {
    for (float x : v_)
        if (!std::isfinite(x)) return false;
    return true;
}

float Tensor::abs_max() const {
    float m = 0.0f;
    for (float x : v_) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace vton
