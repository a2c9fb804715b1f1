#pragma once

#include <filesystem>

#include "vton/core/tensor.hpp"

namespace vton {

// Images are Tensors {C,H,W} with values in [0,1]; masks are {1,H,W} in {0,1}.

void png_write(const std::filesystem::path& path, const Tensor& img);  // C in {1,3}
Tensor png_read(const std::filesystem::path& path);                    // -> {3,H,W}

// mask utilities
Tensor mask_and(const Tensor& a, const Tensor& b);
Tensor mask_not(const Tensor& a);
Tensor dilate(const Tensor& mask, int radius);  // square structuring element
int64_t mask_area(const Tensor& mask);

// out = base*(1-mask) + overlay*mask, channelwise with {1,H,W} mask
Tensor composite(const Tensor& base, const Tensor& overlay, const Tensor& mask);
// out = base*(1-mask) + fill*mask
Tensor fill_region(const Tensor& base, const Tensor& mask, float fill);
Tensor threshold(const Tensor& x, float t);  // >= t -> 1 else 0

}  // namespace vton
