#pragma once

#include <filesystem>
#include <string>

#include "vton/core/tensor.hpp"

namespace vton {

// On-disk tensor format: one line of JSON {"dtype":"float32","shape":[...],
// "field":"..."} terminated by '\n', followed by raw little-endian float32 in
// C-order.
void write_tensor(const std::filesystem::path& path, const Tensor& t, const std::string& field);
Tensor read_tensor(const std::filesystem::path& path, std::string* field_out = nullptr);

}  // namespace vton
