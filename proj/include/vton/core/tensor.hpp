#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vton/core/errors.hpp"

namespace vton {

// Dense float32 tensor, C-order. Conventions used across the project:
//   images / feature maps: {C, H, W}
//   flow fields:           {2, H, W}   (channel 0 = dx, channel 1 = dy, pixels)
//   token sequences:       {L, D}
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        n_ = 1;
        for (int d : shape_) {
            if (d <= 0) throw ShapeError("Tensor: non-positive dim");
            n_ *= d;
        }
        v_.assign(static_cast<size_t>(n_), 0.0f);
    }

    Tensor(std::vector<int> shape, float fill) : Tensor(std::move(shape)) {
        std::fill(v_.begin(), v_.end(), fill);
    }

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t numel() const { return n_; }
    bool empty() const { return n_ == 0; }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    float* data() { return v_.data(); }
    const float* data() const { return v_.data(); }

    float& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }

    // {C,H,W} accessors
    float& at(int c, int y, int x) {
        return v_[static_cast<size_t>((static_cast<int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
    }
    float at(int c, int y, int x) const {
        return v_[static_cast<size_t>((static_cast<int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
    }
    // {M,N} accessors
    float& at(int r, int c) { return v_[static_cast<size_t>(static_cast<int64_t>(r) * shape_[1] + c)]; }
    float at(int r, int c) const { return v_[static_cast<size_t>(static_cast<int64_t>(r) * shape_[1] + c)]; }

    void fill(float x) { std::fill(v_.begin(), v_.end(), x); }

    std::string shape_str() const {
        std::string s = "{";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + "}";
    }

    bool all_finite() const;
    float abs_max() const;

private:
    std::vector<int> shape_;
    std::vector<float> v_;
    int64_t n_ = 0;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(where) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace vton
