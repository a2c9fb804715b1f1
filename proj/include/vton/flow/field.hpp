#pragma once

#include <array>
#include <functional>

#include "vton/core/ops.hpp"
#include "vton/core/tensor.hpp"

namespace vton::flow {

// A flow field is a Tensor {2,H,W}: channel 0 = dx, channel 1 = dy, in pixels.
// apply(img, f)(x) = img(x + f(x)), bilinear, zeros outside the canvas.

void check_flow(const Tensor& f, const char* where);

Tensor apply_flow(const Tensor& img, const Tensor& flowfield);
Var apply_flow(Var img, Var flowfield);

// (f (.) g)(x) = g(x) + f(x + g(x)), bilinear lookup of f
Tensor compose_flows(const Tensor& f, const Tensor& g);
Var compose_flows(Var f, Var g);

Tensor zero_flow(int H, int W);
Tensor constant_flow(int H, int W, float dx, float dy);

// Thin plate spline interpolating dst-src displacements at src control points.
// Kernel r^2 log r with affine part; solved as one dense system.
class TpsMap {
public:
    static TpsMap fit(const std::vector<std::array<double, 2>>& src,
                      const std::vector<std::array<double, 2>>& dst);
    std::array<double, 2> disp(double x, double y) const;  // analytic displacement
    Tensor render(int H, int W) const;                     // dense flow field

private:
    std::vector<std::array<double, 2>> src_;
    std::vector<std::array<double, 2>> w_;  // kernel weights per control point
    std::array<double, 2> a0_, ax_, ay_;    // affine part
};

Tensor tps_flow(const std::vector<std::array<double, 2>>& src, const std::vector<std::array<double, 2>>& dst,
                int H, int W);

// Numerically invert the map phi(x) = x + disp(x) on a grid: returns the flow
// g with phi(y + g(y)) = y, via damped fixed-point iteration on the analytic
// displacement function.
Tensor invert_map(const std::function<std::array<double, 2>(double x, double y)>& disp, int H, int W,
                  int iters = 40);

}  // namespace vton::flow
