#pragma once

#include <vector>

#include "vton/core/graph.hpp"

namespace vton::ops {

// ---- elementwise ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_scalar(Var a, float s);
Var mul_scalar(Var a, float s);

// ---- broadcasting affine ----
Var bias_channels(Var x, Var b);   // x{C,H,W} + b{C}
Var scale_channels(Var x, Var s);  // x{C,H,W} * s{C}
Var bias_rows(Var x, Var b);       // x{M,N} + b{N}

// ---- linear algebra ----
Var matmul(Var a, Var b);     // {M,K}x{K,N}
Var matmul_tb(Var a, Var b);  // {M,K}x{N,K}^T -> {M,N}

// ---- conv / resampling ----
Var conv2d(Var x, Var w, Var b, int stride, int pad);  // w{Cout,Cin,kh,kw}, b{Cout}
Var upsample_nearest2(Var x);
// Bilinear x2 upsample with edge clamp. scale_values doubles the output
// (flow displacements scale with resolution).
Var upsample_bilinear2(Var x, bool scale_values = false);
Var avgpool2(Var x);  // 2x2 mean, even dims required

// Backward-warp bilinear sampling with zero padding outside the canvas.
// out(c,y,x) = img(c, y+flow[1](y,x), x+flow[0](y,x))
Var grid_sample(Var img, Var flow);

// ---- activations ----
Var relu(Var x);
Var leaky_relu(Var x, float alpha);
Var silu(Var x);
Var sigmoid(Var x);
Var tanh_(Var x);
Var exp_(Var x);

// ---- normalization / attention ----
Var group_norm(Var x, Var gamma, Var beta, int groups, float eps = 1e-5f);
Var softmax_rows(Var x);

// ---- reshaping ----
Var concat_ch(const std::vector<Var>& xs);
Var slice_ch(Var x, int c0, int c1);
Var chw_to_tokens(Var x);                       // {C,H,W} -> {H*W, C}
Var tokens_to_chw(Var x, int C, int H, int W);  // inverse
Var reshape(Var x, std::vector<int> shape);     // same numel

// ---- reductions / losses (double accumulation) ----
Var mean_all(Var x);
Var sum_all(Var x);
Var square(Var x);
Var l1(Var a, Var b);                                 // mean |a-b|
Var mse(Var a, Var b);                                // mean (a-b)^2
Var l1_masked(Var a, Var b, const Tensor& mask);      // mean over mask support (mask {1,H,W} binary)

// ---- FreeU spectral term ----
// y = x + (s-1) * lowband(x); lowband keeps per-axis frequencies within
// radius_frac of Nyquist (DFT projection, linear and symmetric).
Var lowfreq_mix(Var x, float s, float radius_frac);

// Plain-tensor counterparts used outside autodiff paths.
Tensor grid_sample_plain(const Tensor& img, const Tensor& flow);
Tensor avgpool2_plain(const Tensor& x);
Tensor upsample_bilinear2_plain(const Tensor& x, bool scale_values = false);
Tensor lowfreq_band_plain(const Tensor& x, float radius_frac);

}  // namespace vton::ops
