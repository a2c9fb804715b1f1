#include "vton/core/nn.hpp"

namespace vton {

void add_conv(ParamStore& p, const std::string& name, int cout, int cin, int k, Rng& rng, bool zero_init) {
    Tensor& w = p.add(name + "/w", {cout, cin, k, k});
    if (!zero_init) init_kaiming(w, rng, cin * k * k);
    p.add(name + "/b", {cout});
}

void add_linear(ParamStore& p, const std::string& name, int din, int dout, Rng& rng, bool zero_init) {
    Tensor& w = p.add(name + "/w", {din, dout});
    if (!zero_init) init_kaiming(w, rng, din);
    p.add(name + "/b", {dout});
}

void add_group_norm(ParamStore& p, const std::string& name, int c) {
    Tensor& gmm = p.add(name + "/g", {c});
    gmm.fill(1.0f);
    p.add(name + "/b", {c});
}

Var conv(const NetCtx& ctx, Var x, const std::string& name, int stride, int pad) {
    return ops::conv2d(x, ctx.t(name + "/w"), ctx.t(name + "/b"), stride, pad);
}

Var linear(const NetCtx& ctx, Var x, const std::string& name) {
    return ops::bias_rows(ops::matmul(x, ctx.t(name + "/w")), ctx.t(name + "/b"));
}

Var group_norm(const NetCtx& ctx, Var x, const std::string& name, int groups) {
    return ops::group_norm(x, ctx.t(name + "/g"), ctx.t(name + "/b"), groups);
}

}  // namespace vton
