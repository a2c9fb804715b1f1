#include "vton/flow/losses.hpp"

#include <cmath>

namespace vton::flow {

using ops::add;
using ops::l1;
using ops::mul_scalar;

Var flow_tv(Var flowfield) {
    const Tensor& f = flowfield.val();
    if (f.ndim() != 3) throw ShapeError("flow_tv: {C,H,W} expected");
    int C = f.dim(0), H = f.dim(1), W = f.dim(2);
    int64_t count = static_cast<int64_t>(C) * (static_cast<int64_t>(H) * (W - 1) + static_cast<int64_t>(H - 1) * W);
    if (count == 0) throw ShapeError("flow_tv: grid too small");
    double s = 0;
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x + 1 < W; ++x) s += std::abs(f.at(c, y, x + 1) - f.at(c, y, x));
        for (int y = 0; y + 1 < H; ++y)
            for (int x = 0; x < W; ++x) s += std::abs(f.at(c, y + 1, x) - f.at(c, y, x));
    }
    Tensor out({1});
    out[0] = static_cast<float>(s / static_cast<double>(count));
    int pf = flowfield.id;
    return flowfield.g->make_node(std::move(out), {pf}, [pf, C, H, W, count](Graph& g, int n) {
        float d = g.grad(n)[0] / static_cast<float>(count);
        const Tensor& v = g.value(pf);
        Tensor& gf = g.grad_buf(pf);
        for (int c = 0; c < C; ++c) {
            for (int y = 0; y < H; ++y)
                for (int x = 0; x + 1 < W; ++x) {
                    float diff = v.at(c, y, x + 1) - v.at(c, y, x);
                    float sg = (diff > 0) - (diff < 0);
                    gf.at(c, y, x + 1) += d * sg;
                    gf.at(c, y, x) -= d * sg;
                }
            for (int y = 0; y + 1 < H; ++y)
                for (int x = 0; x < W; ++x) {
                    float diff = v.at(c, y + 1, x) - v.at(c, y, x);
                    float sg = (diff > 0) - (diff < 0);
                    gf.at(c, y + 1, x) += d * sg;
                    gf.at(c, y, x) -= d * sg;
                }
        }
    });
}

Var flow_second(Var flowfield) {
    const Tensor& f = flowfield.val();
    if (f.ndim() != 3) throw ShapeError("flow_second: {C,H,W} expected");
    int C = f.dim(0), H = f.dim(1), W = f.dim(2);
    int64_t cx = W >= 3 ? static_cast<int64_t>(H) * (W - 2) : 0;
    int64_t cy = H >= 3 ? static_cast<int64_t>(H - 2) * W : 0;
    int64_t count = C * (cx + cy);
    if (count == 0) throw ShapeError("flow_second: grid too small");
    double s = 0;
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x + 2 < W; ++x) {
                double v = static_cast<double>(f.at(c, y, x)) - 2.0 * f.at(c, y, x + 1) + f.at(c, y, x + 2);
                s += v * v;
            }
        for (int y = 0; y + 2 < H; ++y)
            for (int x = 0; x < W; ++x) {
                double v = static_cast<double>(f.at(c, y, x)) - 2.0 * f.at(c, y + 1, x) + f.at(c, y + 2, x);
                s += v * v;
            }
    }
    Tensor out({1});
    out[0] = static_cast<float>(s / static_cast<double>(count));
    int pf = flowfield.id;
    return flowfield.g->make_node(std::move(out), {pf}, [pf, C, H, W, count](Graph& g, int n) {
        float d = 2.0f * g.grad(n)[0] / static_cast<float>(count);
        const Tensor& v = g.value(pf);
        Tensor& gf = g.grad_buf(pf);
        for (int c = 0; c < C; ++c) {
            for (int y = 0; y < H; ++y)
                for (int x = 0; x + 2 < W; ++x) {
                    float s2 = v.at(c, y, x) - 2.0f * v.at(c, y, x + 1) + v.at(c, y, x + 2);
                    gf.at(c, y, x) += d * s2;
                    gf.at(c, y, x + 1) -= 2.0f * d * s2;
                    gf.at(c, y, x + 2) += d * s2;
                }
            for (int y = 0; y + 2 < H; ++y)
                for (int x = 0; x < W; ++x) {
                    float s2 = v.at(c, y, x) - 2.0f * v.at(c, y + 1, x) + v.at(c, y + 2, x);
                    gf.at(c, y, x) += d * s2;
                    gf.at(c, y + 1, x) -= 2.0f * d * s2;
                    gf.at(c, y + 2, x) += d * s2;
                }
        }
    });
}

FlowLossParts flow_loss_components(Var pred, Var target, Var flowfield, const PerceptualFn& perceptual) {
    FlowLossParts parts;
    parts.l1 = l1(pred, target);
    std::vector<Var> fa = perceptual(pred);
    std::vector<Var> fb = perceptual(target);
    if (fa.size() != fb.size() || fa.empty()) throw ShapeError("flow_loss_components: perceptual levels");
    Var acc = l1(fa[0], fb[0]);
    for (size_t i = 1; i < fa.size(); ++i) acc = add(acc, l1(fa[i], fb[i]));
    parts.per = mul_scalar(acc, 1.0f / static_cast<float>(fa.size()));
    parts.sec = flow_second(flowfield);
    parts.tv = flow_tv(flowfield);
    return parts;
}

Var aggregate_flow_loss(const FlowLossParts& parts, const FlowLossWeights& w) {
    Var out = add(parts.l1, mul_scalar(parts.per, w.per));
    out = add(out, mul_scalar(parts.sec, w.sec));
    return add(out, mul_scalar(parts.tv, w.tv));
}

double aggregate_flat_loss(double l1v, double per, double sec, double tv, const FlowLossWeights& w) {
    return l1v + w.per * per + w.sec * sec + w.tv * tv;
}

double aggregate_warp_loss(double l1v, double per, double sec, double tv, const FlowLossWeights& w) {
    return l1v + w.per * per + w.sec * sec + w.tv * tv;
}

}  // namespace vton::flow
