#include "vton/core/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>

namespace vton::ops {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

static void check3d(const Tensor& t, const char* where) {
    if (t.ndim() != 3) throw ShapeError(std::string(where) + ": expected 3-d tensor, got " + t.shape_str());
}

// ---------------------------------------------------------------- elementwise

Var add(Var a, Var b) {
    check_same_shape(a.val(), b.val(), "add");
    Tensor out = a.val();
    const Tensor& tb = b.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
    int pa = a.id, pb = b.id;
    return a.g->make_node(std::move(out), {pa, pb}, [pa, pb](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        if (g.needs(pa)) {
            Tensor& ga = g.grad_buf(pa);
            for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
        }
        if (g.needs(pb)) {
            Tensor& gb = g.grad_buf(pb);
            for (int64_t i = 0; i < go.numel(); ++i) gb[i] += go[i];
        }
    });
}

Var sub(Var a, Var b) {
    check_same_shape(a.val(), b.val(), "sub");
    Tensor out = a.val();
    const Tensor& tb = b.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] -= tb[i];
    int pa = a.id, pb = b.id;
    return a.g->make_node(std::move(out), {pa, pb}, [pa, pb](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        if (g.needs(pa)) {
            Tensor& ga = g.grad_buf(pa);
            for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
        }
        if (g.needs(pb)) {
            Tensor& gb = g.grad_buf(pb);
            for (int64_t i = 0; i < go.numel(); ++i) gb[i] -= go[i];
        }
    });
}

Var mul(Var a, Var b) {
    check_same_shape(a.val(), b.val(), "mul");
    Tensor out = a.val();
    const Tensor& tb = b.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= tb[i];
    int pa = a.id, pb = b.id;
    return a.g->make_node(std::move(out), {pa, pb}, [pa, pb](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        const Tensor& va = g.value(pa);
        const Tensor& vb = g.value(pb);
        if (g.needs(pa)) {
            Tensor& ga = g.grad_buf(pa);
            for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * vb[i];
        }
        if (g.needs(pb)) {
            Tensor& gb = g.grad_buf(pb);
            for (int64_t i = 0; i < go.numel(); ++i) gb[i] += go[i] * va[i];
        }
    });
}

Var add_scalar(Var a, float s) {
    Tensor out = a.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += s;
    int pa = a.id;
    return a.g->make_node(std::move(out), {pa}, [pa](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        Tensor& ga = g.grad_buf(pa);
        for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
    });
}

Var mul_scalar(Var a, float s) {
    Tensor out = a.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= s;
    int pa = a.id;
    return a.g->make_node(std::move(out), {pa}, [pa, s](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        Tensor& ga = g.grad_buf(pa);
        for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * s;
    });
}

// ------------------------------------------------------------------ broadcast

Var bias_channels(Var x, Var b) {
    check3d(x.val(), "bias_channels");
    const Tensor& tb = b.val();
    if (tb.ndim() != 1 || tb.dim(0) != x.val().dim(0)) throw ShapeError("bias_channels: b{C} mismatch");
    Tensor out = x.val();
    int C = out.dim(0);
    int64_t hw = static_cast<int64_t>(out.dim(1)) * out.dim(2);
    for (int c = 0; c < C; ++c) {
        float bv = tb[c];
        float* p = out.data() + c * hw;
        for (int64_t i = 0; i < hw; ++i) p[i] += bv;
    }
    int px = x.id, pb = b.id;
    return x.g->make_node(std::move(out), {px, pb}, [px, pb, C, hw](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        if (g.needs(px)) {
            Tensor& gx = g.grad_buf(px);
            for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i];
        }
        if (g.needs(pb)) {
            Tensor& gb = g.grad_buf(pb);
            for (int c = 0; c < C; ++c) {
                double s = 0;
                const float* p = go.data() + c * hw;
                for (int64_t i = 0; i < hw; ++i) s += p[i];
                gb[c] += static_cast<float>(s);
            }
        }
    });
}

Var scale_channels(Var x, Var s) {
    check3d(x.val(), "scale_channels");
    const Tensor& ts = s.val();
    if (ts.ndim() != 1 || ts.dim(0) != x.val().dim(0)) throw ShapeError("scale_channels: s{C} mismatch");
    Tensor out = x.val();
    int C = out.dim(0);
    int64_t hw = static_cast<int64_t>(out.dim(1)) * out.dim(2);
    for (int c = 0; c < C; ++c) {
        float sv = ts[c];
        float* p = out.data() + c * hw;
        for (int64_t i = 0; i < hw; ++i) p[i] *= sv;
    }
    int px = x.id, ps = s.id;
    return x.g->make_node(std::move(out), {px, ps}, [px, ps, C, hw](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        const Tensor& vx = g.value(px);
        const Tensor& vs = g.value(ps);
        if (g.needs(px)) {
            Tensor& gx = g.grad_buf(px);
            for (int c = 0; c < C; ++c) {
                float sv = vs[c];
                const float* p = go.data() + c * hw;
                float* q = gx.data() + c * hw;
                for (int64_t i = 0; i < hw; ++i) q[i] += p[i] * sv;
            }
        }
        if (g.needs(ps)) {
            Tensor& gs = g.grad_buf(ps);
            for (int c = 0; c < C; ++c) {
                double acc = 0;
                const float* p = go.data() + c * hw;
                const float* q = vx.data() + c * hw;
                for (int64_t i = 0; i < hw; ++i) acc += static_cast<double>(p[i]) * q[i];
                gs[c] += static_cast<float>(acc);
            }
        }
    });
}

Var bias_rows(Var x, Var b) {
    const Tensor& tx = x.val();
    const Tensor& tb = b.val();
    if (tx.ndim() != 2 || tb.ndim() != 1 || tb.dim(0) != tx.dim(1)) throw ShapeError("bias_rows: shape");
    Tensor out = tx;
    int M = tx.dim(0), N = tx.dim(1);
    for (int r = 0; r < M; ++r)
        for (int c = 0; c < N; ++c) out.at(r, c) += tb[c];
    int px = x.id, pb = b.id;
    return x.g->make_node(std::move(out), {px, pb}, [px, pb, M, N](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        if (g.needs(px)) {
            Tensor& gx = g.grad_buf(px);
            for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i];
        }
        if (g.needs(pb)) {
            Tensor& gb = g.grad_buf(pb);
            for (int c = 0; c < N; ++c) {
                double s = 0;
                for (int r = 0; r < M; ++r) s += go.at(r, c);
                gb[c] += static_cast<float>(s);
            }
        }
    });
}

// ------------------------------------------------------------- linear algebra

Var matmul(Var a, Var b) {
    const Tensor& ta = a.val();
    const Tensor& tb = b.val();
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.dim(1) != tb.dim(0)) throw ShapeError("matmul: shape");
    int M = ta.dim(0), K = ta.dim(1), N = tb.dim(1);
    Tensor out({M, N});
    MapM(out.data(), M, N).noalias() = CMapM(ta.data(), M, K) * CMapM(tb.data(), K, N);
    int pa = a.id, pb = b.id;
    return a.g->make_node(std::move(out), {pa, pb}, [pa, pb, M, K, N](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        CMapM dy(go.data(), M, N);
        if (g.needs(pa)) {
            MapM(g.grad_buf(pa).data(), M, K).noalias() += dy * CMapM(g.value(pb).data(), K, N).transpose();
        }
        if (g.needs(pb)) {
            MapM(g.grad_buf(pb).data(), K, N).noalias() += CMapM(g.value(pa).data(), M, K).transpose() * dy;
        }
    });
}

Var matmul_tb(Var a, Var b) {
    const Tensor& ta = a.val();
    const Tensor& tb = b.val();
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.dim(1) != tb.dim(1)) throw ShapeError("matmul_tb: shape");
    int M = ta.dim(0), K = ta.dim(1), N = tb.dim(0);
    Tensor out({M, N});
    MapM(out.data(), M, N).noalias() = CMapM(ta.data(), M, K) * CMapM(tb.data(), N, K).transpose();
    int pa = a.id, pb = b.id;
    return a.g->make_node(std::move(out), {pa, pb}, [pa, pb, M, K, N](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        CMapM dy(go.data(), M, N);
        if (g.needs(pa)) {
            MapM(g.grad_buf(pa).data(), M, K).noalias() += dy * CMapM(g.value(pb).data(), N, K);
        }
        if (g.needs(pb)) {
            MapM(g.grad_buf(pb).data(), N, K).noalias() += dy.transpose() * CMapM(g.value(pa).data(), M, K);
        }
    });
}

// ----------------------------------------------------------------------- conv

static void im2col(const Tensor& x, int kh, int kw, int stride, int pad, int Ho, int Wo, float* cols) {
    int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
    int64_t N = static_cast<int64_t>(Ho) * Wo;
    for (int c = 0; c < Cin; ++c) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                float* row = cols + ((static_cast<int64_t>(c) * kh + ky) * kw + kx) * N;
                for (int oy = 0; oy < Ho; ++oy) {
                    int iy = oy * stride + ky - pad;
                    float* dst = row + static_cast<int64_t>(oy) * Wo;
                    if (iy < 0 || iy >= H) {
                        for (int ox = 0; ox < Wo; ++ox) dst[ox] = 0.0f;
                        continue;
                    }
                    const float* src = x.data() + (static_cast<int64_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < Wo; ++ox) {
                        int ix = ox * stride + kx - pad;
                        dst[ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

static void col2im_add(const float* cols, int Cin, int H, int W, int kh, int kw, int stride, int pad, int Ho,
                       int Wo, Tensor& dx) {
    int64_t N = static_cast<int64_t>(Ho) * Wo;
    for (int c = 0; c < Cin; ++c) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                const float* row = cols + ((static_cast<int64_t>(c) * kh + ky) * kw + kx) * N;
                for (int oy = 0; oy < Ho; ++oy) {
                    int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= H) continue;
                    float* dst = dx.data() + (static_cast<int64_t>(c) * H + iy) * W;
                    const float* src = row + static_cast<int64_t>(oy) * Wo;
                    for (int ox = 0; ox < Wo; ++ox) {
                        int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < W) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

Var conv2d(Var x, Var w, Var b, int stride, int pad) {
    const Tensor& tx = x.val();
    const Tensor& tw = w.val();
    check3d(tx, "conv2d");
    if (tw.ndim() != 4) throw ShapeError("conv2d: weight must be {Cout,Cin,kh,kw}");
    int Cin = tx.dim(0), H = tx.dim(1), W = tx.dim(2);
    int Cout = tw.dim(0), kh = tw.dim(2), kw = tw.dim(3);
    if (tw.dim(1) != Cin) throw ShapeError("conv2d: Cin mismatch");
    int Ho = (H + 2 * pad - kh) / stride + 1;
    int Wo = (W + 2 * pad - kw) / stride + 1;
    if (Ho <= 0 || Wo <= 0) throw ShapeError("conv2d: empty output");
    int K = Cin * kh * kw;
    int64_t N = static_cast<int64_t>(Ho) * Wo;

    std::vector<float> cols(static_cast<size_t>(K) * N);
    im2col(tx, kh, kw, stride, pad, Ho, Wo, cols.data());
    Tensor out({Cout, Ho, Wo});
    MapM(out.data(), Cout, static_cast<int>(N)).noalias() =
        CMapM(tw.data(), Cout, K) * CMapM(cols.data(), K, static_cast<int>(N));
    const Tensor& tb = b.val();
    if (tb.ndim() != 1 || tb.dim(0) != Cout) throw ShapeError("conv2d: bias shape");
    for (int c = 0; c < Cout; ++c) {
        float bv = tb[c];
        float* p = out.data() + c * N;
        for (int64_t i = 0; i < N; ++i) p[i] += bv;
    }

    int px = x.id, pw = w.id, pb = b.id;
    return x.g->make_node(
        std::move(out), {px, pw, pb},
        [px, pw, pb, Cin, H, W, Cout, kh, kw, stride, pad, Ho, Wo, K, N](Graph& g, int n) {
            const Tensor& go = g.grad(n);
            CMapM dy(go.data(), Cout, static_cast<int>(N));
            if (g.needs(pb)) {
                Tensor& gb = g.grad_buf(pb);
                for (int c = 0; c < Cout; ++c) {
                    double s = 0;
                    const float* p = go.data() + c * N;
                    for (int64_t i = 0; i < N; ++i) s += p[i];
                    gb[c] += static_cast<float>(s);
                }
            }
            bool nx = g.needs(px), nw = g.needs(pw);
            if (!nx && !nw) return;
            // recompute cols rather than keep them alive in the tape
            std::vector<float> cols(static_cast<size_t>(K) * N);
            im2col(g.value(px), kh, kw, stride, pad, Ho, Wo, cols.data());
            if (nw) {
                MapM(g.grad_buf(pw).data(), Cout, K).noalias() +=
                    dy * CMapM(cols.data(), K, static_cast<int>(N)).transpose();
            }
            if (nx) {
                std::vector<float> dcols(static_cast<size_t>(K) * N);
                MapM(dcols.data(), K, static_cast<int>(N)).noalias() =
                    CMapM(g.value(pw).data(), Cout, K).transpose() * dy;
                col2im_add(dcols.data(), Cin, H, W, kh, kw, stride, pad, Ho, Wo, g.grad_buf(px));
            }
        });
}

// ----------------------------------------------------------------- resampling

Var upsample_nearest2(Var x) {
    const Tensor& tx = x.val();
    check3d(tx, "upsample_nearest2");
    int C = tx.dim(0), H = tx.dim(1), W = tx.dim(2);
    Tensor out({C, 2 * H, 2 * W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < 2 * H; ++y)
            for (int xo = 0; xo < 2 * W; ++xo) out.at(c, y, xo) = tx.at(c, y / 2, xo / 2);
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px, C, H, W](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        Tensor& gx = g.grad_buf(px);
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < 2 * H; ++y)
                for (int xo = 0; xo < 2 * W; ++xo) gx.at(c, y / 2, xo / 2) += go.at(c, y, xo);
    });
}

// shared bilinear-x2 kernel: align_corners=false, edge clamp
struct Bi2Tap {
    int i0, i1;
    float w0, w1;
};
static inline Bi2Tap bi2_tap(int o, int n_in) {
    float s = (o + 0.5f) / 2.0f - 0.5f;
    int i0 = static_cast<int>(std::floor(s));
    float w1 = s - i0;
    Bi2Tap t;
    t.i0 = std::min(std::max(i0, 0), n_in - 1);
    t.i1 = std::min(std::max(i0 + 1, 0), n_in - 1);
    t.w0 = 1.0f - w1;
    t.w1 = w1;
    return t;
}

Tensor upsample_bilinear2_plain(const Tensor& x, bool scale_values) {
    int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    float mul = scale_values ? 2.0f : 1.0f;
    Tensor out({C, 2 * H, 2 * W});
    for (int y = 0; y < 2 * H; ++y) {
        Bi2Tap ty = bi2_tap(y, H);
        for (int xo = 0; xo < 2 * W; ++xo) {
            Bi2Tap tx2 = bi2_tap(xo, W);
            for (int c = 0; c < C; ++c) {
                float v = ty.w0 * (tx2.w0 * x.at(c, ty.i0, tx2.i0) + tx2.w1 * x.at(c, ty.i0, tx2.i1)) +
                          ty.w1 * (tx2.w0 * x.at(c, ty.i1, tx2.i0) + tx2.w1 * x.at(c, ty.i1, tx2.i1));
                out.at(c, y, xo) = mul * v;
            }
        }
    }
    return out;
}

Var upsample_bilinear2(Var x, bool scale_values) {
    const Tensor& tx = x.val();
    check3d(tx, "upsample_bilinear2");
    int C = tx.dim(0), H = tx.dim(1), W = tx.dim(2);
    Tensor out = upsample_bilinear2_plain(tx, scale_values);
    int px = x.id;
    float mul = scale_values ? 2.0f : 1.0f;
    return x.g->make_node(std::move(out), {px}, [px, C, H, W, mul](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        Tensor& gx = g.grad_buf(px);
        for (int y = 0; y < 2 * H; ++y) {
            Bi2Tap ty = bi2_tap(y, H);
            for (int xo = 0; xo < 2 * W; ++xo) {
                Bi2Tap tx2 = bi2_tap(xo, W);
                for (int c = 0; c < C; ++c) {
                    float d = mul * go.at(c, y, xo);
                    gx.at(c, ty.i0, tx2.i0) += ty.w0 * tx2.w0 * d;
                    gx.at(c, ty.i0, tx2.i1) += ty.w0 * tx2.w1 * d;
                    gx.at(c, ty.i1, tx2.i0) += ty.w1 * tx2.w0 * d;
                    gx.at(c, ty.i1, tx2.i1) += ty.w1 * tx2.w1 * d;
                }
            }
        }
    });
}

Tensor avgpool2_plain(const Tensor& x) {
    int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (H % 2 || W % 2) throw ShapeError("avgpool2: odd dims");
    Tensor out({C, H / 2, W / 2});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H / 2; ++y)
            for (int xo = 0; xo < W / 2; ++xo)
                out.at(c, y, xo) = 0.25f * (x.at(c, 2 * y, 2 * xo) + x.at(c, 2 * y, 2 * xo + 1) +
                                            x.at(c, 2 * y + 1, 2 * xo) + x.at(c, 2 * y + 1, 2 * xo + 1));
    return out;
}

Var avgpool2(Var x) {
    const Tensor& tx = x.val();
    check3d(tx, "avgpool2");
    Tensor out = avgpool2_plain(tx);
    int C = tx.dim(0), H = tx.dim(1), W = tx.dim(2);
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px, C, H, W](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        Tensor& gx = g.grad_buf(px);
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H / 2; ++y)
                for (int xo = 0; xo < W / 2; ++xo) {
                    float d = 0.25f * go.at(c, y, xo);
                    gx.at(c, 2 * y, 2 * xo) += d;
                    gx.at(c, 2 * y, 2 * xo + 1) += d;
                    gx.at(c, 2 * y + 1, 2 * xo) += d;
                    gx.at(c, 2 * y + 1, 2 * xo + 1) += d;
                }
    });
}

// ---------------------------------------------------------------- grid sample

Tensor grid_sample_plain(const Tensor& img, const Tensor& flow) {
    if (img.ndim() != 3 || flow.ndim() != 3 || flow.dim(0) != 2) throw ShapeError("grid_sample: shapes");
    if (img.dim(1) != flow.dim(1) || img.dim(2) != flow.dim(2))
        throw ShapeError("grid_sample: image/flow resolution mismatch");
    int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    Tensor out({C, H, W});
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            float sx = x + flow.at(0, y, x);
            float sy = y + flow.at(1, y, x);
            int x0 = static_cast<int>(std::floor(sx));
            int y0 = static_cast<int>(std::floor(sy));
            float wx1 = sx - x0, wx0 = 1.0f - wx1;
            float wy1 = sy - y0, wy0 = 1.0f - wy1;
            for (int c = 0; c < C; ++c) {
                auto rd = [&](int yy, int xx) -> float {
                    return (yy >= 0 && yy < H && xx >= 0 && xx < W) ? img.at(c, yy, xx) : 0.0f;
                };
                out.at(c, y, x) = wy0 * (wx0 * rd(y0, x0) + wx1 * rd(y0, x0 + 1)) +
                                  wy1 * (wx0 * rd(y0 + 1, x0) + wx1 * rd(y0 + 1, x0 + 1));
            }
        }
    }
    return out;
}

Var grid_sample(Var img, Var flow) {
    Tensor out = grid_sample_plain(img.val(), flow.val());
    int pi = img.id, pf = flow.id;
    int C = img.val().dim(0), H = img.val().dim(1), W = img.val().dim(2);
    return img.g->make_node(std::move(out), {pi, pf}, [pi, pf, C, H, W](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        const Tensor& vi = g.value(pi);
        const Tensor& vf = g.value(pf);
        bool ni = g.needs(pi), nf = g.needs(pf);
        Tensor* gi = ni ? &g.grad_buf(pi) : nullptr;
        Tensor* gf = nf ? &g.grad_buf(pf) : nullptr;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                float sx = x + vf.at(0, y, x);
                float sy = y + vf.at(1, y, x);
                int x0 = static_cast<int>(std::floor(sx));
                int y0 = static_cast<int>(std::floor(sy));
                float wx1 = sx - x0, wx0 = 1.0f - wx1;
                float wy1 = sy - y0, wy0 = 1.0f - wy1;
                float dsx = 0.0f, dsy = 0.0f;
                for (int c = 0; c < C; ++c) {
                    float d = go.at(c, y, x);
                    if (d == 0.0f) continue;
                    auto rd = [&](int yy, int xx) -> float {
                        return (yy >= 0 && yy < H && xx >= 0 && xx < W) ? vi.at(c, yy, xx) : 0.0f;
                    };
                    auto wr = [&](int yy, int xx, float wv) {
                        if (gi && yy >= 0 && yy < H && xx >= 0 && xx < W) gi->at(c, yy, xx) += wv * d;
                    };
                    wr(y0, x0, wy0 * wx0);
                    wr(y0, x0 + 1, wy0 * wx1);
                    wr(y0 + 1, x0, wy1 * wx0);
                    wr(y0 + 1, x0 + 1, wy1 * wx1);
                    if (nf) {
                        float v00 = rd(y0, x0), v01 = rd(y0, x0 + 1);
                        float v10 = rd(y0 + 1, x0), v11 = rd(y0 + 1, x0 + 1);
                        dsx += d * (wy0 * (v01 - v00) + wy1 * (v11 - v10));
                        dsy += d * (wx0 * (v10 - v00) + wx1 * (v11 - v01));
                    }
                }
                if (nf) {
                    gf->at(0, y, x) += dsx;
                    gf->at(1, y, x) += dsy;
                }
            }
        }
    });
}

// ---------------------------------------------------------------- activations

template <typename F, typename DF>
static Var unary(Var x, F f, DF df) {
    Tensor out = x.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = f(out[i]);
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px, df](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        const Tensor& vx = g.value(px);
        const Tensor& vy = g.value(n);
        Tensor& gx = g.grad_buf(px);
        for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i] * df(vx[i], vy[i]);
    });
}

Var relu(Var x) {
    return unary(
        x, [](float v) { return v > 0 ? v : 0.0f; }, [](float v, float) { return v > 0 ? 1.0f : 0.0f; });
}

Var leaky_relu(Var x, float alpha) {
    return unary(
        x, [alpha](float v) { return v > 0 ? v : alpha * v; },
        [alpha](float v, float) { return v > 0 ? 1.0f : alpha; });
}

Var silu(Var x) {
    return unary(
        x,
        [](float v) {
            float s = 1.0f / (1.0f + std::exp(-v));
            return v * s;
        },
        [](float v, float) {
            float s = 1.0f / (1.0f + std::exp(-v));
            return s * (1.0f + v * (1.0f - s));
        });
}

Var sigmoid(Var x) {
    return unary(
        x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
        [](float, float y) { return y * (1.0f - y); });
}

Var tanh_(Var x) {
    return unary(
        x, [](float v) { return std::tanh(v); }, [](float, float y) { return 1.0f - y * y; });
}

Var exp_(Var x) {
    return unary(
        x, [](float v) { return std::exp(v); }, [](float, float y) { return y; });
}

Var square(Var x) {
    return unary(
        x, [](float v) { return v * v; }, [](float v, float) { return 2.0f * v; });
}

// -------------------------------------------------------------- normalization

Var group_norm(Var x, Var gamma, Var beta, int groups, float eps) {
    const Tensor& tx = x.val();
    check3d(tx, "group_norm");
    int C = tx.dim(0), H = tx.dim(1), W = tx.dim(2);
    if (C % groups) throw ShapeError("group_norm: C % groups != 0");
    int Cg = C / groups;
    int64_t m = static_cast<int64_t>(Cg) * H * W;
    std::vector<float> mu(static_cast<size_t>(groups)), rstd(static_cast<size_t>(groups));
    Tensor out({C, H, W});
    const Tensor& tg = gamma.val();
    const Tensor& tb = beta.val();
    for (int gi = 0; gi < groups; ++gi) {
        const float* p = tx.data() + static_cast<int64_t>(gi) * m;
        double s = 0, s2 = 0;
        for (int64_t i = 0; i < m; ++i) {
            s += p[i];
            s2 += static_cast<double>(p[i]) * p[i];
        }
        double mean = s / m;
        double var = s2 / m - mean * mean;
        mu[gi] = static_cast<float>(mean);
        rstd[gi] = static_cast<float>(1.0 / std::sqrt(var + eps));
    }
    int64_t hw = static_cast<int64_t>(H) * W;
    for (int c = 0; c < C; ++c) {
        int gi = c / Cg;
        float gm = tg[c], bt = tb[c], mm = mu[gi], rs = rstd[gi];
        const float* p = tx.data() + c * hw;
        float* q = out.data() + c * hw;
        for (int64_t i = 0; i < hw; ++i) q[i] = gm * (p[i] - mm) * rs + bt;
    }
    int px = x.id, pg = gamma.id, pb = beta.id;
    return x.g->make_node(
        std::move(out), {px, pg, pb}, [px, pg, pb, C, Cg, hw, m, mu, rstd, groups](Graph& g, int n) {
            const Tensor& go = g.grad(n);
            const Tensor& vx = g.value(px);
            const Tensor& vg = g.value(pg);
            if (g.needs(pg) || g.needs(pb)) {
                Tensor& gg = g.grad_buf(pg);
                Tensor& gb = g.grad_buf(pb);
                for (int c = 0; c < C; ++c) {
                    int gi = c / Cg;
                    const float* p = vx.data() + c * hw;
                    const float* d = go.data() + c * hw;
                    double sg = 0, sb = 0;
                    for (int64_t i = 0; i < hw; ++i) {
                        sg += static_cast<double>(d[i]) * (p[i] - mu[gi]) * rstd[gi];
                        sb += d[i];
                    }
                    gg[c] += static_cast<float>(sg);
                    gb[c] += static_cast<float>(sb);
                }
            }
            if (!g.needs(px)) return;
            Tensor& gx = g.grad_buf(px);
            for (int gi = 0; gi < groups; ++gi) {
                // dxhat = dy * gamma; dx = rstd*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
                double s1 = 0, s2 = 0;
                for (int cc = 0; cc < Cg; ++cc) {
                    int c = gi * Cg + cc;
                    const float* p = vx.data() + c * hw;
                    const float* d = go.data() + c * hw;
                    for (int64_t i = 0; i < hw; ++i) {
                        float xh = (p[i] - mu[gi]) * rstd[gi];
                        float dxh = d[i] * vg[c];
                        s1 += dxh;
                        s2 += static_cast<double>(dxh) * xh;
                    }
                }
                float m1 = static_cast<float>(s1 / m), m2 = static_cast<float>(s2 / m);
                for (int cc = 0; cc < Cg; ++cc) {
                    int c = gi * Cg + cc;
                    const float* p = vx.data() + c * hw;
                    const float* d = go.data() + c * hw;
                    float* q = gx.data() + c * hw;
                    for (int64_t i = 0; i < hw; ++i) {
                        float xh = (p[i] - mu[gi]) * rstd[gi];
                        float dxh = d[i] * vg[c];
                        q[i] += rstd[gi] * (dxh - m1 - xh * m2);
                    }
                }
            }
        });
}

Var softmax_rows(Var x) {
    const Tensor& tx = x.val();
    if (tx.ndim() != 2) throw ShapeError("softmax_rows: 2-d expected");
    int M = tx.dim(0), N = tx.dim(1);
    Tensor out({M, N});
    for (int r = 0; r < M; ++r) {
        float mx = tx.at(r, 0);
        for (int c = 1; c < N; ++c) mx = std::max(mx, tx.at(r, c));
        double s = 0;
        for (int c = 0; c < N; ++c) {
            float e = std::exp(tx.at(r, c) - mx);
            out.at(r, c) = e;
            s += e;
        }
        float inv = static_cast<float>(1.0 / s);
        for (int c = 0; c < N; ++c) out.at(r, c) *= inv;
    }
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px, M, N](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        const Tensor& y = g.value(n);
        Tensor& gx = g.grad_buf(px);
        for (int r = 0; r < M; ++r) {
            double dot = 0;
            for (int c = 0; c < N; ++c) dot += static_cast<double>(go.at(r, c)) * y.at(r, c);
            for (int c = 0; c < N; ++c)
                gx.at(r, c) += y.at(r, c) * (go.at(r, c) - static_cast<float>(dot));
        }
    });
}

// ------------------------------------------------------------------ reshaping

Var concat_ch(const std::vector<Var>& xs) {
    if (xs.empty()) throw ArgError("concat_ch: empty");
    int H = xs[0].val().dim(1), W = xs[0].val().dim(2);
    int C = 0;
    for (const Var& v : xs) {
        check3d(v.val(), "concat_ch");
        if (v.val().dim(1) != H || v.val().dim(2) != W) throw ShapeError("concat_ch: spatial mismatch");
        C += v.val().dim(0);
    }
    Tensor out({C, H, W});
    int64_t hw = static_cast<int64_t>(H) * W;
    int64_t off = 0;
    std::vector<int> parents;
    std::vector<int> chans;
    for (const Var& v : xs) {
        const Tensor& t = v.val();
        std::copy(t.data(), t.data() + t.numel(), out.data() + off);
        off += t.numel();
        parents.push_back(v.id);
        chans.push_back(t.dim(0));
    }
    return xs[0].g->make_node(std::move(out), parents, [parents, chans, hw](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        int64_t off2 = 0;
        for (size_t k = 0; k < parents.size(); ++k) {
            int64_t sz = static_cast<int64_t>(chans[k]) * hw;
            if (g.needs(parents[k])) {
                Tensor& gx = g.grad_buf(parents[k]);
                const float* src = go.data() + off2;
                for (int64_t i = 0; i < sz; ++i) gx[i] += src[i];
            }
            off2 += sz;
        }
    });
}

Var slice_ch(Var x, int c0, int c1) {
    const Tensor& tx = x.val();
    check3d(tx, "slice_ch");
    if (c0 < 0 || c1 > tx.dim(0) || c0 >= c1) throw ArgError("slice_ch: bad range");
    int H = tx.dim(1), W = tx.dim(2);
    int64_t hw = static_cast<int64_t>(H) * W;
    Tensor out({c1 - c0, H, W});
    std::copy(tx.data() + c0 * hw, tx.data() + c1 * hw, out.data());
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px, c0, hw](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        Tensor& gx = g.grad_buf(px);
        float* dst = gx.data() + c0 * hw;
        for (int64_t i = 0; i < go.numel(); ++i) dst[i] += go[i];
    });
}

Var chw_to_tokens(Var x) {
    const Tensor& tx = x.val();
    check3d(tx, "chw_to_tokens");
    int C = tx.dim(0), H = tx.dim(1), W = tx.dim(2);
    int L = H * W;
    Tensor out({L, C});
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < L; ++t) out.at(t, c) = tx[static_cast<int64_t>(c) * L + t];
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px, C, L](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        Tensor& gx = g.grad_buf(px);
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < L; ++t) gx[static_cast<int64_t>(c) * L + t] += go.at(t, c);
    });
}

Var tokens_to_chw(Var x, int C, int H, int W) {
    const Tensor& tx = x.val();
    if (tx.ndim() != 2 || tx.dim(0) != H * W || tx.dim(1) != C) throw ShapeError("tokens_to_chw: shape");
    int L = H * W;
    Tensor out({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < L; ++t) out[static_cast<int64_t>(c) * L + t] = tx.at(t, c);
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px, C, L](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        Tensor& gx = g.grad_buf(px);
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < L; ++t) gx.at(t, c) += go[static_cast<int64_t>(c) * L + t];
    });
}

Var reshape(Var x, std::vector<int> shape) {
    Tensor out(shape);
    const Tensor& tx = x.val();
    if (out.numel() != tx.numel()) throw ShapeError("reshape: numel mismatch");
    std::copy(tx.data(), tx.data() + tx.numel(), out.data());
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px](Graph& g, int n) {
        const Tensor& go = g.grad(n);
        Tensor& gx = g.grad_buf(px);
        for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i];
    });
}

// ----------------------------------------------------------------- reductions

Var mean_all(Var x) {
    const Tensor& tx = x.val();
    double s = 0;
    for (int64_t i = 0; i < tx.numel(); ++i) s += tx[i];
    Tensor out({1});
    out[0] = static_cast<float>(s / tx.numel());
    int px = x.id;
    int64_t n_el = tx.numel();
    return x.g->make_node(std::move(out), {px}, [px, n_el](Graph& g, int n) {
        float d = g.grad(n)[0] / n_el;
        Tensor& gx = g.grad_buf(px);
        for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += d;
    });
}

Var sum_all(Var x) {
    const Tensor& tx = x.val();
    double s = 0;
    for (int64_t i = 0; i < tx.numel(); ++i) s += tx[i];
    Tensor out({1});
    out[0] = static_cast<float>(s);
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px](Graph& g, int n) {
        float d = g.grad(n)[0];
        Tensor& gx = g.grad_buf(px);
        for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += d;
    });
}

Var l1(Var a, Var b) {
    check_same_shape(a.val(), b.val(), "l1");
    const Tensor& ta = a.val();
    const Tensor& tb = b.val();
    double s = 0;
    for (int64_t i = 0; i < ta.numel(); ++i) s += std::abs(static_cast<double>(ta[i]) - tb[i]);
    Tensor out({1});
    out[0] = static_cast<float>(s / ta.numel());
    int pa = a.id, pb = b.id;
    int64_t n_el = ta.numel();
    return a.g->make_node(std::move(out), {pa, pb}, [pa, pb, n_el](Graph& g, int n) {
        float d = g.grad(n)[0] / n_el;
        const Tensor& va = g.value(pa);
        const Tensor& vb = g.value(pb);
        bool na = g.needs(pa), nb = g.needs(pb);
        Tensor* ga = na ? &g.grad_buf(pa) : nullptr;
        Tensor* gb = nb ? &g.grad_buf(pb) : nullptr;
        for (int64_t i = 0; i < n_el; ++i) {
            float diff = va[i] - vb[i];
            float sg = (diff > 0) - (diff < 0);
            if (ga) (*ga)[i] += d * sg;
            if (gb) (*gb)[i] -= d * sg;
        }
    });
}

Var mse(Var a, Var b) {
    check_same_shape(a.val(), b.val(), "mse");
    const Tensor& ta = a.val();
    const Tensor& tb = b.val();
    double s = 0;
    for (int64_t i = 0; i < ta.numel(); ++i) {
        double d = static_cast<double>(ta[i]) - tb[i];
        s += d * d;
    }
    Tensor out({1});
    out[0] = static_cast<float>(s / ta.numel());
    int pa = a.id, pb = b.id;
    int64_t n_el = ta.numel();
    return a.g->make_node(std::move(out), {pa, pb}, [pa, pb, n_el](Graph& g, int n) {
        float d = g.grad(n)[0] * 2.0f / n_el;
        const Tensor& va = g.value(pa);
        const Tensor& vb = g.value(pb);
        bool na = g.needs(pa), nb = g.needs(pb);
        Tensor* ga = na ? &g.grad_buf(pa) : nullptr;
        Tensor* gb = nb ? &g.grad_buf(pb) : nullptr;
        for (int64_t i = 0; i < n_el; ++i) {
            float diff = va[i] - vb[i];
            if (ga) (*ga)[i] += d * diff;
            if (gb) (*gb)[i] -= d * diff;
        }
    });
}

Var l1_masked(Var a, Var b, const Tensor& mask) {
    check_same_shape(a.val(), b.val(), "l1_masked");
    const Tensor& ta = a.val();
    if (mask.ndim() != 3 || mask.dim(0) != 1 || mask.dim(1) != ta.dim(1) || mask.dim(2) != ta.dim(2))
        throw ShapeError("l1_masked: mask shape");
    int C = ta.dim(0), H = ta.dim(1), W = ta.dim(2);
    int64_t hw = static_cast<int64_t>(H) * W;
    int64_t area = 0;
    for (int64_t i = 0; i < hw; ++i) area += mask[i] > 0.5f;
    if (area == 0) throw ArgError("l1_masked: empty mask");
    const Tensor& tb = b.val();
    double s = 0;
    for (int c = 0; c < C; ++c)
        for (int64_t i = 0; i < hw; ++i)
            if (mask[i] > 0.5f) s += std::abs(static_cast<double>(ta[c * hw + i]) - tb[c * hw + i]);
    Tensor out({1});
    double denom = static_cast<double>(area) * C;
    out[0] = static_cast<float>(s / denom);
    int pa = a.id, pb = b.id;
    Tensor msk = mask;
    return a.g->make_node(std::move(out), {pa, pb}, [pa, pb, msk, C, hw, denom](Graph& g, int n) {
        float d = static_cast<float>(g.grad(n)[0] / denom);
        const Tensor& va = g.value(pa);
        const Tensor& vb = g.value(pb);
        bool na = g.needs(pa), nb = g.needs(pb);
        Tensor* ga = na ? &g.grad_buf(pa) : nullptr;
        Tensor* gb = nb ? &g.grad_buf(pb) : nullptr;
        for (int c = 0; c < C; ++c)
            for (int64_t i = 0; i < hw; ++i) {
                if (msk[i] <= 0.5f) continue;
                float diff = va[c * hw + i] - vb[c * hw + i];
                float sg = (diff > 0) - (diff < 0);
                if (ga) (*ga)[c * hw + i] += d * sg;
                if (gb) (*gb)[c * hw + i] -= d * sg;
            }
    });
}

// ------------------------------------------------------------ spectral (FreeU)

// naive DFT over contiguous blocks of length n; grids are tiny at UNet stages
static void dft_blocks(std::vector<std::complex<double>>& data, int n, int count, bool inverse) {
    std::vector<std::complex<double>> tmp(static_cast<size_t>(n));
    double sign = inverse ? 1.0 : -1.0;
    for (int blk = 0; blk < count; ++blk) {
        std::complex<double>* p = data.data() + static_cast<int64_t>(blk) * n;
        for (int k = 0; k < n; ++k) {
            std::complex<double> acc(0, 0);
            for (int j = 0; j < n; ++j) {
                double ang = sign * 2.0 * M_PI * k * j / n;
                acc += p[j] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            tmp[static_cast<size_t>(k)] = inverse ? acc / static_cast<double>(n) : acc;
        }
        for (int k = 0; k < n; ++k) p[k] = tmp[static_cast<size_t>(k)];
    }
}

Tensor lowfreq_band_plain(const Tensor& x, float radius_frac) {
    check3d(x, "lowfreq_band");
    int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    Tensor out({C, H, W});
    double ry = radius_frac * (H / 2.0);
    double rx = radius_frac * (W / 2.0);
    std::vector<std::complex<double>> buf(static_cast<size_t>(H) * W);
    std::vector<std::complex<double>> colv(static_cast<size_t>(H));
    auto cols_pass = [&](bool inverse) {
        for (int col = 0; col < W; ++col) {
            for (int r = 0; r < H; ++r) colv[static_cast<size_t>(r)] = buf[static_cast<size_t>(r) * W + col];
            dft_blocks(colv, H, 1, inverse);
            for (int r = 0; r < H; ++r) buf[static_cast<size_t>(r) * W + col] = colv[static_cast<size_t>(r)];
        }
    };
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < H * W; ++i) buf[static_cast<size_t>(i)] = x[static_cast<int64_t>(c) * H * W + i];
        dft_blocks(buf, W, H, false);
        cols_pass(false);
        for (int ky = 0; ky < H; ++ky) {
            int fy = std::min(ky, H - ky);
            for (int kx = 0; kx < W; ++kx) {
                int fx = std::min(kx, W - kx);
                if (fy > ry || fx > rx) buf[static_cast<size_t>(ky) * W + kx] = 0.0;
            }
        }
        cols_pass(true);
        dft_blocks(buf, W, H, true);
        for (int i = 0; i < H * W; ++i)
            out[static_cast<int64_t>(c) * H * W + i] = static_cast<float>(buf[static_cast<size_t>(i)].real());
    }
    return out;
}

Var lowfreq_mix(Var x, float s, float radius_frac) {
    const Tensor& tx = x.val();
    Tensor out = tx;
    if (s != 1.0f) {
        Tensor low = lowfreq_band_plain(tx, radius_frac);
        for (int64_t i = 0; i < out.numel(); ++i) out[i] += (s - 1.0f) * low[i];
    }
    int px = x.id;
    return x.g->make_node(std::move(out), {px}, [px, s, radius_frac](Graph& g, int n) {
        // projection is linear and symmetric: same transform on the gradient
        const Tensor& go = g.grad(n);
        Tensor& gx = g.grad_buf(px);
        if (s != 1.0f) {
            Tensor low = lowfreq_band_plain(go, radius_frac);
            for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i] + (s - 1.0f) * low[i];
        } else {
            for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i];
        }
    });
}

}  // namespace vton::ops
