#include "vton/flow/field.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace vton::flow {

void check_flow(const Tensor& f, const char* where) {
    if (f.ndim() != 3 || f.dim(0) != 2) throw ShapeError(std::string(where) + ": flow must be {2,H,W}");
    if (!f.all_finite()) throw NumericalError(std::string(where) + ": non-finite flow");
    float bound = static_cast<float>(std::max(f.dim(1), f.dim(2)));
    if (f.abs_max() >= bound) throw NumericalError(std::string(where) + ": displacement exceeds canvas");
}

Tensor apply_flow(const Tensor& img, const Tensor& flowfield) {
    return ops::grid_sample_plain(img, flowfield);
}

Var apply_flow(Var img, Var flowfield) { return ops::grid_sample(img, flowfield); }

Tensor compose_flows(const Tensor& f, const Tensor& g) {
    check_same_shape(f, g, "compose_flows");
    Tensor looked = ops::grid_sample_plain(f, g);
    for (int64_t i = 0; i < looked.numel(); ++i) looked[i] += g[i];
    return looked;
}

Var compose_flows(Var f, Var g) { return ops::add(ops::grid_sample(f, g), g); }

Tensor zero_flow(int H, int W) { return Tensor({2, H, W}); }

Tensor constant_flow(int H, int W, float dx, float dy) {
    Tensor f({2, H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            f.at(0, y, x) = dx;
            f.at(1, y, x) = dy;
        }
    return f;
}

static double tps_kernel(double r2) {
    if (r2 <= 0.0) return 0.0;
    return 0.5 * r2 * std::log(r2);  // r^2 log r
}

TpsMap TpsMap::fit(const std::vector<std::array<double, 2>>& src,
                   const std::vector<std::array<double, 2>>& dst) {
    size_t K = src.size();
    if (K < 3) throw ArgError("tps_flow: need >= 3 control points");
    if (dst.size() != K) throw ArgError("tps_flow: src/dst length mismatch");
    int n = static_cast<int>(K) + 3;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
    for (size_t i = 0; i < K; ++i) {
        for (size_t j = 0; j < K; ++j) {
            double dx = src[i][0] - src[j][0];
            double dy = src[i][1] - src[j][1];
            A(static_cast<int>(i), static_cast<int>(j)) = tps_kernel(dx * dx + dy * dy);
        }
        A(static_cast<int>(i), static_cast<int>(K)) = 1.0;
        A(static_cast<int>(i), static_cast<int>(K) + 1) = src[i][0];
        A(static_cast<int>(i), static_cast<int>(K) + 2) = src[i][1];
        A(static_cast<int>(K), static_cast<int>(i)) = 1.0;
        A(static_cast<int>(K) + 1, static_cast<int>(i)) = src[i][0];
        A(static_cast<int>(K) + 2, static_cast<int>(i)) = src[i][1];
        rhs(static_cast<int>(i), 0) = dst[i][0] - src[i][0];
        rhs(static_cast<int>(i), 1) = dst[i][1] - src[i][1];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw NumericalError("tps_flow: singular system (collinear control points?)");
    Eigen::MatrixXd sol = lu.solve(rhs);

    TpsMap m;
    m.src_ = src;
    m.w_.resize(K);
    for (size_t i = 0; i < K; ++i)
        m.w_[i] = {sol(static_cast<int>(i), 0), sol(static_cast<int>(i), 1)};
    m.a0_ = {sol(static_cast<int>(K), 0), sol(static_cast<int>(K), 1)};
    m.ax_ = {sol(static_cast<int>(K) + 1, 0), sol(static_cast<int>(K) + 1, 1)};
    m.ay_ = {sol(static_cast<int>(K) + 2, 0), sol(static_cast<int>(K) + 2, 1)};
    return m;
}

std::array<double, 2> TpsMap::disp(double x, double y) const {
    std::array<double, 2> v = {a0_[0] + ax_[0] * x + ay_[0] * y, a0_[1] + ax_[1] * x + ay_[1] * y};
    for (size_t i = 0; i < src_.size(); ++i) {
        double dx = x - src_[i][0];
        double dy = y - src_[i][1];
        double u = tps_kernel(dx * dx + dy * dy);
        v[0] += w_[i][0] * u;
        v[1] += w_[i][1] * u;
    }
    return v;
}

Tensor TpsMap::render(int H, int W) const {
    Tensor f({2, H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            auto d = disp(x, y);
            f.at(0, y, x) = static_cast<float>(d[0]);
            f.at(1, y, x) = static_cast<float>(d[1]);
        }
    check_flow(f, "tps_flow");
    return f;
}

Tensor tps_flow(const std::vector<std::array<double, 2>>& src, const std::vector<std::array<double, 2>>& dst,
                int H, int W) {
    return TpsMap::fit(src, dst).render(H, W);
}

Tensor invert_map(const std::function<std::array<double, 2>(double, double)>& disp, int H, int W,
                  int iters) {
    Tensor g({2, H, W});
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            // solve z + disp(z) = (x,y); z_{k+1} = (x,y) - disp(z_k)
            double zx = x, zy = y;
            for (int k = 0; k < iters; ++k) {
                auto d = disp(zx, zy);
                zx = x - d[0];
                zy = y - d[1];
            }
            g.at(0, y, x) = static_cast<float>(zx - x);
            g.at(1, y, x) = static_cast<float>(zy - y);
        }
    }
    return g;
}

}  // namespace vton::flow
