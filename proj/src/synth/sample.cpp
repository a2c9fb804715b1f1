#include "vton/synth/sample.hpp"

#include <cmath>

#include "vton/core/image.hpp"
#include "vton/flow/field.hpp"

namespace vton::synth {

TruthWarp gen_truth_warp(const PersonSpec& person, uint64_t seed, const WarpGenConfig& cfg) {
    person.validate();
    int H = person.canvas_h, W = person.canvas_w;
    BodyFrame frame = body_frame(person);
    TorsoBox box = torso_box(person);
    double max_disp = cfg.max_disp_frac * W;

    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        Rng rng(derive_seed(seed, "truth-warp", static_cast<uint64_t>(attempt)));
        std::vector<std::array<double, 2>> src, dst;
        for (int iy = 0; iy < cfg.lattice; ++iy) {
            for (int ix = 0; ix < cfg.lattice; ++ix) {
                double bx = box.x0 + (box.x1 - box.x0) * ix / (cfg.lattice - 1);
                double by = box.y0 + (box.y1 - box.y0) * iy / (cfg.lattice - 1);
                auto p = frame.to_canvas(bx, by);  // lattice on the leaned torso
                // garment-space target: the unleaned position plus jitter
                double gx = frame.cx + bx + rng.normal() * cfg.jitter_sigma_frac * W;
                double gy = frame.cy + by + rng.normal() * cfg.jitter_sigma_frac * W;
                src.push_back({p[0], p[1]});
                dst.push_back({gx, gy});
            }
        }
        flow::TpsMap tps;
        try {
            tps = flow::TpsMap::fit(src, dst);
        } catch (const NumericalError&) {
            continue;
        }
        Tensor F_gt = tps.render(H, W);
        if (F_gt.abs_max() > max_disp) continue;

        // fold-over check: Jacobian of x + F(x) must stay positive
        bool folded = false;
        for (int y = 1; y < H - 1 && !folded; ++y)
            for (int x = 1; x < W - 1; ++x) {
                double fxx = 1.0 + (F_gt.at(0, y, x + 1) - F_gt.at(0, y, x - 1)) * 0.5;
                double fxy = (F_gt.at(0, y + 1, x) - F_gt.at(0, y - 1, x)) * 0.5;
                double fyx = (F_gt.at(1, y, x + 1) - F_gt.at(1, y, x - 1)) * 0.5;
                double fyy = 1.0 + (F_gt.at(1, y + 1, x) - F_gt.at(1, y - 1, x)) * 0.5;
                if (fxx * fyy - fxy * fyx < 0.05) {
                    folded = true;
                    break;
                }
            }
        if (folded) continue;

        TruthWarp out;
        out.F_gt = std::move(F_gt);
        out.F_gt_inv = flow::invert_map([&tps](double x, double y) { return tps.disp(x, y); }, H, W);
        return out;
    }
    throw NumericalError("gen_truth_warp: no invertible warp within retry cap");
}

SamplePair compose_sample(const Tensor& garment, const Tensor& m_cp, const PersonRender& person,
                          const TruthWarp& warp, const ComposeConfig& cfg) {
    if (garment.dim(1) != person.image.dim(1) || garment.dim(2) != person.image.dim(2))
        throw ShapeError("compose_sample: canvas mismatch");
    SamplePair s;
    s.C = garment;
    s.m_cp = m_cp;
    s.P = person.image;
    s.pose_map = person.pose;
    s.F_gt = warp.F_gt;
    s.F_gt_inv = warp.F_gt_inv;

    s.C_w_gt = flow::apply_flow(garment, warp.F_gt);
    Tensor m_w = threshold(flow::apply_flow(m_cp, warp.F_gt), 0.5f);
    s.m_C = mask_and(m_w, person.body);
    if (mask_area(s.m_C) == 0) throw GeometryError("compose_sample: warped garment misses the body");
    s.m = mask_and(dilate(s.m_C, cfg.dilate_radius), person.body);
    s.T = composite(person.image, s.C_w_gt, s.m_C);
    s.P_a = fill_region(person.image, s.m, cfg.fill_value);
    return s;
}

Tensor prewarped_tryon(const Tensor& C_w, const Tensor& m_w, const Tensor& P_a) {
    return composite(P_a, C_w, m_w);
}

void validate_sample(const SamplePair& s, float fill_value) {
    int64_t n = s.m.numel();
    for (int64_t i = 0; i < n; ++i) {
        if (s.m_C[i] > 0.5f && s.m[i] <= 0.5f) throw Error("validate_sample: m_C not inside m");
    }
    int H = s.T.dim(1), W = s.T.dim(2);
    const float tol = 2.0f / 255.0f;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (s.m_C.at(0, y, x) > 0.5f) {
                for (int c = 0; c < 3; ++c)
                    if (std::abs(s.T.at(c, y, x) - s.C_w_gt.at(c, y, x)) > tol)
                        throw Error("validate_sample: T != C_w_gt on m_C");
            }
            if (s.m.at(0, y, x) > 0.5f) {
                for (int c = 0; c < 3; ++c)
                    if (std::abs(s.P_a.at(c, y, x) - fill_value) > tol)
                        throw Error("validate_sample: P_a not filled on m");
            }
        }
    for (const Tensor* img : {&s.C, &s.P, &s.P_a, &s.T, &s.C_w_gt}) {
        for (int64_t i = 0; i < img->numel(); ++i)
            if ((*img)[i] < -1e-6f || (*img)[i] > 1.0f + 1e-6f)
                throw Error("validate_sample: image values outside [0,1]");
    }
    for (const Tensor* msk : {&s.m_cp, &s.m, &s.m_C}) {
        for (int64_t i = 0; i < msk->numel(); ++i)
            if ((*msk)[i] != 0.0f && (*msk)[i] != 1.0f) throw Error("validate_sample: non-binary mask");
    }
    flow::check_flow(s.F_gt, "validate_sample F_gt");
    flow::check_flow(s.F_gt_inv, "validate_sample F_gt_inv");
}

}  // namespace vton::synth
