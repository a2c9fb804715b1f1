#include "vton/synth/person.hpp"

#include <cmath>

#include "vton/core/errors.hpp"

namespace vton::synth {

void PersonSpec::validate() const {
    if (lean_deg < -15.0 || lean_deg > 15.0) throw ArgError("PersonSpec: lean angle outside [-15,15]");
    if (shoulder_frac < 0.3 || shoulder_frac > 0.7) throw ArgError("PersonSpec: shoulder_frac out of range");
    if (torso_frac < 0.3 || torso_frac > 0.6) throw ArgError("PersonSpec: torso_frac out of range");
    for (float c : skin_tone)
        if (c < 0.0f || c > 1.0f) throw ArgError("PersonSpec: skin tone outside [0,1]");
}

std::array<double, 2> BodyFrame::to_body(double x, double y) const {
    double dx = x - cx, dy = y - cy;
    return {cos_t * dx + sin_t * dy, -sin_t * dx + cos_t * dy};
}

std::array<double, 2> BodyFrame::to_canvas(double bx, double by) const {
    return {cx + cos_t * bx - sin_t * by, cy + sin_t * bx + cos_t * by};
}

BodyFrame body_frame(const PersonSpec& spec) {
    double th = spec.lean_deg * M_PI / 180.0;
    return BodyFrame{spec.canvas_w / 2.0, 0.30 * spec.canvas_h, std::cos(th), std::sin(th)};
}

TorsoBox torso_box(const PersonSpec& spec) {
    double sw = spec.shoulder_frac * spec.canvas_w;
    double th = spec.torso_frac * spec.canvas_h;
    return TorsoBox{-0.45 * sw, 0.45 * sw, 0.05 * th, 0.95 * th};
}

namespace {

struct BodyGeom {
    double H, W, sw, th;

    double torso_half(double by) const {
        double f = by / th;
        return 0.5 * sw * (1.0 - 0.24 * std::min(std::max(f, 0.0), 1.0));
    }

    bool inside(double bx, double by) const {
        // head
        double hx = bx, hy = by + 0.13 * H;
        if (hx * hx + hy * hy <= (0.09 * H) * (0.09 * H)) return true;
        // neck
        if (std::abs(bx) <= 0.04 * W && by >= -0.06 * H && by < 0.0) return true;
        // torso
        if (by >= 0.0 && by <= th && std::abs(bx) <= torso_half(by)) return true;
        // arms
        if (by >= 0.0 && by <= 0.6 * th) {
            double h = torso_half(by);
            if (std::abs(bx) > h && std::abs(bx) <= h + 0.07 * W) return true;
        }
        // legs
        double leg_len = std::min(0.25 * H, 0.96 * H - (0.30 * H + th));
        if (by > th && by <= th + leg_len) {
            double hw = torso_half(th);
            if (std::abs(bx) >= 0.02 * W && std::abs(bx) <= 0.95 * hw) return true;
        }
        return false;
    }
};

}  // namespace

PersonRender gen_person(const PersonSpec& spec) {
    spec.validate();
    int H = spec.canvas_h, W = spec.canvas_w;
    BodyFrame frame = body_frame(spec);
    BodyGeom geom{static_cast<double>(H), static_cast<double>(W), spec.shoulder_frac * W,
                  spec.torso_frac * H};

    PersonRender out;
    out.image = Tensor({3, H, W}, 0.82f);
    out.body = Tensor({1, H, W});
    out.pose = Tensor({kPoseChannels, H, W});

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            auto b = frame.to_body(x + 0.5, y + 0.5);
            if (!geom.inside(b[0], b[1])) continue;
            out.body.at(0, y, x) = 1.0f;
            float shade = 0.9f + 0.1f * (1.0f - static_cast<float>(y) / H);
            for (int c = 0; c < 3; ++c) out.image.at(c, y, x) = spec.skin_tone[static_cast<size_t>(c)] * shade;
        }
    }
    for (int x = 0; x < W; ++x)
        if (out.body.at(0, 0, x) > 0.5f || out.body.at(0, H - 1, x) > 0.5f)
            throw GeometryError("gen_person: silhouette touches canvas border");
    for (int y = 0; y < H; ++y)
        if (out.body.at(0, y, 0) > 0.5f || out.body.at(0, y, W - 1) > 0.5f)
            throw GeometryError("gen_person: silhouette touches canvas border");

    // keypoints in body coordinates
    double sw = geom.sw, th = geom.th;
    std::array<std::array<double, 2>, kPoseChannels> kp = {{
        {0.0, -0.02 * H},          // neck
        {-0.45 * sw, 0.03 * H},    // shoulder L
        {0.45 * sw, 0.03 * H},     // shoulder R
        {0.0, 0.25 * th},          // chest
        {-0.30 * sw, 0.95 * th},   // hip L
        {0.30 * sw, 0.95 * th},    // hip R
    }};
    double sigma = 0.04 * W;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double total = 0;
            std::array<double, kPoseChannels> v{};
            for (int k = 0; k < kPoseChannels; ++k) {
                auto p = frame.to_canvas(kp[static_cast<size_t>(k)][0], kp[static_cast<size_t>(k)][1]);
                double dx = (x + 0.5) - p[0], dy = (y + 0.5) - p[1];
                v[static_cast<size_t>(k)] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                total += v[static_cast<size_t>(k)];
            }
            double norm = total > 1.0 ? 1.0 / total : 1.0;
            for (int k = 0; k < kPoseChannels; ++k)
                out.pose.at(k, y, x) = static_cast<float>(v[static_cast<size_t>(k)] * norm);
        }
    }
    return out;
}

PersonSpec random_person_spec(int canvas_h, int canvas_w, Rng& rng) {
    PersonSpec s;
    s.canvas_h = canvas_h;
    s.canvas_w = canvas_w;
    s.shoulder_frac = rng.uniform(0.46, 0.62);
    s.torso_frac = rng.uniform(0.42, 0.55);
    s.lean_deg = rng.uniform(-12.0, 12.0);
    float base = static_cast<float>(rng.uniform(0.35, 0.9));
    s.skin_tone = {base, base * static_cast<float>(rng.uniform(0.72, 0.85)),
                   base * static_cast<float>(rng.uniform(0.55, 0.72))};
    s.seed = rng.next_u64();
    return s;
}

}  // namespace vton::synth
