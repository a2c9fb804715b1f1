#pragma once

#include <array>

#include "vton/core/rng.hpp"
#include "vton/core/tensor.hpp"

namespace vton::synth {

struct PersonSpec {
    double shoulder_frac = 0.55;  // shoulder width / canvas width
    double torso_frac = 0.50;     // torso height / canvas height
    double lean_deg = 0.0;        // in [-15, 15]
    std::array<float, 3> skin_tone = {0.85f, 0.68f, 0.55f};
    uint64_t seed = 0;
    int canvas_h = 64;
    int canvas_w = 48;

    void validate() const;
};

// Rotation frame of the leaned body: canvas <-> body coordinates around the
// torso pivot. Body coordinates are upright.
struct BodyFrame {
    double cx, cy;  // pivot (canvas)
    double cos_t, sin_t;

    // canvas -> body
    std::array<double, 2> to_body(double x, double y) const;
    // body -> canvas
    std::array<double, 2> to_canvas(double bx, double by) const;
};

BodyFrame body_frame(const PersonSpec& spec);

// torso box in body coordinates (used for warp control lattices)
struct TorsoBox {
    double x0, x1, y0, y1;
};
TorsoBox torso_box(const PersonSpec& spec);

inline constexpr int kPoseChannels = 6;  // neck, L/R shoulder, chest, L/R hip

// person image (bare body on light background), body mask, pose heatmap
struct PersonRender {
    Tensor image;  // {3,H,W}
    Tensor body;   // {1,H,W}
    Tensor pose;   // {kPoseChannels,H,W}, per-pixel channel sum <= 1
};

PersonRender gen_person(const PersonSpec& spec);

PersonSpec random_person_spec(int canvas_h, int canvas_w, Rng& rng);

}  // namespace vton::synth
