#pragma once

#include <string>

#include "vton/synth/garment.hpp"
#include "vton/synth/person.hpp"

namespace vton::synth {

struct WarpGenConfig {
    int lattice = 3;               // K = lattice^2 control points on the torso
    double jitter_sigma_frac = 0.04;  // of canvas width
    double max_disp_frac = 0.15;      // of canvas width
    int max_retries = 10;
};

// Ground-truth warp pair. F_gt is the backward flow placing the flat garment
// on the leaned body; F_gt_inv numerically inverts the map x -> x + F_gt(x).
struct TruthWarp {
    Tensor F_gt;
    Tensor F_gt_inv;
};

TruthWarp gen_truth_warp(const PersonSpec& person, uint64_t seed, const WarpGenConfig& cfg = {});

struct SamplePair {
    std::string sample_id;
    Tensor C;        // {3,H,W} flat garment, black outside m_cp
    Tensor m_cp;     // {1,H,W}
    Tensor P;        // {3,H,W} bare person
    Tensor P_a;      // {3,H,W} clothes-agnostic person
    Tensor m;        // {1,H,W} try-on region
    Tensor m_C;      // {1,H,W} clothes region on T
    Tensor T;        // {3,H,W} ground-truth try-on
    Tensor C_w_gt;   // {3,H,W} warped garment
    Tensor F_gt;     // {2,H,W}
    Tensor F_gt_inv; // {2,H,W}
    Tensor pose_map; // {kPoseChannels,H,W}
};

struct ComposeConfig {
    float fill_value = 0.5f;  // agnostic-region fill
    int dilate_radius = 2;    // m = dilate(m_C) & body
};

SamplePair compose_sample(const Tensor& garment, const Tensor& m_cp, const PersonRender& person,
                          const TruthWarp& warp, const ComposeConfig& cfg = {});

// T_hat_w = C_w composited onto P_a over the warped-garment mask
Tensor prewarped_tryon(const Tensor& C_w, const Tensor& m_w, const Tensor& P_a);

// throws on any violated SamplePair invariant (tolerance 2/255 on pixel equality)
void validate_sample(const SamplePair& s, float fill_value = 0.5f);

}  // namespace vton::synth
