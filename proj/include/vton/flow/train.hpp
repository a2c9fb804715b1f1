#pragma once

#include "vton/flow/losses.hpp"
#include "vton/flow/networks.hpp"
#include "vton/latent/autoencoder.hpp"
#include "vton/synth/sample.hpp"

namespace vton::flow {

struct FlowTrainConfig {
    int epochs = 100;
    int batch = 32;
    float lr = 5e-5f;
    double decay_start_frac = 0.3;  // linear decay to 0 afterwards
    uint64_t seed = 0;
    int threads = 2;
    // loss weights default per role when unset
    std::optional<FlowLossWeights> weights;
};

// Supervised stacks for one sample, precomputed once per run.
struct WarpItem {
    Tensor person_stack;  // {1+pose,H,W}: try-on region mask + pose heatmaps
    Tensor clothes;       // C
    Tensor clothes_mask;  // m_cp
    Tensor target;        // C_w_gt
};
WarpItem make_warp_item(const synth::SamplePair& s);

struct FlattenItem {
    Tensor clothes_parsed;             // T^C = T * m_C
    std::vector<Tensor> mask_levels;   // m_cp per pyramid level
    Tensor target;                     // C
    Tensor target_mask;                // m_cp (for masked eval)
};
FlattenItem make_flatten_item(const synth::SamplePair& s);

latent::TrainCurve train_flow_network(FlowNetwork& net, const std::vector<synth::SamplePair>& samples,
                                      const latent::Autoencoder& ae, const FlowTrainConfig& cfg);

}  // namespace vton::flow
