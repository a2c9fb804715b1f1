#pragma once

#include "vton/diffusion/losses.hpp"
#include "vton/diffusion/schedule.hpp"
#include "vton/synth/dataset.hpp"

namespace vton::diffusion {

struct DiffusionTrainConfig {
    int steps = 20000;
    int batch = 8;
    float lr = 2e-5f;
    float lr_init = 1e-6f;
    int warmup_steps = 3000;
    float lambda_cons = 0.15f;
    float cfg_dropout = 0.2f;
    // ablation flags
    bool prior_branch = true;
    bool cons_loss = true;
    bool global_cond = true;
    uint64_t seed = 0;
    int threads = 2;
};

// Everything frozen networks produce for one sample, precomputed once.
struct DiffusionItem {
    Tensor z0_m, z0_p, local_cond;  // latents divided by the autoencoder latent scale
    Tensor m_r;                     // down-sized try-on mask
    Tensor backbone_tokens;         // {L, token_feat}
    Tensor m_C, garment, m_cp;
    std::vector<Tensor> m_cp_levels;
};

DiffusionItem make_diffusion_item(const synth::SamplePair& s, const latent::Autoencoder& ae);

struct DiffusionTrainResult {
    std::vector<double> step, l_diff, l_cons, l_total;
    void save_csv(const std::filesystem::path& path) const;
};

DiffusionTrainResult train_diffusion(DiffusionModel& model, const std::vector<synth::SamplePair>& samples,
                                     const latent::Autoencoder& ae, const flow::FlowNetwork& flatten,
                                     const NoiseSchedule& sched, const DiffusionTrainConfig& cfg);

}  // namespace vton::diffusion
