#pragma once

#include <functional>
#include <optional>

#include "vton/diffusion/model.hpp"
#include "vton/diffusion/schedule.hpp"
#include "vton/flow/networks.hpp"
#include "vton/synth/sample.hpp"

namespace vton::sampler {

using diffusion::DiffusionModel;
using diffusion::FreeUFactors;
using diffusion::NoiseSchedule;

enum class InitMode { Gaussian, ClothesPosterior };
std::string init_mode_name(InitMode m);
InitMode init_mode_from_name(const std::string& s);

struct SamplerConfig {
    int steps = 50;
    InitMode init_mode = InitMode::ClothesPosterior;
    float guidance_scale = 1.0f;
    std::optional<FreeUFactors> freeu = FreeUFactors{};
    uint64_t seed = 0;
    std::optional<std::filesystem::path> trace_dir;  // per-step x0 decodes as PNG
};

// z_T^p = sqrt(ab_T) E(C^w) + sqrt(1-ab_T) eps
Tensor init_posterior_noise(const Tensor& warped_latent, const NoiseSchedule& sched, const Tensor& eps);
Tensor init_gaussian_noise(const std::vector<int>& shape, uint64_t seed);

// First-order deterministic x0-parameterized step (t > t_prev >= 0, ab_0 = 1):
//   eps_hat = (z_t - sqrt(ab_t) x0) / sqrt(1-ab_t)
//   z_prev  = sqrt(ab_prev) x0 + sqrt(1-ab_prev) eps_hat
Tensor ddim_step_x0(const Tensor& z_t, const Tensor& x0_hat, int t, int t_prev,
                    const NoiseSchedule& sched);

Tensor cfg_combine(const Tensor& pred_cond, const Tensor& pred_uncond, float scale);

// uniformly spaced time grid from T down to 0 (steps+1 entries)
std::vector<int> time_grid(int T, int steps);

// deterministic trajectory with an arbitrary denoiser x0_hat = f(z_t, t)
using DenoiseFn = std::function<Tensor(const Tensor& z_t, int t)>;
Tensor run_trajectory(Tensor z, const std::vector<int>& times, const DenoiseFn& denoise,
                      const NoiseSchedule& sched,
                      const std::function<void(int step, const Tensor& x0)>& on_x0 = nullptr);

struct SampleInputs {
    Tensor P_a;       // clothes-agnostic person
    Tensor pose_map;
    Tensor m;         // try-on region mask
    Tensor garment;   // flat clothes C
    Tensor m_cp;
};
SampleInputs sample_inputs_from(const synth::SamplePair& person_side, const synth::SamplePair& garment_side);

struct SampleResult {
    Tensor image;     // generated try-on
    Tensor warped;    // C^w from the warp network
    Tensor warped_mask;
    Tensor prewarped; // T_hat^w
};

SampleResult sample(const SampleInputs& in, const flow::FlowNetwork& warp_net,
                    const latent::Autoencoder& ae, const DiffusionModel& model,
                    const NoiseSchedule& sched, const SamplerConfig& cfg);

}  // namespace vton::sampler
