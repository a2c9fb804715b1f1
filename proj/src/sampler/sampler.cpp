#include "vton/sampler/sampler.hpp"

#include <cmath>

#include "vton/core/image.hpp"

namespace vton::sampler {

std::string init_mode_name(InitMode m) {
    return m == InitMode::Gaussian ? "gaussian" : "clothes_posterior";
}

InitMode init_mode_from_name(const std::string& s) {
    if (s == "gaussian") return InitMode::Gaussian;
    if (s == "clothes_posterior" || s == "posterior") return InitMode::ClothesPosterior;
    throw ArgError("unknown init mode: " + s);
}

Tensor init_posterior_noise(const Tensor& warped_latent, const NoiseSchedule& sched, const Tensor& eps) {
    check_same_shape(warped_latent, eps, "init_posterior_noise");
    double ab = sched.ab(sched.T);
    float sa = static_cast<float>(std::sqrt(ab));
    float sb = static_cast<float>(std::sqrt(1.0 - ab));
    Tensor out = warped_latent;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = sa * warped_latent[i] + sb * eps[i];
    return out;
}

Tensor init_gaussian_noise(const std::vector<int>& shape, uint64_t seed) {
    Rng rng(derive_seed(seed, "init-gaussian"));
    return rng.normal_tensor(shape);
}

Tensor ddim_step_x0(const Tensor& z_t, const Tensor& x0_hat, int t, int t_prev,
                    const NoiseSchedule& sched) {
    if (t <= t_prev || t_prev < 0) throw ArgError("ddim_step_x0: need t > t_prev >= 0");
    check_same_shape(z_t, x0_hat, "ddim_step_x0");
    double ab_t = sched.ab(t), ab_p = sched.ab(t_prev);
    float sa_t = static_cast<float>(std::sqrt(ab_t));
    float sb_t = static_cast<float>(std::sqrt(1.0 - ab_t));
    float sa_p = static_cast<float>(std::sqrt(ab_p));
    float sb_p = static_cast<float>(std::sqrt(1.0 - ab_p));
    Tensor out = z_t;
    for (int64_t i = 0; i < out.numel(); ++i) {
        float eps_hat = (z_t[i] - sa_t * x0_hat[i]) / sb_t;
        out[i] = sa_p * x0_hat[i] + sb_p * eps_hat;
    }
    return out;
}

Tensor cfg_combine(const Tensor& pred_cond, const Tensor& pred_uncond, float scale) {
    check_same_shape(pred_cond, pred_uncond, "cfg_combine");
    if (scale == 1.0f) return pred_cond;  // exact identity contract
    Tensor out = pred_uncond;
    for (int64_t i = 0; i < out.numel(); ++i)
        out[i] = pred_uncond[i] + scale * (pred_cond[i] - pred_uncond[i]);
    return out;
}

std::vector<int> time_grid(int T, int steps) {
    if (steps < 1) throw ArgError("time_grid: steps < 1");
    if (steps > T) throw ArgError("time_grid: steps > T");
    std::vector<int> times;
    int prev = -1;
    for (int k = 0; k <= steps; ++k) {
        int t = static_cast<int>(std::lround(static_cast<double>(T) * (steps - k) / steps));
        if (t != prev) times.push_back(t);
        prev = t;
    }
    return times;  // strictly decreasing, ends at 0
}

Tensor run_trajectory(Tensor z, const std::vector<int>& times, const DenoiseFn& denoise,
                      const NoiseSchedule& sched,
                      const std::function<void(int step, const Tensor& x0)>& on_x0) {
    for (size_t k = 0; k + 1 < times.size(); ++k) {
        int t = times[k], t_prev = times[k + 1];
        Tensor x0 = denoise(z, t);
        if (on_x0) on_x0(static_cast<int>(k), x0);
        z = ddim_step_x0(z, x0, t, t_prev, sched);
    }
    return z;
}

SampleInputs sample_inputs_from(const synth::SamplePair& person_side,
                                const synth::SamplePair& garment_side) {
    SampleInputs in;
    in.P_a = person_side.P_a;
    in.pose_map = person_side.pose_map;
    in.m = person_side.m;
    in.garment = garment_side.C;
    in.m_cp = garment_side.m_cp;
    return in;
}

SampleResult sample(const SampleInputs& in, const flow::FlowNetwork& warp_net,
                    const latent::Autoencoder& ae, const DiffusionModel& model,
                    const NoiseSchedule& sched, const SamplerConfig& cfg) {
    if (!warp_net.trained) throw DependencyError("sample: warp checkpoint not trained (run train-warp)");
    if (!ae.trained) throw DependencyError("sample: autoencoder not trained (run train-autoencoder)");
    if (!model.trained) throw DependencyError("sample: diffusion checkpoint not trained (run train-diffusion)");
    if (cfg.steps > sched.T) throw ArgError("sample: steps > T");
    if (cfg.freeu) cfg.freeu->validate();

    // warp the garment onto the person
    int H = in.P_a.dim(1), W = in.P_a.dim(2);
    Tensor person_stack({1 + in.pose_map.dim(0), H, W});
    std::copy(in.m.data(), in.m.data() + in.m.numel(), person_stack.data());
    std::copy(in.pose_map.data(), in.pose_map.data() + in.pose_map.numel(),
              person_stack.data() + in.m.numel());
    SampleResult res;
    {
        Graph g;
        flow::WarpForward wf =
            flow::warp_network_forward(warp_net, g, person_stack, in.garment, in.m_cp, false);
        res.warped = wf.warped.val();
        res.warped_mask = mask_and(wf.warped_mask, in.m);
    }
    res.prewarped = synth::prewarped_tryon(res.warped, res.warped_mask, in.P_a);

    float inv = 1.0f / ae.latent_scale;
    auto enc = [&](const Tensor& img) {
        Tensor z = latent::encode(ae, img);
        for (int64_t i = 0; i < z.numel(); ++i) z[i] *= inv;
        return z;
    };
    Tensor cond = enc(res.prewarped);
    Tensor m_r = latent::downsize_mask(in.m, ae.arch.downsample);
    Tensor warped_latent = enc(res.warped);

    Tensor tokens_c = diffusion::global_encode(model, ae, in.garment, false);
    Tensor tokens_u = diffusion::global_encode(model, ae, in.garment, true);

    Rng rng(derive_seed(cfg.seed, "sampler-eps"));
    Tensor eps = rng.normal_tensor(warped_latent.shape());
    Tensor z = cfg.init_mode == InitMode::ClothesPosterior
                   ? init_posterior_noise(warped_latent, sched, eps)
                   : eps;

    const FreeUFactors* fu = cfg.freeu ? &*cfg.freeu : nullptr;
    DenoiseFn denoise = [&](const Tensor& z_t, int t) {
        Tensor psi = diffusion::build_denoising_input(z_t, cond, m_r);
        Tensor pred_c = diffusion::unet_predict(model, psi, tokens_c, t, fu);
        if (cfg.guidance_scale == 1.0f) return pred_c;
        Tensor pred_u = diffusion::unet_predict(model, psi, tokens_u, t, fu);
        return cfg_combine(pred_c, pred_u, cfg.guidance_scale);
    };

    std::function<void(int, const Tensor&)> trace;
    if (cfg.trace_dir) {
        std::filesystem::create_directories(*cfg.trace_dir);
        trace = [&](int step, const Tensor& x0) {
            Tensor zs = x0;
            for (int64_t i = 0; i < zs.numel(); ++i) zs[i] *= ae.latent_scale;
            char name[32];
            std::snprintf(name, sizeof(name), "x0_step%03d.png", step);
            png_write(*cfg.trace_dir / name, latent::decode(ae, zs));
        };
    }

    Tensor z0 = run_trajectory(std::move(z), time_grid(sched.T, cfg.steps), denoise, sched, trace);
    for (int64_t i = 0; i < z0.numel(); ++i) z0[i] *= ae.latent_scale;
    res.image = latent::decode(ae, z0);
    return res;
}

}  // namespace vton::sampler
