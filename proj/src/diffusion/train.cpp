#include "vton/diffusion/train.hpp"

#include <cmath>
#include <fstream>

#include "vton/core/optim.hpp"

namespace vton::diffusion {

namespace o = vton::ops;

DiffusionItem make_diffusion_item(const synth::SamplePair& s, const latent::Autoencoder& ae) {
    if (!ae.trained) throw DependencyError("make_diffusion_item: autoencoder not trained");
    DiffusionItem it;
    float inv = 1.0f / ae.latent_scale;
    auto enc = [&](const Tensor& img) {
        Tensor z = latent::encode(ae, img);
        for (int64_t i = 0; i < z.numel(); ++i) z[i] *= inv;
        return z;
    };
    it.z0_m = enc(s.T);
    it.z0_p = enc(s.C_w_gt);
    Tensor t_hat_w = synth::prewarped_tryon(s.C_w_gt, s.m_C, s.P_a);
    it.local_cond = enc(t_hat_w);
    it.m_r = latent::downsize_mask(s.m, ae.arch.downsample);
    it.backbone_tokens = token_backbone(ae, s.C);
    it.m_C = s.m_C;
    it.garment = s.C;
    it.m_cp = s.m_cp;
    it.m_cp_levels = flow::downsize_mask_levels(s.m_cp);
    return it;
}

void DiffusionTrainResult::save_csv(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("train_diffusion: cannot write " + path.string());
    f << "step,l_diff,l_cons,l_total\n";
    for (size_t i = 0; i < step.size(); ++i)
        f << step[i] << ',' << l_diff[i] << ',' << l_cons[i] << ',' << l_total[i] << '\n';
}

DiffusionTrainResult train_diffusion(DiffusionModel& model, const std::vector<synth::SamplePair>& samples,
                                     const latent::Autoencoder& ae, const flow::FlowNetwork& flatten,
                                     const NoiseSchedule& sched, const DiffusionTrainConfig& cfg) {
    if (samples.empty()) throw ArgError("train_diffusion: empty dataset");
    if (!flatten.trained && cfg.cons_loss)
        throw DependencyError("train_diffusion: flatten checkpoint required for the consistency loss "
                              "(run train-flatten)");
    std::vector<DiffusionItem> items;
    items.reserve(samples.size());
    for (const auto& s : samples) items.push_back(make_diffusion_item(s, ae));

    Adam adam;
    DiffusionTrainResult res;
    int n = static_cast<int>(items.size());
    std::vector<double> diff_part(static_cast<size_t>(cfg.batch));
    std::vector<double> cons_part(static_cast<size_t>(cfg.batch));

    for (int step = 0; step < cfg.steps; ++step) {
        uint64_t step_seed = derive_seed(cfg.seed, "diff-step", static_cast<uint64_t>(step));
        Rng pick(step_seed);
        std::vector<int> idx(static_cast<size_t>(cfg.batch));
        for (int i = 0; i < cfg.batch; ++i) idx[static_cast<size_t>(i)] = pick.uniform_int(0, n - 1);

        auto one = [&](int i) -> std::pair<double, GradMap> {
            const DiffusionItem& it = items[static_cast<size_t>(idx[static_cast<size_t>(i)])];
            Rng rng(derive_seed(step_seed, "sample", static_cast<uint64_t>(i)));
            int t = rng.uniform_int(1, sched.T);
            Tensor eps = rng.normal_tensor(it.z0_m.shape());
            bool drop = !cfg.global_cond || rng.uniform() < cfg.cfg_dropout;

            Graph g;
            Var tokens = drop ? null_tokens(model, g, true)
                              : project_tokens(model, g, it.backbone_tokens, true);
            Tensor psi_m = build_denoising_input(forward_diffuse(it.z0_m, t, eps, sched), it.local_cond,
                                                 it.m_r);
            Var pred_m = unet_forward(model, g, g.leaf(psi_m), tokens, t, true);
            std::optional<Var> pred_p;
            if (cfg.prior_branch) {
                Tensor psi_p = build_denoising_input(forward_diffuse(it.z0_p, t, eps, sched),
                                                     it.local_cond, it.m_r);
                pred_p = unet_forward(model, g, g.leaf(psi_p), tokens, t, true);
            }
            Var l_diff = diffusion_loss(pred_m, pred_p, it.z0_m);
            std::optional<Var> l_cons;
            if (cfg.cons_loss && cfg.lambda_cons != 0.0f)
                l_cons = consistency_loss(g, pred_m, ae.latent_scale, ae, flatten, it.m_C, it.garment,
                                          it.m_cp, it.m_cp_levels);
            Var total = tryon_loss(l_diff, l_cons, cfg.lambda_cons);
            g.backward(total);
            diff_part[static_cast<size_t>(i)] = l_diff.val()[0];
            cons_part[static_cast<size_t>(i)] = l_cons ? l_cons->val()[0] : 0.0;
            return {total.val()[0], g.param_grads()};
        };
        auto [loss, grads] = run_batch(cfg.batch, cfg.threads, one);
        if (!std::isfinite(loss))
            throw NumericalError("train_diffusion: NaN loss at step " + std::to_string(step));
        float lr = lr_schedule(step, cfg.lr, cfg.lr_init, cfg.warmup_steps, -1, cfg.steps);
        adam.step(model.params, grads, lr);

        double d = 0, c = 0;
        for (int i = 0; i < cfg.batch; ++i) {
            d += diff_part[static_cast<size_t>(i)];
            c += cons_part[static_cast<size_t>(i)];
        }
        res.step.push_back(step);
        res.l_diff.push_back(d / cfg.batch);
        res.l_cons.push_back(c / cfg.batch);
        res.l_total.push_back(loss);
    }
    model.trained = true;
    return res;
}

}  // namespace vton::diffusion
