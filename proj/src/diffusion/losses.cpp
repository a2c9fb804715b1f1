#include "vton/diffusion/losses.hpp"

namespace vton::diffusion {

namespace o = vton::ops;

Var diffusion_loss(Var pred_main, std::optional<Var> pred_prior, const Tensor& z0_m) {
    Graph& g = *pred_main.g;
    Var target = g.leaf(z0_m);
    Var l_main = o::mse(pred_main, target);
    if (!pred_prior) return l_main;
    Var l_prior = o::mse(*pred_prior, target);
    return o::mul_scalar(o::add(l_main, l_prior), 0.5f);
}

Var consistency_loss(Graph& g, Var pred_z0, float latent_scale, const latent::Autoencoder& ae,
                     const flow::FlowNetwork& flatten, const Tensor& m_C, const Tensor& garment,
                     const Tensor& m_cp, const std::vector<Tensor>& m_cp_levels) {
    if (!flatten.trained) throw DependencyError("consistency_loss: flatten checkpoint not trained");
    NetCtx ae_ctx{g, ae.params, false};
    Var tryon = latent::decode(ae, ae_ctx, o::mul_scalar(pred_z0, latent_scale));
    Var clothes_parsed = flow::take_off(tryon, m_C);
    flow::FlattenForward f =
        flow::flatten_network_forward(flatten, g, clothes_parsed, m_cp_levels, /*trainable=*/false);
    return o::l1_masked(f.flattened, g.leaf(garment), m_cp);
}

Var tryon_loss(Var l_diff, std::optional<Var> l_cons, float lambda_cons) {
    if (!l_cons || lambda_cons == 0.0f) return l_diff;
    return o::add(l_diff, o::mul_scalar(*l_cons, lambda_cons));
}

}  // namespace vton::diffusion
