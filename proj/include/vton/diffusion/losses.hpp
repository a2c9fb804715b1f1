#pragma once

#include <optional>

#include "vton/diffusion/model.hpp"
#include "vton/flow/networks.hpp"

namespace vton::diffusion {

// Per-sample, per-time-step diffusion loss: mean-squared form, both branches
// targeting the main starting latent. With no prior branch it reduces to the
// conventional single-term loss.
Var diffusion_loss(Var pred_main, std::optional<Var> pred_prior, const Tensor& z0_m);

// Clothes-consistent loss: flatten the decoded prediction and compare with the
// flat garment over its position mask. The autoencoder decoder and flatten
// network stay frozen; gradients flow through them into pred_z0.
Var consistency_loss(Graph& g, Var pred_z0, float latent_scale, const latent::Autoencoder& ae,
                     const flow::FlowNetwork& flatten, const Tensor& m_C, const Tensor& garment,
                     const Tensor& m_cp, const std::vector<Tensor>& m_cp_levels);

// Overall try-on loss.
Var tryon_loss(Var l_diff, std::optional<Var> l_cons, float lambda_cons);

}  // namespace vton::diffusion
