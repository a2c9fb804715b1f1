#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "vton/flow/networks.hpp"
#include "vton/latent/autoencoder.hpp"

namespace vton::metrics {

// Structural similarity: 11x11 Gaussian window (sigma 1.5), C1=(0.01)^2,
// C2=(0.03)^2 at L=1, valid windows only, channel-averaged.
double ssim(const Tensor& x, const Tensor& y);

double masked_l1(const Tensor& x, const Tensor& y, const Tensor& mask);

// Frechet distance between Gaussians fitted to two feature sets (rows =
// samples). Covariances regularized with eps*I; matrix square root via
// eigendecomposition of the symmetrized product.
double frechet_proxy(const std::vector<std::vector<float>>& a, const std::vector<std::vector<float>>& b,
                     double eps = 1e-6);

// pooled per-image feature vector for the Frechet proxy (channel means of the
// three perceptual taps)
std::vector<float> pooled_features(const latent::Autoencoder& ae, const Tensor& img);

// Eq.-5-style metric: masked L1 between the flattened clothes of a try-on
// image and the original flat clothes.
double flat_consistency(const Tensor& tryon, const Tensor& m_C, const flow::FlowNetwork& flatten,
                        const Tensor& garment, const Tensor& m_cp);

}  // namespace vton::metrics
