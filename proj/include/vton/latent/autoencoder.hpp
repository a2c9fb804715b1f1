#pragma once

#include <filesystem>

#include "vton/core/nn.hpp"

namespace vton::latent {

using nlohmann::json;

struct AutoencoderArch {
    int in_channels = 3;
    int downsample = 4;  // d, power of two
    int latent_channels = 4;
    std::vector<int> widths = {16, 24, 32, 48};  // stem + one per halving

    int n_down() const;
    json to_json() const;
    static AutoencoderArch from_json(const json& j);
};

struct Autoencoder {
    AutoencoderArch arch;
    ParamStore params;
    bool trained = false;
    float latent_scale = 1.0f;  // std of training latents, applied by diffusion
    uint64_t seed = 0;

    static Autoencoder create(const AutoencoderArch& arch, uint64_t seed);
    void save(const std::filesystem::path& dir, const json& extra_meta = json::object()) const;
    static Autoencoder load(const std::filesystem::path& dir);
};

// graph-level forwards; `trainable` selects param vs frozen leaves
std::pair<Var, Var> encode_stats(const Autoencoder& ae, const NetCtx& ctx, Var img);  // (mean, logvar)
Var encode_mean(const Autoencoder& ae, const NetCtx& ctx, Var img);
Var decode(const Autoencoder& ae, const NetCtx& ctx, Var z);

// plain forwards (deterministic mode: posterior mean)
Tensor encode(const Autoencoder& ae, const Tensor& img);
Tensor decode(const Autoencoder& ae, const Tensor& z);

// three frozen feature taps at strides (2,4,8); requires trained params
std::vector<Var> perceptual_features(const Autoencoder& ae, Graph& g, Var img);
std::vector<Tensor> perceptual_features(const Autoencoder& ae, const Tensor& img);

// area-average over d x d blocks, >= 0.5 -> 1
Tensor downsize_mask(const Tensor& m, int d);

struct AeTrainConfig {
    int steps = 3000;
    int batch = 16;
    float lr = 1e-3f;
    float kl_weight = 1e-6f;
    bool sample_posterior = true;  // draw z = mu + sigma*eps during training
    uint64_t seed = 0;
    int threads = 2;
};

struct TrainCurve {
    std::vector<double> steps;
    std::vector<double> loss;
    void save_csv(const std::filesystem::path& path, const std::string& header) const;
};

// L1 reconstruction + kl_weight * KL(N(mu,sigma) || N(0,1)); returns the curve.
TrainCurve train_autoencoder(Autoencoder& ae, const std::vector<const Tensor*>& images,
                             const AeTrainConfig& cfg);

}  // namespace vton::latent
