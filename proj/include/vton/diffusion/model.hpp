#pragma once

#include <filesystem>
#include <optional>

#include "vton/core/nn.hpp"
#include "vton/latent/autoencoder.hpp"

namespace vton::diffusion {

using nlohmann::json;

struct FreeUFactors {
    float b1 = 1.1f, b2 = 1.2f;
    float s1 = 0.9f, s2 = 0.6f;
    void validate() const {
        if (b1 <= 0 || b2 <= 0 || s1 <= 0 || s2 <= 0) throw ArgError("FreeU: non-positive factors");
    }
};

// x0-predicting UNet with a global cross-attention condition, plus the
// trainable token projection and learned null-token sequence.
struct DiffusionArch {
    int latent_channels = 4;  // c; UNet input = 2c+1, output = c
    int base = 32;            // stage widths {base, 3*base/2, 2*base}
    int time_dim = 64;
    int attn_dim = 32;
    int token_dim = 32;
    int token_feat = 32;  // backbone feature channels entering the projection
    int n_tokens = 48;
    int groups = 8;

    int in_channels() const { return 2 * latent_channels + 1; }
    std::vector<int> stage_widths() const { return {base, base * 3 / 2, base * 2}; }
    json to_json() const;
    static DiffusionArch from_json(const json& j);
};

struct DiffusionModel {
    DiffusionArch arch;
    ParamStore params;  // unet/* and proj/* (token projection + null tokens)
    uint64_t seed = 0;
    bool trained = false;

    static DiffusionModel create(const DiffusionArch& arch, uint64_t seed);
    void save(const std::filesystem::path& dir, const json& extra_meta = json::object()) const;
    static DiffusionModel load(const std::filesystem::path& dir);
};

// ---- global condition ----

// frozen tokenizer backbone: deepest perceptual tap of the autoencoder,
// one token per spatial cell
Tensor token_backbone(const latent::Autoencoder& ae, const Tensor& garment);  // {L, token_feat}

// trainable projection of backbone tokens; drop selects the learned null sequence
Var project_tokens(const DiffusionModel& m, Graph& g, const Tensor& backbone_tokens, bool trainable);
Var null_tokens(const DiffusionModel& m, Graph& g, bool trainable);
Tensor global_encode(const DiffusionModel& m, const latent::Autoencoder& ae, const Tensor& garment,
                     bool drop);

// ---- denoising input (channel order [z_t ; local_cond ; m_r]) ----
Tensor build_denoising_input(const Tensor& z_t, const Tensor& local_cond, const Tensor& m_r);

// ---- UNet forward ----
// t is the raw time-step index; tokens {n_tokens, token_dim}
Var unet_forward(const DiffusionModel& m, Graph& g, Var psi, Var tokens, int t, bool trainable,
                 const FreeUFactors* freeu = nullptr);
Tensor unet_predict(const DiffusionModel& m, const Tensor& psi, const Tensor& tokens, int t,
                    const FreeUFactors* freeu = nullptr);

// FreeU reweighting of one (backbone, skip) pair; stages are 1-based and
// stages > 2 pass through untouched.
std::pair<Var, Var> freeu_reweight(Var backbone, Var skip, int stage, const FreeUFactors* freeu);

}  // namespace vton::diffusion
